"""Batch command-line front door.

Subcommands:
    run      process RF containers: segment, characterize, score, report
    phantom  emit synthetic RF containers with ground truth
    serve    start the HTTP review service
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import phantom as phantom_mod
from .classify import WeightProfile, built_in_profile, roc_analysis
from .emd import decompose
from .frame_io import (
    FrameFormatError,
    load_calibration,
    load_rf_frame,
    save_calibration,
    save_rf_frame,
)
from .pipeline import PipelineConfig, process_frame
from .preprocess import diffuse, equalize_histogram
from .segmentation import SegmentationParams
from .spectral import SpectralConfig


def _parse_roi_selector(text: str):
    if text == "largest":
        return "largest"
    if text.startswith("index:"):
        return int(text.split(":", 1)[1])
    if text.startswith("point:"):
        x, y = text.split(":", 1)[1].split(",")
        return (float(x), float(y))
    raise argparse.ArgumentTypeError(f"bad --roi value: {text!r}")


def _parse_band(text: str) -> tuple[float, float]:
    lo, hi = text.split(":")
    return float(lo) * 1e6, float(hi) * 1e6


def _load_profile(text: str) -> WeightProfile:
    if text.startswith("file:"):
        with open(text.split(":", 1)[1]) as fh:
            return WeightProfile.from_dict(json.load(fh))
    return built_in_profile(text)


def _collect_containers(input_arg: str) -> list[Path]:
    if input_arg == "-":
        paths = [Path(line.strip()) for line in sys.stdin if line.strip()]
        return [p for p in paths if p.exists()]
    path = Path(input_arg)
    if path.is_file() and path.suffix == ".zip":
        return [path]
    if (path / "header.json").is_file():
        return [path]
    containers = sorted(p for p in path.iterdir() if p.is_dir() and (p / "header.json").is_file())
    containers += sorted(p for p in path.glob("*.zip"))
    return containers


def _write_json(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _save_mask_png(mask: np.ndarray, path: Path) -> None:
    from PIL import Image

    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(path)


def _dump_imfs(frame, config, out_dir: Path) -> None:
    from .frame_io import detect_envelope, form_bmode

    bmode = form_bmode(detect_envelope(frame), config.dynamic_range_db)
    grid = diffuse(equalize_histogram(bmode.pixels.astype(float)), config.diffusion)
    frame_dir = out_dir / frame.frame_id
    frame_dir.mkdir(parents=True, exist_ok=True)
    for j in range(grid.shape[1]):
        dec = decompose(grid[:, j], config.emd)
        columns = dec.imfs + [dec.residue]
        header = [f"imf{q + 1}" for q in range(len(dec.imfs))] + ["residue"]
        with open(frame_dir / f"line_{j:04d}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(np.column_stack(columns).tolist())


def _analyze_one(job):
    """Process one container and write its image artifacts; returns the entry."""
    container, calibration, config, profile, out_dir, emit_params, dump_imfs = job
    try:
        frame = load_rf_frame(container)
    except (FrameFormatError, ValueError) as exc:
        return {"frame_id": str(container), "error": str(exc)}
    try:
        artifacts = process_frame(frame, calibration, config, profile)
    except ValueError as exc:
        return {"frame_id": frame.frame_id, "error": str(exc)}
    for roi in artifacts.rois:
        _save_mask_png(roi.mask, out_dir / f"{frame.frame_id}_roi{roi.label}.png")
    if emit_params and artifacts.param is not None:
        frame_dir = out_dir / frame.frame_id
        frame_dir.mkdir(parents=True, exist_ok=True)
        np.savetxt(frame_dir / "slope.csv", artifacts.param.slope, delimiter=",")
        np.savetxt(frame_dir / "intercept.csv", artifacts.param.intercept, delimiter=",")
        np.savetxt(frame_dir / "midband.csv", artifacts.param.midband, delimiter=",")
    if dump_imfs:
        _dump_imfs(frame, config, Path(dump_imfs))
    return artifacts.entry


def _cmd_run(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    # resolve inputs first: with --input - this blocks on stdin, so a piped
    # upstream (e.g. `sonoseg phantom | sonoseg run`) finishes writing its
    # calibration file before we open it
    containers = _collect_containers(args.input) if args.input else []
    calibration = load_calibration(args.calibration)
    profile = _load_profile(args.profile) if args.profile else None

    spectral = SpectralConfig(attenuation_db_per_mhz_cm=calibration.attenuation_db_per_mhz_cm)
    if args.band:
        lo, hi = args.band
        spectral = replace(spectral, band_hz=(lo, hi), center_frequency_hz=None)
    config = PipelineConfig(
        segmentation=SegmentationParams(threshold_override=args.threshold),
        spectral=spectral,
        roi_selector=args.roi,
    )

    jobs = [
        (c, calibration, config, profile, out_dir, args.emit_param_images, args.dump_imfs)
        for c in containers
    ]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            entries = list(pool.map(_analyze_one, jobs))
    else:
        entries = [_analyze_one(job) for job in jobs]

    report = {"frames": entries, "profile": profile.name if profile else None}
    if not args.deterministic:
        report["generated_at"] = datetime.now(timezone.utc).isoformat()

    if args.roc:
        if args.labels:
            labels_path = Path(args.labels)
        elif args.input == "-" and containers:
            labels_path = containers[0].parent / "labels.csv"
        else:
            labels_path = Path(args.input) / "labels.csv"
        labels = {}
        if labels_path.is_file():
            with open(labels_path) as fh:
                for row in csv.reader(fh):
                    if len(row) >= 2 and row[0] != "frame_id":
                        labels[row[0]] = row[1].strip().lower() == "malignant"
        scored = [
            (e["score"], labels[e["frame_id"]])
            for e in entries
            if e.get("score") is not None and e["frame_id"] in labels
        ]
        if scored:
            try:
                cohort = roc_analysis(scored)
                report["cohort"] = cohort.to_dict()
                with open(out_dir / "roc.csv", "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["threshold", "fpr", "tpr"])
                    for th, (fpr, tpr) in zip(cohort.thresholds, cohort.roc_points):
                        writer.writerow([th, fpr, tpr])
            except ValueError as exc:
                report["cohort"] = {"error": str(exc)}
        else:
            report["cohort"] = {"error": "no scored frames with labels"}

    _write_json(report, out_dir / "report.json")

    with open(out_dir / "features.csv", "w", newline="") as fh:
        from .features import FeatureVector

        writer = csv.writer(fh)
        writer.writerow(["frame_id", "score", "decision", *FeatureVector.SCALAR_FIELDS])
        for entry in entries:
            feats = entry.get("features") or {}
            writer.writerow(
                [
                    entry.get("frame_id"),
                    entry.get("score"),
                    entry.get("decision"),
                    *[feats.get(name) for name in FeatureVector.SCALAR_FIELDS],
                ]
            )

    if args.serve:
        _start_service(args.serve, calibration, config, profile)
        return 0

    succeeded = sum(1 for e in entries if "error" not in e)
    return 0 if (succeeded or not entries) else 1


def _cmd_phantom(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spectral = SpectralConfig(attenuation_db_per_mhz_cm=0.0)
    cal = phantom_mod.make_calibration(config=spectral, seed=args.seed + 7919)
    save_calibration(cal, out_dir / "cal.json")

    emitted = []
    if args.cohort:
        n_b, n_m = (int(v) for v in args.cohort.split(":"))
        members = phantom_mod.generate_cohort(n_b, n_m, seed=args.seed, with_frames=True)
        with open(out_dir / "labels.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame_id", "label"])
            for member in members:
                writer.writerow([member.phantom.frame_id, member.label])
        for member in members:
            path = save_rf_frame(member.frame, out_dir / member.phantom.frame_id)
            _save_mask_png(member.mask, out_dir / f"{member.phantom.frame_id}_truth.png")
            emitted.append((path, member.phantom, member.features))
    else:
        for k in range(args.count):
            spec = replace(
                phantom_mod.PhantomSpec(),
                speckle_seed=args.seed + k,
                frame_id=f"phantom_{args.seed + k:05d}",
            )
            frame, mask, targets = phantom_mod.generate(spec)
            path = save_rf_frame(frame, out_dir / spec.frame_id)
            _save_mask_png(mask, out_dir / f"{spec.frame_id}_truth.png")
            emitted.append((path, spec, targets))

    truth = {}
    for path, spec, targets in emitted:
        truth[spec.frame_id] = {
            "container": str(path),
            "mask_png": str(out_dir / f"{spec.frame_id}_truth.png"),
            "planted": {
                k: v
                for k, v in targets.to_dict().items()
                if isinstance(v, (int, float)) and v is not None
            },
            "lesion_width_mm": 2.0 * spec.lesion_half_extents_mm()[0],
            "lesion_depth_mm": 2.0 * spec.lesion_half_extents_mm()[1],
        }
        print(path)
    _write_json(truth, out_dir / "truth.json")
    return 0


def _start_service(port: int, calibration=None, config=None, profile=None) -> None:
    import uvicorn

    from .service import create_app

    app = create_app(calibration=calibration, config=config)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


def _cmd_serve(args) -> int:
    calibration = load_calibration(args.calibration) if args.calibration else None
    _start_service(args.port, calibration)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sonoseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="process RF containers and write a report")
    run.add_argument("--input", required=True, help="container, directory of containers, or '-' for stdin paths")
    run.add_argument("--calibration", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--profile", default="combined", help="spectral|morphometric|combined|file:<path>")
    run.add_argument("--threshold", type=float, default=None, help="override the Otsu threshold")
    run.add_argument("--roi", type=_parse_roi_selector, default="largest", help="largest|index:<k>|point:<x>,<y>")
    run.add_argument("--band", type=_parse_band, default=None, help="analysis band in MHz, e.g. 8:12")
    run.add_argument("--dump-imfs", default=None, metavar="DIR")
    run.add_argument("--emit-param-images", action="store_true")
    run.add_argument("--roc", action="store_true")
    run.add_argument("--labels", default=None, help="labels.csv with frame_id,label rows")
    run.add_argument("--deterministic", action="store_true", help="omit timestamps from the report")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--serve", type=int, default=None, metavar="PORT")
    run.set_defaults(func=_cmd_run)

    ph = sub.add_parser("phantom", help="emit synthetic RF containers with ground truth")
    ph.add_argument("--out", required=True)
    ph.add_argument("--cohort", default=None, help="B:M labeled cohort sizes")
    ph.add_argument("--count", type=int, default=1)
    ph.add_argument("--seed", type=int, default=0)
    ph.set_defaults(func=_cmd_phantom)

    serve = sub.add_parser("serve", help="start the HTTP review service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--calibration", default=None)
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
