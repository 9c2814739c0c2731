# Record a phantom review session against the real service and freeze the
# responses as frontend test fixtures (frontend/fixtures/session.json).

import base64
import json
from pathlib import Path

from fastapi.testclient import TestClient

from sonoseg.frame_io import save_rf_frame
from sonoseg.phantom import PhantomSpec, generate, make_calibration
from sonoseg.pipeline import PipelineConfig
from sonoseg.service import create_app
from sonoseg.spectral import SpectralConfig


def main():
    spectral = SpectralConfig(attenuation_db_per_mhz_cm=0.0)
    spec = PhantomSpec(
        num_samples=512,
        num_lines=64,
        lesion_center_axial_mm=4.9,
        lesion_center_lateral_mm=6.4,
        lesion_semi_axis_axial_mm=1.7,
        lesion_semi_axis_lateral_mm=2.7,
        lesion_echogenicity_db=-9.0,
        speckle_seed=31,
        frame_id="fixture_frame",
    )
    frame, _, _ = generate(spec)
    calibration = make_calibration(spec, spectral, num_lines=128)
    app = create_app(calibration=calibration, config=PipelineConfig(spectral=spectral))
    client = TestClient(app)

    tmp = Path("/tmp/fixture_frame.zip")
    save_rf_frame(frame, tmp)
    payload = tmp.read_bytes()

    upload = client.post("/frames", content=payload).json()
    frame_id = upload["frame_id"]

    segment_auto = client.post(f"/frames/{frame_id}/segment", json={"threshold": None}).json()
    otsu = segment_auto["threshold_used"]
    segment_at_otsu = client.post(f"/frames/{frame_id}/segment", json={"threshold": otsu}).json()
    # a second, deliberately different threshold for the stale-response test
    segment_alt = client.post(f"/frames/{frame_id}/segment", json={"threshold": otsu + 15.0}).json()

    label = segment_auto["rois"][0]["label"]
    features = client.post(
        f"/frames/{frame_id}/rois/{label}/features", json={"profile": "combined"}
    ).json()
    profiles = client.get("/profiles").json()
    bmode_png = client.get(f"/frames/{frame_id}/bmode.png").content

    session = {
        "frame_id": frame_id,
        "upload": upload,
        "segment_auto": segment_auto,
        "segment_at_otsu": segment_at_otsu,
        "segment_alt": segment_alt,
        "selected_label": label,
        "features": features,
        "profiles": profiles,
        "bmode_png_base64": base64.b64encode(bmode_png).decode("ascii"),
    }
    out = Path(__file__).resolve().parent.parent / "frontend" / "fixtures" / "session.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(session, indent=1, sort_keys=True) + "\n")
    print(f"wrote {out} ({out.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
