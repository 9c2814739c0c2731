# Walk one synthetic phantom through the whole segmentation pipeline:
# RF -> envelope -> B-mode -> histogram equalization -> diffusion ->
# per-line EMD residue -> Otsu threshold -> lesion ROI.
#
# Figures land in demos/output/.

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sonoseg import (
    DiffusionParams,
    PhantomSpec,
    SegmentationParams,
    detect_envelope,
    diffuse,
    equalize_histogram,
    form_bmode,
    generate,
    otsu_threshold,
    residue_image,
    extract_rois,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

spec = PhantomSpec(
    lesion_semi_axis_lateral_mm=6.0,
    lesion_semi_axis_axial_mm=4.0,
    lesion_echogenicity_db=-9.0,
    border_blur_mm=0.2,
    speckle_seed=42,
)
frame, truth_mask, targets = generate(spec)
print(f"frame: {frame.num_samples} samples x {frame.num_lines} lines at "
      f"{frame.sampling_rate/1e6:.0f} MHz")

bmode = form_bmode(detect_envelope(frame))
equalized = equalize_histogram(bmode.pixels.astype(float))
diffused = diffuse(equalized, DiffusionParams(iterations=15, step=0.2))
residue = residue_image(diffused)

threshold = otsu_threshold(residue)
bright = residue > threshold
lesion_mask = ~bright if residue[bright].mean() > residue[~bright].mean() else bright
rois = extract_rois(
    lesion_mask, SegmentationParams(), (spec.axial_spacing, spec.lateral_spacing)
)
roi = rois[0]
print(f"Otsu threshold {threshold:.2f}; {len(rois)} ROI(s); "
      f"largest {roi.width:.1f} x {roi.depth:.1f} mm, area {roi.area:.1f} mm^2")

truth_width = (np.ptp(np.nonzero(truth_mask)[1]) + 1) * spec.lateral_spacing
print(f"truth width {truth_width:.1f} mm -> error "
      f"{100 * abs(roi.width - truth_width) / truth_width:.1f}%")

extent = [0, frame.num_lines * spec.lateral_spacing, frame.num_samples * spec.axial_spacing, 0]
stages = [
    ("B-mode", bmode.pixels),
    ("equalized", equalized),
    ("diffused", diffused),
    ("EMD residue", residue),
]
fig, axes = plt.subplots(1, 5, figsize=(18, 5), sharey=True)
for ax, (title, img) in zip(axes, stages):
    ax.imshow(img, cmap="gray", extent=extent, aspect="auto")
    ax.set_title(title)
    ax.set_xlabel("lateral (mm)")
axes[0].set_ylabel("depth (mm)")
axes[4].imshow(bmode.pixels, cmap="gray", extent=extent, aspect="auto")
contour_mm = roi.contour * np.array([spec.axial_spacing, spec.lateral_spacing])
axes[4].plot(contour_mm[:, 1], contour_mm[:, 0], "r-", linewidth=1)
axes[4].set_title("segmented ROI")
fig.tight_layout()
fig.savefig(out_dir / "01_pipeline_stages.png", dpi=110)
print(f"wrote {out_dir / '01_pipeline_stages.png'}")
