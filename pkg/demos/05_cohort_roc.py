# Score a planted benign/malignant cohort with the three published weight
# profiles and compare their ROC curves.

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sonoseg import built_in_profile, generate_cohort, roc_analysis, score

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

members = generate_cohort(50, 50, seed=2024)
print(f"cohort: {sum(not m.truth for m in members)} benign, "
      f"{sum(m.truth for m in members)} malignant")

fig, ax = plt.subplots(figsize=(6, 6))
for name in ("spectral", "morphometric", "combined"):
    profile = built_in_profile(name)
    scored = [(score(m.features, profile), m.truth) for m in members]
    result = roc_analysis(scored)
    print(f"{name:>13}: AUC {100 * result.auc:6.2f}%  "
          f"sens {result.sensitivity:5.1f}%  spec {result.specificity:5.1f}%  "
          f"(Youden threshold {result.youden_threshold:+.3f})")
    fpr = [p[0] for p in result.roc_points]
    tpr = [p[1] for p in result.roc_points]
    ax.plot(fpr, tpr, label=f"{name} (AUC {100 * result.auc:.1f}%)")

ax.plot([0, 1], [0, 1], "k:", linewidth=0.8)
ax.set_xlabel("false positive rate")
ax.set_ylabel("true positive rate")
ax.set_title("ROC of spectral, morphometric and combined profiles")
ax.legend(loc="lower right")
fig.tight_layout()
fig.savefig(out_dir / "05_roc_curves.png", dpi=110)
print(f"wrote {out_dir / '05_roc_curves.png'}")
