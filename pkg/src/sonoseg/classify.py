"""Weighted malignancy scoring and ROC evaluation.

A weight profile combines z-scored features:

    score = sum_i  w_i * orient_i * (x_i - mean_i) / sd_i

with orientation +1 when larger values indicate malignancy and -1
otherwise.  The built-in profiles use the published feature weights with
reference normalization statistics derived from the published benign and
malignant cohort tables (midpoint mean, pooled standard deviation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WEIGHT_SUM_TOLERANCE = 1e-9

# Published per-class feature statistics: (benign mean, benign sd,
# malignant mean, malignant sd).  Keys follow FeatureVector field names;
# compactness/roundness rows are the raw-convention ratios.
COHORT_TABLE_STATS = {
    "echogenicity": (3.1884, 8.2389, -2.8200, 9.6313),
    "heterogeneity": (7.3728, 2.3343, 8.9937, 2.8422),
    "fnpa_midband": (0.1551, 0.1910, 0.2040, 0.1803),
    "fnpa": (0.4879, 0.0853, 0.4621, 0.0814),
    "cooccurrence_contrast": (12.5541, 5.0514, 9.8357, 3.1157),
    "hurst_midband": (0.5347, 0.0945, 0.5160, 0.0624),
    "hurst": (1.0269, 0.4311, 0.8768, 0.1789),
    "margin_definition": (0.1546, 0.0672, 0.1470, 0.0692),
    "aspect_ratio": (0.6945, 0.2225, 0.9883, 0.3997),
    "compactness_raw": (0.7110, 0.0933, 0.7285, 0.0701),
    "roundness_raw": (0.5141, 0.1336, 0.5353, 0.0997),
    "convexity": (0.8303, 0.0325, 0.8180, 0.0346),
    "solidity": (0.9160, 0.0436, 0.9026, 0.0536),
}

# Orientation: +1 when the malignant-class mean exceeds the benign mean.
_ORIENTATIONS = {
    "echogenicity": -1,
    "heterogeneity": +1,
    "margin_definition": -1,
    "aspect_ratio": +1,
    "convexity": -1,
}

_PROFILE_WEIGHTS = {
    "spectral": {"echogenicity": 0.5, "heterogeneity": 0.25, "margin_definition": 0.25},
    "morphometric": {"aspect_ratio": 0.5, "convexity": 0.5},
    "combined": {
        "echogenicity": 0.14,
        "heterogeneity": 0.14,
        "margin_definition": 0.07,
        "aspect_ratio": 0.36,
        "convexity": 0.29,
    },
}


def reference_normalization(feature: str) -> tuple[float, float]:
    """Midpoint mean and pooled SD of the published class statistics."""
    mb, sb, mm, sm = COHORT_TABLE_STATS[feature]
    return (mb + mm) / 2.0, math.sqrt((sb**2 + sm**2) / 2.0)


@dataclass
class WeightProfile:
    name: str
    weights: dict[str, float]
    orientations: dict[str, int]
    normalization: dict[str, tuple[float, float]]
    decision_threshold: float = 0.0

    def __post_init__(self):
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("weights must be non-negative")
        total = sum(self.weights.values())
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(f"weights must sum to 1 (got {total!r})")
        for feature in self.weights:
            if self.orientations.get(feature) not in (-1, 1):
                raise ValueError(f"feature '{feature}' lacks an orientation of +/-1")
            if feature not in self.normalization:
                raise ValueError(f"feature '{feature}' lacks normalization statistics")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "weights": dict(sorted(self.weights.items())),
            "orientations": dict(sorted(self.orientations.items())),
            "normalization": {
                k: [float(v[0]), float(v[1])] for k, v in sorted(self.normalization.items())
            },
            "decision_threshold": self.decision_threshold,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "WeightProfile":
        return cls(
            name=obj.get("name", "custom"),
            weights={k: float(v) for k, v in obj["weights"].items()},
            orientations={k: int(v) for k, v in obj["orientations"].items()},
            normalization={k: (float(v[0]), float(v[1])) for k, v in obj["normalization"].items()},
            decision_threshold=float(obj.get("decision_threshold", 0.0)),
        )


def built_in_profile(name: str) -> WeightProfile:
    """The published spectral, morphometric, or combined weight profile."""
    if name not in _PROFILE_WEIGHTS:
        raise ValueError(f"unknown profile '{name}' (have {sorted(_PROFILE_WEIGHTS)})")
    weights = _PROFILE_WEIGHTS[name]
    return WeightProfile(
        name=name,
        weights=dict(weights),
        orientations={k: _ORIENTATIONS[k] for k in weights},
        normalization={k: reference_normalization(k) for k in weights},
    )


def score(features, profile: WeightProfile) -> float:
    """Weighted sum of oriented z-scores; all weighted features must be present."""
    total = 0.0
    for name, weight in profile.weights.items():
        value = features.get(name) if hasattr(features, "get") else getattr(features, name)
        if value is None:
            raise ValueError(f"missing weighted feature: {name}")
        mean, sd = profile.normalization[name]
        if sd == 0:
            raise ValueError(f"zero reference SD for feature: {name}")
        total += weight * profile.orientations[name] * (float(value) - mean) / sd
    return total


def decide(value: float, profile: WeightProfile) -> str:
    return "malignant" if value >= profile.decision_threshold else "benign"


@dataclass
class CohortResult:
    """Cohort-level ROC statistics (sensitivity/specificity in percent)."""

    sensitivity: float
    specificity: float
    auc: float  # fraction in [0, 1]
    roc_points: list = field(default_factory=list)  # (fpr, tpr), (0,0) -> (1,1)
    thresholds: list = field(default_factory=list)  # aligned with roc_points
    youden_threshold: float = 0.0
    n_positive: int = 0
    n_negative: int = 0

    def to_dict(self) -> dict:
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "auc": 100.0 * self.auc,
            "youden_threshold": self.youden_threshold,
            "n_positive": self.n_positive,
            "n_negative": self.n_negative,
        }


def roc_analysis(scored: list[tuple[float, bool]]) -> CohortResult:
    """Threshold sweep over all distinct scores (predict malignant at >= t).

    AUC is the trapezoid integral of the (FPR, TPR) curve.  The reported
    operating point maximizes Youden's J, ties resolved toward higher
    specificity and then toward the higher threshold.
    """
    values = np.array([s for s, _ in scored], dtype=np.float64)
    truth = np.array([bool(t) for _, t in scored])
    n_pos = int(truth.sum())
    n_neg = int((~truth).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present for ROC analysis")

    order = np.argsort(-values, kind="stable")
    sorted_vals = values[order]
    sorted_truth = truth[order]
    distinct = np.nonzero(np.diff(sorted_vals))[0]
    block_ends = np.concatenate([distinct, [len(sorted_vals) - 1]])

    tp = np.cumsum(sorted_truth)[block_ends]
    fp = np.cumsum(~sorted_truth)[block_ends]
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    thresholds = np.concatenate([[np.inf], sorted_vals[block_ends]])

    auc = float(np.trapezoid(tpr, fpr))

    j = tpr - fpr
    best = max(range(len(j)), key=lambda i: (j[i], -fpr[i], thresholds[i]))
    return CohortResult(
        sensitivity=100.0 * tpr[best],
        specificity=100.0 * (1.0 - fpr[best]),
        auc=auc,
        roc_points=[(float(f), float(t)) for f, t in zip(fpr, tpr)],
        thresholds=[float(t) for t in thresholds],
        youden_threshold=float(thresholds[best]),
        n_positive=n_pos,
        n_negative=n_neg,
    )
