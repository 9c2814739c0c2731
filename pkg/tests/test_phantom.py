import numpy as np
import pytest
from dataclasses import replace

from sonoseg.frame_io import detect_envelope
from sonoseg.phantom import (
    COHORT_TABLE_STATS,
    PhantomSpec,
    generate,
    generate_cohort,
    make_calibration,
)
from sonoseg.spectral import SpectralConfig, parameter_images


def small_spec(**overrides):
    base = dict(
        num_samples=512,
        num_lines=64,
        lesion_center_axial_mm=4.9,
        lesion_center_lateral_mm=6.4,
        lesion_semi_axis_axial_mm=1.5,
        lesion_semi_axis_lateral_mm=2.5,
    )
    base.update(overrides)
    return PhantomSpec(**base)


class TestGenerate:
    def test_same_seed_bit_identical(self):
        spec = small_spec(speckle_seed=7)
        f1, m1, _ = generate(spec)
        f2, m2, _ = generate(spec)
        np.testing.assert_array_equal(f1.samples, f2.samples)
        np.testing.assert_array_equal(m1, m2)

    def test_different_seed_differs(self):
        f1, _, _ = generate(small_spec(speckle_seed=1))
        f2, _, _ = generate(small_spec(speckle_seed=2))
        assert not np.array_equal(f1.samples, f2.samples)

    def test_respects_nyquist(self):
        frame, _, _ = generate(small_spec())
        assert frame.sampling_rate > 2 * frame.center_frequency

    def test_mask_area_matches_analytic_ellipse(self):
        spec = small_spec()
        _, mask, _ = generate(spec)
        area_mm2 = mask.sum() * spec.axial_spacing * spec.lateral_spacing
        analytic = np.pi * spec.lesion_semi_axis_axial_mm * spec.lesion_semi_axis_lateral_mm
        assert area_mm2 == pytest.approx(analytic, rel=0.02)

    def test_hypoechoic_lesion_darker_inside(self):
        # Monte Carlo: contrast -10 dB must darken the lesion interior
        darker = 0
        for seed in range(40):
            spec = small_spec(lesion_echogenicity_db=-10.0, speckle_seed=seed)
            frame, mask, _ = generate(spec)
            env = detect_envelope(frame).values
            darker += env[mask].mean() < env[~mask].mean()
        assert darker == 40

    def test_lesion_must_fit_with_margin(self):
        with pytest.raises(ValueError, match="margin"):
            small_spec(lesion_semi_axis_lateral_mm=6.0)

    def test_targets_carry_plants(self):
        spec = small_spec(lesion_echogenicity_db=-7.5, lesion_heterogeneity_db=2.0)
        _, _, targets = generate(spec)
        assert targets.echogenicity == -7.5
        assert targets.heterogeneity == 2.0
        assert targets.aspect_ratio == pytest.approx(1.5 / 2.5)
        assert targets.convexity == 1.0


class TestCalibrationRecovery:
    def test_planted_intercept_recovered_on_average(self):
        # per-seed in-mask means scatter ~0.4 dB (zero-frequency
        # extrapolation noise); the multi-seed mean must land on the plant
        config = SpectralConfig(attenuation_db_per_mhz_cm=0.0)
        base = PhantomSpec()
        cal = make_calibration(base, config)
        spec0 = replace(
            base,
            lesion_semi_axis_axial_mm=6.5,
            lesion_semi_axis_lateral_mm=9.0,
            lesion_echogenicity_db=3.1884,
            background_echogenicity_db=1.5,
        )
        errors = []
        for seed in range(6):
            frame, mask, _ = generate(replace(spec0, speckle_seed=seed))
            param = parameter_images(frame, cal, config)
            inside = mask[param.center_sample_indices, :] & np.isfinite(param.intercept)
            errors.append(param.intercept[inside].mean() - 3.1884)
        assert abs(np.mean(errors)) < 0.5

    def test_planted_heterogeneity_recovered(self):
        config = SpectralConfig(attenuation_db_per_mhz_cm=0.0)
        base = PhantomSpec()
        cal = make_calibration(base, config)
        spec = replace(
            base,
            lesion_semi_axis_axial_mm=6.5,
            lesion_semi_axis_lateral_mm=9.0,
            lesion_heterogeneity_db=8.9937,
            background_heterogeneity_db=0.0,
            speckle_seed=3,
        )
        frame, mask, _ = generate(spec)
        param = parameter_images(frame, cal, config)
        inside = mask[param.center_sample_indices, :] & np.isfinite(param.midband)
        assert inside.sum() >= 200
        estimate = param.midband[inside].std()
        assert abs(estimate - 8.9937) / 8.9937 < 0.10

    def test_uniform_phantom_calibrates_to_zero(self):
        config = SpectralConfig(attenuation_db_per_mhz_cm=0.0)
        base = PhantomSpec()
        cal = make_calibration(base, config)
        uniform = replace(base, lesion_echogenicity_db=0.0, background_echogenicity_db=0.0,
                          speckle_seed=91)
        frame, _, _ = generate(uniform)
        param = parameter_images(frame, cal, config)
        finite = np.isfinite(param.intercept)
        assert abs(param.intercept[finite].mean()) < 0.5
        assert abs(param.midband[finite].mean()) < 0.25


class TestCohort:
    def test_fixed_seed_identical(self):
        a = generate_cohort(5, 5, seed=3)
        b = generate_cohort(5, 5, seed=3)
        for ma, mb in zip(a, b):
            assert ma.label == mb.label
            for name in ma.features.SCALAR_FIELDS:
                assert ma.features.get(name) == mb.features.get(name)

    def test_sample_means_near_planted_means(self):
        members = generate_cohort(50, 50, seed=11)
        for feature in ("echogenicity", "heterogeneity", "aspect_ratio", "convexity"):
            for label, (mean_b, sd_b, mean_m, sd_m) in (
                ("benign", COHORT_TABLE_STATS[feature]),
                ("malignant", COHORT_TABLE_STATS[feature]),
            ):
                values = [m.features.get(feature) for m in members if m.label == label]
                mean, sd = (mean_b, sd_b) if label == "benign" else (mean_m, sd_m)
                se = sd / np.sqrt(len(values))
                # clipping can shift slightly; 2 SE covers the unclipped case
                assert abs(np.mean(values) - mean) <= 2.5 * se + 0.02 * abs(mean)

    def test_validity_clipping(self):
        members = generate_cohort(60, 60, seed=5)
        for member in members:
            assert member.features.heterogeneity >= 0
            assert 0 < member.features.convexity <= 1.0
            assert 0 < member.features.solidity <= 1.0
            assert member.features.aspect_ratio > 0

    def test_labels_partition(self):
        members = generate_cohort(4, 6, seed=0)
        assert sum(m.truth for m in members) == 6
        assert sum(not m.truth for m in members) == 4

    def test_needs_one_per_class(self):
        with pytest.raises(ValueError):
            generate_cohort(0, 5)

    def test_with_frames_synthesizes(self):
        members = generate_cohort(1, 1, seed=2, with_frames=True)
        for member in members:
            assert member.frame is not None
            assert member.frame.samples.shape == (
                member.phantom.num_samples,
                member.phantom.num_lines,
            )
            assert member.mask.any()
