import numpy as np
import pytest

from sonoseg.emd import (
    EmdParams,
    decompose,
    find_extrema,
    residue_image,
    spline_envelopes,
)


def zero_crossings(y):
    s = np.sign(y)
    s = s[s != 0]
    return int(np.count_nonzero(s[:-1] != s[1:])) if s.size > 1 else 0


class TestFindExtrema:
    def test_monotone_has_no_extrema(self):
        maxima, minima = find_extrema(np.arange(10.0))
        assert maxima.size == 0 and minima.size == 0

    def test_simple_alternation(self):
        maxima, minima = find_extrema([0.0, 1.0, 0.0, -1.0, 0.0])
        assert maxima.tolist() == [1]
        assert minima.tolist() == [3]

    def test_plateau_contributes_midpoint_once(self):
        maxima, minima = find_extrema([0.0, 2.0, 2.0, 0.0])
        assert maxima.tolist() == [1]  # midpoint of plateau {1,2}, tie -> lower
        assert minima.size == 0
        maxima, _ = find_extrema([0.0, 2.0, 2.0, 2.0, 0.0])
        assert maxima.tolist() == [2]

    def test_plateau_enumeration_against_rule(self):
        # all plateau placements of width 1..3 in a 7-point bump
        for width in (1, 2, 3):
            y = np.zeros(7)
            y[2 : 2 + width] = 1.0
            maxima, _ = find_extrema(y)
            start, end = 2, 2 + width - 1
            assert maxima.tolist() == [(start + end) // 2]

    def test_requires_length_three(self):
        with pytest.raises(ValueError):
            find_extrema([1.0, 2.0])


class TestSplineEnvelopes:
    def test_reproduces_cubic_through_knots(self):
        # natural-spline end conditions differ from the cubic's curvature;
        # the mismatch decays geometrically with knot count, so the central
        # half reproduces the polynomial to full precision
        t = np.arange(512, dtype=float)
        cubic = 1e-6 * (t - 150) ** 3 - 2e-3 * (t - 250) ** 2 + 0.5 * t
        knots = np.arange(3, 509, 6)
        env = spline_envelopes(cubic, knots, knots)[0]
        interior = slice(128, 384)
        np.testing.assert_allclose(
            env[interior], cubic[interior], atol=1e-9 * np.abs(cubic).max(), rtol=0
        )

    def test_two_maxima_degenerate_to_line(self):
        y = np.zeros(16)
        y[4], y[11] = 3.0, 5.0
        upper, _ = spline_envelopes(y, np.array([4, 11]), np.array([0, 15]))
        expected = 3.0 + (5.0 - 3.0) / 7.0 * (np.arange(16) - 4.0)
        np.testing.assert_allclose(upper, expected, atol=1e-12)

    def test_sinusoid_envelopes_near_amplitude(self):
        i = np.arange(1000, dtype=float)
        y = 2.5 * np.sin(2 * np.pi * i / 20.0)
        maxima, minima = find_extrema(y)
        upper, lower = spline_envelopes(y, maxima, minima)
        interior = slice(50, 950)
        assert np.all(np.abs(upper[interior] - 2.5) < 0.05)  # within 2%
        assert np.all(np.abs(lower[interior] + 2.5) < 0.05)

    def test_equality_at_knots(self, rng):
        y = rng.normal(0, 1, 200)
        maxima, minima = find_extrema(y)
        upper, lower = spline_envelopes(y, maxima, minima)
        np.testing.assert_allclose(upper[maxima], y[maxima], atol=1e-10)
        np.testing.assert_allclose(lower[minima], y[minima], atol=1e-10)

    def test_too_few_extrema_rejected(self):
        with pytest.raises(ValueError):
            spline_envelopes(np.zeros(10), np.array([1]), np.array([2, 3]))


class TestDecompose:
    def test_monotone_ramp_passes_through(self):
        ramp = np.linspace(0.0, 5.0, 64)
        dec = decompose(ramp)
        assert dec.imfs == []
        np.testing.assert_array_equal(dec.residue, ramp)

    def test_reconstruction_identity_random(self, rng):
        for _ in range(10):
            y = rng.normal(0, 1, 512)
            dec = decompose(y)
            np.testing.assert_allclose(
                dec.reconstruct(), y, atol=1e-9 * np.abs(y).max(), rtol=0
            )

    def test_tone_plus_trend_separation(self):
        i = np.arange(400, dtype=float)
        tone = np.sin(2 * np.pi * i / 10.0)
        trend = 0.02 * i
        dec = decompose(tone + trend, EmdParams(num_imfs=1))
        assert len(dec.imfs) == 1
        corr = np.corrcoef(dec.imfs[0], tone)[0, 1]
        assert corr > 0.95
        # residue approximates the trend away from the ends
        interior = slice(40, 360)
        assert np.corrcoef(dec.residue[interior], trend[interior])[0, 1] > 0.99

    def test_imf_extrema_zero_crossing_property(self, rng):
        for _ in range(10):
            y = rng.normal(0, 1, 400)
            dec = decompose(y)
            for imf in dec.imfs:
                maxima, minima = find_extrema(imf)
                n_ext = len(maxima) + len(minima)
                assert abs(n_ext - zero_crossings(imf)) <= 1

    def test_recomputed_local_mean_is_small(self, rng):
        params = EmdParams()
        for _ in range(5):
            y = rng.normal(0, 1, 600)
            rms = np.sqrt(np.mean(y**2))
            dec = decompose(y, params)
            for imf in dec.imfs:
                maxima, minima = find_extrema(imf)
                if len(maxima) < 2 or len(minima) < 2:
                    continue
                upper, lower = spline_envelopes(imf, maxima, minima)
                mean_env = 0.5 * (upper + lower)
                assert np.abs(mean_env).mean() <= params.sift_sd_threshold * rms

    def test_deterministic(self, rng):
        y = rng.normal(0, 1, 300)
        d1 = decompose(y.copy())
        d2 = decompose(y.copy())
        assert len(d1.imfs) == len(d2.imfs)
        for a, b in zip(d1.imfs, d2.imfs):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(d1.residue, d2.residue)

    def test_short_signal_returns_itself(self):
        y = np.array([1.0, 2.0, 0.5])
        dec = decompose(y)
        assert dec.imfs == []
        np.testing.assert_array_equal(dec.residue, y)


class TestResidueImage:
    def test_monotone_lines_unchanged(self):
        grid = np.tile(np.linspace(0, 1, 32)[:, None], (1, 5))
        np.testing.assert_array_equal(residue_image(grid), grid)

    def test_identical_lines_give_identical_residues(self, rng):
        line = rng.normal(0, 1, 128)
        grid = np.tile(line[:, None], (1, 6))
        res = residue_image(grid)
        for j in range(1, 6):
            np.testing.assert_array_equal(res[:, j], res[:, 0])

    def test_residue_is_smoother_by_zero_crossing_count(self, rng):
        # scripted oracle: count mean-crossings of input vs residue per line
        def crossings(v):
            return zero_crossings(v - v.mean())

        speckle = np.abs(rng.normal(0, 1, (512, 8)) + 1j * rng.normal(0, 1, (512, 8)))
        res = residue_image(speckle)
        for j in range(8):
            assert crossings(res[:, j]) <= crossings(speckle[:, j])

    def test_shape_preserved(self, rng):
        grid = rng.normal(0, 1, (100, 7))
        assert residue_image(grid).shape == (100, 7)
