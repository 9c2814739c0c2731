import json

import numpy as np
import pytest

from sonoseg.frame_io import (
    CalibrationSet,
    EnvelopeImage,
    FrameFormatError,
    RFFrame,
    detect_envelope,
    form_bmode,
    load_calibration,
    load_rf_frame,
    save_calibration,
    save_rf_frame,
)

from conftest import tone_frame


def small_frame():
    return RFFrame(
        samples=np.array([[1, -2, 3, 4], [5, 6, -7, 8]], dtype=np.int16).T,
        sampling_rate=40e6,
        center_frequency=10e6,
        axial_spacing=0.02,
        lateral_spacing=0.2,
        frame_id="tiny",
    )


class TestContainerRoundTrip:
    def test_directory_round_trip_identity(self, tmp_path):
        frame = small_frame()
        save_rf_frame(frame, tmp_path / "frame")
        loaded = load_rf_frame(tmp_path / "frame")
        np.testing.assert_array_equal(loaded.samples, frame.samples)
        assert loaded.sampling_rate == frame.sampling_rate
        assert loaded.center_frequency == frame.center_frequency
        assert loaded.axial_spacing == frame.axial_spacing
        assert loaded.lateral_spacing == frame.lateral_spacing
        assert loaded.frame_id == frame.frame_id

    def test_zip_round_trip_identity(self, tmp_path):
        frame = small_frame()
        save_rf_frame(frame, tmp_path / "frame.zip")
        loaded = load_rf_frame(tmp_path / "frame.zip")
        np.testing.assert_array_equal(loaded.samples, frame.samples)

    def test_payload_is_byte_exact_line_major(self, tmp_path):
        frame = small_frame()
        save_rf_frame(frame, tmp_path / "frame")
        raw = np.frombuffer((tmp_path / "frame" / "rf.bin").read_bytes(), dtype="<i2")
        np.testing.assert_array_equal(raw.reshape(frame.num_lines, -1), frame.samples.T)

    def test_sample_count_mismatch(self, tmp_path):
        frame = small_frame()
        path = save_rf_frame(frame, tmp_path / "frame")
        payload = (path / "rf.bin").read_bytes()
        (path / "rf.bin").write_bytes(payload[:-2])  # drop one sample
        with pytest.raises(FrameFormatError, match="sample count mismatch"):
            load_rf_frame(path)

    def test_malformed_header(self, tmp_path):
        path = save_rf_frame(small_frame(), tmp_path / "frame")
        header = json.loads((path / "header.json").read_text())
        del header["sampling_rate_hz"]
        (path / "header.json").write_text(json.dumps(header))
        with pytest.raises(FrameFormatError, match="malformed header"):
            load_rf_frame(path)

    def test_nyquist_violation_on_load(self, tmp_path):
        path = save_rf_frame(small_frame(), tmp_path / "frame")
        header = json.loads((path / "header.json").read_text())
        header["center_frequency_hz"] = 25e6  # above fs/2
        (path / "header.json").write_text(json.dumps(header))
        with pytest.raises(ValueError, match="Nyquist"):
            load_rf_frame(path)

    def test_phantom_generator_output_loads_at_40mhz(self, tmp_path):
        from sonoseg.phantom import PhantomSpec, generate

        frame, _, _ = generate(PhantomSpec(num_samples=512, num_lines=64,
                                           lesion_center_axial_mm=4.9,
                                           lesion_center_lateral_mm=6.4,
                                           lesion_semi_axis_axial_mm=1.2,
                                           lesion_semi_axis_lateral_mm=2.0))
        path = save_rf_frame(frame, tmp_path / "ph")
        loaded = load_rf_frame(path)
        assert loaded.sampling_rate == 4.0e7
        assert loaded.samples.shape == (512, 64)


class TestFrameInvariants:
    def test_rejects_nyquist_violation(self):
        with pytest.raises(ValueError, match="Nyquist"):
            RFFrame(np.zeros((4, 4), np.int16), 15e6, 10e6, 0.02, 0.2)

    def test_rejects_bad_spacing(self):
        with pytest.raises(ValueError, match="spacing"):
            RFFrame(np.zeros((4, 4), np.int16), 40e6, 10e6, -0.02, 0.2)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            RFFrame(np.zeros((0, 4), np.int16), 40e6, 10e6, 0.02, 0.2)


class TestEnvelope:
    def test_pure_tone_envelope_is_amplitude(self):
        frame = tone_frame(amplitude=1000.0)
        env = detect_envelope(frame)
        interior = env.values[20:-20, :]
        assert np.all(np.abs(interior - 1000.0) < 10.0)  # within 1%

    def test_zero_line_gives_zero_envelope(self):
        frame = small_frame()
        frame.samples[:, :] = 0
        env = detect_envelope(tone_frame())
        zero = RFFrame(np.zeros((64, 2), np.int16), 40e6, 10e6, 0.02, 0.2)
        assert np.all(detect_envelope(zero).values == 0)
        assert env.values.shape == (256, 4)

    def test_amplitude_modulated_tone_tracks_modulation(self):
        fs, fc, n = 40e6, 10e6, 2048
        i = np.arange(n)
        modulation = 600.0 + 300.0 * np.sin(2 * np.pi * i / n)  # slow
        samples = (modulation * np.sin(2 * np.pi * fc * i / fs)).astype(np.int16)
        frame = RFFrame(samples[:, None], fs, fc, 0.02, 0.2)
        env = detect_envelope(frame).values[:, 0]
        interior = slice(64, n - 64)
        rel_err = np.abs(env[interior] - modulation[interior]) / modulation[interior]
        assert rel_err.max() < 0.02

    def test_scale_equivariance(self):
        base = tone_frame(amplitude=500.0)
        tripled = RFFrame(
            (base.samples * 3).astype(np.int16),
            base.sampling_rate,
            base.center_frequency,
            base.axial_spacing,
            base.lateral_spacing,
        )
        np.testing.assert_allclose(
            detect_envelope(tripled).values, 3.0 * detect_envelope(base).values, rtol=1e-12
        )


class TestBMode:
    def test_constant_envelope_maps_to_255(self):
        env = EnvelopeImage(np.full((8, 8), 3.7), 0.02, 0.2)
        assert np.all(form_bmode(env).pixels == 255)

    def test_range_endpoint_maps_to_zero(self):
        env = EnvelopeImage(np.array([[1.0, 10.0 ** (50.0 / 20.0)]]), 0.02, 0.2)
        pixels = form_bmode(env, dynamic_range_db=50.0).pixels
        assert pixels[0, 0] == 0 and pixels[0, 1] == 255

    def test_three_value_log_map(self):
        # hand-computed: 20*log10({1,10,100}/100) = {-40,-20,0} dB over a
        # 40 dB range -> {0, 127.5, 255} -> round half-up -> {0, 128, 255}
        env = EnvelopeImage(np.array([[1.0, 10.0, 100.0]]), 0.02, 0.2)
        pixels = form_bmode(env, dynamic_range_db=40.0).pixels
        np.testing.assert_array_equal(pixels, [[0, 128, 255]])

    def test_invariant_to_envelope_scaling(self, rng):
        values = rng.uniform(0.1, 9.0, (32, 16))
        env1 = EnvelopeImage(values, 0.02, 0.2)
        env2 = EnvelopeImage(values * 123.0, 0.02, 0.2)
        np.testing.assert_array_equal(form_bmode(env1).pixels, form_bmode(env2).pixels)

    def test_all_zero_envelope_rejected(self):
        env = EnvelopeImage(np.zeros((4, 4)), 0.02, 0.2)
        with pytest.raises(ValueError, match="empty image"):
            form_bmode(env)


class TestCalibration:
    def test_json_round_trip(self, tmp_path):
        cal = CalibrationSet(
            frequencies_hz=[5e6, 10e6, 15e6],
            transfer_db=[1.0, 2.0, 3.0],
            depths_mm=[0.0, 20.0],
            diffraction_db=[[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]],
            attenuation_db_per_mhz_cm=1.0,
        )
        save_calibration(cal, tmp_path / "cal.json")
        loaded = load_calibration(tmp_path / "cal.json")
        np.testing.assert_allclose(loaded.transfer_db, cal.transfer_db)
        np.testing.assert_allclose(loaded.diffraction_db, cal.diffraction_db)
        assert loaded.attenuation_db_per_mhz_cm == 1.0

    def test_linear_interpolation_of_transfer(self):
        cal = CalibrationSet([0.0, 10e6], [0.0, 10.0], [0.0], [[0.0, 0.0]])
        np.testing.assert_allclose(cal.transfer_at([2.5e6, 5e6]), [2.5, 5.0])

    def test_diffraction_depth_interpolation(self):
        cal = CalibrationSet(
            [0.0, 10e6], [0.0, 0.0], [0.0, 10.0], [[0.0, 0.0], [4.0, 4.0]]
        )
        np.testing.assert_allclose(cal.diffraction_at(5.0, [1e6]), [2.0])
        np.testing.assert_allclose(cal.diffraction_at(25.0, [1e6]), [4.0])  # clamped

    def test_requires_increasing_frequency_axis(self):
        with pytest.raises(FrameFormatError):
            CalibrationSet([10e6, 5e6], [0.0, 0.0], [0.0], [[0.0, 0.0]])
