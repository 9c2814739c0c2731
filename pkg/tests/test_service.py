import io
import json

import pytest
from fastapi.testclient import TestClient

from sonoseg.frame_io import save_rf_frame
from sonoseg.phantom import PhantomSpec, generate, make_calibration
from sonoseg.pipeline import PipelineConfig
from sonoseg.service import create_app
from sonoseg.spectral import SpectralConfig


@pytest.fixture(scope="module")
def setup(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("svc")
    spec = PhantomSpec(
        num_samples=512,
        num_lines=64,
        lesion_center_axial_mm=4.9,
        lesion_center_lateral_mm=6.4,
        lesion_semi_axis_axial_mm=1.6,
        lesion_semi_axis_lateral_mm=2.6,
        lesion_echogenicity_db=-9.0,
        speckle_seed=12,
        frame_id="svc_frame",
    )
    frame, mask, _ = generate(spec)
    zip_path = save_rf_frame(frame, tmp / "frame.zip")
    spectral = SpectralConfig(attenuation_db_per_mhz_cm=0.0)
    calibration = make_calibration(spec, spectral, num_lines=128)
    config = PipelineConfig(spectral=spectral)
    app = create_app(calibration=calibration, config=config)
    client = TestClient(app)
    return client, zip_path.read_bytes(), frame, calibration, config


def upload(client, payload):
    response = client.post("/frames", files={"container": ("frame.zip", payload, "application/zip")})
    assert response.status_code == 200
    return response.json()["frame_id"]


class TestFrames:
    def test_upload_multipart_and_metadata(self, setup):
        client, payload, frame, _, _ = setup
        response = client.post(
            "/frames", files={"container": ("frame.zip", payload, "application/zip")}
        )
        assert response.status_code == 200
        body = response.json()
        assert body["num_samples"] == frame.num_samples
        assert body["num_lines"] == frame.num_lines
        assert body["source_frame_id"] == "svc_frame"

    def test_upload_raw_body_same_id(self, setup):
        client, payload, _, _, _ = setup
        a = upload(client, payload)
        b = client.post("/frames", content=payload).json()["frame_id"]
        assert a == b  # content-addressed

    def test_bad_upload_422(self, setup):
        client, _, _, _, _ = setup
        response = client.post("/frames", content=b"not a zip at all")
        assert response.status_code == 422

    def test_unknown_frame_404(self, setup):
        client, _, _, _, _ = setup
        assert client.get("/frames/deadbeef/bmode.png").status_code == 404

    def test_bmode_and_residue_pngs(self, setup):
        client, payload, frame, _, _ = setup
        frame_id = upload(client, payload)
        for endpoint in ("bmode.png", "residue.png"):
            response = client.get(f"/frames/{frame_id}/{endpoint}")
            assert response.status_code == 200
            assert response.headers["content-type"] == "image/png"
            from PIL import Image

            img = Image.open(io.BytesIO(response.content))
            assert img.size == (frame.num_lines, frame.num_samples)


class TestSegment:
    def test_otsu_then_override(self, setup):
        client, payload, _, _, _ = setup
        frame_id = upload(client, payload)
        auto = client.post(f"/frames/{frame_id}/segment", json={"threshold": None}).json()
        assert auto["rois"], "no ROIs from automatic threshold"
        roi = auto["rois"][0]
        assert roi["area_mm2"] > 0 and len(roi["contour"]) > 8
        manual = client.post(
            f"/frames/{frame_id}/segment", json={"threshold": auto["threshold_used"]}
        ).json()
        assert manual["threshold_used"] == auto["threshold_used"]
        assert manual["rois"][0]["area_mm2"] == roi["area_mm2"]

    def test_resegmentation_does_not_mutate_prior(self, setup):
        client, payload, _, _, _ = setup
        frame_id = upload(client, payload)
        first = client.post(f"/frames/{frame_id}/segment", json={"threshold": None}).json()
        snapshot = json.dumps(first, sort_keys=True)
        client.post(f"/frames/{frame_id}/segment", json={"threshold": 140.0})
        again = client.post(f"/frames/{frame_id}/segment", json={"threshold": None}).json()
        assert json.dumps(again, sort_keys=True) == snapshot

    def test_rois_get_variant(self, setup):
        client, payload, _, _, _ = setup
        frame_id = upload(client, payload)
        get_result = client.get(f"/frames/{frame_id}/rois").json()
        post_result = client.post(f"/frames/{frame_id}/segment", json={"threshold": None}).json()
        assert get_result == post_result


class TestFeatures:
    def test_features_and_score(self, setup):
        client, payload, _, _, _ = setup
        frame_id = upload(client, payload)
        rois = client.post(f"/frames/{frame_id}/segment", json={"threshold": None}).json()["rois"]
        label = rois[0]["label"]
        response = client.post(
            f"/frames/{frame_id}/rois/{label}/features", json={"profile": "combined"}
        )
        assert response.status_code == 200
        body = response.json()
        assert body["features"]["aspect_ratio"] is not None
        assert body["score"] is not None
        assert body["roi"]["label"] == label

    def test_unknown_label_404(self, setup):
        client, payload, _, _, _ = setup
        frame_id = upload(client, payload)
        response = client.post(f"/frames/{frame_id}/rois/999/features", json={})
        assert response.status_code == 404

    def test_unknown_profile_422(self, setup):
        client, payload, _, _, _ = setup
        frame_id = upload(client, payload)
        rois = client.post(f"/frames/{frame_id}/segment", json={"threshold": None}).json()["rois"]
        response = client.post(
            f"/frames/{frame_id}/rois/{rois[0]['label']}/features", json={"profile": "nope"}
        )
        assert response.status_code == 422

    def test_profiles_endpoint(self, setup):
        client, _, _, _, _ = setup
        body = client.get("/profiles").json()
        assert set(body["profiles"]) == {"spectral", "morphometric", "combined"}
        combined = body["profiles"]["combined"]
        assert combined["weights"]["aspect_ratio"] == 0.36


class TestCliParity:
    def test_service_equals_pipeline_field_for_field(self, setup):
        """Same (frame, threshold, roi, profile) tuple through both paths."""
        client, payload, frame, calibration, config = setup
        from sonoseg.classify import built_in_profile
        from sonoseg.pipeline import analyze_roi, process_frame

        frame_id = upload(client, payload)
        seg = client.post(f"/frames/{frame_id}/segment", json={"threshold": None}).json()
        label = seg["rois"][0]["label"]
        svc = client.post(
            f"/frames/{frame_id}/rois/{label}/features", json={"profile": "combined"}
        ).json()

        artifacts = process_frame(frame, calibration, config, built_in_profile("combined"))
        assert artifacts.entry["threshold_used"] == seg["threshold_used"]
        direct = analyze_roi(
            frame, artifacts.param, artifacts.rois[label - 1], built_in_profile("combined"), config
        )
        direct_json = json.loads(json.dumps({"features": direct["features"], "score": direct["score"]}))
        assert svc["features"] == direct_json["features"]
        assert svc["score"] == direct_json["score"]
