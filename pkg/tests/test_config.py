import json

import pytest

from redlight.config import (
    CameraConfig,
    ConfigError,
    PanPreset,
    default_ptz_presets,
    dump_config,
    load_config,
    parse_config,
    patch_camera,
    save_config,
)
from redlight.stopline import StopLineGeometry


def _geom(**overrides) -> StopLineGeometry:
    params = dict(anchor_x=100, anchor_y=300, length=200, skew_deg=2.5)
    params.update(overrides)
    return StopLineGeometry(**params)


def _camera(**overrides) -> CameraConfig:
    params = dict(
        camera_id="CAM1",
        kind="fixed",
        pan_presets=(PanPreset(pan_index=0, geometry=_geom()),),
        location_label="north crossing",
    )
    params.update(overrides)
    return CameraConfig(**params)


class TestValidation:
    def test_valid_camera_passes(self):
        _camera().validate()

    def test_bad_id_charset(self):
        with pytest.raises(ConfigError) as exc_info:
            _camera(camera_id="bad id!").validate("cameras[0]")
        assert "cameras[0].camera_id" in str(exc_info.value)

    def test_bad_kind(self):
        with pytest.raises(ConfigError):
            _camera(kind="dome").validate()

    def test_fixed_requires_single_preset(self):
        presets = (PanPreset(0, _geom()), PanPreset(1, _geom()))
        with pytest.raises(ConfigError):
            _camera(pan_presets=presets).validate()

    def test_ptz_allows_six_presets(self):
        cam = _camera(kind="ptz", pan_presets=default_ptz_presets(_geom()))
        cam.validate()
        assert [p.pan_index for p in cam.pan_presets] == [0, 1, 2, 3, 4, 5]

    def test_duplicate_pan_index(self):
        presets = (PanPreset(0, _geom()), PanPreset(0, _geom()))
        with pytest.raises(ConfigError):
            _camera(kind="ptz", pan_presets=presets).validate()

    def test_nonpositive_threshold(self):
        with pytest.raises(ConfigError):
            _camera(d_th=0.0).validate()
        with pytest.raises(ConfigError):
            _camera(l_th=-1.0).validate()

    def test_band_must_fit_frame(self):
        geom = _geom(anchor_x=600, length=200)  # runs past x=704
        with pytest.raises(ConfigError) as exc_info:
            _camera(pan_presets=(PanPreset(0, geom),)).validate("cameras[0]")
        assert "cameras[0]" in str(exc_info.value)

    def test_preset_lookup(self):
        cam = _camera(kind="ptz", pan_presets=default_ptz_presets(_geom(), count=3))
        assert cam.preset(2) is cam.pan_presets[2]
        assert cam.preset(9) is None


class TestSerialization:
    def test_round_trip(self):
        cams = {
            "CAM1": _camera(),
            "PTZ9": _camera(camera_id="PTZ9", kind="ptz", pan_presets=default_ptz_presets(_geom())),
        }
        assert parse_config(dump_config(cams)) == cams

    def test_skew_dumped_at_two_decimals(self):
        cam = _camera(pan_presets=(PanPreset(0, _geom(skew_deg=5.7098)),))
        data = json.loads(dump_config({"CAM1": cam}))
        assert data["cameras"][0]["pan_presets"][0]["geometry"]["skew_deg"] == 5.71

    def test_rejects_unknown_version(self):
        with pytest.raises(ConfigError):
            parse_config(json.dumps({"version": 99, "cameras": []}))

    def test_rejects_duplicate_camera_ids(self):
        text = dump_config({"CAM1": _camera()})
        data = json.loads(text)
        data["cameras"].append(data["cameras"][0])
        with pytest.raises(ConfigError):
            parse_config(json.dumps(data))

    def test_rejects_malformed_json(self):
        with pytest.raises(ConfigError):
            parse_config("{not json")

    def test_error_names_key_path(self):
        data = json.loads(dump_config({"CAM1": _camera()}))
        del data["cameras"][0]["pan_presets"][0]["geometry"]["length"]
        with pytest.raises(ConfigError) as exc_info:
            parse_config(json.dumps(data))
        assert "length" in str(exc_info.value)

    def test_file_round_trip(self, tmp_path):
        cams = {"CAM1": _camera()}
        save_config(cams, tmp_path / "c.json")
        assert load_config(tmp_path / "c.json") == cams
        assert not list(tmp_path.glob("*.tmp"))


class TestPatch:
    def test_patch_thresholds(self):
        cam = _camera()
        updated = patch_camera(cam, 0, d_th=80.0, l_th=150.0, pixel_th=30)
        assert (updated.d_th, updated.l_th, updated.pixel_th) == (80.0, 150.0, 30)
        # original untouched
        assert (cam.d_th, cam.l_th, cam.pixel_th) == (70.0, 140.0, 25)

    def test_patch_geometry_only_touches_target_pan(self):
        cam = _camera(kind="ptz", pan_presets=default_ptz_presets(_geom(), count=3))
        new_geom = _geom(anchor_x=50, skew_deg=-3.0)
        updated = patch_camera(cam, 1, geometry=new_geom)
        assert updated.pan_presets[1].geometry == new_geom
        assert updated.pan_presets[0].geometry == _geom()
        assert updated.pan_presets[2].geometry == _geom()

    def test_patch_unknown_pan(self):
        with pytest.raises(ConfigError):
            patch_camera(_camera(), 5, d_th=80.0)

    def test_invalid_patch_rolls_back(self):
        cam = _camera()
        with pytest.raises(ConfigError):
            patch_camera(cam, 0, d_th=-1.0)
        with pytest.raises(ConfigError):
            # geometry that would leave the frame must be rejected whole
            patch_camera(cam, 0, geometry=_geom(anchor_x=600, length=200), l_th=500.0)
        assert cam == _camera()
