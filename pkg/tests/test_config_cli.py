import json
from pathlib import Path

import pytest

import luvtsim as lv
from luvtsim import cli
from luvtsim.errors import (
    ConfigParseError,
    ConfigurationError,
    InvalidResolutionError,
)


def test_empty_config_defaults():
    config = lv.parse_config("")
    assert config.material.density == 2700.0
    assert config.material.longitudinal_speed == 6320.0
    assert config.material.shear_speed == 3130.0
    assert config.geometry_cfg.width == pytest.approx(0.100)
    assert config.geometry_cfg.depth == pytest.approx(0.050)
    assert config.grid.dx == pytest.approx(0.15e-3)
    assert config.source.center_frequency == pytest.approx(2.0e6)
    assert config.dataset.n_frames == 431
    assert config.dataset.n_locations == 55
    geometry = config.geometry()
    # 20 x 50 mm view centered under the transducer
    assert geometry.view_region.width == pytest.approx(0.020)
    assert geometry.view_region.height == pytest.approx(0.050)
    assert geometry.view_region.x0 == pytest.approx(0.040)
    assert config.transducer_center() == pytest.approx(0.050)


def test_coarse_dx_rejected():
    with pytest.raises(InvalidResolutionError):
        lv.parse_config("[grid]\ndx_mm = 50.0\n")


def test_unknown_key_rejected():
    with pytest.raises(ConfigurationError) as err:
        lv.parse_config("[grid]\ndxx_mm = 0.2\n")
    assert "dxx_mm" in str(err.value)
    with pytest.raises(ConfigurationError) as err:
        lv.parse_config("[gird]\ndx_mm = 0.2\n")
    assert "gird" in str(err.value)


def test_parse_error_reports_line():
    with pytest.raises(ConfigParseError) as err:
        lv.parse_config("[grid]\ndx_mm = = 0.2\n")
    assert "line" in str(err.value)


def test_wrong_type_rejected():
    with pytest.raises(ConfigurationError):
        lv.parse_config("[dataset]\nn_frames = 4.5\n")
    with pytest.raises(ConfigurationError):
        lv.parse_config("[dataset]\nemit_baseline = 1\n")


def test_courant_bounds():
    with pytest.raises(ConfigurationError):
        lv.parse_config("[solver]\ncourant = 1.5\n")
    with pytest.raises(ConfigurationError):
        lv.parse_config("[solver]\ncourant = 0.0\n")


def test_defect_section_requires_center():
    with pytest.raises(ConfigurationError):
        lv.parse_config("[defect]\ndiameter_mm = 2.0\n")
    config = lv.parse_config("[defect]\ncenter_x_mm = 50.0\ncenter_z_mm = 25.0\n")
    assert config.defect_spec().center == (0.050, 0.025)


def test_defect_must_fit():
    with pytest.raises(ConfigurationError):
        lv.parse_config("[defect]\ncenter_x_mm = 1.0\ncenter_z_mm = 1.0\n")


def test_aperture_must_fit():
    with pytest.raises(ConfigurationError) as err:
        lv.parse_config(
            "[geometry]\nview_x0_mm = 40.0\n\n[source]\ncenter_x_mm = 2.0\naperture_mm = 6.0\n"
        )
    assert "aperture" in str(err.value)


def test_digest_stability():
    a = lv.parse_config("")
    b = lv.parse_config("[grid]\ndx_mm = 0.15\n")  # same as the default
    c = lv.parse_config("[grid]\ndx_mm = 0.2\n")
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()
    snapshot = json.loads(a.snapshot_text())
    assert snapshot["grid"]["dx_mm"] == pytest.approx(0.15)
    # resolved defaults are recorded explicitly
    assert snapshot["geometry"]["view_x0_mm"] == pytest.approx(40.0)
    assert snapshot["source"]["center_x_mm"] == pytest.approx(50.0)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigParseError):
        lv.load_config(tmp_path / "nope.toml")


def test_solver_params_frame_count(small_config):
    field = small_config.build_field()
    params, frame_every = small_config.solver_params(field)
    assert params.n_steps == frame_every * small_config.dataset.n_frames
    assert params.n_steps // frame_every == 10


# --- CLI ---------------------------------------------------------------

SMALL = """
[geometry]
width_mm = 30.0
depth_mm = 15.0
[grid]
dx_mm = 0.5
[dataset]
n_frames = 6
margin_mm = 2.0
"""


def _write_config(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text(SMALL)
    return path


def test_cli_dataset_flag_plumbing(tmp_path, capsys):
    config = _write_config(tmp_path)
    out = tmp_path / "ds"
    code = cli.main(
        ["dataset", "--config", str(config), "--out", str(out), "--locations", "2", "--seed", "8"]
    )
    assert code == 0
    images = list((out / "images").glob("*.png"))
    assert len(images) == 3 * 6  # 2 defects + baseline
    manifest = lv.DatasetManifest.read_jsonl(out / "manifest.jsonl")
    assert manifest.seed == 8
    assert {r.location_id for r in manifest.records} == {0, 1, 2}


def test_cli_dataset_missing_out_exits_2(tmp_path):
    config = _write_config(tmp_path)
    with pytest.raises(SystemExit) as err:
        cli.main(["dataset", "--config", str(config)])
    assert err.value.code == 2


def test_cli_simulate(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / "sim"
    code = cli.main(
        ["simulate", "--config", str(config), "--out", str(out), "--frames", "4", "--quiet"]
    )
    assert code == 0
    assert len(list((out / "images").glob("frame*.png"))) == 4
    assert (out / "config.snapshot").exists()


def test_cli_simulate_dump_raw(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / "sim"
    code = cli.main(
        [
            "simulate", "--config", str(config), "--out", str(out),
            "--frames", "2", "--quiet", "--dump-raw",
        ]
    )
    assert code == 0
    dumps = sorted(out.glob("snapshot*.f64"))
    headers = sorted(out.glob("snapshot*.f64.hdr"))
    assert len(dumps) == 2 and len(headers) == 2
    state = lv.load_wavefield(dumps[0])
    assert state.step_index > 0


def test_cli_invalid_config_exits_1(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid]\ndx_mm = 50.0\n")
    code = cli.main(["simulate", "--config", str(bad), "--out", str(tmp_path / "x")])
    assert code == 1


def test_cli_unknown_key_exits_1(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid]\ndxx_mm = 0.2\n")
    code = cli.main(["validate", "--config", str(bad)])
    assert code == 1


def test_cli_validate_exit_codes(monkeypatch, capsys):
    from luvtsim.validate import CheckResult

    good = [CheckResult("wave_speed", 0.001, 0.01, True, "ok")]
    monkeypatch.setattr(cli, "run_all", lambda config: good)
    assert cli.main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "PASS wave_speed" in out

    bad = [CheckResult("energy", 1.0, 1e-4, False, "drift too large")]
    monkeypatch.setattr(cli, "run_all", lambda config: bad)
    assert cli.main(["validate"]) == 1
    out = capsys.readouterr().out
    assert "FAIL energy" in out


def test_cli_instability_exit_code(tmp_path, monkeypatch):
    config = _write_config(tmp_path)

    def boom(*args, **kwargs):
        raise lv.NumericalInstabilityError(17)

    monkeypatch.setattr(cli, "generate_dataset", boom)
    code = cli.main(["dataset", "--config", str(config), "--out", str(tmp_path / "x")])
    assert code == 3


def test_cli_seed_determinism(tmp_path):
    config = _write_config(tmp_path)
    for name in ("a", "b"):
        cli.main(
            [
                "dataset", "--config", str(config), "--out", str(tmp_path / name),
                "--locations", "1", "--seed", "3", "--quiet",
            ]
        )
    a = (tmp_path / "a" / "manifest.jsonl").read_bytes()
    b = (tmp_path / "b" / "manifest.jsonl").read_bytes()
    assert a == b
