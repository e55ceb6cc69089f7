import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

import luvtsim as lv
from luvtsim.dataset import _image_name
from luvtsim.errors import ConfigurationError, PlacementError


def _rule(interval=1e-7):
    return lv.LabelRule(reference_point=(0.05, 0.0), wave_speed=6320.0, frame_interval=interval)


def test_label_frames_no_defect():
    labels = lv.label_frames(431, None, _rule())
    assert len(labels) == 431
    assert set(labels) == {"defect_free"}


def test_label_frames_hand_example():
    # 25 mm below the transducer: arrival 3.956 us, 0.1 us frames -> flip at 40
    defect = lv.DefectSpec(center=(0.05, 0.025), diameter=0.002)
    labels = lv.label_frames(431, defect, _rule(1e-7))
    assert labels[:40] == ["defect_free"] * 40
    assert labels[40] == "defective"
    assert set(labels[40:]) == {"defective"}


def test_label_frames_zero_distance():
    defect = lv.DefectSpec(center=(0.05, 0.0), diameter=0.002)
    labels = lv.label_frames(10, defect, _rule())
    assert set(labels) == {"defective"}


@given(
    x=st.floats(0.0, 0.1),
    z=st.floats(0.0, 0.05),
    interval=st.floats(1e-8, 1e-6),
    n=st.integers(1, 500),
)
def test_label_monotonicity(x, z, interval, n):
    defect = lv.DefectSpec(center=(x, z), diameter=0.002)
    labels = lv.label_frames(n, defect, _rule(interval))
    flips = [a != b for a, b in zip(labels, labels[1:])]
    assert sum(flips) <= 1
    if labels[0] == "defective":
        assert set(labels) == {"defective"}


def test_sample_locations_deterministic():
    region = lv.Rect(0.04, 0.0, 0.02, 0.05)
    a = lv.sample_defect_locations(20, region, 0.002, seed=9)
    b = lv.sample_defect_locations(20, region, 0.002, seed=9)
    assert a == b
    c = lv.sample_defect_locations(20, region, 0.002, seed=10)
    assert a != c


def test_sample_locations_empty():
    assert lv.sample_defect_locations(0, lv.Rect(0.0, 0.0, 0.01, 0.01), 0.001, seed=1) == []


def test_sample_locations_margin():
    region = lv.Rect(0.04, 0.0, 0.02, 0.05)
    margin = 0.002
    defects = lv.sample_defect_locations(1000, region, margin, seed=4)
    clearance = margin + 0.001  # margin + radius
    for d in defects:
        x, z = d.center
        assert x >= region.x0 + clearance and x <= region.x1 - clearance
        assert z >= region.z0 + clearance and z <= region.z1 - clearance
        assert d.diameter == 0.002


def test_sample_locations_infeasible():
    with pytest.raises(PlacementError):
        lv.sample_defect_locations(3, lv.Rect(0.0, 0.0, 0.004, 0.004), 0.002, seed=1)


def test_noise_identity():
    frame = lv.ImageFrame(4, 4, np.full((4, 4), 100, dtype=np.uint8), 0.0, 0)
    out = lv.add_measurement_noise(frame, lv.NoiseModel(0.0, 0.0), seed=1)
    np.testing.assert_array_equal(out.intensities, frame.intensities)
    assert out.intensities is not frame.intensities


def test_noise_deterministic():
    frame = lv.ImageFrame(16, 16, np.full((16, 16), 120, dtype=np.uint8), 0.0, 0)
    model = lv.NoiseModel(gaussian_sigma=8.0, speckle_strength=0.05)
    a = lv.add_measurement_noise(frame, model, seed=42)
    b = lv.add_measurement_noise(frame, model, seed=42)
    c = lv.add_measurement_noise(frame, model, seed=43)
    np.testing.assert_array_equal(a.intensities, b.intensities)
    assert np.any(a.intensities != c.intensities)


def test_noise_gaussian_std():
    # 320 x 320 > 1e5 pixels of mid gray: empirical std of the added noise
    clean = lv.ImageFrame(320, 320, np.full((320, 320), 128, dtype=np.uint8), 0.0, 0)
    noisy = lv.add_measurement_noise(clean, lv.NoiseModel(gaussian_sigma=10.0), seed=7)
    delta = noisy.intensities.astype(float) - 128.0
    interior = (noisy.intensities > 0) & (noisy.intensities < 255)
    std = float(np.std(delta[interior]))
    assert 9.5 <= std <= 10.5


def _tiny_config():
    return lv.parse_config(
        """
[geometry]
width_mm = 30.0
depth_mm = 15.0

[grid]
dx_mm = 0.5

[dataset]
n_locations = 3
n_frames = 7
margin_mm = 2.0
"""
    )


def _tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_generate_dataset_counts(tmp_path):
    config = _tiny_config()
    manifest = lv.generate_dataset(config, tmp_path, seed=11)
    # 3 defect sequences + 1 baseline, 7 frames each
    assert len(manifest.records) == 4 * 7
    images = sorted((tmp_path / "images").glob("*.png"))
    assert len(images) == 28
    assert (tmp_path / "manifest.jsonl").exists()
    assert (tmp_path / "config.snapshot").exists()
    # records sorted and paths unique
    keys = [(r.location_id, r.frame_index) for r in manifest.records]
    assert keys == sorted(keys)
    baseline = [r for r in manifest.records if r.location_id == lv.BASELINE_LOCATION_ID]
    assert len(baseline) == 7
    assert all(r.defect is None and r.label == "defect_free" for r in baseline)
    defective_locs = {r.location_id for r in manifest.records if r.defect is not None}
    assert defective_locs == {1, 2, 3}


def test_generate_dataset_no_baseline(tmp_path):
    config = _tiny_config()
    config = lv.parse_config(
        """
[geometry]
width_mm = 30.0
depth_mm = 15.0
[grid]
dx_mm = 0.5
[dataset]
n_locations = 2
n_frames = 5
margin_mm = 2.0
emit_baseline = false
"""
    )
    manifest = lv.generate_dataset(config, tmp_path, seed=1)
    assert len(manifest.records) == 10
    assert all(r.location_id in (1, 2) for r in manifest.records)


def test_generate_dataset_empty(tmp_path):
    config = lv.parse_config(
        """
[geometry]
width_mm = 30.0
depth_mm = 15.0
[grid]
dx_mm = 0.5
[dataset]
n_locations = 0
n_frames = 5
margin_mm = 2.0
"""
    )
    manifest = lv.generate_dataset(config, tmp_path, seed=1)
    assert manifest.records == []
    assert list((tmp_path / "images").glob("*.png")) == []


def test_generate_dataset_deterministic(tmp_path):
    config = _tiny_config()
    lv.generate_dataset(config, tmp_path / "a", seed=5)
    lv.generate_dataset(config, tmp_path / "b", seed=5)
    assert _tree_digest(tmp_path / "a") == _tree_digest(tmp_path / "b")


def test_generate_dataset_parallel_matches_serial(tmp_path, monkeypatch):
    config = _tiny_config()
    monkeypatch.delenv("LUVT_THREADS", raising=False)
    lv.generate_dataset(config, tmp_path / "serial", seed=5)
    monkeypatch.setenv("LUVT_THREADS", "3")
    lv.generate_dataset(config, tmp_path / "parallel", seed=5)
    assert _tree_digest(tmp_path / "serial") == _tree_digest(tmp_path / "parallel")


def test_manifest_label_consistency(tmp_path):
    config = _tiny_config()
    manifest = lv.generate_dataset(config, tmp_path, seed=3)
    field = config.build_field()
    params, frame_every = config.solver_params(field)
    rule = config.label_rule(params.dt * frame_every)
    assert lv.verify_labels(manifest, rule)


def test_manifest_round_trip(tmp_path):
    config = _tiny_config()
    manifest = lv.generate_dataset(config, tmp_path, seed=3)
    loaded = lv.DatasetManifest.read_jsonl(tmp_path / "manifest.jsonl")
    assert loaded.schema_version == manifest.schema_version
    assert loaded.config_digest == manifest.config_digest == config.digest()
    assert loaded.seed == 3
    assert loaded.records == manifest.records
    # header is the first JSONL line
    first = json.loads((tmp_path / "manifest.jsonl").read_text().splitlines()[0])
    assert set(first) == {"schema_version", "config_digest", "seed"}


def test_manifest_validation():
    rec = lv.SampleRecord("images/a.png", 1, 0, 0.0, "defect_free", None)
    rec2 = lv.SampleRecord("images/a.png", 1, 1, 0.0, "defect_free", None)
    with pytest.raises(ConfigurationError):
        lv.DatasetManifest(1, "d", 0, [rec2, rec])  # unsorted
    with pytest.raises(ConfigurationError):
        lv.DatasetManifest(1, "d", 0, [rec, rec2])  # duplicate path


def test_generation_error_cleans_partial_output(tmp_path, monkeypatch):
    import luvtsim.dataset as ds

    config = _tiny_config()
    real_encode = ds.encode_image
    calls = {"n": 0}

    def flaky(frame, path):
        calls["n"] += 1
        if calls["n"] > 10:
            raise lv.ImageWriteError(f"cannot write image {path}: disk full")
        real_encode(frame, path)

    monkeypatch.setattr(ds, "encode_image", flaky)
    with pytest.raises(lv.GenerationError) as err:
        lv.generate_dataset(config, tmp_path, seed=2)
    failed = err.value.location_id
    assert isinstance(err.value.__cause__, lv.ImageWriteError)
    # the failed location left no images behind
    leftovers = list((tmp_path / "images").glob(f"loc{failed:04d}_*.png"))
    assert leftovers == []


def test_physics_label_agreement(tmp_path):
    """The first visibly-different frame is never earlier than label - 1.

    Labels use the straight-line arrival at the defect center; the wave
    physically touches the near edge one radius earlier and the explicit
    stencil leaks a detectable precursor a few cells ahead of that. The
    one-frame slack holds when the frame interval covers that whole lead.
    """
    config = lv.parse_config(
        """
[geometry]
width_mm = 40.0
depth_mm = 20.0
[grid]
dx_mm = 0.4
[dataset]
n_frames = 12
margin_mm = 2.0
"""
    )
    field0 = config.build_field()
    defect = lv.DefectSpec(center=(0.020, 0.012), diameter=0.002)
    field1 = lv.insert_cavity(field0, defect)
    params, frame_every = config.solver_params(field0)
    interval = params.dt * frame_every
    lead = defect.radius + 4 * field0.dx
    assert interval >= lead / config.material.longitudinal_speed
    source = lv.TransducerSource(config.transducer(), config.pulse())
    view = config.geometry().view_region
    spec = config.frame_spec()

    raw0, raw1, times = [], [], []
    for s0, s1 in zip(
        lv.iter_simulation(field0, params, source, frame_every=frame_every),
        lv.iter_simulation(field1, params, source, frame_every=frame_every),
    ):
        raw0.append(lv.extract_snapshot(s0, field0, view, spec))
        raw1.append(lv.extract_snapshot(s1, field1, view, spec))
        times.append(s0.time)
    # one shared normalization scope so the image difference reflects physics,
    # not the two sequences' slightly different maxima
    combined = lv.normalize_sequence(raw0 + raw1, spec, times=times + times)
    frames0 = combined[: len(raw0)]
    frames1 = combined[len(raw0) :]

    first_visible = next(
        (
            k
            for k, (a, b) in enumerate(zip(frames0, frames1))
            if not np.array_equal(a.intensities, b.intensities)
        ),
        None,
    )
    rule = config.label_rule(interval)
    labels = lv.label_frames(len(frames0), defect, rule)
    first_labeled = labels.index("defective")
    assert first_visible is not None
    assert first_visible >= first_labeled - 1


def test_image_name_pattern():
    assert _image_name(3, 17) == "loc0003_frame0017.png"
