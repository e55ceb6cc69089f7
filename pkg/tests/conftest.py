import pytest

import luvtsim as lv

SMALL_TOML = """
[geometry]
width_mm = 40.0
depth_mm = 20.0

[grid]
dx_mm = 0.4

[dataset]
n_frames = 10
n_locations = 2
margin_mm = 3.0
"""


@pytest.fixture
def small_config():
    """Coarse 40 x 20 mm configuration for fast end-to-end runs."""
    return lv.parse_config(SMALL_TOML)


@pytest.fixture
def small_field(small_config):
    return small_config.build_field()


@pytest.fixture
def aluminum_field():
    geometry = lv.SpecimenGeometry(
        width=0.020, depth=0.010, view_region=lv.Rect(0.005, 0.0, 0.010, 0.010)
    )
    return lv.rasterize_specimen(geometry, lv.MaterialSpec(), dx=0.5e-3)
