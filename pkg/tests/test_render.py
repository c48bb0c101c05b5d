import math

import numpy as np
import pytest

from amfc.julia import classify_connectedness
from amfc.probs import ProbabilitySequence
from amfc.render import (Raster, RenderConfig, count_components, default_config, is_simply_connected,
                         pgm_bytes, render, to_E, write_levels_csv, write_pgm)
from amfc.spectrum import escape_levels
from conftest import TWO_ESCAPES, NEAR_ONE_IID


def test_config_validation():
    with pytest.raises(ValueError):
        RenderConfig(0j, 0.0, 1.0)
    with pytest.raises(ValueError):
        RenderConfig(0j, 1.0, 1.0, pixels_x=0)
    with pytest.raises(ValueError):
        RenderConfig(0j, 1.0, 1.0, coords="Z")


def test_letterbox_keeps_pixels_square():
    cfg = RenderConfig(1 + 1j, 4.0, 1.0, 100, 100)
    x0, x1, y0, y1 = cfg.extent
    assert x1 - x0 == pytest.approx(4.0) and y1 - y0 == pytest.approx(4.0)
    g = cfg.grid()
    assert g.shape == (100, 100)
    assert np.allclose(np.diff(g.real, axis=1), cfg.pixel_size)
    assert np.allclose(np.diff(g.imag, axis=0), -cfg.pixel_size)
    assert g[0, 0].imag > g[-1, 0].imag


def test_unit_disk_area():
    p = ProbabilitySequence.constant(2, 1.0)
    r = render(RenderConfig(0j, 3.0, 3.0, 512, 512, 64), p)
    assert abs(r.inside_fraction() / (math.pi / 9) - 1) < 0.02


def test_pgm_format():
    cfg = RenderConfig(0j, 1.0, 1.0, 2, 2, 64)
    raster = Raster(np.array([[0, 64], [64, 0]], dtype=np.int32), cfg)
    assert pgm_bytes(raster) == b"P5\n2 2\n255\n\x00\xff\xff\x00"


def test_pgm_scaling_above_255():
    cfg = RenderConfig(0j, 1.0, 1.0, 3, 1, 1000)
    raster = Raster(np.array([[0, 255, 1000]], dtype=np.int32), cfg)
    assert pgm_bytes(raster).endswith(b"\x00\xff\xff")


def test_pgm_deterministic_and_sized(tmp_path):
    cfg = default_config(TWO_ESCAPES, 512, 64)
    a = write_pgm(render(cfg, TWO_ESCAPES), tmp_path / "a.pgm").read_bytes()
    b = write_pgm(render(cfg, TWO_ESCAPES), tmp_path / "b.pgm").read_bytes()
    assert a == b
    assert len(a) == len(b"P5\n512 512\n255\n") + 512 * 512


def test_levels_csv(tmp_path):
    p = ProbabilitySequence.constant(2, 0.8)
    r = render(RenderConfig(0.2 + 0j, 2.0, 2.0, 4, 3, 16), p)
    lines = write_levels_csv(r, tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == "i,j,re,im,level" and len(lines) == 13
    assert int(lines[1].split(",")[-1]) == r.levels[0, 0]


def test_budget_monotone():
    p = ProbabilitySequence.from_prefix(3, [0.75, 2 / 3], 0.75)
    prev = None
    for L in (4, 16, 64, 256):
        inside = render(default_config(p, 128, L), p).inside
        if prev is not None:
            assert not (inside & ~prev).any()
        prev = inside


def test_E_and_K_coordinates_agree():
    p = ProbabilitySequence.from_prefix(2, [0.7, 0.6], 0.8)
    k = render(default_config(p, 96, 128, coords="K"), p)
    pts_E = to_E(k.config.grid(), p)
    assert (escape_levels(pts_E, p, 128, "E") == 0).tolist() == k.inside.tolist()


def test_components_and_holes():
    ring = np.zeros((9, 9), dtype=bool)
    ring[2:7, 2:7] = True
    assert count_components(ring)[0] == 1 and is_simply_connected(ring)
    ring[4, 4] = False
    assert not is_simply_connected(ring)
    two = np.zeros((5, 5), dtype=bool)
    two[1, 1] = two[2, 2] = True  # diagonal neighbours are separate under 4-connectivity
    assert count_components(two)[0] == 2


def test_two_escapes_raster_has_nine_pieces():
    r = render(default_config(TWO_ESCAPES, 512, 256), TWO_ESCAPES)
    n, sizes = count_components(r.inside)
    assert n == classify_connectedness(TWO_ESCAPES).count == 9
    assert sizes.min() > 1000


def test_pullback_count_matches_raster_for_even_degree():
    # an escaping innermost level under a bounded outer one gives 3 pieces, not a power of 2
    p = ProbabilitySequence.from_prefix(2, [0.75, 0.625, 0.4], 0.75)
    v = classify_connectedness(p)
    assert (v.kind, v.count) == ("ComponentsExactly", 3)
    r = render(default_config(p, 512, 256), p)
    n, sizes = count_components(r.inside)
    assert n == 3 and sizes.min() > 500


def test_near_one_iid_is_simply_connected():
    r = render(default_config(NEAR_ONE_IID, 256, 256), NEAR_ONE_IID)
    assert is_simply_connected(r.inside)
