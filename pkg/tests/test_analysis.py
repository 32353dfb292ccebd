import math

import numpy as np
import pytest

from passage import analysis
from passage.bitgrid import Sheet, sheet_full, sheet_new
from passage.engine import MemoryRun, RunConfig
from passage.errors import ConfigError
from passage.rules import Game, nim_step_pure


def test_curve_csv_format(tmp_path):
    c = analysis.CurveSeries([0, 1, 2], [1.0, 0.5, 1 / 3])
    assert c.to_csv() == "x,value\n0,1.000000\n1,0.500000\n2,0.333333\n"
    c.write_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_bytes() == c.to_csv().encode()
    assert c.mean(1, 2) == pytest.approx((0.5 + 1 / 3) / 2)
    with pytest.raises(ConfigError):
        c.mean(5, 9)


def test_curve_validation():
    with pytest.raises(ConfigError):
        analysis.CurveSeries([1, 1], [0.0, 0.0])
    with pytest.raises(ConfigError):
        analysis.CurveSeries([1], [math.nan])


def test_overlap_level0_row1_disagrees():
    run = MemoryRun(RunConfig("nim", "pass", 4, 16, 64))
    w_hat, l_hat = run.sheet("What", 0), run.sheet("Lhat", 0)
    with_pass = analysis.row_z(l_hat)
    without = analysis.supermex_rows(Game.NIM3, w_hat)
    assert with_pass[1] == 2 and without[1] == 1
    assert analysis.overlap_at(Game.NIM3, w_hat, l_hat, 0, 16) < 1.0


def test_overlap_is_one_when_nothing_added():
    w, _ = nim_step_pure(sheet_new(8, 32))
    l = Sheet.from_row_z(8, 32, analysis.supermex_rows(Game.NIM3, w))
    assert analysis.overlap_at(Game.NIM3, w, l, 3, 8) == 1.0


def test_overlap_curve_range_and_streaming_agree():
    cfg = RunConfig("nim", "pass", 30)
    a = analysis.overlap_curve(MemoryRun(cfg))
    b = analysis.overlap_curve_config(cfg)
    assert a.xs == b.xs == list(range(30))
    assert a.values == b.values
    assert all(0.0 <= v <= 1.0 for v in a.values)
    with pytest.raises(ConfigError):
        analysis.overlap_curve(MemoryRun(RunConfig("nim", "pure", 3)))


def test_sensitivity_is_causal():
    base = RunConfig("nim", "generic", 30, emit=("Ltilde",))
    c = analysis.sensitivity_curve(base, 12)
    assert c.values[:12] == [0.0] * 12
    assert c.values[12] > 0
    assert c.meta["perturbation"][:2] == [12, 6]


def test_sensitivity_errors():
    base = RunConfig("nim", "generic", 10, emit=("Ltilde",))
    with pytest.raises(ConfigError):
        analysis.sensitivity_curve(base, 10)
    with pytest.raises(ConfigError):
        analysis.sensitivity_curve(base, 3, perturb_row=10_000)
    with pytest.raises(ConfigError):
        analysis.sensitivity_curve(RunConfig("nim", "pure", 10), 3)


def test_density_grid_examples():
    g = analysis.density_grid(sheet_full(64, 96), k=32)
    assert g.mean() == 1.0 and g.values.shape == (32, 32)
    assert analysis.density_grid(sheet_new(64, 64), k=32).values.sum() == 0
    rng = np.random.default_rng(1)
    s = Sheet.from_dense(rng.random((64, 64)) < 0.3)
    assert analysis.density_grid(s, k=32).mean() == pytest.approx(s.count() / 64 ** 2)
    assert analysis.density_grid(s, (0, 0, 64, 40), k=32).region == (0, 0, 64, 32)
    with pytest.raises(ConfigError):
        analysis.density_grid(s, (0, 0, 20, 20), k=32)
    with pytest.raises(ConfigError):
        analysis.density_grid(s, (0, 0, 80, 20), k=4)


def test_density_of_closed_form_winners():
    x = 64
    run = MemoryRun(RunConfig("nim", "pure", x + 1, 128, 128), keep=("W",))
    g = analysis.density_grid(run.sheet("W", x), (0, 0, x, x), k=32)
    y, z = np.indices((x, x))
    assert g.mean() == pytest.approx(((y ^ z) < x).mean())


def test_pearson():
    assert math.isnan(analysis.pearson([1, 1, 1], [1, 2, 3]))
    assert analysis.pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert analysis.pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_similarity_self_is_one():
    run = MemoryRun(RunConfig("nim", "pass", 41), keep=("What",))
    assert analysis.scale_similarity(run, 40, 40) == pytest.approx(1.0)
    assert analysis.geometry_correlation(run, run, 40) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        analysis.scale_similarity(run, 40)  # level 80 missing


def test_geometry_requires_same_game():
    a = MemoryRun(RunConfig("nim", "pure", 3))
    b = MemoryRun(RunConfig("chomp", "pure", 3))
    with pytest.raises(ConfigError):
        analysis.geometry_correlation(a, b, 2)


def test_render_orientation_and_compositing(tmp_path):
    assert (analysis.render_array(sheet_new(3, 3)) == 255).all()
    img = analysis.render_array(Sheet.from_cells(3, 4, [(0, 0)]))
    assert img[2, 0] == 128 and (img == 255).sum() == 11
    both = analysis.render_array(Sheet.from_cells(2, 2, [(0, 0), (1, 1)]),
                                 Sheet.from_cells(2, 2, [(1, 1)]))
    assert both.tolist() == [[255, 0], [128, 255]]
    analysis.render(tmp_path / "a.pgm", Sheet.from_cells(2, 3, [(0, 0)]))
    assert (tmp_path / "a.pgm").read_bytes() == b"P5\n3 2\n255\n" + bytes([255] * 3 + [128, 255, 255])
    with pytest.raises(ConfigError):
        analysis.render_array()
    with pytest.raises(ConfigError):
        analysis.render_array(sheet_new(2, 2), sheet_new(3, 2))


def test_render_closed_form_w85():
    run = MemoryRun(RunConfig("nim", "pure", 86, 128, 128), keep=("W",))
    img = analysis.render_array(run.sheet("W", 85))[::-1]
    y, z = np.indices((128, 128))
    assert ((img == 128) == ((y ^ z) < 85)).all()
