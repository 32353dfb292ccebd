import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from passage import engine
from passage.bitgrid import Sheet
from passage.engine import (Combined, ExplicitPoints, MemoryRun, NoVariants, PassWinnerVariants,
                            PerColumnNormal, RunConfig, gen_variant_sheet, iterate, load_run,
                            read_variant_file, run, source_from_json, state_from_run)
from passage.errors import ConfigError, IntegrityError


# --- RNG ------------------------------------------------------------------------

def test_splitmix64_reference_vector():
    # published first outputs for state 0
    s, a = engine.splitmix64(0)
    _, b = engine.splitmix64(s)
    assert (a, b) == (0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4)


@given(st.integers(0, 2 ** 64 - 1), st.integers(1, 40))
def test_block_matches_scalar(state, n):
    block = engine.splitmix64_block(state, n)
    s = state
    for i in range(n):
        s, out = engine.splitmix64(s)
        assert int(block[i]) == out


def test_normal_draws_are_standard():
    d = engine.normal_draws(7, 3, 200_000)
    assert abs(d.mean()) < 0.01 and abs(d.std() - 1) < 0.01
    assert np.array_equal(d, engine.normal_draws(7, 3, 200_000))
    assert not np.array_equal(d[:10], engine.normal_draws(7, 4, 10))


# --- variant sources -------------------------------------------------------------

def test_sigma_zero_is_diagonal():
    s = PerColumnNormal(0.0, 1).sheet(0, 10, 10)
    assert s.cells() == [(y, y) for y in range(10)]


def test_normal_variants_one_per_row_clamped():
    s = PerColumnNormal(50.0, 3).sheet(2, 20, 16)
    assert (s.row_counts() == 1).all()
    with pytest.raises(ConfigError):
        PerColumnNormal(-1.0)


def test_explicit_points():
    src = ExplicitPoints([(9, 13, 4)])
    assert gen_variant_sheet(9, src, 32, 32).cells() == [(13, 4)]
    assert gen_variant_sheet(8, src, 32, 32).count() == 0
    both = Combined((src, ExplicitPoints([(9, 0, 0)])))
    assert gen_variant_sheet(9, both, 32, 32).cells() == [(0, 0), (13, 4)]


def test_pass_winner_source_is_stateful():
    with pytest.raises(ConfigError):
        gen_variant_sheet(0, PassWinnerVariants(), 4, 4)
    first = next(PassWinnerVariants().stream(engine.Game.NIM3, 4, 4))
    assert first.cells() == [(1, 1), (2, 2), (3, 3)]


@pytest.mark.parametrize("src", [NoVariants(), ExplicitPoints([(1, 2, 3)]), PerColumnNormal(2.5, 9),
                                 PassWinnerVariants(),
                                 Combined((ExplicitPoints([(0, 0, 1)]), PerColumnNormal(1.0, 2)))])
def test_source_json_roundtrip(src):
    assert source_from_json(json.loads(json.dumps(src.to_json()))) == src


def test_read_variant_file(tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("x,y,z\n# note\n9,13,4\n\n1,0,2\n")
    assert read_variant_file(p).points == ((1, 0, 2), (9, 13, 4))
    p.write_text("1,2\n")
    with pytest.raises(ConfigError):
        read_variant_file(p)
    p.write_text("1,-2,3\n")
    with pytest.raises(ConfigError):
        read_variant_file(p)


# --- configuration ---------------------------------------------------------------

def test_config_defaults_and_validation():
    c = RunConfig("chomp", "pass", 10)
    assert (c.width, c.height, c.allocated_height) == (104, 52, 62)
    assert c.emit == ("W", "L", "What", "Lhat")
    with pytest.raises(ConfigError):
        RunConfig("nim", "pure", 0)
    with pytest.raises(ConfigError):
        RunConfig("nim", "pure", 3, variants=ExplicitPoints([(0, 0, 0)]))
    with pytest.raises(ConfigError):
        RunConfig("nim", "pure", 3, emit=("Lhat",))
    with pytest.raises(ConfigError):
        RunConfig("nim", "sideways", 3)


# --- persistence -----------------------------------------------------------------

def test_run_and_load_roundtrip(tmp_path):
    cfg = RunConfig("nim", "pass", 12, 16, 64)
    m = run(cfg, tmp_path)
    assert m.ok and m.levels_completed == 12 and len(m.files) == 48
    loaded = load_run(tmp_path)
    mem = MemoryRun(cfg)
    for x in range(12):
        for kind in cfg.emit:
            assert loaded.sheet(kind, x) == mem.sheet(kind, x)
    loaded.verify()
    assert loaded.config().to_json() == cfg.to_json()


def test_tampered_file_raises_integrity(tmp_path):
    run(RunConfig("nim", "pure", 4, 8, 16), tmp_path)
    f = tmp_path / "L_000002.sht"
    data = bytearray(f.read_bytes())
    data[-1] ^= 0x01
    f.write_bytes(bytes(data))
    with pytest.raises(IntegrityError, match="L_000002.sht"):
        load_run(tmp_path).sheet("L", 2)
    f.unlink()
    with pytest.raises(IntegrityError):
        load_run(tmp_path).verify()


def test_missing_kind_is_absent(tmp_path):
    run(RunConfig("nim", "pass", 3, emit=("What", "Lhat")), tmp_path)
    loaded = load_run(tmp_path)
    assert loaded.sheet("W", 1) is None and not loaded.has("W", 1)
    assert loaded.sheet("Lhat", 1) is not None


def test_missing_manifest(tmp_path):
    with pytest.raises(ConfigError):
        load_run(tmp_path)


def test_runs_are_byte_deterministic(tmp_path):
    cfg = RunConfig("nim", "generic", 20, variants=PerColumnNormal(1.5, 42))
    a, b = run(cfg, tmp_path / "a"), run(cfg, tmp_path / "b")
    assert a.checksums == b.checksums
    assert (tmp_path / "a/manifest.json").read_bytes() == (tmp_path / "b/manifest.json").read_bytes()
    c = run(RunConfig("nim", "generic", 20, variants=PerColumnNormal(1.5, 43)), tmp_path / "c")
    assert c.checksums != a.checksums


@pytest.mark.parametrize("game, mode", [("nim", "pure"), ("nim", "pass"), ("chomp", "pass"),
                                        ("chomp", "generic")])
def test_restart_from_persisted_state(tmp_path, game, mode):
    variants = PerColumnNormal(1.0, 5) if mode == "generic" else NoVariants()
    cfg = RunConfig(game, mode, 16, 20, 96, variants)
    full = run(cfg, tmp_path / "full")
    state = state_from_run(load_run(tmp_path / "full"), 8)
    part = run(cfg, tmp_path / "part", state=state)
    assert part.levels_completed == 16
    idx = full.files.index(part.files[0])
    assert full.checksums[idx:] == part.checksums


def test_generic_zero_variants_equals_pure():
    a = MemoryRun(RunConfig("nim", "pure", 50))
    b = MemoryRun(RunConfig("nim", "generic", 50, variants=ExplicitPoints(())))
    for x in range(50):
        assert a.sheet("L", x) == b.sheet("Ltilde", x)
        assert a.sheet("W", x) == b.sheet("Wtilde", x)


def test_chomp_exact_window_independent_of_height():
    small = MemoryRun(RunConfig("chomp", "pure", 20, 10, 120))
    big = MemoryRun(RunConfig("chomp", "pure", 20, 30, 120))
    for x in range(20):
        rows = engine.exact_window(small, x)
        assert rows == 10 + 20 - x
        assert (small.sheet("L", x).to_dense()[:rows] == big.sheet("L", x).to_dense()[:rows]).all()


def test_overflow_recorded_in_manifest(tmp_path):
    m = run(RunConfig("chomp", "pass", 10, width=8), tmp_path)
    assert m.status == "overflow" and not m.ok
    assert m.failed_level == 9 and m.failed_row == 0
    assert m.levels_completed == 9
    loaded = load_run(tmp_path)
    assert loaded.sheet("Lhat", 8) is not None and loaded.sheet("Lhat", 9) is None


def test_iterate_is_streaming():
    it = iterate(RunConfig("nim", "pure", 1000, 64, 4064))
    first = next(it)
    assert set(first) == {"W", "L", "_state"}
    assert first["_state"].level == 1
