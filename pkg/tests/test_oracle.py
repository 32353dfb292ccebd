import csv

import pytest
from hypothesis import given, strategies as st

from passage import oracle
from passage.engine import MemoryRun, RunConfig
from passage.errors import ConfigError
from passage.rules import Game, moves


@pytest.fixture(scope="module")
def nim_pass8():
    return oracle.brute_force("nim", with_pass=True, bound=8)


@pytest.fixture(scope="module")
def chomp_pass12():
    return oracle.brute_force("chomp", with_pass=True, bound=12)


@pytest.mark.parametrize("pos, cls", [((9, 13, 4), "P"), ((7, 4, 3), "P"), ((1, 1, 1), "N")])
def test_bouton_examples(pos, cls):
    assert oracle.bouton_classify(*pos) == cls


def test_closed_form_examples():
    assert oracle.pure_nim_winner_closed_form(1, 0, 0)
    assert oracle.pure_nim_winner_closed_form(2, 1, 1)
    assert not oracle.pure_nim_winner_closed_form(2, 0, 2)
    assert not any(oracle.pure_nim_winner_closed_form(0, y, z) for y in range(9) for z in range(9))


@given(st.integers(0, 200), st.integers(0, 200), st.integers(0, 200))
def test_closed_form_is_union_of_lower_bouton_levels(x, y, z):
    want = any(oracle.bouton_classify(k, y, z) == "P" for k in range(x))
    assert oracle.pure_nim_winner_closed_form(x, y, z) == want


def test_brute_force_terminals(nim_pass8, chomp_pass12):
    assert nim_pass8.classify(0, 0, 0, 0) == "P"
    assert nim_pass8.classify(0, 0, 0, 1) == "P"
    assert nim_pass8.classify(1, 1, 1, 1) == "P"
    assert chomp_pass12.classify(0, 0, 1, 0) == "P"


def test_pure_nim_table_is_bouton():
    t = oracle.brute_force("nim", bound=16)
    for x, y, z, _ in t.positions():
        assert t.classify(x, y, z) == oracle.bouton_classify(x, y, z)


def test_tables_are_consistent(nim_pass8, chomp_pass12):
    assert oracle.check_consistency(nim_pass8) == []
    assert oracle.check_consistency(chomp_pass12) == []
    assert oracle.check_consistency(oracle.brute_force("chomp", bound=10, variants=[(1, 0, 2)])) == []


def test_pass_layer0_equals_no_pass_table(nim_pass8, chomp_pass12):
    for table in (nim_pass8, chomp_pass12):
        plain = oracle.brute_force(table.game, bound=table.bound)
        assert (table.data[0] == plain.data[0]).all()


def test_p_without_pass_is_n_with_pass(nim_pass8, chomp_pass12):
    for t in (nim_pass8, chomp_pass12):
        term = (0, 0, 0) if t.game is Game.NIM3 else (0, 0, 1)
        for x, y, z, pb in t.positions():
            if pb == 0 and t.is_p(x, y, z) and (x, y, z) != term:
                assert not t.is_p(x, y, z, 1)


def test_bounds_are_move_closed():
    for game, t in (("nim", oracle.brute_force("nim", bound=5)),
                    ("chomp", oracle.brute_force("chomp", bound=7))):
        for x, y, z, pb in t.positions():
            for c in moves(Game.parse(game), x, y, z, True):
                assert t.in_bound(*c[:3])


def test_state_guard():
    with pytest.raises(ConfigError):
        oracle.brute_force("nim", with_pass=True, bound=400)


def test_pass_bit_query_without_pass_table():
    t = oracle.brute_force("nim", bound=4)
    with pytest.raises(KeyError):
        t.is_p(1, 1, 1, 1)
    with pytest.raises(KeyError):
        t.is_p(4, 0, 0)


def test_diff_pure_nim_empty_and_fault_injection():
    run = MemoryRun(RunConfig("nim", "pure", 16, 16, 64))
    table = oracle.brute_force("nim", bound=16)
    assert oracle.diff(run, table) == []
    assert oracle.diff_bouton(run) == []
    assert oracle.diff_closed_form(run) == []
    s = run.sheet("L", 5)
    s.words[3, 0] ^= 1 << 7
    out = oracle.diff(run, table)
    assert [(m.kind, m.x, m.y, m.z) for m in out] == [("L", 5, 3, 7)]
    assert [(m.x, m.y, m.z) for m in oracle.diff_bouton(run)] == [(5, 3, 7)]


def test_diff_pass_chomp(chomp_pass12):
    run = MemoryRun(RunConfig("chomp", "pass", 12, 14, 40))
    assert oracle.diff(run, chomp_pass12) == []


def test_diff_rejects_wrong_game_or_table(chomp_pass12):
    run = MemoryRun(RunConfig("nim", "pass", 4, 8, 16))
    with pytest.raises(ConfigError):
        oracle.diff(run, chomp_pass12)
    with pytest.raises(ConfigError):
        oracle.diff(run, oracle.brute_force("nim", bound=4))
    with pytest.raises(ConfigError):
        oracle.diff_bouton(MemoryRun(RunConfig("chomp", "pure", 4)))


def test_dump_csv(tmp_path):
    t = oracle.brute_force("nim", bound=2)
    t.dump_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["x", "y", "z", "pass", "class"]
    assert len(rows) == 1 + 8
    assert rows[1] == ["0", "0", "0", "0", "P"]
