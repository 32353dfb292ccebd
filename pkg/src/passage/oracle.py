"""Ground truth that never touches sheets: nim-sum, the closed-form winner set and
exhaustive retrograde solving over a move-closed region."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .rules import Game, moves

P, N = "P", "N"

MAX_STATES = 20_000_000


def bouton_classify(x: int, y: int, z: int) -> str:
    return P if x ^ y ^ z == 0 else N


def pure_nim_winner_closed_form(x: int, y: int, z: int) -> bool:
    """``[x, y, z]`` has a pile-x move to a lower P-position iff ``y ^ z < x``."""
    return (y ^ z) < x


@dataclass
class OracleTable:
    """P/N classification of every position inside a move-closed bound.

    Nim bound ``B``: all ``x, y, z < B``.  Chomp bound ``S``: ``x + y + z <= S``.
    ``data[pass, x, y, z]`` is 1 for P, 0 for N (and for out-of-bound or
    invalid cells, which ``in_bound`` rejects).
    """

    game: Game
    with_pass: bool
    bound: int
    data: np.ndarray
    variants: frozenset = field(default_factory=frozenset)

    def in_bound(self, x, y, z) -> bool:
        if min(x, y, z) < 0:
            return False
        if self.game is Game.NIM3:
            return max(x, y, z) < self.bound
        return x + y + z <= self.bound and (x, y, z) != (0, 0, 0)

    def is_p(self, x, y, z, pass_bit=0) -> bool:
        if not self.in_bound(x, y, z):
            raise KeyError((x, y, z))
        if pass_bit and not self.with_pass:
            raise KeyError("table built without pass states")
        return bool(self.data[int(pass_bit), x, y, z])

    def classify(self, x, y, z, pass_bit=0) -> str:
        return P if self.is_p(x, y, z, pass_bit) else N

    def positions(self):
        n = self.data.shape[1]
        for pb in range(2 if self.with_pass else 1):
            for x in range(n):
                for y in range(n):
                    for z in range(n):
                        if self.in_bound(x, y, z):
                            yield x, y, z, pb

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "z", "pass", "class"])
            for x, y, z, pb in self.positions():
                w.writerow([x, y, z, pb, self.classify(x, y, z, pb)])


def brute_force(game, with_pass: bool = False, bound: int | None = None,
                variants=()) -> OracleTable:
    """Solve every in-bound position: P iff no child is P (terminals are P).

    ``variants`` lists ``(x, y, z)`` positions forced to N with no moves out
    (generic-game perturbations); they apply to pass-used states only.
    Positions are visited in increasing lexicographic ``(x, y, z)`` order,
    pass-used layer first; every move lands on an already-solved state.
    """
    game = Game.parse(game)
    if bound is None:
        bound = 48 if game is Game.NIM3 else 60
    n = bound if game is Game.NIM3 else bound + 1
    layers = 2 if with_pass else 1
    if layers * n ** 3 > MAX_STATES:
        raise ConfigError(f"bound {bound} exceeds the oracle state guard")
    variants = frozenset(tuple(v) for v in variants)
    data = np.zeros((2, n, n, n), dtype=np.uint8)
    table = OracleTable(game, with_pass, bound, data, variants)
    flat = bytearray(2 * n ** 3)
    sx, sy, sp = n * n, n, n ** 3
    for pb in range(layers):
        base = pb * sp
        for x in range(n):
            for y in range(n):
                for z in range(n):
                    if not table.in_bound(x, y, z):
                        continue
                    if pb == 0 and (x, y, z) in variants:
                        continue
                    is_p = 1
                    for cx, cy, cz, cp in moves(game, x, y, z, bool(pb)):
                        if flat[cp * sp + cx * sx + cy * sy + cz]:
                            is_p = 0
                            break
                    if is_p:
                        flat[base + x * sx + y * sy + z] = 1
    data[:] = np.frombuffer(bytes(flat), dtype=np.uint8).reshape(2, n, n, n)
    return table


def check_consistency(table: OracleTable) -> list[tuple]:
    """Positions violating the P/N definition; empty when the table is sound."""
    bad = []
    for x, y, z, pb in table.positions():
        if pb == 0 and (x, y, z) in table.variants:
            if table.is_p(x, y, z, 0):
                bad.append((x, y, z, pb))
            continue
        kids = list(moves(table.game, x, y, z, bool(pb)))
        child_p = any(table.is_p(cx, cy, cz, cp) for cx, cy, cz, cp in kids)
        if table.is_p(x, y, z, pb) == child_p:
            bad.append((x, y, z, pb))
    return bad


# --- engine vs oracle -------------------------------------------------------

@dataclass(frozen=True)
class Mismatch:
    kind: str
    x: int
    y: int
    z: int
    engine: int
    oracle: int

    def __str__(self):
        return f"{self.kind} x={self.x} y={self.y} z={self.z} engine={self.engine} oracle={self.oracle}"


def _exact_rows(run, x):
    if Game.parse(run.game) is Game.CHOMP3:
        return run.height - x
    return run.height


def _compare_sheet(kind, x, sheet, rows, truth, out):
    dense = sheet.to_dense()
    for y, z, expect in truth:
        if y < rows and z < sheet.width:
            got = int(dense[y, z])
            if got != expect:
                out.append(Mismatch(kind, x, y, z, got, expect))


def _table_cells(table, x, pass_bit):
    n = table.data.shape[1]
    for y in range(n):
        for z in range(n):
            if table.in_bound(x, y, z):
                yield y, z, int(table.data[pass_bit, x, y, z])


def diff(run, table: OracleTable) -> list[Mismatch]:
    """Compare a run's loser sheets with an oracle table on their common exact region."""
    game = Game.parse(run.game)
    if game is not table.game:
        raise ConfigError("run and oracle describe different games")
    pairs = {"pure": [("L", 0)], "pass": [("Lhat", 1), ("L", 0)],
             "generic": [("Ltilde", 0)]}[run.mode]
    if run.mode == "pass" and not table.with_pass:
        raise ConfigError("pass run needs a pass-bit oracle")
    top = min(run.levels_completed, table.data.shape[1])
    out: list[Mismatch] = []
    compared = 0
    for x in range(top):
        for kind, pb in pairs:
            sheet = run.sheet(kind, x)
            if sheet is None:
                continue
            rows = _exact_rows(run, x)
            if rows <= 0:
                continue
            _compare_sheet(kind, x, sheet, rows, _table_cells(table, x, pb), out)
            compared += 1
    if not compared:
        raise ConfigError("run and oracle share no exact region")
    return out


def diff_bouton(run) -> list[Mismatch]:
    """Pure-Nim loser sheets against the nim-sum rule on every cell."""
    kind = {"pure": "L", "pass": "L"}.get(run.mode)
    if Game.parse(run.game) is not Game.NIM3 or kind is None:
        raise ConfigError("bouton oracle applies to pure Nim sheets only")
    out = []
    for x in range(run.levels_completed):
        s = run.sheet(kind, x)
        if s is None:
            continue
        y, z = np.indices((s.height, s.width))
        truth = (x ^ y ^ z) == 0
        for yy, zz in zip(*np.nonzero(s.to_dense() != truth)):
            out.append(Mismatch(kind, x, int(yy), int(zz), int(not truth[yy, zz]), int(truth[yy, zz])))
    return out


def diff_closed_form(run) -> list[Mismatch]:
    """Pure-Nim winner sheets against ``y ^ z < x``."""
    if Game.parse(run.game) is not Game.NIM3 or run.mode not in ("pure", "pass"):
        raise ConfigError("closed-form oracle applies to pure Nim sheets only")
    out = []
    for x in range(run.levels_completed):
        s = run.sheet("W", x)
        if s is None:
            continue
        y, z = np.indices((s.height, s.width))
        truth = (y ^ z) < x
        for yy, zz in zip(*np.nonzero(s.to_dense() != truth)):
            out.append(Mismatch("W", x, int(yy), int(zz), int(not truth[yy, zz]), int(truth[yy, zz])))
    return out
