"""Game rules for 3-pile Nim and 3-row Chomp, supermex operators and single-level steps.

Positions are ``[x, y, z; pass]`` with ``x`` the sheet level.  Nim coordinates
are pile sizes.  Chomp coordinates are row-length differences: top row ``x``,
middle row ``x + y``, bottom row ``x + y + z``; ``[0, 0, 1]`` (poison only)
is terminal and ``[0, 0, 0]`` is not a position.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator

import numpy as np

from . import kernels
from .bitgrid import Sheet, sheet_add, sheet_diag_add, sheet_left_shift
from .errors import ConfigError, DominatedLevel, SheetOverflow


class Game(IntEnum):
    NIM3 = 0
    CHOMP3 = 1

    @classmethod
    def parse(cls, name) -> "Game":
        if isinstance(name, Game):
            return name
        key = str(name).lower()
        if key in ("nim", "nim3"):
            return cls.NIM3
        if key in ("chomp", "chomp3"):
            return cls.CHOMP3
        raise ConfigError(f"unknown game {name!r}")

    @property
    def label(self) -> str:
        return "nim" if self is Game.NIM3 else "chomp"


@dataclass(frozen=True, order=True)
class Position:
    game: Game
    x: int
    y: int
    z: int
    pass_available: bool = False

    @property
    def coords(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.z)

    def is_valid(self) -> bool:
        if min(self.x, self.y, self.z) < 0:
            return False
        return self.game is Game.NIM3 or self.coords != (0, 0, 0)

    def is_terminal(self) -> bool:
        return self.coords == terminal_coords(self.game)


def terminal_coords(game: Game) -> tuple[int, int, int]:
    return (0, 0, 0) if game is Game.NIM3 else (0, 0, 1)


def terminal_cell(game: Game, level: int) -> tuple[int, int] | None:
    t = terminal_coords(game)
    return (t[1], t[2]) if level == t[0] else None


def moves(game: Game, x: int, y: int, z: int, pass_available: bool = False,
          with_pass_rules: bool = True) -> Iterator[tuple[int, int, int, bool]]:
    """Yield child coordinates ``(x, y, z, pass)`` of a valid position."""
    p = pass_available
    if game is Game.NIM3:
        for t in range(1, z + 1):
            yield x, y, z - t, p
        for t in range(1, y + 1):
            yield x, y - t, z, p
        for t in range(1, x + 1):
            yield x - t, y, z, p
        if p and with_pass_rules and (x, y, z) != (0, 0, 0):
            yield x, y, z, False
        return
    nonempty_below = x > 0 or y > 0
    for t in range(1, z + 1):
        if nonempty_below or t < z:
            yield x, y, z - t, p
    for t in range(1, y + 1):
        yield x, y - t, z + t, p
    for t in range(1, y + 1):
        if x > 0 or t < y:
            yield x, y - t, 0, p
    for t in range(1, x + 1):
        yield x - t, y + t, z, p
    for t in range(1, x + 1):
        yield x - t, 0, z + y + t, p
    for t in range(1, x):
        yield x - t, 0, 0, p
    if p and with_pass_rules and (x, y, z) != (0, 0, 1):
        yield x, y, z, False


def children(p: Position, with_pass_rules: bool = True) -> list[Position]:
    if not p.is_valid():
        raise ConfigError(f"invalid position {p}")
    return [Position(p.game, *c) for c in moves(p.game, p.x, p.y, p.z,
                                                  p.pass_available, with_pass_rules)]


def within_sheet_parents(game: Game, y: int, z: int, height: int, width: int,
                         level: int = 1) -> set[tuple[int, int]]:
    """Cells on the same sheet (inside the truncation) with a move onto ``(y, z)``."""
    out = set()
    for zz in range(z + 1, width):
        out.add((y, zz))
    if game is Game.NIM3:
        out.update((yy, z) for yy in range(y + 1, height))
        return out
    for t in range(1, min(z, height - 1 - y) + 1):
        if z - t < width:
            out.add((y + t, z - t))
    if z == 0:
        out.update((yy, zz) for yy in range(y + 1, height) for zz in range(width))
    if level == 0:
        out.discard((0, 0))
    return out


@dataclass(frozen=True)
class GameSpec:
    game: Game

    def children(self, p: Position, with_pass_rules: bool = True) -> list[Position]:
        return children(p, with_pass_rules)

    def within_sheet_parents(self, y, z, height, width, level=1):
        return within_sheet_parents(self.game, y, z, height, width, level)

    def terminal_cell(self, level: int):
        return terminal_cell(self.game, level)


NIM3 = GameSpec(Game.NIM3)
CHOMP3 = GameSpec(Game.CHOMP3)


# --- supermex ---------------------------------------------------------------

def supermex_rows(game: Game, premarked: Sheet, level: int = 0,
                  rows: int | None = None) -> np.ndarray:
    """P-cell column per row (``-1`` where a row has none).

    ``rows`` limits the scan to the first rows of the sheet; the rest get -1.
    """
    words = premarked.words if rows is None else premarked.words[:max(rows, 0)]
    if game is Game.NIM3:
        zs, fail = kernels.nim_supermex_rows(words, premarked.width)
    else:
        zs, fail = kernels.chomp_supermex_rows(words, premarked.width, level)
    if fail >= 0:
        raise SheetOverflow(int(fail), level)
    if len(zs) < premarked.height:
        zs = np.concatenate([zs, np.full(premarked.height - len(zs), -1, dtype=np.int64)])
    return zs


def nim_supermex(premarked: Sheet) -> Sheet:
    zs = supermex_rows(Game.NIM3, premarked)
    return Sheet.from_row_z(premarked.height, premarked.width, zs)


def chomp_supermex(premarked: Sheet, level: int, rows: int | None = None) -> Sheet:
    zs = supermex_rows(Game.CHOMP3, premarked, level, rows)
    return Sheet.from_row_z(premarked.height, premarked.width, zs)


def supermex(game: Game, premarked: Sheet, level: int = 0) -> Sheet:
    if game is Game.NIM3:
        return nim_supermex(premarked)
    return chomp_supermex(premarked, level)


def pass_winners(game: Game, pure_losers: Sheet, level: int) -> Sheet:
    """Positions ``[x,y,z;1]`` whose no-pass twin is P; the terminal cannot pass."""
    cell = terminal_cell(game, level)
    if cell is None or cell[0] >= pure_losers.height or cell[1] >= pure_losers.width:
        return pure_losers
    out = pure_losers.copy()
    y, z = cell
    out.words[y, z >> 6] &= ~np.uint64(1 << (z & 63))
    return out


# --- single-level recursion steps ------------------------------------------

def nim_step_generic(w: Sheet, v: Sheet) -> tuple[Sheet, Sheet]:
    losers = nim_supermex(sheet_add(w, v))
    return sheet_add(w, losers), losers


def nim_step_pure(w: Sheet) -> tuple[Sheet, Sheet]:
    losers = nim_supermex(w)
    return sheet_add(w, losers), losers


def nim_step_pass(w_hat: Sheet, pure_losers: Sheet, level: int) -> tuple[Sheet, Sheet]:
    return nim_step_generic(w_hat, pass_winners(Game.NIM3, pure_losers, level))


def chomp_advance(w: Sheet, losers: Sheet, level: int) -> Sheet:
    """Next winner sheet: left-shift of ``w`` plus the diagonal-added losers.

    The shift/diagonal form covers moves M4 and M5 only.  Move M6 reaches
    ``[x, 0, 0]`` from every higher level, so a P-cell there would make the
    whole game above it N; that case is refused rather than mis-computed.
    """
    if level > 0 and losers.get(0, 0):
        raise DominatedLevel(level)
    return sheet_left_shift(sheet_add(w, sheet_diag_add(losers)))


def chomp_step_generic(w: Sheet, v: Sheet, level: int,
                       rows: int | None = None) -> tuple[Sheet, Sheet]:
    losers = chomp_supermex(sheet_add(w, v), level, rows)
    return chomp_advance(w, losers, level), losers


def chomp_step_pure(w: Sheet, level: int, rows: int | None = None) -> tuple[Sheet, Sheet]:
    losers = chomp_supermex(w, level, rows)
    return chomp_advance(w, losers, level), losers


def chomp_step_pass(w_hat: Sheet, pure_losers: Sheet, level: int,
                    rows: int | None = None) -> tuple[Sheet, Sheet]:
    pw = pass_winners(Game.CHOMP3, pure_losers, level)
    return chomp_step_generic(w_hat, pw, level, rows)


def exact_rows(game: Game, height: int, level: int) -> int:
    """Rows of a level-``level`` sheet that do not depend on the truncation height."""
    return height if game is Game.NIM3 else height - level


def step_generic(game: Game, w: Sheet, v: Sheet, level: int) -> tuple[Sheet, Sheet]:
    if game is Game.NIM3:
        return nim_step_generic(w, v)
    return chomp_step_generic(w, v, level, exact_rows(game, w.height, level))


def step_pure(game: Game, w: Sheet, level: int) -> tuple[Sheet, Sheet]:
    if game is Game.NIM3:
        return nim_step_pure(w)
    return chomp_step_pure(w, level, exact_rows(game, w.height, level))


def step_pass(game: Game, w_hat: Sheet, pure_losers: Sheet, level: int) -> tuple[Sheet, Sheet]:
    if game is Game.NIM3:
        return nim_step_pass(w_hat, pure_losers, level)
    return chomp_step_pass(w_hat, pure_losers, level, exact_rows(game, w_hat.height, level))
