"""Experiments over computed runs: overlap and sensitivity curves, block-density
similarity, and PGM rendering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bitgrid import Sheet, atomic_write_bytes
from .engine import (Combined, ExplicitPoints, RunConfig, exact_window, iterate)
from .errors import ConfigError
from .rules import Game, exact_rows, supermex_rows

WINNER_KIND = {"pure": "W", "pass": "What", "generic": "Wtilde"}
LOSER_KIND = {"pure": "L", "pass": "Lhat", "generic": "Ltilde"}


@dataclass
class CurveSeries:
    xs: list
    values: list
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ConfigError("curve levels must be strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise ConfigError("curve values must be finite")

    def value_at(self, x):
        return self.values[self.xs.index(x)]

    def mean(self, lo, hi):
        """Mean over levels ``lo <= x <= hi``."""
        vals = [v for x, v in zip(self.xs, self.values) if lo <= x <= hi]
        if not vals:
            raise ConfigError(f"no levels in [{lo}, {hi}]")
        return sum(vals) / len(vals)

    def to_csv(self) -> str:
        lines = ["x,value"] + [f"{x},{v:.6f}" for x, v in zip(self.xs, self.values)]
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        atomic_write_bytes(path, self.to_csv().encode("utf-8"))


def row_z(sheet: Sheet) -> np.ndarray:
    """Column of the first set cell in each row, ``-1`` for empty rows."""
    dense = sheet.to_dense()
    z = dense.argmax(axis=1).astype(np.int64)
    z[~dense.any(axis=1)] = -1
    return z


# --- overlap (degree of perturbation) ---------------------------------------

def overlap_at(game: Game, w_hat: Sheet, l_hat: Sheet, level: int, rows: int) -> float:
    with_pass = row_z(l_hat)[:rows]
    without = supermex_rows(game, w_hat, level, rows if game is Game.CHOMP3 else None)[:rows]
    return float(np.mean(with_pass == without))


def overlap_curve(run) -> CurveSeries:
    """Per level, fraction of rows whose P-cell is the same with and without the pass-winners."""
    if run.mode != "pass":
        raise ConfigError("overlap needs a pass-mode run")
    game = Game.parse(run.game)
    xs, vals = [], []
    for x in range(run.levels_completed):
        w_hat, l_hat = run.sheet("What", x), run.sheet("Lhat", x)
        if w_hat is None or l_hat is None:
            raise ConfigError("overlap needs What and Lhat sheets at every level")
        rows = exact_window(run, x)
        if rows <= 0:
            break
        xs.append(x)
        vals.append(overlap_at(game, w_hat, l_hat, x, rows))
    return CurveSeries(xs, vals, "overlap", {"game": run.game, "height": run.height,
                                             "width": run.width})


def overlap_curve_config(config: RunConfig) -> CurveSeries:
    """Streaming overlap curve straight from a pass-mode configuration."""
    if config.mode != "pass":
        raise ConfigError("overlap needs a pass-mode run")
    xs, vals = [], []
    h = config.allocated_height
    for sheets in iterate(config):
        x = sheets["_state"].level - 1
        rows = exact_rows(config.game, h, x)
        xs.append(x)
        vals.append(overlap_at(config.game, sheets["What"], sheets["Lhat"], x, rows))
    return CurveSeries(xs, vals, "overlap", {"game": config.game.label, "height": h,
                                             "width": config.width})


# --- sensitivity to initial conditions ----------------------------------------

def sensitivity_curve(base: RunConfig, perturb_level: int, perturb_row: int | None = None
                      ) -> CurveSeries:
    """Fraction of rows whose P-cell moves after one extra variant at ``perturb_level``.

    The extra variant sits on the base run's P-cell in ``perturb_row``
    (default ``perturb_level // 2``).
    """
    if base.mode != "generic":
        raise ConfigError("sensitivity needs a generic-mode base run")
    x0 = perturb_level
    y0 = x0 // 2 if perturb_row is None else perturb_row
    if not 0 <= x0 < base.levels:
        raise ConfigError("perturbation level outside the run")
    h = base.allocated_height
    if not 0 <= y0 < exact_rows(base.game, h, x0):
        raise ConfigError("perturbation row outside the exact window")
    z0 = None
    for sheets in iterate(_truncated(base, x0 + 1)):
        if sheets["_state"].level - 1 == x0:
            z0 = int(row_z(sheets["Ltilde"])[y0])
    if z0 is None or z0 < 0:
        raise ConfigError(f"base run has no P-cell in row {y0} at level {x0}")
    pert = RunConfig(base.game, "generic", base.levels, base.height, base.width,
                     Combined((base.variants, ExplicitPoints(((x0, y0, z0),)))), ("Ltilde",))
    xs, vals = [], []
    for a, b in zip(iterate(base), iterate(pert)):
        x = a["_state"].level - 1
        rows = exact_rows(base.game, h, x)
        za, zb = row_z(a["Ltilde"])[:rows], row_z(b["Ltilde"])[:rows]
        xs.append(x)
        vals.append(float(np.mean(za != zb)))
    return CurveSeries(xs, vals, "sensitivity",
                       {"perturbation": [x0, y0, z0], "game": base.game.label})


def _truncated(config: RunConfig, levels: int) -> RunConfig:
    # same geometry (allocated height included), fewer levels
    h = config.allocated_height - (levels if config.game is Game.CHOMP3 else 0)
    return RunConfig(config.game, config.mode, levels, h, config.width, config.variants,
                     config.emit)


# --- densities and similarity -------------------------------------------------

@dataclass
class DensityGrid:
    values: np.ndarray
    region: tuple  # (y0, z0, side_y, side_z) actually analyzed

    @property
    def k(self):
        return self.values.shape[0]

    def mean(self):
        return float(self.values.mean())


def density_grid(sheet: Sheet, region=None, k: int = 32) -> DensityGrid:
    """Occupancy fraction over a ``k x k`` block partition of ``region``.

    ``region`` is ``(y0, z0, ny, nz)`` (default: the whole sheet); each extent is
    truncated down to a multiple of ``k``.
    """
    if region is None:
        region = (0, 0, sheet.height, sheet.width)
    y0, z0, ny, nz = region
    if y0 < 0 or z0 < 0 or y0 + ny > sheet.height or z0 + nz > sheet.width:
        raise ConfigError(f"region {region} exceeds the {sheet.height}x{sheet.width} sheet")
    ny, nz = (ny // k) * k, (nz // k) * k
    if ny == 0 or nz == 0:
        raise ConfigError("empty region after truncation to a multiple of k")
    block = sheet.to_dense()[y0:y0 + ny, z0:z0 + nz]
    vals = block.reshape(k, ny // k, k, nz // k).mean(axis=(1, 3))
    return DensityGrid(vals, (y0, z0, ny, nz))


def pearson(a, b) -> float:
    """Pearson correlation; NaN when either input has zero variance."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    a, b = a - a.mean(), b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0.0:
        return math.nan
    return float(a @ b) / den


def _square(run, level, side):
    rows = exact_window(run, level)
    if side > rows or side > run.width:
        raise ConfigError(f"region side {side} exceeds the exact {rows}x{run.width} window "
                          f"at level {level}")
    return (0, 0, side, side)


def _sheet(run, kind, level):
    s = run.sheet(kind, level)
    if s is None:
        raise ConfigError(f"run has no {kind} sheet at level {level}")
    return s


def scale_similarity(run, x: int, x2: int | None = None, kind: str | None = None,
                     k: int = 32, c: float = 2.0) -> float:
    """Correlation of block densities of the winner sheet at ``x`` over ``[0, c*x)^2``
    and at ``x2`` (default ``2x``) over ``[0, c*x2)^2``."""
    kind = kind or WINNER_KIND[run.mode]
    x2 = 2 * x if x2 is None else x2
    ga = density_grid(_sheet(run, kind, x), _square(run, x, int(c * x)), k)
    gb = density_grid(_sheet(run, kind, x2), _square(run, x2, int(c * x2)), k)
    return pearson(ga.values, gb.values)


def geometry_correlation(run_a, run_b, x: int, kind_a: str | None = None,
                         kind_b: str | None = None, k: int = 32, c: float = 2.0) -> float:
    """Correlation of the two runs' winner-sheet block densities at level ``x``."""
    if Game.parse(run_a.game) is not Game.parse(run_b.game):
        raise ConfigError("geometry comparison needs runs of the same game")
    kind_a = kind_a or WINNER_KIND[run_a.mode]
    kind_b = kind_b or WINNER_KIND[run_b.mode]
    side = int(c * x)
    ga = density_grid(_sheet(run_a, kind_a, x), _square(run_a, x, side), k)
    gb = density_grid(_sheet(run_b, kind_b, x), _square(run_b, x, side), k)
    return pearson(ga.values, gb.values)


# --- rendering ----------------------------------------------------------------

BACKGROUND, WINNER, LOSER = 255, 128, 0


def render_array(winners: Sheet | None = None, losers: Sheet | None = None) -> np.ndarray:
    sheets = [s for s in (winners, losers) if s is not None]
    if not sheets:
        raise ConfigError("nothing to render")
    h, w = sheets[0].height, sheets[0].width
    if any((s.height, s.width) != (h, w) for s in sheets):
        raise ConfigError("composited sheets must share dimensions")
    img = np.full((h, w), BACKGROUND, dtype=np.uint8)
    if winners is not None:
        img[winners.to_dense()] = WINNER
    if losers is not None:
        img[losers.to_dense()] = LOSER
    return img[::-1]  # row 0 at the bottom


def encode_pgm(img: np.ndarray) -> bytes:
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, np.uint8).tobytes()


def render(path, winners: Sheet | None = None, losers: Sheet | None = None) -> None:
    atomic_write_bytes(path, encode_pgm(render_array(winners, losers)))
