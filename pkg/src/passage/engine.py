"""Streaming sheet-stack runs: iterate the recursion to a target level, persist
each level as SHT1 files and record a manifest."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import __version__
from .bitgrid import (GAMES, KIND_CODES, KINDS, Sheet, atomic_write_bytes, read_sheet,
                      write_sheet)
from .errors import ConfigError, DominatedLevel, IntegrityError, PassageError, SheetOverflow
from .rules import Game, exact_rows, pass_winners, step_generic, step_pass, step_pure

log = logging.getLogger(__name__)

MODES = ("pure", "pass", "generic")
DEFAULT_EMIT = {
    "pure": ("W", "L"),
    "pass": ("W", "L", "What", "Lhat"),
    "generic": ("V", "Wtilde", "Ltilde"),
}
# the winner sheet that carries the recursion in each mode
STATE_KIND = {"pure": "W", "pass": "What", "generic": "Wtilde"}
MANIFEST = "manifest.json"

_M64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_LEVEL_SALT = 0xD1B54A32D192ED03


# --- deterministic RNG ------------------------------------------------------

def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns ``(new_state, output)``."""
    state = (state + _GAMMA) & _M64
    return state, _mix64(state)


def level_state(seed: int, level: int) -> int:
    return (seed & _M64) ^ ((level * _LEVEL_SALT) & _M64)


def splitmix64_block(state: int, n: int) -> np.ndarray:
    """The next ``n`` splitmix64 outputs from ``state`` (vectorized)."""
    with np.errstate(over="ignore"):
        i = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(state) + i * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def normal_draws(seed: int, level: int, n: int) -> np.ndarray:
    """``n`` standard normals for a level: Box-Muller cosine branch on 53-bit uniform pairs."""
    raw = splitmix64_block(level_state(seed, level), 2 * n)
    u = (raw >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    u1, u2 = u[0::2], u[1::2]
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * math.pi * u2)


# --- variant sources ----------------------------------------------------------

@dataclass(frozen=True)
class NoVariants:
    def stream(self, game, height, width, start=0):
        while True:
            yield Sheet(height, width)

    def to_json(self):
        return {"type": "none"}


@dataclass(frozen=True)
class ExplicitPoints:
    points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(sorted({tuple(map(int, p)) for p in self.points})))

    def sheet(self, level, height, width):
        cells = [(y, z) for x, y, z in self.points if x == level and y < height and z < width]
        return Sheet.from_cells(height, width, cells)

    def stream(self, game, height, width, start=0):
        level = start
        while True:
            yield self.sheet(level, height, width)
            level += 1

    def to_json(self):
        return {"type": "points", "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class PerColumnNormal:
    """One variant cell per row ``y`` at ``round(y + N(0, sigma))``, clamped to the width."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")

    def sheet(self, level, height, width):
        ys = np.arange(height, dtype=np.float64)
        if self.sigma == 0:
            zs = ys
        else:
            zs = ys + self.sigma * normal_draws(self.seed, level, height)
        z = np.clip(np.floor(zs + 0.5), 0, width - 1).astype(np.int64)
        return Sheet.from_row_z(height, width, z)

    def stream(self, game, height, width, start=0):
        level = start
        while True:
            yield self.sheet(level, height, width)
            level += 1

    def to_json(self):
        return {"type": "normal", "sigma": self.sigma, "seed": self.seed}


@dataclass(frozen=True)
class PassWinnerVariants:
    """``V_x`` = pure loser sheet with the terminal removed, from a co-run pure recursion."""

    def stream(self, game, height, width, start=0):
        w = Sheet(height, width)
        level = 0
        while True:
            w, losers = step_pure(game, w, level)
            if level >= start:
                yield pass_winners(game, losers, level)
            level += 1

    def to_json(self):
        return {"type": "pass-winners"}


@dataclass(frozen=True)
class Combined:
    sources: tuple = ()

    def stream(self, game, height, width, start=0):
        streams = [s.stream(game, height, width, start) for s in self.sources]
        while True:
            out = Sheet(height, width)
            for s in streams:
                out = out | next(s)
            yield out

    def to_json(self):
        return {"type": "combined", "sources": [s.to_json() for s in self.sources]}


def source_from_json(obj) -> object:
    kind = obj.get("type")
    if kind == "none":
        return NoVariants()
    if kind == "points":
        return ExplicitPoints(tuple(tuple(p) for p in obj["points"]))
    if kind == "normal":
        return PerColumnNormal(float(obj["sigma"]), int(obj["seed"]))
    if kind == "pass-winners":
        return PassWinnerVariants()
    if kind == "combined":
        return Combined(tuple(source_from_json(s) for s in obj["sources"]))
    raise ConfigError(f"unknown variant source {obj!r}")


def gen_variant_sheet(level: int, source, height: int, width: int) -> Sheet:
    """Variant sheet ``V_level`` for a stateless source."""
    if isinstance(source, NoVariants):
        return Sheet(height, width)
    if isinstance(source, (ExplicitPoints, PerColumnNormal)):
        return source.sheet(level, height, width)
    if isinstance(source, Combined):
        out = Sheet(height, width)
        for s in source.sources:
            out = out | gen_variant_sheet(level, s, height, width)
        return out
    raise ConfigError(f"{type(source).__name__} is not a per-level source")


def read_variant_file(path) -> ExplicitPoints:
    """CSV lines ``x,y,z`` (optional header, blank lines and ``#`` comments ignored)."""
    pts = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if n == 1 and parts == ["x", "y", "z"]:
                continue
            try:
                x, y, z = (int(p) for p in parts)
            except ValueError:
                raise ConfigError(f"{path}:{n}: expected x,y,z integers") from None
            if min(x, y, z) < 0:
                raise ConfigError(f"{path}:{n}: negative coordinate")
            pts.append((x, y, z))
    return ExplicitPoints(tuple(pts))


# --- configuration ----------------------------------------------------------

@dataclass
class RunConfig:
    game: Game
    mode: str
    levels: int
    height: int | None = None
    width: int | None = None
    variants: object = field(default_factory=NoVariants)
    emit: tuple | None = None
    out: str | None = None

    def __post_init__(self):
        self.game = Game.parse(self.game)
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")
        if self.mode != "generic" and not isinstance(self.variants, NoVariants):
            raise ConfigError("variant sources are only valid in generic mode")
        if self.width is None:
            self.width = 4 * self.levels + 64
        if self.height is None:
            # a Nim sheet taller than it is wide always overflows
            self.height = min(2 * self.levels + 32, self.width)
        if self.height < 1 or self.width < 1:
            raise ConfigError("height and width must be >= 1")
        if self.emit is None:
            self.emit = DEFAULT_EMIT[self.mode]
        self.emit = tuple(self.emit)
        bad = [k for k in self.emit if k not in DEFAULT_EMIT[self.mode]]
        if bad:
            raise ConfigError(f"kinds {bad} not produced in {self.mode} mode")

    @property
    def target_height(self) -> int:
        return self.height

    @property
    def allocated_height(self) -> int:
        """Chomp loses one exact row per level to the left shift."""
        if self.game is Game.CHOMP3:
            return self.height + self.levels
        return self.height

    @property
    def seed(self):
        seeds = _collect_seeds(self.variants)
        return seeds[0] if seeds else None

    def to_json(self):
        return {
            "game": self.game.label, "mode": self.mode, "levels": self.levels,
            "height": self.height, "width": self.width,
            "variants": self.variants.to_json(), "emit": list(self.emit),
        }

    @classmethod
    def from_json(cls, obj, out=None):
        return cls(obj["game"], obj["mode"], obj["levels"], obj["height"], obj["width"],
                   source_from_json(obj["variants"]), tuple(obj["emit"]), out)


def _collect_seeds(src):
    if isinstance(src, PerColumnNormal):
        return [src.seed]
    if isinstance(src, Combined):
        return [s for sub in src.sources for s in _collect_seeds(sub)]
    return []


# --- iteration ----------------------------------------------------------------

@dataclass
class RunState:
    """Winner sheets entering ``level``; ``pure`` is only used by pass mode."""

    level: int
    w: Sheet
    pure: Sheet | None = None


def initial_state(config: RunConfig) -> RunState:
    h, w = config.allocated_height, config.width
    return RunState(0, Sheet(h, w), Sheet(h, w) if config.mode == "pass" else None)


def iterate(config: RunConfig, state: RunState | None = None) -> Iterator[dict]:
    """Yield ``{kind: Sheet}`` for each level; holds O(1) sheets.

    Raises ``SheetOverflow`` (with ``level`` set) when a row scan exhausts the width.
    """
    game, mode = config.game, config.mode
    if state is None:
        state = initial_state(config)
    h, width = state.w.height, state.w.width
    if game is Game.CHOMP3 and h - (config.levels - 1) < 1:
        raise ConfigError("chomp height leaves no exact rows at the top level")
    variants = None
    if mode == "generic":
        variants = config.variants.stream(game, h, width, state.level)
    w, pure = state.w, state.pure
    for x in range(state.level, config.levels):
        try:
            if mode == "pure":
                nxt, losers = step_pure(game, w, x)
                out = {"W": w, "L": losers}
            elif mode == "pass":
                pure_next, pure_losers = step_pure(game, pure, x)
                nxt, losers = step_pass(game, w, pure_losers, x)
                out = {"W": pure, "L": pure_losers, "What": w, "Lhat": losers}
                pure = pure_next
            else:
                v = next(variants)
                nxt, losers = step_generic(game, w, v, x)
                out = {"V": v, "Wtilde": w, "Ltilde": losers}
        except SheetOverflow as exc:
            exc.level = x
            exc.args = (f"sheet width exhausted at level {x}, row {exc.row}",)
            raise
        out["_state"] = RunState(x + 1, nxt, pure)
        yield out
        w = nxt


# --- persistence ----------------------------------------------------------------

def sheet_filename(kind: str, level: int) -> str:
    return f"{kind}_{level:06d}.sht"


@dataclass
class RunManifest:
    game: str
    mode: str
    levels: int
    width: int
    height: int
    target_height: int
    seed: int | None
    files: list
    checksums: list
    status: str
    levels_completed: int
    failed_level: int | None = None
    failed_row: int | None = None
    error: str | None = None
    config: dict | None = None
    engine_version: str = __version__

    @property
    def ok(self) -> bool:
        return self.status == "complete"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def run(config: RunConfig, out: str | os.PathLike | None = None,
        state: RunState | None = None) -> RunManifest:
    """Compute and persist a run.  Overflow stops the run and is recorded in the manifest."""
    out = Path(out if out is not None else config.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    files, sums = [], []
    status, failed, failed_row, error = "complete", None, None, None
    done = state.level if state is not None else 0
    game_code = GAMES[config.game.label]
    try:
        for sheets in iterate(config, state):
            level = sheets["_state"].level - 1
            for kind in config.emit:
                name = sheet_filename(kind, level)
                data = write_sheet(out / name, sheets[kind], game_code, KIND_CODES[kind], level)
                files.append(name)
                sums.append(_sha256(data))
            done = level + 1
    except SheetOverflow as exc:
        status, failed, failed_row, error = "overflow", exc.level, exc.row, str(exc)
        log.warning("run aborted: %s", exc)
    except DominatedLevel as exc:
        status, failed, error = "dominated", exc.level, str(exc)
        log.warning("run aborted: %s", exc)
    manifest = RunManifest(
        game=config.game.label, mode=config.mode, levels=config.levels,
        width=config.width, height=config.allocated_height, target_height=config.height,
        seed=config.seed, files=files, checksums=sums, status=status,
        levels_completed=done, failed_level=failed, failed_row=failed_row, error=error,
        config=config.to_json(),
    )
    atomic_write_bytes(out / MANIFEST, manifest.to_json().encode("utf-8"))
    return manifest


class LoadedRun:
    """Lazy, checksum-verified access to a persisted run."""

    def __init__(self, directory, manifest: RunManifest):
        self.directory = Path(directory)
        self.manifest = manifest
        self._sums = dict(zip(manifest.files, manifest.checksums))

    game = property(lambda self: self.manifest.game)
    mode = property(lambda self: self.manifest.mode)
    height = property(lambda self: self.manifest.height)
    width = property(lambda self: self.manifest.width)
    levels_completed = property(lambda self: self.manifest.levels_completed)

    def config(self) -> RunConfig:
        return RunConfig.from_json(self.manifest.config)

    def has(self, kind: str, level: int) -> bool:
        return sheet_filename(kind, level) in self._sums

    def sheet(self, kind: str, level: int) -> Sheet | None:
        name = sheet_filename(kind, level)
        if name not in self._sums:
            return None
        path = self.directory / name
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            raise IntegrityError(f"{name}: listed in manifest but missing") from None
        if _sha256(data) != self._sums[name]:
            raise IntegrityError(f"{name}: checksum mismatch")
        from .bitgrid import decode_sheet
        sheet, head = decode_sheet(data)
        if head.level != level or KINDS[head.kind] != kind:
            raise IntegrityError(f"{name}: header does not match file name")
        return sheet

    def verify(self) -> None:
        for name in self._sums:
            kind, level = name[:-4].rsplit("_", 1)
            self.sheet(kind, int(level))


def load_run(directory) -> LoadedRun:
    path = Path(directory) / MANIFEST
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"no run manifest at {path}") from None
    try:
        manifest = RunManifest.from_json(text)
    except (ValueError, TypeError) as exc:
        raise IntegrityError(f"{path}: unreadable manifest ({exc})") from None
    return LoadedRun(directory, manifest)


def state_from_run(loaded: LoadedRun, level: int) -> RunState:
    """Rebuild the recursion state entering ``level`` from persisted winner sheets."""
    kind = STATE_KIND[loaded.mode]
    w = loaded.sheet(kind, level)
    pure = loaded.sheet("W", level) if loaded.mode == "pass" else None
    if w is None or (loaded.mode == "pass" and pure is None):
        raise ConfigError(f"run does not hold the winner sheets for level {level}")
    return RunState(level, w, pure)


class MemoryRun:
    """In-memory stand-in for ``LoadedRun`` (same accessor surface)."""

    def __init__(self, config: RunConfig, keep=None):
        self.config_obj = config
        self.game = config.game.label
        self.mode = config.mode
        self.height = config.allocated_height
        self.width = config.width
        self.keep = tuple(keep) if keep is not None else config.emit
        self._sheets = {}
        self.levels_completed = 0
        for sheets in iterate(config):
            level = sheets["_state"].level - 1
            for kind in self.keep:
                self._sheets[kind, level] = sheets[kind]
            self.levels_completed = level + 1

    def config(self) -> RunConfig:
        return self.config_obj

    def has(self, kind, level):
        return (kind, level) in self._sheets

    def sheet(self, kind, level):
        return self._sheets.get((kind, level))


def exact_window(run, level: int) -> int:
    return exact_rows(Game.parse(run.game), run.height, level)
