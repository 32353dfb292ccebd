"""Bit-packed truncated sheets, the sheet operator algebra and the SHT1 file format.

A sheet is a ``height x width`` Boolean matrix indexed ``(y, z)``.  Each row is
stored as little-endian ``uint64`` words, bit ``z`` at word ``z >> 6``, bit
``z & 63``.  On a little-endian host the raw bytes of a row are therefore the
LSB-first byte layout used on disk, so serialization is a slice.

Padding bits (``z >= width``) are always zero.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigError, DiagAddError, FormatError

MAGIC = b"SHT1"
VERSION = 1
HEADER = struct.Struct("<4sBBBBIII")  # 20 bytes

GAMES = {"nim": 0, "chomp": 1}
KINDS = ("W", "L", "What", "Lhat", "V", "Wtilde", "Ltilde")
KIND_CODES = {k: i for i, k in enumerate(KINDS)}

_U64 = np.dtype("<u8")


def _nwords(width: int) -> int:
    return (width + 63) >> 6


def _pad_mask(width: int) -> np.uint64:
    r = width & 63
    return np.uint64(0xFFFFFFFFFFFFFFFF if r == 0 else (1 << r) - 1)


class Sheet:
    """Truncated Boolean sheet.

    Treat instances as immutable values; every operator returns a new sheet.
    """

    __slots__ = ("height", "width", "words")

    def __init__(self, height: int, width: int, words: np.ndarray | None = None):
        if height < 1 or width < 1:
            raise ConfigError(f"sheet dimensions must be >= 1, got {height}x{width}")
        self.height = int(height)
        self.width = int(width)
        if words is None:
            words = np.zeros((self.height, _nwords(self.width)), dtype=_U64)
        elif words.shape != (self.height, _nwords(self.width)) or words.dtype != _U64:
            raise ConfigError("word array does not match sheet dimensions")
        self.words = words

    @classmethod
    def from_cells(cls, height: int, width: int, cells: Iterable[tuple[int, int]]) -> "Sheet":
        s = cls(height, width)
        for y, z in cells:
            if not (0 <= y < height and 0 <= z < width):
                raise ConfigError(f"cell {(y, z)} outside {height}x{width}")
            s.words[y, z >> 6] |= np.uint64(1 << (z & 63))
        return s

    @classmethod
    def from_dense(cls, dense) -> "Sheet":
        dense = np.asarray(dense, dtype=bool)
        h, w = dense.shape
        nw = _nwords(w)
        padded = np.zeros((h, nw * 64), dtype=bool)
        padded[:, :w] = dense
        packed = np.packbits(padded, axis=1, bitorder="little")
        return cls(h, w, packed.view(_U64).reshape(h, nw).copy())

    @classmethod
    def from_row_z(cls, height: int, width: int, zs: np.ndarray) -> "Sheet":
        """Build a sheet with at most one cell per row; ``zs[y] < 0`` means none."""
        s = cls(height, width)
        zs = np.asarray(zs, dtype=np.int64)
        ys = np.nonzero(zs >= 0)[0]
        z = zs[ys]
        s.words[ys, z >> 6] |= np.left_shift(np.uint64(1), (z & 63).astype(np.uint64))
        return s

    def to_dense(self) -> np.ndarray:
        raw = self.words.view(np.uint8).reshape(self.height, -1)
        bits = np.unpackbits(raw, axis=1, bitorder="little")
        return bits[:, : self.width].astype(bool)

    def get(self, y: int, z: int) -> bool:
        if not (0 <= y < self.height and 0 <= z < self.width):
            raise IndexError((y, z))
        return bool((int(self.words[y, z >> 6]) >> (z & 63)) & 1)

    def row_int(self, y: int) -> int:
        return int.from_bytes(self.words[y].tobytes(), "little")

    def cells(self) -> list[tuple[int, int]]:
        ys, zs = np.nonzero(self.to_dense())
        return list(zip(ys.tolist(), zs.tolist()))

    def count(self) -> int:
        return int(np.bitwise_count(self.words).sum()) if hasattr(np, "bitwise_count") \
            else int(self.to_dense().sum())

    def row_counts(self) -> np.ndarray:
        return self.to_dense().sum(axis=1)

    def is_canonical(self) -> bool:
        return not (self.words[:, -1] & ~_pad_mask(self.width)).any()

    def copy(self) -> "Sheet":
        return Sheet(self.height, self.width, self.words.copy())

    def same_shape(self, other: "Sheet") -> bool:
        return self.height == other.height and self.width == other.width

    def __eq__(self, other):
        if not isinstance(other, Sheet):
            return NotImplemented
        return self.same_shape(other) and np.array_equal(self.words, other.words)

    __hash__ = None

    def __or__(self, other: "Sheet") -> "Sheet":
        return sheet_add(self, other)

    def __repr__(self):
        return f"Sheet({self.height}x{self.width}, {self.count()} set)"


def sheet_new(height: int, width: int) -> Sheet:
    return Sheet(height, width)


def sheet_full(height: int, width: int) -> Sheet:
    s = Sheet(height, width)
    s.words[:] = np.uint64(0xFFFFFFFFFFFFFFFF)
    s.words[:, -1] &= _pad_mask(width)
    return s


def sheet_add(a: Sheet, b: Sheet) -> Sheet:
    """Cellwise OR."""
    if not a.same_shape(b):
        raise ConfigError(f"dimension mismatch {a.height}x{a.width} vs {b.height}x{b.width}")
    return Sheet(a.height, a.width, a.words | b.words)


def sheet_left_shift(a: Sheet) -> Sheet:
    """``result(y, z) = a(y + 1, z)``; the last row becomes zero."""
    w = np.zeros_like(a.words)
    w[:-1] = a.words[1:]
    return Sheet(a.height, a.width, w)


def row0_cells(a: Sheet) -> list[int]:
    row = a.row_int(0)
    out = []
    while row:
        low = row & -row
        out.append(low.bit_length() - 1)
        row ^= low
    return out


def sheet_diag_add(a: Sheet) -> Sheet:
    """Add the anti-diagonal ``{(y, z* - y)}`` through the single row-0 cell ``(0, z*)``."""
    zs = row0_cells(a)
    if not zs:
        raise DiagAddError(DiagAddError.EMPTY_ROW0, 0)
    if len(zs) > 1:
        raise DiagAddError(DiagAddError.MULTIPLE_ROW0, len(zs))
    zstar = zs[0]
    out = a.copy()
    ys = np.arange(min(zstar + 1, a.height), dtype=np.int64)
    z = zstar - ys
    out.words[ys, z >> 6] |= np.left_shift(np.uint64(1), (z & 63).astype(np.uint64))
    return out


# --- SHT1 file format -------------------------------------------------------

@dataclass(frozen=True)
class SheetHeader:
    game: int
    kind: int
    level: int
    height: int
    width: int


def encode_sheet(sheet: Sheet, game: int = 0, kind: int = 0, level: int = 0) -> bytes:
    if not sheet.is_canonical():
        raise FormatError("refusing to encode a sheet with non-zero padding bits")
    rb = (sheet.width + 7) >> 3
    body = sheet.words.view(np.uint8).reshape(sheet.height, -1)[:, :rb]
    head = HEADER.pack(MAGIC, VERSION, game, kind, 0, level, sheet.height, sheet.width)
    return head + np.ascontiguousarray(body).tobytes()


def decode_sheet(data: bytes) -> tuple[Sheet, SheetHeader]:
    if len(data) < HEADER.size:
        raise FormatError("truncated header")
    magic, version, game, kind, reserved, level, height, width = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if game not in GAMES.values() or kind >= len(KINDS) or reserved != 0:
        raise FormatError("bad game/kind/reserved field")
    if height < 1 or width < 1:
        raise FormatError("zero sheet dimension")
    rb = (width + 7) >> 3
    if len(data) != HEADER.size + height * rb:
        raise FormatError(f"body length {len(data) - HEADER.size}, expected {height * rb}")
    body = np.frombuffer(data, dtype=np.uint8, offset=HEADER.size).reshape(height, rb)
    if width & 7 and (body[:, -1] >> (width & 7)).any():
        raise FormatError("non-zero padding bits")
    nw = _nwords(width)
    raw = np.zeros((height, nw * 8), dtype=np.uint8)
    raw[:, :rb] = body
    sheet = Sheet(height, width, raw.view(_U64).reshape(height, nw).copy())
    return sheet, SheetHeader(game, kind, level, height, width)


def atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_sheet(path, sheet: Sheet, game: int = 0, kind: int = 0, level: int = 0) -> bytes:
    """Write ``sheet`` atomically; returns the bytes written (for checksumming)."""
    data = encode_sheet(sheet, game, kind, level)
    atomic_write_bytes(path, data)
    return data


def read_sheet(path) -> tuple[Sheet, SheetHeader]:
    with open(path, "rb") as fh:
        return decode_sheet(fh.read())
