"""Pure-Python supermex row scans (fallback when the compiled core is absent).

Rows are lifted to Python ints so each row costs a handful of big-int ops.
Both scans return ``(zs, fail_row)`` where ``zs[y]`` is the P-cell column of
row ``y`` (``-1`` for none) and ``fail_row`` is ``-1`` unless the width was
exhausted in that row.
"""

import numpy as np


def _rows(words):
    rb = words.shape[1] * 8
    raw = words.tobytes()
    for y in range(words.shape[0]):
        yield int.from_bytes(raw[y * rb:(y + 1) * rb], "little")


def nim_supermex(words, width):
    zs = np.full(words.shape[0], -1, dtype=np.int64)
    cols = 0
    for y, row in enumerate(_rows(words)):
        m = row | cols
        z = (~m & (m + 1)).bit_length() - 1
        if z >= width:
            return zs, y
        zs[y] = z
        cols |= 1 << z
    return zs, -1


def chomp_supermex(words, width, level):
    zs = np.full(words.shape[0], -1, dtype=np.int64)
    # bit s of diag marks the anti-diagonal y + z = s of M2-parents
    diag = 0
    for y, row in enumerate(_rows(words)):
        m = row | (diag >> y)
        if level == 0 and y == 0:
            m |= 1
        z = (~m & (m + 1)).bit_length() - 1
        if z >= width:
            return zs, y
        zs[y] = z
        if z == 0:
            break
        diag |= 1 << (y + z)
    return zs, -1
