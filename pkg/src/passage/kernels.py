"""Backend selection for the supermex row scans.

The compiled core is used when it imports; set ``PASSAGE_PURE_PYTHON=1`` to
force the fallback.  ``BACKENDS`` exposes every importable backend so tests
and benchmarks can compare them.
"""

import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and os.environ.get("PASSAGE_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]


def use_backend(name):
    """Switch the process-wide backend; returns the previous name."""
    global BACKEND, _impl
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    prev, BACKEND, _impl = BACKEND, name, BACKENDS[name]
    return prev


def nim_supermex_rows(words, width):
    return _impl.nim_supermex(words, width)


def chomp_supermex_rows(words, width, level):
    return _impl.chomp_supermex(words, width, level)
