"""Popcount kernels over bit-packed row matrices.

Rows are packed LSB-first into 64-bit words, shape (n_rows, n_words).
Every similarity measure in this package reduces to three integer counts
per pair (ones in x, ones in y, ones in x AND y), so the only pairwise
kernel needed is the intersection popcount.

Two interchangeable backends:

* ``numba`` (default when importable): ``@njit``-compiled word loops.
* ``numpy``: vectorized ``np.bitwise_count`` with row chunking.

Select explicitly with ``ANORANK_BACKEND=numpy`` or ``ANORANK_BACKEND=numba``;
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

BACKEND_ENV = "ANORANK_BACKEND"

try:
    from numba import njit

    _NUMBA_OK = True
except ImportError:  # pragma: no cover - exercised via ANORANK_BACKEND=numpy
    _NUMBA_OK = False


def _select_backend() -> str:
    choice = os.environ.get(BACKEND_ENV, "").strip().lower()
    if choice and choice not in ("numba", "numpy"):
        warnings.warn(f"unknown {BACKEND_ENV}={choice!r}, using default backend")
        choice = ""
    if choice == "numba" and not _NUMBA_OK:
        warnings.warn("numba requested but not importable, falling back to numpy")
        choice = "numpy"
    if not choice:
        choice = "numba" if _NUMBA_OK else "numpy"
    return choice


_BACKEND = _select_backend()


def active_backend() -> str:
    """Backend chosen at import time ('numba' or 'numpy')."""
    return _BACKEND


# ---------------------------------------------------------------------------
# numpy backend

# Chunk pair blocks to ~32 MiB of uint64 temporaries.
_CHUNK_WORDS = 4_000_000


def _numpy_popcount_rows(bits: np.ndarray) -> np.ndarray:
    return np.bitwise_count(bits).sum(axis=1, dtype=np.int64)


def _numpy_intersection_counts(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na, nw = a.shape
    nb = b.shape[0]
    out = np.empty((na, nb), dtype=np.int64)
    step = max(1, _CHUNK_WORDS // max(1, nb * nw))
    for start in range(0, na, step):
        block = a[start : start + step, None, :] & b[None, :, :]
        out[start : start + step] = np.bitwise_count(block).sum(axis=2, dtype=np.int64)
    return out


# ---------------------------------------------------------------------------
# numba backend

if _NUMBA_OK:
    _M1 = np.uint64(0x5555555555555555)
    _M2 = np.uint64(0x3333333333333333)
    _M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
    _H01 = np.uint64(0x0101010101010101)
    _S1 = np.uint64(1)
    _S2 = np.uint64(2)
    _S4 = np.uint64(4)
    _S56 = np.uint64(56)

    @njit(cache=True)
    def _popcount64(v):
        v = v - ((v >> _S1) & _M1)
        v = (v & _M2) + ((v >> _S2) & _M2)
        v = (v + (v >> _S4)) & _M4
        return (v * _H01) >> _S56

    @njit(cache=True)
    def _numba_popcount_rows(bits):
        n, nw = bits.shape
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            acc = 0
            for w in range(nw):
                acc += _popcount64(bits[i, w])
            out[i] = acc
        return out

    @njit(cache=True)
    def _numba_intersection_counts(a, b):
        na, nw = a.shape
        nb = b.shape[0]
        out = np.empty((na, nb), dtype=np.int64)
        for i in range(na):
            for j in range(nb):
                acc = 0
                for w in range(nw):
                    acc += _popcount64(a[i, w] & b[j, w])
                out[i, j] = acc
        return out


# ---------------------------------------------------------------------------
# public surface


def popcount_rows(bits: np.ndarray) -> np.ndarray:
    """Per-row count of set bits. bits: (n, n_words) uint64 -> (n,) int64."""
    if _BACKEND == "numba":
        return _numba_popcount_rows(bits)
    return _numpy_popcount_rows(bits)


def intersection_counts(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise popcount of the bitwise AND.

    a: (na, n_words), b: (nb, n_words), both uint64 with equal n_words.
    Returns (na, nb) int64 where out[i, j] = |a_i AND b_j|.
    """
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"word-count mismatch: {a.shape[1]} vs {b.shape[1]}")
    if _BACKEND == "numba":
        return _numba_intersection_counts(a, b)
    return _numpy_intersection_counts(a, b)


def pack_rows(dense: np.ndarray) -> np.ndarray:
    """Pack a (n, m) array of 0/1 values into (n, ceil(m/64)) uint64 words."""
    dense = np.ascontiguousarray(dense, dtype=np.uint8)
    n, m = dense.shape
    n_words = max(1, (m + 63) // 64)
    packed = np.packbits(dense, axis=1, bitorder="little")
    padded = np.zeros((n, n_words * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view("<u8").astype(np.uint64, copy=False)


def unpack_rows(bits: np.ndarray, n_cols: int) -> np.ndarray:
    """Inverse of pack_rows: (n, n_words) uint64 -> (n, n_cols) uint8."""
    as_bytes = np.ascontiguousarray(bits).astype("<u8", copy=False).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little", count=n_cols)
