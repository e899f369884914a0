"""Dense bit-packed linear algebra over GF(2).

Matrices are passed around as ``uint8`` arrays of zeros and ones.  Row
reduction packs each row into ``uint64`` words so that a pivot step is a
single vectorised XOR over the affected rows.
"""

from __future__ import annotations

import numpy as np

_ONE = np.uint64(1)


def as_binary(matrix) -> np.ndarray:
    arr = np.asarray(matrix)
    if arr.ndim == 1:
        arr = arr[None, :]
    return (arr.astype(np.int64) & 1).astype(np.uint8)


def pack(matrix: np.ndarray) -> np.ndarray:
    """Pack a 2D binary matrix into rows of little-endian ``uint64`` words."""
    m = as_binary(matrix)
    nrows, ncols = m.shape
    nwords = max(1, (ncols + 63) // 64)
    padded = np.zeros((nrows, nwords * 64), dtype=np.uint8)
    padded[:, :ncols] = m
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64).reshape(nrows, nwords)


def unpack(words: np.ndarray, ncols: int) -> np.ndarray:
    nrows = words.shape[0]
    as_bytes = np.ascontiguousarray(words).view(np.uint8).reshape(nrows, -1)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :ncols].astype(np.uint8)


def _rref_packed(words: np.ndarray, ncols: int) -> tuple[np.ndarray, list[int]]:
    work = words.copy()
    nrows = work.shape[0]
    pivots: list[int] = []
    row = 0
    for col in range(ncols):
        if row == nrows:
            break
        w, b = divmod(col, 64)
        shift = np.uint64(b)
        column = (work[:, w] >> shift) & _ONE
        candidates = np.flatnonzero(column[row:])
        if candidates.size == 0:
            continue
        pivot = row + int(candidates[0])
        if pivot != row:
            work[[row, pivot]] = work[[pivot, row]]
            column[[row, pivot]] = column[[pivot, row]]
        hit = column.astype(bool)
        hit[row] = False
        if hit.any():
            work[hit] ^= work[row]
        pivots.append(col)
        row += 1
    return work, pivots


def rref(matrix) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form with lowest-index pivots.

    Returns the reduced matrix (zero rows kept at the bottom) and the pivot
    column of each nonzero row.
    """
    m = as_binary(matrix)
    if m.shape[0] == 0 or m.shape[1] == 0:
        return m.copy(), []
    words, pivots = _rref_packed(pack(m), m.shape[1])
    return unpack(words, m.shape[1]), pivots


def rank(matrix) -> int:
    m = as_binary(matrix)
    if m.size == 0:
        return 0
    return len(_rref_packed(pack(m), m.shape[1])[1])


def row_basis(matrix) -> np.ndarray:
    """Independent rows spanning the row space (reduced form)."""
    reduced, pivots = rref(matrix)
    return reduced[: len(pivots)]


def nullspace(matrix, ncols: int | None = None) -> np.ndarray:
    """Basis of ``{x : M x = 0}``, one vector per free column in index order."""
    m = np.asarray(matrix)
    if ncols is None:
        ncols = m.shape[-1]
    if m.size == 0:
        return np.eye(ncols, dtype=np.uint8)
    reduced, pivots = rref(m)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = np.zeros((len(free), ncols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, p in enumerate(pivots):
            basis[i, p] = reduced[r, f]
    return basis


def independent_rows(matrix) -> list[int]:
    """Indices of the first maximal set of independent rows, scanning top down."""
    m = as_binary(matrix)
    if m.shape[0] == 0:
        return []
    _, pivots = rref(m.T)
    return pivots


def inverse(matrix) -> np.ndarray:
    m = as_binary(matrix)
    k = m.shape[0]
    if m.shape != (k, k):
        raise ValueError("inverse needs a square matrix")
    aug = np.concatenate([m, np.eye(k, dtype=np.uint8)], axis=1)
    reduced, pivots = rref(aug)
    if pivots[:k] != list(range(k)):
        raise np.linalg.LinAlgError("matrix is singular over GF(2)")
    return reduced[:, k:]


def matmul(a, b) -> np.ndarray:
    return ((as_binary(a).astype(np.int64) @ as_binary(b).astype(np.int64)) & 1).astype(np.uint8)


def in_rowspace(vector, matrix) -> bool:
    m = as_binary(matrix)
    if m.shape[0] == 0:
        return not np.any(as_binary(vector))
    return rank(np.vstack([m, as_binary(vector)])) == rank(m)


def span(basis) -> np.ndarray:
    """All 2^r combinations of the basis rows (r must be small)."""
    b = as_binary(basis)
    r = b.shape[0]
    if r > 24:
        raise ValueError(f"refusing to enumerate a span of dimension {r}")
    idx = np.arange(1 << r, dtype=np.int64)
    coeffs = ((idx[:, None] >> np.arange(r)) & 1).astype(np.int64)
    return ((coeffs @ b.astype(np.int64)) & 1).astype(np.uint8)
