"""Sparse motion-correlation matrices.

Entry ``(i, j)`` of a matrix is the fraction of the motion during which the
center of cell ``j`` of the moving grid lies inside cell ``i`` of the
stationary grid. The matrices depend only on the grids and the motion, so
they are assembled once and reused for every design.
"""
from __future__ import annotations

import hashlib
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, DimensionError
from .geometry import Grid
from .motion import PoseSeries

__all__ = [
    "CorrelationMatrix",
    "assemble",
    "restrict",
    "matvec",
    "matvec_transposed",
    "save_matrix",
    "load_matrix",
    "read_header",
    "cache_key",
    "CacheHeader",
]

MAGIC = b"COGW1\x00\x00\x00"
# magic, d, rows, cols, K, delta, nnz, key
_HEADER = struct.Struct("<8sIQQQdQ32s")
_TRIPLET = np.dtype([("row", "<u4"), ("col", "<u4"), ("weight", "<f8")])


@dataclass
class CorrelationMatrix:
    """Time-fraction weights between stationary cells (rows) and moving cell centers (cols)."""

    matrix: sp.csr_matrix = field(repr=False)
    K: int
    stationary: Grid | None = None
    moving: Grid | None = None
    _transposed: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=np.float64)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        self.matrix = m

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def delta(self) -> float:
        return 1.0 / self.K

    @property
    def T(self) -> sp.csr_matrix:
        """Transposed matrix in CSR form, built on first use."""
        if self._transposed is None:
            t = self.matrix.T.tocsr()
            t.sort_indices()
            self._transposed = t
        return self._transposed

    @property
    def moving_cell_measure(self) -> float:
        if self.moving is None:
            raise ConfigurationError("matrix has no grid metadata")
        return self.moving.cell_measure

    def entries(self) -> tuple:
        """``(row, col, weight)`` arrays sorted by (row, col)."""
        coo = self.matrix.tocoo()
        return coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data.copy()

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def assemble(stationary: Grid, moving: Grid, leg: PoseSeries, *, workers: int = 1,
             chunk_points: int = 1 << 22) -> CorrelationMatrix:
    """Riemann-sum assembly of the correlation matrix for one trajectory leg.

    ``leg[k]`` maps moving-grid points into the stationary frame. Every
    moving cell center is displaced by every pose and located in the
    stationary grid directly, which costs O(n_moving * K).
    """
    if stationary.dimension != moving.dimension or leg.dimension != moving.dimension:
        raise DimensionError("grid and motion dimensions disagree")
    K = len(leg)
    if K < 1:
        raise ConfigurationError("trajectory leg is empty")
    centers = moving.cell_centers()
    cols = np.arange(moving.n, dtype=np.int32)
    steps_per_chunk = max(1, chunk_points // max(1, moving.n))
    chunks = [range(s, min(K, s + steps_per_chunk)) for s in range(0, K, steps_per_chunk)]
    shape = (stationary.n, moving.n)

    def partial(steps):
        rows_acc, cols_acc = [], []
        for k in steps:
            idx = stationary.locate(leg.apply(k, centers))
            hit = idx >= 0
            rows_acc.append(idx[hit].astype(np.int32))
            cols_acc.append(cols[hit])
        r = np.concatenate(rows_acc)
        c = np.concatenate(cols_acc)
        counts = sp.coo_matrix((np.ones(len(r), dtype=np.float64), (r, c)), shape=shape).tocsr()
        return counts

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(partial, chunks))
    else:
        parts = [partial(ch) for ch in chunks]

    # merge in chunk order so the result does not depend on scheduling
    counts = parts[0]
    for part in parts[1:]:
        counts = counts + part
    counts = counts.tocsr()
    counts.sum_duplicates()
    counts.data *= 1.0 / K
    return CorrelationMatrix(counts, K, stationary, moving)


def restrict(W: CorrelationMatrix, row_mask, col_mask) -> CorrelationMatrix:
    """Keep only entries whose row and column are both selected (shape unchanged)."""
    row_mask = np.asarray(row_mask, dtype=bool)
    col_mask = np.asarray(col_mask, dtype=bool)
    if row_mask.shape != (W.rows,) or col_mask.shape != (W.cols,):
        raise DimensionError("mask sizes do not match the matrix")
    m = sp.diags(row_mask.astype(float)) @ W.matrix @ sp.diags(col_mask.astype(float))
    return CorrelationMatrix(m, W.K, W.stationary, W.moving)


def matvec(W: CorrelationMatrix, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (W.cols,):
        raise DimensionError(f"vector of length {v.shape} does not match {W.cols} columns")
    return W.matrix @ v


def matvec_transposed(W: CorrelationMatrix, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (W.rows,):
        raise DimensionError(f"vector of length {v.shape} does not match {W.rows} rows")
    return W.T @ v


# --------------------------------------------------------------------------
# Binary cache


@dataclass(frozen=True)
class CacheHeader:
    d: int
    rows: int
    cols: int
    K: int
    delta: float
    nnz: int
    key: bytes


def cache_key(stationary: Grid, moving: Grid, motion_spec, K: int) -> bytes:
    """SHA-256 of the grids, motion description and timestep count."""
    payload = json.dumps({"stationary": stationary.to_dict(), "moving": moving.to_dict(),
                          "motion": motion_spec, "K": int(K)}, sort_keys=True)
    return hashlib.sha256(payload.encode()).digest()


def save_matrix(W: CorrelationMatrix, path, key: bytes = b"") -> None:
    d = W.stationary.dimension if W.stationary is not None else 0
    rows, cols, weights = W.entries()
    header = _HEADER.pack(MAGIC, d, W.rows, W.cols, W.K, W.delta, len(weights), key.ljust(32, b"\0")[:32])
    triplets = np.empty(len(weights), dtype=_TRIPLET)
    triplets["row"] = rows
    triplets["col"] = cols
    triplets["weight"] = weights
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(triplets.tobytes())


def read_header(path) -> CacheHeader:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise ConfigurationError(f"{path}: truncated correlation cache")
    magic, d, rows, cols, K, delta, nnz, key = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise ConfigurationError(f"{path}: not a correlation cache (bad magic)")
    return CacheHeader(d, rows, cols, K, delta, nnz, key)


def load_matrix(path, stationary: Grid | None = None, moving: Grid | None = None,
                expect_key: bytes | None = None) -> CorrelationMatrix:
    """Read a cache file, validating it against the given grids and key."""
    header = read_header(path)
    if stationary is not None and (header.rows != stationary.n or header.d != stationary.dimension):
        raise ConfigurationError(f"{path}: cache does not match the stationary grid")
    if moving is not None and header.cols != moving.n:
        raise ConfigurationError(f"{path}: cache does not match the moving grid")
    if abs(header.delta * header.K - 1.0) > 1e-12:
        raise ConfigurationError(f"{path}: inconsistent K and delta in header")
    if expect_key is not None and header.key != expect_key.ljust(32, b"\0")[:32]:
        raise ConfigurationError(f"{path}: stale cache (content hash differs)")
    data = np.fromfile(Path(path), dtype=_TRIPLET, offset=_HEADER.size, count=header.nnz)
    if len(data) != header.nnz:
        raise ConfigurationError(f"{path}: truncated correlation cache")
    m = sp.csr_matrix((data["weight"], (data["row"].astype(np.int64), data["col"].astype(np.int64))),
                      shape=(header.rows, header.cols))
    return CorrelationMatrix(m, header.K, stationary, moving)
