"""Bit-packed dense linear algebra over F_2.

Matrices are stored row-major with 64 columns per ``uint64`` word.  The
elimination kernel is compiled with numba when available; ``STABMOD_NUMBA=0``
selects the vectorised numpy path instead.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

from ._accel import USE_NUMBA, njit, opts

WORD = 64


class DimensionError(ValueError):
    pass


class NotContainedError(ValueError):
    pass


def _nwords(cols: int) -> int:
    return (cols + WORD - 1) // WORD


def pack(dense) -> np.ndarray:
    """Pack a 0/1 array of shape (r, c) into uint64 words of shape (r, ceil(c/64))."""
    a = np.asarray(dense, dtype=np.uint8) & 1
    if a.ndim == 1:
        a = a[None, :]
    r, c = a.shape
    nw = _nwords(c)
    if r == 0 or nw == 0:
        return np.zeros((r, nw), dtype=np.uint64)
    padded = np.zeros((r, nw * WORD), dtype=np.uint8)
    padded[:, :c] = a
    b = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(b).view("<u8").astype(np.uint64, copy=False).reshape(r, nw)


def unpack(data: np.ndarray, cols: int) -> np.ndarray:
    r = data.shape[0]
    if r == 0 or cols == 0:
        return np.zeros((r, cols), dtype=np.uint8)
    b = np.ascontiguousarray(data.astype("<u8")).view(np.uint8).reshape(r, -1)
    return np.unpackbits(b, axis=1, bitorder="little", count=cols).astype(np.uint8)


class BitMatrix:
    """Immutable dense matrix over F_2 with bit-packed rows."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: np.ndarray | None = None):
        self.rows = int(rows)
        self.cols = int(cols)
        nw = _nwords(self.cols)
        if data is None:
            data = np.zeros((self.rows, nw), dtype=np.uint64)
        data = np.array(data, dtype=np.uint64, copy=True).reshape(self.rows, nw)
        if self.cols % WORD and nw:
            data[:, -1] &= np.uint64((1 << (self.cols % WORD)) - 1)
        data.flags.writeable = False
        self.data = data

    @classmethod
    def from_dense(cls, dense) -> "BitMatrix":
        a = np.asarray(dense, dtype=np.uint8)
        if a.ndim == 1:
            a = a[None, :]
        return cls(a.shape[0], a.shape[1], pack(a))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> "BitMatrix":
        return cls.from_dense(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_dense(self) -> np.ndarray:
        return unpack(self.data, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return int((self.data[i, j // WORD] >> np.uint64(j % WORD)) & np.uint64(1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"

    @property
    def T(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense().T)

    def __matmul__(self, other):
        if isinstance(other, BitMatrix):
            if self.cols != other.rows:
                raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
            return BitMatrix.from_dense(mul(self.to_dense(), other.to_dense()))
        v = np.asarray(other, dtype=np.uint8)
        if v.shape[0] != self.cols:
            raise DimensionError(f"cannot multiply {self.shape} by vector of length {v.shape[0]}")
        return mul(self.to_dense(), v)

    def __add__(self, other: "BitMatrix") -> "BitMatrix":
        if self.shape != other.shape:
            raise DimensionError("shape mismatch")
        return BitMatrix(self.rows, self.cols, self.data ^ other.data)


def mul(a, b) -> np.ndarray:
    """Product over F_2 of dense 0/1 arrays (BLAS in float32; exact below 2**24 terms)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.size == 0 or b.size == 0:
        shape = a.shape[:-1] + b.shape[1:]
        return np.zeros(shape, dtype=np.uint8)
    p = a.astype(np.float32) @ b.astype(np.float32)
    return (p.astype(np.int64) & 1).astype(np.uint8)


# -- elimination kernels ----------------------------------------------------

def _rref_loops(data, ncols):
    rows = data.shape[0]
    nw = data.shape[1]
    piv = np.empty(min(rows, ncols) + 1, dtype=np.int64)
    r = 0
    one = np.uint64(1)
    for c in range(ncols):
        if r == rows:
            break
        w = c // 64
        bit = one << np.uint64(c % 64)
        p = -1
        for i in range(r, rows):
            if data[i, w] & bit:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            for k in range(nw):
                tmp = data[p, k]
                data[p, k] = data[r, k]
                data[r, k] = tmp
        for i in range(rows):
            if i != r and (data[i, w] & bit):
                for k in range(nw):
                    data[i, k] ^= data[r, k]
        piv[r] = c
        r += 1
    return r, piv[:r]


def _rref_numpy(data, ncols):
    rows = data.shape[0]
    piv = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        w, bit = c // WORD, np.uint64(1) << np.uint64(c % WORD)
        col = (data[r:, w] & bit) != 0
        hits = np.flatnonzero(col)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            data[[r, p]] = data[[p, r]]
        mask = (data[:, w] & bit) != 0
        mask[r] = False
        if mask.any():
            data[mask] ^= data[r]
        piv.append(c)
        r += 1
    return r, np.array(piv, dtype=np.int64)


if USE_NUMBA:
    _rref_kernel = njit(**opts())(_rref_loops)
else:
    _rref_kernel = _rref_numpy


def _as_bitmatrix(m) -> BitMatrix:
    return m if isinstance(m, BitMatrix) else BitMatrix.from_dense(m)


def rref_packed(data: np.ndarray, ncols: int) -> tuple[np.ndarray, np.ndarray]:
    """Reduce a private copy of packed rows; returns (nonzero rows, pivot columns)."""
    work = np.array(data, dtype=np.uint64, copy=True, order="C")
    if work.shape[0] == 0 or ncols == 0:
        return work[:0], np.zeros(0, dtype=np.int64)
    r, piv = _rref_kernel(work, ncols)
    return work[:r], np.asarray(piv, dtype=np.int64)


def rref(m) -> tuple[BitMatrix, tuple[int, ...]]:
    bm = _as_bitmatrix(m)
    rows, piv = rref_packed(bm.data, bm.cols)
    return BitMatrix(rows.shape[0], bm.cols, rows), tuple(int(p) for p in piv)


def rank(m) -> int:
    bm = _as_bitmatrix(m)
    _, piv = rref_packed(bm.data, bm.cols)
    return len(piv)


class Subspace:
    """Subspace of F_2^n held as a reduced row-echelon basis."""

    __slots__ = ("ambient_dim", "basis", "pivots", "_dense")

    def __init__(self, ambient_dim: int, vectors=None):
        self.ambient_dim = int(ambient_dim)
        if vectors is None or len(vectors) == 0:
            self.basis = BitMatrix(0, self.ambient_dim)
            self.pivots = ()
        else:
            v = np.asarray(vectors, dtype=np.uint8)
            if v.ndim == 1:
                v = v[None, :]
            if v.shape[1] != self.ambient_dim:
                raise DimensionError(f"vectors of length {v.shape[1]} in ambient {self.ambient_dim}")
            self.basis, self.pivots = rref(v)
        self._dense = None

    @classmethod
    def _from_rref(cls, ambient_dim, basis: BitMatrix, pivots) -> "Subspace":
        s = cls.__new__(cls)
        s.ambient_dim = ambient_dim
        s.basis = basis
        s.pivots = tuple(int(p) for p in pivots)
        s._dense = None
        return s

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls._from_rref(n, BitMatrix.identity(n), range(n))

    @property
    def dim(self) -> int:
        return self.basis.rows

    def dense(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self.basis.to_dense()
        return self._dense

    def reduce(self, v) -> np.ndarray:
        """Reduce ``v`` modulo the subspace (canonical coset representative)."""
        v = np.array(v, dtype=np.uint8) & 1
        if self.dim == 0:
            return v
        # echelon rows vanish on the other pivots, so one product suffices
        B = self.dense()
        idx = list(self.pivots)
        if v.ndim == 1:
            return v ^ mul(v[idx][None, :], B)[0]
        return v ^ mul(B.T, v[idx, :])

    def coordinates(self, v) -> np.ndarray:
        """Coordinates of ``v`` (assumed in the subspace) in the echelon basis."""
        v = np.asarray(v, dtype=np.uint8)
        idx = list(self.pivots)
        return v[idx] if v.ndim == 1 else v[idx, :]

    def contains(self, v) -> bool:
        return not self.reduce(v).any()

    def contains_space(self, other: "Subspace") -> bool:
        if other.dim == 0:
            return True
        return not self.reduce(other.dense().T).any()

    def __eq__(self, other) -> bool:
        return (isinstance(other, Subspace) and self.ambient_dim == other.ambient_dim
                and self.basis == other.basis)

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def kernel(m) -> Subspace:
    """Null space {v : m v = 0}."""
    bm = _as_bitmatrix(m)
    R, piv = rref(bm)
    n = bm.cols
    free = [c for c in range(n) if c not in set(piv)]
    if not free:
        return Subspace(n)
    Rd = R.to_dense()
    K = np.zeros((len(free), n), dtype=np.uint8)
    for k, f in enumerate(free):
        K[k, f] = 1
        if piv:
            K[k, list(piv)] = Rd[:, f]
    return Subspace(n, K)


def image(m) -> Subspace:
    """Column span of ``m``."""
    bm = _as_bitmatrix(m)
    d = bm.to_dense()
    return Subspace(bm.rows, d.T)


def solve(m, b) -> np.ndarray | None:
    """Some x with m x = b, or None when b is not in the column span."""
    bm = _as_bitmatrix(m)
    b = np.asarray(b, dtype=np.uint8) & 1
    if b.shape[0] != bm.rows:
        raise DimensionError(f"rhs length {b.shape[0]} != rows {bm.rows}")
    aug = np.concatenate([bm.to_dense(), b[:, None]], axis=1)
    R, piv = rref(aug)
    if bm.cols in piv:
        return None
    x = np.zeros(bm.cols, dtype=np.uint8)
    Rd = R.to_dense()
    for row, p in zip(Rd, piv):
        x[p] = row[bm.cols]
    return x


def solve_many(m, B) -> np.ndarray | None:
    """Solve m X = B column-wise; None if any column is unsolvable."""
    bm = _as_bitmatrix(m)
    B = np.asarray(B, dtype=np.uint8) & 1
    if B.ndim == 1:
        B = B[:, None]
    if B.shape[0] != bm.rows:
        raise DimensionError(f"rhs rows {B.shape[0]} != rows {bm.rows}")
    k = B.shape[1]
    aug = np.concatenate([bm.to_dense(), B], axis=1)
    R, piv = rref(aug)
    if piv and piv[-1] >= bm.cols:
        return None
    X = np.zeros((bm.cols, k), dtype=np.uint8)
    Rd = R.to_dense()
    for row, p in zip(Rd, piv):
        X[p] = row[bm.cols:]
    return X


def quotient_basis(sub: Subspace, total: Subspace) -> list[np.ndarray]:
    """Vectors of ``total`` whose classes form a basis of total/sub."""
    if sub.ambient_dim != total.ambient_dim:
        raise DimensionError("ambient dimensions differ")
    if not total.contains_space(sub):
        raise NotContainedError("sub is not contained in total")
    reps = []
    current = sub
    for row in total.dense():
        r = current.reduce(row)
        if r.any():
            reps.append(row.copy())
            current = Subspace(sub.ambient_dim, np.vstack([current.dense(), row[None, :]]))
    return reps


def intersect(u: Subspace, v: Subspace) -> Subspace:
    n = u.ambient_dim
    if u.dim == 0 or v.dim == 0:
        return Subspace(n)
    U, V = u.dense(), v.dense()
    K = kernel(np.concatenate([U, V], axis=0).T).dense()
    if len(K) == 0:
        return Subspace(n)
    return Subspace(n, mul(K[:, : u.dim], U))


def span(vectors: Iterable, n: int) -> Subspace:
    vs = [np.asarray(v, dtype=np.uint8) for v in vectors]
    return Subspace(n, np.array(vs) if vs else None)
