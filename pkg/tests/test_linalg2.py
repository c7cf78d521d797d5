import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabmod import linalg2 as L
from oracles import naive_rank, seeded_matrix

SEED42_RANK = naive_rank(seeded_matrix())


def test_identity_rank():
    assert L.rank(L.BitMatrix.identity(3)) == 3


def test_zero_rank():
    assert L.rank(L.BitMatrix.zeros(4, 7)) == 0


def test_seeded_rank_matches_oracle():
    assert L.rank(seeded_matrix()) == SEED42_RANK


def test_kernel_trivial_cases():
    assert L.kernel(L.BitMatrix.identity(6)).dim == 0
    assert L.kernel(np.zeros((3, 5), dtype=np.uint8)).dim == 5


def test_seeded_kernel_rank_nullity():
    m = seeded_matrix()
    assert L.kernel(m).dim == 20 - SEED42_RANK


def test_solve_identity():
    b = np.array([1, 0, 1, 1], dtype=np.uint8)
    assert np.array_equal(L.solve(L.BitMatrix.identity(4), b), b)


def test_solve_inconsistent():
    m = np.array([[1, 0], [1, 0]], dtype=np.uint8)
    assert L.solve(m, np.array([1, 0], dtype=np.uint8)) is None


def test_solve_dimension_error():
    with pytest.raises(L.DimensionError):
        L.solve(L.BitMatrix.identity(3), np.zeros(4, dtype=np.uint8))


def test_quotient_basis():
    v = L.Subspace.full(5)
    assert L.quotient_basis(v, v) == []
    m = seeded_matrix(rows=12, cols=20)
    reps = L.quotient_basis(L.kernel(m), L.Subspace.full(20))
    assert len(reps) == naive_rank(m)


def test_quotient_basis_not_contained():
    a = L.Subspace(3, [[1, 0, 0]])
    b = L.Subspace(3, [[0, 1, 0]])
    with pytest.raises(L.NotContainedError):
        L.quotient_basis(a, b)


def test_pack_roundtrip_clears_tail_bits():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 2, size=(3, 70), dtype=np.uint8)
    bm = L.BitMatrix.from_dense(a)
    assert bm.data.shape == (3, 2)
    assert int(bm.data[:, 1].max()) < (1 << 6)
    assert np.array_equal(bm.to_dense(), a)


def test_image_is_column_span():
    m = seeded_matrix(rows=9, cols=14)
    im = L.image(m)
    assert im.dim == L.rank(m)
    for c in range(14):
        assert im.contains(m[:, c])


def test_subspace_is_rref():
    s = L.Subspace(6, [[1, 1, 0, 1, 0, 0], [1, 0, 0, 1, 1, 0], [0, 1, 0, 0, 1, 0]])
    assert s.dim == 2
    d = s.dense()
    for i, p in enumerate(s.pivots):
        assert d[:, p].sum() == 1 and d[i, p] == 1
    assert list(s.pivots) == sorted(s.pivots)


matrices = st.tuples(st.integers(1, 64), st.integers(1, 64), st.integers(0, 2**32 - 1)).map(
    lambda t: np.random.default_rng(t[2]).integers(0, 2, size=(t[0], t[1]), dtype=np.uint8))


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_rank_nullity_and_kernel_exact(m):
    k = L.kernel(m)
    assert L.rank(m) + k.dim == m.shape[1]
    if k.dim:
        assert not L.mul(m, k.dense().T).any()


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_packed_agrees_with_oracle(m):
    assert L.rank(m) == naive_rank(m)


@settings(max_examples=40, deadline=None)
@given(matrices, st.integers(0, 2**32 - 1))
def test_solve_finds_preimage(m, seed):
    x0 = np.random.default_rng(seed).integers(0, 2, size=m.shape[1], dtype=np.uint8)
    b = L.mul(m, x0)
    x = L.solve(m, b)
    assert x is not None and np.array_equal(L.mul(m, x), b)


def test_intersect():
    a = L.Subspace(4, [[1, 0, 0, 0], [0, 1, 0, 0]])
    b = L.Subspace(4, [[1, 1, 0, 0], [0, 0, 1, 0]])
    c = L.intersect(a, b)
    assert c.dim == 1 and c.contains(np.array([1, 1, 0, 0]))
