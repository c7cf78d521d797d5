import pytest

from stabmod import gmod, hopf
from stabmod import spectrum as sp


@pytest.fixture(scope="module")
def a1():
    return hopf.preset("A1")


def test_profiles(a1):
    assert sp.support_profile(gmod.free(a1, [0])) == frozenset()
    assert sp.support_profile(gmod.unit(a1)) == frozenset({1, 2})
    assert sp.support_profile(gmod.induced(a1, a1.margolis_ops[1])) == frozenset({2})


def test_segment_locality(a1):
    u0 = sp.SegmentalOpen(1, 1, 2)
    q1_local = gmod.induced(a1, a1.margolis_ops[1])
    assert u0.is_local(q1_local)
    assert not u0.is_local(gmod.unit(a1))
    with pytest.raises(ValueError):
        sp.SegmentalOpen(2, 3, 2)


def test_is_cover_examples():
    assert sp.is_cover([[1, 1], [2, 2]], 2)
    assert sp.is_cover([[1, 2]], 2)
    assert not sp.is_cover([[1, 1]], 2)
    assert not sp.is_cover([[1, 2], [2, 2]], 2)


@pytest.mark.parametrize("N", range(1, 6))
def test_is_cover_exhaustive(N):
    segments = [(a, b) for a in range(1, N + 1) for b in range(a, N + 1)]
    partitions = {tuple(sorted(c)) for c in sp.all_covers(N)}
    assert len(partitions) == 2 ** (N - 1)
    # every subset of at most N segments: accepted exactly when it is a partition
    from itertools import combinations
    for r in range(1, N + 1):
        for combo in combinations(segments, r):
            assert sp.is_cover(list(combo), N) == (tuple(sorted(combo)) in partitions)


def test_support_lattice(a1):
    rep = sp.support_lattice_checks(a1, samples=100, seed=1)
    assert rep.passed, rep.to_json()


def test_tensor_with_free_and_unit(a1):
    J = gmod.joker(a1)
    assert sp.support_profile(gmod.tensor(J, gmod.free(a1, [0]))) == frozenset()
    m = gmod.random_module(a1, 5)
    assert sp.support_profile(gmod.tensor(gmod.unit(a1), m)) == sp.support_profile(m)


def test_a1_points(a1):
    assert sp.a1_support(gmod.unit(a1)).points == frozenset(sp.POINTS)
    assert sp.a1_support(gmod.free(a1, [0])).points == frozenset()
    q1_local = gmod.induced(a1, a1.margolis_ops[1])
    assert sp.a1_support(q1_local).points == frozenset({sp.S0})
    q0_local = gmod.induced(a1, a1.margolis_ops[0])
    assert sp.a1_support(q0_local).points == frozenset({sp.S1})


@pytest.mark.parametrize("seed", range(40))
def test_a1_support_closed(a1, seed):
    m = gmod.random_module(a1, seed, max_gens=2)
    s = sp.a1_support(m)
    assert s.is_closed, (seed, str(s))


def test_wrong_algebra():
    with pytest.raises(sp.WrongAlgebraError):
        sp.a1_support(gmod.unit(hopf.preset("E1")))
