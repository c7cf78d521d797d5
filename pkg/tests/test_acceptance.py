"""Acceptance criteria, one test each, with their time limits.

A summary line per criterion is printed at the end of the session
(see conftest.pytest_terminal_summary).
"""
import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest

from oracles import naive_rank
from stabmod import gmod, hopf, linalg2 as la
from stabmod import localize as lc
from stabmod import margolis as mg
from stabmod import picard as pc
from stabmod import spectrum as sp
from stabmod import stable as st

RESULTS = {}


@contextmanager
def criterion(n, title, limit):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = time.perf_counter() - t0
        timely = limit is None or dt < limit
        RESULTS[n] = (title, ok and timely, dt, limit)
    assert timely, f"criterion {n} took {dt:.1f}s, limit {limit}s"


def test_c01_preset_validation():
    with criterion(1, "preset validation", 1.0):
        for name in ("lambda0", "E1", "A1"):
            assert hopf.validate(hopf.preset(name)).ok
        a1 = hopf.preset("A1")
        comult = a1.comult.copy()
        comult[a1.index_of("Sq3"), a1.index_of("Sq1"), a1.index_of("Sq2")] ^= 1
        bad = hopf.HopfAlgebra("bad", a1.degrees, a1.mult, comult, a1.antipode,
                               a1.generators, a1.margolis_ops)
        assert not hopf.validate(bad)["coassociative"].passed


def _detection_sample(a, seed):
    rng = np.random.default_rng(seed)
    kind = seed % 4
    if kind == 0:
        degs = sorted(rng.integers(0, 4, size=int(rng.integers(1, 48 // a.dim + 1))).tolist())
        return gmod.free(a, degs)
    m = gmod.random_module(a, seed, max_gens=3, max_deg=3)
    if kind == 1 and m.dim + a.dim <= 48:
        m = gmod.direct_sum(m, gmod.free(a, [int(rng.integers(0, 3))]))
    return m


def test_c02_margolis_detection():
    with criterion(2, "Margolis freeness detection", 30.0):
        count = 0
        for a in (hopf.preset("A1"), hopf.preset("E1")):
            for seed in range(100):
                m = _detection_sample(a, seed)
                assert m.dim <= 48
                assert mg.is_free(m) == (st.strip_free(m).reduced.dim == 0), (a.name, seed)
                count += 1
        assert count == 200


def test_c03_kunneth():
    a1 = hopf.preset("A1")
    with criterion(3, "Kunneth formula", 60.0):
        for seed in range(100):
            m = gmod.random_module(a1, seed, max_gens=2, max_deg=2)
            n = gmod.random_module(a1, 1000 + seed, max_gens=2, max_deg=2)
            for k in (1, 2):
                assert mg.check_kunneth(m, n, k), (seed, k)


def test_c04_les():
    a1 = hopf.preset("A1")
    with criterion(4, "long exact sequence", 60.0):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            m = gmod.random_module(a1, seed, max_gens=2, max_deg=2)
            if m.dim == 0:
                m = gmod.joker(a1)
            v = np.zeros(m.dim, dtype=np.uint8)
            blk = m.block(int(rng.choice(m.degrees)))
            v[blk] = rng.integers(0, 2, size=blk.stop - blk.start)
            inc, proj = mg.submodule_ses(m, gmod.generated_submodule(m, v))
            for k in (1, 2):
                assert mg.check_les(inc, proj, k), (seed, k)


def test_c05_a1_ext_chart():
    a1 = hopf.preset("A1")
    one = gmod.unit(a1)
    with criterion(5, "A(1) Ext chart and relations", 120.0):
        chart = st.stable_ext(one, one, (1, 5), (0, 14))
        for pos in [(1, 1), (1, 2), (3, 7), (4, 12)]:
            assert chart[pos] >= 1, pos
        assert chart[2, 3] == 0 and chart[3, 6] == 0
        v0 = st.ext_basis(one, one, 1, 1)[0]
        eta = st.ext_basis(one, one, 1, 2)[0]
        assert st.is_zero_class(st.yoneda_product(v0, eta))
        assert st.is_zero_class(st.yoneda_product(eta, st.yoneda_product(eta, eta)))
        assert not st.is_zero_class(st.yoneda_product(eta, eta))


def test_c06_support_axioms():
    a1 = hopf.preset("A1")
    with criterion(6, "support sum/tensor/extension rules", None):
        rng = np.random.default_rng(6)
        for _ in range(100):
            m = gmod.random_module(a1, int(rng.integers(0, 10**6)), max_gens=2, max_deg=2)
            n = gmod.random_module(a1, int(rng.integers(0, 10**6)), max_gens=2, max_deg=2)
            pm, pn = sp.support_profile(m), sp.support_profile(n)
            assert sp.support_profile(gmod.direct_sum(m, n)) == pm | pn
            assert sp.support_profile(gmod.tensor(m, n)) == pm & pn
        for _ in range(50):
            S, M, Q = sp._extension(a1, rng)
            assert sp.support_profile(M) <= sp.support_profile(S) | sp.support_profile(Q)


def test_c07_segmental_covers():
    with criterion(7, "segmental covers", None):
        for N in range(1, 6):
            segments = [(a, b) for a in range(1, N + 1) for b in range(a, N + 1)]
            partitions = {tuple(sorted(c)) for c in sp.all_covers(N)}
            assert len(partitions) == 2 ** (N - 1)
            for r in range(1, N + 1):
                for combo in itertools.combinations(segments, r):
                    assert sp.is_cover(list(combo), N) == (tuple(sorted(combo)) in partitions)
        assert sp.is_cover([(1, 1), (2, 2)], hopf.preset("A1").N)


def test_c08_a1_points():
    a1 = hopf.preset("A1")
    with criterion(8, "A(1) point membership", None):
        assert sp.a1_support(gmod.unit(a1)).points == frozenset(sp.POINTS)
        assert sp.a1_support(gmod.free(a1, [0])).points == frozenset()
        assert sp.a1_support(gmod.induced(a1, a1.margolis_ops[1])).points == frozenset({sp.S0})
        for seed in range(40):
            assert sp.a1_support(gmod.random_module(a1, seed, max_gens=2)).is_closed, seed


def test_c09_localization_certification():
    a1 = hopf.preset("A1")
    with criterion(9, "local unit certification", 120.0):
        U = lc.build_local_unit(a1, (2, 2), "below", (0, 24))
        c0, c1 = U.window.certified
        assert c0 == 0 and c1 > 0
        h0 = mg.margolis_homology(U.model, 1).dims
        h1 = mg.margolis_homology(U.model, 2).dims
        assert all(h0.get(d, 0) == 0 for d in range(c0, c1 + 1))
        assert {d: v for d, v in h1.items() if v and c0 <= d <= c1} == {0: 1}
        L, _ = lc.localize(gmod.free(a1, [0]), U)
        assert L.dim == 0 or st.is_stably_trivial(gmod.identity(L))


def test_c10_mayer_vietoris():
    a1 = hopf.preset("A1")
    mods = [gmod.unit(a1), gmod.joker(a1), gmod.induced(a1, a1.margolis_ops[0])]
    with criterion(10, "Mayer-Vietoris middle exactness", 300.0):
        for m, n in itertools.product(mods, repeat=2):
            rep = lc.mv_check(m, n, [(1, 1), (2, 2)], (-12, 12), oracle=True)
            assert rep, rep.to_json()
            assert all("oracle" in r for r in rep.details["rows"])


def test_c11_gluing():
    a1 = hopf.preset("A1")
    e2 = hopf.preset("E2")
    with criterion(11, "gluing round trip", 300.0):
        for seed in range(20):
            m = gmod.random_module(a1, seed, max_gens=2, max_deg=2)
            if m.dim == 0:
                m = gmod.joker(a1)
            E, _ = lc.glue(lc.datum_from_module(m, [(1, 1), (2, 2)], (0, 16)))
            assert st.is_stably_iso(E, m), seed
        datum = lc.datum_from_module(gmod.unit(e2), [(1, 1), (2, 2), (3, 3)], (0, 20))
        E, _ = lc.glue(datum)
        assert st.is_stably_iso(E, gmod.unit(e2))
        f12, f23, d = datum.edges
        K, X2 = f23.map.source, f23.map.target
        bad = next(H for H in gmod.hom_basis(K, X2, 0)
                   if not st.is_stably_trivial(gmod.ModuleMap(K, X2, H)))
        broken = lc.Edge(gmod.ModuleMap(K, X2, f23.map.matrix ^ bad), f23.inclusion, f23.cover)
        with pytest.raises(lc.CocycleError):
            lc.glue(lc.DescentDatum(datum.cover, datum.locals, [f12, broken, d]))


def test_c12_picard():
    with criterion(12, "Picard: Aut(1), joker, detection", 120.0):
        for name in ("lambda0", "E1", "A1", "E2"):
            assert pc.aut_unit(hopf.preset(name)) == 1
        a1 = hopf.preset("A1")
        J = pc.is_invertible(gmod.joker(a1))
        assert J is not None
        assert all(mg.margolis_homology(J.representative, k).total == 1 for k in (1, 2))
        sample = [pc.is_invertible(pc.sigma_omega(a1, s, b)) for s in range(-3, 4) for b in range(-3, 4)]
        assert all(x is not None for x in sample)
        assert pc.detection_check(sample, [(1, 1), (2, 2)])


def test_c13_linear_algebra_oracle():
    with criterion(13, "packed elimination vs one-bit oracle", 10.0):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            r, c = (int(v) for v in rng.integers(1, 65, size=2))
            density = rng.uniform(0.05, 0.95)
            M = (rng.random((r, c)) < density).astype(np.uint8)
            assert la.rank(M) == naive_rank(M.tolist())
