import numpy as np
import pytest

from stabmod import gmod, hopf, linalg2 as la
from stabmod import localize as lc
from stabmod import margolis as mg
from stabmod import stable as st


@pytest.fixture(scope="module")
def a1():
    return hopf.preset("A1")


@pytest.fixture(scope="module")
def e2():
    return hopf.preset("E2")


@pytest.fixture(scope="module")
def q1_unit(a1):
    return lc.build_local_unit(a1, (2, 2), "below", (0, 24))


@pytest.fixture(scope="module")
def q0_unit(a1):
    return lc.build_local_unit(a1, (1, 1), "above", (-24, 0))


def nonzero(H, lo, hi):
    return {d: v for d, v in H.dims.items() if v and lo <= d <= hi}


def test_window_semantics():
    w = lc.Window(0, 24, 5)
    assert w.certified == (0, 19) and w.contains(0, 19) and not w.contains(3, 20)
    assert lc.Window(-24, 0, 5, "above").certified == (-19, 0)
    with pytest.raises(ValueError):
        lc.Window(3, 1)
    assert w.to_json()["certified"] == [0, 19]


def test_trivial_segment(a1):
    U = lc.build_local_unit(a1, (1, 2), "below", (0, 10))
    assert U.model.dim == 1 and U.unit_map.is_iso() and not U.cells


def test_side_preconditions(a1):
    with pytest.raises(ValueError):
        lc.build_local_unit(a1, (1, 1), "below")
    with pytest.raises(ValueError):
        lc.build_local_unit(a1, (2, 2), "above")
    with pytest.raises(ValueError):
        lc.build_local_unit(a1, (2, 2), "sideways")


def test_window_too_small(a1):
    with pytest.raises(lc.WindowTooSmallError):
        lc.build_local_unit(a1, (2, 2), "below", (0, 2))


def test_q1_unit_certified(q1_unit):
    c0, c1 = q1_unit.window.certified
    assert (c0, c1) == (0, 19)
    assert nonzero(mg.margolis_homology(q1_unit.model, 1), c0, c1) == {}
    assert nonzero(mg.margolis_homology(q1_unit.model, 2), c0, c1) == {0: 1}
    assert q1_unit.unit_map.is_equivariant()
    assert q1_unit.certify()
    # cells are A//Lambda(Q0) in increasing degree
    assert [d for d, _ in q1_unit.cells] == sorted(d for d, _ in q1_unit.cells)
    assert {i for _, i in q1_unit.cells} == {1}


def test_q0_unit_is_dual_certified(q0_unit):
    c0, c1 = q0_unit.window.certified
    assert c1 == 0 and c0 < -12
    assert nonzero(mg.margolis_homology(q0_unit.model, 2), c0, c1) == {}
    assert nonzero(mg.margolis_homology(q0_unit.model, 1), c0, c1) == {0: 1}
    D = gmod.dual(q0_unit.model)
    assert nonzero(mg.margolis_homology(D, 2), -c1, -c0) == {}


def test_cells_have_their_concentration(a1):
    c = lc.make_cell(a1, [1], 4, {1})
    assert mg.concentration(c.module) == frozenset({1}) and c.module.lo == 4
    with pytest.raises(lc.NoValidCellError):
        lc.make_cell(a1, [1], 0, {2})


def test_localize_free_is_trivial(a1, q1_unit):
    L, w = lc.localize(gmod.free(a1, [0, 3]), q1_unit)
    assert st.is_free(L) and L.dim == 0


def test_localize_unit_is_model(a1, q1_unit):
    L, w = lc.localize(gmod.unit(a1), q1_unit)
    assert st.is_stably_iso(L, q1_unit.model)


def test_localize_joker(a1, q1_unit):
    J = gmod.joker(a1)
    loc = lc.localize(J, q1_unit)
    c0, c1 = loc.window.certified
    assert c0 == 0 and c1 == q1_unit.window.certified[1]
    assert nonzero(mg.margolis_homology(loc.module, 1), c0, c1) == {}
    assert nonzero(mg.margolis_homology(loc.module, 2), c0, c1) == {2: 1}


def test_localize_algebra_mismatch(q1_unit):
    with pytest.raises(gmod.AlgebraMismatchError):
        lc.localize(gmod.unit(hopf.preset("E1")), q1_unit)


def test_postnikov_free(a1):
    P = lc.postnikov(gmod.free(a1, [0]), 1, (0, 16))
    assert P.check()
    assert st.is_stably_trivial(gmod.identity(P.colocal)) or P.colocal.dim == 0
    assert P.local.dim == 0


def test_postnikov_local_module(a1):
    C = gmod.induced(a1, a1.margolis_ops[1])  # only Q1 homology
    P = lc.postnikov(C, 1, (0, 16))
    assert P.check()
    c0, c1 = P.window.certified
    for k in (1, 2):
        assert nonzero(mg.margolis_homology(P.colocal, k), c0, c1) == {}


def test_postnikov_colocal_module(a1):
    C = gmod.induced(a1, a1.margolis_ops[0])  # only Q0 homology
    P = lc.postnikov(C, 1, (0, 16))
    c0, c1 = P.window.certified
    for k in (1, 2):
        assert nonzero(mg.margolis_homology(P.local, k), c0, c1) == {}
        assert nonzero(mg.margolis_homology(P.colocal, k), c0, c1) == \
            nonzero(mg.margolis_homology(C, k), c0, c1)


def test_postnikov_unit(a1):
    P = lc.postnikov(gmod.unit(a1), 1, (0, 20))
    assert P.check()
    c0, c1 = P.window.certified
    assert nonzero(mg.margolis_homology(P.local, 2), c0, c1) == {0: 1}
    assert nonzero(mg.margolis_homology(P.local, 1), c0, c1) == {}
    assert nonzero(mg.margolis_homology(P.colocal, 1), c0, c1) == {0: 1}
    assert nonzero(mg.margolis_homology(P.colocal, 2), c0, c1) == {}
    assert P.edge.is_equivariant()
    assert "colocal" in P.to_json()


def test_postnikov_bad_cut(a1):
    with pytest.raises(ValueError):
        lc.postnikov(gmod.unit(a1), 2)


def seeded(a, seed):
    m = gmod.random_module(a, seed, max_gens=2, max_deg=2)
    return m if m.dim else gmod.joker(a) if a.name == "A1" else gmod.unit(a)


@pytest.mark.parametrize("name", ["unit", "joker", "free"])
def test_glue_round_trip_named(a1, name):
    m = {"unit": gmod.unit(a1), "joker": gmod.joker(a1), "free": gmod.free(a1, [0])}[name]
    E, _ = lc.glue(lc.datum_from_module(m, [(1, 1), (2, 2)], (0, 16)))
    assert st.is_stably_iso(E, m)


@pytest.mark.parametrize("seed", range(4))
def test_glue_round_trip_seeded(a1, seed):
    m = seeded(a1, seed)
    E, _ = lc.glue(lc.datum_from_module(m, [(1, 1), (2, 2)], (0, 16)))
    assert st.is_stably_iso(E, m)


@pytest.mark.parametrize("seed", range(2))
def test_glue_three_opens(e2, seed):
    m = seeded(e2, seed)
    datum = lc.datum_from_module(m, [(1, 1), (2, 2), (3, 3)], (0, 20))
    E, _ = lc.glue(datum)
    assert st.is_stably_iso(E, m)


def test_glue_broken_cocycle(e2):
    m = gmod.unit(e2)
    datum = lc.datum_from_module(m, [(1, 1), (2, 2), (3, 3)], (0, 20))
    f12, f23, d = datum.edges
    K, X2 = f23.map.source, f23.map.target
    bad = None
    for H in gmod.hom_basis(K, X2, 0):
        f = gmod.ModuleMap(K, X2, H)
        if not st.is_stably_trivial(f):
            bad = f
            break
    assert bad is not None
    broken = lc.Edge(gmod.ModuleMap(K, X2, f23.map.matrix ^ bad.matrix), f23.inclusion, f23.cover)
    with pytest.raises(lc.CocycleError):
        lc.glue(lc.DescentDatum(datum.cover, datum.locals, [f12, broken, d]))


def test_glue_shape_errors(a1):
    datum = lc.datum_from_module(gmod.unit(a1), [(1, 1), (2, 2)], (0, 16))
    with pytest.raises(ValueError):
        lc.glue(lc.DescentDatum(datum.cover, datum.locals, []))


def test_localized_hom_trivial(a1):
    one = gmod.unit(a1)
    U = lc.build_local_unit(a1, (1, 2), "below", (-6, 12))
    h = lc.localized_hom(one, one, (1, 2), units=[U], t_range=range(-2, 3))
    assert h.dims == {t: st.stable_hom_dim(one, one, t) for t in range(-2, 3)}


def test_localized_hom_free(a1):
    h = lc.localized_hom(gmod.free(a1, [0]), gmod.unit(a1), (2, 2), window=(-4, 16))
    assert set(h.dims.values()) == {0}


def test_localized_hom_q1(a1):
    one = gmod.unit(a1)
    h = lc.localized_hom(one, one, (2, 2), window=(-8, 24))
    assert all(h.dims[t] == (1 if t >= 0 and t % 4 == 0 else 0) for t in h.dims)
    assert 0 in h.dims and 8 in h.dims


def test_localized_hom_intersection_periodic(a1):
    one = gmod.unit(a1)
    h = lc.localized_hom(one, one, [(1, 1), (2, 2)], window=(-12, 12))
    ts = [t for t in h.dims if t + 4 in h.dims]
    assert len(ts) >= 8
    assert all(h.dims[t] == h.dims[t + 4] for t in ts)
    assert h.dims[0] == 1 and h.dims[1] == 0
    lo, hi = h.band
    assert lo <= -8 and hi >= 8


MV = ["unit", "joker", "induced"]


def named(a, name):
    return {"unit": gmod.unit(a), "joker": gmod.joker(a),
            "induced": gmod.induced(a, a.margolis_ops[0])}[name]


@pytest.mark.parametrize("m", MV)
@pytest.mark.parametrize("n", MV)
def test_mv_check(a1, m, n):
    rep = lc.mv_check(named(a1, m), named(a1, n), [(1, 1), (2, 2)], (-12, 12))
    assert rep, rep.to_json()
    assert len(rep.details["rows"]) >= 8


def test_mv_check_free(a1):
    rep = lc.mv_check(gmod.free(a1, [0]), gmod.unit(a1), [(1, 1), (2, 2)], (-8, 8), oracle=False)
    assert rep and all(r["dims"] == [0, 0, 0, 0] for r in rep.details["rows"])


def test_mv_detects_wrong_map(a1, monkeypatch):
    real = lc.mv_data

    def broken(*args):
        D = real(*args)
        D.iota2 = gmod.zero_map(D.L2, D.L12)
        return D
    monkeypatch.setattr(lc, "mv_data", broken)
    rep = lc.mv_check(gmod.unit(a1), gmod.unit(a1), [(1, 1), (2, 2)], (-8, 8), oracle=False)
    assert not rep


def test_mv_bad_cover(a1):
    with pytest.raises(ValueError):
        lc.mv_check(gmod.unit(a1), gmod.unit(a1), [(1, 2), (2, 2)])


def test_segment_model_unanchored(e2):
    L = lc.segment_model(gmod.unit(e2), (2, 2), (0, 24))
    c0, c1 = L.window.certified
    assert c1 - c0 >= 10
    assert nonzero(mg.margolis_homology(L.module, 1), c0, c1) == {}
    assert nonzero(mg.margolis_homology(L.module, 3), c0, c1) == {}
    assert nonzero(mg.margolis_homology(L.module, 2), c0, c1) == {0: 1}
