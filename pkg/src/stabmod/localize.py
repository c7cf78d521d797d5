"""Truncated localization on segmental opens.

A local object is infinite in general, so it is represented by a finite
module together with a Window: the range of internal degrees in which its
Margolis homology has been checked to be the homology of the true object.

Below-side units (segments [a, N]) are built by the killing construction:
start from the unit and repeatedly attach a cell Sigma^d A//Lambda(ops) along
the lowest surviving class of H(-; p_i) with i outside the segment. The cell
is A//Lambda(all outside ops) when that makes progress, else A//Lambda(p_i).
Above-side
units (segments [1, b]) are duals of the fiber of the below-side unit for
[b+1, N].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gmod, hopf
from . import linalg2 as la
from . import margolis as mg
from . import stable as st
from .gmod import GradedModule, ModuleMap
from .margolis import CheckReport


class WindowTooSmallError(ValueError):
    pass


class NoValidCellError(ValueError):
    pass


class CertificationError(AssertionError):
    pass


class NotStabilizedError(ValueError):
    pass


class CocycleError(ValueError):
    pass


BELOW, ABOVE, BOTH = "below", "above", "both"
_MAX_CELLS = 2000


@dataclass(frozen=True)
class Window:
    """Degrees [lo, hi] are represented; the margin is cut from the open end.

    For below-side objects the open end is at the top, so [lo, hi - margin]
    is certified; above-side objects lose the margin at the bottom and
    two-sided ones at both ends.
    """
    lo: int
    hi: int
    margin: int = 0
    side: str = BELOW

    def __post_init__(self):
        if self.lo > self.hi:
            raise WindowTooSmallError(f"empty window [{self.lo},{self.hi}]")
        cut = 2 * self.margin if self.side == BOTH else self.margin
        if self.margin < 0 or cut > self.hi - self.lo:
            raise WindowTooSmallError(f"margin {self.margin} does not fit in [{self.lo},{self.hi}]")

    @property
    def certified(self) -> tuple[int, int]:
        lo = self.lo + (self.margin if self.side in (ABOVE, BOTH) else 0)
        hi = self.hi - (self.margin if self.side in (BELOW, BOTH) else 0)
        return lo, hi

    def contains(self, lo: int, hi: int) -> bool:
        c0, c1 = self.certified
        return c0 <= lo and hi <= c1

    def tensor(self, m: GradedModule) -> "Window":
        """Window of (object) (x) m: shifted by m's range, margin grows by its spread."""
        if m.dim == 0:
            return self
        spread = m.hi - m.lo
        return Window(self.lo + m.lo, self.hi + m.hi, self.margin + spread, self.side)

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "margin": self.margin, "side": self.side,
                "certified": list(self.certified)}


def _segment(a: hopf.HopfAlgebra, segment) -> tuple[int, int]:
    lo, hi = (int(x) for x in segment)
    if not 1 <= lo <= hi <= a.N:
        raise ValueError(f"segment [{lo},{hi}] not inside [1,{a.N}]")
    return lo, hi


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=np.uint8).reshape(-1)


def _apply(f: ModuleMap | np.ndarray, v) -> np.ndarray:
    M = f.matrix if isinstance(f, ModuleMap) else f
    return la.mul(M, _vec(v)[:, None])[:, 0]


def _unit_map(model: GradedModule, u) -> ModuleMap:
    one = gmod.unit(model.algebra)
    return ModuleMap(one, model, _vec(u).reshape(-1, 1))


# -- cells -------------------------------------------------------------------

@dataclass
class Cell:
    index: int  # Margolis index p_i whose class it kills
    degree: int
    module: GradedModule
    keep: list[int]  # basis of the cell as coordinates of the free module
    ops: tuple[int, ...] = ()  # the cell is Sigma^d A // Lambda(p_j, j in ops)

    @property
    def height(self) -> int:
        return self.module.hi - self.module.lo


def make_cell(a: hopf.HopfAlgebra, ops, d: int, outside, index: int | None = None) -> Cell:
    """Sigma^d A//Lambda(p_j : j in ops), with its concentration checked against ``outside``."""
    ops = tuple(sorted(ops))
    i = ops[0] if index is None else index
    A, _ = gmod.free_with_labels(a, [d])
    R = np.concatenate([a.right_mult_matrix(mg.op(a, j).element) for j in ops], axis=1)
    sub = la.image(R)
    C, _ = gmod.quotient(A, sub)
    keep = [c for c in range(A.dim) if c not in set(sub.pivots)]
    conc = mg.concentration(C)
    if i not in conc or not conc <= frozenset(outside):
        raise NoValidCellError(f"A//Lambda{ops} has concentration {sorted(conc)}, "
                               f"need {i} in it and it inside {sorted(outside)}")
    if mg.margolis_homology(C, i).dims.get(d, 0) != 1:
        raise NoValidCellError(f"A//Lambda{ops} has no bottom class of H(-; p_{i})")
    C.name = f"S^{d}A//L{ops}"
    return Cell(i, d, C, keep, ops)


def cell_map(cell: Cell, Z: GradedModule, z) -> ModuleMap:
    """The map cell -> Z sending the generator to the p_i-cycle z."""
    a = Z.algebra
    A, index = gmod.free_with_labels(a, [cell.degree])
    fA = st.free_map(A, index, Z, _vec(z).reshape(-1, 1))
    f = ModuleMap(cell.module, Z, fA.matrix[:, cell.keep])
    if not f.is_equivariant():
        raise AssertionError("attaching map is not a module map")
    return f


def cofiber(f: ModuleMap):
    """Cone of f: (target (+) I(source)) / graph; returns (module, map from target)."""
    X, Z = f.source, f.target
    I, j = st.injective_hull(X)
    S, idx = gmod.direct_sum_with_index(Z, I)
    G = np.zeros((S.dim, X.dim), dtype=np.uint8)
    G[idx[0]] = f.matrix
    G[idx[1]] = j.matrix
    Q, pr = gmod.quotient(S, la.Subspace(S.dim, G.T))
    into = np.zeros((S.dim, Z.dim), dtype=np.uint8)
    into[idx[0], np.arange(Z.dim)] = 1
    return Q, ModuleMap(Z, Q, la.mul(pr.matrix, into))


# -- units -----------------------------------------------------------------------

@dataclass
class Stage:
    model: GradedModule
    unit: np.ndarray  # image of 1 in model (degree 0)


@dataclass
class LocalUnit:
    algebra: hopf.HopfAlgebra
    segment: tuple[int, int]
    side: str
    model: GradedModule
    window: Window
    unit_map: ModuleMap | None
    cells: list[tuple[int, int]] = field(default_factory=list)  # (degree, index) in order
    stages: list[Stage] = field(default_factory=list, repr=False)

    @property
    def inside(self) -> frozenset[int]:
        return frozenset(range(self.segment[0], self.segment[1] + 1))

    @property
    def outside(self) -> frozenset[int]:
        return frozenset(range(1, self.algebra.N + 1)) - self.inside

    def certify(self) -> CheckReport:
        return certify(self.model, gmod.unit(self.algebra), self.unit_map, self.inside, self.window)

    def to_json(self) -> dict:
        return {"algebra": self.algebra.name, "segment": list(self.segment), "side": self.side,
                "window": self.window.to_json(), "dim": self.model.dim,
                "model_dims": {str(d): v for d, v in self.model.dims.items() if v},
                "cells": [list(c) for c in self.cells], "stages": len(self.stages)}


def certify(model: GradedModule, source: GradedModule, unit_map: ModuleMap | None,
            inside, window: Window) -> CheckReport:
    """Margolis check in the certified range of ``window``.

    Outside indices: H(model; p_i) = 0. Inside indices: the map source -> model
    is an isomorphism on H(-; p_i) (only dimensions when no map is given).
    """
    a = model.algebra
    c0, c1 = window.certified
    for i in range(1, a.N + 1):
        Hm = mg.margolis_homology(model, i)
        if i not in inside:
            bad = [d for d in Hm.support() if c0 <= d <= c1]
            if bad:
                return CheckReport("certify", False, {"index": i, "degree": bad[0]})
            continue
        Hs = mg.margolis_homology(source, i)
        for d in range(c0, c1 + 1):
            ns, nm = Hs.dims.get(d, 0), Hm.dims.get(d, 0)
            if ns != nm:
                return CheckReport("certify", False, {"index": i, "degree": d, "source": ns, "model": nm})
            if unit_map is None or not ns:
                continue
            imgs = [_apply(unit_map, r) for r in Hs.cycle_reps[d]]
            cols = np.array([Hm.coordinates(v) if v.any() else np.zeros(nm, dtype=np.uint8)
                             for v in imgs], dtype=np.uint8)
            if la.rank(cols) != ns:
                return CheckReport("certify", False, {"index": i, "degree": d, "not_iso": True})
    return CheckReport("certify", True, None, {"certified": [c0, c1]})


def _bad_profile(Z: GradedModule, outside):
    """(lowest degree, classes there, index, representative) over outside indices."""
    found = []
    for i in sorted(outside):
        H = mg.margolis_homology(Z, i)
        if H.cycle_reps:
            d = min(H.cycle_reps)
            found.append((d, i, H.cycle_reps[d][0], H.dims[d]))
    if not found:
        return None
    d = min(f[0] for f in found)
    at = [f for f in found if f[0] == d]
    return d, sum(f[3] for f in at), at[0][1], at[0][2]


def _candidates(outside, i: int) -> list[tuple[int, ...]]:
    full = tuple(sorted(outside))
    return [full] if full == (i,) else [full, (i,)]


def _progress_key(Z: GradedModule, outside) -> tuple:
    """Lowest surviving class per outside index, highest index first (bigger is better)."""
    key = []
    for j in sorted(outside, reverse=True):
        H = mg.margolis_homology(Z, j)
        if H.cycle_reps:
            d = min(H.cycle_reps)
            key.append((d, -H.dims[d]))
        else:
            key.append((float("inf"), 0))
    return tuple(key)


def _attach(Z: GradedModule, u, d: int, i: int, z, outside):
    """Try the candidate cells in order; keep the first cone that makes progress.

    Progress is lexicographic over the outside indices from the highest down:
    the lowest class of H(-; p_j) moves up or loses multiplicity. A kill with
    the full cell may drop a lower-index class by a degree; the next kills
    repair it. Returns (cell, new model, new unit vector).
    """
    a = Z.algebra
    before = _progress_key(Z, outside)
    tried = []
    for ops in _candidates(outside, i):
        if any(_apply(Z.act(mg.op(a, j).element), z).any() for j in ops):
            tried.append(f"{ops}: generator not annihilated")
            continue
        try:
            cell = make_cell(a, ops, d, outside, i)
        except NoValidCellError as exc:
            tried.append(str(exc))
            continue
        Q, into = cofiber(cell_map(cell, Z, z))
        s = st.strip_free(Q)
        if _progress_key(s.reduced, outside) > before:
            return cell, s.reduced, _apply(s.projection, _apply(into, u))
        tried.append(f"{ops}: cone makes no progress")
    raise NoValidCellError(f"no cell kills the p_{i} class in degree {d}: " + "; ".join(tried))


def _below(a: hopf.HopfAlgebra, seg: tuple[int, int], lo: int, hi: int) -> LocalUnit:
    N = a.N
    inside = frozenset(range(seg[0], seg[1] + 1))
    outside = frozenset(range(1, N + 1)) - inside
    one = gmod.unit(a)
    if not outside:
        w = Window(lo, hi, 0)
        return LocalUnit(a, seg, BELOW, one, w, gmod.identity(one), [], [Stage(one, np.ones(1, np.uint8))])
    # the tallest candidate cell sets the margin
    heights = []
    for ops in {tuple(sorted(outside))} | {(i,) for i in outside}:
        try:
            heights.append(make_cell(a, ops, 0, outside).height)
        except NoValidCellError:
            pass
    if not heights:
        raise NoValidCellError(f"no candidate cell is concentrated on {sorted(outside)}")
    margin = max(heights)
    if hi - lo < margin:
        raise WindowTooSmallError(f"window [{lo},{hi}] narrower than the cell height {margin}")
    Z, u = one, np.ones(1, dtype=np.uint8)
    stages = [Stage(Z, u)]
    cells = []
    while True:
        low = _bad_profile(Z, outside)
        if low is None or low[0] > hi - margin:
            break
        d, _, i, z = low
        cell, Z, u = _attach(Z, u, d, i, z, outside)
        Z.name = f"L[{seg[0]},{seg[1]}]"
        cells.append((d, i))
        stages.append(Stage(Z, u))
        if len(cells) > _MAX_CELLS:
            raise WindowTooSmallError(f"more than {_MAX_CELLS} cells; window too large to certify")
    w = Window(lo, hi, margin)
    return LocalUnit(a, seg, BELOW, Z, w, _unit_map(Z, u), cells, stages)


def _fiber_of_unit(Z: GradedModule, u) -> tuple[GradedModule, ModuleMap]:
    """Fiber of the unit 1 -> Z, stripped, with its map to 1."""
    fb = fiber(_unit_map(Z, u))
    s = st.strip_free(fb.module)
    return s.reduced, fb.to_source @ s.inclusion


@dataclass
class Fiber:
    """F = ker(m (+) P(L) -> L) for f: m -> L, with the pieces needed downstream."""
    module: GradedModule
    inclusion: ModuleMap  # F -> m (+) P(L)
    to_source: ModuleMap  # F -> m
    total: GradedModule  # m (+) P(L)
    index: list  # positions of m and P(L) in total
    cover: st.Cover | None


def fiber(f: ModuleMap) -> Fiber:
    m, L = f.source, f.target
    if L.dim == 0:
        return Fiber(m, gmod.identity(m), gmod.identity(m), m,
                     [np.arange(m.dim), np.zeros(0, dtype=np.int64)], None)
    c = st.projective_cover(L)
    S, idx = gmod.direct_sum_with_index(m, c.P)
    phi = np.zeros((L.dim, S.dim), dtype=np.uint8)
    phi[:, idx[0]] = f.matrix
    phi[:, idx[1]] = c.q.matrix
    F, inc = gmod.submodule(S, la.kernel(phi))
    to_m = np.zeros((m.dim, S.dim), dtype=np.uint8)
    to_m[np.arange(m.dim), idx[0]] = 1
    return Fiber(F, inc, ModuleMap(F, m, la.mul(to_m, inc.matrix)), S, idx, c)


def _above(a: hopf.HopfAlgebra, seg: tuple[int, int], lo: int, hi: int) -> LocalUnit:
    N = a.N
    if seg[1] == N:
        one = gmod.unit(a)
        return LocalUnit(a, seg, ABOVE, one, Window(lo, hi, 0, ABOVE), gmod.identity(one), [],
                         [Stage(one, np.ones(1, np.uint8))])
    comp = _below(a, (seg[1] + 1, N), -hi, -lo)
    stages = []
    for sg in comp.stages:
        F, to_one = _fiber_of_unit(sg.model, sg.unit)
        D = gmod.dual(F)
        s = st.strip_free(D)
        # dual of F -> 1 is 1 -> D(F); its single column
        col = gmod.dual_map(to_one).matrix[:, 0]
        stages.append(Stage(s.reduced, _apply(s.projection, col)))
    last = stages[-1]
    last.model.name = f"L[{seg[0]},{seg[1]}]"
    w = Window(lo, hi, comp.window.margin, ABOVE)
    return LocalUnit(a, seg, ABOVE, last.model, w, _unit_map(last.model, last.unit), comp.cells, stages)


def build_local_unit(a: hopf.HopfAlgebra, segment, side: str = BELOW, window=(0, 24)) -> LocalUnit:
    """Windowed model of the localization of the unit at U[a, b].

    side "below" needs b = N (bounded-below localization), side "above"
    needs a = 1 (bounded-above, built as a dual). The result is certified
    before it is returned.
    """
    seg = _segment(a, segment)
    lo, hi = (window.lo, window.hi) if isinstance(window, Window) else (int(window[0]), int(window[1]))
    if side == BELOW:
        if seg[1] != a.N:
            raise ValueError(f"side below needs the segment to end at {a.N}")
        unit = _below(a, seg, lo, hi)
    elif side == ABOVE:
        if seg[0] != 1:
            raise ValueError("side above needs the segment to start at 1")
        unit = _above(a, seg, lo, hi)
    else:
        raise ValueError(f"unknown side {side!r}")
    rep = unit.certify()
    if not rep:
        raise CertificationError(f"unit for {seg} ({side}) failed certification: {rep.first_failure}")
    return unit


# -- localizing modules ---------------------------------------------------------

@dataclass
class Localized:
    """A windowed local object with its unit map m -> module."""
    module: GradedModule
    window: Window
    unit_map: ModuleMap
    unit: LocalUnit | None = field(default=None, repr=False)

    def __iter__(self):
        yield self.module
        yield self.window


def _tensor_unit_full(model: GradedModule, u, m: GradedModule):
    """model (x) m stripped, with x -> u (x) x; also returns the stripping and positions."""
    T, pos = gmod.tensor_with_index(model, m)
    mat = np.zeros((T.dim, m.dim), dtype=np.uint8)
    for i in np.flatnonzero(_vec(u)):
        mat[pos[i], np.arange(m.dim)] ^= 1
    s = st.strip_free(T)
    return s.reduced, ModuleMap(m, s.reduced, la.mul(s.projection.matrix, mat)), s, T, pos


def _tensor_unit(model: GradedModule, u, m: GradedModule) -> tuple[GradedModule, ModuleMap]:
    X, eta, _, _, _ = _tensor_unit_full(model, u, m)
    return X, eta


def localize(m: GradedModule, unit: LocalUnit, check: bool = True) -> Localized:
    """L (x) m with the window moved by m's degree range; certification re-checked."""
    if m.algebra.name != unit.algebra.name:
        raise gmod.AlgebraMismatchError(f"{m.algebra.name} vs {unit.algebra.name}")
    if m.dim == 0:
        return Localized(m, unit.window, gmod.identity(m), unit)
    X, eta = _tensor_unit(unit.model, unit.unit_map.matrix[:, 0], m)
    w = unit.window.tensor(m)
    X.name = f"{unit.model.name}({m.name})" if m.name else unit.model.name
    if check:
        rep = certify(X, m, eta, unit.inside, w)
        if not rep:
            raise CertificationError(f"localization of {m.name or 'module'} failed: {rep.first_failure}")
    return Localized(X, w, eta, unit)


def unit_window_for(m: GradedModule, window) -> tuple[int, int]:
    """Unit window whose tensor with m certifies from ``window``'s low end."""
    lo, hi = (window.lo, window.hi) if isinstance(window, Window) else window
    if m.dim == 0:
        return lo, hi
    return lo - m.lo, hi - m.lo


# -- Postnikov triangles ----------------------------------------------------------

@dataclass
class PostnikovTriangle:
    """colocal -> module -> local -> Omega^{-1} colocal, with the edge Omega(local) -> colocal."""
    colocal: GradedModule
    module: GradedModule
    local: GradedModule
    edge: ModuleMap  # Omega(local) -> colocal
    to_module: ModuleMap  # colocal -> module
    unit_map: ModuleMap  # module -> local
    omega_inclusion: ModuleMap  # Omega(local) -> P(local)
    b: int
    window: Window

    def check(self) -> CheckReport:
        """Maps are module maps, compose to zero, and the edge lands in the fiber."""
        for name, f in (("edge", self.edge), ("to_module", self.to_module), ("unit_map", self.unit_map)):
            if not f.is_equivariant():
                return CheckReport("postnikov", False, f"{name} not a module map")
        if la.mul(self.unit_map.matrix, self.to_module.matrix).any() and \
                not st.is_stably_trivial(self.unit_map @ self.to_module):
            return CheckReport("postnikov", False, "composite colocal -> local not stably trivial")
        if (self.to_module @ self.edge).matrix.any():
            return CheckReport("postnikov", False, "edge does not map to zero in the module")
        return CheckReport("postnikov", True, None, {"window": self.window.to_json()})

    def to_json(self) -> dict:
        dims = lambda X: {str(d): v for d, v in X.dims.items() if v}
        return {"b": self.b, "window": self.window.to_json(), "colocal": dims(self.colocal),
                "local": dims(self.local), "module": dims(self.module),
                "omega_local_dim": self.edge.source.dim}


def postnikov(m: GradedModule, b: int, window=(0, 24), unit: LocalUnit | None = None) -> PostnikovTriangle:
    """Triangle Z'[1,b] -> m -> Z[b+1,N] with the edge Omega Z[b+1,N] -> Z'[1,b].

    The local part is m localized at [b+1, N] (bounded below); the colocal
    part is the fiber ker(m (+) P(L) -> L).
    """
    a = m.algebra
    if not 1 <= b < a.N:
        raise ValueError(f"postnikov cut b={b} must lie in [1,{a.N - 1}]")
    if unit is None:
        unit = build_local_unit(a, (b + 1, a.N), BELOW, unit_window_for(m, window))
    loc = localize(m, unit)
    L = loc.module
    fb = fiber(loc.unit_map)
    C = fb.module
    if L.dim == 0:
        K = gmod.zero(a)
        e = ModuleMap(K, C, np.zeros((C.dim, 0), dtype=np.uint8))
        oi = ModuleMap(K, K, np.zeros((0, 0), dtype=np.uint8))
        return PostnikovTriangle(C, m, L, e, fb.to_source, loc.unit_map, oi, b, loc.window)
    K, kin = gmod.submodule(fb.cover.P, fb.cover.q.kernel())
    V = np.zeros((fb.total.dim, K.dim), dtype=np.uint8)
    V[fb.index[1]] = kin.matrix
    X = la.solve_many(fb.inclusion.matrix, V)
    if X is None:
        raise AssertionError("Omega(local) does not lie in the fiber")
    edge = ModuleMap(K, C, X)
    C.name = f"C[1,{b}]"
    return PostnikovTriangle(C, m, L, edge, fb.to_source, loc.unit_map, kin, b, loc.window)


# -- descent data and gluing ------------------------------------------------------

@dataclass
class Edge:
    """Gluing map Omega X -> Y, with Omega X given as the kernel of P(X) -> X."""
    map: ModuleMap
    inclusion: ModuleMap  # Omega X -> P(X)
    cover: st.Cover | None  # None when X = 0


@dataclass
class DescentDatum:
    """Locals on a segmental cover with the maps that glue them.

    Two opens [1,b], [b+1,N]: locals (X1, X2) and edges [f12: Omega X2 -> X1].
    Three opens: locals (X1, X2, X3) and edges [f12, f23, d] with
    f23: Omega X3 -> X2 and d: Omega X3 -> X12, X12 the gluing of X1, X2.
    The cocycle condition is (X12 -> X2) . d = f23 stably.
    """
    cover: list[tuple[int, int]]
    locals: list[tuple[GradedModule, Window]]
    edges: list[Edge]


@dataclass
class Glued:
    module: GradedModule
    window: Window
    into: ModuleMap  # X1 -> E
    out: ModuleMap  # E -> X2
    total: GradedModule = field(default=None, repr=False)  # X1 (+) P(X2)
    index: list = field(default=None, repr=False)
    projection: ModuleMap = field(default=None, repr=False)  # total -> E

    def __iter__(self):
        yield self.module
        yield self.window


def _edge_for(X: GradedModule, target: GradedModule, images) -> Edge:
    """Edge Omega X -> target from the images (columns) of the basis of Omega X."""
    c = st.projective_cover(X)
    K, kin = gmod.submodule(c.P, c.q.kernel())
    return Edge(ModuleMap(K, target, images), kin, c)


def glue_pair(X1: GradedModule, X2: GradedModule, edge: Edge, window: Window | None = None) -> Glued:
    """Cofiber of f: Omega X2 -> X1, as (X1 (+) P(X2)) / {(f x, x)}."""
    f, kin, c = edge.map, edge.inclusion, edge.cover
    if X2.dim == 0:
        w = window if window is not None else Window(0, 0)
        eye = gmod.identity(X1)
        return Glued(X1, w, eye, gmod.zero_map(X1, X2), X1, [np.arange(X1.dim), np.zeros(0, np.int64)], eye)
    if f.target.dim != X1.dim or c.q.target.dim != X2.dim:
        raise la.DimensionError("edge does not match the locals")
    if not f.is_equivariant():
        raise ValueError("edge is not a module map")
    S, idx = gmod.direct_sum_with_index(X1, c.P)
    G = np.zeros((S.dim, f.source.dim), dtype=np.uint8)
    G[idx[0]] = f.matrix
    G[idx[1]] = kin.matrix
    E, pr = gmod.quotient(S, la.Subspace(S.dim, G.T))
    emb = np.zeros((S.dim, X1.dim), dtype=np.uint8)
    emb[idx[0], np.arange(X1.dim)] = 1
    into = ModuleMap(X1, E, la.mul(pr.matrix, emb))
    outS = np.zeros((X2.dim, S.dim), dtype=np.uint8)
    outS[:, idx[1]] = c.q.matrix
    # outS kills the graph, so it factors through the quotient: solve out . pr = outS
    out = la.solve_many(pr.matrix.T, outS.T)
    if out is None:
        raise AssertionError("X1 (+) P -> X2 does not factor through the gluing")
    w = window if window is not None else Window(0, 0)
    return Glued(E, w, into, ModuleMap(E, X2, out.T), S, idx, pr)


def _window_meet(ws) -> Window:
    c0 = max(w.certified[0] for w in ws)
    c1 = min(w.certified[1] for w in ws)
    if c0 > c1:
        raise WindowTooSmallError("local windows do not overlap")
    return Window(c0, c1, 0)


def glue(datum: DescentDatum) -> Glued:
    """Glue a two- or three-open segmental datum; checks the cocycle condition."""
    n = len(datum.locals)
    if n != len(datum.cover) or n not in (2, 3) or len(datum.edges) != {2: 1, 3: 3}[n]:
        raise ValueError("datum must have two opens with one edge or three opens with three edges")
    mods = [X for X, _ in datum.locals]
    w = _window_meet([w for _, w in datum.locals])
    if n == 2:
        return glue_pair(mods[0], mods[1], datum.edges[0], w)
    f12, f23, d = datum.edges
    X12 = glue_pair(mods[0], mods[1], f12, w)
    if d.map.target.dim != X12.module.dim or f23.map.source.dim != d.map.source.dim:
        raise la.DimensionError("edges do not match the glued pair")
    defect = ModuleMap(d.map.source, mods[1], la.mul(X12.out.matrix, d.map.matrix) ^ f23.map.matrix,
                       f23.map.shift)
    if not st.is_stably_trivial(defect):
        raise CocycleError("the composite Omega X3 -> X12 -> X2 differs from f23 stably")
    return glue_pair(X12.module, mods[2], d, w)


def _edge_into_glued(P2: PostnikovTriangle, g: Glued, P3: PostnikovTriangle) -> Edge:
    """Transport the edge Omega X3 -> C12 to the glued module X12.

    X12 = (X1 (+) P(X2)) / graph maps isomorphically onto C12 (+) P(X2) by
    (c, p) -> (c_C12, c_P + p), where X1 sits inside C12 (+) P(X2).
    """
    fb = fiber(P2.unit_map)
    S1, idx1 = fb.total, fb.index
    S, idx = g.total, g.index
    phi_S = np.zeros((S1.dim, S.dim), dtype=np.uint8)
    phi_S[:, idx[0]] = fb.inclusion.matrix
    phi_S[idx1[1][:, None], idx[1][None, :]] ^= np.eye(len(idx[1]), dtype=np.uint8)
    phi_E = la.solve_many(g.projection.matrix.T, phi_S.T)
    if phi_E is None:
        raise AssertionError("comparison map does not factor through the gluing")
    phi_E = phi_E.T
    V = np.zeros((S1.dim, P3.edge.source.dim), dtype=np.uint8)
    V[idx1[0]] = P3.edge.matrix
    D = la.solve_many(phi_E, V)
    if D is None:
        raise AssertionError("glued module is not isomorphic to the colocal part")
    return Edge(ModuleMap(P3.edge.source, g.module, D), P3.omega_inclusion, _edge_of(P3).cover)


def _edge_of(P: PostnikovTriangle) -> Edge:
    cover = st.projective_cover(P.local) if P.local.dim else None
    return Edge(P.edge, P.omega_inclusion, cover)


def datum_from_module(m: GradedModule, cover, window=(0, 24)) -> DescentDatum:
    """Restrictions of m to the opens of a segmental cover, with Postnikov edges."""
    cover = [tuple(int(x) for x in s) for s in cover]
    a = m.algebra
    if len(cover) == 2:
        b = cover[0][1]
        P = postnikov(m, b, window)
        return DescentDatum(cover, [(P.colocal, P.window), (P.local, P.window)],
                            [_edge_of(P)])
    if len(cover) == 3:
        b1, b2 = cover[0][1], cover[1][1]
        P3 = postnikov(m, b2, window)
        C12 = P3.colocal
        P2 = postnikov(C12, b1, window)
        X1, X2, X3 = P2.colocal, P2.local, P3.local
        e12 = _edge_of(P2)
        g = glue_pair(X1, X2, e12)
        d = _edge_into_glued(P2, g, P3)
        f23 = Edge(ModuleMap(d.map.source, X2, la.mul(g.out.matrix, d.map.matrix)), d.inclusion, d.cover)
        w = _window_meet([P2.window, P3.window])
        return DescentDatum(cover, [(X1, w), (X2, w), (X3, w)], [e12, f23, d])
    raise ValueError("only two- and three-open covers are supported")


# -- localized hom and Mayer-Vietoris ------------------------------------------------

def cell_margin(a: hopf.HopfAlgebra, segment) -> int:
    """Margin a unit for this segment will carry (height of the tallest candidate cell)."""
    seg = _segment(a, segment)
    if seg[0] == 1 and seg[1] < a.N:
        seg = (seg[1] + 1, a.N)
    outside = frozenset(range(1, a.N + 1)) - frozenset(range(seg[0], seg[1] + 1))
    if not outside:
        return 0
    heights = []
    for ops in {tuple(sorted(outside))} | {(i,) for i in outside}:
        try:
            heights.append(make_cell(a, ops, 0, outside).height)
        except NoValidCellError:
            pass
    return max(heights) if heights else 0


def _t_band(m: GradedModule, lo: int, hi: int) -> list[int]:
    """Degrees t for which maps m -> X of degree t only see X in [lo, hi].

    A stable map of degree t involves X in [m.lo + t - top, m.hi + t + top].
    """
    top = m.algebra.top_degree
    return [t for t in range(lo - m.lo + top, hi - m.hi - top + 1)]


def _acyclic_band(X: GradedModule, lo: int, hi: int) -> bool:
    for k in range(1, X.algebra.N + 1):
        if any(lo <= d <= hi for d in mg.margolis_homology(X, k).support()):
            return False
    return True


@dataclass
class LocalHom:
    dims: dict[int, int]  # t -> dim of stable Hom_t(m, L n)
    stage: dict[int, int]  # t -> first stage from which the value is stable
    band: tuple[int, int]  # degrees of the target that are certified

    def to_json(self) -> dict:
        return {"dims": {str(t): d for t, d in self.dims.items()},
                "stage": {str(t): k for t, k in self.stage.items()}, "band": list(self.band)}


def _stage_targets(units: list[LocalUnit], n: GradedModule) -> list[GradedModule]:
    """Localizations of n at each stage of the units (stages aligned from the end)."""
    depth = min(len(u.stages) for u in units)
    out = []
    for k in range(depth):
        X = n
        for u in units:
            sg = u.stages[len(u.stages) - depth + k]
            if X.dim:
                X, _ = _tensor_unit(sg.model, sg.unit, X)
        out.append(X)
    return out


def localized_hom(m: GradedModule, n: GradedModule, segment, side: str = BELOW, window=(0, 24),
                  t_range=None, units: list[LocalUnit] | None = None) -> LocalHom:
    """Stable Hom_t(m, L n) computed on the skeleta of the local unit.

    ``segment`` is one segment, or two segments for the intersection of their
    opens (the first taken above, the second below). For each t the value is
    reported from the first stage after which it never changes, provided at
    least two further stages confirm it; otherwise NotStabilizedError.
    """
    a = m.algebra
    segs = [tuple(segment)] if np.ndim(segment) == 1 else [tuple(s) for s in segment]
    if units is None:
        lo, hi = window
        if len(segs) == 1:
            units = [build_local_unit(a, segs[0], side, unit_window_for(n, window)
                                      if side == BELOW else (lo - cell_margin(a, segs[0]) - n.hi - 1, hi))]
        else:
            units = _mv_units(a, segs, n, (lo, hi))
    targets = _stage_targets(units, n)
    X = targets[-1]
    band = _certified_band(units, n, X)
    m = st.reduced(m)
    if t_range is not None:
        ts = list(t_range)
    else:
        ts = _t_band(m, *band) if m.dim else list(range(band[0], band[1] + 1))
    exact = all(not u.cells for u in units)
    dims, stage = {}, {}
    for t in ts:
        vals = [st.stable_hom_dim(m, Y, t) if Y.dim and m.dim else 0 for Y in targets]
        k = len(vals) - 1
        while k > 0 and vals[k - 1] == vals[-1]:
            k -= 1
        if not exact and len(vals) - k < 3:
            raise NotStabilizedError(f"Hom_{t} not stable over two further stages: {vals}")
        dims[t], stage[t] = vals[-1], k
    return LocalHom(dims, stage, band)


def _certified_band(units: list[LocalUnit], n: GradedModule, X: GradedModule) -> tuple[int, int]:
    if len(units) == 1:
        return units[0].window.tensor(n).certified if n.dim else units[0].window.certified
    (c0, _), (_, c1) = (u.window.tensor(n).certified for u in units)
    # the product of the two truncations leaves spurious classes where the frontiers meet
    if not _acyclic_band(X, c0, c1):
        H = [d for k in range(1, X.algebra.N + 1) for d in mg.margolis_homology(X, k).support()]
        inner = [d for d in H if c0 <= d <= c1]
        lo = max([d for d in inner if d < 0], default=c0 - 1) + 1
        hi = min([d for d in inner if d >= 0], default=c1 + 1) - 1
        if lo > hi:
            raise WindowTooSmallError("intersection model has no certified band")
        return lo, hi
    return c0, c1


def _mv_units(a: hopf.HopfAlgebra, segs, n: GradedModule, band) -> list[LocalUnit]:
    """Units for a two-segment cover sized so that L1 L2 n is certified on ``band``."""
    lo, hi = band
    (s1, s2) = segs
    if s1[0] != 1 or s2[1] != a.N or s1[1] + 1 != s2[0]:
        raise ValueError(f"cover {segs} is not a two-segment partition of [1,{a.N}]")
    nlo, nhi = (n.lo, n.hi) if n.dim else (0, 0)
    m2 = cell_margin(a, s2)
    m1 = cell_margin(a, s1)
    U2 = build_local_unit(a, s2, BELOW, (lo - nlo, hi - nlo + m2))
    # the above unit reaches below the band by the full height of U2 (x) n
    depth = lo - m1 - (U2.model.hi + nhi) - (nhi - nlo) - 1
    U1 = build_local_unit(a, s1, ABOVE, (depth, max(hi, 0) - nhi))
    return [U1, U2]


def _hom_classes(m: GradedModule, X: GradedModule, t: int):
    """(basis of Hom_t(m, X) as flat rows, the null-homotopic subspace)."""
    H = gmod.hom_basis(m, X, t)
    flat = H.reshape(len(H), -1) if len(H) else np.zeros((0, X.dim * m.dim), dtype=np.uint8)
    return flat, st.phom_subspace(m, X, t)


def _post(f: ModuleMap, flat: np.ndarray, mdim: int) -> np.ndarray:
    """Compose flattened maps (rows) m -> f.source with f."""
    if len(flat) == 0:
        return np.zeros((0, f.target.dim * mdim), dtype=np.uint8)
    G = flat.reshape(len(flat), f.source.dim, mdim).transpose(1, 0, 2).reshape(f.source.dim, -1)
    out = la.mul(f.matrix, G).reshape(f.target.dim, len(flat), mdim).transpose(1, 0, 2)
    return out.reshape(len(flat), -1)


def _rank_mod(rows: np.ndarray, sub: la.Subspace) -> int:
    if len(rows) == 0:
        return 0
    red = sub.reduce(rows.T).T if sub.dim else rows
    return la.rank(red)


@dataclass
class MVData:
    units: list[LocalUnit]
    n: GradedModule
    L1: GradedModule
    L2: GradedModule
    L12: GradedModule
    eta1: ModuleMap  # n -> L1
    eta2: ModuleMap  # n -> L2
    iota1: ModuleMap  # L1 -> L12
    iota2: ModuleMap  # L2 -> L12
    band: tuple[int, int]


def mv_data(n: GradedModule, cover, band) -> MVData:
    """The square n -> L1 n, L2 n -> L1 L2 n for a two-segment cover."""
    a = n.algebra
    segs = [tuple(int(x) for x in s) for s in cover]
    U1, U2 = _mv_units(a, segs, n, band)
    u1, u2 = U1.unit_map.matrix[:, 0], U2.unit_map.matrix[:, 0]
    L1, eta1 = _tensor_unit(U1.model, u1, n)
    L2, eta2, s2, _, _ = _tensor_unit_full(U2.model, u2, n)
    L12, iota1, s12, _, pos12 = _tensor_unit_full(U2.model, u2, L1)
    # iota2: U2 (x) n -> U2 (x) L1 is id (x) eta1, then strip
    _, pos2 = gmod.tensor_with_index(U2.model, n)
    raw = np.zeros((pos12.size, pos2.size), dtype=np.uint8)
    for i in range(U2.model.dim):
        raw[np.ix_(pos12[i], pos2[i])] = eta1.matrix
    iota2 = ModuleMap(L2, L12, la.mul(s12.projection.matrix, la.mul(raw, s2.inclusion.matrix)))
    c = _certified_band([U1, U2], n, L12)
    lo, hi = band
    c = (max(c[0], lo), min(c[1], hi, U2.window.tensor(n).certified[1]))
    return MVData([U1, U2], n, L1, L2, L12, eta1, eta2, iota1, iota2, c)


def mv_check(m: GradedModule, n: GradedModule, cover, window=(-12, 12), t_range=None,
             oracle: bool = True) -> CheckReport:
    """Exactness of [m, n]_t -> [m, L1 n]_t (+) [m, L2 n]_t -> [m, L1 L2 n]_t at the middle.

    Brackets are stable Hom groups of degree t; t runs over the degrees whose
    maps only see certified parts of the three localizations. With ``oracle``
    the column dimensions are cross-checked against localized_hom.
    """
    D = mv_data(n, cover, window)
    m = st.reduced(m)
    if t_range is not None:
        ts = list(t_range)
    else:
        ts = _t_band(m, *D.band) if m.dim else list(range(D.band[0], D.band[1] + 1))
    if not ts:
        raise WindowTooSmallError(f"no certified degrees t for band {D.band}")
    if m.dim == 0 or n.dim == 0:
        rows = [{"t": t, "dims": [0, 0, 0, 0], "rank_alpha": 0, "ker_beta": 0, "composite_zero": True}
                for t in ts]
        return CheckReport("mv", True, None, {"degrees": ts, "band": list(D.band), "rows": rows})
    rows = []
    lh = {}
    if oracle:
        segs = [tuple(s) for s in cover]
        lh = {"L1": localized_hom(m, n, segs[0], ABOVE, units=[D.units[0]], t_range=ts).dims,
              "L2": localized_hom(m, n, segs[1], BELOW, units=[D.units[1]], t_range=ts).dims,
              "L12": localized_hom(m, n, segs, units=D.units, t_range=ts).dims}
    for t in ts:
        H0, P0 = _hom_classes(m, n, t)
        H1, P1 = _hom_classes(m, D.L1, t)
        H2, P2 = _hom_classes(m, D.L2, t)
        H12, P12 = _hom_classes(m, D.L12, t)
        dims = [_rank_mod(H, P) for H, P in ((H0, P0), (H1, P1), (H2, P2), (H12, P12))]
        n1, n2 = D.L1.dim * m.dim, D.L2.dim * m.dim
        # alpha on classes of [m, n]_t, into the middle modulo P1 (+) P2
        mid_P = la.Subspace(n1 + n2, np.concatenate([
            np.concatenate([P1.dense(), np.zeros((P1.dim, n2), np.uint8)], axis=1) if P1.dim else np.zeros((0, n1 + n2), np.uint8),
            np.concatenate([np.zeros((P2.dim, n1), np.uint8), P2.dense()], axis=1) if P2.dim else np.zeros((0, n1 + n2), np.uint8)]))
        alpha = np.concatenate([_post(D.eta1, H0, m.dim), _post(D.eta2, H0, m.dim)], axis=1)
        r_alpha = _rank_mod(alpha, mid_P)
        # beta on all of Hom(m, L1) (+) Hom(m, L2), modulo P12
        B = np.concatenate([_post(D.iota1, H1, m.dim), _post(D.iota2, H2, m.dim)], axis=0)
        Bred = P12.reduce(B.T).T if P12.dim and len(B) else B
        ker_total = len(B) - (la.rank(Bred) if len(B) else 0)
        # P1 (+) P2 lies in the kernel of beta; subtract it to get classes
        ker_beta = ker_total - (_rank_mod(H1, la.Subspace(n1)) - dims[1]) - (_rank_mod(H2, la.Subspace(n2)) - dims[2])
        ba = _post(D.iota1, alpha[:, :n1], m.dim) ^ _post(D.iota2, alpha[:, n1:], m.dim) if len(alpha) else alpha
        composite_zero = _rank_mod(ba, P12) == 0
        row = {"t": t, "dims": dims, "rank_alpha": r_alpha, "ker_beta": ker_beta,
               "composite_zero": composite_zero}
        if oracle:
            row["oracle"] = [lh["L1"][t], lh["L2"][t], lh["L12"][t]]
            if row["oracle"] != dims[1:]:
                return CheckReport("mv", False, {"t": t, "reason": "oracle mismatch"}, {"rows": rows + [row]})
        rows.append(row)
        if not composite_zero or r_alpha != ker_beta:
            return CheckReport("mv", False, {"t": t, "reason": "not exact at the middle"}, {"rows": rows})
    return CheckReport("mv", True, None, {"degrees": ts, "band": list(D.band), "rows": rows})


def segment_model(m: GradedModule, segment, window=(0, 24)) -> Localized:
    """Model of m on U[a, b] for any segment.

    Anchored segments use one unit. For 1 < a <= b < N the model is the
    colocal part of the [b+1, N] Postnikov triangle of the [a, N]-localization:
    first localize below at [a, N], then take the fiber towards [b+1, N].
    """
    a = m.algebra
    s0, s1 = _segment(a, segment)
    if s1 == a.N:
        return localize(m, build_local_unit(a, (s0, s1), BELOW, unit_window_for(m, window)))
    if s0 == 1:
        lo, hi = window
        return localize(m, build_local_unit(a, (s0, s1), ABOVE, (lo - m.hi, hi - m.lo)))
    first = localize(m, build_local_unit(a, (s0, a.N), BELOW, unit_window_for(m, window)))
    X = first.module
    if X.dim == 0:
        return first
    c1 = first.window.certified[1]
    P = postnikov(X, s1, (first.window.lo, c1 + cell_margin(a, (s1 + 1, a.N))))
    w = P.window
    rep = certify(P.colocal, m, None, range(s0, s1 + 1), w)
    if not rep:
        raise CertificationError(f"segment model for {(s0, s1)} failed: {rep.first_failure}")
    # the composite goes the wrong way (colocal -> first), so no unit map is kept
    return Localized(P.colocal, w, None, None)
