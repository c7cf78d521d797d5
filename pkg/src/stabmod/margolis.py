"""Margolis homology H(M; p_k) = ker p_k / im p_k and checks built on it."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gmod, hopf
from . import linalg2 as la
from . import stable
from .gmod import GradedModule, ModuleMap


class BadIndexError(IndexError):
    pass


@dataclass
class CheckReport:
    name: str
    passed: bool
    first_failure: object = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"check": self.name, "pass": self.passed,
                "first_failure": self.first_failure, **self.details}

    def __bool__(self) -> bool:
        return self.passed

    def __str__(self) -> str:
        s = "pass" if self.passed else f"FAIL (first failure: {self.first_failure})"
        return f"{self.name}: {s}"


@dataclass
class MargolisHomology:
    module: GradedModule
    k: int
    dims: dict[int, int]
    cycle_reps: dict[int, np.ndarray]
    boundaries: la.Subspace = field(repr=False, default=None)

    @property
    def total(self) -> int:
        return sum(self.dims.values())

    def support(self) -> list[int]:
        return [d for d, v in self.dims.items() if v]

    def coordinates(self, v) -> np.ndarray:
        """Class of a cycle in the representative basis of its degree."""
        d = self.module.element_degree(v)
        reps = self.cycle_reps.get(d, np.zeros((0, self.module.dim), dtype=np.uint8))
        cols = list(reps) + (list(self.boundaries.dense()) if self.boundaries.dim else [])
        if not cols:
            return np.zeros(0, dtype=np.uint8)
        x = la.solve(np.array(cols, dtype=np.uint8).T, v)
        if x is None:
            raise ValueError("vector is not a cycle")
        return x[: len(reps)]

    def to_json(self) -> dict:
        return {"op": self.k, "dims": {str(d): v for d, v in self.dims.items() if v}}


def op(a: hopf.HopfAlgebra, k: int) -> hopf.MargolisOp:
    if not 1 <= k <= a.N:
        raise BadIndexError(f"margolis index {k} outside 1..{a.N}")
    return a.margolis_ops[k - 1]


def _rows_by_degree(S: la.Subspace, degrees: np.ndarray) -> dict[int, np.ndarray]:
    """Echelon rows of a homogeneous subspace grouped by degree (degree of the pivot)."""
    if S.dim == 0:
        return {}
    rows = S.dense()
    rdeg = degrees[list(S.pivots)]
    return {int(d): rows[rdeg == d] for d in np.unique(rdeg)}


def homology_of(P: np.ndarray, degrees: np.ndarray, e: int, module: GradedModule, k: int) -> MargolisHomology:
    """Homology of a square-zero degree-e operator P on a graded basis."""
    n = len(degrees)
    Z = la.kernel(P)
    B = la.image(P)
    zrows = _rows_by_degree(Z, degrees)
    brows = _rows_by_degree(B, degrees)
    dims = {}
    reps = {}
    for d in sorted(set(degrees.tolist())):
        zd = zrows.get(d)
        bd = brows.get(d)
        nz = 0 if zd is None else len(zd)
        nb = 0 if bd is None else len(bd)
        dims[d] = nz - nb
        if dims[d]:
            r = la.quotient_basis(la.Subspace(n, bd), la.Subspace(n, zd))
            reps[d] = np.array(r, dtype=np.uint8)
    if module is not None and module.dim:
        dims = {d: dims.get(d, 0) for d in range(module.lo, module.hi + 1)}
    return MargolisHomology(module, k, dims, reps, B)


def margolis_homology(m: GradedModule, k: int) -> MargolisHomology:
    p = op(m.algebra, k)
    P = m.act(p.element)
    if la.mul(P, P).any():
        raise AssertionError("margolis operation does not square to zero on the module")
    return homology_of(P, m.degrees, p.degree, m, k)


def is_free(m: GradedModule) -> bool:
    return all(margolis_homology(m, k).total == 0 for k in range(1, m.algebra.N + 1))


def concentration(m: GradedModule) -> frozenset[int]:
    """Indices k with H(M; p_k) nonzero."""
    return frozenset(k for k in range(1, m.algebra.N + 1) if margolis_homology(m, k).total)


# -- Kunneth ----------------------------------------------------------------

def _dims_of(P, degrees):
    zrows = _rows_by_degree(la.kernel(P), degrees)
    brows = _rows_by_degree(la.image(P), degrees)
    return {d: len(zrows.get(d, ())) - len(brows.get(d, ())) for d in sorted(set(degrees.tolist()))}


def _convolve(x: dict, y: dict) -> dict:
    out: dict[int, int] = {}
    for d1, a in x.items():
        for d2, b in y.items():
            if a and b:
                out[d1 + d2] = out.get(d1 + d2, 0) + a * b
    return out


def check_kunneth(m: GradedModule, n: GradedModule, k: int) -> CheckReport:
    p = op(m.algebra, k)
    hm = margolis_homology(m, k).dims
    hn = margolis_homology(n, k).dims
    conv = _convolve(hm, hn)
    # p acts on M (x) N as p (x) 1 + 1 (x) p, in the pair basis (i, j)
    Pm, Pn = m.act(p.element), n.act(p.element)
    P = np.kron(Pm, np.eye(n.dim, dtype=np.uint8)) ^ np.kron(np.eye(m.dim, dtype=np.uint8), Pn)
    degs = (m.degrees[:, None] + n.degrees[None, :]).reshape(-1)
    prim = _dims_of(P, degs) if len(degs) else {}
    # independent path through the generic tensor action
    T = gmod.tensor(m, n)
    general = _dims_of(T.act(p.element), T.degrees) if T.dim else {}
    degrees = sorted(set(conv) | set(prim) | set(general))
    for d in degrees:
        trip = (prim.get(d, 0), general.get(d, 0), conv.get(d, 0))
        if len(set(trip)) != 1:
            return CheckReport("kunneth", False, d, {"op": k, "tensor": trip[0], "generic": trip[1],
                                                     "convolution": trip[2]})
    return CheckReport("kunneth", True, None, {"op": k, "dims": {str(d): v for d, v in conv.items() if v}})


# -- long exact sequence -------------------------------------------------------

def _class_matrix(f: np.ndarray, src: MargolisHomology, dst: MargolisHomology, d: int, d_out: int) -> np.ndarray:
    """Matrix of a cycle-level linear map on homology classes, degree d -> d_out."""
    reps = src.cycle_reps.get(d)
    nout = dst.dims.get(d_out, 0)
    if reps is None or len(reps) == 0:
        return np.zeros((nout, 0), dtype=np.uint8)
    cols = []
    for r in reps:
        img = f(r)
        if not img.any():
            cols.append(np.zeros(nout, dtype=np.uint8))
        else:
            cols.append(dst.coordinates(img) if nout else np.zeros(0, dtype=np.uint8))
    return np.array(cols, dtype=np.uint8).T.reshape(nout, len(reps))


def connecting_map(inj: ModuleMap, surj: ModuleMap, k: int):
    """delta: H_d(N) -> H_{d+|p|}(L) by lifting to M, applying p, pulling back to L."""
    p = op(inj.source.algebra, k)
    PM = surj.source.act(p.element)

    def delta(z):
        y = la.solve(surj.matrix, z)
        if y is None:
            raise AssertionError("surjection does not hit a cycle")
        py = la.mul(PM, y[:, None])[:, 0]
        x = la.solve(inj.matrix, py)
        if x is None:
            raise AssertionError("p y does not lie in the image of the injection")
        return x

    return delta


def check_ses(inj: ModuleMap, surj: ModuleMap) -> CheckReport:
    L, M, N = inj.source, inj.target, surj.target
    if surj.source is not M and surj.source.dim != M.dim:
        return CheckReport("ses", False, "middle terms differ")
    if not (inj.is_equivariant() and surj.is_equivariant()):
        return CheckReport("ses", False, "maps not equivariant")
    if inj.shift or surj.shift:
        return CheckReport("ses", False, "maps must preserve degree")
    if la.rank(inj.matrix) != L.dim:
        return CheckReport("ses", False, "first map not injective")
    if la.rank(surj.matrix) != N.dim:
        return CheckReport("ses", False, "second map not surjective")
    if la.mul(surj.matrix, inj.matrix).any() or L.dim + N.dim != M.dim:
        return CheckReport("ses", False, "not exact in the middle")
    return CheckReport("ses", True)


def check_les(inj: ModuleMap, surj: ModuleMap, k: int) -> CheckReport:
    """Exactness of ... -> H_d L -> H_d M -> H_d N -> H_{d+|p|} L -> ... at every node."""
    ses = check_ses(inj, surj)
    if not ses:
        return CheckReport("les", False, ses.first_failure)
    L, M, N = inj.source, inj.target, surj.target
    e = op(M.algebra, k).degree
    HL, HM, HN = (margolis_homology(X, k) for X in (L, M, N))
    i_ = lambda v: la.mul(inj.matrix, v[:, None])[:, 0]
    j_ = lambda v: la.mul(surj.matrix, v[:, None])[:, 0]
    delta = connecting_map(inj, surj, k)
    lo = min(X.lo for X in (L, M, N) if X.dim) - e
    hi = max(X.hi for X in (L, M, N) if X.dim) + e

    def dim(H, d):
        return H.dims.get(d, 0)

    nodes = 0
    for d in range(lo, hi + 1):
        fi = _class_matrix(i_, HL, HM, d, d)
        fj = _class_matrix(j_, HM, HN, d, d)
        fd = _class_matrix(delta, HN, HL, d, d + e)
        fd_prev = _class_matrix(delta, HN, HL, d - e, d)
        fj_ok = fj.reshape(dim(HN, d), dim(HM, d))
        # exact at H_d(L): ker i = im delta_{d-e}
        checks = [
            ("H(L)", d, fd_prev, fi.reshape(dim(HM, d), dim(HL, d)), dim(HL, d)),
            ("H(M)", d, fi.reshape(dim(HM, d), dim(HL, d)), fj_ok, dim(HM, d)),
            ("H(N)", d, fj_ok, fd.reshape(dim(HL, d + e), dim(HN, d)), dim(HN, d)),
        ]
        for node, deg, f_in, f_out, size in checks:
            nodes += 1
            if f_in.size and f_out.size and la.mul(f_out, f_in).any():
                return CheckReport("les", False, [node, deg], {"op": k})
            r_in = la.rank(f_in) if f_in.size else 0
            r_out = la.rank(f_out) if f_out.size else 0
            if r_in != size - r_out:
                return CheckReport("les", False, [node, deg], {"op": k})
    return CheckReport("les", True, None, {"op": k, "nodes": nodes})


def submodule_ses(m: GradedModule, sub) -> tuple[ModuleMap, ModuleMap]:
    S, inc = gmod.submodule(m, sub)
    Q, proj = gmod.quotient(m, la.Subspace(m.dim, inc.matrix.T) if S.dim else la.Subspace(m.dim))
    return inc, proj


# -- comparison with Ext over Lambda(p_k) --------------------------------------

def restrict_to_elementary(m: GradedModule, k: int) -> GradedModule:
    sub, emb = hopf.elementary(m.algebra, k)
    return gmod.restrict(m, sub, emb)


def check_ext_comparison(m: GradedModule, k: int, s_window=(-2, 3)) -> CheckReport:
    """H^d(m; p_k) = Ext^{s, s|p_k| - d} over Lambda(p_k) of (1, m restricted), every s."""
    p = op(m.algebra, k)
    e = p.degree
    H = margolis_homology(m, k)
    R = restrict_to_elementary(m, k)
    one = gmod.unit(R.algebra)
    s0, s1 = s_window
    degrees = range(m.lo - e, m.hi + e + 1) if m.dim else range(0, 1)
    tvals = [s * e - d for s in range(s0, s1 + 1) for d in degrees]
    chart = stable.stable_ext(one, R, (s0, s1), (min(tvals), max(tvals)))
    compared = 0
    for s in range(s0, s1 + 1):
        for d in degrees:
            lhs = H.dims.get(d, 0)
            rhs = chart[s, s * e - d]
            compared += 1
            if lhs != rhs:
                return CheckReport("ext-comparison", False, [s, d], {"op": k, "margolis": lhs, "ext": rhs})
    return CheckReport("ext-comparison", True, None, {"op": k, "compared": compared})
