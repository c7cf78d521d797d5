"""Stable module category: covers, syzygies, free stripping, stable maps, Ext.

Conventions. Omega is the kernel of the minimal projective cover with no
regrading, and Omega^{-1} the cokernel of the injective hull. Ext^{s,t}(m, n)
for s >= 1 is computed from a minimal resolution P of m as the cohomology of
Hom_A(P_s, n) in maps lowering degree by t; for s <= 0 it is Ext^{1,t} of
Omega^{s-1} m, which makes Ext^{0,t} the stable maps lowering degree by t.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gmod, hopf
from . import linalg2 as la
from .gmod import GradedModule, ModuleMap


class ZeroModuleError(ValueError):
    pass


class OutOfRegionError(KeyError):
    pass


# -- free summands ----------------------------------------------------------

@dataclass
class Stripped:
    reduced: GradedModule
    free_ranks: dict[int, int]
    inclusion: ModuleMap  # reduced -> m
    projection: ModuleMap  # m -> reduced, left inverse of inclusion
    free_inclusion: ModuleMap | None = None  # free module P -> m onto the split summand
    free_projection: ModuleMap | None = None  # m -> P, left inverse of free_inclusion

    def __iter__(self):
        yield self.reduced
        yield self.free_ranks


def integral_action(m: GradedModule) -> np.ndarray:
    return m.act(m.algebra.integral)


def free_rank(m: GradedModule) -> int:
    return la.rank(integral_action(m))


def strip_free(m: GradedModule) -> Stripped:
    """Split M = reduced (+) free part using the action of the integral t."""
    a = m.algebra
    n = m.dim
    T = integral_action(m)
    if n == 0 or not T.any():
        eye = np.eye(n, dtype=np.uint8)
        return Stripped(m, {}, ModuleMap(m, m, eye), ModuleMap(m, m, eye))
    top = a.top_degree
    # homogeneous vectors e_j whose images t e_j are independent
    _, piv = la.rref(T)
    cols = list(piv)
    W = T[:, cols]
    free_ranks: dict[int, int] = {}
    for j in cols:
        d = int(m.degrees[j])
        free_ranks[d] = free_ranks.get(d, 0) + 1
    # functionals psi_i supported in degree deg(e_j) + top with psi_i(t e_k) = delta
    Psi = np.zeros((len(cols), n), dtype=np.uint8)
    cdeg = m.degrees[cols]
    for d in sorted(set(cdeg.tolist())):
        sel = np.flatnonzero(cdeg == d)
        blk = m.block(d + top)
        Wd = W[blk][:, sel]  # rows in degree d+top
        X = la.solve_many(Wd.T, np.eye(len(sel), dtype=np.uint8))
        if X is None:
            raise AssertionError("integral images not independent within a degree")
        Psi[np.ix_(sel, np.arange(blk.start, blk.stop))] = X.T
    # complement = common kernel of psi_i . b for all algebra basis b
    stack = la.mul(Psi, m.act_all.transpose(1, 0, 2).reshape(n, -1)).reshape(len(cols), a.dim, n)
    comp = la.kernel(stack.reshape(-1, n))
    R, inc = gmod.submodule(m, comp)
    if integral_action(R).any():
        raise AssertionError("integral acts nontrivially after stripping")
    # projection: coordinates in the basis [reduced | free part]
    F = gmod.generated_submodule(m, np.eye(n, dtype=np.uint8)[cols])
    basis = np.concatenate([comp.dense(), F.dense()], axis=0) if comp.dim else F.dense()
    if basis.shape[0] != n:
        raise AssertionError("free part and complement do not span")
    coords = la.solve_many(basis.T, np.eye(n, dtype=np.uint8))
    proj = ModuleMap(m, R, coords[: comp.dim, :])
    P, index = gmod.free_with_labels(a, [int(m.degrees[j]) for j in cols])
    phi = free_map(P, index, m, np.eye(n, dtype=np.uint8)[:, cols])
    onto_F = la.mul(F.dense().T, coords[comp.dim:, :])
    fproj = ModuleMap(m, P, la.solve_many(phi.matrix, onto_F))
    R.name = m.name
    return Stripped(R, dict(sorted(free_ranks.items())), inc, proj, phi, fproj)


def reduced(m: GradedModule) -> GradedModule:
    return strip_free(m).reduced


def is_free(m: GradedModule) -> bool:
    return free_rank(m) * m.algebra.dim == m.dim


# -- covers and syzygies ----------------------------------------------------

@dataclass
class Cover:
    P: GradedModule
    q: ModuleMap
    gens: list[int]  # basis indices of m lifting a basis of m / rad m
    index: np.ndarray  # index[i, k] = position of b_k . g_i in P


def radical(m: GradedModule) -> la.Subspace:
    mats = [M for M in m.gen_actions.values()]
    if not mats or m.dim == 0:
        return la.Subspace(m.dim)
    return la.image(np.concatenate(mats, axis=1))


def free_map(P: GradedModule, index: np.ndarray, target: GradedModule, images, shift: int = 0) -> ModuleMap:
    """Module map out of a free module given the images of its generators (columns)."""
    images = np.asarray(images, dtype=np.uint8).reshape(target.dim, -1)
    mat = np.zeros((target.dim, P.dim), dtype=np.uint8)
    A = target.act_all  # (dimA, n, n)
    if images.shape[1]:
        imgs = la.mul(A.reshape(-1, target.dim), images)  # (dimA*n, gens)
        imgs = imgs.reshape(A.shape[0], target.dim, -1)
        for i in range(index.shape[0]):
            mat[:, index[i]] = imgs[:, :, i].T
    return ModuleMap(P, target, mat, shift)


def projective_cover(m: GradedModule) -> Cover:
    if m.dim == 0:
        raise ZeroModuleError("projective cover of the zero module")
    rad = radical(m)
    gens = [c for c in range(m.dim) if c not in set(rad.pivots)]
    P, index = gmod.free_with_labels(m.algebra, [int(m.degrees[c]) for c in gens])
    q = free_map(P, index, m, np.eye(m.dim, dtype=np.uint8)[:, gens])
    return Cover(P, q, gens, index)


def injective_hull(m: GradedModule) -> tuple[GradedModule, ModuleMap]:
    c = projective_cover(gmod.dual(m))
    j = gmod.dual_map(c.q)  # D(D m) = m exactly
    return j.target, ModuleMap(m, j.target, j.matrix)


def omega_raw(m: GradedModule):
    """Kernel of the projective cover (unstripped) with its inclusion into P."""
    c = projective_cover(m)
    K, inc = gmod.submodule(c.P, c.q.kernel())
    return K, inc, c


def omega(m: GradedModule) -> GradedModule:
    if m.dim == 0:
        return m
    K, _, _ = omega_raw(m)
    return reduced(K)


def omega_inv(m: GradedModule) -> GradedModule:
    if m.dim == 0:
        return m
    return gmod.dual(omega(gmod.dual(m)))


def omega_power(m: GradedModule, s: int) -> GradedModule:
    out = reduced(m)
    step = omega if s >= 0 else omega_inv
    for _ in range(abs(s)):
        out = step(out)
    return out


# -- stable maps ------------------------------------------------------------

def phom_subspace(m: GradedModule, n: GradedModule, t: int = 0) -> la.Subspace:
    """Degree-t maps m -> n factoring through a projective, as flattened matrices."""
    if n.dim == 0 or m.dim == 0:
        return la.Subspace(n.dim * m.dim)
    c = projective_cover(n)
    H = gmod.hom_basis(m, c.P, t)
    if len(H) == 0:
        return la.Subspace(n.dim * m.dim)
    comp = la.mul(c.q.matrix, H.transpose(1, 0, 2).reshape(c.P.dim, -1))
    comp = comp.reshape(n.dim, len(H), m.dim).transpose(1, 0, 2).reshape(len(H), -1)
    return la.Subspace(n.dim * m.dim, comp)


def trace_subspace(m: GradedModule, n: GradedModule, t: int = 0) -> la.Subspace:
    """Same space via the trace map phi -> sum over Delta(t) of a' phi chi(a'')."""
    a = m.algebra
    top = a.top_degree
    ks, is_ = np.nonzero(n.degrees[:, None] == m.degrees[None, :] + t - top)
    if len(ks) == 0:
        return la.Subspace(n.dim * m.dim)
    D = a.coproduct(a.integral)
    out = np.zeros((len(ks), n.dim, m.dim), dtype=np.uint8)
    for i, j in zip(*np.nonzero(D)):
        Na = n.act_all[i]
        Mb = m.act(a.apply_antipode(a.basis_vector(j)))
        out ^= (Na[:, ks].T[:, :, None] & Mb[is_, :][:, None, :])
    return la.Subspace(n.dim * m.dim, out.reshape(len(ks), -1))


def is_stably_trivial(f: ModuleMap) -> bool:
    P = phom_subspace(f.source, f.target, f.shift)
    return P.contains(f.matrix.reshape(-1))


def stable_hom_basis(m: GradedModule, n: GradedModule, t: int = 0) -> list[ModuleMap]:
    """Maps whose classes form a basis of stable Hom_t(m, n)."""
    H = gmod.hom_basis(m, n, t)
    P = phom_subspace(m, n, t)
    flat = H.reshape(len(H), -1)
    total = la.Subspace(n.dim * m.dim, flat) if len(H) else la.Subspace(n.dim * m.dim)
    reps = la.quotient_basis(P, total) if total.dim else []
    return [ModuleMap(m, n, r.reshape(n.dim, m.dim), t) for r in reps]


def stable_hom_dim(m: GradedModule, n: GradedModule, t: int = 0) -> int:
    return gmod.hom_dim(m, n, t) - phom_subspace(m, n, t).dim


def is_stably_iso(m: GradedModule, n: GradedModule) -> bool:
    rm, rn = reduced(m), reduced(n)
    return gmod.is_isomorphic(rm, rn) is not None


# -- resolutions and Ext ------------------------------------------------------

class Resolution:
    """Minimal free resolution ... -> P_1 -> P_0 -> m, built stage by stage.

    ``d[s]`` is P_s -> P_{s-1} for s >= 1 and ``d[0]`` is the augmentation
    P_0 -> m. Stages are complete (all internal degrees), so nothing is
    truncated in t.
    """

    def __init__(self, m: GradedModule):
        self.module = m
        self.P: list[GradedModule] = []
        self.index: list[np.ndarray] = []
        self.d: list[ModuleMap] = []
        self._kernel = None  # (K, inclusion into last P)
        self.minimal = True

    def extend(self, s_max: int) -> "Resolution":
        while len(self.P) <= s_max:
            if not self.P:
                target, inc = self.module, None
            else:
                target, inc = self._kernel
            if target.dim == 0:
                P, index = gmod.free_with_labels(self.module.algebra, [])
                prev = self.P[-1] if self.P else self.module
                self.P.append(P)
                self.index.append(index)
                self.d.append(gmod.zero_map(P, prev))
                self._kernel = (gmod.zero(self.module.algebra), None)
                continue
            c = projective_cover(target)
            dmat = c.q.matrix if inc is None else la.mul(inc.matrix, c.q.matrix)
            prev = self.module if inc is None else self.P[-1]
            self.P.append(c.P)
            self.index.append(c.index)
            self.d.append(ModuleMap(c.P, prev, dmat))
            K, kinc = gmod.submodule(c.P, la.kernel(dmat))
            self._kernel = (K, kinc)
        return self

    def gen_degrees(self, s: int) -> list[int]:
        self.extend(s)
        idx = self.index[s]
        return [int(self.P[s].degrees[idx[i, 0]]) for i in range(idx.shape[0])]

    def check(self) -> bool:
        """d o d = 0 and every differential lands in the radical."""
        for s in range(1, len(self.d)):
            if la.mul(self.d[s - 1].matrix, self.d[s].matrix).any():
                return False
            if not radical(self.P[s - 1]).contains_space(la.image(self.d[s].matrix)):
                return False
        return True


_RES_CACHE: dict[int, tuple[GradedModule, Resolution]] = {}


def resolution(m: GradedModule, s_max: int) -> Resolution:
    key = id(m)
    hit = _RES_CACHE.get(key)
    if hit is None or hit[0] is not m:
        hit = (m, Resolution(m))
        _RES_CACHE[key] = hit
    return hit[1].extend(s_max)


@dataclass
class ExtClass:
    s: int
    t: int
    cocycle: ModuleMap  # P_s -> n lowering degree by t (s >= 1)
    resolution: Resolution = field(repr=False, default=None)


def _cochains(res: Resolution, n: GradedModule, s: int, t: int) -> np.ndarray:
    return gmod.hom_basis(res.P[s], n, -t)


def _flat_span(mats: np.ndarray, size: int) -> la.Subspace:
    return la.Subspace(size, mats.reshape(len(mats), -1)) if len(mats) else la.Subspace(size)


def ext_cohomology(res: Resolution, n: GradedModule, s: int, t: int):
    """(cocycles, coboundaries) as subspaces of flattened Hom(P_s, n), s >= 1."""
    res.extend(s + 1)
    size = n.dim * res.P[s].dim
    C = _cochains(res, n, s, t)
    if len(C) == 0:
        return la.Subspace(size), la.Subspace(size)
    # delta(phi) = phi o d_{s+1}
    dn = res.d[s + 1].matrix
    img = la.mul(C.reshape(-1, res.P[s].dim), dn).reshape(len(C), -1)
    ker = la.kernel(img.T)
    cocycles = la.Subspace(size, la.mul(ker.dense(), C.reshape(len(C), -1))) if ker.dim else la.Subspace(size)
    Cprev = _cochains(res, n, s - 1, t) if s >= 1 else np.zeros((0,))
    if s - 1 >= 0 and len(Cprev):
        bd = la.mul(Cprev.reshape(-1, res.P[s - 1].dim), res.d[s].matrix).reshape(len(Cprev), -1)
        coboundaries = la.Subspace(size, bd)
    else:
        coboundaries = la.Subspace(size)
    return cocycles, coboundaries


def ext_dim(m: GradedModule, n: GradedModule, s: int, t: int) -> int:
    if s >= 1:
        res = resolution(m, s + 1)
        z, b = ext_cohomology(res, n, s, t)
        return z.dim - b.dim
    X = omega_power(m, s - 1)
    if X.dim == 0:
        return 0
    return ext_dim(X, n, 1, t)


def ext_basis(m: GradedModule, n: GradedModule, s: int, t: int) -> list[ExtClass]:
    """Cocycle representatives of a basis of Ext^{s,t}(m, n) for s >= 1."""
    if s < 1:
        raise OutOfRegionError("cocycle representatives are available for s >= 1")
    res = resolution(m, s + 1)
    z, b = ext_cohomology(res, n, s, t)
    reps = la.quotient_basis(b, z) if z.dim else []
    P = res.P[s]
    return [ExtClass(s, t, ModuleMap(P, n, r.reshape(n.dim, P.dim), -t), res) for r in reps]


def ext_coordinates(x: ExtClass, basis: list[ExtClass]) -> np.ndarray:
    """Coordinates of x in a class basis, modulo coboundaries."""
    res = x.resolution
    n = x.cocycle.target
    z, b = ext_cohomology(res, n, x.s, x.t)
    size = n.dim * res.P[x.s].dim
    vecs = [c.cocycle.matrix.reshape(-1) for c in basis]
    target = x.cocycle.matrix.reshape(-1)
    if b.dim:
        vecs_b = list(b.dense())
    else:
        vecs_b = []
    M = np.array(vecs + vecs_b, dtype=np.uint8).reshape(-1, size).T
    if M.shape[1] == 0:
        if target.any():
            raise OutOfRegionError("class not in the span of the basis")
        return np.zeros(0, dtype=np.uint8)
    sol = la.solve(M, target)
    if sol is None:
        raise OutOfRegionError("class not in the span of the basis")
    return sol[: len(basis)]


def is_zero_class(x: ExtClass) -> bool:
    _, b = ext_cohomology(x.resolution, x.cocycle.target, x.s, x.t)
    return b.contains(x.cocycle.matrix.reshape(-1))


def lift_chain_map(x: ExtClass, k_max: int) -> list[ModuleMap]:
    """Chain maps X_k: P_{s+k} -> P_k covering the cocycle x: P_s -> m."""
    res = x.resolution
    s = x.s
    res.extend(s + k_max + 1)
    out = []
    prev_images = None
    for k in range(k_max + 1):
        src = res.P[s + k]
        idx = res.index[s + k]
        gpos = idx[:, 0]
        if k == 0:
            rhs = x.cocycle.matrix[:, gpos]  # values in m
        else:
            rhs = la.mul(out[-1].matrix, res.d[s + k].matrix[:, gpos])  # values in P_{k-1}
        dk = res.d[k].matrix
        if len(gpos) == 0:
            images = np.zeros((res.P[k].dim, 0), dtype=np.uint8)
        else:
            images = la.solve_many(dk, rhs)
            if images is None:
                raise AssertionError("chain map lift failed: not a cocycle")
        out.append(free_map(src, idx, res.P[k], images, -x.t))
    return out


def yoneda_product(y: ExtClass, x: ExtClass) -> ExtClass:
    """y . x for classes in Ext(m, m) over the same resolution (y after x)."""
    X = lift_chain_map(x, y.s)
    comp = la.mul(y.cocycle.matrix, X[y.s].matrix)
    P = x.resolution.P[x.s + y.s]
    return ExtClass(x.s + y.s, x.t + y.t, ModuleMap(P, y.cocycle.target, comp, -(x.t + y.t)), x.resolution)


def unit_class(m: GradedModule) -> ExtClass:
    """The identity class in Ext^{0,0}(m, m) as the augmentation P_0 -> m."""
    res = resolution(m, 1)
    return ExtClass(0, 0, res.d[0], res)


# -- charts -----------------------------------------------------------------

@dataclass
class StableExtChart:
    source: GradedModule
    target: GradedModule
    entries: dict[tuple[int, int], int]
    region: tuple[int, int, int, int]  # s0, s1, t0, t1 inclusive

    def __getitem__(self, st) -> int:
        s, t = st
        s0, s1, t0, t1 = self.region
        if not (s0 <= s <= s1 and t0 <= t <= t1):
            raise OutOfRegionError(f"({s},{t}) outside computed region {self.region}")
        return self.entries.get((s, t), 0)

    def to_json(self) -> dict:
        return {"entries": [[s, t, d] for (s, t), d in sorted(self.entries.items()) if d],
                "region": list(self.region)}

    def grid(self) -> str:
        s0, s1, t0, t1 = self.region
        width = max(3, len(str(t1)) + 1, len(str(t0)) + 1)
        lines = ["s\\t " + "".join(f"{t:>{width}}" for t in range(t0, t1 + 1))]
        for s in range(s1, s0 - 1, -1):
            row = "".join(f"{(self.entries.get((s, t), 0) or '.')!s:>{width}}" for t in range(t0, t1 + 1))
            lines.append(f"{s:>3} " + row)
        return "\n".join(lines)


def stable_ext(m: GradedModule, n: GradedModule, s_range, t_range) -> StableExtChart:
    s0, s1 = s_range
    t0, t1 = t_range
    entries = {}
    for s in range(s0, s1 + 1):
        if s >= 1:
            res = resolution(m, s + 1)
            for t in range(t0, t1 + 1):
                z, b = ext_cohomology(res, n, s, t)
                entries[(s, t)] = z.dim - b.dim
        else:
            X = omega_power(m, s - 1)
            if X.dim == 0:
                for t in range(t0, t1 + 1):
                    entries[(s, t)] = 0
                continue
            res = Resolution(X).extend(2)
            for t in range(t0, t1 + 1):
                z, b = ext_cohomology(res, n, 1, t)
                entries[(s, t)] = z.dim - b.dim
    return StableExtChart(m, n, entries, (s0, s1, t0, t1))


def eta_map(a: hopf.HopfAlgebra | None = None) -> ModuleMap:
    """eta as a map Omega 1 -> 1 lowering degree by 2 (dual to the Sq2 generator)."""
    a = a or hopf.preset("A1")
    one = gmod.unit(a)
    K, _, _ = omega_raw(one)
    mat = np.zeros((1, K.dim), dtype=np.uint8)
    rad = radical(K)
    gens = [c for c in range(K.dim) if c not in set(rad.pivots)]
    sel = [c for c in gens if K.degrees[c] == 2]
    if len(sel) != 1:
        raise AssertionError("Omega 1 has no unique degree-2 generator")
    mat[0, sel[0]] = 1
    f = ModuleMap(K, one, mat, -2)
    if not f.is_equivariant():
        raise AssertionError("eta representative is not a module map")
    return f


def tensor_map_with_identity(f: ModuleMap, m: GradedModule) -> ModuleMap:
    S, ps = gmod.tensor_with_index(f.source, m)
    T, pt = gmod.tensor_with_index(f.target, m)
    big = np.kron(f.matrix, np.eye(m.dim, dtype=np.uint8))
    mat = np.zeros((T.dim, S.dim), dtype=np.uint8)
    mat[np.ix_(pt.reshape(-1), ps.reshape(-1))] = big
    return ModuleMap(S, T, mat, f.shift)


def eta_times_identity_vanishes(m: GradedModule) -> bool:
    """Whether eta . id_M = 0 in the stable category."""
    return is_stably_trivial(tensor_map_with_identity(eta_map(m.algebra), m))
