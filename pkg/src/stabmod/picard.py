"""Invertible modules in the stable category and their local invariants."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import gmod, hopf
from . import linalg2 as la
from . import margolis as mg
from . import stable as st
from .gmod import GradedModule, ModuleMap
from .margolis import CheckReport


@dataclass
class PicElement:
    representative: GradedModule  # free summands stripped
    inverse: GradedModule
    witness: GradedModule  # strip_free(rep (x) inverse)
    iso: ModuleMap  # witness -> unit

    @property
    def algebra(self) -> hopf.HopfAlgebra:
        return self.representative.algebra

    def summary(self) -> dict:
        dims = lambda X: {str(d): v for d, v in X.dims.items() if v}
        return {"representative": dims(self.representative), "inverse": dims(self.inverse),
                "witness": dims(self.witness), "invariant": list(local_invariant(self).degrees)}


@dataclass(frozen=True)
class LocalPicInvariant:
    degrees: tuple[int, ...]  # d_k with H(rep; p_k) in degree d_k

    def block(self, segment) -> tuple[int, ...]:
        a, b = segment
        return self.degrees[a - 1:b]


def _one_dimensional(m: GradedModule) -> bool:
    return all(mg.margolis_homology(m, k).total == 1 for k in range(1, m.algebra.N + 1))


def is_invertible(m: GradedModule) -> PicElement | None:
    """Witnessed invertibility: strip(m (x) Dm) must be the unit."""
    r = st.reduced(m)
    if r.dim == 0 or not _one_dimensional(r):
        return None
    inv = gmod.dual(r)
    w = st.reduced(gmod.tensor(r, inv))
    u = gmod.unit(m.algebra)
    if w.dim != 1:
        return None
    F = gmod.is_isomorphic(w, u)
    if F is None:
        return None
    return PicElement(r, inv, w, F)


def _require(m: GradedModule) -> PicElement:
    x = is_invertible(m)
    if x is None:
        raise ValueError(f"{m.name or 'module'} is not invertible")
    return x


def pic_product(x: PicElement, y: PicElement) -> PicElement:
    return _require(gmod.tensor(x.representative, y.representative))


def pic_inverse(x: PicElement) -> PicElement:
    return _require(x.inverse)


def unit_element(a: hopf.HopfAlgebra) -> PicElement:
    return _require(gmod.unit(a))


def sigma_omega(a: hopf.HopfAlgebra, shift: int, loops: int) -> GradedModule:
    """Sigma^shift Omega^loops of the unit."""
    m = gmod.shift(st.omega_power(gmod.unit(a), loops), shift)
    m.name = f"S^{shift}O^{loops}1"
    return m


def local_invariant(x: PicElement) -> LocalPicInvariant:
    degs = []
    for k in range(1, x.algebra.N + 1):
        sup = mg.margolis_homology(x.representative, k).support()
        if len(sup) != 1:
            raise ValueError(f"H(-; p_{k}) is not one-dimensional")
        degs.append(sup[0])
    return LocalPicInvariant(tuple(degs))


def aut_unit(a: hopf.HopfAlgebra) -> int:
    """Number of stable automorphisms of the unit (degree-0 stable endomorphisms that are invertible)."""
    u = gmod.unit(a)
    basis = st.stable_hom_basis(u, u, 0)
    mats = [f.matrix for f in basis]
    P = st.phom_subspace(u, u, 0)
    eye = np.eye(u.dim, dtype=np.uint8).reshape(1, -1)
    elems = []
    for bits in itertools.product((0, 1), repeat=len(mats)):
        M = np.zeros((u.dim, u.dim), dtype=np.uint8)
        for b, A in zip(bits, mats):
            if b:
                M ^= A
        elems.append(M)

    def is_identity(M):
        d = (M.reshape(1, -1) ^ eye)
        return not d.any() or (P.dim and not P.reduce(d.T).any())

    count = 0
    for f in elems:
        if any(is_identity(la.mul(f, g)) and is_identity(la.mul(g, f)) for g in elems):
            count += 1
    return count


def detection_check(sample: list[PicElement], partition) -> CheckReport:
    """Local invariants on the blocks of ``partition`` must separate non-isomorphic elements.

    Collisions between non-isomorphic elements are reported in the details
    as findings about the invariant.
    """
    blocks = [tuple(int(v) for v in s) for s in partition]
    keys = [tuple(local_invariant(x).block(s) for s in blocks) for x in sample]
    collisions = []
    for i, j in itertools.combinations(range(len(sample)), 2):
        if keys[i] != keys[j]:
            continue
        if st.is_stably_iso(sample[i].representative, sample[j].representative):
            continue
        collisions.append({"pair": [i, j], "invariant": [list(b) for b in keys[i]],
                           "names": [sample[i].representative.name, sample[j].representative.name]})
    details = {"partition": [list(b) for b in blocks], "size": len(sample),
               "invariants": [[list(b) for b in k] for k in keys], "collisions": collisions}
    first = collisions[0] if collisions else None
    return CheckReport("detection", not collisions, first, details)


def find_in_grid(x: PicElement, bound: int = 8) -> tuple[int, int] | None:
    """(a, b) with x stably isomorphic to Sigma^a Omega^b 1, searching |a|, |b| <= bound."""
    a = x.algebra
    d = local_invariant(x).degrees
    for b in range(-bound, bound + 1):
        base = st.omega_power(gmod.unit(a), b)
        e = local_invariant(_require(base)).degrees
        shifts = {di - ei for di, ei in zip(d, e)}
        if len(shifts) != 1:
            continue
        s = shifts.pop()
        if abs(s) <= bound and st.is_stably_iso(x.representative, gmod.shift(base, s)):
            return s, b
    return None
