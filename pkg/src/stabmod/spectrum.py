"""Support data: concentration profiles, segments, covers and the A(1) spectrum."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import gmod, hopf, margolis, stable
from .gmod import GradedModule
from .margolis import CheckReport


class WrongAlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class SegmentalOpen:
    a: int
    b: int
    N: int

    def __post_init__(self):
        if not 1 <= self.a <= self.b <= self.N:
            raise ValueError(f"segment [{self.a},{self.b}] not inside [1,{self.N}]")

    @property
    def indices(self) -> frozenset[int]:
        return frozenset(range(self.a, self.b + 1))

    @property
    def complement(self) -> frozenset[int]:
        return frozenset(range(1, self.N + 1)) - self.indices

    def is_local(self, m: GradedModule) -> bool:
        """M is supported on F_{[a,b]^c}: no Margolis homology at indices in [a,b]."""
        return not (support_profile(m) & self.indices)

    def __str__(self) -> str:
        return f"U[{self.a},{self.b}]"


def support_profile(m: GradedModule) -> frozenset[int]:
    return margolis.concentration(m)


def supported_on(m: GradedModule, S) -> bool:
    """Whether M lies in F_S, i.e. its Margolis homology is concentrated on S."""
    return support_profile(m) <= frozenset(S)


def is_cover(segments, N: int) -> bool:
    """True iff the segments are a partition of [1, N] into contiguous blocks, in order."""
    segs = [tuple(s) for s in segments]
    if not segs:
        return False
    if any(len(s) != 2 or not (1 <= s[0] <= s[1] <= N) for s in segs):
        return False
    segs = sorted(segs)
    if segs[0][0] != 1 or segs[-1][1] != N:
        return False
    return all(nxt[0] == cur[1] + 1 for cur, nxt in zip(segs, segs[1:]))


def all_covers(N: int) -> list[list[tuple[int, int]]]:
    out = []
    for cuts in itertools.product([0, 1], repeat=N - 1):
        segs, start = [], 1
        for i, c in enumerate(cuts, start=1):
            if c:
                segs.append((start, i))
                start = i + 1
        segs.append((start, N))
        out.append(segs)
    return out


def _extension(a: hopf.HopfAlgebra, rng) -> tuple[GradedModule, GradedModule, GradedModule]:
    m = gmod.random_module(a, int(rng.integers(0, 10**6)), max_gens=2, max_deg=2)
    if m.dim == 0:
        m = gmod.unit(a)
    v = np.zeros(m.dim, dtype=np.uint8)
    d = int(rng.choice(m.degrees))
    blk = m.block(d)
    v[blk] = rng.integers(0, 2, size=blk.stop - blk.start)
    sub = gmod.generated_submodule(m, v)
    S, _ = gmod.submodule(m, sub)
    Q, _ = gmod.quotient(m, sub)
    return S, m, Q


def support_lattice_checks(a: hopf.HopfAlgebra, samples: int = 100, seed: int = 0) -> CheckReport:
    """Profile rules for sums, tensors and extensions on seeded random modules."""
    rng = np.random.default_rng(seed)
    for i in range(samples):
        m = gmod.random_module(a, int(rng.integers(0, 10**6)), max_gens=2, max_deg=2)
        n = gmod.random_module(a, int(rng.integers(0, 10**6)), max_gens=2, max_deg=2)
        pm, pn = support_profile(m), support_profile(n)
        if support_profile(gmod.direct_sum(m, n)) != pm | pn:
            return CheckReport("support-lattice", False, {"sample": i, "rule": "sum"})
        if support_profile(gmod.tensor(m, n)) != pm & pn:
            return CheckReport("support-lattice", False, {"sample": i, "rule": "tensor"})
        S, M, Q = _extension(a, rng)
        if not support_profile(M) <= support_profile(S) | support_profile(Q):
            return CheckReport("support-lattice", False, {"sample": i, "rule": "extension"})
    return CheckReport("support-lattice", True, None, {"samples": samples})


# -- the three points of A(1) -------------------------------------------------

S0, S1, S01 = "S0", "S1", "S01"
POINTS = (S0, S1, S01)
CLOSED_SETS = (frozenset(), frozenset({S0}), frozenset({S1}), frozenset({S0, S1}), frozenset(POINTS))


@dataclass(frozen=True)
class A1Support:
    points: frozenset[str]
    caveat: str = ("for indecomposables with both Margolis homologies, membership in S01 "
                   "is tested as eta . id = 0 literally, not up to nilpotence")

    @property
    def is_closed(self) -> bool:
        return self.points in CLOSED_SETS

    def to_json(self) -> dict:
        return {"support": sorted(self.points), "closed": self.is_closed}

    def __str__(self) -> str:
        return "{" + ", ".join(sorted(self.points)) + "}"


def _in_s01(red: GradedModule, h0: bool, h1: bool) -> bool:
    # S01 contains every Q0-local and every Q1-local module
    if not h0 or not h1:
        return True
    parts = gmod.decompose(red)
    if len(parts) > 1:
        return all(_in_s01(p, margolis.margolis_homology(p, 1).total > 0,
                           margolis.margolis_homology(p, 2).total > 0) for p in parts)
    # modules built from finite local modules are even dimensional
    if red.dim % 2:
        return False
    return stable.eta_times_identity_vanishes(red)


def a1_membership(m: GradedModule) -> dict[str, bool]:
    """Membership of M in the three primes S1, S0, S01 of Stab(A(1)).

    S1: no Q0-homology. S0: no Q1-homology. S01: M is built from local
    modules; decided summand by summand, using that S01 contains both local
    classes, that such modules are even dimensional, and otherwise whether
    eta . id_M vanishes stably.
    """
    a = m.algebra
    if a.name != "A1":
        raise WrongAlgebraError(f"the three-point spectrum is for A1, not {a.name}")
    red = stable.reduced(m)
    if red.dim == 0:
        return {S0: True, S1: True, S01: True}
    h0 = margolis.margolis_homology(red, 1).total > 0
    h1 = margolis.margolis_homology(red, 2).total > 0
    return {S1: not h0, S0: not h1, S01: _in_s01(red, h0, h1)}


def a1_support(m: GradedModule) -> A1Support:
    mem = a1_membership(m)
    return A1Support(frozenset(p for p in POINTS if not mem[p]))
