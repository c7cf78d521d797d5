"""Finite graded connected cocommutative Hopf algebras over F_2.

Shipped presets are sub-Hopf-algebras of the mod 2 Steenrod algebra given by
profile functions; their structure constants are generated from the Milnor
product and coproduct formulas and validated before use.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import linalg2 as la


class UnknownPresetError(KeyError):
    pass


class NoIntegralError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    label: str
    degree: int
    element: np.ndarray = field(compare=False, repr=False)
    index: int = -1  # basis index when the generator is a basis element


@dataclass(frozen=True)
class MargolisOp:
    index: int  # 1-based position k in p_1, ..., p_N
    degree: int
    element: np.ndarray = field(compare=False, repr=False)
    label: str = ""


# -- Milnor basis arithmetic ------------------------------------------------

def _strip(seq):
    seq = list(seq)
    while seq and seq[-1] == 0:
        seq.pop()
    return tuple(seq)


def milnor_degree(R) -> int:
    return sum(r * ((1 << (i + 1)) - 1) for i, r in enumerate(R))


def _disjoint_bits(values) -> bool:
    acc = 0
    for v in values:
        if acc & v:
            return False
        acc |= v
    return True


@lru_cache(maxsize=None)
def milnor_product(R: tuple, S: tuple) -> frozenset:
    """Sq(R) * Sq(S) as the set of Milnor sequences with coefficient 1."""
    rows = len(R)
    cols = len(S)
    result: dict[tuple, int] = {}

    def fill_row(i, X):
        if i > rows:
            finish(X)
            return
        r = R[i - 1]

        def choose(j, remaining, row):
            if j > cols:
                X[i] = [remaining] + row
                fill_row(i + 1, X)
                return
            w = 1 << j
            for x in range(remaining // w + 1):
                choose(j + 1, remaining - x * w, row + [x])

        choose(1, r, [])

    def finish(X):
        top = [0] * (cols + 1)
        for j in range(1, cols + 1):
            used = sum(X[i][j] for i in range(1, rows + 1))
            if used > S[j - 1]:
                return
            top[j] = S[j - 1] - used
        X0 = {0: top}
        full = {**X0, **X}
        T = []
        for n in range(1, rows + cols + 1):
            diag = [full[i][n - i] for i in range(max(0, n - cols), min(rows, n) + 1)]
            if not _disjoint_bits(diag):
                return
            T.append(sum(diag))
        key = _strip(T)
        result[key] = result.get(key, 0) ^ 1

    fill_row(1, {})
    return frozenset(k for k, v in result.items() if v)


def _milnor_label(R) -> str:
    if not R:
        return "1"
    if len(R) == 1:
        return f"Sq{R[0]}"
    if sum(R) == 1:
        return f"Q{len(R) - 1}"
    return "Sq(" + ",".join(map(str, R)) + ")"


# -- the algebra ------------------------------------------------------------

class HopfAlgebra:
    """Structure constants over a degree-sorted basis b_0 = 1, b_1, ...

    ``mult[i, j]`` is the coordinate vector of b_i b_j, ``comult[k, i, j]`` the
    coefficient of b_i (x) b_j in the coproduct of b_k, and column k of
    ``antipode`` is the antipode of b_k.
    """

    def __init__(self, name, degrees, mult, comult, antipode, generators, margolis_ops,
                 labels=None, milnor=None):
        self.name = name
        self.degrees = np.asarray(degrees, dtype=np.int64)
        self.dim = len(self.degrees)
        self.mult = np.asarray(mult, dtype=np.uint8) & 1
        self.comult = np.asarray(comult, dtype=np.uint8) & 1
        self.antipode = np.asarray(antipode, dtype=np.uint8) & 1
        self.generators = list(generators)
        self.margolis_ops = list(margolis_ops)
        self.labels = list(labels) if labels else [f"b{i}" for i in range(self.dim)]
        self.milnor = list(milnor) if milnor else None
        self._words = None
        self._integral = None

    # basic data
    @property
    def dims(self) -> dict[int, int]:
        ds, counts = np.unique(self.degrees, return_counts=True)
        return {int(d): int(c) for d, c in zip(ds, counts)}

    @property
    def top_degree(self) -> int:
        return int(self.degrees.max())

    @property
    def N(self) -> int:
        return len(self.margolis_ops)

    def basis_vector(self, i) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.uint8)
        v[i] = 1
        return v

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    def element(self, label: str) -> np.ndarray:
        return self.basis_vector(self.index_of(label))

    def generator(self, label: str) -> Generator:
        for g in self.generators:
            if g.label == label:
                return g
        raise KeyError(label)

    def product(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.uint8)
        y = np.asarray(y, dtype=np.uint8)
        return (np.einsum("i,j,ijk->k", x.astype(np.int64), y.astype(np.int64), self.mult) & 1).astype(np.uint8)

    def coproduct(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        return (np.einsum("k,kij->ij", x, self.comult) & 1).astype(np.uint8)

    def apply_antipode(self, x) -> np.ndarray:
        return la.mul(self.antipode, np.asarray(x, dtype=np.uint8))

    def degree_of(self, x) -> int:
        nz = np.flatnonzero(np.asarray(x))
        if len(nz) == 0:
            raise ValueError("zero element has no degree")
        ds = set(self.degrees[nz].tolist())
        if len(ds) != 1:
            raise ValueError("element is not homogeneous")
        return ds.pop()

    def left_mult_matrix(self, x) -> np.ndarray:
        """Matrix of a |-> x a on A."""
        x = np.asarray(x, dtype=np.int64)
        return (np.einsum("i,ijk->kj", x, self.mult) & 1).astype(np.uint8)

    def right_mult_matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        return (np.einsum("j,ijk->ki", x, self.mult) & 1).astype(np.uint8)

    # words in generators expressing each basis element
    @property
    def words(self) -> list[list[tuple[int, ...]]]:
        if self._words is None:
            self._words = self._compute_words()
        return self._words

    def _compute_words(self):
        top = self.top_degree
        gens = self.generators
        found = {(): self.basis_vector(0)}
        frontier = [()]
        while frontier:
            nxt = []
            for w in frontier:
                dw = sum(gens[g].degree for g in w)
                for gi, g in enumerate(gens):
                    if dw + g.degree > top:
                        continue
                    v = self.product(g.element, found[w])
                    if v.any():
                        nw = (gi,) + w
                        found[nw] = v
                        nxt.append(nw)
            frontier = nxt
        words = list(found)
        W = np.array([found[w] for w in words], dtype=np.uint8).T  # dim x nwords
        out = []
        for i in range(self.dim):
            x = la.solve(W, self.basis_vector(i))
            if x is None:
                raise ValueError(f"{self.name}: basis element {self.labels[i]} not generated")
            out.append([words[k] for k in np.flatnonzero(x)])
        return out

    @property
    def integral(self) -> np.ndarray:
        if self._integral is None:
            self._integral = integral_of(self)
        return self._integral

    def __repr__(self) -> str:
        return f"HopfAlgebra({self.name!r}, dim={self.dim})"

    # JSON
    def to_json(self) -> dict:
        offsets = {}
        local = []
        for i, d in enumerate(self.degrees.tolist()):
            local.append(offsets.get(d, 0))
            offsets[d] = offsets.get(d, 0) + 1
        deg = self.degrees.tolist()
        mult = []
        for i, j, k in zip(*np.nonzero(self.mult)):
            mult.append([deg[i], deg[j], local[i], local[j], local[k]])
        comult = []
        for k, i, j in zip(*np.nonzero(self.comult)):
            comult.append([deg[i], deg[j], local[i], local[j], local[k]])
        antipode = {}
        for d in sorted(set(deg)):
            idx = [i for i in range(self.dim) if deg[i] == d]
            antipode[str(d)] = self.antipode[np.ix_(idx, idx)].tolist()
        gens = []
        for g in self.generators:
            idx = [i for i in range(self.dim) if deg[i] == g.degree]
            gens.append({"label": g.label, "degree": g.degree, "coords": g.element[idx].tolist()})
        return {
            "name": self.name,
            "dims": {str(k): v for k, v in self.dims.items()},
            "labels": self.labels,
            "generators": gens,
            "mult": [list(map(int, r)) for r in mult],
            "comult": [list(map(int, r)) for r in comult],
            "antipode": antipode,
            "margolis": [int(np.flatnonzero(p.element)[0]) if p.element.sum() == 1 else p.element.tolist()
                         for p in self.margolis_ops],
        }

    @classmethod
    def from_json(cls, data: dict) -> "HopfAlgebra":
        dims = {int(k): int(v) for k, v in data["dims"].items()}
        degrees = []
        offset = {}
        for d in sorted(dims):
            offset[d] = len(degrees)
            degrees += [d] * dims[d]
        n = len(degrees)
        mult = np.zeros((n, n, n), dtype=np.uint8)
        for d1, d2, i, j, k in data["mult"]:
            mult[offset[d1] + i, offset[d2] + j, offset[d1 + d2] + k] ^= 1
        comult = np.zeros((n, n, n), dtype=np.uint8)
        for d1, d2, i, j, k in data["comult"]:
            comult[offset[d1 + d2] + k, offset[d1] + i, offset[d2] + j] ^= 1
        antipode = np.zeros((n, n), dtype=np.uint8)
        for d, rows in data["antipode"].items():
            d = int(d)
            sl = slice(offset[d], offset[d] + dims[d])
            antipode[sl, sl] = np.asarray(rows, dtype=np.uint8)
        gens = []
        for g in data["generators"]:
            v = np.zeros(n, dtype=np.uint8)
            d = int(g["degree"])
            v[offset[d]: offset[d] + dims[d]] = np.asarray(g["coords"], dtype=np.uint8)
            idx = int(np.flatnonzero(v)[0]) if v.sum() == 1 else -1
            gens.append(Generator(g["label"], d, v, idx))
        ops = []
        for k, m in enumerate(data.get("margolis", []), start=1):
            if isinstance(m, list):
                v = np.asarray(m, dtype=np.uint8)
            else:
                v = np.zeros(n, dtype=np.uint8)
                v[int(m)] = 1
            d = int(np.asarray(degrees)[np.flatnonzero(v)][0])
            ops.append(MargolisOp(k, d, v, f"p{k}"))
        return cls(data["name"], degrees, mult, comult, antipode, gens, ops, labels=data.get("labels"))


# -- construction from profile functions --------------------------------------

def _antipode_from(degrees, mult, comult) -> np.ndarray:
    """Solve sum chi(a') a'' = eps(a) degree by degree."""
    n = len(degrees)
    S = np.zeros((n, n), dtype=np.uint8)
    S[0, 0] = 1
    for k in np.argsort(degrees, kind="stable"):
        if k == 0:
            continue
        acc = np.zeros(n, dtype=np.uint8)
        for a, b in zip(*np.nonzero(comult[k])):
            if a == k and b == 0:
                continue
            acc ^= (np.einsum("l,lm->m", S[:, a].astype(np.int64), mult[:, b, :]) & 1).astype(np.uint8)
        S[:, k] = acc
    return S


def _indecomposables(degrees, mult) -> list[int]:
    """Basis indices spanning a complement of the decomposables A+ . A+."""
    n = len(degrees)
    plus = [i for i in range(n) if degrees[i] > 0]
    dec = [mult[i, j] for i in plus for j in plus if mult[i, j].any()]
    sub = la.Subspace(n, np.array(dec) if dec else None)
    chosen = []
    for i in plus:
        v = np.zeros(n, dtype=np.uint8)
        v[i] = 1
        if sub.reduce(v).any():
            chosen.append(i)
            sub = la.Subspace(n, np.vstack([sub.dense(), v[None]]) if sub.dim else v[None])
    return chosen


def from_profile(name: str, profile: tuple[int, ...]) -> HopfAlgebra:
    """Sub-Hopf-algebra of the Steenrod algebra spanned by Sq(R) with r_i < 2^profile[i]."""
    seqs = [_strip(R) for R in itertools.product(*[range(1 << h) for h in profile])]
    seqs = sorted(set(seqs), key=lambda R: (milnor_degree(R), R))
    index = {R: i for i, R in enumerate(seqs)}
    n = len(seqs)
    degrees = [milnor_degree(R) for R in seqs]
    mult = np.zeros((n, n, n), dtype=np.uint8)
    for i, R in enumerate(seqs):
        for j, S in enumerate(seqs):
            for T in milnor_product(R, S):
                if T not in index:
                    raise ValueError(f"profile {profile} not closed: Sq{R}Sq{S} contains Sq{T}")
                mult[i, j, index[T]] ^= 1
    comult = np.zeros((n, n, n), dtype=np.uint8)
    for k, R in enumerate(seqs):
        for Rp in itertools.product(*[range(r + 1) for r in R]):
            Rpp = tuple(r - a for r, a in zip(R, Rp))
            comult[k, index[_strip(Rp)], index[_strip(Rpp)]] ^= 1
    antipode = _antipode_from(np.array(degrees), mult, comult)
    labels = [_milnor_label(R) for R in seqs]
    gens = []
    for i in _indecomposables(np.array(degrees), mult):
        v = np.zeros(n, dtype=np.uint8)
        v[i] = 1
        gens.append(Generator(labels[i], degrees[i], v, i))
    ops = []
    for k in range(len(profile)):
        Q = _strip([0] * k + [1])
        if Q in index:
            v = np.zeros(n, dtype=np.uint8)
            v[index[Q]] = 1
            ops.append(MargolisOp(len(ops) + 1, degrees[index[Q]], v, labels[index[Q]]))
    return HopfAlgebra(name, degrees, mult, comult, antipode, gens, ops, labels=labels, milnor=seqs)


_PRESETS: dict[str, HopfAlgebra] = {}


def preset(name: str, k: int | None = None) -> HopfAlgebra:
    """Shipped algebras: ``lambda`` (with k), ``E1``, ``E2``, ``A1``.

    String forms ``lambda0``/``lambda(1)`` are accepted too.
    """
    key = name.strip()
    low = key.lower()
    if low.startswith("lambda"):
        rest = low[len("lambda"):].strip("()_ ")
        if rest:
            k = int(rest)
        if k is None:
            raise UnknownPresetError("lambda preset needs k")
        key = f"lambda{k}"
        profile = tuple([0] * k + [1])
    elif low in ("e1", "e(1)"):
        key, profile = "E1", (1, 1)
    elif low in ("e2", "e(2)"):
        key, profile = "E2", (1, 1, 1)
    elif low in ("a1", "a(1)"):
        key, profile = "A1", (2, 1)
    else:
        raise UnknownPresetError(f"unknown preset {name!r}; known: lambda(k), E1, E2, A1")
    if key not in _PRESETS:
        alg = from_profile(key, profile)
        report = validate(alg)
        if not report.ok:
            raise AssertionError(f"preset {key} failed validation:\n{report}")
        _PRESETS[key] = alg
    return _PRESETS[key]


# -- validation -------------------------------------------------------------

@dataclass
class AxiomCheck:
    name: str
    passed: bool
    first_failure: tuple | None = None

    def line(self) -> str:
        s = "pass" if self.passed else f"FAIL at degrees {self.first_failure}"
        return f"{self.name:<26} {s}"


@dataclass
class ValidationReport:
    algebra: str
    checks: list[AxiomCheck]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self) -> str:
        return "\n".join(c.line() for c in self.checks)

    def to_json(self) -> dict:
        return {"algebra": self.algebra, "pass": bool(self.ok),
                "checks": [{"axiom": c.name, "pass": bool(c.passed),
                            "first_failure": list(c.first_failure) if c.first_failure else None}
                           for c in self.checks]}


def _first(mask, degrees, arity):
    idx = np.argwhere(mask)
    if len(idx) == 0:
        return None
    best = min(idx.tolist(), key=lambda t: [int(degrees[i]) for i in t[:arity]])
    return tuple(int(degrees[i]) for i in best[:arity])


def validate(a: HopfAlgebra) -> ValidationReport:
    n = a.dim
    deg = a.degrees
    M = a.mult.astype(np.int64)
    C = a.comult.astype(np.int64)
    S = a.antipode.astype(np.int64)
    e = np.zeros(n, dtype=np.int64)
    e[0] = 1
    checks = []

    # grading: nonzero constants respect degrees
    bad = np.zeros_like(a.mult, dtype=bool)
    i, j, k = np.nonzero(a.mult)
    bad[i, j, k] = deg[i] + deg[j] != deg[k]
    checks.append(AxiomCheck("mult graded", not bad.any(), _first(bad, deg, 3)))
    bad = np.zeros_like(a.comult, dtype=bool)
    k, i, j = np.nonzero(a.comult)
    bad[k, i, j] = deg[i] + deg[j] != deg[k]
    checks.append(AxiomCheck("comult graded", not bad.any(), _first(bad.transpose(1, 2, 0), deg, 3)))

    conn = int((deg == 0).sum()) == 1 and deg[0] == 0 and deg.min() >= 0
    checks.append(AxiomCheck("connected", conn, None if conn else (0,)))

    I = np.eye(n, dtype=np.int64)
    bad = (M[0] != I) | (M[:, 0] != I)
    checks.append(AxiomCheck("unital", not bad.any(), _first(bad, deg, 2)))

    lhs = np.einsum("ijl,lkm->ijkm", M, M) & 1
    rhs = np.einsum("jkl,ilm->ijkm", M, M) & 1
    bad = (lhs != rhs).any(axis=3)
    checks.append(AxiomCheck("associative", not bad.any(), _first(bad, deg, 3)))

    lhs = np.einsum("kij,iab->abjk", C, C) & 1
    rhs = np.einsum("kij,jab->iabk", C, C) & 1
    bad = (lhs != rhs).any(axis=3)
    checks.append(AxiomCheck("coassociative", not bad.any(), _first(bad, deg, 3)))

    bad = (C[:, 0, :] != I) | (C[:, :, 0] != I)
    checks.append(AxiomCheck("counital", not bad.any(), _first(bad, deg, 2)))

    lhs = np.einsum("ijl,lab->ijab", M, C) & 1
    rhs = np.einsum("iAB,jCD,ACa,BDb->ijab", C, C, M, M, optimize=True) & 1
    bad = (lhs != rhs).any(axis=(2, 3))
    checks.append(AxiomCheck("bialgebra", not bad.any(), _first(bad, deg, 2)))

    left = np.einsum("kab,la,lbm->km", C, S, M) & 1
    right = np.einsum("kab,lb,alm->km", C, S, M) & 1
    target = np.outer(e, e)
    bad = ((left != target) | (right != target)).any(axis=1)
    checks.append(AxiomCheck("antipode", not bad.any(), _first(bad, deg, 1)))

    bad = (C != C.transpose(0, 2, 1)).any(axis=(1, 2))
    checks.append(AxiomCheck("cocommutative", not bad.any(), _first(bad, deg, 1)))

    ok, fail = True, None
    last = 0
    for p in a.margolis_ops:
        v = p.element
        sq = a.product(v, v)
        cop = a.coproduct(v)
        prim = (np.outer(v, e) + np.outer(e, v)) & 1
        if sq.any() or (cop != prim).any() or p.degree <= last:
            ok, fail = False, (p.degree,)
            break
        last = p.degree
    checks.append(AxiomCheck("margolis ops", ok, fail))

    try:
        t = integral_of(a)
        d = a.degree_of(t)
        ok = all(not a.product(g.element, t).any() and not a.product(t, g.element).any()
                 for g in a.generators)
        checks.append(AxiomCheck("integral", ok, None if ok else (d,)))
    except (NoIntegralError, ValueError):
        checks.append(AxiomCheck("integral", False, (a.top_degree,)))
    return ValidationReport(a.name, checks)


def integral_of(a: HopfAlgebra) -> np.ndarray:
    """The nonzero t with g t = 0 for every generator g (left socle)."""
    if not a.generators:
        if a.dim == 1:
            return a.basis_vector(0)
        raise NoIntegralError("algebra has no generators")
    stack = np.concatenate([a.left_mult_matrix(g.element) for g in a.generators], axis=0)
    ker = la.kernel(stack)
    if ker.dim == 0:
        raise NoIntegralError(f"{a.name}: no left integral")
    if ker.dim > 1:
        raise NoIntegralError(f"{a.name}: socle has dimension {ker.dim}")
    return ker.dense()[0].copy()


def embedding(sub: HopfAlgebra, sup: HopfAlgebra) -> dict[str, np.ndarray]:
    """Images in ``sup`` of the generators of ``sub``, matched by Milnor basis element."""
    if sub.milnor is None or sup.milnor is None:
        raise EmbeddingError(f"no embedding known from {sub.name} into {sup.name}")
    out = {}
    for g in sub.generators:
        v = np.zeros(sup.dim, dtype=np.uint8)
        for i in np.flatnonzero(g.element):
            try:
                v[sup.milnor.index(sub.milnor[i])] ^= 1
            except ValueError:
                raise EmbeddingError(f"{sub.milnor[i]} of {sub.name} is not in {sup.name}") from None
        out[g.label] = v
    return out


class EmbeddingError(ValueError):
    pass


def exterior(degree: int, label: str = "p", name: str | None = None) -> HopfAlgebra:
    """Exterior Hopf algebra on one primitive of the given degree."""
    mult = np.zeros((2, 2, 2), dtype=np.uint8)
    mult[0, 0, 0] = mult[0, 1, 1] = mult[1, 0, 1] = 1
    comult = np.zeros((2, 2, 2), dtype=np.uint8)
    comult[0, 0, 0] = comult[1, 1, 0] = comult[1, 0, 1] = 1
    v = np.array([0, 1], dtype=np.uint8)
    return HopfAlgebra(name or f"L({label})", [0, degree], mult, comult, np.eye(2, dtype=np.uint8),
                       [Generator(label, degree, v, 1)], [MargolisOp(1, degree, v, label)],
                       labels=["1", label])


def elementary(a: HopfAlgebra, k: int) -> tuple[HopfAlgebra, dict[str, np.ndarray]]:
    """Lambda(p_k) with its embedding into ``a`` (k is 1-based)."""
    if not 1 <= k <= a.N:
        raise IndexError(f"margolis index {k} outside 1..{a.N}")
    p = a.margolis_ops[k - 1]
    lab = p.label or f"p{k}"
    return exterior(p.degree, lab, name=f"L({lab})"), {lab: p.element}
