"""Finite graded modules over a HopfAlgebra and maps between them.

A module stores one global basis sorted by degree together with a dense 0/1
action matrix per algebra generator (rows index the target basis). Degree
blocks are recovered from the sorted ``degrees`` array.
"""
from __future__ import annotations

import itertools
import json

import numpy as np

from . import hopf
from . import linalg2 as la


class AlgebraMismatchError(ValueError):
    pass


class RelationError(ValueError):
    pass


class NotSubmoduleError(ValueError):
    pass


def _check_same(m, n):
    if m.algebra is not n.algebra and m.algebra.name != n.algebra.name:
        raise AlgebraMismatchError(f"{m.algebra.name} vs {n.algebra.name}")


class GradedModule:
    def __init__(self, algebra: hopf.HopfAlgebra, degrees, gen_actions: dict, name: str = ""):
        self.algebra = algebra
        self.degrees = np.asarray(degrees, dtype=np.int64).reshape(-1)
        if len(self.degrees) and np.any(np.diff(self.degrees) < 0):
            raise ValueError("basis must be sorted by degree")
        n = len(self.degrees)
        self.gen_actions = {}
        for g in algebra.generators:
            mat = gen_actions.get(g.label)
            mat = np.zeros((n, n), dtype=np.uint8) if mat is None else np.asarray(mat, dtype=np.uint8) & 1
            if mat.shape != (n, n):
                raise la.DimensionError(f"action of {g.label} has shape {mat.shape}, expected {(n, n)}")
            self.gen_actions[g.label] = mat
        self.name = name
        self._act = None

    # shape
    @property
    def dim(self) -> int:
        return len(self.degrees)

    @property
    def lo(self) -> int:
        return int(self.degrees[0]) if self.dim else 0

    @property
    def hi(self) -> int:
        return int(self.degrees[-1]) if self.dim else -1

    @property
    def dims(self) -> dict[int, int]:
        """Dimension per degree over the closed support interval (zeros kept)."""
        if not self.dim:
            return {}
        counts = np.bincount(self.degrees - self.lo)
        return {self.lo + i: int(c) for i, c in enumerate(counts)}

    def block(self, d: int) -> slice:
        a = int(np.searchsorted(self.degrees, d, side="left"))
        b = int(np.searchsorted(self.degrees, d, side="right"))
        return slice(a, b)

    def is_zero(self) -> bool:
        return self.dim == 0

    # actions
    def gen_action(self, label: str) -> np.ndarray:
        return self.gen_actions[label]

    def action(self, label: str, d: int) -> np.ndarray:
        """Block of a generator's action from degree d to d + |g|."""
        g = self.algebra.generator(label)
        return self.gen_actions[label][self.block(d + g.degree), self.block(d)]

    @property
    def act_all(self) -> np.ndarray:
        """Array (dim A, n, n): action of every algebra basis element."""
        if self._act is None:
            a = self.algebra
            n = self.dim
            out = np.zeros((a.dim, n, n), dtype=np.uint8)
            gens = [self.gen_actions[g.label] for g in a.generators]
            cache = {(): np.eye(n, dtype=np.uint8)}
            for k, words in enumerate(a.words):
                acc = np.zeros((n, n), dtype=np.uint8)
                for w in words:
                    acc ^= _word_matrix(w, gens, cache)
                out[k] = acc
            self._act = out
        return self._act

    def act(self, x) -> np.ndarray:
        """Action matrix of an algebra element given by coordinates or basis index."""
        if np.isscalar(x):
            return self.act_all[int(x)]
        x = np.asarray(x, dtype=np.uint8)
        idx = np.flatnonzero(x)
        if len(idx) == 0:
            return np.zeros((self.dim, self.dim), dtype=np.uint8)
        return (np.bitwise_xor.reduce(self.act_all[idx], axis=0)).astype(np.uint8)

    def check_relations(self):
        """Return None if the generator actions define a module, else a failing (i, j) label pair."""
        a = self.algebra
        A = self.act_all
        n = self.dim
        if n == 0:
            return None
        for g in a.generators:
            M = self.gen_actions[g.label]
            i, j = np.nonzero(M)
            if np.any(self.degrees[i] != self.degrees[j] + g.degree):
                return ("grading", g.label)
        if not (A[0] == np.eye(n, dtype=np.uint8)).all():
            return ("1", "1")
        flat = A.reshape(a.dim, -1).astype(np.float32)
        for i in range(a.dim):
            for j in range(a.dim):
                lhs = la.mul(A[i], A[j])
                coeffs = a.mult[i, j].astype(np.float32)
                rhs = ((coeffs @ flat).astype(np.int64) & 1).reshape(n, n)
                if (lhs != rhs).any():
                    return (a.labels[i], a.labels[j])
        return None

    def validate(self):
        bad = self.check_relations()
        if bad is not None:
            raise RelationError(f"relation fails at {bad}")
        return self

    def element_degree(self, v) -> int:
        nz = np.flatnonzero(v)
        ds = set(self.degrees[nz].tolist())
        if len(ds) != 1:
            raise ValueError("not a homogeneous nonzero element")
        return ds.pop()

    def same(self, other: "GradedModule") -> bool:
        """Exact equality of bases and actions."""
        return (self.dim == other.dim and (self.degrees == other.degrees).all()
                and all((self.gen_actions[k] == other.gen_actions[k]).all() for k in self.gen_actions))

    def __repr__(self) -> str:
        nm = f" {self.name}" if self.name else ""
        return f"GradedModule({self.algebra.name}{nm}, dims={self.dims})"

    # JSON
    def to_json(self) -> dict:
        acts = {}
        for g in self.algebra.generators:
            blocks = {}
            for d in sorted(set(self.degrees.tolist())):
                blk = self.action(g.label, d)
                if blk.size and blk.any():
                    blocks[str(d)] = blk.tolist()
            acts[g.label] = blocks
        return {"algebra": self.algebra.name,
                "dims": {str(k): v for k, v in self.dims.items()},
                "actions": acts}

    @classmethod
    def from_json(cls, data: dict, algebra: hopf.HopfAlgebra | None = None) -> "GradedModule":
        if algebra is None:
            alg = data["algebra"]
            algebra = hopf.HopfAlgebra.from_json(alg) if isinstance(alg, dict) else hopf.preset(alg)
        dims = {int(k): int(v) for k, v in data["dims"].items()}
        degrees = [d for d in sorted(dims) for _ in range(dims[d])]
        m = cls(algebra, degrees, {})
        acts = {}
        for g in algebra.generators:
            mat = np.zeros((m.dim, m.dim), dtype=np.uint8)
            for d, rows in data.get("actions", {}).get(g.label, {}).items():
                d = int(d)
                mat[m.block(d + g.degree), m.block(d)] = np.asarray(rows, dtype=np.uint8)
            acts[g.label] = mat
        return cls(algebra, degrees, acts, name=data.get("name", "")).validate()


def _word_matrix(w, gens, cache):
    if w in cache:
        return cache[w]
    m = la.mul(gens[w[0]], _word_matrix(w[1:], gens, cache))
    cache[w] = m
    return m


def load_module(path: str, algebra: hopf.HopfAlgebra | None = None) -> GradedModule:
    with open(path) as fh:
        return GradedModule.from_json(json.load(fh), algebra)


class ModuleMap:
    """Degree-``shift`` map; ``matrix`` is (target.dim, source.dim)."""

    def __init__(self, source: GradedModule, target: GradedModule, matrix, shift: int = 0):
        self.source = source
        self.target = target
        self.shift = int(shift)
        self.matrix = np.asarray(matrix, dtype=np.uint8) & 1
        if self.matrix.shape != (target.dim, source.dim):
            raise la.DimensionError(f"map matrix {self.matrix.shape} vs {(target.dim, source.dim)}")

    @property
    def mats(self) -> dict[int, np.ndarray]:
        return {d: self.matrix[self.target.block(d + self.shift), self.source.block(d)]
                for d in sorted(set(self.source.degrees.tolist()))}

    def is_graded(self) -> bool:
        i, j = np.nonzero(self.matrix)
        return bool(np.all(self.target.degrees[i] == self.source.degrees[j] + self.shift))

    def is_equivariant(self) -> bool:
        return self.is_graded() and all(
            (la.mul(self.target.gen_actions[k], self.matrix) == la.mul(self.matrix, self.source.gen_actions[k])).all()
            for k in self.source.gen_actions)

    def __matmul__(self, other: "ModuleMap") -> "ModuleMap":
        return ModuleMap(other.source, self.target, la.mul(self.matrix, other.matrix), self.shift + other.shift)

    def __add__(self, other: "ModuleMap") -> "ModuleMap":
        return ModuleMap(self.source, self.target, self.matrix ^ other.matrix, self.shift)

    def is_zero(self) -> bool:
        return not self.matrix.any()

    def is_iso(self) -> bool:
        return (self.source.dim == self.target.dim and self.shift == 0
                and la.rank(self.matrix) == self.source.dim)

    def kernel(self) -> la.Subspace:
        return la.kernel(self.matrix)

    def image(self) -> la.Subspace:
        return la.image(self.matrix)

    def __repr__(self) -> str:
        return f"ModuleMap({self.source.dim}->{self.target.dim}, shift={self.shift})"


def identity(m: GradedModule) -> ModuleMap:
    return ModuleMap(m, m, np.eye(m.dim, dtype=np.uint8))


def zero_map(m: GradedModule, n: GradedModule, shift: int = 0) -> ModuleMap:
    return ModuleMap(m, n, np.zeros((n.dim, m.dim), dtype=np.uint8), shift)


# -- constructors -----------------------------------------------------------

def zero(a: hopf.HopfAlgebra) -> GradedModule:
    return GradedModule(a, [], {}, name="0")


def unit(a: hopf.HopfAlgebra) -> GradedModule:
    return GradedModule(a, [0], {}, name="1")


def free(a: hopf.HopfAlgebra, gen_degrees=(0,)) -> GradedModule:
    """Free module on generators of the given degrees; basis pairs (generator, b_k)."""
    return free_with_labels(a, gen_degrees)[0]


def free_with_labels(a: hopf.HopfAlgebra, gen_degrees):
    """Free module plus the position of each (generator, basis element) pair."""
    gen_degrees = list(gen_degrees)
    pairs = [(g, k) for g in range(len(gen_degrees)) for k in range(a.dim)]
    degs = np.array([gen_degrees[g] + a.degrees[k] for g, k in pairs], dtype=np.int64)
    order = np.argsort(degs, kind="stable")
    pos = np.empty(len(pairs), dtype=np.int64)
    pos[order] = np.arange(len(pairs))
    n = len(pairs)
    acts = {}
    for gen in a.generators:
        L = a.left_mult_matrix(gen.element)  # (k_out, k_in)
        big = np.zeros((n, n), dtype=np.uint8)
        for g in range(len(gen_degrees)):
            src = pos[g * a.dim: (g + 1) * a.dim]
            big[np.ix_(src, src)] = L
        acts[gen.label] = big
    index = pos.reshape(len(gen_degrees), a.dim) if gen_degrees else np.zeros((0, a.dim), dtype=np.int64)
    return GradedModule(a, degs[order], acts, name=f"F{gen_degrees}"), index


def joker(a: hopf.HopfAlgebra | None = None) -> GradedModule:
    """The A(1) joker: x0..x4 in degrees 0..4."""
    a = a or hopf.preset("A1")
    sq1 = np.zeros((5, 5), dtype=np.uint8)
    sq2 = np.zeros((5, 5), dtype=np.uint8)
    sq1[1, 0] = sq1[4, 3] = 1
    sq2[2, 0] = sq2[3, 1] = sq2[4, 2] = 1
    return GradedModule(a, range(5), {"Sq1": sq1, "Sq2": sq2}, name="J").validate()


def shift(m: GradedModule, t: int) -> GradedModule:
    nm = f"S^{t}{m.name}" if m.name else ""
    return GradedModule(m.algebra, m.degrees + t, m.gen_actions, name=nm)


def direct_sum(*mods: GradedModule) -> GradedModule:
    return direct_sum_with_index(*mods)[0]


def direct_sum_with_index(*mods: GradedModule):
    """Direct sum and, per summand, the positions of its basis in the sum."""
    a = mods[0].algebra
    for m in mods[1:]:
        _check_same(mods[0], m)
    degs = np.concatenate([m.degrees for m in mods]) if mods else np.zeros(0, dtype=np.int64)
    order = np.argsort(degs, kind="stable")
    pos = np.empty(len(degs), dtype=np.int64)
    pos[order] = np.arange(len(degs))
    n = len(degs)
    acts = {}
    for g in a.generators:
        big = np.zeros((n, n), dtype=np.uint8)
        off = 0
        for m in mods:
            p = pos[off: off + m.dim]
            big[np.ix_(p, p)] = m.gen_actions[g.label]
            off += m.dim
        acts[g.label] = big
    idx = []
    off = 0
    for m in mods:
        idx.append(pos[off: off + m.dim])
        off += m.dim
    return GradedModule(a, degs[order], acts), idx


def tensor(m: GradedModule, n: GradedModule) -> GradedModule:
    return tensor_with_index(m, n)[0]


def tensor_with_index(m: GradedModule, n: GradedModule):
    """M (x) N with diagonal action; second value maps (i, j) to the basis position."""
    _check_same(m, n)
    a = m.algebra
    degs = (m.degrees[:, None] + n.degrees[None, :]).reshape(-1)
    order = np.argsort(degs, kind="stable")
    pos = np.empty(len(degs), dtype=np.int64)
    pos[order] = np.arange(len(degs))
    Am, An = m.act_all, n.act_all
    acts = {}
    for g in a.generators:
        D = a.coproduct(g.element)
        big = np.zeros((len(degs), len(degs)), dtype=np.uint8)
        for i, j in zip(*np.nonzero(D)):
            big ^= np.kron(Am[i], An[j])
        acts[g.label] = big[np.ix_(order, order)]
    nm = f"({m.name}*{n.name})" if m.name and n.name else ""
    return GradedModule(a, degs[order], acts, name=nm), pos.reshape(m.dim, n.dim)


def dual(m: GradedModule) -> GradedModule:
    """Graded dual: (a f)(x) = f(chi(a) x); basis order reversed."""
    a = m.algebra
    n = m.dim
    rev = np.arange(n)[::-1]
    acts = {}
    for g in a.generators:
        chi = a.apply_antipode(g.element)
        acts[g.label] = m.act(chi).T[np.ix_(rev, rev)]
    nm = f"D{m.name}" if m.name else ""
    return GradedModule(a, (-m.degrees)[::-1], acts, name=nm)


def dual_map(f: ModuleMap) -> ModuleMap:
    """Transpose map D(target) -> D(source) in the reversed bases."""
    ns, nt = f.source.dim, f.target.dim
    mat = f.matrix.T[::-1, ::-1]
    return ModuleMap(dual(f.target), dual(f.source), mat, f.shift)


def restrict(m: GradedModule, sub: hopf.HopfAlgebra, embedding: dict | None = None) -> GradedModule:
    if embedding is None:
        embedding = hopf.embedding(sub, m.algebra)
    acts = {}
    for g in sub.generators:
        if g.label not in embedding:
            raise hopf.EmbeddingError(f"no image given for {g.label}")
        acts[g.label] = m.act(embedding[g.label])
    return GradedModule(sub, m.degrees, acts, name=m.name)


def submodule(m: GradedModule, vectors):
    """Submodule spanned by rows of ``vectors`` (must be closed); returns (S, inclusion)."""
    sp = vectors if isinstance(vectors, la.Subspace) else la.Subspace(m.dim, vectors)
    B = sp.dense()
    piv = list(sp.pivots)
    acts = {}
    for lab, M in m.gen_actions.items():
        img = la.mul(M, B.T)
        if sp.reduce(img).any():
            raise NotSubmoduleError(f"not closed under {lab}")
        acts[lab] = img[piv, :] if piv else np.zeros((0, 0), dtype=np.uint8)
    S = GradedModule(m.algebra, m.degrees[piv], acts)
    return S, ModuleMap(S, m, B.T)


def generated_submodule(m: GradedModule, vectors) -> la.Subspace:
    """Smallest submodule containing the given vectors."""
    vs = np.atleast_2d(np.asarray(vectors, dtype=np.uint8))
    if vs.size == 0:
        return la.Subspace(m.dim)
    A = m.act_all.reshape(-1, m.dim)  # stacked actions
    imgs = la.mul(A, vs.T)  # (dimA * n, k)
    imgs = imgs.reshape(m.algebra.dim, m.dim, -1).transpose(0, 2, 1).reshape(-1, m.dim)
    return la.Subspace(m.dim, imgs)


def quotient(m: GradedModule, sub):
    """M / sub; returns (Q, projection). Q's basis is the non-pivot coordinates."""
    sp = sub if isinstance(sub, la.Subspace) else la.Subspace(m.dim, sub)
    keep = [c for c in range(m.dim) if c not in set(sp.pivots)]
    P = sp.reduce(np.eye(m.dim, dtype=np.uint8))[keep, :]  # rows: quotient coords
    acts = {}
    for lab, M in m.gen_actions.items():
        img = la.mul(M, np.eye(m.dim, dtype=np.uint8)[:, keep])
        if sp.dim and sp.reduce(la.mul(M, sp.dense().T)).any():
            raise NotSubmoduleError(f"not closed under {lab}")
        acts[lab] = la.mul(P, img)
    Q = GradedModule(m.algebra, m.degrees[keep], acts)
    return Q, ModuleMap(m, Q, P)


def induced(a: hopf.HopfAlgebra, p) -> GradedModule:
    """A // Lambda(p) = A / A.p for a primitive p with p^2 = 0."""
    if isinstance(p, hopf.MargolisOp):
        p = p.element
    A = free(a, [0])
    R = a.right_mult_matrix(p)
    Q, _ = quotient(A, la.image(R))
    Q.name = "A//L(p)"
    return Q


def random_module(a: hopf.HopfAlgebra, seed: int = 0, max_gens: int = 3,
                  max_deg: int = 3, relations: int = 3) -> GradedModule:
    """Random quotient of a small free module by a random homogeneous submodule.

    Generators: 1..max_gens in degrees 0..max_deg. Relations: up to
    ``relations`` random homogeneous vectors, closed under the action.
    """
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, max_gens + 1))
    gdeg = sorted(int(x) for x in rng.integers(0, max_deg + 1, size=k))
    F = free(a, gdeg)
    vecs = []
    for _ in range(int(rng.integers(0, relations + 1))):
        d = int(rng.choice(F.degrees))
        blk = F.block(d)
        v = np.zeros(F.dim, dtype=np.uint8)
        v[blk] = rng.integers(0, 2, size=blk.stop - blk.start)
        if v.any():
            vecs.append(v)
    if not vecs:
        return F
    Q, _ = quotient(F, generated_submodule(F, np.array(vecs)))
    Q.name = f"rand{seed}"
    return Q


# -- hom spaces -------------------------------------------------------------

def hom_basis(m: GradedModule, n: GradedModule, t: int = 0) -> np.ndarray:
    """Basis (k, n.dim, m.dim) of degree-t module maps m -> n."""
    _check_same(m, n)
    tk, si = np.nonzero(n.degrees[:, None] == m.degrees[None, :] + t)
    U = len(tk)
    if U == 0:
        return np.zeros((0, n.dim, m.dim), dtype=np.uint8)
    blocks = []
    for g in m.algebra.generators:
        A = n.gen_actions[g.label]
        B = m.gen_actions[g.label]
        # unknown u = E_{tk[u], si[u]} maps to A E + E B
        rowmap = -np.ones((n.dim, m.dim), dtype=np.int64)
        rr, cc = np.nonzero(n.degrees[:, None] == m.degrees[None, :] + t + g.degree)
        if len(rr) == 0:
            continue
        rowmap[rr, cc] = np.arange(len(rr))
        C = np.zeros((len(rr), U), dtype=np.uint8)
        r, u = np.nonzero(A[:, tk])  # entry (r, si[u]) gets A[r, tk[u]]
        np.bitwise_xor.at(C, (rowmap[r, si[u]], u), 1)
        u2, c = np.nonzero(B[si, :])  # entry (tk[u], c) gets B[si[u], c]
        np.bitwise_xor.at(C, (rowmap[tk[u2], c], u2), 1)
        blocks.append(C)
    if blocks:
        K = la.kernel(np.concatenate(blocks, axis=0)).dense()
    else:
        K = np.eye(U, dtype=np.uint8)
    out = np.zeros((len(K), n.dim, m.dim), dtype=np.uint8)
    if len(K):
        out[:, tk, si] = K
    return out


def hom_space(m: GradedModule, n: GradedModule, t: int = 0) -> list[ModuleMap]:
    return [ModuleMap(m, n, B, t) for B in hom_basis(m, n, t)]


def hom_dim(m: GradedModule, n: GradedModule, t: int = 0) -> int:
    return len(hom_basis(m, n, t))


def _combos(H, rng, tries, exhaustive_max):
    k = len(H)
    if k <= exhaustive_max:
        for bits in itertools.product([0, 1], repeat=k):
            if any(bits):
                yield np.bitwise_xor.reduce(H[np.array(bits, dtype=bool)], axis=0)
        return
    for i in range(k):
        yield H[i]
    for _ in range(tries):
        c = rng.integers(0, 2, size=k).astype(bool)
        if c.any():
            yield np.bitwise_xor.reduce(H[c], axis=0)


def _blockwise_invertible(F, degrees) -> bool:
    return la.rank(F) == len(degrees)


def is_isomorphic(m: GradedModule, n: GradedModule, seed: int = 0, tries: int = 200):
    """An isomorphism m -> n as a ModuleMap, or None.

    Random search in Hom_0 (seeded); exhaustive when the hom space has
    dimension at most 12. A None from the random phase on a larger space is
    therefore "not found", which is reported as non-isomorphic.
    """
    _check_same(m, n)
    if m.dim != n.dim or not (m.degrees == n.degrees).all():
        return None
    if m.dim == 0:
        return ModuleMap(m, n, np.zeros((0, 0), dtype=np.uint8))
    if m.same(n):
        return identity(m)
    if m.dim > 16:
        split = _iso_via_free_split(m, n, seed, tries)
        if split is not False:
            return split
    H = hom_basis(m, n, 0)
    if len(H) == 0:
        return None
    rng = np.random.default_rng(seed)
    for F in _combos(H, rng, tries, 12):
        if _blockwise_invertible(F, m.degrees):
            return ModuleMap(m, n, F)
    return None


def _iso_via_free_split(m, n, seed, tries):
    """Krull-Schmidt: compare free parts by degree and the reduced parts recursively.

    Returns False when there are no free summands to split off.
    """
    from . import stable

    sm, sn = stable.strip_free(m), stable.strip_free(n)
    if not sm.free_ranks and not sn.free_ranks:
        return False
    if sm.free_ranks != sn.free_ranks:
        return None
    g = is_isomorphic(sm.reduced, sn.reduced, seed, tries)
    if g is None:
        return None
    mat = la.mul(sn.inclusion.matrix, la.mul(g.matrix, sm.projection.matrix))
    mat ^= la.mul(sn.free_inclusion.matrix, sm.free_projection.matrix)
    return ModuleMap(m, n, mat)


def _fitting_split(m: GradedModule, F: np.ndarray):
    """Image and kernel of a high power of F; None if F is nilpotent or invertible."""
    n = m.dim
    E = F.copy()
    k = 1
    while k < n:
        E = la.mul(E, E)
        k *= 2
    r = la.rank(E)
    if r == 0 or r == n:
        return None
    return la.image(E), la.kernel(E)


def decompose(m: GradedModule, seed: int = 0, tries: int = 100) -> list[GradedModule]:
    """Indecomposable summands by Fitting splitting of endomorphisms.

    A module is declared indecomposable once every tried endomorphism is
    nilpotent or invertible (exhaustive for End of dimension <= 16).
    """
    if m.dim == 0:
        return []
    rng = np.random.default_rng(seed)
    H = hom_basis(m, m, 0)
    for F in _combos(H, rng, tries, 16):
        split = _fitting_split(m, F)
        if split is None:
            continue
        out = []
        for sp in split:
            S, _ = submodule(m, sp)
            out.extend(decompose(S, seed, tries))
        return out
    return [m]
