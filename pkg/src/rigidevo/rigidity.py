"""Generic rigidity over a large prime field.

A generic real embedding is replaced by uniformly random field coordinates.
Specialising coordinates can only lower ranks, so a rank that reaches its
upper bound is certain, while a shortfall is wrong with probability at most
``d*n / MODULUS`` per query.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from math import comb

import numpy as np

from . import _kernels as K
from .exceptions import IntegrityError
from .graphs import Graph, subset_masks
from .primefield import MODULUS, RowBasis, SparseRow, SparseRowBasis, random_elements

log = logging.getLogger(__name__)

__all__ = [
    "Embedding",
    "ClosureGraph",
    "CliqueWitness",
    "sample_embedding",
    "edge_row",
    "max_rank",
    "rigidity_rank",
    "rank_basis",
    "new_basis",
    "is_rigid",
    "closure",
    "clique_in_closure",
    "rigid_components",
    "random_stress",
    "stress_matrix",
    "is_globally_rigid",
    "EXACT_COMPONENTS_MAX_N",
]

EXACT_COMPONENTS_MAX_N = 16


@dataclass(frozen=True, eq=False)
class Embedding:
    """Vertex coordinates in the prime field, shape ``(n, d)``."""

    coords: np.ndarray

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def restrict(self, vertices) -> "Embedding":
        return Embedding(np.ascontiguousarray(self.coords[np.asarray(vertices, dtype=np.int64)]))


def sample_embedding(n: int, d: int, rng=None) -> Embedding:
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    coords = random_elements(np.random.default_rng(rng), (n, d))
    coords.setflags(write=False)
    return Embedding(coords)


def edge_row(emb: Embedding, u: int, v: int) -> SparseRow:
    """Rigidity-matrix row of ``uv``: ``p(u)-p(v)`` in u's block, the negation in v's."""
    if u == v:
        raise ValueError("edge row needs two distinct vertices")
    d = emb.d
    diff = [(int(a) - int(b)) % MODULUS for a, b in zip(emb.coords[u], emb.coords[v])]
    cols = [u * d + k for k in range(d)] + [v * d + k for k in range(d)]
    vals = diff + [(-x) % MODULUS for x in diff]
    return SparseRow(np.array(cols, dtype=np.int64), np.array(vals, dtype=np.uint64))


def max_rank(n: int, d: int) -> int:
    """Generic rank of ``K_n`` in dimension ``d``."""
    if n <= d + 1:
        return comb(n, 2)
    return d * n - comb(d + 1, 2)


def _edge_arrays(G: Graph) -> tuple[np.ndarray, np.ndarray]:
    arr = G.edge_array()
    return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


def new_basis(n: int, d: int, sparse: bool | None = None):
    """Empty row basis sized for rigidity rows of ``n`` vertices in dimension ``d``.

    ``sparse=None`` picks the dict-backed basis for ``d == 1``, where reduced
    rows keep two entries, and the dense kernel otherwise.
    """
    cls = SparseRowBasis if (d == 1 if sparse is None else sparse) else RowBasis
    return cls(max(n * d, 1), capacity=max(max_rank(n, d), 1))


def rank_basis(G: Graph, emb: Embedding, stop_at_max: bool = True, sparse: bool | None = None):
    """Row basis of the rigidity matrix of ``G`` at ``emb``.

    With ``stop_at_max`` insertion halts once the rank of ``K_n`` is reached;
    the span is then already the full row space.
    """
    if emb.n != G.n:
        raise ValueError("embedding and graph sizes differ")
    cap = max(max_rank(G.n, emb.d), 1)
    basis = new_basis(G.n, emb.d, sparse)
    us, vs = _edge_arrays(G)
    basis.insert_edges(emb.coords, us, vs, stop_rank=cap if stop_at_max else -1)
    return basis


def rigidity_rank(G: Graph, d: int, rng=None, emb: Embedding | None = None) -> int:
    """Rank of the rigidity matrix at a random embedding."""
    if d < 1:
        raise ValueError("d must be at least 1")
    if G.n == 0 or G.m == 0:
        return 0
    if emb is None:
        emb = sample_embedding(G.n, d, rng)
    return rank_basis(G, emb).rank


def is_rigid(G: Graph, d: int, rng=None, reps: int = 1) -> bool:
    """Whether ``G`` is generically ``d``-rigid.

    For ``n <= d`` this is completeness. Otherwise the rank is compared to
    ``d*n - C(d+1, 2)``; ``reps`` independent embeddings are OR-combined.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if G.n <= d:
        return G.is_complete()
    target = max_rank(G.n, d)
    if G.m < target:
        return False
    rng = np.random.default_rng(rng)
    for _ in range(max(reps, 1)):
        if rigidity_rank(G, d, rng) == target:
            return True
    return False


# -- closure ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClosureGraph:
    """``G`` together with every pair whose rigidity row lies in the span of G's rows."""

    base: Graph
    edges: frozenset
    rank: int

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def size(self) -> int:
        return len(self.edges)

    @property
    def added(self) -> frozenset:
        return self.edges - self.base.edges

    def as_graph(self) -> Graph:
        return Graph(self.base.n, self.edges)

    def is_complete(self) -> bool:
        return self.size == comb(self.n, 2)

    def __contains__(self, pair) -> bool:
        u, v = pair
        return (min(u, v), max(u, v)) in self.edges


def _non_edges(G: Graph) -> tuple[np.ndarray, np.ndarray]:
    n = G.n
    iu, iv = np.triu_indices(n, 1)
    if G.m == 0:
        return iu.astype(np.int64), iv.astype(np.int64)
    present = np.zeros((n, n), dtype=bool)
    arr = G.edge_array()
    present[arr[:, 0], arr[:, 1]] = True
    keep = ~present[iu, iv]
    return iu[keep].astype(np.int64), iv[keep].astype(np.int64)


def closure(G: Graph, d: int, rng=None, emb: Embedding | None = None) -> ClosureGraph:
    """The ``d``-rigidity closure of ``G``.

    The row basis of ``G`` is built once and frozen; every non-edge is then a
    read-only span query against it.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if G.n < 2:
        return ClosureGraph(G, G.edges, 0)
    if emb is None:
        emb = sample_embedding(G.n, d, rng)
    basis = rank_basis(G, emb)
    us, vs = _non_edges(G)
    inside = basis.edges_in_span(emb.coords, us, vs)
    extra = zip(us[inside].tolist(), vs[inside].tolist())
    return ClosureGraph(G, G.edges | frozenset(extra), basis.rank)


@dataclass(frozen=True, eq=False)
class CliqueWitness:
    """Degree split of the closure and the greedy witness check on ``A``.

    ``A`` holds the vertices of closure degree above ``(1 - 1/(4d))(n-1)``.
    ``witness_ok`` is True when every checked pair of ``A`` had a greedy
    chain ``v_3..v_{d+2}`` in ``A``; ``is_clique`` checks ``A`` directly.
    """

    A: frozenset
    B: frozenset
    witness_ok: bool
    is_clique: bool
    pairs_checked: int
    threshold: float
    closure: ClosureGraph


def clique_in_closure(
    G: Graph, d: int, rng=None, pairs: int | None = 200, cl: ClosureGraph | None = None
) -> CliqueWitness:
    """Split vertices by closure degree and certify that the high-degree part is a clique.

    ``pairs`` caps how many pairs of ``A`` get the greedy chain construction
    (``None`` checks all of them).
    """
    rng = np.random.default_rng(rng)
    if cl is None:
        cl = closure(G, d, rng)
    n = G.n
    nbrs = [set() for _ in range(n)]
    for u, v in cl.edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    threshold = (1 - 1 / (4 * d)) * (n - 1)
    A = frozenset(v for v in range(n) if len(nbrs[v]) > threshold)
    B = frozenset(range(n)) - A
    a_list = sorted(A)
    all_pairs = [(x, y) for i, x in enumerate(a_list) for y in a_list[i + 1:]]
    if pairs is not None and len(all_pairs) > pairs:
        pick = rng.choice(len(all_pairs), size=pairs, replace=False)
        chosen = [all_pairs[i] for i in sorted(pick.tolist())]
    else:
        chosen = all_pairs
    witness_ok = True
    for v1, v2 in chosen:
        chain = _greedy_chain(v1, v2, a_list, nbrs, d, rng)
        if chain is None:
            witness_ok = False
            continue
        if v2 not in nbrs[v1]:
            # a d-clique joined to both ends forces the pair into the closure
            raise IntegrityError(f"chain {chain} found for {v1},{v2} but pair is not in the closure")
    is_clique = all(y in nbrs[x] for x, y in all_pairs)
    return CliqueWitness(A, B, witness_ok, is_clique, len(chosen), threshold, cl)


def _greedy_chain(v1, v2, a_list, nbrs, d, rng):
    chain = [v1, v2]
    order = rng.permutation(len(a_list))
    for _ in range(d):
        for i in order:
            c = a_list[i]
            if c not in chain and all(c in nbrs[x] for x in chain):
                chain.append(c)
                break
        else:
            return None
    return chain[2:]


# -- rigid components -------------------------------------------------------


def _subgraph_rigid(G: Graph, verts: list[int], d: int, emb: Embedding) -> bool:
    sub, _ = G.induced(verts)
    if sub.n <= d:
        return sub.is_complete()
    target = max_rank(sub.n, d)
    if sub.m < target:
        return False
    return rank_basis(sub, emb.restrict(verts)).rank == target


def rigid_components(
    G: Graph,
    d: int,
    mode: str = "exact",
    rng=None,
    max_exact_n: int = EXACT_COMPONENTS_MAX_N,
) -> list[frozenset]:
    """Inclusion-maximal vertex sets inducing ``d``-rigid subgraphs.

    Sets of one vertex are not reported; an edge always counts as a rigid
    pair. ``exact`` enumerates subsets and is limited to ``max_exact_n``
    vertices. ``heuristic`` grows sets from single edges by merging sets that
    share ``d`` vertices and absorbing vertices with ``d`` neighbours inside;
    every returned set is confirmed rigid by rank, but some components may be
    missed or reported only in part.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    rng = np.random.default_rng(rng)
    if mode == "exact":
        if G.n > max_exact_n:
            raise ValueError(f"exact rigid components limited to n <= {max_exact_n}, got {G.n}")
        return _components_exact(G, d, rng)
    if mode == "heuristic":
        return _components_heuristic(G, d, rng)
    raise ValueError(f"unknown mode {mode!r}")


def _components_exact(G: Graph, d: int, rng) -> list[frozenset]:
    n = G.n
    if n < 2 or G.m == 0:
        return []
    emb = sample_embedding(n, d, rng)
    adj = G.adjacency_masks()
    total = 1 << n
    masks = np.arange(total, dtype=np.int64)
    ecount = np.zeros(total, dtype=np.int64)
    for v in range(n):
        lo, hi = 1 << v, 1 << (v + 1)
        ecount[lo:hi] = ecount[:lo] + np.bitwise_count(adj[v] & masks[:lo])
    size = np.bitwise_count(masks).astype(np.int64)
    low_deg = np.zeros(total, dtype=bool)
    for v in range(n):
        inside = (masks >> v) & 1 == 1
        low_deg |= inside & (np.bitwise_count(adj[v] & masks) < d)
    small = size <= d + 1
    ok = (size >= 2) & np.where(
        small,
        ecount == size * (size - 1) // 2,
        (ecount >= d * size - comb(d + 1, 2)) & ~low_deg,
    )
    cands = masks[ok]
    csize = size[ok]
    order = np.lexsort((cands, -csize))
    cands = cands[order]
    covered = np.zeros(cands.shape[0], dtype=bool)
    found: list[int] = []
    for i in range(cands.shape[0]):
        if covered[i]:
            continue
        mask = int(cands[i])
        verts = [v for v in range(n) if mask >> v & 1]
        if _subgraph_rigid(G, verts, d, emb):
            found.append(mask)
            covered |= (cands & ~mask) == 0
    return sorted((frozenset(v for v in range(n) if m >> v & 1) for m in found), key=sorted)


def _components_heuristic(G: Graph, d: int, rng) -> list[frozenset]:
    sets: list[set[int]] = [set(e) for e in G.edge_list()]
    changed = True
    while changed:
        changed = False
        merged: list[set[int]] = []
        for s in sets:
            _absorb(G, s, d)
            for t in merged:
                if len(s & t) >= d or s <= t or t <= s:
                    t |= s
                    _absorb(G, t, d)
                    changed = True
                    break
            else:
                merged.append(s)
        sets = merged
    emb = sample_embedding(G.n, d, rng) if G.n else None
    result = []
    for s in sets:
        if _subgraph_rigid(G, sorted(s), d, emb):
            result.append(frozenset(s))
        else:
            log.warning("heuristic set of size %d failed the rank check; dropped", len(s))
    maximal = [s for s in result if not any(s < t for t in result)]
    return sorted(set(maximal), key=sorted)


def _absorb(G: Graph, s: set[int], d: int) -> None:
    if len(s) < d:
        return
    frontier = {u for v in s for u in G.adj[v]} - s
    while frontier:
        v = frontier.pop()
        if v not in s and len(G.adj[v] & s) >= d:
            s.add(v)
            frontier |= G.adj[v] - s


# -- global rigidity --------------------------------------------------------


def random_stress(G: Graph, emb: Embedding, rng=None) -> np.ndarray:
    """Uniformly random equilibrium stress: a random vector in the left kernel of R(G, p).

    The zero vector is returned when no nonzero stress exists.
    """
    rng = np.random.default_rng(rng)
    us, vs = _edge_arrays(G)
    rt = K.rigidity_matrix_t(emb.coords, us, vs)
    pivots = K.rref_inplace(rt)
    free_vals = random_elements(rng, G.m)
    return K.kernel_vector(rt[: pivots.shape[0]], pivots, free_vals)


def stress_matrix(G: Graph, omega: np.ndarray) -> np.ndarray:
    """``n x n`` matrix with ``-omega_uv`` off the diagonal and zero row sums."""
    us, vs = _edge_arrays(G)
    return K.stress_matrix(G.n, us, vs, np.asarray(omega, dtype=np.uint64))


def is_globally_rigid(G: Graph, d: int, rng=None, trials: int = 2) -> bool:
    """Randomised stress-matrix test for generic global ``d``-rigidity.

    For ``n >= d+2`` a random equilibrium stress at a random embedding must
    give a stress matrix of rank ``n - d - 1``; ``trials`` independent draws
    must all agree before answering True. Graphs on at most ``d+1`` vertices
    are globally rigid iff complete.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    n = G.n
    if n <= d + 1:
        return G.is_complete()
    if G.m == 0:
        return False
    rng = np.random.default_rng(rng)
    for _ in range(max(trials, 1)):
        emb = sample_embedding(n, d, rng)
        omega = random_stress(G, emb, rng)
        omat = stress_matrix(G, omega)
        if K.rref_inplace(omat).shape[0] != n - d - 1:
            return False
    return True
