"""Simple undirected graphs, random graph models and combinatorial oracles."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import networkx as nx
import numpy as np

__all__ = [
    "Graph",
    "EvolutionStream",
    "GraphOracles",
    "Orientability",
    "complete_graph",
    "empty_graph",
    "path_graph",
    "cycle_graph",
    "star_graph",
    "complete_minus_edge",
    "gnp",
    "gnm",
    "evolution",
    "pair_index",
    "pairs_from_index",
    "graph_oracles",
    "is_connected",
    "is_2_connected",
    "kcore",
    "extended_core",
    "is_d_orientable",
    "expansion_violator",
    "subset_masks",
    "henneberg_minimally_rigid",
    "gadget_graph",
    "parse_edge_list",
    "format_edge_list",
    "read_edge_list",
    "write_edge_list",
    "EXHAUSTIVE_MAX_N",
]

EXHAUSTIVE_MAX_N = 24


class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Edges are stored as pairs ``(u, v)`` with ``u < v``. Instances are
    treated as immutable; operations that change the edge set return a new
    graph.
    """

    __slots__ = ("n", "edges", "_adj", "_array")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        n = int(n)
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        norm = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if u > v:
                u, v = v, u
            if u < 0 or v >= n:
                raise ValueError(f"edge ({u}, {v}) outside vertex range 0..{n - 1}")
            if (u, v) in norm:
                raise ValueError(f"duplicate edge ({u}, {v})")
            norm.add((u, v))
        self.n = n
        self.edges = frozenset(norm)
        self._adj = None
        self._array = None

    @classmethod
    def from_arrays(cls, n: int, us: np.ndarray, vs: np.ndarray) -> "Graph":
        """Build from endpoint arrays, validated in bulk."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        lo, hi = np.minimum(us, vs), np.maximum(us, vs)
        if lo.size:
            if (lo == hi).any():
                raise ValueError("loop in edge arrays")
            if lo.min() < 0 or hi.max() >= n:
                raise ValueError("edge outside vertex range")
        order = np.lexsort((hi, lo))
        arr = np.stack([lo[order], hi[order]], axis=1) if lo.size else np.zeros((0, 2), np.int64)
        if arr.shape[0] > 1 and (np.diff(arr, axis=0) == 0).all(axis=1).any():
            raise ValueError("duplicate edge in edge arrays")
        g = cls.__new__(cls)
        g.n = int(n)
        g.edges = frozenset(zip(arr[:, 0].tolist(), arr[:, 1].tolist()))
        g._adj = None
        arr.setflags(write=False)
        g._array = arr
        return g

    @property
    def adj(self) -> tuple[frozenset, ...]:
        """Neighbour sets, built on first use."""
        if self._adj is None:
            adj: list[set[int]] = [set() for _ in range(self.n)]
            for u, v in self.edges:
                adj[u].add(v)
                adj[v].add(u)
            self._adj = tuple(frozenset(a) for a in adj)
        return self._adj

    @property
    def m(self) -> int:
        return len(self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def edge_array(self) -> np.ndarray:
        """Sorted ``(m, 2)`` int64 array of edges."""
        if self._array is None:
            arr = np.array(self.edge_list(), dtype=np.int64).reshape(-1, 2)
            arr.setflags(write=False)
            self._array = arr
        return self._array

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def degrees(self) -> list[int]:
        if self._adj is None:
            return np.bincount(self.edge_array().ravel(), minlength=self.n).tolist()
        return [len(a) for a in self.adj]

    def min_degree(self) -> int:
        if self.n == 0:
            return 0
        if self._adj is None:
            return int(np.bincount(self.edge_array().ravel(), minlength=self.n).min())
        return min(len(a) for a in self.adj)

    def is_complete(self) -> bool:
        return self.m == self.n * (self.n - 1) // 2

    def non_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in range(u + 1, self.n) if v not in self.adj[u]]

    def with_edges(self, extra: Iterable[tuple[int, int]]) -> "Graph":
        """New graph with ``extra`` edges added (already-present ones ignored)."""
        new = set(self.edges)
        for u, v in extra:
            new.add((min(u, v), max(u, v)))
        return Graph(self.n, new)

    def is_subgraph_of(self, other: "Graph") -> bool:
        return self.n == other.n and self.edges <= other.edges

    def induced(self, vertices: Iterable[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph relabelled to ``0..k-1``; also returns the label map."""
        verts = sorted(set(vertices))
        index = {v: i for i, v in enumerate(verts)}
        sub = [(index[u], index[v]) for u, v in self.edges if u in index and v in index]
        return Graph(len(verts), sub), verts

    def induced_edge_count(self, vertices: Iterable[int]) -> int:
        s = set(vertices)
        return sum(1 for u in s for v in self.adj[u] if v in s) // 2

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def adjacency_masks(self) -> np.ndarray:
        """Neighbourhoods as bitmasks (for ``n <= 62``)."""
        if self.n > 62:
            raise ValueError("bitmask adjacency needs n <= 62")
        return np.array([sum(1 << u for u in a) for a in self.adj], dtype=np.int64)


# -- constructors -----------------------------------------------------------


def complete_graph(n: int) -> Graph:
    return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def empty_graph(n: int) -> Graph:
    return Graph(n)


def path_graph(n: int) -> Graph:
    return Graph(n, ((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves: int) -> Graph:
    """Star with centre 0 and leaves ``1..leaves``."""
    return Graph(leaves + 1, ((0, i) for i in range(1, leaves + 1)))


def complete_minus_edge(n: int) -> Graph:
    """``K_n`` without the edge ``(0, 1)``."""
    return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, n) if (u, v) != (0, 1)))


# -- random models ----------------------------------------------------------


def pair_index(n: int, u, v):
    """Lexicographic index of the pair ``u < v`` among all pairs of ``[n]``."""
    return u * (2 * n - u - 1) // 2 + (v - u - 1)


def pairs_from_index(n: int, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`pair_index`, vectorised."""
    k = np.asarray(k, dtype=np.int64)
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(np.maximum(b * b - 8 * k, 0).astype(np.float64))) / 2).astype(np.int64)
    u = np.clip(u, 0, max(n - 2, 0))
    # float rounding can leave u off by one
    start = u * (2 * n - u - 1) // 2
    over = start > k
    u[over] -= 1
    start = u * (2 * n - u - 1) // 2
    nxt = (u + 1) * (2 * n - u - 2) // 2
    under = k >= nxt
    u[under] += 1
    start = u * (2 * n - u - 1) // 2
    v = k - start + u + 1
    return u, v


def _rng(rng) -> np.random.Generator:
    return np.random.default_rng(rng)


def gnp(n: int, p: float, rng=None) -> Graph:
    """Binomial random graph: each pair present independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    rng = _rng(rng)
    total = n * (n - 1) // 2
    m = int(rng.binomial(total, p)) if total else 0
    return _sample_pairs(n, m, rng)


def gnm(n: int, M: int, rng=None) -> Graph:
    """Uniform random graph with exactly ``M`` edges."""
    total = n * (n - 1) // 2
    if not 0 <= M <= total:
        raise ValueError(f"edge count {M} outside [0, {total}]")
    return _sample_pairs(n, int(M), _rng(rng))


def _sample_pairs(n: int, m: int, rng: np.random.Generator) -> Graph:
    total = n * (n - 1) // 2
    if m == 0:
        return Graph(n)
    idx = rng.choice(total, size=m, replace=False)
    us, vs = pairs_from_index(n, idx)
    return Graph.from_arrays(n, us, vs)


@dataclass(frozen=True, eq=False)
class EvolutionStream:
    """A uniformly random ordering of all pairs of ``[n]``.

    The first ``M`` pairs form a uniform graph with ``M`` edges, for every
    ``M`` simultaneously.
    """

    n: int
    us: np.ndarray
    vs: np.ndarray
    seed: int | None = None

    def __len__(self) -> int:
        return int(self.us.shape[0])

    def prefix(self, M: int) -> Graph:
        if not 0 <= M <= len(self):
            raise ValueError(f"prefix length {M} outside [0, {len(self)}]")
        return Graph.from_arrays(self.n, self.us[:M], self.vs[:M])

    def edge(self, i: int) -> tuple[int, int]:
        return int(self.us[i]), int(self.vs[i])


def evolution(n: int, rng=None) -> EvolutionStream:
    """Random graph process on ``n`` vertices as a shuffled list of all pairs."""
    if n < 1:
        raise ValueError("evolution needs n >= 1")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    gen = _rng(rng)
    total = n * (n - 1) // 2
    order = gen.permutation(total)
    us, vs = pairs_from_index(n, order)
    us.setflags(write=False)
    vs.setflags(write=False)
    return EvolutionStream(n, us, vs, seed)


# -- oracles ----------------------------------------------------------------


class GraphOracles(NamedTuple):
    min_degree: int
    is_connected: bool
    is_2_connected: bool


def is_connected(G: Graph) -> bool:
    if G.n <= 1:
        return True
    seen = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in G.adj[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == G.n


def is_2_connected(G: Graph) -> bool:
    """Connected, at least 3 vertices, and no cut vertex."""
    if G.n < 3 or not is_connected(G):
        return False
    return nx.is_biconnected(G.to_networkx())


def graph_oracles(G: Graph) -> GraphOracles:
    return GraphOracles(G.min_degree(), is_connected(G), is_2_connected(G))


def kcore(G: Graph, k: int) -> frozenset[int]:
    """Vertex set of the ``k``-core, by repeatedly deleting vertices of degree < k."""
    if k < 0:
        raise ValueError("k must be non-negative")
    deg = G.degrees()
    alive = [True] * G.n
    stack = [v for v in range(G.n) if deg[v] < k]
    for v in stack:
        alive[v] = False
    while stack:
        v = stack.pop()
        for u in G.adj[v]:
            if alive[u]:
                deg[u] -= 1
                if deg[u] < k:
                    alive[u] = False
                    stack.append(u)
    return frozenset(v for v in range(G.n) if alive[v])


def extended_core(G: Graph, d: int, rng=None) -> frozenset[int]:
    """The ``(d+1)``-core grown by vertices having at least ``d`` neighbours inside.

    The result does not depend on the order of additions; ``rng`` only
    shuffles that order (useful for checking exactly this).
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    inside = set(kcore(G, d + 1))
    if not inside:
        return frozenset()
    count = [0] * G.n
    for v in range(G.n):
        if v not in inside:
            count[v] = sum(1 for u in G.adj[v] if u in inside)
    pending = [v for v in range(G.n) if v not in inside and count[v] >= d]
    if rng is not None:
        _rng(rng).shuffle(pending)
    while pending:
        v = pending.pop()
        if v in inside:
            continue
        inside.add(v)
        for u in G.adj[v]:
            if u not in inside:
                count[u] += 1
                if count[u] == d:
                    pending.append(u)
    return frozenset(inside)


@dataclass(frozen=True)
class Orientability:
    """Outcome of :func:`is_d_orientable`.

    ``heads`` maps each edge to the endpoint it points to when orientable;
    otherwise ``witness`` is a vertex set inducing more than ``d*|A|`` edges.
    """

    orientable: bool
    heads: dict | None = None
    witness: frozenset | None = None

    def in_degrees(self, n: int) -> list[int]:
        indeg = [0] * n
        for h in (self.heads or {}).values():
            indeg[h] += 1
        return indeg


def is_d_orientable(G: Graph, d: int) -> Orientability:
    """Decide whether edges can be oriented with every in-degree at most ``d``.

    Max-flow from a source through one node per edge (capacity 1) to its two
    endpoints (uncapacitated) and on to the sink (capacity ``d`` per vertex).
    A full flow gives the orientation; otherwise the vertices reachable in
    the residual network form the overloaded set.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if G.m == 0:
        return Orientability(True, heads={})
    net = nx.DiGraph()
    src, snk = ("s",), ("t",)
    for e in G.edge_list():
        net.add_edge(src, ("e", e), capacity=1)
        net.add_edge(("e", e), ("v", e[0]))
        net.add_edge(("e", e), ("v", e[1]))
    for v in range(G.n):
        if G.adj[v]:
            net.add_edge(("v", v), snk, capacity=d)
    residual = nx.algorithms.flow.preflow_push(net, src, snk)
    value = residual.graph["flow_value"]
    if value == G.m:
        heads = {}
        for e in G.edge_list():
            a = residual[("e", e)][("v", e[0])]["flow"]
            heads[e] = e[0] if a > 0 else e[1]
        return Orientability(True, heads=heads)
    seen = {src}
    queue = deque([src])
    while queue:
        x = queue.popleft()
        for y, attr in residual[x].items():
            if y not in seen and attr["flow"] < attr["capacity"]:
                seen.add(y)
                queue.append(y)
    witness = frozenset(node[1] for node in seen if node[0] == "v")
    return Orientability(False, witness=witness)


# -- expansion --------------------------------------------------------------


def subset_masks(n: int, max_size: int, chunk: int = 1 << 20):
    """Yield int64 arrays of bitmasks ``B`` with ``1 <= |B| <= max_size``."""
    total = 1 << n
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        size = np.bitwise_count(masks)
        yield masks[size <= max_size]


def _outside_counts(adj_masks: np.ndarray, masks: np.ndarray, v: int, full: int) -> np.ndarray:
    return np.bitwise_count(adj_masks[v] & (~masks & full))


def expansion_violator(
    G: Graph, d: int, mode: str = "exhaustive", budget: int = 100_000, rng=None
) -> frozenset[int] | None:
    """Find ``B`` with ``1 <= |B| <= n/2`` where every vertex has < d neighbours outside.

    ``exhaustive`` checks every subset (``n <= 24``) and returns a smallest
    violator, so ``None`` proves expansion. ``search`` runs simulated
    annealing for ``budget`` flips; ``None`` then proves nothing.
    """
    n = G.n
    if mode == "exhaustive":
        if n > EXHAUSTIVE_MAX_N:
            raise ValueError(f"exhaustive expansion check needs n <= {EXHAUSTIVE_MAX_N}, got {n}")
        if n < 2:
            return None
        adj = G.adjacency_masks()
        full = (1 << n) - 1
        best = None
        for masks in subset_masks(n, n // 2):
            expands = np.zeros(masks.shape[0], dtype=bool)
            for v in range(n):
                inside = (masks >> v) & 1 == 1
                expands |= inside & (_outside_counts(adj, masks, v, full) >= d)
            bad = masks[~expands]
            if bad.size:
                sizes = np.bitwise_count(bad)
                i = int(np.lexsort((bad, sizes))[0])
                cand = (int(sizes[i]), int(bad[i]))
                if best is None or cand < best:
                    best = cand
        if best is None:
            return None
        return frozenset(v for v in range(n) if best[1] >> v & 1)
    if mode == "search":
        return _anneal_violator(G, d, budget, _rng(rng))
    raise ValueError(f"unknown mode {mode!r}")


def _anneal_violator(G: Graph, d: int, budget: int, rng: np.random.Generator):
    n = G.n
    half = n // 2
    if half < 1:
        return None
    deg = G.degrees()
    # start from the lowest-degree vertex: the likeliest singleton violator
    start = int(np.argmin(deg))
    in_b = np.zeros(n, dtype=bool)
    in_b[start] = True
    out = np.array(deg, dtype=np.int64)
    for u in G.adj[start]:
        out[u] -= 1
    size = 1

    def energy() -> int:
        return int(np.count_nonzero(in_b & (out >= d)))

    e = energy()
    temp = 1.0
    for step in range(budget):
        if e == 0 and 1 <= size <= half:
            return frozenset(np.flatnonzero(in_b).tolist())
        w = int(rng.integers(n))
        if in_b[w] and size == 1 or not in_b[w] and size == half:
            continue
        delta_sign = -1 if not in_b[w] else 1
        in_b[w] = not in_b[w]
        for u in G.adj[w]:
            out[u] += delta_sign
        new_e = energy()
        if new_e <= e or rng.random() < math.exp((e - new_e) / max(temp, 1e-3)):
            e = new_e
            size += 1 if in_b[w] else -1
        else:
            in_b[w] = not in_b[w]
            for u in G.adj[w]:
                out[u] -= delta_sign
        temp = max(0.05, 1.0 - step / max(budget, 1))
    if e == 0 and 1 <= size <= half:
        return frozenset(np.flatnonzero(in_b).tolist())
    return None


# -- constructions ----------------------------------------------------------


def henneberg_minimally_rigid(a: int, d: int, rng=None) -> Graph:
    """``K_{d+1}`` extended by vertices joined to ``d`` random earlier vertices.

    The edge count is ``d*a - C(d+1, 2)``; rigidity itself is left for the
    rank oracle to confirm.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if a < d + 1:
        raise ValueError(f"need at least d+1 = {d + 1} vertices, got {a}")
    rng = _rng(rng)
    edges = [(u, v) for u in range(d + 1) for v in range(u + 1, d + 1)]
    for x in range(d + 1, a):
        for y in rng.choice(x, size=d, replace=False):
            edges.append((int(y), x))
    return Graph(a, edges)


def gadget_graph(H: Graph, d: int) -> tuple[Graph, frozenset[int]]:
    """Replace each edge ``xy`` of ``H`` by a private ``K_{d+2}`` missing ``xy``.

    The vertices of ``H`` keep labels ``0..|A|-1``; each edge in sorted order
    gets ``d`` fresh vertices.
    """
    edges = []
    nxt = H.n
    for x, y in H.edge_list():
        fresh = list(range(nxt, nxt + d))
        nxt += d
        block = [x, y] + fresh
        for i, u in enumerate(block):
            for v in block[i + 1:]:
                if {u, v} != {x, y}:
                    edges.append((u, v))
    return Graph(nxt, edges), frozenset(range(H.n))


# -- edge-list I/O ----------------------------------------------------------


def parse_edge_list(text: str) -> Graph:
    """Parse ``n m`` followed by ``m`` lines ``u v``; '#' lines and blanks skipped."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("edge list is empty")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError("first line must be 'n m'")
    n, m = int(head[0]), int(head[1])
    body = lines[1:]
    if len(body) != m:
        raise ValueError(f"header announces {m} edges, found {len(body)}")
    edges = []
    for ln in body:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph(n, edges)


def format_edge_list(G: Graph) -> str:
    out = [f"{G.n} {G.m}"]
    out += [f"{u} {v}" for u, v in G.edge_list()]
    return "\n".join(out) + "\n"


def read_edge_list(path) -> Graph:
    return parse_edge_list(Path(path).read_text())


def write_edge_list(G: Graph, path) -> None:
    Path(path).write_text(format_edge_list(G))
