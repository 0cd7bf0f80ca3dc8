"""Undirected random graph generators.

Five families, all over vertex ids ``0..n-1`` and all seed-deterministic:

* ``er``  independent edges with a fixed probability
* ``ba``  growth with linear preferential attachment
* ``ws``  ring lattice with clockwise probabilistic rewiring
* ``dp``  ring arrangement with distance-decaying edge probability
* ``fb``  staged baseline: independent ``ws`` stages joined later by
          merge vertices, stage boundaries recorded as markers

Edges are stored as ``(u, v)`` with ``u < v`` in lexicographic order, so
equal configurations serialize to identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Tuple

import numpy as np

from .rng import root_stream

Edge = Tuple[int, int]

@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of one generator run.

    ``kind`` selects the family; only that family's fields are read.
    ``p`` is the edge/rewire probability (er, ws, dp, fb), ``m`` the
    attachment count (ba), ``k`` the even lattice degree (ws, fb),
    ``alpha``/``beta`` the scale and decay of the distance rule (dp),
    ``stages`` the stage count (fb).
    """

    kind: str
    n_vertices: int
    seed: int
    p: Optional[float] = None
    m: Optional[int] = None
    k: Optional[int] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    stages: Optional[int] = None

@dataclass(frozen=True)
class UndirectedGraph:
    n_vertices: int
    edges: Tuple[Edge, ...]
    config: GeneratorConfig
    stage_markers: Tuple[int, ...] = field(default=())
    # diagnostic only, not serialized: ws/fb rewire coin successes
    rewired: int = field(default=0, compare=False)

    def degree(self, v: int) -> int:
        return sum(1 for a, b in self.edges if a == v or b == v)

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

def ring_distance(n: int, u: int, v: int) -> int:
    """Hop count between u and v when 0..n-1 sit on a ring, at most n // 2."""
    if n < 1:
        raise ValueError(f"ring needs at least one vertex, got {n}")
    if u == v:
        raise ValueError("ring distance needs two distinct vertices")
    if not (0 <= u < n and 0 <= v < n):
        raise ValueError(f"vertex out of range for ring of {n}: ({u}, {v})")
    gap = abs(u - v)
    return min(gap, n - gap)

def dp_edge_probability(alpha: float, p: float, beta: float, distance: int) -> float:
    """Inclusion probability alpha * p**(beta * d), clamped to 1."""
    return min(1.0, alpha * p ** (beta * distance))

def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"need at least one vertex, got {n}")

def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability outside [0, 1]: {p}")

def _pairs(n: int) -> Iterator[Edge]:
    for u in range(n):
        for v in range(u + 1, n):
            yield (u, v)

def generate_er(n: int, p: float, seed: int) -> UndirectedGraph:
    """Independent coin per vertex pair, probability ``p`` each."""
    _check_n(n)
    _check_p(p)
    rng = root_stream(seed)
    pairs = list(_pairs(n))
    draws = rng.random(len(pairs))
    edges = tuple(pair for pair, x in zip(pairs, draws) if x < p)
    cfg = GeneratorConfig(kind="er", n_vertices=n, seed=seed, p=p)
    return UndirectedGraph(n_vertices=n, edges=edges, config=cfg)

def generate_ba(n: int, m: int, seed: int) -> UndirectedGraph:
    """Preferential attachment: m disconnected seed vertices, then each
    new vertex attaches m distinct edges to existing vertices drawn with
    probability proportional to degree + 1.

    Degrees refresh after every accepted edge, duplicates are resampled,
    so the result always has exactly m * (n - m) edges.
    """
    _check_n(n)
    if m < 1 or m >= n:
        raise ValueError(f"attachment count must satisfy 1 <= m < n, got m={m}, n={n}")
    rng = root_stream(seed)
    degree = np.zeros(n, dtype=np.int64)
    edges: list[Edge] = []
    for v in range(m, n):
        chosen: set[int] = set()
        while len(chosen) < m:
            weights = degree[:v] + 1
            cum = np.cumsum(weights)
            t = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            if t in chosen:
                continue
            chosen.add(t)
            degree[t] += 1
            degree[v] += 1
            edges.append((t, v))
    edges.sort()
    cfg = GeneratorConfig(kind="ba", n_vertices=n, seed=seed, m=m)
    return UndirectedGraph(n_vertices=n, edges=tuple(edges), config=cfg)

def _ws_edges(
    n: int, k: int, p: float, rng: np.random.Generator, offset: int = 0
) -> tuple[set[Edge], int]:
    """Lattice-plus-rewire edge set over offset..offset+n-1.

    Consumes draws from ``rng`` in a fixed order: one uniform per lattice
    edge (pass i = 1..k/2, vertex 0..n-1 clockwise), plus target draws
    whenever the coin says rewire.  Returns the edges and the rewire count.
    """
    adj: list[set[int]] = [set() for _ in range(n)]
    for v in range(n):
        for i in range(1, k // 2 + 1):
            w = (v + i) % n
            adj[v].add(w)
            adj[w].add(v)
    rewired = 0
    for i in range(1, k // 2 + 1):
        for v in range(n):
            w = (v + i) % n
            if w not in adj[v]:
                continue
            if rng.random() >= p:
                continue
            # all other vertices already adjacent: nothing to rewire to
            if len(adj[v]) >= n - 1:
                continue
            while True:
                t = int(rng.integers(0, n))
                if t != v and t not in adj[v]:
                    break
            adj[v].discard(w)
            adj[w].discard(v)
            adj[v].add(t)
            adj[t].add(v)
            rewired += 1
    edges: set[Edge] = set()
    for v in range(n):
        for w in adj[v]:
            a, b = sorted((v + offset, w + offset))
            edges.add((a, b))
    return edges, rewired

def _check_ws_params(n: int, k: int) -> None:
    if k % 2 != 0:
        raise ValueError(f"lattice degree must be even, got {k}")
    if k < 0 or k >= n:
        raise ValueError(f"lattice degree must satisfy 0 <= k < n, got k={k}, n={n}")

def generate_ws(n: int, k: int, p: float, seed: int) -> UndirectedGraph:
    """Ring lattice with k/2 neighbours per side, then one clockwise
    rewiring pass per lattice distance: each surviving lattice edge moves
    to a uniformly drawn non-duplicate, non-self target with probability
    ``p``.  The edge count stays n * k / 2.
    """
    _check_n(n)
    _check_ws_params(n, k)
    _check_p(p)
    rng = root_stream(seed)
    edges, rewired = _ws_edges(n, k, p, rng)
    cfg = GeneratorConfig(kind="ws", n_vertices=n, seed=seed, p=p, k=k)
    return UndirectedGraph(
        n_vertices=n, edges=tuple(sorted(edges)), config=cfg, rewired=rewired
    )

def generate_dp(n: int, p: float, alpha: float, beta: float, seed: int) -> UndirectedGraph:
    """Ring arrangement with distance-decaying edge probability.

    Pair (u, v) at ring distance d is included independently with
    probability min(1, alpha * p**(beta * d)), so short-range edges
    dominate and the graph splits into locally connected clusters.
    """
    _check_n(n)
    _check_p(p)
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    rng = root_stream(seed)
    pairs = list(_pairs(n))
    probs = np.array(
        [dp_edge_probability(alpha, p, beta, ring_distance(n, u, v)) for u, v in pairs]
    )
    draws = rng.random(len(pairs))
    edges = tuple(pair for pair, x, q in zip(pairs, draws, probs) if x < q)
    cfg = GeneratorConfig(kind="dp", n_vertices=n, seed=seed, p=p, alpha=alpha, beta=beta)
    return UndirectedGraph(n_vertices=n, edges=edges, config=cfg)

def fb_stage_ranges(n: int, stages: int) -> list[tuple[int, int]]:
    """Contiguous near-equal [start, end) ranges, earlier stages larger."""
    base, rem = divmod(n, stages)
    ranges = []
    start = 0
    for s in range(stages):
        size = base + (1 if s < rem else 0)
        ranges.append((start, start + size))
        start += size
    return ranges

def generate_fb(n: int, k: int, p: float, stages: int, seed: int) -> UndirectedGraph:
    """Staged baseline: an independent ws graph inside each contiguous
    stage, sharing one stream stage by stage, with a marker recorded at
    every stage boundary.  With stages=1 this is exactly ``generate_ws``.

    Stages too small for the requested lattice degree fall back to the
    largest even degree below the stage size.
    """
    _check_n(n)
    _check_p(p)
    if stages < 1 or stages > n:
        raise ValueError(f"stage count must satisfy 1 <= stages <= n, got {stages}")
    if k % 2 != 0 or k < 0:
        raise ValueError(f"lattice degree must be even and non-negative, got {k}")
    if stages == 1:
        _check_ws_params(n, k)
    rng = root_stream(seed)
    edges: set[Edge] = set()
    rewired = 0
    ranges = fb_stage_ranges(n, stages)
    for start, end in ranges:
        size = end - start
        k_eff = min(k, size - 1)
        if k_eff % 2 != 0:
            k_eff -= 1
        stage_edges, stage_rewired = _ws_edges(size, k_eff, p, rng, offset=start)
        edges |= stage_edges
        rewired += stage_rewired
    markers = tuple(start for start, _ in ranges[1:])
    cfg = GeneratorConfig(kind="fb", n_vertices=n, seed=seed, p=p, k=k, stages=stages)
    return UndirectedGraph(
        n_vertices=n,
        edges=tuple(sorted(edges)),
        config=cfg,
        stage_markers=markers,
        rewired=rewired,
    )

def generate(config: GeneratorConfig) -> UndirectedGraph:
    """Dispatch on ``config.kind``; unknown kinds raise ValueError."""
    kind = config.kind
    n, seed = config.n_vertices, config.seed
    if kind == "er":
        return generate_er(n, _require(config, "p"), seed)
    if kind == "ba":
        return generate_ba(n, _require(config, "m"), seed)
    if kind == "ws":
        return generate_ws(n, _require(config, "k"), _require(config, "p"), seed)
    if kind == "dp":
        return generate_dp(
            n, _require(config, "p"), _require(config, "alpha"), _require(config, "beta"), seed
        )
    if kind == "fb":
        return generate_fb(
            n, _require(config, "k"), _require(config, "p"), _require(config, "stages"), seed
        )
    raise ValueError(f"unknown generator kind: {kind!r}")

def _require(config: GeneratorConfig, name: str):
    value = getattr(config, name)
    if value is None:
        raise ValueError(f"generator {config.kind!r} needs parameter {name!r}")
    return value

def graph_to_dict(g: UndirectedGraph) -> dict:
    cfg = {k: v for k, v in asdict(g.config).items() if v is not None}
    return {
        "n_vertices": g.n_vertices,
        "edges": [list(e) for e in g.edges],
        "generator": cfg,
        "stage_markers": list(g.stage_markers),
    }

def graph_from_dict(doc: dict) -> UndirectedGraph:
    cfg = GeneratorConfig(**doc["generator"])
    return UndirectedGraph(
        n_vertices=doc["n_vertices"],
        edges=tuple(tuple(e) for e in doc["edges"]),
        config=cfg,
        stage_markers=tuple(doc.get("stage_markers", ())),
    )

def write_graph(g: UndirectedGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=2, sort_keys=True) + "\n")

def read_graph(path: str | Path) -> UndirectedGraph:
    return graph_from_dict(json.loads(Path(path).read_text()))
