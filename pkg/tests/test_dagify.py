"""Orientation, reachability and depth statistics.

The DFS rule is pinned with hand-traced fixtures; everything else is
checked structurally over seeded random graphs, with an exhaustive path
enumerator as the longest-path oracle.
"""

from __future__ import annotations

import random
from collections import deque

import pytest

from concnas.dagify import (
    ArchDag,
    depth_width_histogram,
    longest_path_length,
    orient,
    read_dag,
    to_dot,
    topological_order,
    vertex_depths,
    write_dag,
)
from concnas.randgraph import generate_fb, generate_ws
from concnas.score import overlap_ratio
from helpers import empty_graph, manual_graph, path_graph, random_small_graph


def reachable_from(dag, start, skip=None, reverse=False):
    adj = [[] for _ in range(dag.n_vertices)]
    for u, v in dag.edges:
        if reverse:
            adj[v].append(u)
        else:
            adj[u].append(v)
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y != skip and y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def brute_force_longest_path(dag):
    """Max vertex count over all input-to-output paths, by enumeration."""
    succ = [[] for _ in range(dag.n_vertices)]
    for u, v in dag.edges:
        succ[u].append(v)
    best = 0
    stack = [(dag.input_vertex, 1)]
    while stack:
        v, length = stack.pop()
        if v == dag.output_vertex:
            best = max(best, length)
            continue
        for w in succ[v]:
            stack.append((w, length + 1))
    return best


def test_path_graph_becomes_chain():
    dag = orient(path_graph(3))
    i, o = dag.input_vertex, dag.output_vertex
    assert set(dag.edges) == {(i, 0), (0, 1), (1, 2), (2, o)}
    assert longest_path_length(dag) == 5


def test_edgeless_graph_fans_out():
    dag = orient(empty_graph(3))
    i, o = dag.input_vertex, dag.output_vertex
    assert set(dag.edges) == {(i, 0), (i, 1), (i, 2), (0, o), (1, o), (2, o)}
    assert longest_path_length(dag) == 3


def test_triangle_orientation():
    dag = orient(manual_graph(3, [(0, 1), (1, 2), (0, 2)]))
    directed = {e for e in dag.edges if max(e) < 3}
    assert directed == {(0, 1), (1, 2), (0, 2)}
    assert longest_path_length(dag) == 5
    # one vertex per depth: 0 at 1, 1 at 2, 2 at 3, plus input and output
    assert depth_width_histogram(dag) == (1, 1, 1, 1, 1)


def test_orientation_always_acyclic():
    rng = random.Random(0xC0FFEE)
    for _ in range(1000):
        dag = orient(random_small_graph(rng))
        order = topological_order(dag)
        assert sorted(order) == list(range(dag.n_vertices))
        position = {v: i for i, v in enumerate(order)}
        for u, v in dag.edges:
            assert position[u] < position[v]


def test_single_source_single_sink_and_reachability():
    rng = random.Random(0xBEEF)
    for _ in range(300):
        dag = orient(random_small_graph(rng))
        in_deg = [0] * dag.n_vertices
        out_deg = [0] * dag.n_vertices
        for u, v in dag.edges:
            out_deg[u] += 1
            in_deg[v] += 1
        assert in_deg[dag.input_vertex] == 0
        assert out_deg[dag.output_vertex] == 0
        for v in range(dag.n_vertices):
            if v != dag.input_vertex:
                assert in_deg[v] > 0
            if v != dag.output_vertex:
                assert out_deg[v] > 0
        assert reachable_from(dag, dag.input_vertex) == set(range(dag.n_vertices))
        assert reachable_from(dag, dag.output_vertex, reverse=True) == set(
            range(dag.n_vertices)
        )


def test_orientation_deterministic():
    rng = random.Random(21)
    for _ in range(100):
        g = random_small_graph(rng)
        assert orient(g) == orient(g)


def test_longest_path_matches_enumeration():
    rng = random.Random(777)
    for _ in range(300):
        dag = orient(random_small_graph(rng, max_n=9))
        assert longest_path_length(dag) == brute_force_longest_path(dag)


def test_chain_of_ten_blocks():
    dag = orient(path_graph(10))
    assert longest_path_length(dag) == 12
    assert depth_width_histogram(dag) == (1,) * 12


def test_ten_parallel_blocks():
    dag = orient(empty_graph(10))
    assert longest_path_length(dag) == 3
    assert depth_width_histogram(dag) == (1, 10, 1)


def test_histogram_counts_every_vertex():
    rng = random.Random(3131)
    for _ in range(300):
        dag = orient(random_small_graph(rng))
        hist = depth_width_histogram(dag)
        assert sum(hist) == dag.n_vertices
        assert len(hist) == longest_path_length(dag)
        depths = vertex_depths(dag)
        assert depths[dag.input_vertex] == 0
        assert depths[dag.output_vertex] == len(hist) - 1


def test_fb_merge_vertices_are_cut_vertices():
    for seed in range(100):
        g = generate_fb(30, 4, 0.5, 3, seed=seed)
        dag = orient(g)
        merges = [v for v, k in enumerate(dag.kinds) if k == "merge"]
        assert len(merges) == 2
        depths = vertex_depths(dag)
        hist = depth_width_histogram(dag)
        for m in merges:
            # every input-to-output walk must pass through the merge
            reach = reachable_from(dag, dag.input_vertex, skip=m)
            assert dag.output_vertex not in reach
            assert hist[depths[m]] == 1


def test_fb_merge_wiring():
    g = generate_fb(30, 4, 0.5, 3, seed=5)
    dag = orient(g)
    merges = sorted(v for v, k in enumerate(dag.kinds) if k == "merge")
    bounds = [0, *g.stage_markers, 30]
    preds = dag.predecessors()
    succs = dag.successors()
    for j, m in enumerate(merges):
        lo, mid, hi = bounds[j], bounds[j + 1], bounds[j + 2]
        assert all(lo <= u < mid for u in preds[m])
        assert all(mid <= w < hi for w in succs[m])


def test_fb_staging_serializes_more_than_plain_ws():
    # merge funnels lengthen the critical path relative to one flat ws;
    # paired over seeds since the per-stage draws differ graph by graph
    diffs = []
    for seed in range(100):
        eta_fb = overlap_ratio(orient(generate_fb(30, 4, 0.5, 3, seed=seed)), 8)
        eta_ws = overlap_ratio(orient(generate_ws(30, 4, 0.5, seed=seed)), 8)
        diffs.append(eta_fb - eta_ws)
    assert sum(diffs) / len(diffs) > 0
    assert sum(1 for d in diffs if d > 0) > len(diffs) // 2


def test_cycle_is_rejected():
    dag = ArchDag(
        n_vertices=5,
        edges=((0, 1), (1, 2), (2, 0), (3, 0), (2, 4)),
        input_vertex=3,
        output_vertex=4,
        kinds=("block", "block", "block", "input", "output"),
    )
    with pytest.raises(ValueError):
        topological_order(dag)


def test_dag_round_trip(tmp_path):
    rng = random.Random(88)
    for i in range(100):
        dag = orient(random_small_graph(rng))
        path = tmp_path / f"d{i}.json"
        write_dag(dag, path)
        back = read_dag(path)
        assert back.edges == dag.edges
        assert back.input_vertex == dag.input_vertex
        assert back.output_vertex == dag.output_vertex
        assert back.kinds == dag.kinds


def test_dot_export_mentions_every_vertex():
    dag = orient(generate_fb(12, 2, 0.3, 2, seed=1))
    dot = to_dot(dag)
    assert dot.startswith("digraph")
    for v in range(dag.n_vertices):
        assert f"{v} [" in dot or f"{v} ->" in dot
    assert to_dot(dag) == dot
