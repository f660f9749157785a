import io
import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapcert.errors import BadSize, NotAPatch, OutOfRange, PatchTooLarge
from gapcert.lattice import (
    HORIZONTAL,
    VERTICAL,
    build_chain,
    build_cycle,
    build_patch,
    build_torus,
    cycle_distance,
    dump_edges,
    edge_distance_census,
    embed_patch,
)


def test_chain_edges():
    g = build_chain(2)
    assert [(e.source, e.target) for e in g.edges] == [(1, 2)]
    g = build_chain(5)
    assert g.num_edges == 4
    assert all(e.cls == HORIZONTAL and e.target == e.source + 1 for e in g.edges)
    with pytest.raises(BadSize):
        build_chain(1)


def test_cycle_edges():
    assert [(e.source, e.target) for e in build_cycle(3).edges] == [(1, 2), (2, 3), (3, 1)]
    assert build_cycle(7).num_edges == 7
    with pytest.raises(BadSize):
        build_cycle(2)


def test_cycle_distance_examples():
    assert cycle_distance(1, 2, 7) == 1
    assert cycle_distance(1, 7, 7) == 1
    assert cycle_distance(2, 5, 8) == 3
    with pytest.raises(OutOfRange):
        cycle_distance(0, 3, 5)


@pytest.mark.parametrize("m", range(3, 21))
def test_cycle_distance_metric(m):
    verts = range(1, m + 1)
    for i, j in itertools.product(verts, verts):
        assert cycle_distance(i, j, m) == cycle_distance(j, i, m)
        assert (cycle_distance(i, j, m) == 0) == (i == j)
    for i, j, k in itertools.product(verts, verts, verts):
        assert cycle_distance(i, k, m) <= cycle_distance(i, j, m) + cycle_distance(j, k, m)


def test_torus_counts_and_degrees():
    g = build_torus(3)
    assert len(g.vertices) == 9 and g.num_edges == 18
    assert build_torus(4).num_edges == 32
    ins, outs = build_torus(5).degree()
    assert set(ins.values()) == {2} and set(outs.values()) == {2}
    assert len(ins) == 25


def test_torus_orientation():
    m = 6
    for e in build_torus(m).edges:
        (x, y), (x2, y2) = e.source, e.target
        if e.cls == HORIZONTAL:
            assert (x2, y2) == ((x + 1) % m, y)
        else:
            assert (x2, y2) == (x, (y + 1) % m)


def test_patch4_counts():
    p = build_patch(4, "P")
    assert len(p.vertices) == 24
    cls = [e.cls for e in p.edges]
    assert cls.count(HORIZONTAL) == 20 and cls.count(VERTICAL) == 12
    # No vertical edges in the first and last columns.
    assert all(e.source[1] not in (1, 6) for e in p.edges if e.cls == VERTICAL)


def test_patch_odd_size_rejected():
    for n in (3, 0, -2):
        with pytest.raises(BadSize):
            build_patch(n)


# Distance partition of P_6 transcribed from the figure's drawing coordinates
# (x = col - 1, y = row - 1): blue edges have d = 1, red d = 2, black d = 3.
def _fig_edges(hx, hy, vx, vy):
    out = set()
    for x in hx:
        for y in hy:
            out.add(((y + 1, x + 1), (y + 1, x + 2)))
    for x in vx:
        for y in vy:
            out.add(((y + 1, x + 1), (y + 2, x + 1)))
    return out


def test_patch6_distance_partition_matches_figure():
    blue = _fig_edges(range(2, 5), range(2, 4), range(3, 5), range(2, 3))
    red_or_blue = _fig_edges(range(1, 6), range(1, 5), range(2, 6), range(1, 4))
    p = build_patch(6, "P")
    dist = {(e.source, e.target): e.dist for e in p.edges}
    assert {k for k, r in dist.items() if r == 1} == blue
    assert {k for k, r in dist.items() if r <= 2} == red_or_blue
    assert sum(r == 3 for r in dist.values()) == len(dist) - len(red_or_blue) == 40
    assert p.center == (3, 4)


def test_census_examples():
    assert edge_distance_census(build_patch(4)) == {HORIZONTAL: {1: 6, 2: 14}, VERTICAL: {1: 2, 2: 10}}
    assert edge_distance_census(build_patch(2)) == {HORIZONTAL: {1: 6}, VERTICAL: {1: 2}}
    c6 = edge_distance_census(build_patch(6))
    assert sum(c6[HORIZONTAL].values()) == 42 and sum(c6[VERTICAL].values()) == 30
    with pytest.raises(NotAPatch):
        edge_distance_census(build_chain(3))


@pytest.mark.parametrize("n", range(2, 41, 2))
def test_census_formula(n):
    c = edge_distance_census(build_patch(n, "P"))
    q = edge_distance_census(build_patch(n, "Q"))
    for r in range(1, n // 2 + 1):
        assert c[HORIZONTAL][r] == 8 * r - 2
        assert c[VERTICAL][r] == 8 * r - 6
        assert q[HORIZONTAL][r] == c[VERTICAL][r]
        assert q[VERTICAL][r] == c[HORIZONTAL][r]
    assert sum(c[HORIZONTAL].values()) == n * (n + 1)
    assert sum(c[VERTICAL].values()) == n * (n - 1)


def _shape(edges):
    """Edge set translated so its lowest-leftmost vertex is at the origin."""
    verts = [v for e in edges for v in (e[0], e[1])]
    r0 = min(v[0] for v in verts)
    c0 = min(v[1] for v in verts)
    return {((a[0] - r0, a[1] - c0), (b[0] - r0, b[1] - c0)) for a, b in edges}


@pytest.mark.parametrize("n", range(2, 13, 2))
@pytest.mark.parametrize("orient", ["P", "Q"])
def test_cocentered_subpatches(n, orient):
    p = build_patch(n, orient)
    for r in range(1, n // 2 + 1):
        inner = [(e.source, e.target) for e in p.edges if e.dist <= r]
        small = [(e.source, e.target) for e in build_patch(2 * r, orient).edges]
        assert _shape(inner) == _shape(small)


def test_q_patch_is_rotated_p():
    q = build_patch(4, "Q")
    assert len(q.vertices) == 24
    rows = {v[0] for v in q.vertices}
    cols = {v[1] for v in q.vertices}
    assert len(rows) == 6 and len(cols) == 4
    # Horizontal edges are absent from the first and last rows.
    assert all(e.source[0] not in (1, 6) for e in q.edges if e.cls == HORIZONTAL)
    for e in q.edges:
        (r1, c1), (r2, c2) = e.source, e.target
        assert (r2 - r1, c2 - c1) == ((0, 1) if e.cls == HORIZONTAL else (1, 0))


def test_embed_patch_distinct_edges():
    torus = build_torus(13)
    tedges = {(e.source, e.target) for e in torus.edges}
    for k in [(0, 0), (5, 7), (12, 12)]:
        for orient in "PQ":
            emb = embed_patch(build_patch(4, orient), torus, k)
            pairs = [(e.source, e.target) for e in emb.edges]
            assert len(pairs) == 32 == len(set(pairs))
            assert set(pairs) <= tedges


def test_embed_translation_equivariance():
    torus = build_torus(13)
    a = embed_patch(build_patch(4), torus, (3, 4))
    b = embed_patch(build_patch(4), torus, (4, 4))
    shift = lambda v: ((v[0] + 1) % 13, v[1])
    assert [(shift(e.source), shift(e.target), e.dist) for e in a.edges] == \
           [(e.source, e.target, e.dist) for e in b.edges]


def test_embed_center_plaquette():
    torus = build_torus(13)
    emb = embed_patch(build_patch(4), torus, (6, 6))
    d1 = [e for e in emb.edges if e.dist == 1]
    corners = {(6, 6), (7, 6), (6, 7), (7, 7)}
    # The plaquette with lower-left (6, 6) is bounded by distance-1 edges.
    bound = [e for e in d1 if {e.source, e.target} <= corners]
    assert len(bound) == 4


def test_embed_too_small_torus():
    with pytest.raises(PatchTooLarge):
        embed_patch(build_patch(4), build_torus(8), (0, 0))
    emb = embed_patch(build_patch(4), build_torus(8), (0, 0), proof_mode=False)
    assert emb.num_edges == 32
    with pytest.raises(PatchTooLarge):
        embed_patch(build_patch(4), build_torus(5), (0, 0), proof_mode=False)


def test_dump_edges_json_lines():
    buf = io.StringIO()
    dump_edges(build_patch(2), buf)
    lines = [json.loads(x) for x in buf.getvalue().splitlines()]
    assert len(lines) == 8
    assert set(lines[0]) == {"source", "target", "cls", "dist"}


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(0, 20), st.integers(0, 20))
def test_embedded_patch_dist_preserved(h, kx, ky):
    n = 2 * h
    m = 2 * (n + 2) + 1
    emb = embed_patch(build_patch(n), build_torus(m), (kx % m, ky % m))
    assert sorted(e.dist for e in emb.edges) == sorted(e.dist for e in build_patch(n).edges)
    assert len({(e.source, e.target) for e in emb.edges}) == emb.num_edges
