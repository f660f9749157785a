"""Directed graphs: open chains, cycles, the periodic square lattice and patches.

Vertex identifiers:

* chain / cycle: integers ``1..n``;
* torus: ``(x, y)`` with ``0 <= x, y < m``;
* patches: ``(row, col)`` with row 1 at the bottom, col 1 at the left.

Horizontal edges always point left-to-right and vertical edges bottom-to-top.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .errors import BadSize, NotAPatch, OutOfRange, PatchTooLarge

HORIZONTAL = "horizontal"
VERTICAL = "vertical"

KINDS = ("chain", "cycle", "torus", "patchP", "patchQ")


@dataclass(frozen=True)
class Edge:
    source: object
    target: object
    cls: str = HORIZONTAL
    dist: Optional[int] = None


@dataclass(frozen=True)
class LatticeGraph:
    kind: str
    vertices: tuple
    edges: tuple
    size: int
    # torus side length when this graph is a patch embedded in a torus
    host_m: Optional[int] = None
    center: Optional[tuple] = field(default=None, compare=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self):
        """(in-degree, out-degree) Counters keyed by vertex."""
        ins = Counter(e.target for e in self.edges)
        outs = Counter(e.source for e in self.edges)
        return ins, outs


def build_chain(n: int) -> LatticeGraph:
    if n < 2:
        raise BadSize(f"open chain needs n >= 2, got {n}")
    edges = tuple(Edge(i, i + 1) for i in range(1, n))
    return LatticeGraph("chain", tuple(range(1, n + 1)), edges, n)


def build_cycle(m: int) -> LatticeGraph:
    if m < 3:
        raise BadSize(f"cycle needs m >= 3 (m=2 would double the edge), got {m}")
    edges = tuple(Edge(i, i % m + 1) for i in range(1, m + 1))
    return LatticeGraph("cycle", tuple(range(1, m + 1)), edges, m)


def cycle_distance(i: int, j: int, m: int) -> int:
    if not (1 <= i <= m and 1 <= j <= m):
        raise OutOfRange(f"vertices ({i}, {j}) not in [1, {m}]")
    return min(abs(i - j), m - abs(i - j))


def build_torus(m: int) -> LatticeGraph:
    if m < 3:
        raise BadSize(f"torus needs m >= 3, got {m}")
    verts = tuple((x, y) for x in range(m) for y in range(m))
    edges = []
    for x, y in verts:
        edges.append(Edge((x, y), ((x + 1) % m, y), HORIZONTAL))
        edges.append(Edge((x, y), (x, (y + 1) % m), VERTICAL))
    return LatticeGraph("torus", verts, tuple(edges), m)


def _grid_p(n: int, row0: int = 0, col0: int = 0):
    """Edges of P_n in (row, col) coordinates, shifted by (row0, col0)."""
    edges = []
    for r in range(1, n + 1):
        for c in range(1, n + 2):
            edges.append(((r + row0, c + col0), (r + row0, c + 1 + col0), HORIZONTAL))
    for r in range(1, n):
        for c in range(2, n + 2):
            edges.append(((r + row0, c + col0), (r + 1 + row0, c + col0), VERTICAL))
    return edges


def _p_center(n: int):
    """Lower-left vertex (row, col) of the center plaquette of P_n."""
    return (n // 2, (n + 2) // 2)


def _rotate_to_q(n: int, vertex):
    """Rotate a P_n vertex by pi/2 counter-clockwise into Q_n coordinates."""
    row, col = vertex
    return (col, n + 1 - row)


def _orient(u, v):
    """Direct an axis-aligned (row, col) edge left-to-right / bottom-to-top."""
    if u[0] == v[0]:
        return (u, v, HORIZONTAL) if u[1] < v[1] else (v, u, HORIZONTAL)
    return (u, v, VERTICAL) if u[0] < v[0] else (v, u, VERTICAL)


def build_patch(n: int, orient: str = "P") -> LatticeGraph:
    """P_n (n rows x n+2 columns, no vertical edges in the end columns) or Q_n.

    Each edge carries ``dist``, the smallest r such that the edge belongs to
    the cocentered subpatch P_{2r} (resp. Q_{2r}).
    """
    if not isinstance(n, int) or n < 2 or n % 2:
        raise BadSize(f"patch size must be a positive even integer, got {n}")
    if orient not in ("P", "Q"):
        raise ValueError(f"orient must be 'P' or 'Q', got {orient!r}")
    crow, ccol = _p_center(n)
    # Nested subpatches are built explicitly and aligned on the center plaquette.
    dist = {}
    for r in range(1, n // 2 + 1):
        srow, scol = _p_center(2 * r)
        for u, v, cls in _grid_p(2 * r, crow - srow, ccol - scol):
            dist.setdefault((u, v), r)
    edges = []
    for u, v, cls in _grid_p(n):
        if orient == "Q":
            u2, v2, cls = _orient(_rotate_to_q(n, u), _rotate_to_q(n, v))
            edges.append(Edge(u2, v2, cls, dist[(u, v)]))
        else:
            edges.append(Edge(u, v, cls, dist[(u, v)]))
    if orient == "P":
        verts = tuple((r, c) for r in range(1, n + 1) for c in range(1, n + 3))
        center = (crow, ccol)
    else:
        verts = tuple((r, c) for r in range(1, n + 3) for c in range(1, n + 1))
        center = ((n + 2) // 2, n // 2)
    return LatticeGraph("patch" + orient, verts, tuple(edges), n, center=center)


def edge_distance_census(patch: LatticeGraph) -> dict:
    """Count edges per distance r and edge class: ``{cls: {r: count}}``."""
    if patch.kind not in ("patchP", "patchQ"):
        raise NotAPatch(f"census needs a patch, got {patch.kind}")
    out = {HORIZONTAL: {}, VERTICAL: {}}
    for r in range(1, patch.size // 2 + 1):
        out[HORIZONTAL][r] = 0
        out[VERTICAL][r] = 0
    for e in patch.edges:
        out[e.cls][e.dist] += 1
    return out


def embed_patch(patch: LatticeGraph, torus: LatticeGraph, k, proof_mode: bool = True) -> LatticeGraph:
    """Copy of ``patch`` inside ``torus`` whose center plaquette has lower-left vertex ``k``.

    In proof mode the torus must satisfy m > 2(n+2) so the patch extends less
    than halfway around in each direction; otherwise only self-overlap is refused.
    """
    if patch.kind not in ("patchP", "patchQ"):
        raise NotAPatch(f"cannot embed a {patch.kind}")
    if torus.kind != "torus":
        raise ValueError("host graph must be a torus")
    m, n = torus.size, patch.size
    if proof_mode and m <= 2 * (n + 2):
        raise PatchTooLarge(f"proof mode needs m > 2(n+2) = {2 * (n + 2)}, got m={m}")
    if m < n + 2:
        raise PatchTooLarge(f"patch of extent {n + 2} does not fit in a {m}x{m} torus")
    kx, ky = k
    if not (0 <= kx < m and 0 <= ky < m):
        raise OutOfRange(f"plaquette {k} outside the {m}x{m} torus")
    crow, ccol = patch.center

    def place(v):
        row, col = v
        return ((kx + col - ccol) % m, (ky + row - crow) % m)

    edges = tuple(Edge(place(e.source), place(e.target), e.cls, e.dist) for e in patch.edges)
    verts = tuple(sorted({place(v) for v in patch.vertices}))
    return LatticeGraph(patch.kind, verts, edges, n, host_m=m, center=(kx, ky))


def dump_edges(graph: LatticeGraph, fh) -> None:
    """Write the edge list as JSON lines ``{source, target, cls, dist}``."""
    for e in graph.edges:
        src = list(e.source) if isinstance(e.source, tuple) else e.source
        tgt = list(e.target) if isinstance(e.target, tuple) else e.target
        fh.write(json.dumps({"source": src, "target": tgt, "cls": e.cls, "dist": e.dist}) + "\n")
