"""Hamiltonians and deformed window/patch operators as matrix-free operators.

Qudit ordering: site ``s`` (position in ``OperatorSpec.sites``) is tensor
factor ``s`` counted from the most significant position, so a state index is
``sum_s digit_s * d**(N-1-s)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import BadProfile, BadSize, BadWindow, DimensionMismatch, TooLarge
from .lattice import (
    HORIZONTAL,
    VERTICAL,
    Edge,
    LatticeGraph,
    build_chain,
    build_cycle,
    build_patch,
    build_torus,
    embed_patch,
)
from .terms import LocalTerm

DENSE_CAP = 4096


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """``sum_e w_e h_e`` over weighted directed edges on a fixed list of sites."""

    term: LocalTerm
    sites: tuple
    edges: tuple
    weights: tuple
    term_v: Optional[LocalTerm] = None
    label: str = ""

    def __post_init__(self):
        if len(self.weights) != len(self.edges):
            raise ValueError("one weight per edge required")
        index = {s: i for i, s in enumerate(self.sites)}
        for e in self.edges:
            if e.source not in index or e.target not in index:
                raise BadWindow(f"edge {e.source}->{e.target} references unknown sites")
        if self.term_v is not None and self.term_v.d != self.term.d:
            raise ValueError("horizontal and vertical terms must share d")
        object.__setattr__(self, "_index", index)

    @property
    def d(self) -> int:
        return self.term.d

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    @property
    def dim(self) -> int:
        return self.d**self.num_sites

    @property
    def num_terms(self) -> int:
        return len(self.edges)

    @property
    def is_real(self) -> bool:
        return self.term.is_real and (self.term_v is None or self.term_v.is_real)

    @property
    def dtype(self):
        return np.float64 if self.is_real else np.complex128

    def term_for(self, edge: Edge) -> LocalTerm:
        if edge.cls == VERTICAL and self.term_v is not None:
            return self.term_v
        return self.term

    def site_pairs(self):
        """Yield ``(source_index, target_index, term, weight)`` in summation order."""
        for e, w in zip(self.edges, self.weights):
            yield self._index[e.source], self._index[e.target], self.term_for(e), w


def hamiltonian(term: LocalTerm, graph: LatticeGraph, term_v: Optional[LocalTerm] = None,
                label: str = "") -> OperatorSpec:
    """Unweighted sum of ``term`` over every edge of ``graph``."""
    return OperatorSpec(term, graph.vertices, graph.edges, (1,) * graph.num_edges, term_v,
                        label or graph.kind)


def chain_hamiltonian(term: LocalTerm, n: int) -> OperatorSpec:
    return hamiltonian(term, build_chain(n), label=f"H_{n}")


def cycle_hamiltonian(term: LocalTerm, m: int) -> OperatorSpec:
    return hamiltonian(term, build_cycle(m), label=f"Hcirc_{m}")


def torus_hamiltonian(term: LocalTerm, m: int, term_v: Optional[LocalTerm] = None) -> OperatorSpec:
    return hamiltonian(term, build_torus(m), term_v, label=f"HT_{m}")


def patch_hamiltonian(term: LocalTerm, n: int, orient: str = "P",
                      term_v: Optional[LocalTerm] = None) -> OperatorSpec:
    return hamiltonian(term, build_patch(n, orient), term_v, label=f"H{orient}_{n}")


def window_1d(term: LocalTerm, m: int, n: int, k: int, profile=None) -> OperatorSpec:
    """Deformed window ``sum_{i=k}^{n-2+k} c_{i-k} h_{i,i+1}`` on the m-cycle.

    ``profile=None`` gives the undeformed window (all weights 1).
    """
    if not (2 < n < m):
        raise BadWindow(f"window needs 2 < n < m, got n={n}, m={m}")
    if not (1 <= k <= m):
        raise BadWindow(f"k={k} not in [1, {m}]")
    if profile is None:
        coeffs = [1] * (n - 1)
    else:
        coeffs = list(getattr(profile, "coeffs", profile))
        if len(coeffs) != n - 1:
            raise BadProfile(f"1D profile for n={n} needs {n - 1} coefficients, got {len(coeffs)}")
    edges = []
    for j in range(n - 1):
        i = (k - 1 + j) % m + 1
        edges.append(Edge(i, i % m + 1, HORIZONTAL))
    return OperatorSpec(term, tuple(range(1, m + 1)), tuple(edges), tuple(coeffs),
                        label=f"B_{n},{k}")


def patch_operator(term: LocalTerm, torus_m: int, n: int, k, orient: str = "P", profile=None,
                   term_v: Optional[LocalTerm] = None, proof_mode: bool = True) -> OperatorSpec:
    """Deformed patch ``sum_{e in P_{n,k}} c_{d(e)} h_e`` on the m x m torus.

    ``profile`` lists c_1..c_{n/2}; ``None`` gives the plain patch Hamiltonian.
    """
    torus = build_torus(torus_m)
    patch = embed_patch(build_patch(n, orient), torus, k, proof_mode=proof_mode)
    if profile is None:
        coeffs = [1] * (n // 2)
    else:
        coeffs = list(getattr(profile, "coeffs", profile))
        if len(coeffs) != n // 2:
            raise BadProfile(f"2D profile for n={n} needs {n // 2} coefficients, got {len(coeffs)}")
    weights = tuple(coeffs[e.dist - 1] for e in patch.edges)
    return OperatorSpec(term, torus.vertices, patch.edges, weights, term_v,
                        label=f"{'B' if orient == 'P' else 'C'}_{n},{k}")


def _as_float(w):
    return float(w) if isinstance(w, (int, Fraction)) else w


def apply(spec: OperatorSpec, v: np.ndarray) -> np.ndarray:
    """``sum_e w_e (h_e (x) 1) v`` without building the full matrix.

    ``v`` may be a vector of length ``spec.dim`` or a ``(dim, b)`` block.
    """
    v = np.asarray(v)
    if v.shape[0] != spec.dim or v.ndim > 2:
        raise DimensionMismatch(f"vector of shape {v.shape} for operator of dim {spec.dim}")
    n, d = spec.num_sites, spec.d
    real = spec.is_real and not np.iscomplexobj(v)
    dtype = np.float64 if real else np.complex128
    vec = np.ascontiguousarray(v, dtype=dtype)
    psi = vec.reshape((d,) * n + v.shape[1:])
    out = np.zeros(psi.shape, dtype=dtype)
    flat_in = vec.reshape(-1)
    flat_out = out.reshape(-1)
    cache = {}
    for s, t, term, w in spec.site_pairs():
        key = (id(term), t < s)
        if key not in cache:
            h = term.matrix.real if real else term.matrix
            if t < s:
                # Reorder the block so the lower tensor factor comes first.
                h = h.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d * d, d * d)
            cache[key] = (np.ascontiguousarray(h, dtype=dtype), term.tensor(dtype))
        mat, tens = cache[key]
        lo, hi = min(s, t), max(s, t)
        w = _as_float(w)
        if hi == lo + 1:
            # Neighbouring factors: one batched d^2 x d^2 product over (left, right) blocks.
            shape3 = (d**lo, d * d, flat_in.size // d ** (lo + 2))
            flat_out.reshape(shape3)[...] += w * np.matmul(mat, flat_in.reshape(shape3))
        else:
            blk = np.tensordot(tens, psi, axes=([2, 3], [s, t]))
            out += w * np.moveaxis(blk, [0, 1], [s, t])
    return out.reshape(v.shape)


def assemble_dense(spec: OperatorSpec, cap: int = DENSE_CAP) -> np.ndarray:
    """Explicit matrix, built by basis-index arithmetic (independent of ``apply``)."""
    dim = spec.dim
    if dim > cap:
        raise TooLarge(f"dimension {dim} exceeds dense cap {cap}")
    n, d = spec.num_sites, spec.d
    mat = np.zeros((dim, dim), dtype=spec.dtype)
    idx = np.arange(dim)
    strides = [d ** (n - 1 - s) for s in range(n)]
    digits = [(idx // strides[s]) % d for s in range(n)]
    for s, t, term, w in spec.site_pairs():
        h = term.matrix.real if spec.is_real else term.matrix
        col_pair = digits[s] * d + digits[t]
        base = idx - digits[s] * strides[s] - digits[t] * strides[t]
        for q in range(d * d):
            vals = h[q, col_pair]
            nz = vals != 0
            rows = base[nz] + (q // d) * strides[s] + (q % d) * strides[t]
            mat[rows, idx[nz]] += _as_float(w) * vals[nz]
    return mat


def _site_permutation(shift, geometry: LatticeGraph):
    m = geometry.size
    if geometry.kind == "cycle":
        dest = {i: (i - 1 + shift) % m + 1 for i in geometry.vertices}
    elif geometry.kind == "torus":
        dx, dy = shift
        dest = {(x, y): ((x + dx) % m, (y + dy) % m) for x, y in geometry.vertices}
    else:
        raise ValueError(f"translations are defined on cycles and tori, not {geometry.kind}")
    return dest


def apply_translation(v: np.ndarray, shift, geometry: LatticeGraph, d: int) -> np.ndarray:
    """Move the content of every site by ``shift`` (an int on a cycle, (dx, dy) on a torus).

    On a 3-cycle with shift 1, ``|100>`` becomes ``|010>``; with T this map,
    ``T h_e T^dagger`` is the term on the edge translated by ``shift``.
    """
    v = np.asarray(v)
    n = len(geometry.vertices)
    if v.shape[0] != d**n:
        raise DimensionMismatch(f"vector length {v.shape[0]} != {d}^{n}")
    index = {s: i for i, s in enumerate(geometry.vertices)}
    dest = _site_permutation(shift, geometry)
    axes = [0] * n
    for src, dst in dest.items():
        axes[index[dst]] = index[src]
    extra = list(range(n, v.ndim + n - 1))
    psi = v.reshape((d,) * n + v.shape[1:])
    return np.transpose(psi, axes + extra).reshape(v.shape)


def translation_matrix(shift, geometry: LatticeGraph, d: int) -> np.ndarray:
    dim = d ** len(geometry.vertices)
    return apply_translation(np.eye(dim), shift, geometry, d)


def expectation(spec: OperatorSpec, v: np.ndarray) -> float:
    return float(np.vdot(v, apply(spec, v)).real)


class LinearOp:
    """Hermitian linear-operator expression: sums, scalar multiples and products.

    Every node carries both a matrix-free ``matvec`` and a ``dense`` builder so
    small instances can be checked against explicit matrices.
    """

    def __init__(self, matvec: Callable, dim: int, dtype=np.float64,
                 dense: Optional[Callable] = None, label: str = "", num_terms: int = 1):
        self.matvec = matvec
        self.dim = dim
        self.dtype = np.dtype(dtype)
        self._dense = dense
        self.label = label
        self.num_terms = num_terms

    @classmethod
    def from_spec(cls, spec: OperatorSpec) -> "LinearOp":
        return cls(lambda v: apply(spec, v), spec.dim, spec.dtype,
                   lambda cap=DENSE_CAP: assemble_dense(spec, cap), spec.label, spec.num_terms)

    @classmethod
    def identity(cls, dim: int) -> "LinearOp":
        return cls(lambda v: np.array(v, copy=True), dim, np.float64,
                   lambda cap=DENSE_CAP: np.eye(dim), "I", 0)

    @property
    def is_real(self) -> bool:
        return self.dtype.kind == "f"

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.dim > cap:
            raise TooLarge(f"dimension {self.dim} exceeds dense cap {cap}")
        if self._dense is None:
            return self.matvec(np.eye(self.dim, dtype=self.dtype))
        return self._dense(cap)

    def __call__(self, v):
        return self.matvec(v)

    def _check(self, other: "LinearOp"):
        if other.dim != self.dim:
            raise DimensionMismatch(f"dims {self.dim} and {other.dim} differ")

    def __add__(self, other):
        other = as_linop(other)
        self._check(other)
        a, b = self, other
        return LinearOp(lambda v: a.matvec(v) + b.matvec(v), a.dim, np.result_type(a.dtype, b.dtype),
                        lambda cap=DENSE_CAP: a.dense(cap) + b.dense(cap),
                        f"({a.label} + {b.label})", a.num_terms + b.num_terms)

    def __neg__(self):
        return (-1.0) * self

    def __sub__(self, other):
        return self + (-1.0) * as_linop(other)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) and not isinstance(scalar, Fraction):
            return NotImplemented
        s = float(scalar)
        a = self
        return LinearOp(lambda v: s * a.matvec(v), a.dim, a.dtype,
                        lambda cap=DENSE_CAP: s * a.dense(cap), f"{s:g}*{a.label}", a.num_terms)

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = as_linop(other)
        self._check(other)
        a, b = self, other
        return LinearOp(lambda v: a.matvec(b.matvec(v)), a.dim, np.result_type(a.dtype, b.dtype),
                        lambda cap=DENSE_CAP: a.dense(cap) @ b.dense(cap),
                        f"{a.label}@{b.label}", a.num_terms * b.num_terms)

    def square(self) -> "LinearOp":
        return self @ self


def as_linop(op) -> LinearOp:
    if isinstance(op, LinearOp):
        return op
    if isinstance(op, OperatorSpec):
        return LinearOp.from_spec(op)
    raise TypeError(f"cannot treat {type(op).__name__} as a linear operator")


def linear_sum(ops) -> LinearOp:
    ops = [as_linop(o) for o in ops]
    total = ops[0]
    for o in ops[1:]:
        total = total + o
    return total
