"""Lowest eigenvalues and spectral gaps of frustration-free operators.

The iterative path is a block Krylov (Lanczos-type) solver with full
reorthogonalization and thick restarts. Ritz pairs are extracted from the
projected matrix ``V^H A V``; the subspace is extended by the orthogonalized
residual block of the lowest unconverged Ritz pairs, which spans the same
space as the next block-Lanczos step. On restart the lowest Ritz vectors are
kept together with their images under A.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AmbiguousGap, NoConvergence, NotFrustrationFree, TooLarge
from .operators import DENSE_CAP, LinearOp, as_linop

log = logging.getLogger(__name__)

DEFAULT_SEED = 20160106
RESIDUAL_TOL = 1e-10
AUTO_DENSE_DIM = 512
MAX_ITERATIONS = 2000
GAP_SEPARATION = 10.0


def default_seed() -> int:
    env = os.environ.get("GAPCERT_SEED")
    return int(env) if env else DEFAULT_SEED


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    converged: bool
    iterations: int
    method: str
    seed: Optional[int] = None
    gap: Optional[float] = None
    gap_residual: Optional[float] = None
    ground_degeneracy_found: int = 0
    zero_tol: Optional[float] = None
    matvecs: int = 0
    vectors: Optional[np.ndarray] = field(default=None, repr=False)

    def diagnostics(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "iterations": int(self.iterations),
            "matvecs": int(self.matvecs),
            "converged": bool(self.converged),
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "ground_degeneracy_found": int(self.ground_degeneracy_found),
            "zero_tol": self.zero_tol,
        }


def _orthonormalize_against(W: np.ndarray, V: Optional[np.ndarray], drop: float = 1e-12) -> np.ndarray:
    """Project W off span(V) twice, then orthonormalize; dependent columns are dropped."""
    norms = np.linalg.norm(W, axis=0)
    keep = norms > 0
    W = W[:, keep] / norms[keep]
    if W.shape[1] == 0:
        return W
    for _ in range(2):
        if V is not None and V.shape[1]:
            W = W - V @ (V.conj().T @ W)
    u, s, _ = np.linalg.svd(W, full_matrices=False)
    return u[:, s > drop * max(1.0, s[0])]


def _project_out(F: np.ndarray, V: np.ndarray) -> np.ndarray:
    for _ in range(2):
        F = F - V @ (V.conj().T @ F)
    return F


def _krylov_lowest(op: LinearOp, count: int, residual_tol: float, seed: int, max_iterations: int,
                   block: Optional[int] = None, max_basis: Optional[int] = None,
                   gap_above: Optional[float] = None):
    """Thick-restart block Lanczos for the lowest Ritz pairs.

    Invariant: ``A V = V T + F E^T`` where F (orthogonal to V) is the outside
    part of A applied to the newest block, so Ritz residual norms are
    ``||F s_new||`` with ``s_new`` the Ritz coefficients on that block.

    The wanted pairs are the lowest ``count``; with ``gap_above`` set they are
    instead every Ritz pair up to and including the first value above that level.
    """
    dim = op.dim
    rng = np.random.default_rng(seed)
    dtype = np.float64 if op.is_real else np.complex128
    block = min(block or max(count, 2), dim)
    max_basis = min(dim, max_basis or max(6 * block, 2 * count + 3 * block, 48))

    def rand_block(b):
        X = rng.standard_normal((dim, b))
        if dtype == np.complex128:
            X = X + 1j * rng.standard_normal((dim, b))
        return X

    V = np.empty((dim, max_basis), dtype=dtype)
    T = np.zeros((max_basis, max_basis), dtype=dtype)
    W = _orthonormalize_against(rand_block(block), None)
    k = 0
    matvecs = 0
    iterations = 0
    while True:
        b = W.shape[1]
        AW = op.matvec(W)
        matvecs += b
        V[:, k:k + b] = W
        T[:k + b, k:k + b] = V[:, :k + b].conj().T @ AW
        T[k:k + b, :k] = T[:k, k:k + b].conj().T
        k += b
        F = _project_out(AW, V[:, :k])
        new = slice(k - b, k)

        theta, S = np.linalg.eigh(0.5 * (T[:k, :k] + T[:k, :k].conj().T))
        if gap_above is None:
            nk = min(count, k)
            found = nk == count
        else:
            above = np.nonzero(theta > gap_above)[0]
            found = bool(len(above))
            nk = above[0] + 1 if found else min(k, max(count, block))
        est = np.linalg.norm(F @ S[new, :nk], axis=0)
        if k >= dim or (found and np.all(est <= residual_tol)) or iterations >= max_iterations:
            Y = V[:, :k] @ S[:, :nk]
            R = op.matvec(Y) - Y * theta[:nk]
            matvecs += nk
            res = np.linalg.norm(R, axis=0)
            ok = k >= dim or (found and np.all(res <= residual_tol))
            if ok or iterations >= max_iterations:
                return theta[:nk], res, Y, bool(ok), iterations, matvecs
        iterations += 1
        if k + block > max_basis:
            # Thick restart on the lowest Ritz vectors; F carries over unchanged.
            keep = min(max_basis - block, max(nk + block, max_basis // 2))
            coupling = S[new, :keep]
            V[:, :keep] = V[:, :k] @ S[:, :keep]
            T[:] = 0
            T[np.arange(keep), np.arange(keep)] = theta[:keep]
            k = keep
            F = F @ coupling
        W = _orthonormalize_against(F, V[:, :k])
        if W.shape[1] == 0:
            # Invariant subspace reached; continue from fresh random directions.
            W = _orthonormalize_against(rand_block(block), V[:, :k])
            if W.shape[1] == 0:
                Y = V[:, :k] @ S[:, :nk]
                return theta[:nk], est, Y, True, iterations, matvecs
        W = W[:, : min(W.shape[1], max_basis - k, block)]


def _dense_lowest(op: LinearOp, count: int, cap: int):
    M = op.dense(cap)
    M = 0.5 * (M + M.conj().T)
    evals, vecs = np.linalg.eigh(M)
    evals, vecs = evals[:count], vecs[:, :count]
    res = np.linalg.norm(M @ vecs - vecs * evals, axis=0)
    return evals, res, vecs


def lowest_eigenvalues(op, count: int = 1, residual_tol: float = RESIDUAL_TOL,
                       seed: Optional[int] = None, method: str = "auto",
                       max_iterations: int = MAX_ITERATIONS, dense_cap: int = DENSE_CAP,
                       block: Optional[int] = None, keep_vectors: bool = False,
                       gap_above: Optional[float] = None) -> SpectralResult:
    """The ``count`` smallest eigenvalues of a Hermitian operator, with residual norms.

    ``method`` is ``"dense"``, ``"krylov"`` or ``"auto"`` (dense for small dims).
    With ``gap_above``, the Krylov solve may return fewer than ``count`` values:
    those up to the first eigenvalue above that level.
    Raises NoConvergence (with ``.partial``) if the iteration cap is hit.
    """
    op = as_linop(op)
    if count < 1 or count > op.dim:
        raise ValueError(f"count must be in [1, {op.dim}], got {count}")
    seed = default_seed() if seed is None else seed
    if method == "auto":
        method = "dense" if op.dim <= min(AUTO_DENSE_DIM, dense_cap) else "krylov"
    if method == "dense":
        if op.dim > dense_cap:
            raise TooLarge(f"dimension {op.dim} exceeds dense cap {dense_cap}")
        evals, res, vecs = _dense_lowest(op, count, dense_cap)
        result = SpectralResult(evals, res, True, 0, "dense", None, matvecs=0)
    elif method == "krylov":
        evals, res, vecs, ok, its, mv = _krylov_lowest(op, count, residual_tol, seed,
                                                       max_iterations, block,
                                                       gap_above=gap_above)
        result = SpectralResult(evals, res, ok, its, "krylov", seed, matvecs=mv)
        if not ok:
            raise NoConvergence(f"{count} eigenvalues not converged after {its} iterations "
                                f"(max residual {np.max(res):.2e})", result)
    else:
        raise ValueError(f"unknown method {method!r}")
    if keep_vectors:
        result.vectors = vecs
    return result


def default_zero_tol(op) -> float:
    return 1e-9 * max(1, as_linop(op).num_terms)


def spectral_gap(op, zero_tol: Optional[float] = None, residual_tol: float = RESIDUAL_TOL,
                 seed: Optional[int] = None, method: str = "auto", count: int = 4,
                 max_iterations: int = MAX_ITERATIONS, dense_cap: int = DENSE_CAP) -> SpectralResult:
    """Smallest eigenvalue above ``zero_tol`` of a frustration-free operator.

    ``ground_degeneracy_found`` counts the zero eigenvalues seen; a Krylov
    solve does not resolve multiplicities beyond its block size, so it is a
    lower bound there (exact on the dense path).

    The ground energy must be <= zero_tol (NotFrustrationFree otherwise) and
    the gap must exceed 10 * zero_tol (AmbiguousGap otherwise). The number of
    requested eigenvalues doubles until one above zero_tol is resolved.
    """
    op = as_linop(op)
    zero_tol = default_zero_tol(op) if zero_tol is None else zero_tol
    count = min(count, op.dim)
    while True:
        res = lowest_eigenvalues(op, count, residual_tol, seed, method, max_iterations, dense_cap,
                                 block=min(count, 2), gap_above=zero_tol)
        res.zero_tol = zero_tol
        ev = res.eigenvalues
        if ev[0] > zero_tol:
            raise NotFrustrationFree(f"ground energy {ev[0]:.6g} exceeds zero_tol {zero_tol:g}")
        above = np.nonzero(ev > zero_tol)[0]
        if len(above):
            i = above[0]
            res.gap = float(ev[i])
            res.gap_residual = float(res.residuals[i])
            res.ground_degeneracy_found = int(i)
            if res.gap <= GAP_SEPARATION * zero_tol:
                raise AmbiguousGap(f"gap {res.gap:.3e} is within {GAP_SEPARATION:g}x zero_tol")
            return res
        if count >= op.dim:
            res.ground_degeneracy_found = len(ev)
            raise AmbiguousGap("every eigenvalue lies below zero_tol; the operator has no gap")
        log.debug("all %d lowest eigenvalues are zero; doubling", count)
        count = min(2 * count, op.dim)


def min_eigenvalue(op, residual_tol: float = RESIDUAL_TOL, seed: Optional[int] = None,
                   method: str = "auto", dense_cap: int = DENSE_CAP,
                   max_iterations: int = MAX_ITERATIONS):
    """Smallest eigenvalue of a Hermitian expression and its residual norm."""
    res = lowest_eigenvalues(op, 1, residual_tol, seed, method, max_iterations, dense_cap,
                             block=4)
    return float(res.eigenvalues[0]), float(res.residuals[0]), res
