"""Gap certificates from finite-size local gaps, plus Hilbert-space checks.

A certificate turns one computed local gap into a lower bound on the gap of
every sufficiently large periodic system:

* 1D, new threshold:   eps_n > 6/(n(n+1))  =>  gap >= F(n) (eps_n - 6/(n(n+1)))  for m > 2n
* 1D, Knabe threshold: eps_n > 1/(n-1)     =>  gap >= (n-1)/(n-2) (eps_n - 1/(n-1))  for m > n
* 2D patches:          eps_n > 8/n^2       =>  gap >= 3/4 (eps_n - 8/n^2)  for m > 2(n+2)

Falling below a threshold proves nothing; it is only reported as consistent
with a vanishing gap.
"""

from __future__ import annotations

import datetime as _dt
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import bounds as B
from .errors import (
    AmbiguousGap,
    BadSize,
    CapacityExceeded,
    DegenerateRestriction,
    NoConvergence,
    SolverFailure,
)
from .lattice import Edge, build_cycle
from .operators import (
    DENSE_CAP,
    LinearOp,
    OperatorSpec,
    as_linop,
    assemble_dense,
    chain_hamiltonian,
    cycle_hamiltonian,
    linear_sum,
    patch_hamiltonian,
    translation_matrix,
    window_1d,
)
from .spectra import RESIDUAL_TOL, default_zero_tol, min_eigenvalue, spectral_gap
from .terms import LocalTerm

log = logging.getLogger(__name__)

MAX_DIM = 2**26
STRICTNESS = 10.0
PSD_TOL = 1e-8
EQUIDISTRIBUTION_TOL = 1e-9

CERTIFIED = "certified"
BELOW = "below_threshold"
AMBIGUOUS = "ambiguous"


def _rational(x: Optional[Fraction], formula: str = "") -> Optional[dict]:
    if x is None:
        return None
    out = {"exact": str(x), "float": float(x)}
    if formula:
        out["formula"] = formula
    return out


@dataclass
class Certificate:
    model: str
    term_sha256: str
    mode: str
    n: int
    d: int
    epsilon: float
    residual: float
    zero_tol: float
    threshold_new: Fraction
    threshold_knabe: Optional[Fraction]
    prefactor_new: Fraction
    prefactor_knabe: Optional[Fraction]
    verdict: str
    lower_bound_new: Optional[float]
    lower_bound_knabe: Optional[float]
    best_bound: Optional[float]
    valid_for: dict
    notes: list = field(default_factory=list)
    solver: dict = field(default_factory=dict)
    created_at: Optional[str] = None

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    @property
    def margin(self) -> float:
        return STRICTNESS * (self.residual + self.zero_tol)

    def to_dict(self, timestamp: bool = True) -> dict:
        new_formula = "6/(n(n+1))" if self.mode == "oneD" else "8/n^2"
        out = {
            "model": self.model,
            "term_sha256": self.term_sha256,
            "mode": self.mode,
            "n": self.n,
            "d": self.d,
            "epsilon_local": {"value": self.epsilon, "residual": self.residual,
                              "zero_tol": self.zero_tol, "margin": self.margin},
            "thresholds": {"new": _rational(self.threshold_new, new_formula),
                           "knabe": _rational(self.threshold_knabe, "1/(n-1)")},
            "prefactors": {"new": _rational(self.prefactor_new),
                           "knabe": _rational(self.prefactor_knabe)},
            "verdict": self.verdict,
            "bounds": {"new": self.lower_bound_new, "knabe": self.lower_bound_knabe,
                       "best": self.best_bound},
            "valid_for": self.valid_for,
            "notes": list(self.notes),
            "solver": self.solver,
        }
        if timestamp:
            out["created_at"] = self.created_at
        return out


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def _entanglement_note(n: int, d: int, eps: float) -> str:
    scale = f"{1 / math.sqrt(eps):.4g}" if eps > 0 else "inf"
    return (f"entanglement: S(A) <= log(d^n) = {n * math.log(d):.4g} nats for a block of n sites; "
            f"area-law scale O(1/sqrt(eps)) = {scale}")


def certificate_from_gap(eps: float, residual: float, zero_tol: float, n: int, mode: str = "oneD",
                         model: str = "custom", term_sha256: str = "", d: int = 0,
                         solver: Optional[dict] = None) -> Certificate:
    """Apply the thresholds to a computed local gap.

    A threshold only counts if eps exceeds it by more than 10 * (residual + zero_tol).
    The verdict is ``ambiguous`` when eps is within that margin of the lowest
    threshold, ``below_threshold`` when it is clearly under every threshold.
    """
    margin = STRICTNESS * (residual + zero_tol)
    if mode == "oneD":
        rep = B.bounds_1d(n)
        t_new, p_new = rep["threshold_new"], rep["F"]
        t_kn, p_kn = rep["threshold_knabe"], rep["knabe_prefactor"]
        valid = {"new": "all m > 2n", "knabe": "all m > n"}
        gapless = f"eps_{n} <= 6/(n(n+1)) is consistent with a gapless system (not a proof)"
    elif mode == "twoD":
        if n <= 2 or n % 2:
            raise BadSize(f"2D certificates need an even n > 2, got {n}")
        t_new, p_new = Fraction(8, n * n), Fraction(3, 4)
        t_kn = p_kn = None
        valid = {"new": "all m > 2(n+2)"}
        gapless = f"eps_{n} <= 8/n^2 is consistent with a gapless system (not a proof)"
    else:
        raise ValueError(f"mode must be 'oneD' or 'twoD', got {mode!r}")

    lb_new = float(p_new) * (eps - float(t_new)) if eps - margin > t_new else None
    lb_kn = None
    if t_kn is not None and eps - margin > t_kn:
        lb_kn = float(p_kn) * (eps - float(t_kn))
    applicable = [b for b in (lb_new, lb_kn) if b is not None]
    best = max(applicable) if applicable else None
    lowest = t_new if t_kn is None else min(t_new, t_kn)
    if best is not None:
        verdict = CERTIFIED
    elif eps + margin >= lowest:
        verdict = AMBIGUOUS
    else:
        verdict = BELOW
    notes = []
    if verdict != CERTIFIED:
        notes.append(gapless)
    if verdict == AMBIGUOUS:
        notes.append(f"eps is within the strictness margin {margin:.3g} of the threshold; refused")
    if d:
        notes.append(_entanglement_note(n, d, eps))
    return Certificate(model, term_sha256, mode, n, d, float(eps), float(residual), float(zero_tol),
                       t_new, t_kn, p_new, p_kn, verdict, lb_new, lb_kn, best, valid, notes,
                       solver or {})


def _check_capacity(d: int, sites: int, max_dim: int):
    if d**sites > max_dim:
        raise CapacityExceeded(f"{d}^{sites} = {d**sites} amplitudes exceeds the cap {max_dim}")


def _solve_gap(op, zero_tol, residual_tol, seed, method):
    try:
        return spectral_gap(op, zero_tol=zero_tol, residual_tol=residual_tol, seed=seed, method=method)
    except NoConvergence as exc:
        raise SolverFailure(str(exc)) from exc


def certify_1d(term: LocalTerm, n: int, zero_tol: Optional[float] = None,
               residual_tol: float = RESIDUAL_TOL, seed: Optional[int] = None,
               method: str = "auto", max_dim: int = MAX_DIM, timestamp: bool = True) -> Certificate:
    """Certificate from the open-chain gap eps_n of H_n."""
    if n <= 2:
        raise BadSize(f"1D certification needs n > 2, got {n}")
    _check_capacity(term.d, n, max_dim)
    spec = chain_hamiltonian(term, n)
    res = _solve_gap(spec, zero_tol, residual_tol, seed, method)
    cert = certificate_from_gap(res.gap, res.gap_residual, res.zero_tol, n, "oneD", term.name,
                                term.sha256(), term.d, res.diagnostics())
    cert.created_at = _now() if timestamp else None
    return cert


def _patch_gap(spec: OperatorSpec, zero_tol, residual_tol, seed, method):
    res = _solve_gap(spec, zero_tol, residual_tol, seed, method)
    return res.gap, res.gap_residual, res.zero_tol, res.diagnostics()


def certify_2d(term_h: LocalTerm, term_v: Optional[LocalTerm], n: int,
               zero_tol: Optional[float] = None, residual_tol: float = RESIDUAL_TOL,
               seed: Optional[int] = None, method: str = "auto", max_dim: int = MAX_DIM,
               timestamp: bool = True, gap_fn: Optional[Callable] = None) -> Certificate:
    """Certificate from the patch gap eps^P_n (and eps^Q_n when the terms differ).

    ``gap_fn(spec) -> (eps, residual, zero_tol, diagnostics)`` replaces the
    eigensolver; by default the patch gap is computed with spectral_gap.
    """
    if n <= 2 or n % 2:
        raise BadSize(f"2D certification needs an even n > 2, got {n}")
    term_v = term_h if term_v is None else term_v
    if term_v.d != term_h.d:
        raise BadSize("horizontal and vertical terms act on different qudit dimensions")
    _check_capacity(term_h.d, n * (n + 2), max_dim)
    if gap_fn is None:
        def gap_fn(spec):
            return _patch_gap(spec, zero_tol, residual_tol, seed, method)
    isotropic = term_h.sha256() == term_v.sha256()
    eps, res, ztol, diag = gap_fn(patch_hamiltonian(term_h, n, "P", term_v))
    solver = {"P": diag}
    notes = []
    if isotropic:
        notes.append("isotropic terms: H^P_n and H^Q_n have the same spectrum; eps^Q not computed")
    else:
        eps_q, res_q, ztol_q, diag_q = gap_fn(patch_hamiltonian(term_h, n, "Q", term_v))
        solver["Q"] = diag_q
        notes.append(f"non-isotropic terms: eps^P = {eps:.12g}, eps^Q = {eps_q:.12g}; using the minimum")
        if eps_q < eps:
            eps, res, ztol = eps_q, res_q, ztol_q
        res = max(res, res_q)
        ztol = max(ztol, ztol_q)
    model = term_h.name if isotropic else f"{term_h.name}|{term_v.name}"
    sha = term_h.sha256() if isotropic else f"{term_h.sha256()}|{term_v.sha256()}"
    cert = certificate_from_gap(eps, res, ztol, n, "twoD", model, sha, term_h.d, solver)
    cert.notes = notes + cert.notes
    cert.created_at = _now() if timestamp else None
    return cert


def periodic_gap(term: LocalTerm, m: int, zero_tol: Optional[float] = None,
                 residual_tol: float = RESIDUAL_TOL, seed: Optional[int] = None,
                 method: str = "auto", max_dim: int = MAX_DIM):
    """Gap of the m-cycle Hamiltonian, computed directly."""
    _check_capacity(term.d, m, max_dim)
    return _solve_gap(cycle_hamiltonian(term, m), zero_tol, residual_tol, seed, method)


def cross_check_periodic(cert: Certificate, term: LocalTerm, m: Optional[int] = None,
                         **solver_kw) -> dict:
    """Compare a 1D certified bound with the directly computed periodic gap at m > 2n."""
    m = 2 * cert.n + 1 if m is None else m
    if m <= 2 * cert.n:
        raise BadSize(f"the certified bound applies for m > 2n = {2 * cert.n}, got m={m}")
    res = periodic_gap(term, m, **solver_kw)
    tol = STRICTNESS * (res.gap_residual + res.zero_tol)
    bound = cert.best_bound
    return {"n": cert.n, "m": m, "periodic_gap": res.gap, "residual": res.gap_residual,
            "bound": bound, "holds": bound is None or bound <= res.gap + tol,
            "solver": res.diagnostics()}


def _scan_row(args):
    term, n, kw = args
    cert = certify_1d(term, n, timestamp=False, **kw)
    g = Fraction(6, n * (n + 1))
    return {
        "n": n,
        "eps_n": cert.epsilon,
        "residual": cert.residual,
        "thresh_new": float(g),
        "thresh_knabe": 1.0 / (n - 1),
        "ratio": cert.epsilon / float(g),
        "flagged": cert.certified,
        "verdict": cert.verdict,
    }


def gapless_scan(term: LocalTerm, n_min: int, n_max: int, jobs: int = 1, **solver_kw) -> dict:
    """Local gaps for n in [n_min, n_max] against both 1D thresholds.

    A row is flagged when eps_n clears a threshold by the strictness margin.
    No flags means the data are consistent with a gapless system.
    """
    if n_min <= 2 or n_max < n_min:
        raise BadSize(f"scan needs 2 < n_min <= n_max, got [{n_min}, {n_max}]")
    _check_capacity(term.d, n_max, solver_kw.get("max_dim", MAX_DIM))
    work = [(term, n, solver_kw) for n in range(n_min, n_max + 1)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_scan_row, work))
    else:
        rows = [_scan_row(w) for w in work]
    flagged = [r["n"] for r in rows if r["flagged"]]
    summary = (f"certified at n = {flagged}" if flagged else
               "no n clears a threshold: consistent with a gapless system (not a proof)")
    return {"model": term.name, "rows": rows, "flagged": flagged, "summary": summary}


def operator_inequality_expression(term: LocalTerm, n: int, m: int) -> LinearOp:
    """(H°_m)^2 + beta H°_m - alpha sum_k B_{n,k}^2 with the canonical 1D profile."""
    rep = B.bounds_1d(n)
    prof = B.coeffs_1d(n)
    H = as_linop(cycle_hamiltonian(term, m))
    windows = linear_sum(as_linop(window_1d(term, m, n, k, prof)).square() for k in range(1, m + 1))
    return H.square() + float(rep["beta"]) * H - float(rep["alpha"]) * windows


def verify_operator_inequality_1d(term: LocalTerm, n: int, m: int, dense_cap: int = DENSE_CAP,
                                  max_dim: int = MAX_DIM, seed: Optional[int] = None) -> dict:
    """Minimum eigenvalue of the squared-Hamiltonian inequality; PASS iff >= -1e-8."""
    if n <= 2:
        raise BadSize(f"n must exceed 2, got {n}")
    if m <= 2 * n:
        raise BadSize(f"the inequality is claimed for m > 2n = {2 * n}, got m={m}")
    _check_capacity(term.d, m, max_dim)
    rep = B.bounds_1d(n)
    expr = operator_inequality_expression(term, n, m)
    if expr.dim <= dense_cap:
        M = expr.dense(dense_cap)
        M = 0.5 * (M + M.conj().T)
        evals = np.linalg.eigvalsh(M)
        value, residual, method = float(evals[0]), 0.0, "dense"
    else:
        try:
            value, residual, _ = min_eigenvalue(expr, seed=seed, method="krylov")
        except NoConvergence as exc:
            raise SolverFailure(str(exc)) from exc
        method = "krylov"
    return {"check": "operator-inequality", "model": term.name, "n": n, "m": m,
            "alpha": str(rep["alpha"]), "beta": str(rep["beta"]), "dim": expr.dim,
            "min_eigenvalue": value, "residual": residual, "method": method,
            "tolerance": -PSD_TOL, "pass": bool(value >= -PSD_TOL)}


def verify_energy_equidistribution(term: LocalTerm, m: int, dense_cap: int = DENSE_CAP,
                                   zero_tol: Optional[float] = None,
                                   tol: float = EQUIDISTRIBUTION_TOL) -> dict:
    """Pick a translation eigenstate in the lowest excited eigenspace of H°_m and
    compare its energy on every edge."""
    _check_capacity(term.d, m, dense_cap)
    spec = cycle_hamiltonian(term, m)
    H = assemble_dense(spec, dense_cap)
    evals, vecs = np.linalg.eigh(0.5 * (H + H.conj().T))
    zero_tol = default_zero_tol(spec) if zero_tol is None else zero_tol
    if evals[0] > zero_tol:
        raise AmbiguousGap(f"ground energy {evals[0]:.3g} above zero_tol; not frustration-free")
    above = np.nonzero(evals > zero_tol)[0]
    if not len(above):
        raise AmbiguousGap("no nonzero eigenvalue")
    eps = evals[above[0]]
    cluster = np.nonzero(np.abs(evals - eps) <= 1e-8 * max(1.0, abs(eps)))[0]
    V = vecs[:, cluster]
    T = translation_matrix(1, build_cycle(m), term.d)
    R = V.conj().T @ T @ V
    unitarity = float(np.max(np.abs(R.conj().T @ R - np.eye(len(cluster)))))
    if unitarity > 1e-8:
        raise DegenerateRestriction(f"translation restricted to the eigenspace is not unitary "
                                    f"(deviation {unitarity:.2e})")
    phases, U = np.linalg.eig(R)
    phi = V @ U[:, 0]
    phi = phi / np.linalg.norm(phi)
    t_residual = float(np.linalg.norm(T @ phi - phases[0] * phi))
    energies = []
    for e in spec.edges:
        h_e = OperatorSpec(term, spec.sites, (Edge(e.source, e.target),), (1,))
        energies.append(float(np.vdot(phi, assemble_dense(h_e, dense_cap) @ phi).real))
    spread = max(energies) - min(energies)
    theta = float(np.angle(phases[0]))
    return {"check": "equidistribution", "model": term.name, "m": m, "epsilon_periodic": float(eps),
            "multiplicity": int(len(cluster)), "momentum_phase": theta,
            "momentum_index": int(round(theta * m / (2 * math.pi))) % m,
            "translation_residual": t_residual, "edge_energies": energies,
            "energy_per_edge": float(eps) / m, "spread": spread, "tolerance": tol,
            "pass": bool(spread <= tol and abs(np.mean(energies) - eps / m) <= tol)}
