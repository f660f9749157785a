"""Two-qudit interaction terms.

A term acts on an ordered pair of qudits (source, target). Its matrix is
written in the product basis ``|a> (x) |b>`` with row-major index ``a*d + b``,
``a`` being the state of the source qudit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NegativeEigenvalue, NotHermitian, NotProjector, ParseError, UnknownModel

HERMITIAN_TOL = 1e-12
PROJECTOR_TOL = 1e-10
DEFAULT_ZERO_TOL = 1e-9

BUILTIN_MODELS = ("heisenberg_fm", "aklt")


@dataclass(frozen=True, eq=False)
class LocalTerm:
    d: int
    matrix: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (self.d**2, self.d**2):
            raise ParseError(f"term matrix must be {self.d**2}x{self.d**2}, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.matrix.imag == 0))

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def tensor(self, dtype=None) -> np.ndarray:
        """The matrix as a rank-4 tensor ``[a', b', a, b]``."""
        mat = self.matrix.real if (dtype is not None and np.dtype(dtype).kind == "f") else self.matrix
        return np.ascontiguousarray(mat.reshape(self.d, self.d, self.d, self.d), dtype=dtype)

    def sha256(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.d).encode())
        h.update(np.ascontiguousarray(self.matrix, dtype=np.complex128).tobytes())
        return h.hexdigest()


def _check_hermitian(mat: np.ndarray, tol: float = HERMITIAN_TOL):
    dev = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
    if dev > tol:
        raise NotHermitian(f"matrix deviates from its adjoint by {dev:.3e}")


def validate_term(d: int, matrix, name: str = "custom") -> LocalTerm:
    """Build a LocalTerm, refusing anything that is not a Hermitian projector."""
    term = LocalTerm(d, matrix, name)
    mat = term.matrix
    _check_hermitian(mat)
    dev = np.max(np.abs(mat @ mat - mat))
    if dev > PROJECTOR_TOL:
        raise NotProjector(f"matrix^2 - matrix has max entry {dev:.3e}; use projectorize()")
    evals = np.linalg.eigvalsh(mat)
    off = np.minimum(np.abs(evals), np.abs(evals - 1.0))
    if np.max(off) > PROJECTOR_TOL:
        raise NotProjector(f"eigenvalue {evals[np.argmax(off)]:.6g} is neither 0 nor 1")
    return term


def load_term(path) -> LocalTerm:
    """Read a term file ``{"d": int, "matrix": [[[re, im], ...], ...]}``."""
    try:
        with open(path) as fh:
            data = json.load(fh)
        d = data["d"]
        rows = data["matrix"]
        if not isinstance(d, int) or d < 1:
            raise ParseError(f"'d' must be a positive integer, got {d!r}")
        mat = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    except ParseError:
        raise
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"cannot parse term file {path}: {exc}") from exc
    if mat.shape != (d * d, d * d):
        raise ParseError(f"expected {d*d}x{d*d} matrix, got {mat.shape}")
    return validate_term(d, mat, name=Path(path).stem)


def dump_term(term: LocalTerm, path) -> None:
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in term.matrix]
    with open(path, "w") as fh:
        json.dump({"d": term.d, "matrix": rows}, fh)


def projectorize(matrix, zero_tol: float = DEFAULT_ZERO_TOL, name: str = "projectorized") -> LocalTerm:
    """Replace a PSD term by the projector onto the complement of its null space.

    Eigenvectors with eigenvalue <= zero_tol go to 0, all others to 1.
    """
    mat = np.array(matrix, dtype=complex)
    dd = mat.shape[0]
    d = int(round(np.sqrt(dd)))
    if mat.shape != (dd, dd) or d * d != dd:
        raise ParseError(f"matrix shape {mat.shape} is not d^2 x d^2")
    _check_hermitian(mat, max(HERMITIAN_TOL, zero_tol))
    mat = 0.5 * (mat + mat.conj().T)
    evals, vecs = np.linalg.eigh(mat)
    if evals[0] < -zero_tol:
        raise NegativeEigenvalue(f"eigenvalue {evals[0]:.6g} < -{zero_tol:g}")
    keep = vecs[:, evals > zero_tol]
    proj = keep @ keep.conj().T
    if np.all(np.abs(mat.imag) == 0):
        proj = proj.real
    return LocalTerm(d, proj, name)


def _spin_matrices(s2: int):
    """Spin operators (Sz, S+, S-) for spin s2/2 in the basis m = s, s-1, ..., -s."""
    s = s2 / 2
    ms = s - np.arange(s2 + 1)
    sz = np.diag(ms)
    sp = np.zeros((s2 + 1, s2 + 1))
    for i in range(1, s2 + 1):
        m = ms[i]
        sp[i - 1, i] = np.sqrt(s * (s + 1) - m * (m + 1))
    return sz, sp, sp.T


def _heisenberg_fm() -> np.ndarray:
    singlet = np.zeros(4)
    singlet[0 * 2 + 1] = 1.0
    singlet[1 * 2 + 0] = -1.0
    return 0.5 * np.outer(singlet, singlet)


def _aklt() -> np.ndarray:
    sz, sp, sm = _spin_matrices(2)
    # S1.S2 has eigenvalue -2, -1, 1 on total spin 0, 1, 2.
    x = np.kron(sz, sz) + 0.5 * (np.kron(sp, sm) + np.kron(sm, sp))
    eye = np.eye(9)
    return (x + eye) @ (x + 2 * eye) / 6.0


_BUILDERS = {"heisenberg_fm": (2, _heisenberg_fm), "aklt": (3, _aklt)}


def builtin(name: str) -> LocalTerm:
    """Built-in projector terms: ``heisenberg_fm`` (d=2) and ``aklt`` (d=3)."""
    try:
        d, build = _BUILDERS[name]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; choose from {', '.join(BUILTIN_MODELS)}") from None
    mat = build()
    # The AKLT polynomial leaves ~1e-16 noise; snap so the projector checks hold tightly.
    mat = np.where(np.abs(mat) < 1e-14, 0.0, mat)
    return validate_term(d, mat, name=name)
