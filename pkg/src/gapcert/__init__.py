"""Spectral-gap certification for translation-invariant frustration-free spin systems."""

from .bounds import CoefficientProfile, bounds_1d, bounds_2d, coeffs_1d, coeffs_2d
from .certify import Certificate, certify_1d, certify_2d, gapless_scan
from .errors import GapCertError
from .lattice import LatticeGraph, build_chain, build_cycle, build_patch, build_torus
from .operators import OperatorSpec, apply, assemble_dense
from .spectra import lowest_eigenvalues, spectral_gap
from .terms import LocalTerm, builtin, load_term, validate_term

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "CoefficientProfile",
    "GapCertError",
    "LatticeGraph",
    "LocalTerm",
    "OperatorSpec",
    "apply",
    "assemble_dense",
    "bounds_1d",
    "bounds_2d",
    "build_chain",
    "build_cycle",
    "build_patch",
    "build_torus",
    "builtin",
    "certify_1d",
    "certify_2d",
    "coeffs_1d",
    "coeffs_2d",
    "gapless_scan",
    "load_term",
    "lowest_eigenvalues",
    "spectral_gap",
    "validate_term",
]
