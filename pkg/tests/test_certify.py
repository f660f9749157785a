import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapcert import bounds as B
from gapcert import certify as C
from gapcert.errors import BadSize, CapacityExceeded
from gapcert.terms import builtin, projectorize, validate_term

from oracles import heisenberg_gap

HEIS = builtin("heisenberg_fm")
AKLT = builtin("aklt")


def deformed_singlet(theta):
    """Projector onto cos(theta)|01> - sin(theta)|10>; gapped away from theta = pi/4."""
    v = np.zeros(4)
    v[1], v[2] = np.cos(theta), -np.sin(theta)
    return validate_term(2, np.outer(v, v), f"deformed_{theta:.3f}")


# ---- combination logic on synthetic gaps ----

def test_certified_takes_best_of_both():
    cert = C.certificate_from_gap(0.6, 1e-12, 1e-9, 4)
    assert cert.verdict == C.CERTIFIED
    new = float(Fraction(25, 18)) * (0.6 - 0.3)
    knabe = 1.5 * (0.6 - 1 / 3)
    assert cert.lower_bound_new == pytest.approx(new, rel=1e-15)
    assert cert.lower_bound_knabe == pytest.approx(knabe, rel=1e-15)
    assert cert.best_bound == max(new, knabe) > 0


def test_between_thresholds_only_new_bound():
    cert = C.certificate_from_gap(0.32, 1e-12, 1e-9, 4)
    assert cert.certified and cert.lower_bound_knabe is None
    assert cert.best_bound == cert.lower_bound_new


def test_margin_refuses_near_threshold():
    for eps in (0.3, 0.3 + 5e-9, 0.3 - 5e-9):
        cert = C.certificate_from_gap(eps, 1e-12, 1e-9, 4)
        assert cert.verdict == C.AMBIGUOUS and cert.best_bound is None
    assert C.certificate_from_gap(0.3 + 1e-7, 1e-12, 1e-9, 4).certified


def test_below_threshold_note():
    cert = C.certificate_from_gap(0.1, 1e-12, 1e-9, 4, d=2)
    assert cert.verdict == C.BELOW
    assert any("consistent with a gapless" in s for s in cert.notes)
    assert any("log(d^n)" in s for s in cert.notes)


def test_two_dimensional_combination():
    cert = C.certificate_from_gap(0.8, 1e-12, 1e-9, 4, mode="twoD")
    assert cert.certified
    assert cert.lower_bound_new == pytest.approx(0.75 * (0.8 - 0.5))
    assert cert.threshold_knabe is None and cert.valid_for == {"new": "all m > 2(n+2)"}
    assert C.certificate_from_gap(0.4, 1e-12, 1e-9, 4, mode="twoD").verdict == C.BELOW
    with pytest.raises(BadSize):
        C.certificate_from_gap(0.8, 0, 0, 5, mode="twoD")


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 2), st.integers(3, 30), st.floats(0, 1e-8))
def test_verdict_invariants(eps, n, res):
    cert = C.certificate_from_gap(eps, res, 1e-9, n)
    margin = 10 * (res + 1e-9)
    g, k = B.bounds_1d(n)["G"], Fraction(1, n - 1)
    assert cert.certified == (eps - margin > g or eps - margin > k)
    if cert.certified:
        assert cert.best_bound > 0
        for b in (cert.lower_bound_new, cert.lower_bound_knabe):
            assert b is None or cert.best_bound >= b


# ---- end-to-end 1D ----

def test_heisenberg_four_below_threshold():
    cert = C.certify_1d(HEIS, 4)
    assert cert.epsilon == pytest.approx(heisenberg_gap(4), abs=1e-10)
    assert cert.verdict == C.BELOW


def test_heisenberg_three_refused():
    cert = C.certify_1d(HEIS, 3)
    assert cert.epsilon == pytest.approx(0.5, abs=1e-12)
    assert not cert.certified


@pytest.mark.parametrize("n", range(3, 13))
def test_heisenberg_never_certifies(n):
    assert not C.certify_1d(HEIS, n).certified


def test_aklt_certifies_with_exact_prefactors():
    cert = C.certify_1d(AKLT, 4)
    assert cert.certified and cert.best_bound > 0
    rep = B.bounds_1d(4)
    expected = float(rep["F"]) * (cert.epsilon - float(rep["G"]))
    assert cert.lower_bound_new == pytest.approx(expected, rel=1e-14)
    assert cert.solver["method"] == "dense" or cert.solver["seed"] is not None


def test_certificate_json_schema():
    d = C.certify_1d(AKLT, 4).to_dict()
    assert list(d) == ["model", "term_sha256", "mode", "n", "d", "epsilon_local", "thresholds",
                       "prefactors", "verdict", "bounds", "valid_for", "notes", "solver", "created_at"]
    assert d["thresholds"]["new"]["exact"] == "3/10"
    assert d["thresholds"]["knabe"]["exact"] == "1/3"
    assert d["valid_for"] == {"new": "all m > 2n", "knabe": "all m > n"}
    json.dumps(d)
    assert "created_at" not in C.certify_1d(AKLT, 4, timestamp=False).to_dict(timestamp=False)


def test_certify_1d_errors():
    with pytest.raises(BadSize):
        C.certify_1d(HEIS, 2)
    with pytest.raises(CapacityExceeded):
        C.certify_1d(AKLT, 12, max_dim=3**10)


@settings(max_examples=6, deadline=None)
@given(st.floats(0.05, 0.7), st.sampled_from([4, 5]))
def test_certified_bound_below_periodic_gap(theta, n):
    term = deformed_singlet(theta)
    cert = C.certify_1d(term, n, timestamp=False)
    if cert.certified:
        check = C.cross_check_periodic(cert, term)
        assert check["m"] == 2 * n + 1
        assert check["holds"], check


def test_cross_check_requires_large_m():
    cert = C.certify_1d(AKLT, 4)
    with pytest.raises(BadSize):
        C.cross_check_periodic(cert, AKLT, m=8)


# ---- 2D orchestration ----

def test_certify_2d_preconditions():
    with pytest.raises(BadSize):
        C.certify_2d(HEIS, None, 5)
    with pytest.raises(BadSize):
        C.certify_2d(HEIS, None, 2)
    with pytest.raises(CapacityExceeded):
        C.certify_2d(HEIS, None, 4, max_dim=2**20)
    with pytest.raises(CapacityExceeded):
        C.certify_2d(AKLT, None, 4)


def test_certify_2d_isotropic_skips_q():
    calls = []

    def fake(spec):
        calls.append(spec.label)
        assert spec.num_sites == 24 and spec.num_terms == 32
        return 0.7, 1e-12, 1e-8, {"method": "stub"}

    cert = C.certify_2d(HEIS, HEIS, 4, gap_fn=fake)
    assert calls == ["HP_4"]
    assert cert.certified and cert.best_bound == pytest.approx(0.75 * 0.2)
    assert any("same spectrum" in s for s in cert.notes)


def test_certify_2d_non_isotropic_uses_minimum():
    tv = projectorize(np.diag([0, 1.0, 1.0, 0]), name="swap_odd")
    gaps = {"HP_4": 0.9, "HQ_4": 0.6}

    def fake(spec):
        return gaps[spec.label], 1e-12, 1e-8, {}

    cert = C.certify_2d(HEIS, tv, 4, gap_fn=fake)
    assert cert.epsilon == 0.6
    assert cert.lower_bound_new == pytest.approx(0.75 * (0.6 - 0.5))
    assert set(cert.solver) == {"P", "Q"}


@pytest.mark.slow
def test_heisenberg_patch_gap_n4():
    cert = C.certify_2d(HEIS, None, 4)
    assert cert.verdict == C.BELOW


# ---- scans ----

def test_scan_errors_and_rows():
    with pytest.raises(BadSize):
        C.gapless_scan(HEIS, 2, 5)
    with pytest.raises(BadSize):
        C.gapless_scan(HEIS, 6, 5)
    table = C.gapless_scan(HEIS, 3, 8)
    assert [r["n"] for r in table["rows"]] == list(range(3, 9))
    assert table["flagged"] == []
    assert "consistent with a gapless" in table["summary"]
    assert all(r["ratio"] <= 1 + 1e-12 for r in table["rows"])


def test_scan_aklt_flags():
    table = C.gapless_scan(AKLT, 3, 8, jobs=2)
    assert table["flagged"] and 3 not in table["flagged"]
    assert table == C.gapless_scan(AKLT, 3, 8)


# ---- Hilbert-space checks ----

@pytest.mark.parametrize("term,n,m", [(HEIS, 3, 7), (HEIS, 3, 8), (HEIS, 4, 9), (AKLT, 3, 7)])
def test_operator_inequality(term, n, m):
    rep = C.verify_operator_inequality_1d(term, n, m)
    assert rep["pass"] and rep["method"] == "dense"


def test_operator_inequality_iterative_path_agrees():
    dense = C.verify_operator_inequality_1d(HEIS, 3, 7)
    kry = C.verify_operator_inequality_1d(HEIS, 3, 7, dense_cap=64)
    assert kry["method"] == "krylov" and kry["pass"]
    assert kry["min_eigenvalue"] == pytest.approx(dense["min_eigenvalue"], abs=1e-9)


def test_operator_inequality_alpha_beta():
    rep = C.verify_operator_inequality_1d(HEIS, 3, 7)
    assert (rep["alpha"], rep["beta"]) == ("1/4", "1")
    with pytest.raises(BadSize):
        C.verify_operator_inequality_1d(HEIS, 3, 6)


@pytest.mark.parametrize("term,m", [(HEIS, 4), (HEIS, 5), (HEIS, 6), (AKLT, 4)])
def test_energy_equidistribution(term, m):
    rep = C.verify_energy_equidistribution(term, m)
    assert rep["pass"]
    assert rep["spread"] <= 1e-10
    assert np.mean(rep["edge_energies"]) == pytest.approx(rep["epsilon_periodic"] / m, abs=1e-12)
    assert rep["translation_residual"] <= 1e-8


def test_equidistribution_capacity():
    with pytest.raises(CapacityExceeded):
        C.verify_energy_equidistribution(AKLT, 9)
