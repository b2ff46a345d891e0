"""Acceptance criteria, one test each.

Every test records a single [PASS]/[FAIL] line with the measured values; the
lines are printed together in the terminal summary.
"""

import pytest

from rgdyn import checks


@pytest.fixture
def gate(acceptance_report):
    def check(result):
        acceptance_report.append(result.line())
        assert result.passed, result.line()

    return check


def test_criterion_01_spin1_asymptotic_overlap(gate):
    gate(checks.asymptotic_overlap(Ns=(2, 4, 6), t_final=1e3, threshold=0.995))


def test_criterion_02_negative_control(gate):
    gate(checks.negative_control(Ns=(2, 4, 6), t_window=(1e2, 1e3), threshold=0.99))


def test_criterion_03_higher_spin_overlap(gate):
    gate(checks.higher_spin_overlap(N=4, t_final=1e3, threshold=0.99))


def test_criterion_04_twosite_oracle(gate):
    gate(checks.twosite_oracle(amp_tol=1e-6, norm_tol=1e-10))


def test_criterion_05_lz_discontinuity(gate):
    gate(checks.lz_discontinuity(nu=3.0, flat_tol=1e-3, half_tol=1e-2))


@pytest.mark.slow
def test_criterion_06_integrability_invariance(gate):
    gate(checks.integrability_invariance(N=6, t=1e4, tol_same=1e-2, tol_diff=1e-1))


def test_criterion_07_thermodynamic_scaling(gate):
    gate(checks.thermo_scaling(Ns=(4, 6, 8, 10, 12), target=-1.0, tol=0.3))


def test_criterion_08_diabatic_limit(gate):
    gate(checks.diabatic_limit(N=4, nu=1e6, prob_tol=1e-4, gamma_tol=1e-6))


@pytest.mark.slow
def test_criterion_09_gge_discrimination(gate):
    gate(checks.gge_discrimination(N=10, nu=70.0, t=1e3, tv_tol=2e-2, kl_ratio=10.0))


def test_criterion_10_trotter_protocol(gate):
    gate(checks.trotter_protocol(N=5, t_window=(1e-3, 10.0), overlap_min=0.95, target=-1.0, tol=0.2))


def test_criterion_11_property_suite(gate):
    gate(checks.property_suite())
