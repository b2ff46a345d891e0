import math

import numpy as np
import pytest

from rgdyn.asymptotics import build_asymptotic_state
from rgdyn.model import ModelParams, site_expectations
from rgdyn.thermo import (
    BoundarySectorError,
    G_continuum,
    G_continuum_prime,
    ThermoParams,
    chemical_potential,
    cumulants_from_moments,
    cumulants_sz,
    expect_sz,
    expect_sz2,
    magnetization_sum,
    matrix_element_nlocal,
    mean_field_state,
    moment_sz,
    saddle_xi,
    write_profile_csv,
)


def test_half_filling_chemical_potential():
    for two_s in (1, 2, 3):
        th = ThermoParams(10, two_s, 10 * two_s // 2 if two_s != 3 else 15, 7.0)
        assert chemical_potential(th) == pytest.approx(5.0, abs=1e-12)


def test_saddle_solves_continuum_equation():
    th = ThermoParams(40, 2, 23, 30.0)
    xi = saddle_xi(th)
    assert abs(G_continuum_prime(th, xi)) < 1e-10
    h = 1e-5
    fd = (G_continuum(th, xi + h) - G_continuum(th, xi - h)) / (2 * h)
    assert abs(fd - G_continuum_prime(th, xi)) < 1e-6


@pytest.mark.parametrize("two_s", [1, 2, 3, 4])
def test_cumulants_match_moments(two_s):
    th = ThermoParams(12, two_s, 12 * two_s // 2 + 3, 9.0)
    j = np.arange(1, 13)
    m = [moment_sz(th, j, n) for n in range(1, 5)]
    for a, b in zip(cumulants_sz(th, j), cumulants_from_moments(*m)):
        np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(expect_sz(th, j), m[0], atol=1e-14)
    np.testing.assert_allclose(expect_sz2(th, j), m[1], atol=1e-14)


def test_sum_rule():
    th = ThermoParams(200, 2, 230, 200.0)
    assert magnetization_sum(th, "integral") == pytest.approx(th.jz, abs=1e-9)
    assert magnetization_sum(th, "midpoint") == pytest.approx(th.jz, abs=1e-6)
    assert abs(magnetization_sum(th, "sites") - th.jz) < 1.0


def test_profile_approaches_finite_n_asymptotic_state():
    errs = []
    for N in (6, 12):
        p = ModelParams(N, 2, 0, nu=float(N))
        finite = site_expectations(build_asymptotic_state(p, None, 1e3).state)
        errs.append(np.max(np.abs(finite - expect_sz(ThermoParams.from_model(p), np.arange(1, N + 1)))))
    assert errs[1] < 0.7 * errs[0]


def test_mean_field_state():
    p = ModelParams(8, 2, 2, nu=8.0)
    mf = mean_field_state(p, 3.0)
    np.testing.assert_allclose(mf.norms(), 1.0, atol=1e-14)
    th = ThermoParams.from_model(p)
    sz = np.array([mf.expect(k, np.diag([-1.0, 0.0, 1.0])).real for k in range(1, 9)])
    np.testing.assert_allclose(sz, expect_sz(th, np.arange(1, 9)), atol=1e-12)


def test_matrix_elements():
    p = ModelParams(8, 2, 0, nu=8.0)
    th = ThermoParams.from_model(p)
    mf = mean_field_state(p, 2.0)
    z = np.diag([-1.0, 0.0, 1.0])
    val = matrix_element_nlocal(th, [(2, "z", "0"), (5, "z", "z")], 2.0, p)
    ref = mf.expect(2, z) * mf.expect(5, z @ z)
    assert abs(val - ref) < 1e-10
    mm = matrix_element_nlocal(th, [(3, "-", "-")], 2.0, p)
    pp = matrix_element_nlocal(th, [(3, "+", "+")], 2.0, p)
    assert abs(mm - pp.conjugate()) < 1e-14
    with pytest.raises(ValueError):
        matrix_element_nlocal(th, [(1, "z", "0"), (1, "z", "z")])


def test_boundary_and_conventions():
    with pytest.raises(BoundarySectorError):
        ThermoParams(4, 2, 0, 1.0)
    with pytest.raises(BoundarySectorError):
        ThermoParams(4, 2, 8, 1.0)
    th = ThermoParams.from_eta(10, 4, 0, 2.0, "sN/eta")
    assert th.nu == pytest.approx(10.0)
    assert th.eta == pytest.approx(2.0)


def test_profile_csv(tmp_path):
    th = ThermoParams(6, 2, 6, 6.0)
    path = tmp_path / "p.csv"
    write_profile_csv(path, th)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("j,")
    assert len(lines) == 7
