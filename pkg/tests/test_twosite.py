import math

import numpy as np
import pytest

from rgdyn.evolution import EvolveConfig, evolve_ode, fidelity, phase_aligned_distance
from rgdyn.model import ModelParams, ground_state
from rgdyn.twosite import (
    TwoSiteParams,
    fig1_deltas,
    lz_probability,
    twosite_spin1,
    twosite_spin1_asymptotic_jz0,
    twosite_spin32_asymptotic,
)


@pytest.mark.parametrize("jz", [-2, -1, 0, 1, 2])
@pytest.mark.parametrize("nu", [0.5, 3.0])
def test_spin1_closed_form_matches_ode(jz, nu):
    p = TwoSiteParams(0.5, 1.0, nu)
    m = p.model(2, jz)
    t0, t1 = 1e-4, 3.0
    psi = evolve_ode(m, twosite_spin1(jz, p, t0), EvolveConfig(t0, t1))
    exact = twosite_spin1(jz, p, t1)
    assert abs(exact.norm - 1) < 1e-10
    np.testing.assert_allclose(psi.amplitudes, exact.amplitudes, atol=1e-6)


def test_spin1_starts_in_ground_state():
    p = TwoSiteParams(1.0, 2.0, 2.0)
    assert fidelity(twosite_spin1(0, p, 1e-8), ground_state(p.model(2, 0))) > 1 - 1e-6


def test_spin1_asymptotic_jz0():
    p = TwoSiteParams(1.0, 2.0, 1.3)
    d = [phase_aligned_distance(twosite_spin1(0, p, t), twosite_spin1_asymptotic_jz0(p, t)) for t in (10.0, 100.0)]
    assert d[1] < 1e-2
    # approach is like 1/t
    assert 5 < d[0] / d[1] < 20


@pytest.mark.parametrize("jz", [-1, 1])
def test_spin32_asymptotic_matches_ode(jz):
    p = TwoSiteParams(1.0, 2.0, 2.0)
    m = p.model(3, jz)
    psi = evolve_ode(m, ground_state(m), EvolveConfig(1e-5, 1e3))
    assert fidelity(psi, twosite_spin32_asymptotic(jz, p, 1e3)) > 0.999


def test_closed_forms_need_ordered_fields():
    with pytest.raises(ValueError):
        twosite_spin1(0, TwoSiteParams(2.0, 1.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        twosite_spin1(3, TwoSiteParams(1.0, 2.0, 1.0), 1.0)


def test_lz_flat_for_alpha_one():
    vals = [lz_probability(d, 3.0, 1.0, 1e-5, 1.0) for d in (1e-10, 1e-4, 1.0, 10.0)]
    assert max(vals) - min(vals) < 1e-6
    assert lz_probability(0.0, 3.0, 1.0, 1e-5, 1.0) == 0.5


def test_lz_sign_symmetry():
    a = lz_probability(0.3, 3.0, 1.0, 1e-5, 1.0)
    b = lz_probability(-0.3, 3.0, 1.0, 1e-5, 1.0)
    assert a + b == pytest.approx(1.0, abs=1e-8)


def test_fig1_grid():
    d = fig1_deltas()
    assert d.min() == -10 and d.max() == 10 and np.all(np.diff(d) > 0)
    assert np.abs(d).min() == pytest.approx(1e-12)
