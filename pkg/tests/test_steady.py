import math

import numpy as np
import pytest

from rgdyn.asymptotics import GammaSpec, build_asymptotic_state
from rgdyn.evolution import EvolveConfig, evolve_ode
from rgdyn.model import ModelParams, enumerate_sector, ground_state
from rgdyn.steady import (
    EnsembleWeights,
    UnsupportedSpinError,
    config_probability,
    diagonal_ensemble,
    fig11_fields,
    fit_ensemble,
    steady_distribution,
    varrho,
    write_weights_csv,
)


@pytest.mark.parametrize("two_s,jz,fam", [(1, 0, "corrected"), (2, 0, "corrected"), (3, 1, "corrected"), (4, 1, "generalConjecture")])
def test_distribution_equals_asymptotic_weights(two_s, jz, fam):
    p = ModelParams(4 if two_s < 4 else 3, two_s, jz, nu=6.0)
    a = build_asymptotic_state(p, GammaSpec(fam, two_s), 1e3)
    np.testing.assert_allclose(steady_distribution(p).weights, a.state.weights, atol=1e-14)


def test_spin1_large_sector():
    p = ModelParams(6, 2, 0, nu=6.0)
    a = build_asymptotic_state(p, None, 1e3)
    np.testing.assert_allclose(steady_distribution(p).weights, a.state.weights, atol=1e-14)


def test_depends_on_ranks_only():
    p = ModelParams(4, 2, 0, nu=3.0, epsilon=(0.1, 0.2, 0.3, 0.4))
    q = ModelParams(4, 2, 0, nu=3.0, epsilon=(-5.0, 0.0, 1.0, 9.0))
    np.testing.assert_array_equal(steady_distribution(p).weights, steady_distribution(q).weights)


def test_config_probability():
    p = ModelParams(3, 2, 0, nu=2.0)
    d = steady_distribution(p)
    b = d.basis
    for i in range(b.dim):
        assert config_probability(p, b.config(i)) == pytest.approx(d.weights[i], rel=1e-13)


def test_varrho():
    assert np.all(varrho(1, 2.0)(np.array([-0.5, 0.5])) == 0)
    assert varrho(2, 2.0)(1.0) == pytest.approx(math.log(2 * math.cosh(math.pi / 2)))
    with pytest.raises(UnsupportedSpinError):
        varrho(5, 1.0)


def test_fit_recovers_exponential_family():
    p = ModelParams(5, 2, 1, nu=3.0)
    d = steady_distribution(p)
    quad = fit_ensemble(d, "quadratic")
    lin = fit_ensemble(d, "linear")
    assert quad.kl <= 1e-10
    assert lin.kl >= 10 * max(quad.kl, 1e-12)


def test_spin_half_linear_fit():
    p = ModelParams(6, 1, 0, nu=3.0)
    assert fit_ensemble(steady_distribution(p), "linear").kl <= 1e-10


def test_fit_on_dynamics():
    p = ModelParams(4, 1, 0, nu=4.0)
    psi = evolve_ode(p, ground_state(p), EvolveConfig(1e-5, 1e3))
    d = diagonal_ensemble(psi)
    assert d.total_variation(steady_distribution(p)) < 1e-2
    assert fit_ensemble(d, "linear").kl < 1e-4


def test_fit_validation():
    b = enumerate_sector(ModelParams(2, 2, 0, nu=1.0))
    with pytest.raises(ValueError):
        fit_ensemble(EnsembleWeights(b, np.array([0.5, 0.5, 0.5])), "linear")
    with pytest.raises(ValueError):
        fit_ensemble(EnsembleWeights(b, np.ones(3) / 3), "cubic")
    with pytest.raises(ValueError):
        EnsembleWeights(b, np.array([1.0, -0.5, 0.5]))
    assert fit_ensemble(EnsembleWeights(b, np.array([0.5, 0.0, 0.5])), "quadratic").degenerate


def test_fig11_fields():
    e0, e1 = fig11_fields(6)
    assert e0[0] == e1[0]
    assert len(set(e1)) == 6
    assert e0[-1] == 1.0


def test_weights_csv(tmp_path):
    p = ModelParams(3, 2, 0, nu=2.0)
    d = steady_distribution(p)
    path = tmp_path / "w.csv"
    write_weights_csv(path, d, d, fit_ensemble(d))
    lines = path.read_text().splitlines()
    assert lines[0] == "configIndex,weight_numeric,weight_analytic,weight_fit"
    assert len(lines) == d.basis.dim + 1
