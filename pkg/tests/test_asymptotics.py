import math

import numpy as np
import pytest

from rgdyn.asymptotics import (
    DegenerateFieldsError,
    GammaSpec,
    PartitionLabel,
    UnsupportedSpinError,
    build_asymptotic_state,
    diabatic_weight,
    enumerate_partitions,
    eps_ranks,
    gamma_weight,
    log_t_coefficient,
    theta_phase,
)
from rgdyn.evolution import EvolveConfig, evolve_ode, fidelity
from rgdyn.model import ModelParams, enumerate_sector, ground_state


def _final(p, t=1e3):
    return evolve_ode(p, ground_state(p), EvolveConfig(p.t_init, t))


@pytest.mark.parametrize("two_s,jz", [(1, 0), (2, 0), (2, 1), (3, 0.5)])
def test_overlap_with_ode(two_s, jz):
    p = ModelParams(4 if two_s != 3 else 3, two_s, jz, nu=4.0)
    a = build_asymptotic_state(p, GammaSpec("corrected", two_s), 1e3)
    assert fidelity(_final(p), a.state) > 0.995


def test_spin2_conjecture_overlap():
    p = ModelParams(3, 4, 0, nu=3.0)
    a = build_asymptotic_state(p, GammaSpec("generalConjecture", 4), 1e3)
    assert fidelity(_final(p), a.state) > 0.99


def test_saddle_raw_differs_from_corrected():
    p = ModelParams(4, 2, 0, nu=4.0)
    ode = _final(p)
    good = fidelity(ode, build_asymptotic_state(p, GammaSpec("corrected", 2), 1e3).state)
    raw = fidelity(ode, build_asymptotic_state(p, GammaSpec("saddleRaw", 2), 1e3).state)
    assert raw < good


def test_log_t_coefficients():
    # spin-1: N_1 singly raised sites carry -N_1 ln t
    assert log_t_coefficient((3,), 2) == -3
    assert log_t_coefficient((0,), 2) == 0
    # general: 2 sum_k C(k,2) N_k - (2s-1) sum_k k N_k
    assert log_t_coefficient((1, 1), 3) == 2 * 1 - 2 * 3
    g1 = gamma_weight(GammaSpec("corrected", 2), (2,), 3.0, 10.0)
    g2 = gamma_weight(GammaSpec("corrected", 2), (2,), 3.0, 100.0)
    assert (g2 - g1) == pytest.approx(-2j / 3.0 * math.log(10.0))


@pytest.mark.parametrize("two_s,counts", [(2, (2, 1)), (3, (1, 2, 0)), (4, (1, 1, 1, 0))])
def test_diabatic_limit(two_s, counts):
    g = gamma_weight(GammaSpec("corrected", two_s), counts, 1e7, 1.0)
    assert math.exp(-g.real) == pytest.approx(diabatic_weight(counts, two_s), rel=1e-5)


def test_partitions_follow_basis_order():
    b = enumerate_sector(ModelParams(4, 2, 0, nu=1.0))
    parts = enumerate_partitions(4, 2, 4)
    assert len(parts) == b.dim
    for row, part in zip(b.raises, parts):
        np.testing.assert_array_equal(part.raises(4), row)
        assert part.n_plus == 4
    assert PartitionLabel.from_raises([2, 0, 1], 2).sets == ((3,), (1,))


def test_ranks_and_theta():
    np.testing.assert_array_equal(eps_ranks([0.3, -1.0, 2.0]), [2, 1, 3])
    p = ModelParams(3, 2, 0, nu=2.0, epsilon=(1.0, 2.0, 4.0))
    assert theta_phase(1, p) == pytest.approx(0.5 * (math.log(1) + math.log(3)))


def test_state_invariant_under_rank_preserving_relabel():
    # weights depend on eps only through the ranks and the phase terms
    p = ModelParams(3, 2, 0, nu=2.0, epsilon=(1.0, 2.0, 4.0))
    q = ModelParams(3, 2, 0, nu=2.0, epsilon=(1.0, 2.5, 7.0))
    wa = build_asymptotic_state(p, None, 1e3).state.weights
    wb = build_asymptotic_state(q, None, 1e3).state.weights
    np.testing.assert_allclose(wa, wb, atol=1e-14)


def test_errors():
    with pytest.raises(DegenerateFieldsError):
        build_asymptotic_state(ModelParams(2, 2, 0, nu=1.0, epsilon=(1.0, 1.0)), None, 10.0)
    with pytest.raises(UnsupportedSpinError):
        GammaSpec("corrected", 5)
    with pytest.raises(ValueError):
        GammaSpec("bogus", 2)
    with pytest.raises(ValueError):
        build_asymptotic_state(ModelParams(2, 2, 0, nu=1.0), None, 10.0, "bogus")
