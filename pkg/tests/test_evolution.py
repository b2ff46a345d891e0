import numpy as np
import pytest
import scipy.linalg as la

from rgdyn.evolution import (
    EvolveConfig,
    TrotterSchedule,
    evolve_ode,
    evolve_trotter,
    fidelity,
    phase_aligned_distance,
    read_checkpoint,
    weight_distance,
    write_checkpoint,
)
from rgdyn.model import ModelParams, StateVector, build_hamiltonian, ground_state, zeeman_diagonal


def test_norm_conserved():
    p = ModelParams(5, 2, 0, nu=1.0)
    psi = evolve_ode(p, ground_state(p), EvolveConfig(1e-5, 1e2))
    assert abs(psi.norm - 1) < 1e-8


def test_zeeman_only_is_phase():
    p = ModelParams(3, 2, 1, nu=1.0)
    psi0 = ground_state(p)
    psi = evolve_ode(p, psi0, EvolveConfig(0.1, 2.0), coupling_scale=0.0)
    D = zeeman_diagonal(psi0.basis, p.epsilon)
    expected = np.exp(-1j * D * 1.9) * psi0.amplitudes
    np.testing.assert_allclose(psi.amplitudes, expected, atol=1e-9)


def test_frames_agree():
    p = ModelParams(3, 2, 0, nu=2.0)
    psi0 = ground_state(p)
    a = evolve_ode(p, psi0, EvolveConfig(1e-2, 5.0, frame="direct"))
    b = evolve_ode(p, psi0, EvolveConfig(1e-2, 5.0, frame="logTime"))
    assert phase_aligned_distance(a, b) < 1e-7


def test_piecewise_constant_reference():
    # compare against products of exact exponentials at fine midpoints
    p = ModelParams(3, 2, 0, nu=1.5)
    psi0 = ground_state(p)
    ts = np.linspace(0.5, 1.5, 2001)
    v = psi0.amplitudes.copy()
    for a, b in zip(ts[:-1], ts[1:]):
        H = build_hamiltonian(p, 0.5 * (a + b)).toarray()
        v = la.expm(-1j * H * (b - a)) @ v
    psi = evolve_ode(p, psi0, EvolveConfig(0.5, 1.5))
    assert phase_aligned_distance(psi, StateVector(psi0.basis, v)) < 1e-5


def test_t_eval_returns_list():
    p = ModelParams(2, 2, 0, nu=1.0)
    states = evolve_ode(p, ground_state(p), EvolveConfig(1e-4, 1.0), t_eval=[1e-3, 0.1, 1.0])
    assert len(states) == 3
    last = evolve_ode(p, ground_state(p), EvolveConfig(1e-4, 1.0))
    assert phase_aligned_distance(states[-1], last) < 1e-8


def test_trotter_converges_to_ode():
    p = ModelParams(3, 2, 0, nu=3.0)
    psi0 = ground_state(p)
    ref = evolve_ode(p, psi0, EvolveConfig(1e-3, 5.0))
    errs = [phase_aligned_distance(evolve_trotter(p, psi0, TrotterSchedule(n, 1e-3, 5.0)), ref) for n in (200, 800)]
    assert errs[1] < errs[0]


def test_metrics():
    p = ModelParams(2, 2, 0, nu=1.0)
    a = ground_state(p)
    b = StateVector(a.basis, 1j * a.amplitudes)
    assert fidelity(a, b) == pytest.approx(1.0)
    assert weight_distance(a, b) == pytest.approx(1.0)
    assert phase_aligned_distance(a, b) < 1e-7


def test_config_validation():
    with pytest.raises(ValueError):
        EvolveConfig(1.0, 0.5)
    with pytest.raises(ValueError):
        EvolveConfig(1e-3, 1.0, frame="bogus")


def test_checkpoint_roundtrip(tmp_path):
    p = ModelParams(3, 2, 0, nu=1.0)
    ts = [1e-3, 1e-1]
    states = evolve_ode(p, ground_state(p), EvolveConfig(1e-4, 1e-1), t_eval=ts)
    path = tmp_path / "ck.npz"
    write_checkpoint(path, ts, states)
    back = read_checkpoint(path, states[0].basis)
    for t, s in zip(ts, states):
        np.testing.assert_array_equal(back[t].amplitudes, s.amplitudes)
