"""Time evolution of sector states under H(t) = H_z - g(t) V.

The ODE integrator works in the interaction picture of the (diagonal) Zeeman term,
psi(t) = exp(-i D t) phi(t), so that late-time integration only has to follow the
decaying exchange term. Near t -> 0 the variable lambda = ln(t) / nu is used, in
which the exchange term of the alpha = 1 model is time independent. States handed
back to callers are always in the lab frame.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as la
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .model import (
    Interaction,
    ModelParams,
    StateVector,
    check_same_basis,
    enumerate_sector,
    zeeman_diagonal,
)

LOG_FRAME_SWITCH = 1e-2
DENSE_EIGH_MAX_DIM = 4000


class StepLimitError(RuntimeError):
    pass


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvolveConfig:
    t_start: float
    t_end: float
    rtol: float = 1e-10
    atol: float = 1e-12
    frame: str = "auto"  # "direct" | "logTime" | "auto"
    max_steps: int = 5_000_000
    method: str = "RK45"

    def __post_init__(self):
        if not 0 < self.t_start < self.t_end:
            raise ValueError(f"need 0 < t_start < t_end, got {self.t_start}, {self.t_end}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.frame not in ("direct", "logTime", "auto"):
            raise ValueError(f"unknown frame {self.frame!r}")


class _Rhs:
    """Right-hand sides of the interaction-picture equation in both time variables."""

    def __init__(self, params: ModelParams, coupling_scale: float = 1.0):
        basis = enumerate_sector(params)
        self.V = Interaction(basis)
        self.D = zeeman_diagonal(basis, params.epsilon)
        self.nu = params.nu
        self.alpha = params.alpha
        self.scale = coupling_scale
        self.nfev = 0
        self.max_fev = None

    def _count(self):
        self.nfev += 1
        if self.max_fev is not None and self.nfev > self.max_fev:
            raise StepLimitError(f"exceeded {self.max_fev} right-hand-side evaluations")

    def _kick(self, t, phi, factor):
        ph = np.exp(1j * self.D * t)
        return (1j * factor) * ph * (self.V @ (np.conj(ph) * phi))

    def direct(self, t, phi):
        self._count()
        g = self.scale / (self.nu * t**self.alpha)
        return self._kick(t, phi, g)

    def log_time(self, lam, phi):
        # dt = nu t dlambda
        self._count()
        t = np.exp(self.nu * lam)
        return self._kick(t, phi, self.scale * t ** (1.0 - self.alpha))


def _integrate(fun, y0, x0, x1, x_eval, cfg: EvolveConfig):
    sol = solve_ivp(
        fun, (x0, x1), y0, method=cfg.method, t_eval=x_eval, rtol=cfg.rtol, atol=cfg.atol
    )
    if not sol.success:
        raise IntegrationError(sol.message)
    return sol


def evolve_ode(
    params: ModelParams,
    psi0: StateVector,
    cfg: EvolveConfig,
    t_eval: Sequence[float] | None = None,
    coupling_scale: float = 1.0,
):
    """Integrate i d psi/dt = H(t) psi from cfg.t_start to cfg.t_end.

    Returns the final StateVector, or a list of StateVectors at ``t_eval``.
    ``coupling_scale`` multiplies g(t); 0 gives pure Zeeman evolution.
    """
    basis = enumerate_sector(params)
    check_same_basis(psi0, StateVector(basis, np.zeros(basis.dim)))
    rhs = _Rhs(params, coupling_scale)
    rhs.max_fev = cfg.max_steps * 7
    D = rhs.D
    ts, te = cfg.t_start, cfg.t_end
    want = np.array([te] if t_eval is None else sorted(t_eval), dtype=float)
    if want[0] < ts * (1 - 1e-12) or want[-1] > te * (1 + 1e-12):
        raise ValueError("t_eval must lie inside [t_start, t_end]")
    want = np.clip(want, ts, te)

    if cfg.frame == "direct":
        switch = ts
    elif cfg.frame == "logTime":
        switch = te
    else:
        switch = min(max(ts, LOG_FRAME_SWITCH), te)

    phi = np.exp(1j * D * ts) * psi0.amplitudes
    out: list[np.ndarray] = []
    if switch > ts:
        nu = params.nu
        sel = want[want <= switch]
        x1 = np.log(switch) / nu
        xs = np.minimum(np.log(sel) / nu, x1)
        sol = _integrate(rhs.log_time, phi, np.log(ts) / nu, x1, np.unique(np.append(xs, x1)), cfg)
        pos = np.searchsorted(sol.t, xs)
        out.extend(sol.y[:, k] for k in pos)
        phi = sol.y[:, -1]
    if switch < te:
        sel = want[want > switch]
        sol = _integrate(rhs.direct, phi, switch, te, sel, cfg)
        for k in range(sel.size):
            out.append(sol.y[:, k])
    states = [StateVector(basis, np.exp(-1j * D * t) * y) for t, y in zip(want, out)]
    return states[-1] if t_eval is None else states


# ---------------------------------------------------------------------------
# Trotter-Suzuki schedules


@dataclass(frozen=True)
class TrotterSchedule:
    n_steps: int
    t_initial: float
    t_final: float
    variant: str = "coupling-ramp"  # or "zeeman-ramp"
    step_rule: str | None = None  # "uniform-t" | "uniform-lambda"; default per variant

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not 0 < self.t_initial < self.t_final:
            raise ValueError("need 0 < t_initial < t_final")
        if self.variant not in ("coupling-ramp", "zeeman-ramp"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.rule not in ("uniform-t", "uniform-lambda"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")

    @property
    def rule(self) -> str:
        if self.step_rule is not None:
            return self.step_rule
        return "uniform-t" if self.variant == "coupling-ramp" else "uniform-lambda"

    def grid(self, nu: float) -> np.ndarray:
        """Sample points x_0 < x_1 < ... < x_n in the schedule's own variable."""
        n = self.n_steps
        if self.variant == "coupling-ramp":
            if self.rule == "uniform-t":
                return np.linspace(self.t_initial, self.t_final, n + 1)
            return np.exp(np.linspace(np.log(self.t_initial), np.log(self.t_final), n + 1))
        lo, hi = np.log(self.t_initial) / nu, np.log(self.t_final) / nu
        if self.rule == "uniform-lambda":
            return np.linspace(lo, hi, n + 1)
        return np.log(np.linspace(self.t_initial, self.t_final, n + 1)) / nu


class _InteractionPropagator:
    """exp(i c V) for real c, with V = J^+ J^- on the sector."""

    def __init__(self, basis):
        self.V = Interaction(basis)
        self.dense = basis.dim <= DENSE_EIGH_MAX_DIM
        if self.dense:
            self.w, self.U = la.eigh(self.V.matrix().toarray())
        else:
            self.M = self.V.matrix().tocsc()

    def apply(self, c: float, psi: np.ndarray) -> np.ndarray:
        if self.dense:
            return self.U @ (np.exp(1j * c * self.w) * (self.U.T @ psi))
        return expm_multiply(1j * c * self.M, psi)


_PROP_CACHE: dict[tuple[int, int, int], _InteractionPropagator] = {}


def _propagator(basis) -> _InteractionPropagator:
    key = (basis.N, basis.two_s, basis.n_plus)
    p = _PROP_CACHE.get(key)
    if p is None:
        p = _InteractionPropagator(basis)
        _PROP_CACHE[key] = p
    return p


def evolve_trotter(
    params: ModelParams,
    psi0: StateVector,
    schedule: TrotterSchedule,
    coupling_scale: float = 1.0,
) -> StateVector:
    """First-order product formula: per step exp(-i H_z dt) exp(-i H_int(t_j) dt).

    Coefficients are sampled at the right end of each step, t_j = t_i + j dt for
    the uniform-t rule.
    """
    basis = enumerate_sector(params)
    check_same_basis(psi0, StateVector(basis, np.zeros(basis.dim)))
    D = zeeman_diagonal(basis, params.epsilon)
    prop = _propagator(basis)
    x = schedule.grid(params.nu)
    psi = psi0.amplitudes.astype(complex)
    nu, alpha = params.nu, params.alpha
    for j in range(1, x.size):
        dx = x[j] - x[j - 1]
        if schedule.variant == "coupling-ramp":
            t = x[j]
            g = coupling_scale / (nu * t**alpha)
            psi = prop.apply(g * dx, psi)
            psi = np.exp(-1j * D * dx) * psi
        else:
            # lambda variable: H = nu t H_z - nu t g(t) V
            t = np.exp(nu * x[j])
            psi = prop.apply(coupling_scale * t ** (1.0 - alpha) * dx, psi)
            psi = np.exp(-1j * nu * t * D * dx) * psi
    return StateVector(basis, psi)


# ---------------------------------------------------------------------------
# comparisons between states


def overlap(a: StateVector, b: StateVector) -> complex:
    """<a|b> / (|a| |b|)."""
    check_same_basis(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes) / (a.norm * b.norm))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(overlap(a, b)) ** 2


def weight_distance(a: StateVector, b: StateVector) -> float:
    """1 - |w_a - w_b| with w the vectors of squared amplitudes."""
    check_same_basis(a, b)
    return float(1.0 - np.linalg.norm(a.weights - b.weights))


def phase_aligned_distance(a: StateVector, b: StateVector) -> float:
    """min over global phase of |a/|a| - e^{i phi} b/|b||."""
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * abs(overlap(a, b)))))


def zeeman_spread(params_or_eps) -> float:
    """Population standard deviation of the Zeeman fields."""
    eps = getattr(params_or_eps, "epsilon", params_or_eps)
    return float(np.std(np.asarray(eps, dtype=float)))


def scaled_time(params: ModelParams, t: float) -> float:
    """Dimensionless time Delta_eps / g(t) = Delta_eps nu t."""
    return zeeman_spread(params) * params.nu * t


def write_checkpoint(path, times: Iterable[float], states: Iterable[StateVector]) -> None:
    """CSV records ``t,index,re,im`` for each sampled time."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "index", "re", "im"])
        for t, st in zip(times, states):
            for i, a in enumerate(st.amplitudes):
                w.writerow([f"{t:.17g}", i, f"{a.real:.17g}", f"{a.imag:.17g}"])


def read_checkpoint(path, basis) -> dict[float, StateVector]:
    data: dict[float, np.ndarray] = {}
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        for row in r:
            t = float(row["t"])
            arr = data.setdefault(t, np.zeros(basis.dim, dtype=complex))
            arr[int(row["index"])] = complex(float(row["re"]), float(row["im"]))
    return {t: StateVector(basis, a) for t, a in data.items()}
