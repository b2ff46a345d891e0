"""Closed-form two-site solutions and the hyperbolic Landau-Zener problem.

Conventions: tau = (eps2 - eps1) t and r = (eps1 + eps2) / (eps2 - eps1), with
eps1 < eps2. States are returned in the canonical sector basis of model.py.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.integrate import solve_ivp

from .asymptotics import GammaSpec, gamma_weight
from .model import ModelParams, StateVector, enumerate_sector
from .special import bessel_j, hyp1f2, loggamma

SQ2 = math.sqrt(2.0)


@dataclass(frozen=True)
class TwoSiteParams:
    eps1: float
    eps2: float
    nu: float

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")

    @property
    def delta(self) -> float:
        return self.eps2 - self.eps1

    @property
    def r(self) -> float:
        return (self.eps1 + self.eps2) / self.delta

    def tau(self, t: float) -> float:
        return self.delta * t

    def model(self, two_s: int, jz) -> ModelParams:
        return ModelParams(2, two_s, jz, self.nu, epsilon=(self.eps1, self.eps2))

    def require_ordered(self) -> None:
        if not self.eps1 < self.eps2:
            raise ValueError("closed forms need eps1 < eps2")


def _log_cosh(x: float) -> float:
    x = abs(x)
    return x + math.log1p(math.exp(-2 * x)) - math.log(2.0)


def _spin1_pm1(jz: int, p: TwoSiteParams, t: float) -> np.ndarray:
    nu = p.nu
    tau = p.tau(t)
    # [pi / (2 cosh(2 pi / nu))]^{1/2} in log form
    log_pref = 0.5 * (math.log(math.pi / 2) - _log_cosh(2 * math.pi / nu))
    power = 0.5 + (2j if jz == -1 else 4j) / nu
    pref = cmath.exp(log_pref + power * math.log(tau) + (1j if jz == -1 else -1j) * p.r * tau)
    ja = bessel_j(0.5 + 2j / nu, tau)
    jb = bessel_j(-0.5 + 2j / nu, tau)
    c2 = pref * ja
    c1 = pref * (-1j if jz == -1 else 1j) * jb
    # |1> = (|a,b> + |b,a>)/sqrt2 is the symmetric combination. The antisymmetric
    # partner that solves the equation with eps1 < eps2 is |2> = (|0,-1> - |-1,0>)/sqrt2
    # for jz = -1 and (|0,1> - |1,0>)/sqrt2 for jz = +1.
    if jz == -1:
        # basis order (0,-1), (-1,0)
        return np.array([c1 + c2, c1 - c2]) / SQ2
    # basis order (1,0), (0,1)
    return np.array([c1 - c2, c1 + c2]) / SQ2


def jz0_phis(p: TwoSiteParams, t: float) -> tuple[complex, complex, complex]:
    """phi_1, phi_2, phi_3 of the J^z = 0 solution."""
    nu = p.nu
    tau = p.tau(t)
    z = -tau * tau
    lead = cmath.exp(6j / nu * math.log(tau))
    fa = hyp1f2(1j / nu, 0.5 + 2j / nu, 3j / nu, z)
    fb = hyp1f2((nu + 1j) / nu, 1.5 + 2j / nu, 1 + 3j / nu, z)
    fc = hyp1f2((2 * nu + 1j) / nu, 2.5 + 2j / nu, 2 + 3j / nu, z)
    c1 = 2 * nu * 1j * tau / ((4j + nu) * math.sqrt(3))
    c2 = 2 * SQ2 * nu**2 * (nu + 1j) * tau**2 / ((nu + 3j) * (nu + 4j) * (3 * nu + 4j))
    phi1 = lead * fa
    phi2 = c1 * lead * fb
    phi3 = lead / SQ2 * (fa - fb) + c2 * lead * fc
    return phi1, phi2, phi3


# columns: |1>, |2>, |3> in the (1,-1), (0,0), (-1,1) basis
_JZ0_FRAME = np.array(
    [
        [1 / math.sqrt(6), 1 / SQ2, -1 / math.sqrt(3)],
        [2 / math.sqrt(6), 0.0, 1 / math.sqrt(3)],
        [1 / math.sqrt(6), -1 / SQ2, -1 / math.sqrt(3)],
    ]
)


def twosite_spin1(jz: int, p: TwoSiteParams, t: float) -> StateVector:
    """Exact two-site spin-1 state in sector jz at time t > 0."""
    if t <= 0:
        raise ValueError("t must be positive")
    p.require_ordered()
    basis = enumerate_sector(p.model(2, jz))
    e = p.eps1 + p.eps2
    if jz == -2:
        amps = np.array([cmath.exp(2j * e * t)])
    elif jz == 2:
        amps = np.array([cmath.exp(-2j * e * t + 4j * math.log(t) / p.nu)])
    elif jz in (-1, 1):
        amps = _spin1_pm1(jz, p, t)
    elif jz == 0:
        amps = _JZ0_FRAME @ np.array(jz0_phis(p, t))
    else:
        raise ValueError(f"spin-1 two-site sector jz={jz} does not exist")
    return StateVector(basis, np.asarray(amps, dtype=complex))


def twosite_spin1_asymptotic_jz0(p: TwoSiteParams, t: float) -> StateVector:
    """Large-t form of the J^z = 0 two-site spin-1 state.

    The ln-coefficient of kappa is taken in the scaled time, ln(tau/2), which is
    what the closed form (a function of tau alone) produces.
    """
    p.require_ordered()
    nu = p.nu
    tau = p.tau(t)
    e1, e2 = p.eps1, p.eps2
    log_norm = loggamma(0.5 + 2j / nu) + loggamma(1 + 3j / nu) - loggamma(1 + 1j / nu) - 0.5 * math.log(6 * math.pi)
    log_kappa = 2j / nu * math.log(tau / 2) + math.log(2 * math.pi) - 2 * loggamma(0.5 + 1j / nu)
    common = log_norm + 2j / nu * math.log(t) + 2j * (e1 + e2) * t + 6 * math.pi / nu
    amps = np.array(
        [
            cmath.exp(common - 4 * math.pi / nu - 4j * e1 * t),
            cmath.exp(common + log_kappa - 6 * math.pi / nu - 2j * (e1 + e2) * t),
            cmath.exp(common - 8 * math.pi / nu - 4j * e2 * t),
        ]
    )
    return StateVector(enumerate_sector(p.model(2, 0)), amps)


def spin32_norm(nu: float) -> complex:
    """N(nu) = Gamma(1/2+3i/nu) Gamma(1+5i/nu) / (sqrt(5 pi) Gamma(1+2i/nu))."""
    return cmath.exp(
        loggamma(0.5 + 3j / nu) + loggamma(1 + 5j / nu) - loggamma(1 + 2j / nu) - 0.5 * math.log(5 * math.pi)
    )


def twosite_spin32_asymptotic(jz: int, p: TwoSiteParams, t: float) -> StateVector:
    """Large-t two-site spin-3/2 states for J^z = -1 and +1.

    The gamma weights are evaluated at the scaled time tau, consistent with the
    many-site asymptotic form for general fields. The result is normalized.
    """
    p.require_ordered()
    if jz not in (-1, 1):
        raise ValueError("spin-3/2 asymptotics are available for jz = -1, +1")
    nu = p.nu
    tau = p.tau(t)
    e1, e2 = p.eps1, p.eps2
    spec = GammaSpec("corrected", 3)
    basis = enumerate_sector(p.model(3, jz))

    def g(*counts):
        return gamma_weight(spec, counts, nu, tau)

    lnN = cmath.log(spin32_norm(nu))
    if jz == -1:
        common = lnN + 2j / nu * math.log(t) + 2j * (e1 + e2) * t + 9 * math.pi / nu - g(0, 1)
        logs = [
            -6 * math.pi / nu - 4j * e1 * t,
            -(g(2, 0) - g(0, 1)) - 9 * math.pi / nu - 2j * (e1 + e2) * t,
            -12 * math.pi / nu - 4j * e2 * t,
        ]
    else:
        common = lnN + 4j / nu * math.log(t) + 4j * (e1 + e2) * t + 18 * math.pi / nu - g(1, 0)
        logs = [
            -15 * math.pi / nu - 6j * e1 * t - 2j * e2 * t,
            -(g(0, 2) - g(1, 0)) - 18 * math.pi / nu - 4j * (e1 + e2) * t,
            -21 * math.pi / nu - 2j * e1 * t - 6j * e2 * t,
        ]
    # the prefactor N(nu) alone does not normalize these states, so normalize here
    return StateVector(basis, np.array([cmath.exp(common + x) for x in logs])).normalized()


# ---------------------------------------------------------------------------
# hyperbolic Landau-Zener problem


def lz_hamiltonian(tau: float, delta: float, nu: float, alpha: float) -> np.ndarray:
    """|Delta|^{alpha-1} / (nu tau^alpha) sigma_z - sgn(Delta) sigma_x.

    Basis order is (|sigma_z=-1>, |sigma_z=+1>).
    """
    a = abs(delta) ** (alpha - 1) / (nu * tau**alpha) if delta != 0 else 0.0
    sg = float(np.sign(delta))
    return np.array([[-a, -sg], [-sg, a]], dtype=float)


def lz_probability(
    delta: float,
    nu: float,
    alpha: float,
    tau_in: float,
    tau_fn: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> float:
    """P(|1,0> -> |up,down>) at tau_fn starting from the triplet at tau_in.

    The windows are in the scaled time tau = |Delta| t. Amplitudes (a, b) are on
    (|sigma_z=-1>, |sigma_z=+1>), so P = |a + b|^2 / 2. Delta = 0 (sgn 0 = 0) keeps
    the triplet exactly.
    """
    if not 0 < tau_in < tau_fn:
        raise ValueError("need 0 < tau_in < tau_fn")
    if delta == 0:
        return 0.5
    amp = abs(delta) ** (alpha - 1) / nu
    sg = float(np.sign(delta))

    # u = ln tau: i dpsi/du = tau H psi
    def rhs(u, y):
        tau = math.exp(u)
        hz = amp * tau ** (1 - alpha)
        a, b = y
        return np.array([-1j * (-hz * a - sg * tau * b), -1j * (-sg * tau * a + hz * b)])

    sol = solve_ivp(
        rhs,
        (math.log(tau_in), math.log(tau_fn)),
        np.array([1.0 + 0j, 0j]),
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(sol.message)
    a, b = sol.y[:, -1]
    return float(0.5 * abs(a + b) ** 2)


def lz_sweep(
    deltas: Iterable[float],
    alphas: Iterable[float],
    tau_fns: Iterable[float],
    nu: float = 3.0,
    tau_in: float = 1e-5,
) -> list[tuple[float, float, float, float]]:
    """(Delta, alpha, tau_fn, P) rows."""
    rows = []
    for al in alphas:
        for tf in tau_fns:
            for d in deltas:
                rows.append((float(d), float(al), float(tf), lz_probability(d, nu, al, tau_in, tf)))
    return rows


def fig1_deltas(n_per_decade: int = 4) -> np.ndarray:
    """Both signs of |Delta| log-spaced over [1e-12, 10]."""
    mag = np.logspace(-12, 1, 13 * n_per_decade + 1)
    return np.concatenate([-mag[::-1], mag])


def write_lz_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Delta", "alpha", "tauFn", "P"])
        for r in rows:
            w.writerow([f"{x:.17g}" for x in r])
