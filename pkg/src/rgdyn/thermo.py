"""Thermodynamic-limit observables of the late-time state.

With nu = N / eta the projected product form of the asymptotic state is evaluated
by a saddle point in the projection angle xi. The saddle xi_0 is purely imaginary
and defines a real chemical potential mu; single-site statistics of s^z are those
of a binomial distribution with odds omega = exp(-4 s pi (j - mu) / nu).
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np
from scipy.special import logsumexp

from .asymptotics import eps_ranks, log_distance_matrix
from .model import ModelParams, dense_spin_matrices

OPS = ("0", "+", "-", "z")


class BoundarySectorError(ValueError):
    """N_+ = 0 or N_+ = 2 s N: the saddle point runs off to infinity."""


@dataclass(frozen=True)
class ThermoParams:
    N: int
    two_s: int
    n_plus: int
    nu: float
    convention: str = "N/eta"  # or "sN/eta" for large-s scaling

    def __post_init__(self):
        if self.N < 1 or self.two_s < 1:
            raise ValueError("need N >= 1 and two_s >= 1")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.convention not in ("N/eta", "sN/eta"):
            raise ValueError(f"unknown convention {self.convention!r}")
        if not 0 < self.n_plus < self.two_s * self.N:
            raise BoundarySectorError(f"N_+ = {self.n_plus} has no finite saddle point")

    @property
    def s(self) -> float:
        return self.two_s / 2

    @property
    def jz(self) -> float:
        return self.n_plus - self.N * self.s

    @property
    def eta(self) -> float:
        scale = self.N if self.convention == "N/eta" else self.s * self.N
        return scale / self.nu

    @classmethod
    def from_model(cls, params: ModelParams) -> "ThermoParams":
        return cls(params.N, params.two_s, params.n_plus, params.nu)

    @classmethod
    def from_eta(cls, N: int, two_s: int, jz: float, eta: float, convention: str = "N/eta") -> "ThermoParams":
        n_plus = int(round(N * two_s / 2 + jz))
        scale = N if convention == "N/eta" else two_s / 2 * N
        return cls(N, two_s, n_plus, scale / eta, convention)


def _log_odds(th: ThermoParams) -> float:
    """ln[(e^a - 1) / (1 - e^-b)], a = 2 pi N_+/nu, b = 2 pi (2 N s - N_+)/nu."""
    a = 2 * math.pi * th.n_plus / th.nu
    b = 2 * math.pi * (th.two_s * th.N - th.n_plus) / th.nu
    return a + math.log(-math.expm1(-a)) - math.log(-math.expm1(-b))


def saddle_xi(th: ThermoParams) -> complex:
    """xi_0 = i ln[(1 - e^a) / (e^-b - 1)], purely imaginary."""
    return 1j * _log_odds(th)


def chemical_potential(th: ThermoParams) -> float:
    """mu = -i nu xi_0 / (4 pi s)."""
    return th.nu * _log_odds(th) / (4 * math.pi * th.s)


def _x(th: ThermoParams, j) -> np.ndarray:
    """2 s pi (j - mu) / nu."""
    return 2 * th.s * math.pi * (np.asarray(j, dtype=float) - chemical_potential(th)) / th.nu


def expect_sz(th: ThermoParams, j):
    return -th.s * np.tanh(_x(th, j))


def expect_sz2(th: ThermoParams, j):
    s = th.s
    return s * s + (s - 2 * s * s) / (1 + np.cosh(2 * _x(th, j)))


def moment_sz(th: ThermoParams, j, n: int):
    """<(s^z_j)^n> from the binomial ratio with omega = exp(-4 s pi (j - mu) / nu)."""
    if n < 0:
        raise ValueError("moment order must be >= 0")
    x = np.atleast_1d(_x(th, j))
    k = np.arange(th.two_s + 1)
    logc = np.array([math.log(math.comb(th.two_s, int(q))) for q in k])
    logw = logc[None, :] - 2 * x[:, None] * k[None, :]  # ln[C(2s,k) omega^k]
    m = k - th.s
    p = np.exp(logw - logsumexp(logw, axis=1, keepdims=True))
    out = p @ (m.astype(float) ** n)
    return out if np.ndim(j) else float(out[0])


def cumulants_sz(th: ThermoParams, j) -> tuple:
    """(mean, variance, skewness, kurtosis) of s^z_j: the first four cumulants."""
    s = th.s
    x = _x(th, j)
    c = np.cosh(x)
    mean = -s * np.tanh(x)
    var = s / (1 + np.cosh(2 * x))
    skew = s * np.tanh(x) / (2 * c**2)
    kurt = s * (np.cosh(2 * x) - 2) / (4 * c**4)
    return mean, var, skew, kurt


def cumulants_from_moments(m1, m2, m3, m4) -> tuple:
    k2 = m2 - m1**2
    k3 = m3 - 3 * m2 * m1 + 2 * m1**3
    k4 = m4 - 4 * m3 * m1 - 3 * m2**2 + 12 * m2 * m1**2 - 6 * m1**4
    return m1, k2, k3, k4


def magnetization_sum(th: ThermoParams, method: str = "midpoint") -> float:
    """sum_j <s^z_j> in one of three forms.

    ``sites``: the plain sum over j = 1..N, off from J^z by an O(1) boundary term.
    ``midpoint``: the profile sampled at j - 1/2 plus the leading Euler-Maclaurin
    term, which approximates the continuum integral to O(nu^-3).
    ``integral``: the integral over [0, N], equal to J^z by construction of mu.
    """
    mu = chemical_potential(th)
    k = 2 * th.s * math.pi / th.nu
    j = np.arange(1, th.N + 1, dtype=float)
    if method == "sites":
        return float(np.sum(expect_sz(th, j)))
    if method == "midpoint":

        def slope(x):
            return -th.s * k / np.cosh(k * (x - mu)) ** 2

        return float(np.sum(expect_sz(th, j - 0.5)) + (slope(th.N) - slope(0.0)) / 24)
    if method == "integral":

        def logcosh(y):
            y = abs(y)
            return y + math.log1p(math.exp(-2 * y)) - math.log(2.0)

        return -th.s / k * (logcosh(k * (th.N - mu)) - logcosh(k * mu))
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# the function G of the projection-angle integral


def G_discrete(th: ThermoParams, xi: complex) -> complex:
    """Spin-1 exponent G(xi) of the norm integral, including the 2 cosh(pi/nu) factor."""
    if th.two_s != 2:
        raise NotImplementedError("the discrete G is written for s = 1")
    j = np.arange(1, th.N + 1)
    z = cmath.exp(-1j * xi)
    a = np.exp(-4 * math.pi * j / th.nu)
    terms = np.log(1 + z * 2 * math.cosh(math.pi / th.nu) * a + z * z * a * a)
    return 1j * xi * th.n_plus / th.N + terms.sum() / th.N


def G_continuum(th: ThermoParams, xi: complex) -> complex:
    """Large-N form (2s/N) int_0^N ln(1 + e^{-i xi} e^{-4 pi s x / nu}) dx + i xi N_+/N.

    The integral is a dilogarithm: int_0^N ln(1 + z e^{-cx}) dx = [Li2(-z e^{-cN}) - Li2(-z)] / c.
    """
    c = 4 * math.pi * th.s / th.nu
    z = cmath.exp(-1j * xi)
    integral = complex(mpmath.polylog(2, -z * math.exp(-c * th.N)) - mpmath.polylog(2, -z)) / c
    return 1j * xi * th.n_plus / th.N + 2 * th.s / th.N * integral


def G_continuum_prime(th: ThermoParams, xi: complex) -> complex:
    """dG/dxi of G_continuum in closed form."""
    c = 4 * math.pi * th.s / th.nu
    z = cmath.exp(-1j * xi)
    q = math.exp(-c * th.N)
    integral = (cmath.log(1 + z) - cmath.log(1 + z * q)) / c  # int_0^N w/(1+w) dx
    return 1j * th.n_plus / th.N - 1j * 2 * th.s / th.N * integral


# ---------------------------------------------------------------------------
# mean-field state and local matrix elements (spin 1)


@dataclass
class MeanFieldState:
    """Per-site coherent amplitudes on |-1>, |0>, |+1>."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    phase_shift: np.ndarray  # the log-distance phase varphi_k

    def local(self, k: int) -> np.ndarray:
        """Amplitudes of site k (1-based) ordered by raise count q = 0, 1, 2."""
        return np.array([self.u[k - 1], self.v[k - 1], self.w[k - 1]])

    def norms(self) -> np.ndarray:
        return np.abs(self.u) ** 2 + np.abs(self.v) ** 2 + np.abs(self.w) ** 2

    def expect(self, k: int, op: np.ndarray) -> complex:
        a = self.local(k)
        return complex(np.vdot(a, op @ a))


def mean_field_state(params: ModelParams, t: float) -> MeanFieldState:
    """Late-time spin-1 coherent product state at time t."""
    if params.two_s != 2:
        raise NotImplementedError("the coherent-state form is written for s = 1")
    th = ThermoParams.from_model(params)
    mu = chemical_potential(th)
    eps = np.asarray(params.epsilon, dtype=float)
    k = eps_ranks(eps).astype(float)
    zeta = math.pi * (k - mu) / params.nu
    sz = -np.tanh(2 * zeta)
    L = log_distance_matrix(eps)
    shift = 2 / params.nu * (L @ sz)  # L has zero diagonal, so the j = k term drops
    theta = math.pi - np.arccos(np.tanh(2 * zeta))
    phi = 2 * eps * t - shift
    u = np.exp(1j * phi) * np.sin(theta / 2) ** 2
    v = np.sin(theta) / math.sqrt(2) + 0j
    w = np.exp(-1j * phi) * np.cos(theta / 2) ** 2
    return MeanFieldState(u, v, w, theta, phi, shift)


def _local_op(tag: str) -> np.ndarray:
    sz, splus = dense_spin_matrices(2)
    return {"0": np.eye(3), "z": sz, "+": splus, "-": splus.T}[tag]


def delta_n_plus(p: str, q: str) -> int:
    return (p == "+") + (q == "+") - (p == "-") - (q == "-")


def g_function(th: ThermoParams, p: str, q: str, j: int, xi: complex, extra_phase: complex = 0j) -> complex:
    """Spin-1 g-functions in the nu -> infinity form (cosh(pi/nu) -> 1).

    Available tags: (z,0), (z,z) and (-,-). ``extra_phase`` is the exponent
    -4 i t eps_j + 2 i varphi_j carried by (-,-).
    """
    if th.two_s != 2:
        raise NotImplementedError("g-functions are available for s = 1")
    X = 4 * math.pi * j / th.nu + 1j * xi
    if (p, q) in (("z", "0"), ("0", "z")):
        return -cmath.sinh(X) / (1 + cmath.cosh(X))
    if (p, q) == ("z", "z"):
        return 1 / (1 + 1 / cmath.cosh(X))
    if (p, q) == ("-", "-"):
        return cmath.exp(-1j * xi + extra_phase) / (1 + cmath.cos(xi - 4j * math.pi * j / th.nu))
    raise KeyError(f"no g-function for ({p},{q})")


def _normalized_single(th, mf: MeanFieldState | None, site: int, rank: int, p: str, q: str, t, eps) -> complex:
    for tag in (p, q):
        if tag not in OPS:
            raise ValueError(f"unsupported operator tag {tag!r}")
    xi0 = saddle_xi(th)
    if (p, q) in (("0", "0"),):
        return 1.0 + 0j
    if (p, q) in (("z", "0"), ("0", "z"), ("z", "z")):
        return cmath.exp(-0.5j * xi0 * delta_n_plus(p, q)) * g_function(th, p, q, rank, xi0)
    if mf is None:
        raise ValueError(f"({p},{q}) needs the mean-field phases; pass params")
    if (p, q) == ("-", "-"):
        ph = -4j * t * eps + 2j * mf.phase_shift[site - 1]
        return cmath.exp(-0.5j * xi0 * -2) * g_function(th, p, q, rank, xi0, ph)
    if (p, q) == ("+", "+"):
        ph = -4j * t * eps + 2j * mf.phase_shift[site - 1]
        return (cmath.exp(-0.5j * xi0 * -2) * g_function(th, "-", "-", rank, xi0, ph)).conjugate()
    # every other bilinear: the thermodynamic-limit value is the mean-field average
    return mf.expect(site, _local_op(p) @ _local_op(q))


def matrix_element_nlocal(
    th: ThermoParams,
    ops: Sequence[tuple[int, str, str]],
    t: float = 0.0,
    params: ModelParams | None = None,
) -> complex:
    """Normalized matrix element of prod_i s^{p_i}_i s^{q_i}_i in the large-N limit.

    ``ops`` holds (site, p, q) with 1-based distinct sites and p, q in {0,+,-,z}.
    Diagonal tags need only ``th``; tags with raising or lowering parts need
    ``params`` for the fields and the log-distance phases.
    """
    sites = [o[0] for o in ops]
    if len(set(sites)) != len(sites):
        raise ValueError("sites must be distinct")
    mf = mean_field_state(params, t) if params is not None else None
    ranks = eps_ranks(params.epsilon) if params is not None else None
    out = 1.0 + 0j
    for site, p, q in ops:
        if not 1 <= site <= th.N:
            raise ValueError(f"site {site} out of range")
        rank = int(ranks[site - 1]) if ranks is not None else site
        eps = params.epsilon[site - 1] if params is not None else 0.0
        out *= _normalized_single(th, mf, site, rank, p, q, t, eps)
    return out


# ---------------------------------------------------------------------------
# output


def write_profile_csv(path, th: ThermoParams) -> None:
    """Columns j, mu, mean, sz2, variance, skewness, kurtosis."""
    j = np.arange(1, th.N + 1)
    mean, var, skew, kurt = cumulants_sz(th, j)
    sz2 = expect_sz2(th, j)
    mu = chemical_potential(th)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "mu", "mean", "sz2", "variance", "skewness", "kurtosis"])
        for row in zip(j, mean, sz2, var, skew, kurt):
            w.writerow([int(row[0]), f"{mu:.17g}"] + [f"{x:.17g}" for x in row[1:]])
