"""Late-time configuration distributions and ensemble fits.

Once g(t) has decayed the sector weights |C_{s^z}|^2 freeze. The asymptotic state
predicts them in closed form,

    P_s({s^z}) = exp(-sum_j [4 s pi r_j s^z_j / nu + varrho^(s)(s^z_j)]) / Z,

where r_j is the rank of eps_j. For s = 1/2 varrho vanishes and P is a Gibbs-like
ensemble of the linear charges; for s >= 1 the quadratic (and for s = 2 quartic)
terms in s^z are needed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .asymptotics import eps_ranks
from .evolution import EvolveConfig, evolve_ode
from .model import ModelParams, SectorBasis, StateVector, enumerate_sector, ground_state, site_expectations

CHARGE_SETS = {
    "linear": (1,),
    "quadratic": (1, 2),
    "quartic": (1, 2, 4),
}


class UnsupportedSpinError(ValueError):
    pass


class DegenerateWeightsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# varrho terms


def _varrho_spin2_coeffs(nu: float) -> tuple[float, float]:
    """(c2, c4) with varrho = c2 (s^z)^2 + c4 (s^z)^4 for s = 2."""
    a = math.pi / nu
    log_ratio = (
        2.5 * math.log(3 / 4)
        + math.log(math.sinh(math.sqrt(3 / 8) * a))
        - 0.5 * math.log(2)
        - math.log(math.sinh(a / 4))
    )
    extra = 0.5 * math.log1p(math.sinh(5 * a) / math.sinh(3 * a))
    return 7 / 12 * log_ratio + extra, -1 / 12 * log_ratio


def varrho(two_s: int, nu: float) -> Callable[[np.ndarray], np.ndarray]:
    """Per-site weight term varrho^(s)(s^z) as a vectorized function of s^z."""
    a = math.pi / nu
    if two_s == 1:
        return lambda m: np.zeros_like(np.asarray(m, dtype=float))
    if two_s == 2:
        c = math.log(2 * math.cosh(a))
        return lambda m: c * np.asarray(m, dtype=float) ** 2
    if two_s == 3:
        c = 0.5 * math.log(2 * math.cosh(2 * a) + 1)
        return lambda m: c * np.asarray(m, dtype=float) ** 2
    if two_s == 4:
        c2, c4 = _varrho_spin2_coeffs(nu)
        return lambda m: c2 * np.asarray(m, dtype=float) ** 2 + c4 * np.asarray(m, dtype=float) ** 4
    raise UnsupportedSpinError(f"varrho is known for s <= 2, got s = {two_s}/2")


def _log_weights(params: ModelParams, sz: np.ndarray) -> np.ndarray:
    rank = eps_ranks(params.epsilon)
    s, nu = params.s, params.nu
    rho = varrho(params.two_s, nu)
    return -(4 * s * math.pi / nu * (sz @ rank) + rho(sz).sum(axis=-1))


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class EnsembleWeights:
    basis: SectorBasis
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.basis.dim,):
            raise ValueError("weights do not match the basis")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        self.weights = w

    def total_variation(self, other: "EnsembleWeights | np.ndarray") -> float:
        q = other.weights if isinstance(other, EnsembleWeights) else np.asarray(other)
        return float(0.5 * np.abs(self.weights - q).sum())


def steady_distribution(params: ModelParams) -> EnsembleWeights:
    """P_s over every configuration of the sector."""
    basis = enumerate_sector(params)
    logw = _log_weights(params, basis.sz)
    return EnsembleWeights(basis, np.exp(logw - logsumexp(logw)))


def config_probability(params: ModelParams, config: Sequence[float]) -> float:
    """P_s of one configuration (s^z_1, ..., s^z_N) of the sector."""
    basis = enumerate_sector(params)
    idx = basis.index_of(config)
    logw = _log_weights(params, basis.sz)
    return float(math.exp(logw[idx] - logsumexp(logw)))


def diagonal_ensemble(psi: StateVector) -> EnsembleWeights:
    w = psi.weights
    return EnsembleWeights(psi.basis, w / w.sum())


# ---------------------------------------------------------------------------
# exponential-family fits


@dataclass
class ChargeFit:
    charges: str
    theta: np.ndarray  # (N, len(powers)); only the induced distribution is meaningful
    distribution: EnsembleWeights
    kl: float
    degenerate: bool = False
    iterations: int = 0
    powers: tuple[int, ...] = field(default=())


def _features(basis: SectorBasis, powers: Sequence[int]) -> np.ndarray:
    sz = basis.sz
    return np.concatenate([sz**m for m in powers], axis=1)


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def fit_ensemble(weights: EnsembleWeights, charges: str = "quadratic", tol: float = 1e-14, max_iter: int = 200) -> ChargeFit:
    """Maximum-likelihood fit of p(c) ~ exp(-sum_{k,m} theta_{k,m} (s^z_k)^{m}).

    Equivalent to minimizing KL(weights || p). Directions of theta that do not
    change the distribution (conserved sums such as sum_k s^z_k) are projected out
    before a damped Newton iteration, so the problem is strictly convex.
    """
    if charges not in CHARGE_SETS:
        raise ValueError(f"unknown charge set {charges!r}")
    w = weights.weights
    if not np.isclose(w.sum(), 1.0, atol=1e-10):
        raise ValueError("weights must be normalized")
    degenerate = bool(np.any(w == 0))
    if np.count_nonzero(w) == 0:
        raise DegenerateWeightsError("weights have empty support")
    powers = CHARGE_SETS[charges]
    F = _features(weights.basis, powers)
    Fc = F - F.mean(axis=0)
    U, sv, Vt = np.linalg.svd(Fc, full_matrices=False)
    keep = sv > 1e-10 * max(sv[0], 1.0) if sv.size else np.zeros(0, bool)
    B = Vt[keep].T  # reduced coordinates theta = B x
    X = F @ B
    target = w @ X

    def logp(x):
        a = -X @ x
        return a - logsumexp(a)

    def objective(x):
        return -(w @ logp(x))

    x = np.zeros(B.shape[1])
    f = objective(x)
    it = 0
    for it in range(1, max_iter + 1):
        lp = logp(x)
        p = np.exp(lp)
        mean = p @ X
        grad = target - mean
        H = (X - mean).T @ ((X - mean) * p[:, None])
        if np.max(np.abs(grad)) < tol:
            break
        step = -np.linalg.solve(H + 1e-14 * np.eye(H.shape[0]), grad)
        damp = 1.0
        while damp > 1e-8:
            xn = x + damp * step
            fn = objective(xn)
            if fn <= f:
                x, f = xn, fn
                break
            damp *= 0.5
        else:
            break
    q = np.exp(logp(x))
    theta = (B @ x).reshape(len(powers), -1).T
    dist = EnsembleWeights(weights.basis, q)
    return ChargeFit(charges, theta, dist, max(_kl(w, q), 0.0), degenerate, it, tuple(powers))


# ---------------------------------------------------------------------------
# integrability probe


def fig11_fields(N: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """The two field sets eps^(0)_i = i/N and eps^(1)_i = 0.49 + 0.002 i/N, sharing eps_1 = 1/N."""
    e0 = tuple(i / N for i in range(1, N + 1))
    e1 = (1 / N,) + tuple(0.49 + 0.002 * i / N for i in range(2, N + 1))
    return e0, e1


@dataclass
class ProbeReport:
    alphas: list[float]
    magnetizations: dict  # (alpha, set index) -> array of <s^z_i>
    max_disagreement: dict  # alpha -> max_i |difference|
    tolerance: float

    def flagged(self, alpha: float) -> np.ndarray:
        m0 = self.magnetizations[(alpha, 0)]
        m1 = self.magnetizations[(alpha, 1)]
        return np.nonzero(np.abs(m0 - m1) > self.tolerance)[0] + 1


def integrability_probe(
    variants: Sequence[ModelParams],
    alphas: Sequence[float],
    t: float,
    tolerance: float = 1e-2,
    rtol: float = 1e-10,
) -> ProbeReport:
    """<s^z_i>(t) from the ground state at t_init for each (alpha, field set)."""
    if len(variants) != 2:
        raise ValueError("expected two parameter variants")
    mags = {}
    for a in alphas:
        for k, p in enumerate(variants):
            pa = p.with_(alpha=a)
            psi = evolve_ode(pa, ground_state(pa), EvolveConfig(pa.t_init, t, rtol=rtol))
            mags[(a, k)] = site_expectations(psi)
    dis = {a: float(np.max(np.abs(mags[(a, 0)] - mags[(a, 1)]))) for a in alphas}
    return ProbeReport(list(alphas), mags, dis, tolerance)


# ---------------------------------------------------------------------------
# output


def write_weights_csv(path, numeric: EnsembleWeights, analytic: EnsembleWeights, fit: ChargeFit | None = None) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["configIndex", "weight_numeric", "weight_analytic", "weight_fit"])
        f = fit.distribution.weights if fit is not None else np.full(numeric.basis.dim, np.nan)
        for i, (a, b, c) in enumerate(zip(numeric.weights, analytic.weights, f)):
            wr.writerow([i, f"{a:.17g}", f"{b:.17g}", f"{c:.17g}"])


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
