"""Late-time asymptotic wavefunctions of the spin-s model.

Each basis configuration is labelled by the sets of sites raised q = 1..2s times
above the pseudo-vacuum. Its amplitude is

    exp(-gamma) exp(i Lambda) prod_j exp(-2 i q_j t eps_j - 2 s pi q_j r_j / nu - 2 i q_j theta_j)

with r_j the 1-based rank of eps_j in ascending order. The weight gamma depends on
the counts N_1..N_{2s-1} only; several families are available through GammaSpec.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .model import ModelParams, SectorBasis, StateVector, enumerate_sector, sector_basis
from .special import loggamma

FAMILIES = ("corrected", "saddleRaw", "generalConjecture")
THETA_CONVENTIONS = ("general", "spin1-single")


class DegenerateFieldsError(ValueError):
    pass


class UnsupportedSpinError(ValueError):
    pass


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class PartitionLabel:
    """Site sets raised q = 1..2s times (1-based site indices)."""

    sets: tuple[tuple[int, ...], ...]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.sets)

    @property
    def n_plus(self) -> int:
        return sum((q + 1) * len(s) for q, s in enumerate(self.sets))

    @classmethod
    def from_raises(cls, raises: Sequence[int], two_s: int) -> "PartitionLabel":
        raises = list(raises)
        return cls(
            tuple(
                tuple(j + 1 for j, r in enumerate(raises) if r == q) for q in range(1, two_s + 1)
            )
        )

    def raises(self, N: int) -> np.ndarray:
        out = np.zeros(N, dtype=np.int64)
        for q, sites in enumerate(self.sets, start=1):
            out[[j - 1 for j in sites]] = q
        return out


def enumerate_partitions(N: int, two_s: int, n_plus: int) -> list[PartitionLabel]:
    """Partitions in the same order as the sector basis."""
    basis = sector_basis(N, two_s, n_plus)
    return [PartitionLabel.from_raises(row, two_s) for row in basis.raises]


def _counts(raises: np.ndarray, two_s: int) -> np.ndarray:
    """N_q for q = 1..2s, one row per configuration."""
    return np.stack([(raises == q).sum(axis=1) for q in range(1, two_s + 1)], axis=1)


# ---------------------------------------------------------------------------
# phase ingredients


def _check_distinct(eps: np.ndarray) -> None:
    if np.unique(eps).size != eps.size:
        raise DegenerateFieldsError("asymptotic forms need pairwise distinct Zeeman fields")


def log_distance_matrix(eps) -> np.ndarray:
    """L_jk = ln|eps_j - eps_k| off the diagonal, 0 on it."""
    eps = np.asarray(eps, dtype=float)
    _check_distinct(eps)
    d = np.abs(eps[:, None] - eps[None, :])
    np.fill_diagonal(d, 1.0)
    return np.log(d)


def theta_phase(k: int, params: ModelParams) -> float:
    """theta_k = (s/nu) sum_{j != k} ln|eps_j - eps_k| for 1-based site k."""
    L = log_distance_matrix(params.epsilon)
    return float(params.s / params.nu * L[k - 1].sum())


def eps_ranks(eps) -> np.ndarray:
    """1-based rank of each field in ascending order."""
    eps = np.asarray(eps, dtype=float)
    return np.argsort(np.argsort(eps, kind="stable"), kind="stable") + 1


# ---------------------------------------------------------------------------
# gamma weights


@dataclass(frozen=True)
class GammaSpec:
    """Choice of the gamma family.

    ``corrected`` uses the exact weights for 2s <= 3 and the spin-2 conjecture for
    2s = 4. ``saddleRaw`` is the uncorrected saddle-point weight. ``generalConjecture``
    with ``omega`` set evaluates sum(omega) plus the universal ln t term for any s;
    without ``omega`` it is the spin-2 conjecture.
    """

    family: str = "corrected"
    two_s: int = 2
    omega: Callable[[Sequence[int], float], complex] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown gamma family {self.family!r}")
        if self.omega is None and self.two_s > 4:
            raise UnsupportedSpinError(f"no closed-form gamma for s = {self.two_s}/2")
        if self.family == "generalConjecture" and self.omega is None and self.two_s != 4:
            raise UnsupportedSpinError("generalConjecture without omega is defined for s = 2 only")


def log_t_coefficient(counts: Sequence[int], two_s: int) -> float:
    """a such that the t dependence of gamma is (i a / nu) ln t."""
    n = list(counts)[: two_s - 1]
    pair = sum(k * (k - 1) // 2 * n[k - 1] for k in range(2, two_s))
    lin = sum(k * n[k - 1] for k in range(1, two_s))
    return 2 * pair - (two_s - 1) * lin


def _h_spin2(nu: float) -> complex:
    # time-independent part of h(nu); its t^{4i/nu} factor is added separately
    return (
        math.log(math.pi)
        + 2 * loggamma(1 + 3j / nu)
        + loggamma(1j / (4 * nu))
        - 2 * loggamma(0.5 + 1j / nu)
        - 2 * loggamma(1 + 4j / nu)
        - loggamma(math.sqrt(6) * 1j / (4 * nu))
        + 0.5j / nu * math.log(2.0 / 3.0)
    )


def _k_spin2(nu: float) -> complex:
    # time-independent part of the (N1+N3)/2 logarithm
    return (
        math.log(2 * math.sqrt(6 * math.pi) / 7)
        + loggamma(3j / nu)
        + loggamma(1 + 7j / nu)
        - loggamma(0.5 + 1j / nu)
        - loggamma(7j / nu)
        - loggamma(1 + 4j / nu)
    )


@lru_cache(maxsize=4096)
def _gamma_const(family: str, two_s: int, counts: tuple[int, ...], nu: float) -> complex:
    """Time-independent part of gamma (the omega sum)."""
    n = list(counts) + [0] * 4
    if two_s == 1:
        return 0j
    if two_s == 2:
        n1 = n[0]
        if family == "corrected":
            return -n1 * (0.5 * math.log(2 * math.pi) - loggamma(0.5 + 1j / nu) - 1j / nu * math.log(2))
        return -n1 * ((math.pi + 2j * (1 + math.log(nu))) / (2 * nu) - 1j / nu * math.log(2))
    if two_s == 3:
        m = n[0] + n[1]
        if family == "corrected":
            return -m * (
                0.5 * math.log(3 * math.pi)
                + loggamma(1 + 2j / nu)
                - loggamma(0.5 + 1j / nu)
                - loggamma(1 + 3j / nu)
            )
        return -(m / nu) * (2j * math.log(nu) + math.pi - 1j * (math.log(27 / 4) - 2))
    if two_s == 4:
        n1, n2, n3 = n[0], n[1], n[2]
        if family in ("corrected", "generalConjecture"):
            return -(n1 / 2 + n2 + n3 / 2) * _h_spin2(nu) - (n1 + n3) / 2 * _k_spin2(nu)
        return -(1 / nu) * (n1 + 4 * n2 / 3 + n3) * (
            3j * math.log(nu) + 1.5 * math.pi - 1j * (math.log(32) - 3)
        ) + 1j / nu * n2 * math.log(81 * 2 ** (1 / 3) / 64)
    raise UnsupportedSpinError(f"no closed-form gamma for s = {two_s}/2")


def gamma_weight(spec: GammaSpec, counts: Sequence[int], nu: float, t: float) -> complex:
    """gamma_{N_1..N_{2s-1}}(nu, t); extra trailing counts (N_{2s}) are ignored."""
    counts = tuple(int(c) for c in counts)[: max(spec.two_s - 1, 0)]
    a = log_t_coefficient(counts, spec.two_s)
    if spec.omega is not None and spec.family == "generalConjecture":
        const = complex(spec.omega(counts, nu))
    else:
        const = _gamma_const(spec.family, spec.two_s, counts, float(nu))
    return const + 1j * a / nu * math.log(t)


def diabatic_weight(counts: Sequence[int], two_s: int) -> float:
    """prod_q binom(2s, q)^{N_q / 2}: the nu -> infinity limit of |exp(-gamma)|."""
    return float(
        np.prod([math.comb(two_s, q) ** (c / 2) for q, c in enumerate(counts, start=1)])
    )


# ---------------------------------------------------------------------------
# the state


@dataclass
class AsymptoticState:
    state: StateVector
    counts: np.ndarray
    gamma: np.ndarray
    Lambda: np.ndarray
    log_amplitude: np.ndarray

    def records(self):
        basis = self.state.basis
        for i in range(basis.dim):
            yield {
                "partition": [list(s) for s in PartitionLabel.from_raises(basis.raises[i], basis.two_s).sets],
                "counts": [int(c) for c in self.counts[i]],
                "gamma": [self.gamma[i].real, self.gamma[i].imag],
                "Lambda": float(self.Lambda[i]),
                "amplitude": [self.state.amplitudes[i].real, self.state.amplitudes[i].imag],
            }

    def dump_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(list(self.records()), fh, indent=1)
            fh.write("\n")


def build_asymptotic_state(
    params: ModelParams,
    spec: GammaSpec | None,
    t: float,
    theta_convention: str = "general",
) -> AsymptoticState:
    """Normalized asymptotic state at time t.

    ``theta_convention='spin1-single'`` gives doubly raised spin-1 sites the phase
    -2i theta instead of -4i theta.
    """
    if theta_convention not in THETA_CONVENTIONS:
        raise ValueError(f"unknown theta convention {theta_convention!r}")
    if spec is None:
        spec = GammaSpec("corrected", params.two_s)
    if spec.two_s != params.two_s:
        raise ValueError("GammaSpec spin does not match params")
    if t <= 0:
        raise ValueError("t must be positive")
    basis = enumerate_sector(params)
    eps = np.asarray(params.epsilon, dtype=float)
    L = log_distance_matrix(eps)
    s, nu = params.s, params.nu
    q = basis.raises.astype(float)
    rank = eps_ranks(eps)

    Lam = np.einsum("ij,jk,ik->i", q, L, q) / nu
    theta = s / nu * L.sum(axis=1)
    mult = q
    if theta_convention == "spin1-single" and params.two_s == 2:
        mult = (q > 0).astype(float)
    phase = Lam - 2 * (mult @ theta) - 2 * t * (q @ eps)
    weight = -2 * s * math.pi / nu * (q @ rank)

    counts = _counts(basis.raises, params.two_s)
    cache: dict[tuple, complex] = {}
    gam = np.empty(basis.dim, dtype=complex)
    for i, row in enumerate(map(tuple, counts)):
        g = cache.get(row)
        if g is None:
            g = cache[row] = gamma_weight(spec, row, nu, t)
        gam[i] = g
    logamp = -gam + weight + 1j * phase
    amps = np.exp(logamp - logamp.real.max())
    amps /= np.linalg.norm(amps)
    k = int(np.argmax(np.abs(amps)))
    amps *= abs(amps[k]) / amps[k]
    return AsymptoticState(StateVector(basis, amps), counts, gam, Lam, logamp)


def asymptotic_weights(params: ModelParams, spec: GammaSpec | None = None) -> np.ndarray:
    """|amplitude|^2 of the asymptotic state (time independent)."""
    return build_asymptotic_state(params, spec, 1.0).state.weights
