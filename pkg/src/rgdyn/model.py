"""Spin-s Richardson-Gaudin model restricted to a fixed-magnetization sector.

The Hamiltonian is

    H(t) = 2 sum_j eps_j s^z_j - g(t) sum_{j,k} s^+_j s^-_k,    g(t) = 1 / (nu t^alpha)

Configurations are stored as integer raise counts q_j = s^z_j + s in {0, ..., 2s}
so that half-integer spins never enter as floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import comb, sqrt
from typing import Sequence

import numpy as np
import scipy.sparse as sp


class EmptySectorError(ValueError):
    """Requested magnetization lies outside [-N s, N s]."""


class NonPositiveTimeError(ValueError):
    pass


class BasisMismatchError(ValueError):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x).limit_denominator(2)
    return Fraction(x)


@dataclass(frozen=True)
class ModelParams:
    """Physical specification of one sector of the model.

    ``jz`` may be an int, a Fraction or a float that is an exact multiple of 1/2.
    """

    N: int
    two_s: int
    jz: Fraction
    nu: float
    epsilon: tuple[float, ...]
    alpha: float = 1.0
    t_init: float = 1e-5

    def __init__(self, N, two_s, jz, nu, epsilon=None, alpha=1.0, t_init=1e-5):
        if N < 1:
            raise ValueError("N must be >= 1")
        if two_s < 1:
            raise ValueError("two_s must be >= 1")
        jz = _as_fraction(jz)
        if epsilon is None:
            epsilon = [i / N for i in range(1, N + 1)]
        epsilon = tuple(float(e) for e in epsilon)
        if len(epsilon) != N:
            raise ValueError(f"expected {N} Zeeman fields, got {len(epsilon)}")
        if not all(np.isfinite(epsilon)):
            raise ValueError("Zeeman fields must be finite")
        if not nu > 0:
            raise ValueError("nu must be positive")
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        if not t_init > 0:
            raise ValueError("t_init must be positive")
        n_plus = Fraction(N * two_s, 2) + jz
        if n_plus.denominator != 1:
            raise ValueError(f"Jz={jz} is incompatible with N={N}, s={two_s}/2")
        if abs(jz) > Fraction(N * two_s, 2):
            raise EmptySectorError(f"|Jz|={abs(jz)} exceeds N s = {Fraction(N * two_s, 2)}")
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "two_s", int(two_s))
        object.__setattr__(self, "jz", jz)
        object.__setattr__(self, "nu", float(nu))
        object.__setattr__(self, "epsilon", epsilon)
        object.__setattr__(self, "alpha", float(alpha))
        object.__setattr__(self, "t_init", float(t_init))

    @property
    def s(self) -> float:
        return self.two_s / 2

    @property
    def n_plus(self) -> int:
        """Number of raising operations above the pseudo-vacuum, N s + Jz."""
        return int(Fraction(self.N * self.two_s, 2) + self.jz)

    @property
    def eta(self) -> float:
        return self.N / self.nu

    @property
    def degenerate(self) -> bool:
        return len(set(self.epsilon)) < self.N

    def coupling(self, t: float) -> float:
        return 1.0 / (self.nu * t**self.alpha)

    def with_(self, **changes) -> "ModelParams":
        kw = dict(N=self.N, two_s=self.two_s, jz=self.jz, nu=self.nu, epsilon=self.epsilon,
                  alpha=self.alpha, t_init=self.t_init)
        kw.update(changes)
        return ModelParams(**kw)


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """All raise-count configurations with sum(q) = n_plus, in descending lexicographic order.

    Descending order in q is the same as descending order in s^z.
    """

    N: int
    two_s: int
    n_plus: int
    raises: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.raises.shape[0]

    @property
    def s(self) -> float:
        return self.two_s / 2

    @property
    def sz(self) -> np.ndarray:
        """Per-site s^z values, shape (dim, N)."""
        return self.raises - self.s

    @property
    def jz(self) -> Fraction:
        return Fraction(2 * self.n_plus - self.N * self.two_s, 2)

    @cached_property
    def codes(self) -> np.ndarray:
        radix = self.two_s + 1
        weights = radix ** np.arange(self.N - 1, -1, -1, dtype=np.int64)
        return self.raises.astype(np.int64) @ weights

    @cached_property
    def _ascending_codes(self) -> np.ndarray:
        return self.codes[::-1]

    def index_of_codes(self, codes: np.ndarray) -> np.ndarray:
        """Map mixed-radix codes to basis positions (-1 if absent)."""
        codes = np.asarray(codes, dtype=np.int64)
        pos = np.searchsorted(self._ascending_codes, codes)
        pos = np.clip(pos, 0, self.dim - 1)
        found = self._ascending_codes[pos] == codes
        return np.where(found, self.dim - 1 - pos, -1)

    def index_of(self, config: Sequence[float]) -> int:
        """Position of an s^z configuration."""
        q = np.asarray([int(round(c + self.s)) for c in config], dtype=np.int64)
        radix = self.two_s + 1
        code = int(q @ (radix ** np.arange(self.N - 1, -1, -1, dtype=np.int64)))
        idx = int(self.index_of_codes(np.array([code]))[0])
        if idx < 0:
            raise KeyError(tuple(config))
        return idx

    def config(self, index: int) -> tuple[float, ...]:
        return tuple(float(x) for x in self.sz[index])

    def same_as(self, other: "SectorBasis") -> bool:
        return (self is other) or (
            self.N == other.N and self.two_s == other.two_s and self.n_plus == other.n_plus
        )


def _compositions(N: int, qmax: int, total: int) -> np.ndarray:
    """Descending-lexicographic list of length-N tuples in [0, qmax] summing to total."""
    out: list[tuple[int, ...]] = []
    prefix: list[int] = []

    def rec(site: int, remaining: int) -> None:
        if site == N - 1:
            out.append((*prefix, remaining))
            return
        room = qmax * (N - site - 1)
        for q in range(min(qmax, remaining), max(0, remaining - room) - 1, -1):
            prefix.append(q)
            rec(site + 1, remaining - q)
            prefix.pop()

    if 0 <= total <= qmax * N:
        rec(0, total)
    return np.array(out, dtype=np.int8 if qmax < 127 else np.int64).reshape(len(out), N)


_BASIS_CACHE: dict[tuple[int, int, int], SectorBasis] = {}


def sector_basis(N: int, two_s: int, n_plus: int) -> SectorBasis:
    key = (N, two_s, n_plus)
    basis = _BASIS_CACHE.get(key)
    if basis is None:
        if not 0 <= n_plus <= N * two_s:
            raise EmptySectorError(f"n_plus={n_plus} outside [0, {N * two_s}]")
        raises = _compositions(N, two_s, n_plus)
        raises.setflags(write=False)
        basis = SectorBasis(N, two_s, n_plus, raises)
        _BASIS_CACHE[key] = basis
    return basis


def enumerate_sector(params: ModelParams) -> SectorBasis:
    return sector_basis(params.N, params.two_s, params.n_plus)


class StateVector:
    """Complex amplitudes over a sector basis."""

    __slots__ = ("basis", "amplitudes")

    def __init__(self, basis: SectorBasis, amplitudes):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (basis.dim,):
            raise ValueError(f"expected {basis.dim} amplitudes, got shape {amplitudes.shape}")
        self.basis = basis
        self.amplitudes = amplitudes

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def normalized(self) -> "StateVector":
        return StateVector(self.basis, self.amplitudes / self.norm)

    def __repr__(self) -> str:
        return f"StateVector(dim={self.basis.dim}, norm={self.norm:.6g})"


def lowering_coefficients(two_s: int) -> np.ndarray:
    """c[q] = <q-1| s^- |q> for raise count q (q = 0 gives 0)."""
    s = two_s / 2
    q = np.arange(two_s + 1)
    m = q - s
    return np.sqrt(np.maximum(s * (s + 1) - m * (m - 1), 0.0))


def lowering_operator(basis: SectorBasis) -> sp.csr_matrix:
    """J^- = sum_j s^-_j as a map from this sector to the sector with one fewer raise."""
    if basis.n_plus == 0:
        return sp.csr_matrix((0, basis.dim))
    lower = sector_basis(basis.N, basis.two_s, basis.n_plus - 1)
    coef = lowering_coefficients(basis.two_s)
    radix = basis.two_s + 1
    raises = basis.raises.astype(np.int64)
    rows, cols, vals = [], [], []
    for j in range(basis.N):
        col = np.nonzero(raises[:, j] > 0)[0]
        target = basis.codes[col] - radix ** (basis.N - 1 - j)
        rows.append(lower.index_of_codes(target))
        cols.append(col)
        vals.append(coef[raises[col, j]])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(lower.dim, basis.dim))


def zeeman_diagonal(basis: SectorBasis, epsilon: Sequence[float]) -> np.ndarray:
    """Diagonal of 2 sum_j eps_j s^z_j."""
    return 2.0 * (basis.sz @ np.asarray(epsilon, dtype=float))


_JMINUS_CACHE: dict[tuple[int, int, int], sp.csr_matrix] = {}


def _jminus(basis: SectorBasis) -> sp.csr_matrix:
    key = (basis.N, basis.two_s, basis.n_plus)
    m = _JMINUS_CACHE.get(key)
    if m is None:
        m = lowering_operator(basis)
        _JMINUS_CACHE[key] = m
    return m


class Interaction:
    """The coupling-free exchange term V = J^+ J^- on a sector, applied in factorized form."""

    def __init__(self, basis: SectorBasis):
        self.basis = basis
        self.jminus = _jminus(basis)
        self.jplus = self.jminus.T.tocsr()

    def __matmul__(self, psi: np.ndarray) -> np.ndarray:
        return self.jplus @ (self.jminus @ psi)

    def matrix(self) -> sp.csr_matrix:
        return (self.jplus @ self.jminus).tocsr()


def interaction_matrix(basis: SectorBasis) -> sp.csr_matrix:
    return Interaction(basis).matrix()


def build_hamiltonian(params: ModelParams, t: float, coupling: float | None = None) -> sp.csr_matrix:
    """Sector Hamiltonian at time t as a Hermitian CSR matrix.

    ``coupling`` overrides g(t) (use 0.0 for the Zeeman-only limit).
    """
    if not t > 0:
        raise NonPositiveTimeError(f"t must be positive, got {t}")
    basis = enumerate_sector(params)
    g = params.coupling(t) if coupling is None else coupling
    h = sp.diags(zeeman_diagonal(basis, params.epsilon)).tocsr()
    if g != 0.0:
        h = h - g * interaction_matrix(basis)
    return h.tocsr()


def ground_state_weights(basis: SectorBasis) -> np.ndarray:
    """Unnormalized amplitudes prod_j sqrt(binom(2s, q_j)) of (J^+)^{N+} |pseudo-vacuum>."""
    logb = 0.5 * np.log([comb(basis.two_s, q) for q in range(basis.two_s + 1)])
    return np.exp(logb[basis.raises].sum(axis=1))


def ground_state(params: ModelParams) -> StateVector:
    basis = enumerate_sector(params)
    amp = ground_state_weights(basis)
    return StateVector(basis, amp / np.linalg.norm(amp))


def total_spin_operators(basis: SectorBasis) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """(J^z, J^+ J^-) restricted to the sector."""
    jz = sp.identity(basis.dim, format="csr") * float(basis.jz)
    return jz, interaction_matrix(basis)


def site_expectations(state: StateVector) -> np.ndarray:
    """<s^z_j> for every site."""
    w = state.weights / np.sum(state.weights)
    return w @ state.basis.sz


def check_same_basis(a: StateVector, b: StateVector) -> None:
    if not a.basis.same_as(b.basis):
        raise BasisMismatchError("states live on different sector bases")


def dense_spin_matrices(two_s: int) -> tuple[np.ndarray, np.ndarray]:
    """Single-site (s^z, s^+) in the basis ordered by raise count q = 0..2s."""
    s = two_s / 2
    d = two_s + 1
    sz = np.diag(np.arange(d) - s)
    sp_ = np.zeros((d, d))
    for q in range(two_s):
        m = q - s
        sp_[q + 1, q] = sqrt(s * (s + 1) - m * (m + 1))
    return sz, sp_
