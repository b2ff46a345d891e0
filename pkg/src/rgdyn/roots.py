"""Time-dependent Richardson equations and continuation of their roots.

For g(t) = 1/(nu t) the saddle points of the contour-integral solution satisfy

    nu t + w sum_j 1/(lambda_p - eps_j) = sum_{k != p} 1/(lambda_p - lambda_k)

with w = 1 for the spin-1 problem. At large t every root sits next to a pole:
a singly raised site k carries lambda = eps_k - 1/(nu t), a doubly raised site
carries the pair lambda = eps_k - (1 +- i)/(2 nu t).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .asymptotics import PartitionLabel
from .model import ModelParams

ROOT_TOL = 1e-10
MAX_HALVINGS = 12
MAX_NEWTON = 60
TAGS = ("single", "pairedPlus", "pairedMinus")


class CoincidentRootsError(ValueError):
    pass


class ContinuationError(RuntimeError):
    """Newton continuation failed; ``last_good_t`` is the last accepted time."""

    def __init__(self, msg: str, last_good_t: float, partial: "RootTrajectory | None" = None):
        super().__init__(f"{msg} (last accepted t = {last_good_t:.6g})")
        self.last_good_t = last_good_t
        self.partial = partial


def _check_distinct(lam: np.ndarray, eps: np.ndarray) -> None:
    d = lam[:, None] - lam[None, :]
    np.fill_diagonal(d, 1.0)
    if np.any(d == 0):
        raise CoincidentRootsError("two roots coincide")
    if np.any(lam[:, None] - eps[None, :] == 0):
        raise CoincidentRootsError("a root sits on a pole eps_j")


def _offdiag_inverse(lam: np.ndarray) -> np.ndarray:
    """1/(lambda_p - lambda_k) with zeros on the diagonal."""
    d = lam[:, None] - lam[None, :]
    np.fill_diagonal(d, 1.0)
    inv = 1.0 / d
    np.fill_diagonal(inv, 0.0)
    return inv


def richardson_residual(lambdas, params: ModelParams, t: float, spin_weight: float = 1.0) -> np.ndarray:
    """LHS - RHS of the Richardson equation for every root."""
    lam = np.asarray(lambdas, dtype=complex)
    eps = np.asarray(params.epsilon, dtype=float)
    _check_distinct(lam, eps)
    return params.nu * t + spin_weight * (1.0 / (lam[:, None] - eps[None, :])).sum(axis=1) - _offdiag_inverse(lam).sum(axis=1)


def scaled_residual(lambdas, params: ModelParams, t: float, spin_weight: float = 1.0) -> float:
    """max_p |residual_p| / (1 + nu t).

    Near a pole the equation balances terms of size nu t, so the absolute residual of
    a root that is off by delta is about (nu t)^2 delta. Dividing by 1 + nu t gives
    a measure that vanishes like 1/t for the large-t ansatz.
    """
    r = richardson_residual(lambdas, params, t, spin_weight)
    return float(np.max(np.abs(r)) / (1.0 + params.nu * t))


def _jacobian(lam: np.ndarray, eps: np.ndarray, w: float) -> np.ndarray:
    inv2 = _offdiag_inverse(lam) ** 2
    J = -inv2.copy()
    diag = -w * (1.0 / (lam[:, None] - eps[None, :]) ** 2).sum(axis=1) + inv2.sum(axis=1)
    np.fill_diagonal(J, diag)
    return J


def newton_solve(
    lam0,
    params: ModelParams,
    t: float,
    spin_weight: float = 1.0,
    tol: float = ROOT_TOL,
    max_iter: int = MAX_NEWTON,
) -> tuple[np.ndarray, float]:
    """Damped Newton iteration; the scaled residual never increases between iterates.

    Returns (roots, scaled residual) or raises ContinuationError.
    """
    eps = np.asarray(params.epsilon, dtype=float)
    lam = np.asarray(lam0, dtype=complex).copy()
    scale = 1.0 + params.nu * t

    def norm(x):
        try:
            return float(np.max(np.abs(richardson_residual(x, params, t, spin_weight)))) / scale
        except CoincidentRootsError:
            return math.inf

    res = norm(lam)
    for _ in range(max_iter):
        if res <= tol:
            return lam, res
        F = richardson_residual(lam, params, t, spin_weight)
        try:
            step = np.linalg.solve(_jacobian(lam, eps, spin_weight), -F)
        except np.linalg.LinAlgError:
            break
        damp = 1.0
        while damp > 1e-4:
            trial = lam + damp * step
            r = norm(trial)
            if r < res:
                lam, res = trial, r
                break
            damp *= 0.5
        else:
            break
    if res <= tol:
        return lam, res
    raise ContinuationError(f"Newton did not converge at t={t:.6g} (residual {res:.3g})", math.nan)


@dataclass(frozen=True)
class RootClass:
    pole: int  # 1-based site index
    tag: str

    @property
    def label(self) -> str:
        return f"{self.tag}@{self.pole}"


def ansatz_roots(params: ModelParams, partition: PartitionLabel, t: float) -> tuple[np.ndarray, list[RootClass]]:
    """Large-t seed roots and their classification for a spin-1 partition."""
    if params.two_s != 2:
        raise NotImplementedError("root continuation is implemented for s = 1")
    if partition.n_plus != params.n_plus:
        raise ValueError("partition is not in the requested sector")
    eps = params.epsilon
    x = 1.0 / (params.nu * t)
    lam: list[complex] = []
    cls: list[RootClass] = []
    singles = partition.sets[0]
    doubles = partition.sets[1] if len(partition.sets) > 1 else ()
    for k in singles:
        lam.append(eps[k - 1] - x)
        cls.append(RootClass(k, "single"))
    for k in doubles:
        lam.append(eps[k - 1] - (1 + 1j) * x / 2)
        cls.append(RootClass(k, "pairedPlus"))
        lam.append(eps[k - 1] - (1 - 1j) * x / 2)
        cls.append(RootClass(k, "pairedMinus"))
    return np.array(lam, dtype=complex), cls


@dataclass
class RootTrajectory:
    times: np.ndarray
    roots: np.ndarray  # (len(times), N_+)
    classification: list[RootClass]
    residuals: np.ndarray
    tolerance: float = ROOT_TOL

    def scaled_offsets(self, params: ModelParams) -> np.ndarray:
        """t (lambda_p - eps_pole) for every stored time and root."""
        poles = np.array([params.epsilon[c.pole - 1] for c in self.classification])
        return self.times[:, None] * (self.roots - poles[None, :])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "p", "re", "im", "class"])
            for t, row in zip(self.times, self.roots):
                for p, (lam, c) in enumerate(zip(row, self.classification), start=1):
                    w.writerow([f"{t:.17g}", p, f"{lam.real:.17g}", f"{lam.imag:.17g}", c.label])


def continue_roots(
    params: ModelParams,
    partition: PartitionLabel,
    t_grid: Sequence[float],
    spin_weight: float = 1.0,
    tol: float = ROOT_TOL,
) -> RootTrajectory:
    """Track the roots of one partition over t_grid, seeded at its largest time.

    Between grid points the step in ln t is halved on Newton failure, up to
    MAX_HALVINGS times. Each new point is predicted by linear extrapolation in ln t.
    """
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or np.any(ts <= 0) or np.any(np.diff(ts) <= 0):
        raise ValueError("t_grid must be positive and strictly increasing")
    seed, cls = ansatz_roots(params, partition, ts[-1])
    lam, res = newton_solve(seed, params, ts[-1], spin_weight, tol)
    out = [lam]
    resid = [res]
    prev = None  # (ln t, roots) of the previous accepted point
    cur = (math.log(ts[-1]), lam)
    r = res

    def partial():
        n = len(out)
        return RootTrajectory(ts[::-1][:n][::-1].copy(), np.array(out[::-1]), cls, np.array(resid[::-1]), tol)

    for target in ts[-2::-1]:
        x_target = math.log(target)
        while cur[0] > x_target:
            h = cur[0] - x_target
            for _ in range(MAX_HALVINGS + 1):
                x_new = cur[0] - h
                if prev is not None:
                    slope = (cur[1] - prev[1]) / (cur[0] - prev[0])
                    guess = cur[1] + slope * (x_new - cur[0])
                else:
                    guess = cur[1]
                try:
                    sol, r = newton_solve(guess, params, math.exp(x_new), spin_weight, tol)
                    break
                except (ContinuationError, CoincidentRootsError):
                    h *= 0.5
            else:
                raise ContinuationError("continuation stalled", math.exp(cur[0]), partial())
            prev, cur = cur, (x_new, sol)
        out.append(cur[1])
        resid.append(r)
    return partial()


def write_roots_csv(path, trajectories: Sequence[RootTrajectory]) -> None:
    """All trajectories in one file; ``p`` counts roots across trajectories."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "p", "re", "im", "class"])
        offset = 0
        for tr in trajectories:
            for t, row in zip(tr.times, tr.roots):
                for p, (lam, c) in enumerate(zip(row, tr.classification), start=offset + 1):
                    w.writerow([f"{t:.17g}", p, f"{lam.real:.17g}", f"{lam.imag:.17g}", c.label])
            offset += len(tr.classification)
