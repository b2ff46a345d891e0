"""Complex Gamma, Bessel J of complex order and 1F2 with complex parameters.

log-Gamma uses reflection, an upward shift of the argument and the Stirling series.
Bessel J and 1F2 are summed from their ascending series. For large arguments these
alternating series cancel badly in double precision (the largest term of 1F2 at
z = -x^2 grows like exp(3 x^(2/3))), so when the observed cancellation eats more than
a few digits the same series is re-summed in extended precision with mpmath.
"""

from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np

MAX_TERMS = 500
_SHIFT = 10.0
# B_2k / (2k (2k-1)) for k = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# re-sum in extended precision when this many digits are lost to cancellation
_CANCEL_DIGITS = 3.0


class PoleError(ValueError):
    pass


class NonConvergenceError(ArithmeticError):
    pass


def _is_nonpositive_int(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def _log_sin_pi(z: complex) -> complex:
    """A logarithm of sin(pi z), stable for large |Im z|."""
    if z.imag < 0:
        return _log_sin_pi(z.conjugate()).conjugate()
    if z.imag < 1.0:
        return cmath.log(cmath.sin(math.pi * z))
    # sin(pi z) = e^{-i pi z} (1 - e^{2 pi i z}) i/2
    return -1j * math.pi * z + cmath.log(1 - cmath.exp(2j * math.pi * z)) + cmath.log(0.5j)


def loggamma(z) -> complex:
    """A logarithm of Gamma(z); exp(loggamma(z)) == Gamma(z)."""
    z = complex(z)
    if _is_nonpositive_int(z):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    if z.real < 0.5:
        return math.log(math.pi) - _log_sin_pi(z) - loggamma(1.0 - z)
    shift = 0j
    while z.real < _SHIFT:
        shift += cmath.log(z)
        z += 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    series = 0j
    p = inv
    for c in _STIRLING:
        series += c * p
        p *= inv2
    return (z - 0.5) * cmath.log(z) - z + _HALF_LOG_2PI + series - shift


def gamma(z) -> complex:
    return cmath.exp(loggamma(z))


def rgamma(z) -> complex:
    """1/Gamma(z), zero at the poles."""
    z = complex(z)
    if _is_nonpositive_int(z):
        return 0j
    return cmath.exp(-loggamma(z))


# ---------------------------------------------------------------------------
# hypergeometric series with term ratios


def _series_double(ratio, z, start=0):
    """Sum of t_k with t_0 = 1 and t_{k+1} = t_k * ratio(k) * z.

    Returns (sum, largest |term|), or (nan, inf) if the terms overflow.
    """
    term = 1.0 + 0j
    total = term
    big = 1.0
    for k in range(start, MAX_TERMS):
        term *= ratio(k) * z
        total += term
        a = abs(term)
        if not math.isfinite(a):
            return complex(math.nan, math.nan), math.inf
        big = max(big, a)
        if a <= 1e-16 * abs(total) and abs(ratio(k + 1) * z) < 1:
            return total, big
    raise NonConvergenceError(f"series did not converge in {MAX_TERMS} terms")


def _series_mp(ratio_mp, z, dps):
    with mpmath.workdps(dps):
        z = mpmath.mpc(z)
        term = mpmath.mpc(1)
        total = mpmath.mpc(1)
        big = mpmath.mpf(1)
        eps = mpmath.mpf(10) ** -20
        for k in range(MAX_TERMS):
            term *= ratio_mp(k) * z
            total += term
            a = abs(term)
            if a > big:
                big = a
            if a <= eps * abs(total) and abs(ratio_mp(k + 1) * z) < 1:
                return complex(total), float(big / abs(total)) if total != 0 else math.inf
    raise NonConvergenceError(f"series did not converge in {MAX_TERMS} terms")


def _sum(ratio, ratio_mp, z):
    total, big = _series_double(ratio, z)
    if math.isinf(big):
        lost = 400.0
    else:
        lost = math.log10(big / abs(total)) if total != 0 else 17.0
    if lost <= _CANCEL_DIGITS:
        return total
    dps = 20 + int(lost) + 1
    for _ in range(4):
        total, cancel = _series_mp(ratio_mp, z, dps)
        need = 20 + int(math.log10(max(cancel, 1.0))) + 1
        if need <= dps:
            return total
        dps = need + 10
    return total


def hyp0f1(b, z) -> complex:
    """0F1(;b;z)."""
    b = complex(b)
    if _is_nonpositive_int(b):
        raise PoleError("0F1 parameter b is a nonpositive integer")
    bm = mpmath.mpc(b)
    return _sum(
        lambda k: 1.0 / ((b + k) * (k + 1)),
        lambda k: 1 / ((bm + k) * (k + 1)),
        complex(z),
    )


def hyp1f2(a, b1, b2, z) -> complex:
    """1F2(a; b1, b2; z) = sum_k (a)_k / ((b1)_k (b2)_k) z^k / k!."""
    a, b1, b2 = complex(a), complex(b1), complex(b2)
    if _is_nonpositive_int(b1) or _is_nonpositive_int(b2):
        raise PoleError("1F2 lower parameter is a nonpositive integer")
    am, b1m, b2m = mpmath.mpc(a), mpmath.mpc(b1), mpmath.mpc(b2)
    return _sum(
        lambda k: (a + k) / ((b1 + k) * (b2 + k) * (k + 1)),
        lambda k: (am + k) / ((b1m + k) * (b2m + k) * (k + 1)),
        complex(z),
    )


def hyp1f2_term_ratio(a, b1, b2, z, k: int) -> complex:
    """t_{k+1} / t_k of the 1F2 series."""
    return (a + k) * z / ((b1 + k) * (b2 + k) * (k + 1))


def bessel_j(order, x: float) -> complex:
    """J_order(x) for real x >= 0 from the ascending series.

    J_v(x) = (x/2)^v / Gamma(v+1) * 0F1(; v+1; -x^2/4).
    """
    x = float(x)
    if x < 0:
        raise ValueError("bessel_j needs x >= 0")
    v = complex(order)
    if x == 0.0:
        if v == 0:
            return 1.0 + 0j
        if v.real > 0:
            return 0j
        if _is_nonpositive_int(v):
            return 0j
        raise ZeroDivisionError("J_v(0) diverges for Re v <= 0, v != 0")
    if _is_nonpositive_int(v + 1):
        # integer order -n: J_{-n} = (-1)^n J_n
        n = int(round(-v.real))
        return (-1) ** n * bessel_j(n, x)
    pref = cmath.exp(v * (math.log(x) - math.log(2.0)) - loggamma(v + 1.0))
    return pref * hyp0f1(v + 1.0, -0.25 * x * x)


# array conveniences
loggamma_v = np.vectorize(loggamma, otypes=[complex])
gamma_v = np.vectorize(gamma, otypes=[complex])
