"""Architecture sizing from the convergence-rate analysis.

Depth/width formulas for driver integers ``(L, N)``::

    l = 12 L + 14
    r_f = max(4 p floor(N1^(1/p)) + 3 p, 12 d N1 + 8 d)
    r_h = max(4 d floor(N2^(1/d)) + 3 d, 12 m N2 + 8 m)

and the rate-optimal growth exponents ``m ~ n^alpha``, ``L_i ~ n^beta_i``,
``N_i ~ n^gamma_i`` with

    alpha = p / ((p+2)(d+2)),  beta1 + gamma1 = p / (2p+4),
    beta1 = beta2,             gamma1 = gamma2 + alpha.

These four equations leave one degree of freedom; it is exposed as ``beta``
(the common depth exponent, default 0 = constant depth).

Theoretical preconditions (bounded predictor support, Lipschitz regression
and reducer functions, bounded ensemble, weight bound growing like n) are
assumed, not checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .network import StructuralParams


def _positive_int(name, v):
    if int(v) != v or v < 1:
        raise ParameterError(f"{name} must be a positive integer, got {v!r}")
    return int(v)


def iroot(n, k):
    """Largest integer r with ``r**k <= n`` (exact integer arithmetic)."""
    n, k = int(n), int(k)
    if n < 0 or k < 1:
        raise ParameterError("iroot needs n >= 0 and k >= 1")
    if n < 2 or k == 1:
        return n
    lo, hi = 1, 1 << (n.bit_length() // k + 1)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid ** k <= n:
            lo = mid
        else:
            hi = mid - 1
    return lo


def round_half_up(x):
    return int(math.floor(x + 0.5))


def depth_width(L1, N1, L2, N2, p, d, m):
    """Return ``(l1, r1, l2, r2)`` for the given depth/width drivers."""
    L1, N1, L2, N2 = (_positive_int(k, v) for k, v in
                      (("L1", L1), ("N1", N1), ("L2", L2), ("N2", N2)))
    p, d, m = (_positive_int(k, v) for k, v in (("p", p), ("d", d), ("m", m)))
    l1 = 12 * L1 + 14
    r1 = max(4 * p * iroot(N1, p) + 3 * p, 12 * d * N1 + 8 * d)
    l2 = 12 * L2 + 14
    r2 = max(4 * d * iroot(N2, d) + 3 * d, 12 * m * N2 + 8 * m)
    return l1, r1, l2, r2


@dataclass(frozen=True)
class RateExponents:
    alpha: float
    beta1: float
    beta2: float
    gamma1: float
    gamma2: float

    def as_dict(self):
        return {"alpha": self.alpha, "beta1": self.beta1, "beta2": self.beta2,
                "gamma1": self.gamma1, "gamma2": self.gamma2}


def optimal_exponents(p, d, beta=0.0):
    """Rate-optimal exponents; requires ``d <= p - 2``.

    ``beta`` is the shared depth exponent; it must not exceed
    ``p / (2p+4) - alpha`` so that every exponent stays non-negative.
    """
    p, d = _positive_int("p", p), _positive_int("d", d)
    if d > p - 2:
        raise ParameterError(f"optimal rate requires d <= p - 2, got d={d}, p={p}")
    alpha = p / ((p + 2) * (d + 2))
    total = p / (2 * p + 4)
    gamma1 = total - beta
    gamma2 = gamma1 - alpha
    if beta < 0 or gamma2 < 0:
        raise ParameterError(f"beta={beta} leaves a negative exponent")
    return RateExponents(alpha, beta, beta, gamma1, gamma2)


def suggest_architecture(n, p, d, beta=0.0, b_w=None):
    """Structural parameters sized for sample size ``n``.

    Sets ``m = round(n^alpha)``, ``L_i = max(1, round(n^beta_i))``,
    ``N_i = max(1, round(n^gamma_i))`` (half-up rounding), then applies
    :func:`depth_width`. Returns ``(params, drivers)``.
    """
    n = _positive_int("n", n)
    if n < 2:
        raise ParameterError("n must be >= 2")
    ex = optimal_exponents(p, d, beta)
    m = max(1, round_half_up(n ** ex.alpha))
    L1 = max(1, round_half_up(n ** ex.beta1))
    L2 = max(1, round_half_up(n ** ex.beta2))
    N1 = max(1, round_half_up(n ** ex.gamma1))
    N2 = max(1, round_half_up(n ** ex.gamma2))
    l1, r1, l2, r2 = depth_width(L1, N1, L2, N2, p, d, m)
    params = StructuralParams.from_tuple(p, l1, r1, d, l2, r2, m, b_w=b_w)
    drivers = {"n": n, "m": m, "L1": L1, "N1": N1, "L2": L2, "N2": N2,
               "l1": l1, "r1": r1, "l2": l2, "r2": r2, "exponents": ex.as_dict()}
    return params, drivers


def rate_bound(n, p):
    """Reference curve ``n^(-2/(p+2)) log n`` (unit constant)."""
    if not n >= 2:
        raise ParameterError("n must be >= 2")
    return n ** (-2.0 / (p + 2)) * math.log(n)
