"""Closed-form constants of the continuous (Brownian) range-penalized model.

The Brownian path is tilted by exp(-beta * t^2 / R), R being the range (or
the unit sausage volume R + 2).  Every constant is explicit:

    J(x)        = x^2 / 2                       range rate function
    c**(beta)   = beta^(1/3)                    endpoint speed
    g**(beta)   = -(3/2) beta^(2/3)             free energy
    sigma**     = 1/sqrt(3)                     CLT spread
    prefactor   = 8/sqrt(3)                     in Z_t ~ prefactor * e^{g** t}
    beta~_d     = (beta / w_{d-1})^(1/3) / 2    small-range cutoff, w = unit-ball volume

plus the two-branch endpoint-velocity rate function J^beta, whose auxiliary
root solves the cubic 4 r^3 - 2 theta r^2 = beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, SolverError
from .roots import RootResult

__all__ = [
    "ContinuousConstants",
    "rate_J",
    "rate_J_prime",
    "unit_ball_volume",
    "continuous_constants",
    "positive_cubic_root",
    "ldp_rate_continuous",
    "ldp_rate_continuous_info",
    "laplace_exponent_coeffs",
]

_CBRT = getattr(math, "cbrt", lambda v: v ** (1.0 / 3.0))


@dataclass(frozen=True)
class ContinuousConstants:
    """Explicit constants of the continuous model at one beta.

    For d >= 2 only ``beta_tilde_d`` and ``free_energy_bound`` (the
    d-dimensional free-energy lower-bound exponent -(3/2)(beta/w_{d-1})^{2/3})
    carry meaning; the remaining fields are the d = 1 constants.
    """

    beta: float
    c_dstar: float
    g_dstar: float
    sigma_dstar: float
    prefactor: float
    beta_tilde_d: float
    free_energy_bound: float


def rate_J(x: float) -> float:
    """Brownian range rate function J(x) = x^2 / 2 for x >= 0."""
    if x < 0.0:
        raise DomainError(f"rate_J is defined on [0, inf), got {x!r}")
    return 0.5 * x * x


def rate_J_prime(x: float) -> float:
    """J'(x) = x."""
    if x < 0.0:
        raise DomainError(f"rate_J_prime is defined on [0, inf), got {x!r}")
    return float(x)


def unit_ball_volume(k: int) -> float:
    """Volume of the unit ball in k dimensions; w_0 = 1 by convention.

    Uses the recurrence w_k = w_{k-2} * 2 pi / k, exact in closed form.
    """
    if k < 0:
        raise DomainError(f"dimension must be nonnegative, got {k!r}")
    if k == 0:
        return 1.0
    if k == 1:
        return 2.0
    return unit_ball_volume(k - 2) * 2.0 * math.pi / k


def continuous_constants(beta: float, d: int = 1) -> ContinuousConstants:
    """All explicit constants at one beta (see the type docstring for d >= 2)."""
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    c = _CBRT(beta)
    w = unit_ball_volume(d - 1)
    ratio = _CBRT(beta / w)
    return ContinuousConstants(
        beta=beta,
        c_dstar=c,
        g_dstar=-1.5 * c * c,
        sigma_dstar=1.0 / math.sqrt(3.0),
        prefactor=8.0 / math.sqrt(3.0),
        beta_tilde_d=0.5 * ratio,
        free_energy_bound=-1.5 * ratio * ratio,
    )


def positive_cubic_root(beta: float, theta: float = 0.0) -> RootResult:
    """Unique positive root of 4 r^3 - 2 theta r^2 - beta = 0.

    Newton iteration from r0 = max(theta, (beta/4)^(1/3)).  The polynomial is
    increasing and convex on r > theta/3 and the root exceeds theta/2, so the
    first step overshoots past the root and the iterates then decrease
    monotonically onto it; no bracketing or Cardano branch logic is needed.
    """
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if theta < 0.0:
        raise DomainError(f"theta must be nonnegative, got {theta!r}")

    def p(r: float) -> float:
        return ((4.0 * r - 2.0 * theta) * r) * r - beta

    r = max(theta, _CBRT(0.25 * beta))
    if r <= 0.0:
        r = _CBRT(0.25 * beta)
    iters = 0
    for _ in range(100):
        iters += 1
        fr = p(r)
        d = (12.0 * r - 4.0 * theta) * r
        step = fr / d
        r_new = r - step
        if r_new == r:
            break
        r = r_new
        if abs(step) <= 1e-16 * r:
            break
    resid = p(r)
    scale = max(1.0, beta)
    if abs(resid) > 1e-11 * scale:
        raise SolverError(f"cubic root residual {resid!r} at r={r!r} (beta={beta!r}, theta={theta!r})")
    # certify a tight sign-changing bracket around the converged point
    lo, hi = r, r
    width = max(1e-15, 4.0 * abs(r) * 1e-16)
    for _ in range(60):
        lo, hi = r - width, r + width
        if p(lo) < 0.0 < p(hi):
            break
        width *= 4.0
    return RootResult(r, resid, iters, (lo, hi))


def _g_dstar(beta: float) -> float:
    c = _CBRT(beta)
    return -1.5 * c * c


def ldp_rate_continuous(beta: float, theta: float) -> float:
    """Two-branch endpoint-velocity rate J^beta(theta) on [0, inf).

    beta/theta + J(theta) + g**(beta) for theta >= (beta/2)^(1/3); below the
    threshold the positive cubic root r of beta = 2 r^2 (2r - theta) replaces
    theta, giving beta/r + J(2r - theta) + g**(beta).  Zero exactly at the
    speed beta^(1/3).
    """
    return ldp_rate_continuous_info(beta, theta)[0]


def ldp_rate_continuous_info(beta: float, theta: float) -> tuple[float, str, float]:
    """Rate plus branch id ("boundary" or "interior") and auxiliary root."""
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if theta < 0.0:
        raise DomainError(f"theta must be nonnegative, got {theta!r}")
    g = _g_dstar(beta)
    threshold = _CBRT(0.5 * beta)
    if theta >= threshold:
        return beta / theta + 0.5 * theta * theta + g, "boundary", float(theta)
    r = positive_cubic_root(beta, theta).value
    x = 2.0 * r - theta
    return beta / r + 0.5 * x * x + g, "interior", r


def laplace_exponent_coeffs(beta: float, order: int) -> list[float]:
    """Taylor coefficients of c |-> -(beta/c + c^2/2) about c = beta^(1/3).

    Returns [a_0, ..., a_order]: a_0 = -(3/2) beta^(2/3), a_1 = 0,
    a_2 = -3/2, and a_k = (-1)^(k+1) beta^((2-k)/3) for k >= 3 (the geometric
    tail of -beta/c; the quadratic term ends the contribution of -c^2/2).
    """
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if order < 2:
        raise DomainError(f"order must be at least 2, got {order!r}")
    c = _CBRT(beta)
    coeffs = [-1.5 * c * c, 0.0, -1.5]
    for k in range(3, order + 1):
        coeffs.append((-1.0) ** (k + 1) * beta ** ((2.0 - k) / 3.0))
    return coeffs
