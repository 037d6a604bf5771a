"""Brownian range densities and the quadratures built on them.

The range R_t = max B - min B over [0, t] has the classical alternating
series density

    f(r) = (8/sqrt(t)) sum_{k>=1} (-1)^(k-1) k^2 phi(k r / sqrt(t)),

which converges uniformly only away from r = 0; callers must stay above a
configurable floor r >= a sqrt(t).  The joint density of (B_t, R_t) on
{0 < x < r, B_t > 0} is the two-sum expression obtained from the mixed
derivative of the two-barrier corridor probability; both series terminate
quickly because every term carries a Gaussian factor phi((2kr +- x)/sqrt(t)).

The tilt exp(-beta t^2 / rho) is integrated against these densities with
composite Gauss-Legendre panels (width ~ sqrt(t)/4 near the saddle
beta^(1/3) t).  rho = r + 2 is the exact unit-sausage radius; rho = r is the
surrogate used by the free-energy computation - the two free energies agree
in the limit while the partition functions themselves keep a constant ratio
exp(2 beta^(1/3)).  Quadrature integrands are assembled in log space: the
leading Gaussian e^{-r^2/2t} is folded into the tilt exponent together with
exp(-g** t), so no factor overflows or underflows at any t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .continuous import continuous_constants
from .errors import DomainError
from .gaussian import SQRT2PI

__all__ = [
    "SeriesEval",
    "QuadratureResult",
    "DEFAULT_FLOOR",
    "range_density",
    "range_density_grid",
    "joint_density",
    "joint_density_grid",
    "partition_function_continuous",
    "range_second_order_cdf",
    "endpoint_clt_continuous",
    "small_range_weight_bound",
]

DEFAULT_FLOOR = 0.05


@dataclass(frozen=True)
class SeriesEval:
    """Series value with a rigorous truncation bound and the term count."""

    value: float
    truncation_bound: float
    terms_used: int


@dataclass(frozen=True)
class QuadratureResult:
    """Integral value, error estimate from panel refinement, and the domain.

    ``log_value`` stays finite when ``value`` itself would underflow (the
    partition function decays like exp(g** t)).
    """

    value: float
    abs_error_estimate: float
    nodes: int
    domain: tuple[float, float]
    log_value: float


def _check_floor(t: float, r: float, floor: float) -> None:
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t!r}")
    if not r > 0.0:
        raise DomainError(f"r must be positive, got {r!r}")
    if r < floor * math.sqrt(t):
        raise DomainError(
            f"r={r!r} below the uniform-convergence floor {floor!r}*sqrt(t); "
            "restrict the integration domain instead of evaluating here"
        )


def range_density(t: float, r: float, tol: float = 1e-12,
                  floor: float = DEFAULT_FLOOR) -> SeriesEval:
    """Density of the Brownian range at r, with an alternating-tail bound.

    Terms are summed until they have started to decrease and drop below
    ``tol`` relative to the running sum; the reported truncation bound is
    the first omitted term (valid for alternating series once the terms
    decrease monotonically).
    """
    _check_floor(t, r, floor)
    sqrt_t = math.sqrt(t)
    u = r / sqrt_t
    scale = 8.0 / sqrt_t
    total = 0.0
    prev = math.inf
    k = 0
    while True:
        k += 1
        term = k * k * math.exp(-0.5 * (k * u) ** 2) / SQRT2PI
        total += term if k % 2 else -term
        if term < prev and term <= tol * max(1.0, abs(total)):
            break
        if k >= 100000:
            break
        prev = term
    nxt = (k + 1) ** 2 * math.exp(-0.5 * ((k + 1) * u) ** 2) / SQRT2PI
    return SeriesEval(value=scale * total, truncation_bound=scale * nxt, terms_used=k)


def _range_series_scaled(t: float, r: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """f_R(r) * exp(r^2 / 2t) * sqrt(t) / 8: every term is bounded by k^2.

    Term k is k^2 exp(-(k^2 - 1) r^2 / 2t) / sqrt(2 pi); the k = 1 Gaussian
    has been pulled out so the caller can fold it into a larger exponent.
    """
    r = np.asarray(r, dtype=float)
    q = np.square(r) / (2.0 * t)
    total = np.zeros_like(q)
    prev = np.full_like(q, np.inf)
    active = np.ones(q.shape, dtype=bool)
    k = 0
    while active.any() and k < 100000:
        k += 1
        term = np.where(active, k * k * np.exp(-(k * k - 1.0) * q) / SQRT2PI, 0.0)
        total += term if k % 2 else -term
        done = (term < prev) & (term <= tol * np.maximum(1.0, np.abs(total)))
        active &= ~done
        prev = term
    return total


def range_density_grid(t: float, r: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """Vectorized range density; caller is responsible for the domain floor."""
    r = np.asarray(r, dtype=float)
    return 8.0 / math.sqrt(t) * np.exp(-np.square(r) / (2.0 * t)) \
        * _range_series_scaled(t, r, tol)


def _joint_series_scaled(t: float, x: np.ndarray, r: np.ndarray,
                         tol: float = 1e-13):
    """Joint density times exp(r^2 / 2t), term exponents all nonpositive.

    For 0 < x < r every Gaussian argument satisfies (2kr -+ x)^2 >= r^2, so
    scaling by exp(r^2/2t) keeps each term bounded; the k = 1 contribution is
    O(1) and the blocks decay geometrically.  Returns (value, remainder
    bound with a conservative factor 10, terms used).
    """
    st = math.sqrt(t)
    t32 = t * st
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    base = np.square(r) / (2.0 * t)
    shape = np.broadcast(x, r).shape
    s_sym = np.zeros(shape)
    s_asym = np.zeros(shape)
    k = 0
    block_max = math.inf
    while k < 100000:
        k += 1
        am = 2.0 * k * r - x
        ap = 2.0 * k * r + x
        em = np.exp(base - np.square(am) / (2.0 * t)) / SQRT2PI
        ep = np.exp(base - np.square(ap) / (2.0 * t)) / SQRT2PI
        zm2 = np.square(am) / t
        zp2 = np.square(ap) / t
        s_sym += 4.0 * k * k * ((zm2 - 1.0) * em + (zp2 - 1.0) * ep)
        s_asym += (4.0 * k * (k - 1) * am * em - 4.0 * k * (k + 1) * ap * ep) / t32
        block_max = float(np.max(4.0 * k * k * (zm2 + 1.0) * em))
        if block_max <= tol * max(1.0, float(np.max(np.abs(s_sym)))):
            break
    value = (r - x) / t32 * s_sym + s_asym
    return value, 10.0 * block_max, k


def joint_density(t: float, x: float, r: float, tol: float = 1e-12,
                  floor: float = DEFAULT_FLOOR) -> SeriesEval:
    """Joint density of (B_t in dx, R_t in dr, B_t > 0) at 0 < x < r."""
    if not 0.0 < x < r:
        raise DomainError(f"need 0 < x < r, got x={x!r}, r={r!r}")
    _check_floor(t, r, floor)
    val, bound, terms = _joint_series_scaled(t, np.array([x]), np.array([r]), tol)
    damp = math.exp(-r * r / (2.0 * t))
    return SeriesEval(value=float(val[0]) * damp, truncation_bound=bound * damp,
                      terms_used=terms)


def joint_density_grid(t: float, x: np.ndarray, r: np.ndarray,
                       tol: float = 1e-13) -> np.ndarray:
    """Vectorized joint density (shapes broadcast); no domain checks."""
    r = np.asarray(r, dtype=float)
    val, _, _ = _joint_series_scaled(t, x, r, tol)
    return val * np.exp(-np.square(r) / (2.0 * t))


@lru_cache(maxsize=32)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def _panels(a: float, b: float, max_width: float, order: int):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    xs, ws = _leggauss(order)
    count = max(1, int(math.ceil((b - a) / max(max_width, 1e-300))))
    edges = np.linspace(a, b, count + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (half[:, None] * xs[None, :] + mid[:, None]).ravel(), \
        (half[:, None] * ws[None, :]).ravel()


def small_range_weight_bound(beta: float, t: float,
                             use_exact_radius: bool = False) -> float:
    """Upper bound on the tilt weight over the excluded region r < cutoff.

    The weight is monotone in r, so the whole small-range contribution to the
    partition function is at most exp(-beta t^2 / rho(cutoff)), which equals
    exp(-2 beta^(2/3) t) for the surrogate radius.
    """
    cut = 0.5 * continuous_constants(beta).c_dstar * t
    rho = cut + 2.0 if use_exact_radius else cut
    return math.exp(-beta * t * t / rho)


def _z_domain(beta: float, t: float, floor: float) -> tuple[float, float]:
    c = continuous_constants(beta).c_dstar
    r_lo = 0.5 * c * t
    if r_lo < floor * math.sqrt(t):
        raise DomainError(
            f"cutoff {r_lo!r} below the series floor {floor!r}*sqrt(t); "
            "increase t or beta"
        )
    return r_lo, c


def _tilt_exponent(beta: float, t: float, r: np.ndarray, g: float,
                   use_exact_radius: bool) -> np.ndarray:
    """-beta t^2/rho - r^2/2t - g** t: nonpositive near the saddle, bounded."""
    rho = r + 2.0 if use_exact_radius else r
    return -beta * t * t / rho - np.square(r) / (2.0 * t) - g * t


def _tilted_range_integral(beta: float, t: float, r_lo: float, r_hi: float,
                           use_exact_radius: bool, width: float, order: int,
                           tol: float) -> tuple[float, int, float]:
    """Integral of f_R(r) exp(-beta t^2/rho - g** t) dr, extending r_hi."""
    g = continuous_constants(beta).g_dstar
    nodes_used = 0

    def chunk(a: float, b: float) -> float:
        nonlocal nodes_used
        X, W = _panels(a, b, width, order)
        nodes_used += len(X)
        series = _range_series_scaled(t, X)
        ex = np.exp(_tilt_exponent(beta, t, X, g, use_exact_radius))
        return 8.0 / math.sqrt(t) * float(np.dot(W, series * ex))

    acc = chunk(r_lo, r_hi)
    step = max(width * 4.0, 0.25 * (r_hi - r_lo))
    quiet = 0
    hi = r_hi
    while quiet < 2 and hi < r_lo + 60.0 * (r_hi - r_lo):
        extra = chunk(hi, hi + step)
        acc += extra
        hi += step
        quiet = quiet + 1 if abs(extra) <= tol * abs(acc) else 0
    return acc, nodes_used, hi


def partition_function_continuous(beta: float, t: float,
                                  use_exact_radius: bool = False,
                                  tol: float = 1e-9,
                                  order: int = 16,
                                  floor: float = DEFAULT_FLOOR) -> QuadratureResult:
    """Quadrature of the tilted range density: Z_t = E exp(-beta t^2 / rho).

    Integrates from the cutoff beta^(1/3) t / 2 and extends the upper limit
    until the tail contributes below ``tol`` relative to the total.  The
    error estimate is the change under halving the panel width.  The omitted
    small-range region is bounded by ``small_range_weight_bound``.
    """
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    r_lo, c = _z_domain(beta, t, floor)
    r_hi = 4.0 * c * t
    width = 0.25 * math.sqrt(t)
    coarse, n1, hi1 = _tilted_range_integral(
        beta, t, r_lo, r_hi, use_exact_radius, width, order, tol)
    fine, n2, hi2 = _tilted_range_integral(
        beta, t, r_lo, r_hi, use_exact_radius, 0.5 * width, order, tol)
    g = continuous_constants(beta).g_dstar
    log_value = math.log(fine) + g * t if fine > 0.0 else -math.inf
    err_scaled = abs(fine - coarse)
    return QuadratureResult(
        value=fine * math.exp(g * t),
        abs_error_estimate=err_scaled * math.exp(g * t),
        nodes=n1 + n2,
        domain=(r_lo, max(hi1, hi2)),
        log_value=log_value,
    )


def range_second_order_cdf(beta: float, t: float, C: float,
                           use_exact_radius: bool = False,
                           order: int = 16,
                           floor: float = DEFAULT_FLOOR) -> float:
    """Tail probability of the normalized range under the tilted measure.

    Returns P(C < (R_t - beta^(1/3) t) / (sqrt(t)/sqrt(3))), which tends to
    1 - Phi(C); exactly 1.0 when the threshold falls below the integration
    cutoff.
    """
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    r_lo, c = _z_domain(beta, t, floor)
    r_hi = 4.0 * c * t
    width = 0.125 * math.sqrt(t)
    den, _, _ = _tilted_range_integral(beta, t, r_lo, r_hi, use_exact_radius,
                                       width, order, 1e-10)
    thr = c * t + C * math.sqrt(t) / math.sqrt(3.0)
    if thr <= r_lo:
        return 1.0
    num, _, _ = _tilted_range_integral(beta, t, thr, max(r_hi, thr + math.sqrt(t)),
                                       use_exact_radius, width, order, 1e-10)
    return min(num / den, 1.0)


def endpoint_clt_continuous(beta: float, t: float, C: float,
                            use_exact_radius: bool = False,
                            order: int = 16,
                            floor: float = DEFAULT_FLOOR) -> float:
    """Conditional CDF P((B_t - c** t)/(sigma** sqrt(t)) <= C | B_t > 0).

    Two-dimensional weighted quadrature of the joint density against the
    tilt, over the saddle window in r; the x integral runs over the gap
    s = r - x, where the joint mass concentrates on the scale t/r.  The
    numerator clips x at the CLT threshold; the denominator is unclipped.
    """
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    r_lo, c = _z_domain(beta, t, floor)
    r_hi = 4.0 * c * t
    st = math.sqrt(t)
    g = continuous_constants(beta).g_dstar
    x_cut = c * t + C * st / math.sqrt(3.0)
    R, WR = _panels(r_lo, r_hi, 0.25 * st, order)
    num = 0.0
    den = 0.0
    for r_val, w_r in zip(R, WR):
        weight = w_r * math.exp(
            float(_tilt_exponent(beta, t, np.float64(r_val), g, use_exact_radius)))
        gap_scale = min(t / r_val, st)
        s_max = min(r_val, 30.0 * t / r_val + 4.0 * st)
        S, WS = _panels(0.0, s_max, 0.5 * gap_scale, order)
        xv = r_val - S
        keep = xv > 0.0
        if not keep.any():
            continue
        h_scaled, _, _ = _joint_series_scaled(t, xv[keep], np.float64(r_val))
        contrib = h_scaled * WS[keep]
        den += weight * float(contrib.sum())
        below = xv[keep] <= x_cut
        if below.any():
            num += weight * float(contrib[below].sum())
    if den <= 0.0:
        raise DomainError("empty quadrature window; increase t or lower the floor")
    return num / den
