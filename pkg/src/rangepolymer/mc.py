"""Seeded Monte Carlo for the range-penalized walk and Brownian range.

Reproducibility contract: every estimator draws from counter-based Philox
streams keyed by (seed, block index) over fixed-size sample blocks, and all
reductions run in block order.  Results are therefore bit-identical for a
given (seed, samples) regardless of the number of worker threads.

The workhorse estimator is self-normalized importance sampling from the
exponentially tilted proposal: a drifted walk with up-step probability
(1 + c)/2, c = c*(beta), which is the member of the exponential family the
tilted measure concentrates on.  Log-weights combine the energy
-beta n^2 / R_n with the likelihood ratio of the drift and never leave log
space until the final normalization.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .discrete import free_energy_g_star, tilde_c_d
from .errors import DomainError

__all__ = [
    "McEstimate",
    "TiltedProposal",
    "CorollaryBoundReport",
    "FloryPoint",
    "FloryProbeResult",
    "BrownianRangeHistograms",
    "WALK_BLOCK",
    "PATH_BLOCK",
    "sample_walk",
    "polymer_estimate_tilted",
    "corollary_bound_check",
    "flory_probe",
    "brownian_range_mc",
]

WALK_BLOCK = 4096
PATH_BLOCK = 512
LOW_ESS_FRACTION = 0.01


@dataclass(frozen=True)
class McEstimate:
    """Estimate with standard error, sample count and effective sample size.

    ``low_ess`` flags effective sample sizes below 1% of the nominal count;
    the estimate is still reported but should be treated with suspicion.
    """

    mean: float
    std_error: float
    samples: int
    effective_sample_size: float
    low_ess: bool = False


@dataclass(frozen=True)
class TiltedProposal:
    """Drifted-walk proposal: steps +1 with probability (1 + c)/2."""

    c: float

    def __post_init__(self) -> None:
        if not -1.0 < self.c < 1.0:
            raise DomainError(f"drift must lie in (-1, 1), got {self.c!r}")

    @property
    def p_up(self) -> float:
        return 0.5 * (1.0 + self.c)

    @property
    def p_down(self) -> float:
        return 0.5 * (1.0 - self.c)


def _stream(seed: int, block: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _map_blocks(fn, nblocks: int, threads: int) -> list:
    """Run fn(block_index) for every block, results in block order."""
    if threads <= 1 or nblocks <= 1:
        return [fn(b) for b in range(nblocks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(nblocks)))


def sample_walk(d: int, n: int, seed: int) -> tuple[tuple[int, ...], int]:
    """One walk: endpoint S_n and the count of distinct sites among S_0..S_{n-1}.

    In d = 1 the visited sites form an interval, so the set size must equal
    max - min + 1; that identity is asserted on the sample.
    """
    if d < 1 or n < 1:
        raise DomainError(f"need d >= 1 and n >= 1, got d={d!r}, n={n!r}")
    rng = _stream(seed, 0)
    if d == 1:
        steps = np.where(rng.random(n) < 0.5, -1, 1)
        pos = np.concatenate(([0], np.cumsum(steps)))
        visited = pos[:n]
        distinct = len(set(visited.tolist()))
        span = int(visited.max()) - int(visited.min()) + 1
        assert distinct == span, "1-d visited set is not an interval"
        return (int(pos[-1]),), distinct
    dirs = _direction_table(d)
    idx = rng.integers(0, 2 * d, size=n)
    pos = np.vstack([np.zeros(d, dtype=np.int64), np.cumsum(dirs[idx], axis=0)])
    visited = {tuple(p) for p in pos[:n].tolist()}
    return tuple(int(v) for v in pos[-1]), len(visited)


def _direction_table(d: int) -> np.ndarray:
    dirs = np.zeros((2 * d, d), dtype=np.int64)
    for axis in range(d):
        dirs[2 * axis, axis] = 1
        dirs[2 * axis + 1, axis] = -1
    return dirs


def _walk_block_1d(seed: int, block: int, count: int, n: int, c: float):
    """(endpoints, ranges) for one block of drifted 1-d walks.

    The range over S_0..S_{n-1} is computed two ways on every sample - the
    interval identity max - min + 1 and a sort-based distinct count - and
    the two are asserted equal.
    """
    rng = _stream(seed, block)
    steps = np.where(rng.random((count, n)) < 0.5 * (1.0 + c), 1, -1).astype(np.int32)
    pos = np.cumsum(steps, axis=1)
    endpoints = pos[:, -1].astype(np.int64)
    if n == 1:
        return endpoints, np.ones(count, dtype=np.int64)
    prefix = pos[:, : n - 1]
    lo = np.minimum(prefix.min(axis=1), 0)
    hi = np.maximum(prefix.max(axis=1), 0)
    ranges = (hi - lo + 1).astype(np.int64)
    walked = np.concatenate([np.zeros((count, 1), dtype=np.int32), prefix], axis=1)
    walked.sort(axis=1)
    distinct = 1 + np.count_nonzero(np.diff(walked, axis=1), axis=1)
    if not np.array_equal(distinct, ranges):
        raise AssertionError("1-d visited-set size disagrees with max - min + 1")
    return endpoints, ranges


def _walk_block_nd(seed: int, block: int, count: int, n: int, d: int):
    """(endpoint norms, ranges) for one block of undrifted d-dim walks."""
    span = 2 * n + 1
    if span**d >= 2**62:
        raise DomainError(f"coordinate packing overflows for d={d}, n={n}")
    rng = _stream(seed, block)
    dirs = _direction_table(d)
    idx = rng.integers(0, 2 * d, size=(count, n))
    coords = np.cumsum(dirs[idx], axis=1)  # (count, n, d)
    visited = coords[:, : n - 1, :] if n > 1 else np.zeros((count, 0, d), np.int64)
    packed = np.zeros((count, visited.shape[1] + 1), dtype=np.int64)
    stride = 1
    for axis in range(d):
        packed[:, 1:] += (visited[:, :, axis] + n) * stride
        packed[:, 0] += n * stride  # origin
        stride *= span
    packed.sort(axis=1)
    ranges = 1 + np.count_nonzero(np.diff(packed, axis=1), axis=1)
    norms = np.sqrt(np.sum(np.square(coords[:, -1, :].astype(float)), axis=1))
    return norms, ranges.astype(np.int64)


def _collect_1d(beta, n, seed, samples, drift, threads):
    """Per-sample (endpoint, range, log-weight) arrays under the proposal."""
    nblocks = (samples + WALK_BLOCK - 1) // WALK_BLOCK

    def job(b: int):
        count = min(WALK_BLOCK, samples - b * WALK_BLOCK)
        return _walk_block_1d(seed, b, count, n, drift)

    parts = _map_blocks(job, nblocks, threads)
    e = np.concatenate([p[0] for p in parts])
    r = np.concatenate([p[1] for p in parts])
    logw = -beta * float(n) * float(n) / r
    if drift != 0.0:
        logw = logw - (
            (n + e) * 0.5 * math.log1p(drift) + (n - e) * 0.5 * math.log1p(-drift)
        )
    return e, r, logw


def _normalized_weights(logw: np.ndarray):
    shift = float(logw.max())
    w = np.exp(logw - shift)
    w /= w.sum()
    ess = 1.0 / float(np.sum(np.square(w)))
    return w, ess


def _ratio_estimate(w, f, indicator, samples, ess) -> McEstimate:
    """Self-normalized conditional mean sum(w f 1_A)/sum(w 1_A) with its
    linearized standard error."""
    wa = w * indicator
    denom = float(wa.sum())
    if denom <= 0.0:
        raise DomainError("conditioning event has zero sampled mass")
    mu = float(np.dot(wa, f)) / denom
    se = math.sqrt(float(np.sum(np.square(wa * (f - mu))))) / denom
    return McEstimate(
        mean=mu,
        std_error=se,
        samples=samples,
        effective_sample_size=ess,
        low_ess=ess < LOW_ESS_FRACTION * samples,
    )


def polymer_estimate_tilted(beta: float, n: int, observable: str, seed: int,
                            samples: int, drift: float | None = None,
                            threads: int = 1, c_point: float = 0.0) -> McEstimate:
    """Importance-sampling estimate of a tilted-measure observable.

    observable:
      "endpoint_mean"           E[S_n/n]
      "endpoint_mean_positive"  E[S_n/n | S_n > 0]
      "range_mean"              E[R_n/n]
      "endpoint_cdf"            P((S_n - c* n)/(sigma* sqrt(n)) <= c_point | S_n > 0)

    ``drift`` defaults to c*(beta) (0 at beta = 0, where the tilt is trivial
    and the estimator reduces to plain Monte Carlo).
    """
    if beta < 0.0:
        raise DomainError(f"beta must be nonnegative, got {beta!r}")
    if n < 1 or samples < 2:
        raise DomainError(f"need n >= 1 and samples >= 2, got {n!r}, {samples!r}")
    if drift is None:
        drift = 0.0 if beta == 0.0 else free_energy_g_star(beta).c_star
    TiltedProposal(drift)  # validates the range
    e, r, logw = _collect_1d(beta, n, seed, samples, drift, threads)
    if not np.all(np.isfinite(logw)):
        raise AssertionError("non-finite log-weight on valid inputs")
    w, ess = _normalized_weights(logw)
    ones = np.ones_like(w)
    if observable == "endpoint_mean":
        return _ratio_estimate(w, e / n, ones, samples, ess)
    if observable == "endpoint_mean_positive":
        return _ratio_estimate(w, e / n, (e > 0).astype(float), samples, ess)
    if observable == "range_mean":
        return _ratio_estimate(w, r / n, ones, samples, ess)
    if observable == "endpoint_cdf":
        if beta == 0.0:
            z = e / math.sqrt(n)
        else:
            consts = free_energy_g_star(beta)
            z = (e - consts.c_star * n) / (consts.sigma_star * math.sqrt(n))
        return _ratio_estimate(w, (z <= c_point).astype(float),
                               (e > 0).astype(float), samples, ess)
    raise DomainError(f"unknown observable {observable!r}")


@dataclass(frozen=True)
class CorollaryBoundReport:
    """Soft consistency report of E[R_n/n] against the threshold bound."""

    estimate: McEstimate
    bound: float
    margin: float
    satisfied: bool
    unreliable: bool


def corollary_bound_check(beta: float, d: int, n: int, seed: int,
                          samples: int, threads: int = 1,
                          slack: float = 0.05) -> CorollaryBoundReport:
    """Estimate E[R_n/n] in d >= 2 and compare with beta/(beta + log 2d).

    Proposal is the plain walk (no tilted family is available off the line),
    weights exp(-beta n^2 / R_n), self-normalized.  The check is soft:
    estimate - 3 se >= bound - slack.  An ESS collapse marks the report
    unreliable instead of failing.
    """
    if d < 2:
        raise DomainError(f"this check concerns d >= 2, got d={d!r}")
    if beta < 0.0:
        raise DomainError(f"beta must be nonnegative, got {beta!r}")
    nblocks = (samples + WALK_BLOCK - 1) // WALK_BLOCK

    def job(b: int):
        count = min(WALK_BLOCK, samples - b * WALK_BLOCK)
        return _walk_block_nd(seed, b, count, n, d)

    parts = _map_blocks(job, nblocks, threads)
    r = np.concatenate([p[1] for p in parts])
    logw = -beta * float(n) * float(n) / r
    w, ess = _normalized_weights(logw)
    est = _ratio_estimate(w, r / n, np.ones_like(w), samples, ess)
    bound = tilde_c_d(beta, d) if beta > 0.0 else 0.0
    margin = est.mean - 3.0 * est.std_error - (bound - slack)
    return CorollaryBoundReport(
        estimate=est,
        bound=bound,
        margin=margin,
        satisfied=margin >= 0.0,
        unreliable=est.low_ess,
    )


@dataclass(frozen=True)
class FloryPoint:
    n: int
    value: float
    std_error: float
    effective_sample_size: float
    used: bool


@dataclass(frozen=True)
class FloryProbeResult:
    """Least-squares endpoint-scaling exponent from log E|S_n| vs log n."""

    exponent: float
    intercept: float
    points: list[FloryPoint] = field(default_factory=list)


def flory_probe(d: int, beta: float, n_grid, seed: int, samples: int,
                threads: int = 1) -> FloryProbeResult:
    """Fit the growth exponent of E|S_n| under the tilted measure.

    d = 1 uses the drifted proposal at c*(beta); d >= 2 uses the plain walk.
    Grid points whose effective sample size collapses below 1% are dropped
    from the fit but still reported.
    """
    if d < 1:
        raise DomainError(f"need d >= 1, got {d!r}")
    points: list[FloryPoint] = []
    for k, n in enumerate(n_grid):
        n = int(n)
        sub_seed = seed + 7919 * k  # disjoint streams per grid point
        if d == 1:
            drift = 0.0 if beta == 0.0 else free_energy_g_star(beta).c_star
            e, r, logw = _collect_1d(beta, n, sub_seed, samples, drift, threads)
            f = np.abs(e).astype(float)
        else:
            nblocks = (samples + WALK_BLOCK - 1) // WALK_BLOCK

            def job(b: int, _n=n, _s=sub_seed):
                count = min(WALK_BLOCK, samples - b * WALK_BLOCK)
                return _walk_block_nd(_s, b, count, _n, d)

            parts = _map_blocks(job, nblocks, threads)
            f = np.concatenate([p[0] for p in parts])
            rr = np.concatenate([p[1] for p in parts])
            logw = -beta * float(n) * float(n) / rr
        w, ess = _normalized_weights(logw)
        est = _ratio_estimate(w, f, np.ones_like(w), samples, ess)
        points.append(FloryPoint(n, est.mean, est.std_error, ess, not est.low_ess))
    fit = [(math.log(p.n), math.log(p.value)) for p in points if p.used and p.value > 0]
    if len(fit) < 2:
        raise DomainError("fewer than two usable grid points for the exponent fit")
    slope, intercept = np.polyfit([a for a, _ in fit], [b for _, b in fit], 1)
    return FloryProbeResult(exponent=float(slope), intercept=float(intercept),
                            points=points)


@dataclass(frozen=True)
class BrownianRangeHistograms:
    """Histogram densities of the endpoint and range of discretized paths.

    Euler discretization with exact Gaussian increments; the grid range
    misses the true extremes, biasing ranges low by O(sqrt(dt)) (about
    0.012 at dt = 1e-4), which callers must budget for.
    """

    t: float
    dt: float
    seed: int
    samples: int
    range_edges: np.ndarray
    range_density: np.ndarray
    range_se: np.ndarray
    endpoint_edges: np.ndarray
    endpoint_density: np.ndarray
    endpoint_se: np.ndarray
    joint_x_edges: np.ndarray
    joint_r_edges: np.ndarray
    joint_density: np.ndarray
    joint_se: np.ndarray
    positive_fraction: float
    mean_range: float

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("kind,lo,hi,density,std_error\n")
            for lo, hi, v, s in zip(self.range_edges[:-1], self.range_edges[1:],
                                    self.range_density, self.range_se):
                fh.write(f"range,{lo:.17g},{hi:.17g},{v:.17g},{s:.17g}\n")
            for lo, hi, v, s in zip(self.endpoint_edges[:-1], self.endpoint_edges[1:],
                                    self.endpoint_density, self.endpoint_se):
                fh.write(f"endpoint,{lo:.17g},{hi:.17g},{v:.17g},{s:.17g}\n")


def brownian_range_mc(t: float, dt: float, seed: int, samples: int,
                      range_edges=None, endpoint_edges=None,
                      joint_x_edges=None, joint_r_edges=None,
                      threads: int = 1,
                      time_chunk: int = 2048) -> BrownianRangeHistograms:
    """Histogram (B_t, R_t) over discretized Brownian paths.

    Requires dt <= t / 1e4 so the discretization bias stays within the
    documented allowance.  Per-block Philox streams make the result
    reproducible for any thread count.
    """
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t!r}")
    if dt > t / 1e4:
        raise DomainError(f"dt={dt!r} too coarse; need dt <= t/1e4")
    nsteps = int(round(t / dt))
    st = math.sqrt(t)
    if range_edges is None:
        range_edges = np.linspace(0.0, 6.0 * st, 61)
    if endpoint_edges is None:
        endpoint_edges = np.linspace(-4.0 * st, 4.0 * st, 81)
    if joint_x_edges is None:
        joint_x_edges = np.linspace(0.0, 3.0 * st, 31)
    if joint_r_edges is None:
        joint_r_edges = np.linspace(0.0, 4.0 * st, 41)
    range_edges = np.asarray(range_edges, float)
    endpoint_edges = np.asarray(endpoint_edges, float)
    joint_x_edges = np.asarray(joint_x_edges, float)
    joint_r_edges = np.asarray(joint_r_edges, float)
    sd = math.sqrt(dt)
    nblocks = (samples + PATH_BLOCK - 1) // PATH_BLOCK

    def job(b: int):
        count = min(PATH_BLOCK, samples - b * PATH_BLOCK)
        rng = _stream(seed, b)
        x = np.zeros(count)
        lo = np.zeros(count)
        hi = np.zeros(count)
        left = nsteps
        while left > 0:
            L = min(time_chunk, left)
            inc = rng.normal(0.0, sd, size=(count, L))
            np.cumsum(inc, axis=1, out=inc)
            inc += x[:, None]
            np.minimum(lo, inc.min(axis=1), out=lo)
            np.maximum(hi, inc.max(axis=1), out=hi)
            x = inc[:, -1].copy()
            left -= L
        rng_vals = hi - lo
        h_r = np.histogram(rng_vals, range_edges)[0]
        h_b = np.histogram(x, endpoint_edges)[0]
        h_j = np.histogram2d(x, rng_vals, bins=(joint_x_edges, joint_r_edges))[0]
        return (h_r, h_b, h_j, int(np.count_nonzero(x > 0)), float(rng_vals.sum()))

    parts = _map_blocks(job, nblocks, threads)
    h_range = sum(p[0] for p in parts)
    h_end = sum(p[1] for p in parts)
    h_joint = sum(p[2] for p in parts)
    n_pos = sum(p[3] for p in parts)
    total_range = math.fsum(p[4] for p in parts)

    def _density(counts, widths):
        p = counts / samples
        se = np.sqrt(p * (1.0 - p) / samples)
        return p / widths, se / widths

    rw = np.diff(range_edges)
    bw = np.diff(endpoint_edges)
    rd, rse = _density(h_range, rw)
    bd, bse = _density(h_end, bw)
    area = np.outer(np.diff(joint_x_edges), np.diff(joint_r_edges))
    jp = h_joint / samples
    jd = jp / area
    jse = np.sqrt(jp * (1.0 - jp) / samples) / area
    return BrownianRangeHistograms(
        t=t, dt=dt, seed=seed, samples=samples,
        range_edges=range_edges, range_density=rd, range_se=rse,
        endpoint_edges=endpoint_edges, endpoint_density=bd, endpoint_se=bse,
        joint_x_edges=joint_x_edges, joint_r_edges=joint_r_edges,
        joint_density=jd, joint_se=jse,
        positive_fraction=n_pos / samples,
        mean_range=total_range / samples,
    )
