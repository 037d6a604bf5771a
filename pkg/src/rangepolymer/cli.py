"""Command-line front end: one subcommand per theorem cluster.

Every run writes its artifacts plus a ``manifest.json`` echoing the fully
resolved configuration and the artifact version.  Outputs carry no
timestamps and floats are printed with 17 significant digits, so re-running
a manifest reproduces every byte.

Exit codes: 0 success (possibly with warnings on stderr), 1 usage,
2 domain/precondition violation, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .continuous import continuous_constants, ldp_rate_continuous_info
from .density import (
    endpoint_clt_continuous,
    partition_function_continuous,
    range_density,
    range_second_order_cdf,
)
from .discrete import free_energy_g_star, ldp_rate_discrete_info
from .errors import DomainError, ResourceCapError
from .exact import (
    EXACT_LAW_CAP,
    clt_check,
    free_energy_sequence,
    ldp_empirical,
    polymer_law,
)
from .gaussian import norm_cdf
from .mc import (
    brownian_range_mc,
    corollary_bound_check,
    flory_probe,
    polymer_estimate_tilted,
)

_F = "{:.17g}".format


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _parse_grid(text: str) -> list[float]:
    """'a:b:k' for k equispaced points, or a comma-separated list."""
    if ":" in text:
        a, b, k = text.split(":")
        count = int(k)
        if count < 1:
            raise DomainError(f"grid count must be positive, got {count}")
        lo, hi = float(a), float(b)
        if count == 1:
            return [lo]
        return [lo + (hi - lo) * i / (count - 1) for i in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_F(v) if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _finish(out: Path, command: str, params: dict, outputs: list[str]) -> int:
    _write_json(out / "manifest.json", {
        "artifact": "rangepolymer",
        "artifact_version": __version__,
        "command": command,
        "parameters": params,
        "outputs": sorted(outputs),
    })
    return 0


def _cmd_constants(args, out: Path) -> int:
    disc = free_energy_g_star(args.beta)
    cont = continuous_constants(args.beta, args.d)
    hdr = ["beta", "d", "c_star", "g_star", "sigma_star", "c_tilde_d",
           "c_dstar", "g_dstar", "sigma_dstar", "beta_tilde_d", "prefactor"]
    from .discrete import tilde_c_d
    row = [args.beta, args.d, disc.c_star, disc.g_star, disc.sigma_star,
           tilde_c_d(args.beta, args.d), cont.c_dstar, cont.g_dstar,
           cont.sigma_dstar, cont.beta_tilde_d, cont.prefactor]
    files = []
    if args.format == "csv":
        _write_csv(out / "constants.csv", hdr, [row])
        files.append("constants.csv")
    else:
        _write_json(out / "constants.json", dict(zip(hdr, row)))
        files.append("constants.json")
    return _finish(out, "constants", {"beta": args.beta, "d": args.d,
                                      "format": args.format}, files)


def _cmd_rate_curves(args, out: Path) -> int:
    thetas = _parse_grid(args.grid)
    info = ldp_rate_discrete_info if args.model == "discrete" else ldp_rate_continuous_info
    rows = []
    for theta in thetas:
        rate, branch, root = info(args.beta, theta)
        rows.append([theta, rate, branch, root])
    name = f"rate_curve_{args.model}.csv"
    _write_csv(out / name, ["theta", "rate", "branch", "aux_root"], rows)
    return _finish(out, "rate-curves", {
        "beta": args.beta, "model": args.model, "grid": thetas,
    }, [name])


def _cmd_exact(args, out: Path) -> int:
    outputs = [s.strip() for s in args.outputs.split(",") if s.strip()]
    cap = args.cap_override or EXACT_LAW_CAP
    files: list[str] = []
    law = polymer_law(args.beta, args.n, cap=cap)
    consts = free_energy_g_star(args.beta) if args.beta > 0 else None
    for kind in outputs:
        if kind == "law":
            name = f"law.{args.format}"
            (law.tilted.to_csv if args.format == "csv" else law.tilted.to_json)(out / name)
            files.append(name)
        elif kind == "Z":
            _write_json(out / "partition.json", {
                "beta": args.beta, "n": args.n,
                "log_partition": law.log_partition,
                "partition_value": law.partition_value,
            })
            files.append("partition.json")
        elif kind == "free-energy":
            ns = [int(v) for v in _parse_grid(args.n_grid)] if args.n_grid else \
                sorted({max(2, args.n // 4), max(2, args.n // 2), args.n})
            seq = free_energy_sequence(args.beta, ns, cap=cap)
            ref = consts.g_star if consts else 0.0
            _write_csv(out / "free_energy.csv",
                       ["n", "free_energy", "g_star", "error"],
                       [[n, fe, ref, fe - ref] for n, fe in seq])
            files.append("free_energy.csv")
        elif kind == "clt":
            _write_json(out / "clt.json", {
                "beta": args.beta, "n": args.n,
                "ks_distance": clt_check(args.beta, args.n, cap=cap),
                "convention": "sup",
            })
            files.append("clt.json")
        elif kind == "ldp":
            thetas = _parse_grid(args.grid) if args.grid else [0.3, 0.5, 0.7, 0.95]
            emp = ldp_empirical(args.beta, args.n, thetas, cap=cap)
            rows = []
            for theta, rate in emp:
                analytic = ldp_rate_discrete_info(args.beta, theta)[0] \
                    if args.beta > 0 else math.nan
                rows.append([theta, rate, analytic, rate - analytic])
            _write_csv(out / "ldp.csv",
                       ["theta", "empirical_rate", "analytic_rate", "difference"],
                       rows)
            files.append("ldp.csv")
        else:
            raise DomainError(f"unknown exact output {kind!r}")
    return _finish(out, "exact", {
        "beta": args.beta, "n": args.n, "outputs": outputs,
        "cap": cap, "format": args.format, "grid": args.grid,
        "n_grid": args.n_grid,
    }, files)


def _cmd_continuous(args, out: Path) -> int:
    outputs = [s.strip() for s in args.outputs.split(",") if s.strip()]
    files: list[str] = []
    cgrid = _parse_grid(args.grid) if args.grid else [-2.0, -1.0, 0.0, 1.0, 2.0]
    for kind in outputs:
        if kind == "density":
            st_ = math.sqrt(args.t)
            rs = _parse_grid(args.r_grid) if args.r_grid else \
                [0.05 * st_ + (6.0 - 0.05) * st_ * i / 120 for i in range(121)]
            rows = []
            for r in rs:
                se = range_density(args.t, r)
                rows.append([r, se.value, se.truncation_bound])
            _write_csv(out / "range_density.csv",
                       ["argument", "value", "error_bound"], rows)
            files.append("range_density.csv")
        elif kind == "Z":
            res = partition_function_continuous(
                args.beta, args.t, use_exact_radius=args.exact_radius)
            cont = continuous_constants(args.beta)
            asym = math.log(cont.prefactor) + cont.g_dstar * args.t
            _write_json(out / "partition_continuous.json", {
                "beta": args.beta, "t": args.t,
                "use_exact_radius": args.exact_radius,
                "value": res.value, "log_value": res.log_value,
                "abs_error_estimate": res.abs_error_estimate,
                "nodes": res.nodes, "domain": list(res.domain),
                "ratio_to_asymptote": math.exp(res.log_value - asym),
            })
            files.append("partition_continuous.json")
        elif kind == "range-clt":
            rows = [[c, range_second_order_cdf(args.beta, args.t, c,
                                               use_exact_radius=args.exact_radius),
                     1.0 - norm_cdf(c)] for c in cgrid]
            _write_csv(out / "range_clt.csv",
                       ["C", "tail_probability", "one_minus_phi"], rows)
            files.append("range_clt.csv")
        elif kind == "endpoint-clt":
            rows = [[c, endpoint_clt_continuous(args.beta, args.t, c,
                                                use_exact_radius=args.exact_radius),
                     norm_cdf(c)] for c in cgrid]
            _write_csv(out / "endpoint_clt.csv", ["C", "cdf", "phi"], rows)
            files.append("endpoint_clt.csv")
        else:
            raise DomainError(f"unknown continuous output {kind!r}")
    return _finish(out, "continuous", {
        "beta": args.beta, "t": args.t, "outputs": outputs,
        "exact_radius": args.exact_radius, "grid": cgrid,
        "r_grid": args.r_grid,
    }, files)


def _estimate_payload(est) -> dict:
    return {
        "mean": est.mean, "std_error": est.std_error,
        "samples": est.samples,
        "effective_sample_size": est.effective_sample_size,
        "low_ess": est.low_ess,
    }


def _cmd_mc(args, out: Path) -> int:
    files: list[str] = []
    params: dict = {"seed": args.seed, "samples": args.samples,
                    "threads": args.threads}
    warn_low_ess = None
    if args.mc_command == "tilted":
        est = polymer_estimate_tilted(
            args.beta, args.n, args.observable, args.seed, args.samples,
            threads=args.threads, c_point=args.c_point)
        _write_json(out / "estimate.json", {
            "beta": args.beta, "n": args.n, "observable": args.observable,
            **_estimate_payload(est),
        })
        files.append("estimate.json")
        params.update(beta=args.beta, n=args.n, observable=args.observable)
        warn_low_ess = est.low_ess
    elif args.mc_command == "corollary":
        rep = corollary_bound_check(args.beta, args.d, args.n, args.seed,
                                    args.samples, threads=args.threads)
        _write_json(out / "corollary.json", {
            "beta": args.beta, "d": args.d, "n": args.n,
            "bound": rep.bound, "margin": rep.margin,
            "satisfied": rep.satisfied, "unreliable": rep.unreliable,
            **_estimate_payload(rep.estimate),
        })
        files.append("corollary.json")
        params.update(beta=args.beta, d=args.d, n=args.n)
        warn_low_ess = rep.unreliable
    elif args.mc_command == "flory":
        grid = [int(v) for v in _parse_grid(args.grid)] if args.grid \
            else [50, 100, 200, 400]
        res = flory_probe(args.d, args.beta, grid, args.seed, args.samples,
                          threads=args.threads)
        _write_json(out / "flory.json", {
            "beta": args.beta, "d": args.d, "exponent": res.exponent,
            "intercept": res.intercept,
            "points": [{"n": p.n, "value": p.value, "std_error": p.std_error,
                        "effective_sample_size": p.effective_sample_size,
                        "used": p.used} for p in res.points],
        })
        files.append("flory.json")
        params.update(beta=args.beta, d=args.d, grid=grid)
        warn_low_ess = any(not p.used for p in res.points)
    elif args.mc_command == "brownian":
        hist = brownian_range_mc(args.t, args.dt, args.seed, args.samples,
                                 threads=args.threads)
        hist.to_csv(out / "histograms.csv")
        _write_json(out / "brownian.json", {
            "t": args.t, "dt": args.dt, "samples": args.samples,
            "positive_fraction": hist.positive_fraction,
            "mean_range": hist.mean_range,
        })
        files.extend(["histograms.csv", "brownian.json"])
        params.update(t=args.t, dt=args.dt)
    else:  # pragma: no cover - argparse restricts choices
        raise DomainError(f"unknown mc subcommand {args.mc_command!r}")
    if warn_low_ess:
        sys.stderr.write("warning: effective sample size below 1%; "
                         "estimates are reported but weakly supported\n")
    return _finish(out, f"mc {args.mc_command}", params, files)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rangepolymer",
                     description="Range-penalized polymer laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("RANGE_POLYMER_THREADS", "1")))

    p = sub.add_parser("constants", help="speed/free-energy/spread table")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--d", type=int, default=1)
    common(p)

    p = sub.add_parser("rate-curves", help="LDP rate-function tables")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--model", choices=("discrete", "continuous"), required=True)
    p.add_argument("--grid", default="0:1:21",
                   help="'a:b:k' or comma list of theta values")
    common(p)

    p = sub.add_parser("exact", help="exact finite-n laws and checks")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--outputs", default="law,Z",
                   help="comma list from law,Z,free-energy,clt,ldp")
    p.add_argument("--grid", default=None, help="theta grid for the ldp table")
    p.add_argument("--n-grid", default=None,
                   help="n values for the free-energy sequence")
    p.add_argument("--cap-override", type=int, default=None,
                   help="raise the exact-law size cap")
    common(p)

    p = sub.add_parser("continuous", help="continuous-model quadratures")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--outputs", default="Z",
                   help="comma list from density,Z,range-clt,endpoint-clt")
    p.add_argument("--grid", default=None, help="C grid for the CLT tables")
    p.add_argument("--r-grid", default=None, help="r values for the density curve")
    p.add_argument("--exact-radius", action="store_true",
                   help="penalize the unit-sausage volume r + 2 instead of r")
    common(p)

    p = sub.add_parser("mc", help="seeded Monte Carlo")
    mc_sub = p.add_subparsers(dest="mc_command", required=True)
    q = mc_sub.add_parser("tilted", help="importance sampling from the drifted walk")
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--observable", default="endpoint_mean_positive",
                   choices=("endpoint_mean", "endpoint_mean_positive",
                            "range_mean", "endpoint_cdf"))
    q.add_argument("--c-point", type=float, default=0.0)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--samples", type=int, required=True)
    common(q)
    q = mc_sub.add_parser("corollary", help="d >= 2 range-fraction bound check")
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--d", type=int, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--samples", type=int, required=True)
    common(q)
    q = mc_sub.add_parser("flory", help="endpoint scaling exponent probe")
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--d", type=int, default=1)
    q.add_argument("--grid", default=None, help="n grid, comma list")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--samples", type=int, required=True)
    common(q)
    q = mc_sub.add_parser("brownian", help="discretized Brownian range histograms")
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--dt", type=float, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--samples", type=int, required=True)
    common(q)

    return parser


_HANDLERS = {
    "constants": _cmd_constants,
    "rate-curves": _cmd_rate_curves,
    "exact": _cmd_exact,
    "continuous": _cmd_continuous,
    "mc": _cmd_mc,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _HANDLERS[args.command](args, out)
    except ResourceCapError as exc:
        sys.stderr.write(f"error: {exc}\n"
                         "hint: pass --cap-override to raise the limit\n")
        return 3
    except DomainError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def entrypoint() -> None:  # console-script target
    raise SystemExit(main())
