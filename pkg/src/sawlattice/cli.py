"""Command-line front end: ``sawlattice <command> [flags]``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 budget
exceeded.  Errors print one line ``sawlattice: error reason=<tag> detail=<text>``
to stderr.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import asymptotics, fourier
from .errors import BudgetExceeded, DegenerateFit, InsufficientData
from .io import config_hash, emit, read_csv_rows, render_csv, render_json
from .lattice_domain import LITERAL, MIDPOINT, StepVector, pairs, recount_table, sigma_from_x, x_from_sigma
from .mc import DEFAULT_SEED, McConfig
from .saw_enum import enumerate_saws

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

ESTIMATE_COLUMNS = ["quantity", "n", "d", "variant", "value", "std_error", "samples", "seed", "config_hash"]


class UsageError(Exception):
    def __init__(self, reason: str, detail: str):
        super().__init__(detail)
        self.reason = reason


class VerificationFailed(Exception):
    pass


def _fail(reason: str, detail: str, code: int) -> int:
    detail = " ".join(str(detail).split())
    print(f"sawlattice: error reason={reason} detail={detail}", file=sys.stderr)
    return code


def _require(cond: bool, reason: str, detail: str) -> None:
    if not cond:
        raise UsageError(reason, detail)


def _config(args: argparse.Namespace) -> dict:
    skip = {"func", "out", "inject_fault"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _mc(args) -> McConfig:
    _require(args.samples >= 32, "samples", "need --samples >= 32")
    return McConfig(samples=args.samples, seed=args.seed, stream_count=args.streams, workers=args.workers)


def _write(args, columns, rows, payload) -> None:
    cfg = _config(args)
    if args.format == "json":
        emit(render_json(payload, cfg), args.out)
    else:
        emit(render_csv(columns, rows, cfg), args.out)


def _estimate_row(quantity, args, est, variant="", n=None, d=None):
    return [
        quantity,
        args.n if n is None else n,
        args.d if d is None else d,
        variant,
        est.value,
        est.std_error,
        est.samples_used,
        args.seed,
        config_hash(_config(args)),
    ]


def _estimate_payload(rows) -> dict:
    return {"estimates": [dict(zip(ESTIMATE_COLUMNS, r)) for r in rows]}


# ---------------------------------------------------------------- commands


def cmd_enumerate(args) -> int:
    _require(args.d >= 1, "dimension", "--d must be >= 1")
    _require(args.n_max >= 0, "length", "--n-max must be >= 0")
    res = enumerate_saws(args.d, args.n_max, use_symmetry=not args.no_symmetry,
                         node_limit=args.node_limit, workers=args.workers)
    rows = []
    for n, c, s in res.rows():
        msd = Fraction(s, c)
        rows.append([n, c, s, str(msd), float(msd)])
    payload = res.to_dict()
    payload["msd"] = {str(n): str(Fraction(s, c)) for n, c, s in res.rows()}
    _write(args, ["n", "c_n", "sum_sq_end", "msd_exact", "msd"], rows, payload)
    return EXIT_OK


def cmd_recount(args) -> int:
    _require(args.d >= 1, "dimension", "--d must be >= 1")
    _require(args.n >= 0, "length", "--n must be >= 0")
    table = recount_table(args.d, args.n, node_limit=args.node_limit)
    if args.inject_fault:
        # negative control for the diff gate
        table[-1] = type(table[-1])(table[-1].n, table[-1].method, table[-1].count + 1, table[-1].elapsed_ms)
    ref = table[0].count
    rows = [[r.n, r.method, r.count, r.count - ref, round(r.elapsed_ms, 3)] for r in table]
    payload = {"rows": [dict(zip(["n", "method", "count", "diff", "elapsed_ms"], r)) for r in rows]}
    _write(args, ["n", "method", "count", "diff", "elapsed_ms"], rows, payload)
    if any(r[3] != 0 for r in rows):
        raise VerificationFailed(f"recount mismatch for d={args.d} n={args.n}")
    return EXIT_OK


def cmd_transform_check(args) -> int:
    _require(args.d >= 1, "dimension", "--d must be >= 1")
    _require(args.n >= 1, "length", "--n must be >= 1")
    rng = np.random.default_rng(args.seed)
    bad = 0
    for _ in range(args.trials):
        entries = rng.integers(-5, 6, size=args.d * args.n)
        x = StepVector(args.d, args.n, tuple(int(v) for v in entries))
        if x_from_sigma(sigma_from_x(x)) != x:
            bad += 1
    rows = [[args.d, args.n, args.trials, bad]]
    _write(args, ["d", "n", "trials", "failures"], rows,
           {"d": args.d, "n": args.n, "trials": args.trials, "failures": bad})
    if bad:
        raise VerificationFailed(f"{bad} round-trip failures")
    return EXIT_OK


def _check_nd(args, max_n: Optional[int] = None) -> None:
    _require(args.d >= 1, "dimension", "--d must be >= 1")
    _require(args.n >= 1, "length", "--n must be >= 1")
    if max_n is not None:
        _require(args.n <= max_n, "length", f"--n must be <= {max_n}")


def cmd_fourier_verify(args) -> int:
    _check_nd(args)
    _require(args.d * args.n <= 8, "dimension", "direct quadrature needs d * n <= 8")
    cfg = _mc(args)
    rng = np.random.default_rng(args.seed)
    rows = []
    failures = 0
    for j, k in pairs(args.n):
        kid = fourier.KernelId(args.n, args.d, j, k)
        exact0 = fourier.support_volume(kid)
        at0 = fourier.psi_hat_analytic(kid, np.zeros(args.d * args.n))
        ok0 = abs(at0 - exact0) <= 1e-9 * max(1.0, exact0)
        failures += not ok0
        rows.append([j, k, "zero", at0, exact0, 0.0, 0.0, ok0])
        for p in range(args.points):
            xi = rng.uniform(-args.xi_max, args.xi_max, args.d * args.n)
            a = fourier.psi_hat_analytic(kid, xi)
            q = fourier.psi_hat_quadrature(kid, xi, McConfig(**{**cfg.to_dict(), "seed": cfg.seed + p}))
            se = q["real"].std_error
            z = (q["real"].value - a) / se if se > 0 else 0.0
            ok = abs(z) <= 3.0 and abs(q["imag"].value) <= 3.0 * max(q["imag"].std_error, 1e-12)
            failures += not ok
            rows.append([j, k, p, a, q["real"].value, se, z, ok])
    cols = ["j", "k", "point", "analytic", "quadrature", "std_error", "z", "pass"]
    _write(args, cols, rows, {"rows": [dict(zip(cols, r)) for r in rows], "failures": failures})
    if failures:
        raise VerificationFailed(f"{failures} kernel checks outside the 3 sigma gate")
    return EXIT_OK


def _domain(name: str):
    return {"literal": LITERAL, "midpoint": MIDPOINT}[name]


def cmd_fourier_volume(args) -> int:
    _check_nd(args)
    est = fourier.volume_term(args.n, args.d, _mc(args), _domain(args.domain))
    rows = [_estimate_row("volume", args, est, args.domain)]
    _write(args, ESTIMATE_COLUMNS, rows, _estimate_payload(rows))
    return EXIT_OK


def cmd_fourier_truncate(args) -> int:
    _check_nd(args)
    _require(args.delta is None or args.delta > 0, "delta", "--delta must be positive")
    rep = fourier.truncated_main_integral(args.n, args.d, args.delta, _mc(args), window=args.window)
    rows = [_estimate_row("truncated_inner", args, rep.inner, fourier.DERIVED)]
    if rep.tail is not None:
        rows.append(_estimate_row("truncated_tail_window", args, rep.tail, fourier.DERIVED))
        rows.append(_estimate_row("window_total", args, rep.windowed_total, fourier.DERIVED))
        rows.append(_estimate_row("full_integral_volume", args, rep.exact_total, fourier.DERIVED))
    payload = _estimate_payload(rows)
    payload["report"] = rep.to_dict()
    _write(args, ESTIMATE_COLUMNS, rows, payload)
    return EXIT_OK


def cmd_fourier_poisson(args) -> int:
    _require(args.n == 2 and args.d == 2, "dimension", "the Poisson recount supports n = 2, d = 2 only")
    _require(args.eps > 0, "eps", "--eps must be positive")
    _require(args.vmax >= 0, "vmax", "--vmax must be >= 0")
    rep = fourier.poisson_recount(args.n, args.d, args.vmax, fourier.MollifierConfig(args.eps),
                                  _mc(args), _domain(args.domain))
    rows = [_estimate_row(f"partial_sum_v{v}", args, e, args.domain) for v, e in enumerate(rep.partial_sums)]
    rows.append(_estimate_row("smoothed_count", args, rep.smoothed_count, args.domain))
    payload = _estimate_payload(rows)
    payload["report"] = rep.to_dict()
    _write(args, ESTIMATE_COLUMNS, rows, payload)
    est = rep.estimate
    print(f"poisson estimate {est.value:.4f} +- {est.std_error:.4f} (exact count {rep.exact_count})",
          file=sys.stderr)
    return EXIT_OK


def cmd_fourier_msd(args) -> int:
    _check_nd(args, max_n=6)
    rep = fourier.msd_ratio_report(args.n, args.d, _mc(args))
    cols = ["n", "d", "exact_ratio", "exact_ratio_float", "continuum_ratio", "continuum_std_error", "seed"]
    c = rep.continuum_ratio
    rows = [[rep.n, rep.d, str(rep.exact_ratio), float(rep.exact_ratio),
             None if c is None else c.value, None if c is None else c.std_error, args.seed]]
    _write(args, cols, rows, rep.to_dict())
    return EXIT_OK


def _load_counts(path: str):
    try:
        rows = read_csv_rows(path)
    except FileNotFoundError:
        raise UsageError("input", f"no such file: {path}")
    try:
        counts = {int(r["n"]): int(r["c_n"]) for r in rows}
        sq = {int(r["n"]): int(r["sum_sq_end"]) for r in rows if r.get("sum_sq_end")}
    except (KeyError, ValueError) as exc:
        raise UsageError("input", f"malformed counts file: {exc}")
    return counts, sq


def cmd_fit(args) -> int:
    counts, sq = _load_counts(args.input)
    lo, hi = args.n_min, args.n_max
    fixed = asymptotics.fit_nienhuis(counts, (lo, hi))
    free = asymptotics.fit_nienhuis(counts, (lo, hi), free_exponent=True)
    env = asymptotics.hammersley_welsh_envelope(counts, free.params["mu"])
    ok, witnesses = asymptotics.check_submultiplicative(counts)
    payload = {
        "nienhuis_fixed": fixed.to_dict(),
        "nienhuis_free": free.to_dict(),
        "envelope": env.to_dict(),
        "submultiplicative": ok,
        "violations": witnesses,
        "kesten": asymptotics.kesten_ratios(counts),
    }
    rows = [["nienhuis_fixed", "mu", fixed.params["mu"]], ["nienhuis_fixed", "A", fixed.params["A"]],
            ["nienhuis_free", "mu", free.params["mu"]], ["nienhuis_free", "exponent", free.params["exponent"]],
            ["envelope", "c", env.params["c"]]]
    if len(sq) == len(counts):
        msd = {n: sq[n] / counts[n] for n in counts if n >= 1}
        flory = asymptotics.fit_flory(msd, (lo, hi))
        payload["flory"] = flory.to_dict()
        rows.append(["flory", "slope", flory.params["slope"]])
    if args.plot_data:
        emit(render_csv(["n", "c_n", "root", "kesten_ratio", "msd", "msd_over_n2"],
                        [list(r.values()) for r in asymptotics.plot_rows(counts, sq)], _config(args)),
             args.plot_data)
    _write(args, ["model", "param", "value"], rows, payload)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _common(p: argparse.ArgumentParser, fmt_default: str = "csv") -> None:
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], default=fmt_default)
    p.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")


def _mc_flags(p: argparse.ArgumentParser, samples: int) -> None:
    p.add_argument("--samples", type=int, default=samples, help="Monte Carlo sample budget")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--streams", type=int, default=8, help="independent RNG substreams")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sawlattice", description="Self-avoiding walk counting toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="exact c_n and endpoint sums")
    p.add_argument("--d", type=int, default=2, help="lattice dimension")
    p.add_argument("--n-max", type=int, required=True, help="longest walk length")
    p.add_argument("--no-symmetry", action="store_true", help="enumerate every first step instead of one")
    p.add_argument("--node-limit", type=int, default=50_000_000, help="search-tree node budget")
    _common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("recount", help="x-form and sigma-form recounts against enumeration")
    p.add_argument("--d", type=int, default=2, help="lattice dimension")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--node-limit", type=int, default=20_000_000, help="lattice point budget")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    _common(p)
    p.set_defaults(func=cmd_recount)

    p = sub.add_parser("transform-check", help="sigma/x round trip on random integer vectors")
    p.add_argument("--d", type=int, default=2, help="lattice dimension")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--trials", type=int, default=10_000, help="random vectors to test")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _common(p)
    p.set_defaults(func=cmd_transform_check)

    fp = sub.add_parser("fourier", help="Fourier-side kernels and estimates")
    fsub = fp.add_subparsers(dest="action", required=True)

    p = fsub.add_parser("verify", help="analytic kernels against quadrature")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2, help="lattice dimension")
    p.add_argument("--points", type=int, default=20, help="random frequencies per kernel")
    p.add_argument("--xi-max", type=float, default=0.5, help="frequencies drawn from [-xi_max, xi_max]")
    _mc_flags(p, 100_000)
    _common(p)
    p.set_defaults(func=cmd_fourier_verify)

    p = fsub.add_parser("volume", help="continuum volume of the constraint domain")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2, help="lattice dimension")
    p.add_argument("--domain", choices=["literal", "midpoint"], default="literal", help="boundary thresholds")
    _mc_flags(p, 400_000)
    _common(p)
    p.set_defaults(func=cmd_fourier_volume)

    p = fsub.add_parser("truncate", help="kernel convolution integral near zero frequency")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2, help="lattice dimension")
    p.add_argument("--delta", type=float, default=None, help="inner radius (default min(1/(2n), first zero bound))")
    p.add_argument("--window", type=float, default=None, help="outer radius of the tail window (default 2*delta)")
    _mc_flags(p, 400_000)
    _common(p)
    p.set_defaults(func=cmd_fourier_truncate)

    p = fsub.add_parser("poisson", help="truncated Poisson sum recount of c_2")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2, help="lattice dimension")
    p.add_argument("--vmax", type=int, default=6, help="largest frequency index |v|_inf kept")
    p.add_argument("--eps", type=float, default=0.08, help="Gaussian mollifier width")
    p.add_argument("--domain", choices=["literal", "midpoint"], default="midpoint", help="boundary thresholds")
    _mc_flags(p, 400_000)
    _common(p)
    p.set_defaults(func=cmd_fourier_poisson)

    p = fsub.add_parser("msd", help="exact MSD next to the continuum ratio")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2, help="lattice dimension")
    _mc_flags(p, 200_000)
    _common(p)
    p.set_defaults(func=cmd_fourier_msd)

    p = sub.add_parser("fit", help="growth and displacement fits from a counts CSV")
    p.add_argument("--input", required=True, help="counts CSV written by enumerate")
    p.add_argument("--n-min", type=int, default=4, help="smallest n in the fit")
    p.add_argument("--n-max", type=int, default=10, help="largest n in the fit")
    p.add_argument("--plot-data", help="also write plot-ready CSV here")
    _common(p, fmt_default="json")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if getattr(args, "workers", 1) < 1:
            raise UsageError("workers", "--workers must be >= 1")
        return args.func(args)
    except UsageError as exc:
        return _fail(exc.reason, str(exc), EXIT_USAGE)
    except VerificationFailed as exc:
        return _fail("verification", str(exc), EXIT_VERIFY)
    except BudgetExceeded as exc:
        return _fail("budget", str(exc), EXIT_BUDGET)
    except (InsufficientData, DegenerateFit) as exc:
        return _fail("data", str(exc), EXIT_USAGE)
    except ValueError as exc:
        return _fail("value", str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
