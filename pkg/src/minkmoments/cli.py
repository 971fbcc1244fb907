"""Command-line front end.

Exit codes: 0 success, 1 invalid configuration, 2 verification failure,
3 non-convergence, 4 resource or precision limit.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import mpmath as mp

from . import __version__
from .analytic import EntireMomentEvaluator, taylor_at_zero
from .asymptotics import (
    AsymptoticModel,
    binomial_tail,
    error_series,
    fit_improved_model,
    lambda_const,
    lambda_routes,
    rho_const,
)
from .engine import (
    BACKENDS,
    EngineConfig,
    MomentVector,
    apply_T,
    compute_moments,
    load_checkpoint,
    save_checkpoint,
)
from .errors import CheckpointError, NonConvergenceError, PrecisionError, ResourceLimitError
from .negative import asymptotic_negative, identity_suite, m_negative, matrix_pair
from .stern import moment_oracle_table
from .stern_means import alpha_const, beta_estimate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_NONCONVERGENCE = 3
EXIT_RESOURCE = 4

# per-command defaults used when neither a checkpoint nor explicit options are given
PLAIN_DEFAULTS = {"order": 400, "digits": 40, "backend": "simple", "ext": None}
REFERENCE_DEFAULTS = {"order": 500, "digits": 60, "backend": "bootstrap", "ext": 1000}

ASYMPT_CSV_HEADER = ["n", "sqrt_n", "m_n", "model", "kappa", "E0", "Ehalf", "Eint"]
FIGURE_CSV_HEADER = ["n", "sqrt_n", "E0", "Ehalf", "Eint"]


class ConfigError(Exception):
    """Invalid command-line configuration (exit code 1)."""


class VerificationFailure(Exception):
    """A verification suite reported a failed check (exit code 2)."""

    def __init__(self, message, payload):
        super().__init__(message)
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _dec(x, digits: int) -> str:
    if isinstance(x, (int, Fraction)):
        return str(x)
    return mp.nstr(x, digits, strip_zeros=False) if not isinstance(x, mp.mpc) else mp.nstr(x, digits)


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise ConfigError(f"range must look like A:B, got {text!r}") from None
    if lo > hi:
        raise ConfigError("range start exceeds its end")
    return lo, hi


def _engine_config(args, defaults: dict) -> EngineConfig:
    explicit = any(getattr(args, k) is not None for k in ("order", "digits", "backend", "ext"))
    base = PLAIN_DEFAULTS if explicit else defaults
    order = args.order if args.order is not None else base["order"]
    digits = args.digits if args.digits is not None else base["digits"]
    backend = args.backend or base["backend"]
    ext = args.ext if args.ext is not None else (base["ext"] if backend == "bootstrap" else None)
    try:
        return EngineConfig(order, digits, M=ext, backend=backend, max_iter=args.iters)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _run_engine(cfg: EngineConfig, model_kind: str = "Sint") -> MomentVector:
    model = AsymptoticModel.for_bootstrap(model_kind, cfg.dps) if cfg.backend == "bootstrap" else None
    return compute_moments(cfg, model=model)


def _moments(args, defaults: dict) -> tuple[MomentVector, dict]:
    if args.checkpoint:
        mv = load_checkpoint(args.checkpoint)
        config = dict(mv.diagnostics.get("config") or {})
        config["checkpoint"] = str(args.checkpoint)
    else:
        cfg = _engine_config(args, defaults)
        mv = _run_engine(cfg)
        config = cfg.as_dict()
    if not mv.converged:
        raise NonConvergenceError(
            f"fixed point not reached: step {mp.nstr(mv.step, 5)} after {mv.iterations} sweeps", mv
        )
    return mv, config


def _emit(args, payload=None, text: str | None = None) -> None:
    if text is None:
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# commands


def cmd_compute(args) -> int:
    cfg = _engine_config(args, PLAIN_DEFAULTS)
    mv = _run_engine(cfg, args.model)
    out = args.out or "moments.json"
    save_checkpoint(mv, out)
    d = cfg.digits
    with mv.context():
        tail = binomial_tail(1, mv.N, lambda_const(mv)) if mv.N >= 1 else mp.mpf(0)
        check = mp.fsum(mv.values) + tail - mp.mpf(5) / 2
        summary = {
            "command": "compute",
            "config": cfg.as_dict(),
            "checkpoint": str(out),
            "iterations": mv.iterations,
            "step": mp.nstr(mv.step, 6),
            "converged": mv.converged,
            "error_estimate": mp.nstr(mv.error_estimate, 6),
            "m_1": _dec(mv[1], d) if mv.N >= 1 else None,
            "sum_check": {"sum_plus_tail_minus_5/2": mp.nstr(check, 6), "tail": mp.nstr(tail, 6)},
        }
        for key in ("lambda", "epsilon", "error_bound", "checking_order"):
            if key in mv.diagnostics:
                v = mv.diagnostics[key]
                summary[key] = v if isinstance(v, int) else mp.nstr(v, 20)
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    if not mv.converged:
        sys.stderr.write(
            f"non-convergence: step {mp.nstr(mv.step, 5)} above 1e-{d} after {mv.iterations} sweeps\n"
        )
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def _verify_identities(mv: MomentVector) -> dict:
    report = identity_suite(mv)
    pair = matrix_pair(30)
    out = report.as_dict(12)
    out["matrix_inverse_d30"] = pair.product_is_identity()
    out["passed"] = report.passed and out["matrix_inverse_d30"]
    return out


def _verify_spectral(mv: MomentVector) -> dict:
    ones = [Fraction(1)] * (min(mv.N, 64) + 1)
    image = apply_T(ones, tail_constant=1)
    slots_ok = image[0] == 1 and all(x == Fraction(1, 2) for x in image[1:])
    with mv.context():
        again = apply_T(mv.values, tail_constant=0)
        drift = max(abs(a - b) for a, b in zip(again, mv.values))
        limit = 10 * mv.error_estimate
    return {
        "T_of_ones": [str(x) for x in image[:4]] + ["..."],
        "norm_slots_ok": slots_ok,
        "fixed_point_drift": mp.nstr(drift, 6),
        "drift_limit": mp.nstr(limit, 6),
        "passed": bool(slots_ok and drift <= limit),
    }


def _verify_oracle(mv: MomentVector, level: int) -> dict:
    nmax = min(64, mv.N)
    brackets = moment_oracle_table(nmax, level)
    with mv.context():
        slack = mv.error_estimate
        failures = [b.n for b in brackets if not b.contains(mv[b.n], slack)]
    return {
        "level": level,
        "orders": nmax + 1,
        "slack": mp.nstr(slack, 6),
        "failures": failures,
        "passed": not failures,
    }


def _default_asymptotic_range(mv: MomentVector) -> tuple[int, int]:
    # plain runs are only accurate well inside the order; bootstrap runs to the end
    if mv.backend.startswith("bootstrap"):
        return max(2, mv.N // 2), mv.N
    return max(2, mv.N // 4), max(2, mv.N // 2)


def _verify_asymptotic(mv: MomentVector, n_range) -> dict:
    lo, hi = n_range
    with mv.context():
        lam = lambda_const(mv)
        rho = rho_const(mv)
        diag = error_series(mv.values, (lo, hi), lam=lam, dps=mv.dps)
        ratio = max(abs(r.m / (lam * r.S0) - 1) for r in diag.rows)
        routes = lambda_routes(mv.values, mv.dps)
        spread = max(routes.values()) - min(routes.values())
        rho_gap = abs(rho * mp.sqrt(2) - lam)
        ok = ratio < mp.mpf("1e-2") and rho_gap < mp.mpf("1e-8")
        return {
            "range": [lo, hi],
            "lambda": _dec(lam, 30),
            "lambda_route_spread": mp.nstr(spread, 6),
            "rho_sqrt2_minus_lambda": mp.nstr(rho_gap, 6),
            "max_ratio_deviation": mp.nstr(ratio, 6),
            "passed": bool(ok),
        }


def cmd_verify(args) -> int:
    defaults = REFERENCE_DEFAULTS if args.suite == "asymptotic" else PLAIN_DEFAULTS
    mv, config = _moments(args, defaults)
    if args.suite == "identities":
        result = _verify_identities(mv)
    elif args.suite == "spectral":
        result = _verify_spectral(mv)
    elif args.suite == "oracle":
        result = _verify_oracle(mv, args.level)
    else:
        n_range = _parse_range(args.range) if args.range else _default_asymptotic_range(mv)
        if n_range[1] > mv.N or n_range[0] < 2:
            raise ConfigError(f"range {n_range} outside 2..{mv.N}")
        result = _verify_asymptotic(mv, n_range)
    payload = {"command": "verify", "suite": args.suite, "config": config, "result": result}
    if not result["passed"]:
        raise VerificationFailure(f"verify {args.suite}: check failed", payload)
    _emit(args, payload)
    return EXIT_OK


def _series_range(args, mv: MomentVector, default) -> tuple[int, int]:
    lo, hi = _parse_range(args.range) if args.range else default
    if lo < 2 or hi > mv.N:
        raise ConfigError(f"range {lo}:{hi} outside the checkpoint orders 2..{mv.N}")
    return lo, hi


def cmd_asympt(args) -> int:
    mv, config = _moments(args, REFERENCE_DEFAULTS)
    lo, hi = _series_range(args, mv, (100, min(400, mv.N)))
    digits = mv.digits
    with mv.context():
        lam = lambda_const(mv)
        diag = error_series(mv.values, (lo, hi), lam=lam, dps=mv.dps)
        fit = fit_improved_model(mv.values, (lo, hi), lam=lam, dps=mv.dps)

        def model_value(r):
            if args.model == "S0":
                return lam * r.S0
            if args.model == "Shalf":
                return lam * r.Shalf
            if args.model == "Sint":
                return lam * r.Sint
            return lam * r.Sint + fit.a * (r.S0 - r.Sint) + fit.b * (r.Squarter - r.Sint)

        if args.csv or args.format == "csv":
            rows = [
                [r.n, _dec(r.sqrt_n, digits), _dec(r.m, digits), _dec(model_value(r), digits),
                 _dec(r.kappa, digits), _dec(r.E0, digits), _dec(r.Ehalf, digits), _dec(r.Eint, digits)]
                for r in diag.rows
            ]
            text = _csv_text(ASYMPT_CSV_HEADER, rows)
            if args.csv:
                with open(args.csv, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            else:
                _emit(args, text=text)
                return EXIT_OK
        payload = {
            "command": "asympt",
            "config": config,
            "model": args.model,
            "range": [lo, hi],
            "lambda": {k: _dec(v, digits) for k, v in lambda_routes(mv.values, mv.dps).items()},
            "rho": _dec(rho_const(mv), digits),
            "fit": {"a": _dec(fit.a, 15), "b": _dec(fit.b, 15),
                    "rms_before": mp.nstr(fit.rms_before, 6), "rms_after": mp.nstr(fit.rms_after, 6)},
            "rms": {k: mp.nstr(diag.rms(k), 6) for k in ("E0", "Ehalf", "Eint")},
            "sign_changes": {k: diag.sign_changes(k) for k in ("E0", "Ehalf", "Eint")},
        }
        if args.csv:
            payload["csv"] = str(args.csv)
    _emit(args, payload)
    return EXIT_OK


def cmd_figure1(args) -> int:
    mv, _ = _moments(args, REFERENCE_DEFAULTS)
    lo, hi = _series_range(args, mv, (100, 400))
    digits = mv.digits
    with mv.context():
        diag = error_series(mv.values, (lo, hi), dps=mv.dps)
        rows = [[r.n, _dec(r.sqrt_n, digits), _dec(r.E0, digits), _dec(r.Ehalf, digits), _dec(r.Eint, digits)]
                for r in diag.rows]
    _emit(args, text=_csv_text(FIGURE_CSV_HEADER, rows))
    return EXIT_OK


def cmd_negative(args) -> int:
    mv, config = _moments(args, PLAIN_DEFAULTS)
    if not 1 <= args.n <= mv.N:
        raise ConfigError(f"--n must lie in 1..{mv.N}")
    digits = mv.digits
    with mv.context():
        lam = lambda_const(mv)
        values = []
        for k in range(1, args.n + 1):
            v = m_negative(k, mv)
            values.append({
                "n": k,
                "m_neg": _dec(v, digits),
                "asymptotic_ratio": mp.nstr(v / asymptotic_negative(k, lam), 15),
            })
        report = identity_suite(mv, lam=lam)
    payload = {
        "command": "negative",
        "config": config,
        "negative_moments": values,
        "identities": report.as_dict(12),
    }
    _emit(args, payload)
    return EXIT_OK


def _parse_z(text: str):
    try:
        return mp.mpmathify(complex(text.replace("i", "j"))) if "j" in text or "i" in text else mp.mpf(text)
    except ValueError:
        raise ConfigError(f"cannot parse z={text!r}") from None


def cmd_mz(args) -> int:
    if (args.z is None) == (args.taylor is None):
        raise ConfigError("give exactly one of --z or --taylor")
    mv, config = _moments(args, PLAIN_DEFAULTS)
    digits = mv.digits
    payload = {"command": "mz", "config": config}
    with mv.context():
        if args.z is not None:
            z = _parse_z(args.z)
            res = EntireMomentEvaluator(mv).evaluate(z)
            payload.update({
                "z": args.z,
                "value": _dec(res.value, digits),
                "route": res.route,
                "tail_bound": mp.nstr(res.tail_bound, 6),
                "moment_error": mp.nstr(res.moment_error, 6),
            })
        else:
            if not 0 <= args.taylor <= 12:
                raise ConfigError("--taylor must lie in 0..12")
            T = taylor_at_zero(mv, args.taylor)
            payload.update({
                "taylor_order": args.taylor,
                "coefficients": [_dec(d, digits) for d in T.coefficients],
                "tails": [mp.nstr(t, 6) for t in T.tails],
            })
    _emit(args, payload)
    return EXIT_OK


def cmd_stern_mean(args) -> int:
    if args.levels < 4:
        raise ConfigError("--levels must be at least 4")
    if args.checkpoint or any(getattr(args, k) is not None for k in ("order", "digits", "backend", "ext")):
        mv, config = _moments(args, PLAIN_DEFAULTS)
        with mv.context():
            alpha = alpha_const(mv)
        est = beta_estimate(args.levels, alpha=alpha)
    else:
        config = {"alpha_source": "order 200, 30 digits"}
        est = beta_estimate(args.levels)
    payload = {"command": "stern-mean", "config": config, "levels": args.levels, **est.as_dict()}
    _emit(args, payload)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--digits", type=int, help="decimal digits of the moment run")
    common.add_argument("--order", type=int, help="truncation order N")
    common.add_argument("--ext", type=int, help="extension order M (bootstrap backend only)")
    common.add_argument("--backend", choices=BACKENDS, help="fixed-point backend")
    common.add_argument("--iters", type=int, help="iteration cap")
    common.add_argument("--out", help="output path (stdout if omitted; checkpoint path for compute)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--checkpoint", help="read moments from this checkpoint instead of computing")

    parser = _Parser(prog="minkmoments", description="Moments of the question-mark measure.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", parents=[common], help="run the fixed-point iteration")
    p.add_argument("--model", choices=("S0", "Shalf", "Sint"), default="Sint",
                   help="extension model for the bootstrap backend")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    p.add_argument("suite", choices=("identities", "spectral", "oracle", "asymptotic"))
    p.add_argument("--level", type=int, default=22, help="oracle Riemann-sum level")
    p.add_argument("--range", help="A:B index range for the asymptotic suite")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("asympt", parents=[common], help="asymptotic constants and error table")
    p.add_argument("--model", choices=("S0", "Shalf", "Sint", "improved"), default="Sint")
    p.add_argument("--range", help="A:B index range (default 100:400)")
    p.add_argument("--csv", help="also write the per-n table to this CSV path")
    p.set_defaults(func=cmd_asympt)

    p = sub.add_parser("negative", parents=[common], help="negative moments and identity suite")
    p.add_argument("--n", type=int, required=True, help="largest order K of m_-1..m_-K")
    p.set_defaults(func=cmd_negative)

    p = sub.add_parser("mz", parents=[common], help="m_z at real or complex z, or Taylor data at 0")
    p.add_argument("--z", help="argument, e.g. 0.5, -3 or 1+2j")
    p.add_argument("--taylor", type=int, help="order J of the expansion at 0")
    p.set_defaults(func=cmd_mz)

    p = sub.add_parser("stern-mean", parents=[common], help="Stern block log-means, alpha and beta")
    p.add_argument("--levels", type=int, default=22, help="largest block level")
    p.set_defaults(func=cmd_stern_mean)

    p = sub.add_parser("figure1", parents=[common], help="normalized asymptotic errors as CSV")
    p.add_argument("--range", help="A:B index range (default 100:400)")
    p.set_defaults(func=cmd_figure1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VerificationFailure as exc:
        _emit(args, exc.payload)
        sys.stderr.write(f"verification failure: {exc}\n")
        return EXIT_VERIFY
    except NonConvergenceError as exc:
        sys.stderr.write(f"non-convergence: {exc}\n")
        return EXIT_NONCONVERGENCE
    except (ResourceLimitError, PrecisionError) as exc:
        sys.stderr.write(f"resource limit: {exc}\n")
        return EXIT_RESOURCE
    except (ConfigError, CheckpointError, ValueError) as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
