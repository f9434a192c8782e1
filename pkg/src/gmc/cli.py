"""Command-line entry point.

Exit codes: 0 on success, 1 when a computation rejects its arguments or
fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import bounds, harness
from .distributions import ConeSpec, bernoulli_threshold_instance, central_norm, from_literal, mean
from .reports import dumps, runs_csv
from .streams import DEFAULT_SEED
from .tuner import Accuracy, expected_cost_bound, plan_default, plan_moment
from .two_stage import estimate_mean, integrate, uniform_points

SUBCOMMANDS = ("estimate", "integrate", "params", "bounds", "experiment", "adversary")


class UsageError(Exception):
    pass


def _q_value(s: str) -> float:
    if s.lower() in ("inf", "infinity"):
        return math.inf
    return float(s)


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _add_cone(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--p", type=float, required=required, help="lower norm index, >= 1")
    p.add_argument("--q", type=_q_value, required=required, help="upper norm index (> p, or 'inf')")
    p.add_argument("--K", type=float, required=required, help="cone constant, > 1")


def _add_acc(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--eps", type=float, required=required, help="absolute error tolerance")
    p.add_argument("--delta", type=float, required=required, help="failure probability")


def _add_output(p: argparse.ArgumentParser, formats=("json",)):
    p.add_argument("--out", type=Path, help="write output here instead of stdout")
    p.add_argument("--format", choices=formats, default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmc", description="Two-stage Monte Carlo mean estimation on cones.")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser("params", help="print the stage plan for a cone and accuracy")
    _add_cone(p)
    _add_acc(p)
    p.add_argument("--rho1", type=float, help="mean absolute deviation for the expected-cost bound")
    p.add_argument("--variant", choices=("default", "moment"), default="default")
    _add_output(p)

    p = sub.add_parser("bounds", help="print lower bounds for a cone and accuracy")
    _add_cone(p)
    _add_acc(p)
    p.add_argument("--sigma", type=float, help="standard-deviation radius (q >= 2 bound)")
    p.add_argument("--tau", type=float, help="central L_q radius (q <= 2 bound)")
    _add_output(p)

    p = sub.add_parser("estimate", help="estimate the mean of a distribution literal")
    p.add_argument("--dist", required=True, help='JSON literal, e.g. \'{"kind":"normal","mu":0,"sigma":1}\'')
    _add_cone(p)
    _add_acc(p)
    p.add_argument("--seed", type=_u64, default=DEFAULT_SEED)
    p.add_argument("--lane", type=int, default=0)
    _add_output(p)

    p = sub.add_parser("integrate", help="integrate an expression in x over the unit cube")
    p.add_argument("--integrand", required=True, help="numpy expression in x, e.g. 'x**2'")
    p.add_argument("--dim", type=_positive_int, default=1)
    _add_cone(p)
    _add_acc(p)
    p.add_argument("--seed", type=_u64, default=DEFAULT_SEED)
    p.add_argument("--lane", type=int, default=0)
    _add_output(p)

    p = sub.add_parser("experiment", help="run a seeded experiment from a JSON config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--seed", type=_u64, help="override the config's master seed")
    p.add_argument("--reps", type=_positive_int, help="override the replication count")
    _add_output(p, formats=("json", "csv"))

    p = sub.add_parser("adversary", help="construct a lower-bound adversary")
    p.add_argument("--kind", choices=("variance", "qnorm", "heavy", "bernoulli"), required=True)
    _add_cone(p, required=False)
    _add_acc(p, required=False)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--a", type=float)
    p.add_argument("--scale", type=float, default=1.0)
    _add_output(p)
    return parser


def parse(argv) -> argparse.Namespace:
    """Parse and validate ``argv``; usage problems raise ``SystemExit(2)``."""
    parser = build_parser()
    argv = list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        parser.exit(2, "gmc: error: a subcommand is required\n")
    ns = parser.parse_args(argv)
    try:
        _validate(ns)
    except UsageError as e:
        parser.exit(2, f"gmc {ns.subcommand}: error: {e}\n")
    return ns


def _validate(ns):
    if getattr(ns, "K", None) is not None and not ns.K > 1:
        raise UsageError("K must exceed 1")
    if getattr(ns, "p", None) is not None and not ns.p >= 1:
        raise UsageError("p must be >= 1")
    if getattr(ns, "p", None) is not None and ns.q is not None and not ns.p < ns.q:
        raise UsageError("need p < q")
    if getattr(ns, "eps", None) is not None and not ns.eps > 0:
        raise UsageError("eps must be positive")
    if getattr(ns, "delta", None) is not None and not 0 < ns.delta < 1:
        raise UsageError("delta must lie in (0, 1)")
    if ns.subcommand == "adversary":
        need = {"variance": ("K", "alpha"), "qnorm": ("p", "q", "K", "eps"),
                "heavy": ("a",), "bernoulli": ("p", "q", "K")}[ns.kind]
        missing = [f"--{n}" for n in need if getattr(ns, n) is None]
        if missing:
            raise UsageError(f"--kind {ns.kind} requires {', '.join(missing)}")


def _cone(ns) -> ConeSpec:
    return ConeSpec(ns.p, ns.q, ns.K)


def _cmd_params(ns):
    acc = Accuracy(ns.eps, ns.delta)
    cone = _cone(ns)
    plan = plan_moment(cone, acc) if ns.variant == "moment" else plan_default(cone, acc)
    out = plan.to_dict()
    out["n1"] = plan.n1
    out["cone"] = {"p": cone.p, "q": cone.q, "K": cone.K}
    out["epsilon"], out["delta"] = ns.eps, ns.delta
    out["rho1"] = ns.rho1
    out["expected_cost_bound"] = None if ns.rho1 is None else expected_cost_bound(plan, ns.rho1)
    return out


def _cmd_bounds(ns):
    cone = _cone(ns)
    out = {
        "cone": {"p": cone.p, "q": cone.q, "K": cone.K},
        "epsilon": ns.eps,
        "delta": ns.delta,
        "fixed_cost_lb": bounds.fixed_cost_lb(cone, ns.delta),
        "warnings": [],
    }
    if ns.sigma is not None:
        if cone.q < 2:
            raise ValueError("the bounded-variance bound needs q >= 2")
        out["wor_lb_variance"] = bounds.wor_lb_variance(ns.sigma, ns.eps, ns.delta, cone.K)
    if ns.tau is not None:
        if cone.q > 2:
            raise ValueError("the bounded L_q-norm bound needs q <= 2")
        out["wor_lb_qnorm"] = bounds.wor_lb_qnorm(ns.tau, ns.eps, ns.delta, cone.p, cone.q, cone.K)
        out["c_qK"] = bounds.c_qK(cone.q, cone.K)
        if cone.K < 2:
            out["warnings"].append(
                "c_qK tends to 0 as K -> 1; the L_q-ball bound is weak for small K")
    return out


def _cmd_estimate(ns):
    dist = from_literal(json.loads(ns.dist))
    rec = estimate_mean(dist, _cone(ns), ns.eps, ns.delta, ns.seed, ns.lane)
    return rec.to_dict()


_SAFE_NAMES = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "log1p", "sqrt", "abs", "where",
                 "minimum", "maximum", "pi", "e", "arctan", "tanh", "cosh", "sinh", "floor")
}


def compile_integrand(expr: str):
    code = compile(expr, "<integrand>", "eval")
    bad = set(code.co_names) - set(_SAFE_NAMES) - {"x"}
    if bad:
        raise UsageError(f"integrand uses unsupported names: {sorted(bad)}")

    def f(x):
        return eval(code, {"__builtins__": {}}, {**_SAFE_NAMES, "x": x})

    return f


def _cmd_integrate(ns):
    f = compile_integrand(ns.integrand)

    def g(x):
        y = np.asarray(f(x.T if x.ndim > 1 else x), dtype=float)
        return np.broadcast_to(y, (x.shape[0],))

    rec = integrate(g, uniform_points(ns.dim), _cone(ns), ns.eps, ns.delta, ns.seed, ns.lane)
    return rec.to_dict()


def _cmd_adversary(ns):
    if ns.kind == "variance":
        pair = bounds.adversary_variance_pair(ns.sigma, ns.alpha, ns.K)
    elif ns.kind == "qnorm":
        pair = bounds.adversary_qnorm_pair(ns.tau, ns.eps, ns.p, ns.q, ns.K)
    elif ns.kind == "heavy":
        d = bounds.adversary_heavy(ns.a, ns.scale)
        return {"dist": d.to_literal(), "mean": mean(d), "rho1": central_norm(d, 1)}
    else:
        d = bernoulli_threshold_instance(_cone(ns))
        return {"dist": d.to_literal(), "mean": mean(d)}
    out = pair.to_dict()
    if ns.delta is not None:
        out["wald_lb"] = bounds.wald_lb(pair, ns.delta)
    return out


def _cmd_experiment(ns):
    cfg = json.loads(ns.config.read_text())
    if ns.seed is not None:
        cfg["master_seed"] = ns.seed
    if ns.reps is not None:
        cfg["replications"] = ns.reps
    report = harness.run_experiment(harness.ExperimentConfig.from_dict(cfg))
    if ns.format == "csv":
        truth = mean(from_literal(report.config["dist"]))
        return report, runs_csv(report.runs, truth)
    return report, report.to_dict()


def dispatch(ns) -> int:
    handlers = {
        "params": _cmd_params,
        "bounds": _cmd_bounds,
        "estimate": _cmd_estimate,
        "integrate": _cmd_integrate,
        "adversary": _cmd_adversary,
    }
    t0 = time.perf_counter()
    try:
        if ns.subcommand == "experiment":
            report, out = _cmd_experiment(ns)
            text = out if isinstance(out, str) else dumps(out) + "\n"
        else:
            text = dumps(handlers[ns.subcommand](ns)) + "\n"
    except UsageError as e:
        print(f"gmc {ns.subcommand}: error: {e}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, OSError, KeyError) as e:
        print(f"gmc {ns.subcommand}: error: {e}", file=sys.stderr)
        return 1
    if ns.out is not None:
        ns.out.write_text(text)
    else:
        sys.stdout.write(text)
    if ns.subcommand == "experiment":
        print(f"wall time: {time.perf_counter() - t0:.3f} s", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        ns = parse(argv)
    except SystemExit as e:
        return int(e.code or 0)
    return dispatch(ns)


if __name__ == "__main__":
    sys.exit(main())
