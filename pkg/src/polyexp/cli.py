"""Command-line front end.

Subcommands:
    run          Monte Carlo regret experiment, one CSV/JSON row
    equivalence  Exp2 / PolyExp / mirror-descent equivalence checks
    bounds       table of theoretical upper and lower bounds
    lowerbound   sign-sum formula vs enumeration, expected-max Monte Carlo

Exit codes: 0 success, 1 validation error, 2 a check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .adversaries import AdversaryKind, AdversarySpec, default_gap_epsilon
from .algorithms import exp2_distribution, omd_step, polyexp_init, polyexp_means, polyexp_update, product_log_probability, vertex_table
from .bandit import Algorithm, tuned_parameters
from .core import Feedback, GameConfig
from .harness import ExperimentSpec, lower_bound_reference, monte_carlo_regret, theoretical_bound
from .oracle import ODD_T_MAX, brute_force_abs_sign_sum, exp2_exact_marginals, expected_abs_rademacher_sum, expected_max_linear_gain, log_partition_both_sides

EXIT_OK, EXIT_VALIDATION, EXIT_SUITE = 0, 1, 2
SEED_ENV = "POLYEXP_SEED"

RUN_COLUMNS = [
    "n", "T", "runs", "learner", "feedback", "adversary", "eta", "gamma",
    "mean_regret", "stderr", "bound", "bound_satisfied", "violations", "seed",
    "epsilon", "version",
]
BOUND_COLUMNS = [
    "n", "T", "polyexp_full", "polyexp_bandit", "exp2_full", "exp2_bandit",
    "lower_full", "lower_bandit", "ratio_full", "ratio_bandit",
]

JOINT_TOL = 1e-9
LOG_PARTITION_TOL = 1e-9
OMD_TOL = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _emit(rows: list[dict], columns: list[str], fmt: str, output: str | None):
    if fmt == "json":
        text = json.dumps([{c: r[c] for c in columns} for r in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
        text = buf.getvalue()
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


def _resolve_parameters(args) -> tuple[float, float]:
    algo, fb = Algorithm(args.learner), Feedback(args.feedback)
    if args.eta is not None and args.gamma is not None:
        return args.eta, args.gamma
    if fb is Feedback.FULL:
        if args.gamma not in (None, 0.0):
            raise UsageError("--gamma must be 0 with full-information feedback")
        eta = args.eta if args.eta is not None else tuned_parameters(args.n, args.T, algo, fb).eta
        return eta, 0.0
    if args.eta is None:
        p = tuned_parameters(args.n, args.T, algo, fb)
        return p.eta, p.gamma if args.gamma is None else args.gamma
    # keep the gamma/eta ratio the theory requires when only eta is given
    scale = 4 * args.n if algo is Algorithm.POLYEXP else 4 * args.n * args.n
    return args.eta, scale * args.eta


def cmd_run(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    eta, gamma = _resolve_parameters(args)
    config = GameConfig(n=args.n, T=args.T, eta=eta, gamma=gamma, feedback=args.feedback, seed=seed)
    kind = AdversaryKind(args.adversary)
    if kind is AdversaryKind.FIXED and not args.sequence:
        raise UsageError("--adversary fixed needs --sequence PATH")
    epsilon = None
    if kind is AdversaryKind.GAP:
        epsilon = args.epsilon if args.epsilon is not None else default_gap_epsilon(args.n, args.T)
    adversary = AdversarySpec(kind, epsilon=epsilon, sequence_source=args.sequence)
    spec = ExperimentSpec(config, args.learner, adversary, runs=args.runs, tuned=False)
    result = monte_carlo_regret(spec, workers=args.threads)
    row = {
        "n": config.n, "T": config.T, "runs": spec.runs, "learner": spec.learner.value,
        "feedback": config.feedback.value, "adversary": kind.value,
        "eta": config.eta, "gamma": config.gamma,
        "mean_regret": result.mean_regret, "stderr": result.stderr, "bound": result.bound,
        "bound_satisfied": result.bound_satisfied, "violations": result.violation_count,
        "seed": seed, "epsilon": epsilon, "version": __version__,
    }
    _emit([row], RUN_COLUMNS, args.format, args.output)
    if args.per_run:
        with open(args.per_run, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "regret", "violations"])
            for r, (reg, v) in enumerate(zip(result.regrets, result.violations_per_run)):
                w.writerow([r, repr(float(reg)), int(v)])
    return EXIT_OK


def equivalence_suites(n_max: int, T: int, histories: int, eta: float, seed: int,
                       omd_trials: int = 10_000, fault: float = 0.0) -> dict[str, float]:
    """Max deviations of the three equivalence checks over random inputs.

    ``fault`` perturbs one PolyExp update and one mirror step, to check the
    suites can fail.
    """
    rng = np.random.default_rng(seed)
    joint = marginal = logpart = 0.0
    for n in range(1, n_max + 1):
        V = vertex_table(n)
        for h in range(histories):
            hist = rng.uniform(-1.0, 1.0, size=(T, n))
            state = polyexp_init(n, eta)
            for t, row in enumerate(hist):
                if fault and h == 0 and t == 0:
                    row = row + fault
                state = polyexp_update(state, row)
            x = polyexp_means(state)
            p_exp2 = exp2_distribution(hist, eta, n).probabilities
            p_poly = np.exp(product_log_probability(x, V))
            joint = max(joint, float(np.max(np.abs(p_exp2 - p_poly))))
            marginal = max(marginal, float(np.max(np.abs(exp2_exact_marginals(hist, eta, n) - x))))
            lhs, rhs = log_partition_both_sides(hist, eta, n)
            logpart = max(logpart, abs(lhs - rhs))
    omd = 0.0
    dim = max(n_max, 1)
    for k in range(omd_trials):
        x = rng.uniform(1e-3, 1 - 1e-3, size=dim)
        est = rng.uniform(-5.0, 5.0, size=dim)
        step_eta = rng.uniform(1e-3, 1.0)
        y = omd_step(x, est, step_eta)
        if fault and k == 0:
            y = y + fault
        ref = x / (x + (1.0 - x) * np.exp(step_eta * est))
        omd = max(omd, float(np.max(np.abs(y - ref))))
    return {"joint": joint, "marginal": marginal, "logpart": logpart, "omd_step": omd}


def cmd_equivalence(args) -> int:
    if not 1 <= args.n <= 10:
        raise UsageError(f"equivalence suites need 1 <= n <= 10, got n={args.n}")
    seed = args.seed if args.seed is not None else _default_seed()
    dev = equivalence_suites(args.n, args.T, args.histories, args.eta, seed,
                             omd_trials=args.omd_trials, fault=args.inject_fault)
    tols = {"joint": JOINT_TOL, "marginal": JOINT_TOL, "logpart": LOG_PARTITION_TOL, "omd_step": OMD_TOL}
    ok = True
    for name, value in dev.items():
        passed = value <= tols[name]
        ok &= passed
        print(f"{name:<9} max deviation {value:.3e}  tol {tols[name]:.0e}  {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_SUITE


def bounds_row(n: int, T: int) -> dict:
    lower_full = None
    if T % 2 == 0 or T <= ODD_T_MAX:
        lower_full = lower_bound_reference(n, T, Feedback.FULL)
    row = {
        "n": n, "T": T,
        "polyexp_full": theoretical_bound(n, T, Algorithm.POLYEXP, Feedback.FULL),
        "polyexp_bandit": theoretical_bound(n, T, Algorithm.POLYEXP, Feedback.BANDIT),
        "exp2_full": theoretical_bound(n, T, Algorithm.EXP2, Feedback.FULL),
        "exp2_bandit": theoretical_bound(n, T, Algorithm.EXP2, Feedback.BANDIT),
        "lower_full": lower_full,
        "lower_bandit": lower_bound_reference(n, T, Feedback.BANDIT),
    }
    row["ratio_full"] = row["exp2_full"] / row["polyexp_full"]
    row["ratio_bandit"] = row["exp2_bandit"] / row["polyexp_bandit"]
    return row


def cmd_bounds(args) -> int:
    rows = [bounds_row(n, T) for n in args.n for T in args.T]
    _emit(rows, BOUND_COLUMNS, args.format, args.output)
    return EXIT_OK


def monte_carlo_expected_max(n: int, T: int, games: int, seed: int) -> tuple[float, float]:
    """Mean and standard error of max_X sum_t l_t^T X over Rademacher games."""
    rng = np.random.default_rng(seed)
    vals = []
    chunk = 10_000
    for start in range(0, games, chunk):
        m = min(chunk, games - start)
        sums = (2 * rng.integers(0, 2, size=(m, T, n), dtype=np.int8) - 1).sum(axis=1, dtype=np.int64)
        vals.append(np.maximum(sums, 0).sum(axis=1))
    v = np.concatenate(vals).astype(np.float64)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(games))


def cmd_lowerbound(args) -> int:
    if args.T < 2 or args.T % 2:
        raise UsageError(f"lowerbound needs an even T >= 2, got T={args.T}")
    seed = args.seed if args.seed is not None else _default_seed()
    ok = True
    formula = expected_abs_rademacher_sum(args.T)
    if args.T <= ODD_T_MAX:
        enum = brute_force_abs_sign_sum(args.T)
        match = formula == enum
        ok &= match
        print(f"sign-sum T={args.T}: formula {formula!r}  enumeration {enum!r}  {'PASS' if match else 'FAIL'}")
    else:
        print(f"sign-sum T={args.T}: formula {formula!r}  (enumeration skipped, T > {ODD_T_MAX})")
    exact = expected_max_linear_gain(args.n, args.T)
    mean, se = monte_carlo_expected_max(args.n, args.T, args.games, seed)
    within = abs(mean - exact) <= 3 * se
    ok &= within
    print(f"expected max n={args.n} T={args.T}: exact {exact!r}  monte carlo {mean:.6f} +- {se:.6f} "
          f"({args.games} games)  {'PASS' if within else 'FAIL'}")
    return EXIT_OK if ok else EXIT_SUITE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polyexp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def out_flags(sp):
        sp.add_argument("--output", "-o", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")

    run = sub.add_parser("run", help="Monte Carlo regret experiment")
    run.add_argument("--n", type=int, required=True)
    run.add_argument("--T", type=int, required=True)
    run.add_argument("--runs", type=int, default=100)
    run.add_argument("--learner", choices=[a.value for a in Algorithm], default="polyexp")
    run.add_argument("--feedback", choices=[f.value for f in Feedback], default="full")
    run.add_argument("--adversary", choices=[k.value for k in AdversaryKind], default="rademacher")
    run.add_argument("--epsilon", type=float, default=None, help="gap adversary tilt")
    run.add_argument("--sequence", default=None, help="CSV loss table for --adversary fixed")
    run.add_argument("--eta", type=float, default=None, help="override the tuned learning rate")
    run.add_argument("--gamma", type=float, default=None, help="override the tuned mixing coefficient")
    run.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    run.add_argument("--threads", type=int, default=1, help="worker processes; results do not depend on it")
    run.add_argument("--per-run", default=None, help="also write per-run regrets to this CSV")
    out_flags(run)
    run.set_defaults(func=cmd_run)

    eq = sub.add_parser("equivalence", help="Exp2 / PolyExp / OMD equivalence suites")
    eq.add_argument("--n", type=int, default=6, help="check every dimension 1..n")
    eq.add_argument("--T", type=int, default=30)
    eq.add_argument("--histories", type=int, default=100)
    eq.add_argument("--eta", type=float, default=0.3)
    eq.add_argument("--omd-trials", type=int, default=10_000)
    eq.add_argument("--seed", type=int, default=None)
    eq.add_argument("--inject-fault", type=float, nargs="?", const=1e-6, default=0.0,
                    help=argparse.SUPPRESS)
    eq.set_defaults(func=cmd_equivalence)

    bd = sub.add_parser("bounds", help="theoretical regret bounds table")
    bd.add_argument("--n", type=int, nargs="+", default=[2, 4, 8])
    bd.add_argument("--T", type=int, nargs="+", default=[10_000])
    out_flags(bd)
    bd.set_defaults(func=cmd_bounds)

    lb = sub.add_parser("lowerbound", help="lower-bound oracle checks")
    lb.add_argument("--T", type=int, required=True)
    lb.add_argument("--n", type=int, default=4)
    lb.add_argument("--games", type=int, default=100_000)
    lb.add_argument("--seed", type=int, default=None)
    lb.set_defaults(func=cmd_lowerbound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"polyexp {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
