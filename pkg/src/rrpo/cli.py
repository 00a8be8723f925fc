"""Command-line interface: ``rrpo generate|solve|evaluate|check-proofness|batch``.

Exit codes: 0 success, 2 parse or configuration error, 3 enumeration cap or
iteration/time limit exceeded, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict

from .analysis import check_corollary2, check_proofness_conditions, compute_metrics, minimax_gap, solve_nominal
from .batch import BatchConfig, run_batch
from .convex import DEFAULT_MAX_ITER, solve_drpo_convex, solve_rrpo_convex
from .discrete import drpo_discrete, solve_double_cg
from .errors import CapExceeded, IterationLimit, NumericalFailure, RRPOError
from .files import evaluate_policy, load_orange_juice, read_instance, write_instance, write_policy, write_report
from .generate import BUDGET_HI, BUDGET_LO, GenerationSpec, generate_instance
from .oracles import DEFAULT_PRICE_CAP, PricingMethod, ScenarioMethod
from .uncertainty import DiscreteBudgetSet, ExplicitSet, L1Set

EXIT_OK, EXIT_CONFIG, EXIT_LIMIT, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(RRPOError):
    pass


def _int_list(text: str) -> list[int]:
    """``0-23`` or ``1,2,5``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_set_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--uncertainty", choices=["l1", "budget", "explicit"],
                   help="override the set stored in the instance file")
    p.add_argument("--theta", type=float, help="L1 budget")
    p.add_argument("--gamma", type=int, help="number of parameters allowed at a bound")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["convex", "discrete"], help="default follows the set type")
    p.add_argument("--pricing", default="enumerate", help="enumerate | extreme | local:R")
    p.add_argument("--eps", type=float, default=1e-6, help="relative gap target")
    p.add_argument("--seed", type=int, default=0, help="local-search seed")
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--cap", type=int, default=DEFAULT_PRICE_CAP, help="price-vector enumeration cap")


def _build_set(args, instance, stored):
    kind = args.uncertainty
    if kind is None:
        if stored is None:
            raise ConfigError("the instance file has no uncertainty set; pass --uncertainty")
        return stored
    if kind == "l1":
        if args.theta is None:
            raise ConfigError("--uncertainty l1 needs --theta")
        return L1Set(args.theta, instance.u0)
    if kind == "budget":
        if args.gamma is None:
            raise ConfigError("--uncertainty budget needs --gamma")
        return DiscreteBudgetSet.from_multipliers(args.gamma, instance.u0, BUDGET_HI, BUDGET_LO)
    if not isinstance(stored, ExplicitSet):
        raise ConfigError("--uncertainty explicit needs an explicit set in the instance file")
    return stored


def _method_for(args, uset) -> str:
    method = args.method or ("convex" if isinstance(uset, L1Set) else "discrete")
    if (method == "convex") != isinstance(uset, L1Set):
        raise ConfigError(f"method {method!r} does not match a {type(uset).__name__}")
    return method


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, default=str))


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    if args.orange_juice:
        instance = load_orange_juice(args.orange_juice)
    elif args.family is None or args.I is None:
        raise ConfigError("generate needs --family and --I (or --orange-juice)")
    else:
        instance = generate_instance(GenerationSpec.preset(args.family, args.I, args.seed, args.preset))
    uset = None
    if args.uncertainty:
        uset = _build_set(args, instance, None)
    write_instance(args.out, instance, uset)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    instance, stored = read_instance(args.instance)
    uset = _build_set(args, instance, stored)
    method = _method_for(args, uset)
    pricing = PricingMethod.parse(args.pricing, seed=args.seed, cap=args.cap)
    nominal = solve_nominal(instance, pricing)
    t0 = time.perf_counter()
    if method == "convex":
        drpo = solve_drpo_convex(instance, uset, pricing)
        t_dr = time.perf_counter() - t0
        rrpo = solve_rrpo_convex(instance, uset, eps=args.eps, max_iter=DEFAULT_MAX_ITER, pricing=pricing,
                                 time_limit=args.time_limit)
        wc = rrpo.policy_worst_case
        traces = {"lower": rrpo.lower_history, "upper": rrpo.upper_history}
    else:
        drpo = drpo_discrete(instance, uset, pricing, ScenarioMethod.enumerate())
        t_dr = time.perf_counter() - t0
        rrpo = solve_double_cg(instance, uset, eps=args.eps, pricing=pricing, time_limit=args.time_limit)
        wc = rrpo.lb
        traces = {"lower": rrpo.lb_history, "upper": rrpo.ub_history}
    metrics = compute_metrics(instance, uset, nominal, drpo, rrpo, t_dr=t_dr)
    config = {"method": method, "pricing": str(pricing), "eps": args.eps, "seed": args.seed,
              "time_limit": args.time_limit}
    if args.out:
        write_report(args.out, instance, uset, config, [metrics], rrpo.policy, wc, traces)
    if args.policy_out:
        write_policy(args.policy_out, rrpo.policy, instance)
    _print({"metrics": asdict(metrics), "p_dr": drpo.p_dr.values,
            "policy": [{"prices": p.values, "probability": w} for p, w in rrpo.policy.support]})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    instance, stored = read_instance(args.instance)
    uset = _build_set(args, instance, stored)
    value, u, nominal = evaluate_policy(instance, uset, args.policy)
    _print({"worst_case": value, "u_star": {"alpha": u.alpha.tolist(), "beta": u.beta.tolist(),
                                            "gamma": u.gamma.tolist()},
            "nominal_expected": nominal})
    return EXIT_OK


def cmd_check_proofness(args) -> int:
    instance, stored = read_instance(args.instance)
    uset = _build_set(args, instance, stored)
    out = {}
    rep = check_proofness_conditions(instance, uset)
    out["conditions"] = {"verdict": rep.verdict.value, "evidence": dict(rep.evidence), "notes": rep.notes}
    rep = check_corollary2(instance, uset)
    out["unique_worst_case_test"] = {"verdict": rep.verdict.value, "evidence": dict(rep.evidence),
                                     "notes": rep.notes}
    if not isinstance(uset, L1Set):
        out["minimax_gap"] = minimax_gap(instance, uset)._asdict()
    _print(out)
    return EXIT_OK


def cmd_batch(args) -> int:
    config = BatchConfig(args.family, _int_list(args.I), _float_list(args.budgets), _int_list(args.seeds),
                         method=args.method or "convex", pricing=args.pricing, eps=args.eps,
                         time_limit=args.time_limit, preset=args.preset, workers=args.workers)
    _, text = run_batch(config, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rrpo", description="Randomized robust price optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random instance or the shipped orange-juice data")
    p.add_argument("--family", choices=["linear", "semilog", "loglog"])
    p.add_argument("--I", type=int, help="number of products")
    p.add_argument("--orange-juice", choices=["semilog", "loglog"], help="export the eleven-product data set")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=["convex", "discrete"], default="convex", help="parameter ranges")
    _add_set_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="nominal, deterministic robust and randomized robust solves")
    p.add_argument("--instance", required=True)
    _add_set_flags(p)
    _add_solver_flags(p)
    p.add_argument("--out", help="report JSON")
    p.add_argument("--policy-out", help="policy JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="worst case of a stored policy")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True)
    _add_set_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("check-proofness", help="randomization-proofness diagnostics")
    p.add_argument("--instance", required=True)
    _add_set_flags(p)
    p.set_defaults(func=cmd_check_proofness)

    p = sub.add_parser("batch", help="experiment table as CSV")
    p.add_argument("--family", required=True, choices=["linear", "semilog", "loglog"])
    p.add_argument("--I", required=True, help="sizes, e.g. 2,3,5")
    p.add_argument("--budgets", required=True, help="theta (convex) or Gamma (discrete) values")
    p.add_argument("--seeds", required=True, help="e.g. 0-23")
    p.add_argument("--preset", choices=["convex", "discrete"], help="parameter ranges; default follows --method")
    p.add_argument("--workers", type=int, default=1)
    _add_solver_flags(p)
    p.add_argument("--out", help="CSV path; stdout when omitted")
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CapExceeded, IterationLimit) as exc:
        print(f"rrpo: limit exceeded: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except NumericalFailure as exc:
        print(f"rrpo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RRPOError, ValueError, OSError) as exc:
        print(f"rrpo: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
