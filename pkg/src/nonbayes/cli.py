"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 not exploitable or unknown,
4 verification failure.

Examples::

    nonbayes classify --scenario scenarios/binary_shrink.json
    nonbayes exploit --scenario scenarios/overreaction.json --k 1 --out contract.json
    nonbayes simulate --scenario scenarios/overreaction.json --contract contract.json --trials 1000000
    nonbayes verify --suite underreaction_safety --trials 10000 --seed 7
    nonbayes sweep --scenario scenarios/grether.json --param beta --grid 0.25,0.5,1,2,4 --out sweep.csv --svg sweep.svg
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import errors
from .exploit import exploitability_status
from .harness import DEFAULT_TRIALS, SUITE_ALIASES, SUITES
from .report import METRICS, SweepSpec, run_sweep, sweep_csv, sweep_svg
from .rules import DeterministicRule, classify_rule, overreacts_to_information, underreacts_to_information
from .scenario import ScenarioError, load_json, load_scenario, parse_decision_problem
from .simulate import simulate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_EXPLOITABLE = 3
EXIT_VERIFY = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _fmt_lam(lam) -> str:
    return "-" if lam is None else f"{lam:.6g}"


def cmd_classify(args) -> int:
    sc = load_scenario(args.scenario)
    env = sc.environment
    if not isinstance(sc.rule, DeterministicRule):
        print("classification applies to deterministic rules; this scenario uses a random rule")
        return EXIT_INPUT
    reactions = classify_rule(env, sc.rule)
    print(f"{'realization':<12} {'tag':<13} {'lambda':>10} {'residual':>10}")
    for lab, r in zip(env.labels, reactions):
        print(f"{lab:<12} {r.tag:<13} {_fmt_lam(r.lam):>10} {r.residual:>10.2e}")
    under = underreacts_to_information(env, sc.rule)
    over = overreacts_to_information(env, sc.rule)
    print(f"underreacts to information: {str(under).lower()}")
    print(f"overreacts to information: {str(over).lower()}")
    if args.out:
        doc = {"reactions": {lab: r.to_dict() for lab, r in zip(env.labels, reactions)},
               "underreacts_to_information": under, "overreacts_to_information": over}
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_exploit(args) -> int:
    sc = load_scenario(args.scenario)
    K = args.k if args.k is not None else (sc.target_loss or 1.0)
    if K <= 0:
        raise ScenarioError("--k must be positive")
    status = exploitability_status(sc.environment, sc.rule)
    if not status.exploitable:
        print(f"verdict: {status.verdict}")
        print(f"reason: {status.reason}")
        return EXIT_NOT_EXPLOITABLE
    try:
        contract = status.contract(K, args.epsilon)
    except errors.ExploitVerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    doc = contract.to_dict()
    doc["verdict"] = status.verdict
    doc["reason"] = status.reason
    _write(args.out, json.dumps(doc, indent=2) + "\n")
    print(f"verdict: {status.verdict} ({status.construction})", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    print(f"achieved payoff: {contract.achieved_payoff:.12g} (target {-K:g})",
          file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    dp = sc.decision_problem
    if args.contract:
        doc = load_json(args.contract)
        if "problem" not in doc:
            raise ScenarioError(f"{args.contract}: missing field 'problem'")
        dp = parse_decision_problem(doc["problem"], sc.environment.n)
    if dp is None:
        raise ScenarioError("missing field 'decision_problem' (or pass --contract)")
    if args.trials < 1:
        raise ScenarioError("--trials must be at least 1")
    res = simulate(sc.environment, sc.rule, dp, args.trials, args.seed)
    print(f"trials          {res.trials}")
    print(f"empirical mean  {res.mean:.9g}")
    print(f"standard error  {res.std_error:.3g}")
    print(f"analytic        {res.analytic:.9g}")
    print(f"z               {res.z:.3f}")
    if args.out:
        _write(args.out, json.dumps(res.to_dict(), indent=2) + "\n")
    if args.self_check:
        ok = res.within(4.0)
        print(f"self-check      {'PASS' if ok else 'FAIL'} (|empirical - analytic| <= 4 SE)")
        if not ok:
            return EXIT_VERIFY
    return EXIT_OK


def cmd_verify(args) -> int:
    name = SUITE_ALIASES.get(args.suite, args.suite)
    if name not in SUITES:
        raise ScenarioError(f"unknown suite {args.suite!r}; choose from {', '.join([*SUITES, *SUITE_ALIASES])}")
    kwargs = {"trials": args.trials or DEFAULT_TRIALS[name], "seed": args.seed}
    if args.mutant:
        if name != "underreaction_safety":
            raise ScenarioError("--mutant is only available for the underreaction_safety suite")
        kwargs["mutant"] = True
    report = SUITES[name](**kwargs)
    print(report.table())
    if args.out:
        _write(args.out, json.dumps(report.to_dict(), indent=2) + "\n")
    if not report.passed:
        print(f"counterexamples (seed {args.seed}): trials {[t for t, _ in report.failures[:50]]}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ScenarioError(f"--grid must be comma-separated numbers, got {text!r}") from None


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    spec = SweepSpec(args.param, _grid(args.grid), args.metric)
    rows = run_sweep(sc, spec)
    _write(args.out, sweep_csv(rows, sc.environment.labels, spec))
    if args.svg:
        if sc.environment.n > 3:
            print(f"warning: SVG skipped, only simplices with n <= 3 are drawable (n = {sc.environment.n})",
                  file=sys.stderr)
        else:
            _write(args.svg, sweep_svg(sc, rows, spec))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nonbayes", description="Screen and exploit non-Bayesian updaters.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("classify", help="classify each distorted posterior")
    c.add_argument("--scenario", required=True)
    c.add_argument("--out", help="also write the classification as JSON")
    c.set_defaults(func=cmd_classify)

    e = sub.add_parser("exploit", help="build a decision problem with ex ante payoff -K")
    e.add_argument("--scenario", required=True)
    e.add_argument("--k", type=float, help="target loss K (default: scenario target_loss or 1)")
    e.add_argument("--epsilon", type=float, default=0.0, help="slack for the exposed-point construction")
    e.add_argument("--out", help="contract JSON path (default stdout)")
    e.set_defaults(func=cmd_exploit)

    s = sub.add_parser("simulate", help="Monte Carlo run of the screening game")
    s.add_argument("--scenario", required=True)
    s.add_argument("--contract", help="use the 'problem' of a contract JSON from `exploit`")
    s.add_argument("--trials", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--self-check", action="store_true", help="exit 4 unless within 4 standard errors")
    s.add_argument("--out", help="also write the report as JSON")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", required=True, help=", ".join(SUITES) + "; short names: " + ", ".join(SUITE_ALIASES))
    v.add_argument("--trials", type=int)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--mutant", action="store_true", help="inject a known-bad rule (underreaction_safety only)")
    v.add_argument("--out", help="also write the report as JSON")
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="sweep one rule parameter over a grid")
    w.add_argument("--scenario", required=True)
    w.add_argument("--param", required=True, help="rule parameter path, e.g. beta, lambda or lambda.H")
    w.add_argument("--grid", required=True, help="comma-separated values")
    w.add_argument("--metric", default="exploit_status", choices=METRICS)
    w.add_argument("--out", help="CSV path (default stdout)")
    w.add_argument("--svg", help="SVG path (n <= 3 only)")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except errors.ModelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
