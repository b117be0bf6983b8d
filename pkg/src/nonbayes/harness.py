"""Randomised property suites for the exploitation results.

Every suite derives one RNG substream per trial from its master seed, so a
failing trial can be replayed alone with :func:`trial_rng`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import errors
from .belief import Belief, Environment, validate_environment
from .exploit import (
    Action,
    DecisionProblem,
    build_confirmatory_exploit,
    build_overreaction_exploit,
    ex_ante_payoff,
    exploitability_status,
    prune_dagger_actions,
)
from .geometry import MIN_MARGIN, affinely_independent, hull_membership
from .rules import (
    ConfirmatoryBias,
    PowerDistortion,
    RandomRule,
    Shrink,
    Stretch,
    Tabulated,
    grether_two_state,
    power_distort,
)
from .simulate import simulate

MIN_MASS = 0.01


@dataclass
class TrialReport:
    suite: str
    trials: int
    failures: list = field(default_factory=list)  # (trial index, summary)
    extremum: Optional[float] = None
    extremum_label: str = ""
    counters: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, trial: int, summary: str) -> None:
        self.failures.append((trial, summary))

    def bump(self, key: str, by: int = 1) -> None:
        self.counters[key] = self.counters.get(key, 0) + by

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "trials": self.trials,
            "passed": self.passed,
            "failures": [{"trial": t, "summary": s} for t, s in self.failures],
            "extremum": self.extremum,
            "extremum_label": self.extremum_label,
            "counters": dict(self.counters),
            "seconds": round(self.seconds, 3),
        }

    def table(self) -> str:
        lines = [
            f"suite      {self.suite}",
            f"trials     {self.trials}",
            f"status     {'PASS' if self.passed else 'FAIL'}",
        ]
        if self.extremum is not None:
            lines.append(f"{self.extremum_label or 'extremum':<10} {self.extremum:.6g}")
        for k, v in sorted(self.counters.items()):
            lines.append(f"{k:<10} {v}")
        lines.append(f"seconds    {self.seconds:.2f}")
        for t, s in self.failures[:20]:
            lines.append(f"  failure trial={t}: {s}")
        if len(self.failures) > 20:
            lines.append(f"  ... {len(self.failures) - 20} more failures")
        return "\n".join(lines)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def random_environment(n: int, m: int, rng=None, max_rejections: int = 10_000) -> Environment:
    """Environment with a Dirichlet prior and Dirichlet likelihood columns.

    Prior mass and realization marginals are kept at or above 0.01 and the
    Bayesian posteriors are affinely independent (pivot 1e-6).
    """
    if not 2 <= m <= n <= 8:
        raise ValueError(f"need 2 <= m <= n <= 8, got n={n}, m={m}")
    rng = _rng(rng)
    for _ in range(max_rejections):
        prior = MIN_MASS + (1.0 - MIN_MASS * n) * rng.dirichlet(np.ones(n))
        L = rng.dirichlet(np.ones(m), size=n).T
        marg = L @ prior
        if np.any(marg < MIN_MASS):
            continue
        X = L * prior / marg[:, None]
        if not affinely_independent(X, pivot_tol=1e-6):
            continue
        return validate_environment(prior, L)
    raise errors.SamplingExhausted(f"no admissible environment after {max_rejections} draws")


def random_decision_problem(n: int, k: int, payoff_range: float = 10.0, rng=None) -> DecisionProblem:
    if k < 0 or payoff_range <= 0:
        raise ValueError("need k >= 0 and a positive payoff range")
    rng = _rng(rng)
    U = rng.uniform(-payoff_range, payoff_range, size=(k, n))
    return DecisionProblem(tuple(Action(f"a{i + 1}", U[i]) for i in range(k)))


def _random_shape(rng, n_choices=(2, 3, 4)) -> tuple[int, int]:
    n = int(rng.choice(n_choices))
    return n, int(rng.integers(2, n + 1))


def _run(name: str, trials: int, seed: int, body: Callable[[TrialReport, int, np.random.Generator], None],
         extremum_label: str = "") -> TrialReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    report = TrialReport(name, trials, extremum_label=extremum_label)
    t0 = time.perf_counter()
    for i in range(trials):
        body(report, i, trial_rng(seed, i))
    report.seconds = time.perf_counter() - t0
    return report


def _track_min(report: TrialReport, value: float) -> None:
    report.extremum = value if report.extremum is None else min(report.extremum, value)


def _track_max(report: TrialReport, value: float) -> None:
    report.extremum = value if report.extremum is None else max(report.extremum, value)


# -- suites ----------------------------------------------------------------------


def bayes_plausibility_suite(trials: int = 10_000, seed: int = 0, tol: float = 1e-10) -> TrialReport:
    def body(rep, i, rng):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(2, n + 1))
        env = random_environment(n, m, rng)
        err = float(np.max(np.abs(env.marginals @ env.posteriors - env.mu)))
        _track_max(rep, err)
        if err > tol:
            rep.fail(i, f"n={n} m={m} plausibility error {err:.3e}")

    return _run("bayes_plausibility", trials, seed, body, "max_error")


def underreaction_safety_suite(trials: int = 10_000, seed: int = 0, mutant: bool = False, tol: float = 1e-9) -> TrialReport:
    """Underreacting agents never end below the outside option.

    With ``mutant=True`` the shrink rule is swapped for a stretch rule and the
    decision problem for an exploiting contract; the suite must then fail.
    """

    def body(rep, i, rng):
        n, m = _random_shape(rng)
        env = random_environment(n, m, rng)
        if mutant:
            lam = tuple(0.5 * min(Stretch.max_lambda(env, s), 10.0) for s in range(m))
            rule = Stretch(lam)
            dp = build_overreaction_exploit(env, rule, 0, 1.0).problem
        else:
            rule = Shrink(tuple(rng.uniform(0.0, 1.0, size=m)))
            dp = random_decision_problem(n, int(rng.integers(1, n + 3)), 10.0, rng)
        v = ex_ante_payoff(env, rule, dp)
        _track_min(rep, v)
        if v < -tol:
            rep.fail(i, f"n={n} m={m} k={len(dp)} ex ante payoff {v:.6g}")

    return _run("underreaction_safety" + ("_mutant" if mutant else ""), trials, seed, body, "min_payoff")


def outside_hull_contract_suite(trials: int = 1_000, seed: int = 0) -> TrialReport:
    Ks = (0.5, 1.0, 10.0, 1000.0)

    def body(rep, i, rng):
        while True:
            n, m = _random_shape(rng)
            env = random_environment(n, m, rng)
            lam = np.array([rng.uniform(0.05, 0.95) * min(Stretch.max_lambda(env, s), 10.0) for s in range(m)])
            lam[rng.random(m) < 0.4] = 0.0
            if not lam.any():
                j = int(rng.integers(m))
                lam[j] = 0.5 * min(Stretch.max_lambda(env, j), 10.0)
            rule = Stretch(tuple(lam))
            xhat = rule.posteriors(env)
            outside = [s for s in range(m) if hull_membership(xhat[s], env.posteriors).outside]
            if outside:
                break
            rep.bump("resampled")
        K = float(rng.choice(Ks))
        try:
            contract = build_overreaction_exploit(env, rule, outside[0], K)
        except errors.ExploitVerificationError as exc:
            rep.fail(i, f"K={K}: {exc}")
            return
        v = ex_ante_payoff(env, rule, contract.problem)
        err = abs(v + K) / max(1.0, K)
        _track_max(rep, err)
        if err > 1e-9:
            rep.fail(i, f"K={K} payoff {v!r}")

    return _run("outside_hull_contract", trials, seed, body, "max_rel_error")


def binary_oracle_quality(env: Environment, xhat: np.ndarray, angles: int = 10_000) -> float:
    """Brute-force search for a single action that hurts a two-state, binary-signal agent.

    Scans hyperplane directions ``alpha`` on the unit circle. For each
    direction and each nonempty set ``T`` of takers, the threshold ``beta`` is
    pushed to the largest value that still lets exactly ``T`` take. The
    quality of a witness is the smaller of the gap separating takers from
    non-takers and the takers' per-unit Bayesian loss; the best quality is
    returned (positive: a hurting action exists), in units of belief
    distance along the simplex.
    """
    phi = np.linspace(0.0, 2.0 * np.pi, angles, endpoint=False)
    A = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    # measure in units of the functional's slope on the simplex; constant ones are useless
    slope = np.abs(A[:, 0] - A[:, 1]) / np.sqrt(2.0)
    A = A[slope > 1e-9] / slope[slope > 1e-9, None]
    angles = A.shape[0]
    a = A @ xhat.T  # (angles, 2) distorted values
    b = A @ env.posteriors.T  # Bayesian values
    p = env.marginals
    best = -np.inf
    for T in ((0,), (1,), (0, 1)):
        nonT = [s for s in (0, 1) if s not in T]
        hi = a[:, list(T)].min(axis=1)
        gap = hi - a[:, nonT].max(axis=1) if nonT else np.full(angles, np.inf)
        pT = p[list(T)]
        loss = -((b[:, list(T)] - hi[:, None]) @ pT) / pT.sum()
        best = max(best, float(np.max(np.minimum(gap, loss))))
    return best


def binary_signal_oracle_check(trials: int = 1_000, seed: int = 0, borderline: float = 1e-6,
                           enrich: float = 0.0) -> TrialReport:
    """Binary signals: the exploitability verdict must match the brute-force oracle.

    Distorted posteriors are uniform on the simplex. With ``enrich > 0`` that
    fraction of trials instead draws each posterior on its prior-to-Bayes
    segment, which uniform draws rarely hit.
    """

    def body(rep, i, rng):
        env = random_environment(2, 2, rng)
        if rng.random() < enrich:
            lam = rng.random(2)[:, None]
            xhat = lam * env.mu + (1 - lam) * env.posteriors
        else:
            xhat = np.array([[t, 1.0 - t] for t in rng.random(2)])
        rule = Tabulated(tuple(Belief(x) for x in xhat))
        status = exploitability_status(env, rule)
        q = binary_oracle_quality(env, xhat)
        rep.bump(status.verdict)
        if abs(q) <= borderline:
            rep.bump("borderline")
            return
        if status.verdict == "unknown":
            rep.fail(i, "binary instance classified unknown")
            return
        oracle = q > 0
        if oracle != status.exploitable:
            rep.fail(i, f"verdict {status.verdict} but oracle quality {q:.3e} (xhat={xhat[:, 0]}, x={env.posteriors[:, 0]}, mu={env.mu[0]})")
            return
        if status.exploitable:
            contract = status.contract(1.0)
            v = ex_ante_payoff(env, rule, contract.problem)
            if abs(v + 1.0) > 1e-9:
                rep.fail(i, f"exploit contract pays {v!r}")

    return _run("binary_signal_oracle", trials, seed, body)


def pruning_suite(trials: int = 10_000, seed: int = 0, tol: float = 1e-9) -> TrialReport:
    def body(rep, i, rng):
        n, m = _random_shape(rng)
        env = random_environment(n, m, rng)
        rule = Shrink(tuple(rng.uniform(0.0, 1.0, size=m)))
        dp = random_decision_problem(n, int(rng.integers(1, n + 3)), 10.0, rng)
        pruned = prune_dagger_actions(env, rule, dp)
        before = ex_ante_payoff(env, rule, dp)
        after = ex_ante_payoff(env, rule, pruned)
        _track_max(rep, after - before)
        if len(pruned) < len(dp):
            rep.bump("pruned")
        if after > before + tol:
            rep.fail(i, f"pruning raised the payoff from {before:.6g} to {after:.6g}")
        if len(pruned) == 0 and len(dp) > 0:
            rep.bump("all_dagger")
            if before < -tol:
                rep.fail(i, f"all actions prunable yet payoff {before:.6g} < 0")

    return _run("pruning", trials, seed, body, "max_increase")


def confirmatory_suite(trials: int = 1_000, seed: int = 0, K: float = 1.0) -> TrialReport:
    def body(rep, i, rng):
        n = int(rng.choice((2, 3, 4)))
        env = random_environment(n, n, rng)
        q = rng.uniform(0.0, 1.0, size=n)
        q[rng.random(n) < 0.3] = 1.0
        q[rng.random(n) < 0.1] = 0.0
        if np.all(q == 1.0):
            q[int(rng.integers(n))] = float(rng.uniform(0.0, 1.0))
        targets = tuple(int(rng.choice([t for t in range(n) if t != s])) for s in range(n))
        bias = ConfirmatoryBias(tuple(q), targets)
        eps = 0.0 if i % 2 == 0 else float(rng.uniform(0.0, 0.1))
        try:
            contract = build_confirmatory_exploit(env, bias, K, eps)
        except errors.ExploitVerificationError as exc:
            rep.fail(i, str(exc))
            return
        v = ex_ante_payoff(env, bias, contract.problem)
        _track_max(rep, abs(v + K))
        if abs(v + K) > 1e-9:
            rep.fail(i, f"q={np.round(q, 3)} payoff {v!r}")
        control = ConfirmatoryBias(tuple(np.ones(n)), targets)
        try:
            build_confirmatory_exploit(env, control, K)
        except errors.NoMisreading:
            rep.bump("control_ok")
        else:
            rep.fail(i, "control with q == 1 produced a contract")

    return _run("confirmatory", trials, seed, body, "max_abs_error")


def grether_suite(trials: int = 1_000, seed: int = 0) -> TrialReport:
    """Two-state closed form versus power-normalisation, plus the beta=1 identity."""
    betas = (0.25, 0.5, 2.0, 4.0)

    def body(rep, i, rng):
        x = float(rng.uniform(0.0, 1.0))
        while x == 0.0:
            x = float(rng.uniform(0.0, 1.0))
        v = np.array([x, 1.0 - x])
        worst = 0.0
        for beta in betas:
            worst = max(worst, abs(grether_two_state(x, beta) - power_distort(v, beta)[0]))
        _track_max(rep, worst)
        if worst > 1e-12:
            rep.fail(i, f"x={x!r} closed form and power rule differ by {worst:.3e}")
        ident = abs(grether_two_state(x, 1.0) - x)
        if ident > 1e-15:
            rep.fail(i, f"x={x!r} beta=1 moves the posterior by {ident:.3e}")

    return _run("grether", trials, seed, body, "max_diff")


def random_rule_safety_suite(trials: int = 2_000, seed: int = 0, tol: float = 1e-9) -> TrialReport:
    """Random posteriors supported on the prior-to-posterior segments never hurt the agent."""

    def body(rep, i, rng):
        n, m = _random_shape(rng)
        env = random_environment(n, m, rng)
        support = []
        for s in range(m):
            k = int(rng.integers(1, 4))
            lams = rng.uniform(0.0, 1.0, size=k)
            w = rng.dirichlet(np.ones(k))
            support.append(tuple((Belief(l * env.mu + (1 - l) * env.posteriors[s]), float(p)) for l, p in zip(lams, w)))
        rule = RandomRule(tuple(support))
        dp = random_decision_problem(n, int(rng.integers(1, n + 3)), 10.0, rng)
        v = ex_ante_payoff(env, rule, dp)
        _track_min(rep, v)
        if v < -tol:
            rep.fail(i, f"n={n} m={m} payoff {v:.6g}")

    return _run("random_rule_safety", trials, seed, body, "min_payoff")


def _barycentric_grid(k: int, step: float) -> np.ndarray:
    steps = int(round(1.0 / step))
    if k == 1:
        return np.ones((1, 1))
    if k == 2:
        t = np.arange(steps + 1) / steps
        return np.stack([t, 1 - t], axis=1)
    i, j = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
    keep = i + j <= steps
    i, j = i[keep], j[keep]
    return np.stack([i, j, steps - i - j], axis=1) / steps


def geometry_oracle_suite(trials: int = 1_000, seed: int = 0, step: float = 1e-3,
                          boundary: float = 2e-3, queries_per_hull: int = 20) -> TrialReport:
    """Hull membership against independent oracles.

    Two states: the hull is an interval of first coordinates. Three states:
    the hull is sampled on a barycentric grid over the generators and the
    query's distance to the nearest grid point is compared with the
    projection distance. Outside calls within ``boundary`` of the hull are
    counted as boundary calls and not scored.
    """
    from scipy.spatial import cKDTree

    if trials < 1:
        raise ValueError("trials must be >= 1")
    report = TrialReport("geometry", 2 * trials, extremum_label="max_dist_gap")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    for i in range(trials):
        G = np.array([[t, 1 - t] for t in rng.random(int(rng.integers(1, 3)))])
        q = rng.random()
        lo, hi = G[:, 0].min(), G[:, 0].max()
        truth = lo - 1e-12 <= q <= hi + 1e-12
        cert = hull_membership([q, 1 - q], G)
        if cert.inside != truth:
            gap = min(abs(q - lo), abs(q - hi))
            if gap * np.sqrt(2) > 2 * MIN_MARGIN:
                report.fail(i, f"n=2 q={q} interval=[{lo}, {hi}] verdict={cert.verdict}")
            else:
                report.bump("boundary_n2")
        report.bump("inside_n2" if cert.inside else "outside_n2")

    hulls = (trials + queries_per_hull - 1) // queries_per_hull
    done = 0
    for h in range(hulls):
        k = int(rng.integers(1, 4))
        G = rng.dirichlet(np.ones(3), size=k)
        cloud = _barycentric_grid(k, step) @ G
        tree = cKDTree(cloud)
        for _ in range(min(queries_per_hull, trials - done)):
            if rng.random() < 0.4:
                query = rng.dirichlet(np.ones(k)) @ G
            else:
                query = rng.dirichlet(np.ones(3))
            grid_dist, _ = tree.query(query)
            cert = hull_membership(query, G)
            _track_max(report, abs(grid_dist - cert.distance))
            idx = trials + done
            if cert.inside:
                report.bump("inside_n3")
                if grid_dist > boundary:
                    report.fail(idx, f"n=3 inside verdict but grid distance {grid_dist:.3e}")
                if np.max(np.abs(cert.weights @ G - query)) > 1e-8:
                    report.fail(idx, "inside weights do not reconstruct the query")
            else:
                report.bump("outside_n3")
                if cert.distance <= boundary:
                    report.bump("boundary_n3")
                elif grid_dist <= boundary:
                    report.fail(idx, f"n=3 outside verdict (d={cert.distance:.3e}) but grid distance {grid_dist:.3e}")
                if grid_dist < cert.distance - 1e-9 or grid_dist > cert.distance + boundary:
                    report.fail(idx, f"projection distance {cert.distance:.3e} inconsistent with grid {grid_dist:.3e}")
            done += 1
    report.seconds = time.perf_counter() - t0
    return report


def monte_carlo_scenarios(count: int = 20, seed: int = 2024):
    """Fixed mix of environments, rules and decision problems for the simulator check."""
    out = []
    for i in range(count):
        rng = trial_rng(seed, i)
        n, m = _random_shape(rng)
        env = random_environment(n, m, rng)
        kind = i % 4
        if kind == 0:
            rule = Shrink(tuple(rng.uniform(0, 1, size=m)))
        elif kind == 1:
            rule = Stretch(tuple(0.5 * min(Stretch.max_lambda(env, s), 10.0) for s in range(m)))
        elif kind == 2:
            rule = ConfirmatoryBias(tuple(rng.uniform(0, 1, size=m)))
        else:
            rule = PowerDistortion(float(rng.choice((0.5, 2.0))))
        dp = random_decision_problem(n, int(rng.integers(1, n + 3)), 10.0, rng)
        out.append((env, rule, dp))
    return out


def monte_carlo_suite(trials: int = 20, seed: int = 2024, samples: int = 1_000_000,
                      sigmas: float = 4.0, allowed_excursions: int = 1) -> TrialReport:
    """Simulated mean versus analytic ex ante payoff on ``trials`` fixed scenarios."""
    report = TrialReport("monte_carlo", trials, extremum_label="max_abs_z")
    t0 = time.perf_counter()
    for i, (env, rule, dp) in enumerate(monte_carlo_scenarios(trials, seed)):
        res = simulate(env, rule, dp, samples, trial_rng(seed + 1, i))
        _track_max(report, abs(res.z))
        if not res.within(sigmas):
            report.bump("excursions")
    if report.counters.get("excursions", 0) > allowed_excursions:
        report.fail(-1, f"{report.counters['excursions']} scenarios outside {sigmas} standard errors")
    report.seconds = time.perf_counter() - t0
    return report


SUITES = {
    "bayes_plausibility": bayes_plausibility_suite,
    "underreaction_safety": underreaction_safety_suite,
    "outside_hull_contract": outside_hull_contract_suite,
    "binary_signal_oracle": binary_signal_oracle_check,
    "pruning": pruning_suite,
    "confirmatory": confirmatory_suite,
    "grether": grether_suite,
    "random_rule_safety": random_rule_safety_suite,
    "geometry": geometry_oracle_suite,
    "monte_carlo": monte_carlo_suite,
}

DEFAULT_TRIALS = {
    "bayes_plausibility": 10_000,
    "underreaction_safety": 10_000,
    "outside_hull_contract": 1_000,
    "binary_signal_oracle": 1_000,
    "pruning": 10_000,
    "confirmatory": 1_000,
    "grether": 1_000,
    "random_rule_safety": 2_000,
    "geometry": 1_000,
    "monte_carlo": 20,
}

# short names accepted by the command line
SUITE_ALIASES = {
    "theorem1": "underreaction_safety",
    "lemma1": "outside_hull_contract",
    "prop2": "binary_signal_oracle",
}
