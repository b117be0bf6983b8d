"""Parameter sweeps and their CSV / SVG output.

CSV columns, in order::

    param, value, tag_<label>..., lambda_<label>..., verdict,
    achieved_loss, ex_ante_payoff, metric

``tag_*``/``lambda_*`` come from the reaction classifier (empty for random
rules), ``achieved_loss`` is the loss of the K=1 contract when the verdict is
exploitable, ``ex_ante_payoff`` needs a decision problem in the scenario, and
``metric`` repeats the column selected by the sweep's metric.
"""

from __future__ import annotations

import copy
import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .exploit import ex_ante_payoff, exploitability_status
from .geometry import Hyperplane
from .rules import DeterministicRule, classify_rule, support_table
from .scenario import Scenario, ScenarioError, parse_rule

METRICS = ("exploit_status", "achieved_loss", "reaction_lambda", "ex_ante_payoff")


@dataclass(frozen=True)
class SweepSpec:
    param: str
    grid: tuple[float, ...]
    metric: str = "exploit_status"

    def __post_init__(self):
        if not self.grid:
            raise ScenarioError("sweep grid is empty")
        if self.metric not in METRICS:
            raise ScenarioError(f"unknown metric {self.metric!r}; choose from {', '.join(METRICS)}")
        if not self.param:
            raise ScenarioError("sweep parameter path is empty")


@dataclass
class SweepRow:
    value: float
    tags: list
    lambdas: list
    verdict: str
    achieved_loss: Optional[float]
    ex_ante: Optional[float]
    posteriors: np.ndarray
    separator: Optional[Hyperplane]


def set_param(rule_spec: dict, path: str, value: float) -> dict:
    """Copy of ``rule_spec`` with ``path`` (``beta``, ``lambda``, ``lambda.H`` ...) set."""
    spec = copy.deepcopy(rule_spec)
    parts = path.split(".")
    if parts[0] == "rule":
        parts = parts[1:]
    if not parts or parts[0] == "kind":
        raise ScenarioError(f"cannot sweep parameter {path!r}")
    key = parts[0]
    if len(parts) == 1:
        spec[key] = value
    elif len(parts) == 2:
        cur = spec.get(key)
        if not isinstance(cur, dict):
            raise ScenarioError(f"parameter {key!r} is not keyed by realization; use {key!r} alone")
        cur[parts[1]] = value
    else:
        raise ScenarioError(f"parameter path {path!r} is too deep")
    return spec


def run_sweep(scenario: Scenario, sweep: SweepSpec) -> list[SweepRow]:
    env = scenario.environment
    if sweep.metric == "ex_ante_payoff" and scenario.decision_problem is None:
        raise ScenarioError("metric ex_ante_payoff needs a 'decision_problem' in the scenario")
    rows = []
    for value in sweep.grid:
        rule = parse_rule(set_param(scenario.rule_spec, sweep.param, value), env)
        table = support_table(rule, env)
        if isinstance(rule, DeterministicRule):
            reactions = classify_rule(env, rule)
            tags = [r.tag for r in reactions]
            lams = [r.lam for r in reactions]
        else:
            tags = [""] * env.m
            lams = [None] * env.m
        status = exploitability_status(env, rule)
        loss = None
        if status.exploitable:
            loss = -float(status.contract(1.0).achieved_payoff)
        v = ex_ante_payoff(env, rule, scenario.decision_problem) if scenario.decision_problem else None
        post = np.array([y for pairs in table for y, _ in pairs])
        rows.append(SweepRow(float(value), tags, lams, status.verdict, loss, v, post, status.separator))
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def sweep_header(labels: Sequence[str]) -> list[str]:
    return (["param", "value"] + [f"tag_{lab}" for lab in labels] + [f"lambda_{lab}" for lab in labels]
            + ["verdict", "achieved_loss", "ex_ante_payoff", "metric"])


def sweep_csv(rows: list[SweepRow], labels: Sequence[str], sweep: SweepSpec) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(sweep_header(labels))
    for r in rows:
        metric = {
            "exploit_status": r.verdict,
            "achieved_loss": _fmt(r.achieved_loss),
            "reaction_lambda": ";".join(_fmt(lam) for lam in r.lambdas),
            "ex_ante_payoff": _fmt(r.ex_ante),
        }[sweep.metric]
        w.writerow([sweep.param, _fmt(r.value)] + r.tags + [_fmt(lam) for lam in r.lambdas]
                   + [r.verdict, _fmt(r.achieved_loss), _fmt(r.ex_ante), metric])
    return buf.getvalue()


# -- SVG --------------------------------------------------------------------------

_W, _H, _PAD = 480.0, 440.0, 50.0


def _planar(x: np.ndarray) -> tuple[float, float]:
    """Barycentric coordinates to page coordinates (segment for n=2, triangle for n=3)."""
    side = _W - 2 * _PAD
    if x.size == 2:
        return _PAD + side * x[1], _H / 2
    px = x[1] + 0.5 * x[2]
    py = x[2] * math.sqrt(3) / 2
    return _PAD + side * px, _H - _PAD - side * py


def _hyperplane_points(h: Hyperplane, n: int) -> list[np.ndarray]:
    a, b = h.normal, h.offset
    pts = []
    for i in range(n):
        for j in range(i + 1, n):
            if abs(a[i] - a[j]) < 1e-15:
                continue
            t = (b - a[j]) / (a[i] - a[j])
            if -1e-12 <= t <= 1 + 1e-12:
                x = np.zeros(n)
                x[i], x[j] = t, 1 - t
                if not any(np.allclose(x, p) for p in pts):
                    pts.append(x)
    return pts


def simplex_svg(mu, bayes, distorted: list[tuple[str, np.ndarray]], hyperplanes: list[Hyperplane],
                labels: Sequence[str], state_names: Optional[Sequence[str]] = None) -> str:
    """Static SVG of the simplex with the prior, Bayesian posteriors, distorted posteriors and hyperplanes."""
    mu = np.asarray(mu, dtype=float)
    n = mu.size
    if n not in (2, 3):
        raise ValueError("only two- and three-state simplices can be drawn")
    names = state_names or [f"state {i}" for i in range(n)]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W:.0f}" height="{_H:.0f}" '
        f'viewBox="0 0 {_W:.0f} {_H:.0f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    verts = [_planar(np.eye(n)[i]) for i in range(n)]
    if n == 2:
        (x0, y0), (x1, y1) = verts
        out.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" stroke="black"/>')
    else:
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in verts)
        out.append(f'<polygon points="{pts}" fill="none" stroke="black"/>')
    for (x, y), name in zip(verts, names):
        out.append(f'<text x="{x:.2f}" y="{y + 18:.2f}" font-size="12" text-anchor="middle">{escape(name)}</text>')
    for h in hyperplanes:
        pts = _hyperplane_points(h, n)
        if n == 2 and pts:
            x, y = _planar(pts[0])
            out.append(f'<line x1="{x:.2f}" y1="{y - 20:.2f}" x2="{x:.2f}" y2="{y + 20:.2f}" stroke="red"/>')
        elif len(pts) >= 2:
            (xa, ya), (xb, yb) = _planar(pts[0]), _planar(pts[1])
            out.append(f'<line x1="{xa:.2f}" y1="{ya:.2f}" x2="{xb:.2f}" y2="{yb:.2f}" stroke="red" '
                       'stroke-dasharray="4 3"/>')
    for tag, y in distorted:
        px, py = _planar(np.asarray(y))
        out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="darkorange"><title>{escape(tag)}</title></circle>')
    for lab, x in zip(labels, np.asarray(bayes)):
        px, py = _planar(x)
        out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="5" fill="none" stroke="royalblue" stroke-width="2"/>')
        out.append(f'<text x="{px + 7:.2f}" y="{py - 7:.2f}" font-size="11" fill="royalblue">x_{escape(lab)}</text>')
    px, py = _planar(mu)
    out.append(f'<rect x="{px - 4:.2f}" y="{py - 4:.2f}" width="8" height="8" fill="black"/>')
    out.append(f'<text x="{px + 7:.2f}" y="{py + 14:.2f}" font-size="11">prior</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def sweep_svg(scenario: Scenario, rows: list[SweepRow], sweep: SweepSpec) -> str:
    env = scenario.environment
    distorted = [(f"{sweep.param}={r.value:g}", y) for r in rows for y in r.posteriors]
    planes = [r.separator for r in rows if r.separator is not None]
    return simplex_svg(env.mu, env.posteriors, distorted, planes, env.labels)
