"""JSON scenario files.

Schema (all keys except ``prior``, ``likelihoods`` and ``rule`` optional)::

    {
      "prior": [0.5, 0.5],
      "likelihoods": {"H": [0.8, 0.2], "L": [0.2, 0.8]},
      "rule": {"kind": "shrink", "lambda": {"H": 0.3, "L": 0.5}},
      "decision_problem": {"actions": [{"label": "a1", "payoffs": [1, -1]}]},
      "target_loss": 1.0
    }

``likelihoods`` maps each realization label to ``pi(label | theta)`` in state
order. The environment may also be nested under ``"environment"``.

Rule kinds and their fields:

==========================  ==================================================
``bayesian``                (none)
``shrink`` / ``stretch``    ``lambda``: number, or ``{label: number}``
``grether2`` / ``power``    ``beta``: number >= 0
``misspecified_prior``      ``nu``: full-support belief
``extreme_belief_aversion`` ``epsilon``: number in (0, 1/n)
``posteriors``              ``posteriors``: ``{label: belief}``
``random``                  ``support``: ``{label: [{"belief": [...], "prob": p}, ...]}``
``confirmatory``            ``q``: ``{label: prob}``; ``error_target``: ``{label: label}``
==========================  ==================================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from . import errors
from .belief import Belief, Environment, validate_environment
from .exploit import Action, DecisionProblem
from .rules import (
    AnyRule,
    Bayesian,
    ConfirmatoryBias,
    ExtremeBeliefAversion,
    GretherTwoState,
    MisspecifiedPrior,
    PowerDistortion,
    RandomRule,
    Shrink,
    Stretch,
    Tabulated,
)


class ScenarioError(errors.ModelError):
    """Malformed or inconsistent scenario document; the message names the field."""


@dataclass(frozen=True)
class Scenario:
    environment: Environment
    rule: AnyRule
    rule_spec: dict
    decision_problem: Optional[DecisionProblem] = None
    target_loss: Optional[float] = None


def _field(doc: dict, key: str, where: str):
    if key not in doc:
        raise ScenarioError(f"missing field '{where}{key}'")
    return doc[key]


def parse_environment(doc: dict) -> Environment:
    prior = _field(doc, "prior", "")
    lik = _field(doc, "likelihoods", "")
    if not isinstance(lik, dict) or not lik:
        raise ScenarioError("field 'likelihoods' must be an object mapping realization labels to arrays")
    labels = list(lik)
    try:
        return validate_environment(prior, [lik[k] for k in labels], labels)
    except errors.ModelError as exc:
        raise ScenarioError(f"invalid environment ('prior'/'likelihoods'): {type(exc).__name__}: {exc}") from None


def _per_label(value, env: Environment, name: str):
    if isinstance(value, dict):
        unknown = set(value) - set(env.labels)
        if unknown:
            raise ScenarioError(f"field 'rule.{name}' names unknown realizations {sorted(unknown)}")
        missing = [lab for lab in env.labels if lab not in value]
        if missing:
            raise ScenarioError(f"field 'rule.{name}' has no entry for {missing}")
        return tuple(float(value[lab]) for lab in env.labels)
    if isinstance(value, (int, float)):
        return float(value)
    raise ScenarioError(f"field 'rule.{name}' must be a number or an object keyed by realization")


def parse_rule(spec: dict, env: Environment) -> AnyRule:
    if not isinstance(spec, dict):
        raise ScenarioError("field 'rule' must be an object")
    kind = _field(spec, "kind", "rule.")
    try:
        if kind == "bayesian":
            return Bayesian()
        if kind == "shrink":
            return Shrink(_per_label(_field(spec, "lambda", "rule."), env, "lambda"))
        if kind == "stretch":
            return Stretch(_per_label(_field(spec, "lambda", "rule."), env, "lambda"))
        if kind == "grether2":
            return GretherTwoState(float(_field(spec, "beta", "rule.")))
        if kind == "power":
            return PowerDistortion(float(_field(spec, "beta", "rule.")))
        if kind == "misspecified_prior":
            return MisspecifiedPrior(Belief(_field(spec, "nu", "rule.")))
        if kind == "extreme_belief_aversion":
            return ExtremeBeliefAversion(float(_field(spec, "epsilon", "rule.")))
        if kind == "posteriors":
            table = _field(spec, "posteriors", "rule.")
            return Tabulated(tuple(Belief(_lookup(table, lab, "rule.posteriors")) for lab in env.labels))
        if kind == "random":
            support = _field(spec, "support", "rule.")
            rows = []
            for lab in env.labels:
                pairs = _lookup(support, lab, "rule.support")
                rows.append(tuple((Belief(_field(p, "belief", f"rule.support.{lab}[].")),
                                   float(_field(p, "prob", f"rule.support.{lab}[]."))) for p in pairs))
            return RandomRule(tuple(rows))
        if kind == "confirmatory":
            q = _per_label(_field(spec, "q", "rule."), env, "q")
            if isinstance(q, float):
                q = tuple(q for _ in env.labels)
            targets = None
            if "error_target" in spec:
                tmap = spec["error_target"]
                targets = tuple(
                    env.labels.index(tmap[lab]) if lab in tmap else None for lab in env.labels
                )
            return ConfirmatoryBias(q, targets)
    except ScenarioError:
        raise
    except (errors.ModelError, ValueError, TypeError, KeyError) as exc:
        raise ScenarioError(f"invalid field 'rule' ({kind}): {exc}") from None
    raise ScenarioError(f"field 'rule.kind' has unknown value {kind!r}")


def _lookup(table, label, where):
    if not isinstance(table, dict) or label not in table:
        raise ScenarioError(f"field '{where}' has no entry for realization {label!r}")
    return table[label]


def parse_decision_problem(doc: Any, n: int) -> DecisionProblem:
    if not isinstance(doc, dict) or not isinstance(doc.get("actions"), list):
        raise ScenarioError("field 'decision_problem.actions' must be a list")
    try:
        acts = tuple(Action(_field(a, "label", "decision_problem.actions[]."),
                            _field(a, "payoffs", "decision_problem.actions[].")) for a in doc["actions"])
        dp = DecisionProblem(acts)
        dp.matrix(n)
    except ScenarioError:
        raise
    except errors.ModelError as exc:
        raise ScenarioError(f"invalid field 'decision_problem': {exc}") from None
    return dp


def parse_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    env_doc = doc.get("environment", doc)
    env = parse_environment(env_doc)
    rule_spec = _field(doc, "rule", "")
    rule = parse_rule(rule_spec, env)
    dp = None
    if doc.get("decision_problem") is not None:
        dp = parse_decision_problem(doc["decision_problem"], env.n)
    K = doc.get("target_loss")
    if K is not None:
        try:
            K = float(K)
        except (TypeError, ValueError):
            raise ScenarioError("field 'target_loss' must be a number") from None
        if K <= 0:
            raise ScenarioError("field 'target_loss' must be positive")
    return Scenario(env, rule, rule_spec, dp, K)


def load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(load_json(path))


def environment_to_dict(env: Environment) -> dict:
    return {
        "prior": env.mu.tolist(),
        "likelihoods": {lab: env.signal.likelihoods[s].tolist() for s, lab in enumerate(env.labels)},
    }
