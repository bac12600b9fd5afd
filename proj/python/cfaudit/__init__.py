"""Exact discrete causal models with selection-bias and fairness audits.

The heavy lifting happens in the compiled ``_core`` extension; this wrapper
turns its JSON reports into plain dicts and gives the API pythonic defaults.
"""

import json as _json

from ._core import Model, builtin_model, corollary_bound, load_model, posterior_draw
from . import _core

__all__ = [
    "Model",
    "audit",
    "build_fair_predictor",
    "builtin_model",
    "check_counterfactual_fairness",
    "check_demographic_parity",
    "check_ignorability",
    "corollary_bound",
    "d_separated",
    "exists_independent_model",
    "faithfulness_report",
    "joint",
    "load_model",
    "load_model_file",
    "posterior_draw",
    "query",
    "rule_witnesses",
    "run_suite",
    "scaled_selection_check",
]


def load_model_file(path):
    with open(path, "r", encoding="utf-8") as f:
        return load_model(f.read())


def query(model, targets, evidence=None, do=None):
    """Exact P(targets | evidence) under the interventions in ``do``.

    Returns a list of {"event": {name: value}, "probability": float} cells.
    """
    raw = _core.query_json(model, evidence or {}, do or {}, list(targets))
    return _json.loads(raw)["cells"]


def joint(model, names):
    return _json.loads(_core.joint_json(model, list(names)))["cells"]


def check_ignorability(model, sensitive, selection=None, tol=1e-9):
    return _json.loads(_core.ignorability_json(model, sensitive, selection, tol))


def exists_independent_model(model, sensitive, selection=None, tol=1e-9):
    return _json.loads(_core.existence_json(model, sensitive, selection, tol))


def scaled_selection_check(model, sensitive, selection, tol=1e-9):
    return _json.loads(_core.scaled_check_json(model, sensitive, selection, tol))


def audit(input_text, preset=None, tie_tol=1e-9):
    return _json.loads(_core.audit_json(input_text, preset, tie_tol))


def rule_witnesses(csv_text, rule, sensitive):
    return _json.loads(_core.witnesses_json(csv_text, rule, sensitive))["witnesses"]


def check_counterfactual_fairness(model, predictor, sensitive, tol=1e-9):
    return _json.loads(_core.fairness_json(model, predictor, sensitive, tol))


def check_demographic_parity(model, predictor, sensitive, selection=None, tol=1e-9):
    return _json.loads(_core.parity_json(model, predictor, sensitive, selection, tol))


def build_fair_predictor(model, sensitive, target):
    return _json.loads(_core.build_fair_json(model, sensitive, target))


def run_suite(name, trials=50, seed=7, tol=1e-9):
    return _json.loads(_core.suite_json(name, trials, seed, tol))


def d_separated(dag_text, left, right, given=()):
    return _core.d_separated(dag_text, set(left), set(right), set(given))


def faithfulness_report(model, tol=1e-9):
    return _json.loads(_core.faithfulness_json(model, tol))["independencies"]
