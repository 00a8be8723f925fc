"""JSON file formats for instances, uncertainty sets, policies and solve reports.

Instance file::

    {"schema_version": 1, "family": "loglog", "I": 2,
     "grids": [[...], [...]], "alpha": [...], "beta": [...],
     "gamma": [[0, g12], [g21, 0]],
     "uncertainty": {"type": "l1", "theta": 0.5}}

``uncertainty`` is optional and may also be
``{"type": "budget", "gamma": 3, "u_hi": {...}, "u_lo": {...}}`` or
``{"type": "explicit", "members": [{"alpha": ..., "beta": ..., "gamma": ...,
"family": optional}, ...]}``.  Floats are written with ``repr`` so a
write/read cycle is bit-exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from importlib import resources
from pathlib import Path
from typing import Any


from .demand import DemandFamily, Instance, ParamVector
from .errors import IterationLimit, ParseError, SchemaVersionMismatch, SupportMismatch
from .oracles import ScenarioMethod, policy_value, worst_case_convex, worst_case_discrete
from .policy import RandomizedPolicy
from .uncertainty import DiscreteBudgetSet, ExplicitSet, L1Set, UncertaintySet

SCHEMA_VERSION = 1
RENORMALIZE_DRIFT = 1e-12


# ---------------------------------------------------------------------------
# encoding


def _dump(obj: dict) -> str:
    """Top-level keys one per line, values compact."""
    parts = [f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in obj.items()]
    return "{\n" + ",\n".join(parts) + "\n}\n"


def params_to_dict(u: ParamVector) -> dict:
    return {"alpha": u.alpha.tolist(), "beta": u.beta.tolist(), "gamma": u.gamma.tolist()}


def uncertainty_to_dict(uset: UncertaintySet) -> dict:
    if isinstance(uset, L1Set):
        return {"type": "l1", "theta": uset.theta}
    if isinstance(uset, DiscreteBudgetSet):
        return {"type": "budget", "gamma": uset.gamma_budget,
                "u_hi": params_to_dict(uset.u_hi), "u_lo": params_to_dict(uset.u_lo)}
    members = []
    for k, u in enumerate(uset.members):
        d = params_to_dict(u)
        if uset.families is not None:
            d["family"] = uset.families[k].value
        members.append(d)
    return {"type": "explicit", "members": members}


def instance_to_dict(instance: Instance, uset: UncertaintySet | None = None) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "family": instance.family.value,
        "I": instance.n_products,
        "grids": [g.tolist() for g in instance.grids],
        **params_to_dict(instance.u0),
    }
    if uset is not None:
        out["uncertainty"] = uncertainty_to_dict(uset)
    return out


def instance_digest(instance: Instance) -> str:
    canon = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_instance(path: str | Path, instance: Instance, uset: UncertaintySet | None = None) -> None:
    Path(path).write_text(_dump(instance_to_dict(instance, uset)), encoding="utf-8")


# ---------------------------------------------------------------------------
# decoding


def _line_of(text: str | None, key: str) -> int | None:
    if text is None:
        return None
    needle = json.dumps(key) + ":"
    for n, line in enumerate(text.splitlines(), start=1):
        if needle in line.replace(" ", "").replace("\t", ""):
            return n
    return None


def _load_json(path: str | Path) -> tuple[Any, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc


def _field(data: dict, key: str, text: str | None, path: str = ""):
    if not isinstance(data, dict) or key not in data:
        raise ParseError("missing field", field=path + key, line=_line_of(text, key))
    return data[key]


def _check_schema(data: dict, text: str | None) -> None:
    version = _field(data, "schema_version", text)
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"schema_version {version!r} is not supported (expected {SCHEMA_VERSION})",
                                    field="schema_version", line=_line_of(text, "schema_version"))


def params_from_dict(d: dict, text: str | None = None, path: str = "") -> ParamVector:
    try:
        return ParamVector(_field(d, "alpha", text, path), _field(d, "beta", text, path),
                           _field(d, "gamma", text, path))
    except ParseError:
        raise
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc), field=path.rstrip(".") or "parameters", line=_line_of(text, "gamma")) from exc


def uncertainty_from_dict(d: dict, u0: ParamVector, text: str | None = None) -> UncertaintySet:
    kind = _field(d, "type", text, "uncertainty.")
    try:
        if kind == "l1":
            return L1Set(float(_field(d, "theta", text, "uncertainty.")), u0)
        if kind == "budget":
            return DiscreteBudgetSet(_field(d, "gamma", text, "uncertainty."), u0,
                                     params_from_dict(_field(d, "u_hi", text, "uncertainty."), text,
                                                      "uncertainty.u_hi."),
                                     params_from_dict(_field(d, "u_lo", text, "uncertainty."), text,
                                                      "uncertainty.u_lo."))
        if kind == "explicit":
            members = _field(d, "members", text, "uncertainty.")
            params = tuple(params_from_dict(m, text, f"uncertainty.members[{k}].") for k, m in enumerate(members))
            fams = [m.get("family") for m in members]
            families = None
            if any(f is not None for f in fams):
                families = tuple(DemandFamily.parse(f) if f is not None else None for f in fams)
                if any(f is None for f in families):
                    raise ParseError("either every member or no member names a family",
                                     field="uncertainty.members", line=_line_of(text, "members"))
            return ExplicitSet(params, families)
    except ParseError:
        raise
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc), field="uncertainty", line=_line_of(text, "uncertainty")) from exc
    raise ParseError(f"unknown uncertainty type {kind!r}", field="uncertainty.type", line=_line_of(text, "type"))


def instance_from_dict(data: dict, text: str | None = None) -> tuple[Instance, UncertaintySet | None]:
    _check_schema(data, text)
    try:
        family = DemandFamily.parse(_field(data, "family", text))
    except ValueError as exc:
        raise ParseError(str(exc), field="family", line=_line_of(text, "family")) from exc
    n = _field(data, "I", text)
    grids = _field(data, "grids", text)
    if not isinstance(grids, list) or len(grids) != n:
        raise ParseError(f"expected {n} grids", field="grids", line=_line_of(text, "grids"))
    u0 = params_from_dict(data, text)
    if u0.n_products != n:
        raise ParseError(f"parameters are for I={u0.n_products}, file says I={n}", field="alpha",
                         line=_line_of(text, "alpha"))
    try:
        instance = Instance(family, tuple(grids), u0)
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc), field="grids", line=_line_of(text, "grids")) from exc
    uset = None
    if data.get("uncertainty") is not None:
        uset = uncertainty_from_dict(data["uncertainty"], u0, text)
    return instance, uset


def read_instance(path: str | Path) -> tuple[Instance, UncertaintySet | None]:
    data, text = _load_json(path)
    return instance_from_dict(data, text)


def load_orange_juice(family: str | DemandFamily = DemandFamily.LOGLOG) -> Instance:
    """Eleven-product orange-juice instance shipped with the package (semilog or loglog)."""
    fam = DemandFamily.parse(family)
    if fam is DemandFamily.LINEAR:
        raise ValueError("orange-juice data exists for semilog and loglog demand only")
    text = resources.files("rrpo").joinpath("data").joinpath(f"orange_juice_{fam.value}.json").read_text(encoding="utf-8")
    instance, _ = instance_from_dict(json.loads(text), text)
    return instance


# ---------------------------------------------------------------------------
# policies and reports


def policy_to_list(policy: RandomizedPolicy) -> list[dict]:
    return [{"levels": list(p.levels), "prices": list(p.values), "probability": w} for p, w in policy.support]


def policy_from_list(entries: list, instance: Instance) -> tuple[RandomizedPolicy, bool]:
    """Rebuild a policy on ``instance``; returns (policy, renormalized)."""
    support = []
    for k, e in enumerate(entries):
        try:
            prices = [float(v) for v in e["prices"]]
            prob = float(e["probability"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad support entry: {exc}", field=f"support[{k}]") from exc
        try:
            levels = instance.levels_of(prices, atol=0.0)
        except ValueError as exc:
            raise SupportMismatch(f"support entry {k}: {exc}") from exc
        if "levels" in e and tuple(e["levels"]) != levels:
            raise SupportMismatch(f"support entry {k}: levels {e['levels']} do not match prices {prices}")
        support.append((instance.price_vector(levels), prob))
    total = sum(w for _, w in support)
    renormalized = abs(total - 1.0) > RENORMALIZE_DRIFT
    if renormalized:
        support = [(p, w / total) for p, w in support]
    return RandomizedPolicy(tuple(support)), renormalized


def write_policy(path: str | Path, policy: RandomizedPolicy, instance: Instance) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "instance_digest": instance_digest(instance),
           "support": policy_to_list(policy)}
    Path(path).write_text(_dump(doc), encoding="utf-8")


def read_policy(path: str | Path, instance: Instance) -> tuple[RandomizedPolicy, bool]:
    data, text = _load_json(path)
    _check_schema(data, text)
    return policy_from_list(_field(data, "support", text), instance)


def write_report(path: str | Path, instance: Instance, uset: UncertaintySet, config: dict, metrics: list,
                 policy: RandomizedPolicy | None, policy_worst_case: float | None = None,
                 traces: dict | None = None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "instance_digest": instance_digest(instance),
        "uncertainty": uncertainty_to_dict(uset),
        "config": config,
        "metrics": [asdict(m) for m in metrics],
        "policy": None if policy is None else policy_to_list(policy),
        "policy_worst_case": policy_worst_case,
        "traces": traces or {},
    }
    Path(path).write_text(_dump(doc), encoding="utf-8")


def read_report(path: str | Path) -> dict:
    data, text = _load_json(path)
    _check_schema(data, text)
    return data


def evaluate_policy(instance: Instance, uset: UncertaintySet, policy: RandomizedPolicy | str | Path,
                    tol: float = 1e-9, scenario_method: ScenarioMethod | None = None
                    ) -> tuple[float, ParamVector, float]:
    """Worst-case expected revenue of a policy, the worst parameters, and the nominal expected revenue.

    ``policy`` may be a policy file path.  Over an L1 ball the worst case is
    computed to relative accuracy ``tol``.
    """
    if not isinstance(policy, RandomizedPolicy):
        policy, _ = read_policy(policy, instance)
    nominal = policy_value(instance, policy, instance.u0)
    if isinstance(uset, L1Set):
        try:
            u, value, _ = worst_case_convex(instance, policy, uset, tol=tol)
        except IterationLimit as exc:
            u, value, _ = exc.result
        return value, u, nominal
    u, value, _ = worst_case_discrete(instance, policy, uset, scenario_method)
    return value, u, nominal
