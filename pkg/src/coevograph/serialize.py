"""Deterministic JSON/CSV writers for runs and studies.

Floats are written in shortest round-trip form (Python repr); JSON keys are
sorted; non-finite values become null.  Identical config + seed therefore
produces byte-identical files on the same platform and build.
"""
from __future__ import annotations

import json
import math
import os

import numpy as np

from .dynamics import SystemSpec, relaxation_rate
from .fields import closed_form_bounds
from .graph_core import Trajectory

__all__ = [
    "to_jsonable",
    "dump_json",
    "write_trajectory_csv",
    "audit_payload",
    "write_audit_json",
]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(obj, path: str) -> None:
    payload = json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(payload + "\n")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(
    path: str, traj: Trajectory, emit_eta: bool = False, eta_stride: int = 10
) -> None:
    """Time-major CSV: t, rho_1..rho_n, then (every eta_stride rows) eta row-major."""
    n = traj.n
    header = ["t"] + [f"rho_{i + 1}" for i in range(n)]
    if emit_eta:
        header += [f"eta_{i + 1}_{j + 1}" for i in range(n) for j in range(n)]
    lines = [",".join(header)]
    for k in range(traj.times.shape[0]):
        cells = [_fmt(traj.times[k])] + [_fmt(v) for v in traj.rho[k]]
        if emit_eta:
            if k % eta_stride == 0 or k == traj.times.shape[0] - 1:
                cells += [_fmt(v) for v in traj.eta[k].ravel()]
            else:
                cells += [""] * (n * n)
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _declared_or_closed(declared: float, closed: float) -> float:
    vals = [v for v in (declared, closed) if not math.isnan(v)]
    return max(vals) if vals else math.nan


def audit_payload(spec: SystemSpec, traj: Trajectory) -> dict:
    """Audit trail plus the a-priori envelopes it is checked against.

    The TV envelope is TV(rho_0) exp(L_phi |eta|_inf C_V t) with the run's
    observed weight sup; the weight envelope follows the regime's relaxation
    rate.  Envelopes are null when no C_V / C_omega bound is available.
    """
    audit = traj.audit
    t = traj.times
    vb = closed_form_bounds(spec.velocity, spec.graph, spec.horizon, spec.mass_bound)
    ob = closed_form_bounds(spec.omega, spec.graph, spec.horizon, spec.mass_bound)
    c_v = _declared_or_closed(spec.velocity.c_v, vb["c_v"])
    c_omega = _declared_or_closed(spec.omega.c_omega, ob["c_omega"])
    l_phi = spec.interp.lipschitz_constant
    eta_run_sup = float(audit.eta_sup.max())
    eta0_sup = float(audit.eta_sup[0])

    tv_bound = None
    if not math.isnan(c_v):
        tv_bound = audit.tv[0] * np.exp(l_phi * eta_run_sup * c_v * t)
    eta_bound = None
    if not math.isnan(c_omega):
        rate = relaxation_rate(spec)
        if spec.regime == "static":
            eta_bound = np.full_like(t, eta0_sup)
        elif spec.regime == "quasistatic":
            eta_bound = np.full_like(t, c_omega)
        elif spec.regime == "fast":
            eta_bound = np.full_like(t, max(eta0_sup, c_omega))
        else:  # coupled / slow share the Gronwall shape with their rate
            eta_bound = (eta0_sup + rate * c_omega * t) * np.exp(rate * t)

    payload = {
        "times": t,
        "total_mass": audit.total_mass,
        "tv_norm": audit.tv,
        "eta_sup": audit.eta_sup,
        "mass_drift_max": audit.mass_drift(),
        "tv_apriori_bound": tv_bound,
        "eta_sup_apriori_bound": eta_bound,
        "tv_bound_satisfied": bool(np.all(audit.tv <= tv_bound * (1 + 1e-9)))
        if tv_bound is not None
        else None,
        "eta_bound_satisfied": bool(np.all(audit.eta_sup <= eta_bound * (1 + 1e-9)))
        if eta_bound is not None
        else None,
        "warnings": list(audit.warnings),
    }
    return payload


def write_audit_json(path: str, spec: SystemSpec, traj: Trajectory) -> None:
    dump_json(audit_payload(spec, traj), path)


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
