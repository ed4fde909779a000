"""Strict config schema: validation, preset expansion, and scenario building.

Configs are a single YAML document.  Unknown keys are errors, not warnings;
every error names the offending key path.  A scenario either names a preset
(with optional overrides merged on top) or spells out all sections inline.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dynamics import IntegratorConfig, PicardConfig, SystemSpec
from .fields import (
    OmegaFunctional,
    VelocityField,
    constant_omega,
    convolution_omega,
    edge_omega_kernel,
    eval_omega,
    interaction_velocity,
    modulation_one,
    pair_omega_kernel,
    spatial_kernel,
    time_modulation,
    zero_velocity,
)
from .flux import interpolation
from .graph_core import VertexSet
from .presets import preset_config

__all__ = ["ConfigError", "Scenario", "load_config", "resolve_config", "build_scenario"]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"config error at {path}: {message}")
        self.path = path
        self.detail = message


def _check_keys(section: dict, allowed, path: str):
    if not isinstance(section, dict):
        raise ConfigError(path, f"expected a mapping, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")


def _number(section, key, path, default=None, required=False, positive=False, nonneg=False):
    if key not in section or section[key] is None:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required value")
        return default
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {val!r}")
    val = float(val)
    if positive and not val > 0:
        raise ConfigError(f"{path}.{key}", f"must be positive, got {val}")
    if nonneg and val < 0:
        raise ConfigError(f"{path}.{key}", f"must be nonnegative, got {val}")
    return val


def _integer(section, key, path, default=None, required=False, minimum=None):
    if key not in section or section[key] is None:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required value")
        return default
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}, got {val}")
    return val


def _string(section, key, path, choices=None, default=None, required=False):
    if key not in section or section[key] is None:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required value")
        return default
    val = section[key]
    if not isinstance(val, str):
        raise ConfigError(f"{path}.{key}", f"expected a string, got {val!r}")
    if choices is not None and val not in choices:
        raise ConfigError(
            f"{path}.{key}", f"must be one of {sorted(choices)}, got {val!r}"
        )
    return val


def _boolean(section, key, path, default=None):
    if key not in section or section[key] is None:
        return default
    val = section[key]
    if not isinstance(val, bool):
        raise ConfigError(f"{path}.{key}", f"expected true/false, got {val!r}")
    return val


def _num_list(section, key, path, default=None, required=False):
    if key not in section or section[key] is None:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required value")
        return default
    val = section[key]
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{path}.{key}", "expected a nonempty list of numbers")
    out = []
    for i, x in enumerate(val):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"{path}.{key}[{i}]", f"expected a number, got {x!r}")
        out.append(float(x))
    return out


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


# ---------------------------------------------------------------- kernels

_KERNEL_PARAMS = {
    "gaussian": {"sigma", "amp"},
    "constant": {"value"},
    "cosine-window": {"radius", "amp"},
}


def _validate_kernel(section, path) -> dict:
    name = _string(section, "name", path, choices=set(_KERNEL_PARAMS), required=True)
    _check_keys(section, {"name"} | _KERNEL_PARAMS[name], path)
    out = {"name": name}
    if name == "gaussian":
        out["sigma"] = _number(section, "sigma", path, required=True, positive=True)
        out["amp"] = _number(section, "amp", path, default=1.0)
    elif name == "constant":
        out["value"] = _number(section, "value", path, required=True)
    else:
        out["radius"] = _number(section, "radius", path, required=True, positive=True)
        out["amp"] = _number(section, "amp", path, default=1.0)
    return out


def _build_kernel(cfg: dict):
    params = {k: v for k, v in cfg.items() if k != "name"}
    return spatial_kernel(cfg["name"], **params)


_MODULATION_PARAMS = {
    "one": set(),
    "linexp": {"c0", "c1"},
    "sine": {"offset", "amp", "freq"},
}


def _validate_modulation(section, path) -> dict:
    name = _string(section, "name", path, choices=set(_MODULATION_PARAMS), required=True)
    _check_keys(section, {"name"} | _MODULATION_PARAMS[name], path)
    out = {"name": name}
    for key in sorted(_MODULATION_PARAMS[name]):
        out[key] = _number(section, key, path, required=True)
    return out


def _build_modulation(cfg: dict | None):
    if cfg is None:
        return modulation_one()
    params = {k: v for k, v in cfg.items() if k != "name"}
    return time_modulation(cfg["name"], **params)


# ---------------------------------------------------------------- scenario

_REGIMES = {"coupled", "slow", "fast", "static", "quasistatic"}


def _validate_scenario(section: dict) -> dict:
    path = "scenario"
    allowed = {
        "vertices",
        "rho0",
        "eta0",
        "velocity",
        "omega",
        "interpolation",
        "regime",
        "epsilon",
        "horizon",
        "mass_bound",
    }
    _check_keys(section, allowed, path)
    out = {}

    verts = section.get("vertices")
    if verts is None:
        raise ConfigError(f"{path}.vertices", "missing required section")
    layout = _string(
        verts, "layout", f"{path}.vertices",
        choices={"line", "line-ghosts", "explicit"}, required=True,
    )
    if layout in ("line", "line-ghosts"):
        keys = {"layout", "n", "interval", "total_mass"}
        if layout == "line-ghosts":
            keys.add("ghosts")
        _check_keys(verts, keys, f"{path}.vertices")
        n = _integer(verts, "n", f"{path}.vertices", required=True, minimum=1)
        interval = _num_list(verts, "interval", f"{path}.vertices", default=[0.0, 1.0])
        if len(interval) != 2 or interval[0] >= interval[1]:
            raise ConfigError(f"{path}.vertices.interval", "expected [a, b] with a < b")
        vout = {
            "layout": layout,
            "n": n,
            "interval": interval,
            "total_mass": _number(
                verts, "total_mass", f"{path}.vertices", default=1.0, positive=True
            ),
        }
        if layout == "line-ghosts":
            vout["ghosts"] = _num_list(verts, "ghosts", f"{path}.vertices", required=True)
    else:
        _check_keys(verts, {"layout", "positions", "masses"}, f"{path}.vertices")
        positions = verts.get("positions")
        masses = _num_list(verts, "masses", f"{path}.vertices", required=True)
        if not isinstance(positions, list) or not positions:
            raise ConfigError(f"{path}.vertices.positions", "expected a nonempty list")
        vout = {"layout": "explicit", "positions": positions, "masses": masses}
    out["vertices"] = vout

    rho = section.get("rho0")
    if rho is None:
        raise ConfigError(f"{path}.rho0", "missing required section")
    rpath = f"{path}.rho0"
    profile = _string(
        rho, "profile", rpath,
        choices={"bump", "two-bump", "uniform", "cosine", "explicit"}, required=True,
    )
    rout = {"profile": profile}
    if profile == "bump":
        _check_keys(rho, {"profile", "center", "width", "floor", "mass"}, rpath)
        rout["center"] = _number(rho, "center", rpath, required=True)
        rout["width"] = _number(rho, "width", rpath, required=True, positive=True)
        rout["floor"] = _number(rho, "floor", rpath, default=0.0, nonneg=True)
        rout["mass"] = _number(rho, "mass", rpath, default=1.0)
    elif profile == "two-bump":
        _check_keys(rho, {"profile", "centers", "widths", "weights", "mass"}, rpath)
        for key in ("centers", "widths", "weights"):
            vals = _num_list(rho, key, rpath, required=True)
            if len(vals) != 2:
                raise ConfigError(f"{rpath}.{key}", "expected exactly 2 entries")
            rout[key] = vals
        rout["mass"] = _number(rho, "mass", rpath, default=1.0)
    elif profile == "uniform":
        _check_keys(rho, {"profile", "mass"}, rpath)
        rout["mass"] = _number(rho, "mass", rpath, default=1.0)
    elif profile == "cosine":
        _check_keys(rho, {"profile", "base", "amp", "waves", "mass"}, rpath)
        rout["base"] = _number(rho, "base", rpath, default=1.0)
        rout["amp"] = _number(rho, "amp", rpath, default=0.5)
        rout["waves"] = _integer(rho, "waves", rpath, default=1, minimum=1)
        rout["mass"] = _number(rho, "mass", rpath, default=1.0)
    else:
        _check_keys(rho, {"profile", "values"}, rpath)
        rout["values"] = _num_list(rho, "values", rpath, required=True)
    out["rho0"] = rout

    eta = section.get("eta0")
    if eta is None:
        raise ConfigError(f"{path}.eta0", "missing required section")
    epath = f"{path}.eta0"
    eprofile = _string(
        eta, "profile", epath,
        choices={"constant", "band", "from-omega", "explicit"}, required=True,
    )
    eout = {"profile": eprofile}
    if eprofile == "constant":
        _check_keys(eta, {"profile", "value"}, epath)
        eout["value"] = _number(eta, "value", epath, required=True)
    elif eprofile == "band":
        _check_keys(eta, {"profile", "base", "amp", "sigma"}, epath)
        eout["base"] = _number(eta, "base", epath, required=True)
        eout["amp"] = _number(eta, "amp", epath, required=True)
        eout["sigma"] = _number(eta, "sigma", epath, required=True, positive=True)
    elif eprofile == "from-omega":
        _check_keys(eta, {"profile"}, epath)
    else:
        _check_keys(eta, {"profile", "values"}, epath)
        if not isinstance(eta.get("values"), list):
            raise ConfigError(f"{epath}.values", "expected a matrix (list of rows)")
        eout["values"] = eta["values"]
    out["eta0"] = eout

    vel = section.get("velocity")
    if vel is None:
        raise ConfigError(f"{path}.velocity", "missing required section")
    vpath = f"{path}.velocity"
    kind = _string(vel, "kind", vpath, choices={"zero", "interaction"}, required=True)
    if kind == "zero":
        _check_keys(vel, {"kind", "c_v", "l_v"}, vpath)
        out["velocity"] = {
            "kind": "zero",
            "c_v": _number(vel, "c_v", vpath, default=None, nonneg=True),
            "l_v": _number(vel, "l_v", vpath, default=None, nonneg=True),
        }
    else:
        _check_keys(vel, {"kind", "kernel", "modulation", "c_v", "l_v"}, vpath)
        if "kernel" not in vel:
            raise ConfigError(f"{vpath}.kernel", "missing required section")
        vout = {"kind": "interaction", "kernel": _validate_kernel(vel["kernel"], f"{vpath}.kernel")}
        if vel.get("modulation") is not None:
            vout["modulation"] = _validate_modulation(vel["modulation"], f"{vpath}.modulation")
        vout["c_v"] = _number(vel, "c_v", vpath, default=None, nonneg=True)
        vout["l_v"] = _number(vel, "l_v", vpath, default=None, nonneg=True)
        out["velocity"] = vout

    omg = section.get("omega")
    if omg is None:
        raise ConfigError(f"{path}.omega", "missing required section")
    opath = f"{path}.omega"
    okind = _string(omg, "kind", opath, choices={"pair", "edge", "constant"}, required=True)
    oout = {"kind": okind}
    declared = {"c_omega", "l_omega", "c_tilde"}
    if okind == "constant":
        _check_keys(omg, {"kind", "value"} | declared, opath)
        oout["value"] = _number(omg, "value", opath, required=True)
    else:
        keys = {"kind", "kernel", "modulation"} | declared
        if okind == "pair":
            keys.add("kernel_right")
        _check_keys(omg, keys, opath)
        if "kernel" not in omg:
            raise ConfigError(f"{opath}.kernel", "missing required section")
        oout["kernel"] = _validate_kernel(omg["kernel"], f"{opath}.kernel")
        if okind == "pair" and omg.get("kernel_right") is not None:
            oout["kernel_right"] = _validate_kernel(
                omg["kernel_right"], f"{opath}.kernel_right"
            )
        if omg.get("modulation") is not None:
            oout["modulation"] = _validate_modulation(omg["modulation"], f"{opath}.modulation")
    for key in sorted(declared):
        val = _number(omg, key, opath, default=None, nonneg=True)
        if val is not None:
            oout[key] = val
    out["omega"] = oout

    out["interpolation"] = _string(
        section, "interpolation", path,
        choices={"upwind", "mean", "max"}, default="upwind",
    )
    out["regime"] = _string(section, "regime", path, choices=_REGIMES, default="coupled")
    epsilon = _number(section, "epsilon", path, default=None, positive=True)
    if out["regime"] in ("slow", "fast") and epsilon is None:
        raise ConfigError(
            f"{path}.epsilon", f"required for regime {out['regime']!r}"
        )
    out["epsilon"] = epsilon
    out["horizon"] = _number(section, "horizon", path, default=1.0, positive=True)
    out["mass_bound"] = _number(section, "mass_bound", path, default=1.0, positive=True)
    return out


def _validate_run(section: dict) -> dict:
    path = "run"
    _check_keys(
        section,
        {"dt", "scheme", "eta_update", "audit_every", "solver", "picard"},
        path,
    )
    out = {
        "dt": _number(section, "dt", path, default=1e-3, positive=True),
        "scheme": _string(section, "scheme", path, choices={"rk4", "euler"}, default="rk4"),
        "eta_update": _string(
            section, "eta_update", path,
            choices={"in_scheme", "exponential"}, default="in_scheme",
        ),
        "audit_every": _integer(section, "audit_every", path, default=1, minimum=1),
        "solver": _string(
            section, "solver", path, choices={"integrate", "picard"}, default="integrate"
        ),
    }
    pic = section.get("picard") or {}
    _check_keys(pic, {"grid_points", "tol", "max_iters"}, f"{path}.picard")
    out["picard"] = {
        "grid_points": _integer(pic, "grid_points", f"{path}.picard", default=201, minimum=2),
        "tol": _number(pic, "tol", f"{path}.picard", default=1e-10, positive=True),
        "max_iters": _integer(pic, "max_iters", f"{path}.picard", default=60, minimum=1),
    }
    return out


def _validate_study(section: dict) -> dict:
    path = "study"
    _check_keys(
        section,
        {"kind", "epsilons", "n_ladder", "well_prepared", "probes", "gates"},
        path,
    )
    kind = _string(
        section, "kind", path, choices={"slow", "fast", "graph-limit"}, required=True
    )
    out = {"kind": kind, "probes": _integer(section, "probes", path, default=64, minimum=1)}
    if kind in ("slow", "fast"):
        eps = _num_list(section, "epsilons", path, required=True)
        if kind == "fast" and any(e <= 0 for e in eps):
            raise ConfigError(f"{path}.epsilons", "fast study requires epsilon > 0")
        if any(e < 0 for e in eps):
            raise ConfigError(f"{path}.epsilons", "epsilons must be nonnegative")
        out["epsilons"] = eps
        out["well_prepared"] = _boolean(section, "well_prepared", path, default=True)
    else:
        ladder = section.get("n_ladder")
        if not isinstance(ladder, list) or len(ladder) < 2:
            raise ConfigError(
                f"{path}.n_ladder", "graph-limit study needs a ladder with >= 2 rungs"
            )
        out["n_ladder"] = [
            _integer({"n": x}, "n", f"{path}.n_ladder[{i}]", required=True, minimum=2)
            for i, x in enumerate(ladder)
        ]
    gates = section.get("gates") or {}
    _check_keys(gates, {"slope_window", "errors_below_bounds", "monotone", "required"}, f"{path}.gates")
    window = gates.get("slope_window")
    if window is not None:
        window = _num_list(gates, "slope_window", f"{path}.gates")
        if len(window) != 2:
            raise ConfigError(f"{path}.gates.slope_window", "expected [low, high]")
    out["gates"] = {
        "slope_window": window,
        "errors_below_bounds": _boolean(gates, "errors_below_bounds", f"{path}.gates", default=False),
        "monotone": _boolean(gates, "monotone", f"{path}.gates", default=False),
        "required": _boolean(gates, "required", f"{path}.gates", default=False),
    }
    return out


def _validate_emit(section: dict) -> dict:
    path = "emit"
    _check_keys(section, {"trajectory", "audit", "summary", "eta", "eta_stride"}, path)
    return {
        "trajectory": _boolean(section, "trajectory", path, default=True),
        "audit": _boolean(section, "audit", path, default=True),
        "summary": _boolean(section, "summary", path, default=True),
        "eta": _boolean(section, "eta", path, default=False),
        "eta_stride": _integer(section, "eta_stride", path, default=10, minimum=1),
    }


def resolve_config(raw: dict) -> dict:
    """Expand presets, apply defaults, and validate every key strictly."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config document must be a mapping")
    _check_keys(raw, {"scenario", "run", "study", "emit", "seed", "constants"}, "<root>")
    scenario_raw = raw.get("scenario")
    if scenario_raw is None:
        raise ConfigError("scenario", "missing required section")
    if not isinstance(scenario_raw, dict):
        raise ConfigError("scenario", "expected a mapping")

    scenario_raw = copy.deepcopy(scenario_raw)
    run_raw = copy.deepcopy(raw.get("run") or {})
    study_raw = copy.deepcopy(raw.get("study")) if raw.get("study") else None
    preset_name = scenario_raw.pop("preset", None)
    if preset_name is not None:
        if not isinstance(preset_name, str):
            raise ConfigError("scenario.preset", "expected a preset name string")
        try:
            base = preset_config(preset_name)
        except KeyError as exc:
            raise ConfigError("scenario.preset", str(exc.args[0])) from exc
        base_run = base.pop("run", {})
        base_study = base.pop("study", None)
        scenario_raw = _deep_merge(base, scenario_raw)
        run_raw = _deep_merge(base_run, run_raw)
        if study_raw is None:
            study_raw = copy.deepcopy(base_study)
        elif base_study is not None:
            study_raw = _deep_merge(base_study, study_raw)

    out = {
        "scenario": _validate_scenario(scenario_raw),
        "run": _validate_run(run_raw),
        "emit": _validate_emit(raw.get("emit") or {}),
        "seed": _integer(raw, "seed", "<root>", default=0, minimum=0),
    }
    consts = raw.get("constants") or {}
    _check_keys(consts, {"probes"}, "constants")
    out["constants"] = {
        "probes": _integer(consts, "probes", "constants", default=64, minimum=1)
    }
    if study_raw is not None:
        out["study"] = _validate_study(study_raw)
    return out


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<document>", f"not valid YAML: {exc}") from exc
    return resolve_config(raw if raw is not None else {})


# ---------------------------------------------------------------- building


def _build_vertices(cfg: dict) -> VertexSet:
    if cfg["layout"] == "explicit":
        positions = np.asarray(cfg["positions"], dtype=float)
        if positions.ndim == 1:
            positions = positions[:, None]
        return VertexSet(positions, np.asarray(cfg["masses"], dtype=float))
    n, (a, b) = cfg["n"], cfg["interval"]
    x = a + (b - a) * (np.arange(n) + 0.5) / n
    m = np.full(n, cfg["total_mass"] / n)
    if cfg["layout"] == "line-ghosts":
        x = np.concatenate([x, np.asarray(cfg["ghosts"], dtype=float)])
        m = np.concatenate([m, np.zeros(len(cfg["ghosts"]))])
    return VertexSet(x[:, None], m)


def _build_rho0(cfg: dict, graph: VertexSet) -> np.ndarray:
    x = graph.positions[:, 0]
    live = graph.masses > 0
    prof = cfg["profile"]
    if prof == "explicit":
        vals = np.asarray(cfg["values"], dtype=float)
        if vals.shape[0] != graph.n:
            raise ConfigError(
                "scenario.rho0.values", f"expected {graph.n} entries, got {vals.shape[0]}"
            )
        return vals
    if prof == "uniform":
        shape = live.astype(float)
    elif prof == "bump":
        shape = np.exp(-((x - cfg["center"]) ** 2) / (2.0 * cfg["width"] ** 2)) + cfg["floor"]
        shape = np.where(live, shape, 0.0)
    elif prof == "two-bump":
        (c1, c2), (w1, w2), (a1, a2) = cfg["centers"], cfg["widths"], cfg["weights"]
        shape = a1 * np.exp(-((x - c1) ** 2) / (2.0 * w1 * w1)) + a2 * np.exp(
            -((x - c2) ** 2) / (2.0 * w2 * w2)
        )
        shape = np.where(live, shape, 0.0)
    else:  # cosine
        span = x.max() - x.min() if x.max() > x.min() else 1.0
        shape = cfg["base"] + cfg["amp"] * np.cos(
            2.0 * np.pi * cfg["waves"] * (x - x.min()) / span
        )
        shape = np.where(live, shape * graph.masses, 0.0)
    total = shape.sum()
    if total == 0.0:
        raise ConfigError("scenario.rho0", "profile integrates to zero on this graph")
    return shape * (cfg["mass"] / total)


def _build_velocity(cfg: dict) -> VelocityField:
    if cfg["kind"] == "zero":
        field_v = zero_velocity()
        if cfg.get("c_v") is not None or cfg.get("l_v") is not None:
            # declared bounds may be looser than the trivial closed form
            field_v = VelocityField(
                "zero",
                c_v=cfg["c_v"] if cfg.get("c_v") is not None else 0.0,
                l_v=cfg["l_v"] if cfg.get("l_v") is not None else 0.0,
            )
        return field_v
    kernel = _build_kernel(cfg["kernel"])
    mod = _build_modulation(cfg.get("modulation"))
    return interaction_velocity(
        kernel,
        mod,
        c_v=cfg["c_v"] if cfg.get("c_v") is not None else math.nan,
        l_v=cfg["l_v"] if cfg.get("l_v") is not None else math.nan,
    )


def _build_omega(cfg: dict, graph: VertexSet) -> OmegaFunctional:
    declared = {
        key: cfg[key]
        for key in ("c_omega", "l_omega", "c_tilde")
        if cfg.get(key) is not None
    }
    if cfg["kind"] == "constant":
        return constant_omega(np.full((graph.n, graph.n), cfg["value"]), **declared)
    mod = _build_modulation(cfg.get("modulation"))
    if cfg["kind"] == "pair":
        left = _build_kernel(cfg["kernel"])
        right = _build_kernel(cfg["kernel_right"]) if cfg.get("kernel_right") else left
        return convolution_omega(pair_omega_kernel(left, right, mod), **declared)
    return convolution_omega(edge_omega_kernel(_build_kernel(cfg["kernel"]), mod), **declared)


def _build_eta0(cfg: dict, graph: VertexSet, omega: OmegaFunctional, rho0) -> np.ndarray:
    prof = cfg["profile"]
    if prof == "constant":
        return np.full((graph.n, graph.n), cfg["value"])
    if prof == "band":
        d2 = ((graph.positions[:, None, :] - graph.positions[None, :, :]) ** 2).sum(-1)
        return cfg["base"] + cfg["amp"] * np.exp(-d2 / (2.0 * cfg["sigma"] ** 2))
    if prof == "from-omega":
        return eval_omega(omega, 0.0, graph, rho0)
    vals = np.asarray(cfg["values"], dtype=float)
    if vals.shape != (graph.n, graph.n):
        raise ConfigError(
            "scenario.eta0.values", f"expected a {graph.n}x{graph.n} matrix"
        )
    return vals


@dataclass(frozen=True, eq=False)
class Scenario:
    spec: SystemSpec
    rho0: np.ndarray
    eta0: np.ndarray
    run: dict
    emit: dict
    seed: int
    constants_probes: int
    study: dict | None
    echo: dict = field(repr=False)

    def integrator(self, dt: float | None = None) -> IntegratorConfig:
        run = self.run
        return IntegratorConfig(
            scheme=run["scheme"],
            dt=dt if dt is not None else run["dt"],
            eta_update=run["eta_update"],
            audit_every=run["audit_every"],
        )

    def picard(self) -> PicardConfig:
        pic = self.run["picard"]
        return PicardConfig(pic["grid_points"], pic["tol"], pic["max_iters"])


def build_scenario(resolved: dict) -> Scenario:
    """Turn a resolved config into runnable objects plus the config echo."""
    sc = resolved["scenario"]
    graph = _build_vertices(sc["vertices"])
    rho0 = _build_rho0(sc["rho0"], graph)
    velocity = _build_velocity(sc["velocity"])
    omega = _build_omega(sc["omega"], graph)
    eta0 = _build_eta0(sc["eta0"], graph, omega, rho0)
    spec = SystemSpec(
        graph,
        interpolation(sc["interpolation"]),
        velocity,
        omega,
        sc["regime"],
        sc["horizon"],
        sc["mass_bound"],
        epsilon=sc["epsilon"],
    )
    return Scenario(
        spec,
        rho0,
        eta0,
        resolved["run"],
        resolved["emit"],
        resolved["seed"],
        resolved["constants"]["probes"],
        resolved.get("study"),
        resolved,
    )


def rebuild_at_resolution(resolved: dict, n: int):
    """Rebuild (graph, rho0, eta0) of a line scenario at a different vertex count."""
    sc = resolved["scenario"]
    if sc["vertices"]["layout"] != "line":
        raise ConfigError(
            "scenario.vertices.layout", "graph-limit rungs need the 'line' layout"
        )
    variant = copy.deepcopy(resolved)
    variant["scenario"]["vertices"]["n"] = n
    built = build_scenario(variant)
    return built.spec.graph, built.rho0, built.eta0
