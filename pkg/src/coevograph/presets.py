"""Named scenario presets addressable from CLI configs.

Each preset expands to a fully inline scenario config (the same structure a
user would write by hand), so `scenario: {preset: name}` and the expanded
form are interchangeable.  Overrides given next to the preset key win.
"""
from __future__ import annotations

import math

__all__ = ["available_presets", "preset_config"]

_SQRT_HALF = math.sqrt(0.5)
_SQRT_04 = math.sqrt(0.4)
_SQRT_01 = math.sqrt(0.1)


def _opinion_line(n: int) -> dict:
    return {
        "vertices": {"layout": "line", "n": n, "interval": [0.0, 1.0], "total_mass": 1.0},
        "rho0": {
            "profile": "two-bump",
            "centers": [0.3, 0.75],
            "widths": [0.1, 0.08],
            "weights": [1.0, 0.6],
            "mass": 1.0,
        },
        "eta0": {"profile": "band", "base": 1.0, "amp": 0.5, "sigma": 0.2},
        "velocity": {
            "kind": "interaction",
            "kernel": {"name": "gaussian", "sigma": 0.3, "amp": -0.8},
        },
        "omega": {
            "kind": "pair",
            "kernel": {"name": "gaussian", "sigma": 0.3, "amp": _SQRT_HALF},
        },
        "interpolation": "upwind",
        "regime": "coupled",
        "horizon": 1.0,
        "mass_bound": 1.0,
        "run": {"dt": 1e-3, "scheme": "rk4"},
    }


def _presets() -> dict:
    presets = {}
    for n in (16, 20, 50):
        presets[f"opinion-line-{n}"] = (
            _opinion_line(n),
            f"{n} vertices on [0,1], Gaussian interaction velocity and pair-Gaussian "
            "weight target, coupled regime",
        )

    zero = _opinion_line(8)
    zero["velocity"] = {"kind": "zero"}
    zero["omega"] = {"kind": "constant", "value": 0.5}
    zero["eta0"] = {"profile": "constant", "value": 2.0}
    presets["zero-velocity-8"] = (
        zero,
        "8 vertices, zero velocity: mass stays put while weights relax to 0.5",
    )

    picard = {
        "vertices": {"layout": "line", "n": 10, "interval": [0.0, 1.0], "total_mass": 1.0},
        "rho0": {"profile": "bump", "center": 0.5, "width": 0.15, "floor": 0.3, "mass": 1.0},
        "eta0": {"profile": "constant", "value": 0.4},
        "velocity": {
            "kind": "interaction",
            "kernel": {"name": "gaussian", "sigma": 0.4, "amp": 0.15},
        },
        "omega": {
            "kind": "pair",
            "kernel": {"name": "gaussian", "sigma": 0.35, "amp": _SQRT_01},
        },
        "interpolation": "upwind",
        "regime": "coupled",
        "horizon": 0.25,
        "mass_bound": 1.0,
        "run": {
            "dt": 0.25e-3,
            "scheme": "rk4",
            "solver": "picard",
            "picard": {"grid_points": 1001, "tol": 1e-12, "max_iters": 40},
        },
    }
    presets["picard-line-10"] = (
        picard,
        "10-vertex weak-field scenario with T* ~ 0.625 > horizon 0.25; defaults to "
        "the Picard solver",
    )

    closed = {
        "vertices": {"layout": "line", "n": 12, "interval": [0.0, 1.0], "total_mass": 1.0},
        "rho0": {"profile": "bump", "center": 0.35, "width": 0.12, "floor": 0.0, "mass": 1.0},
        "eta0": {"profile": "constant", "value": 1.0},
        "velocity": {
            "kind": "interaction",
            "kernel": {"name": "gaussian", "sigma": 0.3, "amp": -0.8},
        },
        "omega": {
            "kind": "edge",
            "kernel": {"name": "gaussian", "sigma": 0.25, "amp": 0.6},
            "modulation": {"name": "linexp", "c0": 0.5, "c1": 0.8},
        },
        "interpolation": "upwind",
        "regime": "coupled",
        "horizon": 1.0,
        "mass_bound": 1.0,
        "run": {"dt": 1e-3, "scheme": "rk4"},
    }
    presets["eta-closed-form-12"] = (
        closed,
        "weight target whose e^t-weighted value is linear in t, so the "
        "variation-of-constants curve is quadrature-exact",
    )

    slow = _opinion_line(20)
    slow["eta0"] = {"profile": "from-omega"}
    slow["run"] = {"dt": 2e-3, "scheme": "rk4"}
    slow["study"] = {
        "kind": "slow",
        "epsilons": [10.0**-1, 10.0**-1.5, 10.0**-2, 10.0**-2.5, 10.0**-3],
        "probes": 32,
    }
    presets["slow-study-20"] = (
        slow,
        "slow-graph ladder against the frozen-weight reference (20 vertices)",
    )

    fast = _opinion_line(20)
    fast["omega"] = {
        "kind": "pair",
        "kernel": {"name": "gaussian", "sigma": 0.3, "amp": _SQRT_04},
        "modulation": {"name": "sine", "offset": 0.8, "amp": 0.5, "freq": 1.5},
    }
    fast["eta0"] = {"profile": "from-omega"}
    fast["run"] = {"dt": 1e-2, "scheme": "rk4"}
    fast["study"] = {
        "kind": "fast",
        "epsilons": [10.0**-1, 10.0**-1.5, 10.0**-2, 10.0**-2.5, 10.0**-3],
        "well_prepared": True,
        "probes": 32,
    }
    presets["fast-study-20"] = (
        fast,
        "fast-graph ladder against the quasi-static reference, well prepared, "
        "time-modulated weight target",
    )

    ghosts = {
        "vertices": {
            "layout": "line-ghosts",
            "n": 18,
            "interval": [0.0, 1.0],
            "total_mass": 1.0,
            "ghosts": [1.2, 1.4],
        },
        "rho0": {"profile": "bump", "center": 0.4, "width": 0.12, "floor": 0.0, "mass": 1.0},
        "eta0": {"profile": "constant", "value": 1.0},
        "velocity": {
            "kind": "interaction",
            "kernel": {"name": "gaussian", "sigma": 0.3, "amp": 0.5},
        },
        "omega": {
            "kind": "edge",
            "kernel": {"name": "gaussian", "sigma": 0.3, "amp": -0.15},
        },
        "interpolation": "upwind",
        "regime": "coupled",
        "horizon": 1.0,
        "mass_bound": 1.0,
        "run": {"dt": 1e-3, "scheme": "rk4"},
    }
    presets["positivity-ghost-20"] = (
        ghosts,
        "nonnegative mass with a signed symmetric weight target meeting the "
        "nonnegativity gate, plus two zero-mass ghost vertices",
    )

    limit = {
        "vertices": {"layout": "line", "n": 128, "interval": [0.0, 1.0], "total_mass": 1.0},
        "rho0": {"profile": "cosine", "base": 1.0, "amp": 0.5, "waves": 1, "mass": 1.0},
        "eta0": {"profile": "band", "base": 1.0, "amp": 0.5, "sigma": 0.2},
        "velocity": {
            "kind": "interaction",
            "kernel": {"name": "gaussian", "sigma": 0.3, "amp": -0.5},
        },
        "omega": {
            "kind": "pair",
            "kernel": {"name": "gaussian", "sigma": 0.25, "amp": 0.63},
        },
        "interpolation": "upwind",
        "regime": "coupled",
        "horizon": 0.5,
        "mass_bound": 1.0,
        "run": {"dt": 5e-3, "scheme": "rk4"},
        "study": {"kind": "graph-limit", "n_ladder": [8, 16, 32, 64, 128]},
    }
    presets["graph-limit-line"] = (
        limit,
        "vertex-refinement ladder on [0,1] with shared continuum initial data; "
        "finest rung is the reference",
    )
    return presets


def available_presets() -> dict:
    """Mapping preset name -> one-line description."""
    return {name: desc for name, (_, desc) in _presets().items()}


def preset_config(name: str) -> dict:
    """Deep copy of the expanded scenario config for a preset."""
    presets = _presets()
    if name not in presets:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(sorted(presets))}"
        )
    import copy

    return copy.deepcopy(presets[name][0])
