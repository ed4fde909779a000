"""Admissible flux interpolations and edge-flux assembly.

An interpolation rule turns the two vertex-pair mass densities
``a = rho_i * m_j`` and ``b = m_i * rho_j`` plus an edge velocity into an
edge flux ``F_ij = Phi(a, b; v_ij) * eta_ij``.  The reference measure is
the product counting structure on ordered pairs, which makes those two
products the exact pair densities.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import VertexSet, nonlocal_divergence

__all__ = [
    "FluxInterpolation",
    "interpolation",
    "AxiomCheck",
    "AdmissibilityReport",
    "check_admissibility",
    "antisymmetrize",
    "validate_antisymmetric",
    "assemble_flux",
    "mass_rhs",
]

# canonical kinds and their tight argument-wise Lipschitz constants
_LIPSCHITZ = {"upwind": 1.0, "mean": 0.5, "max": 1.0}

ANTISYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class FluxInterpolation:
    kind: str
    lipschitz_constant: float

    def __post_init__(self):
        if self.kind not in _LIPSCHITZ:
            raise ValueError(
                f"unknown interpolation {self.kind!r}; choose from {sorted(_LIPSCHITZ)}"
            )
        if not self.lipschitz_constant > 0:
            raise ValueError("lipschitz_constant must be positive")

    def evaluate(self, a, b, w):
        """Pointwise flux value; accepts scalars or broadcastable arrays."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.kind == "upwind":
            out = a * np.maximum(w, 0.0) - b * np.maximum(-w, 0.0)
        elif self.kind == "mean":
            out = 0.5 * (a + b) * w
        else:  # max of the signed values, no modulus
            out = np.maximum(a, b) * w
        return out if out.ndim else float(out)


def interpolation(kind: str, lipschitz_constant: float | None = None) -> FluxInterpolation:
    """Build one of the named rules with its canonical Lipschitz constant."""
    kind = {"arithmetic-mean": "mean", "arithmetic_mean": "mean", "maximum": "max"}.get(
        kind, kind
    )
    if kind not in _LIPSCHITZ:
        raise ValueError(
            f"unknown interpolation {kind!r}; choose from {sorted(_LIPSCHITZ)}"
        )
    L = _LIPSCHITZ[kind] if lipschitz_constant is None else float(lipschitz_constant)
    return FluxInterpolation(kind, L)


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    passed: bool
    worst_violation: float
    witness: dict | None


@dataclass(frozen=True)
class AdmissibilityReport:
    kind: str
    lipschitz_constant: float
    samples: int
    seed: int
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _worst(name, violations, witness_cols, tol) -> AxiomCheck:
    idx = int(np.argmax(violations))
    worst = float(violations[idx])
    witness = None
    if worst > tol:
        witness = {k: float(v[idx]) for k, v in witness_cols.items()}
        witness["violation"] = worst
    return AxiomCheck(name, worst <= tol, worst, witness)


def check_admissibility(
    interp: FluxInterpolation, samples: int = 10_000, seed: int = 0
) -> AdmissibilityReport:
    """Sampled check of the three interpolation axioms with the declared constant.

    Degeneracy identities are required exactly; the Lipschitz inequalities and
    one-homogeneity are checked to 1e-12 relative slack.  Failures are
    reported with the worst-case witness, never raised.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    a, b, c, d = rng.uniform(-5.0, 5.0, size=(4, samples))
    v, w = rng.uniform(-5.0, 5.0, size=(2, samples))
    alpha = 10.0 ** rng.uniform(-2.0, 2.0, size=samples)
    L = interp.lipschitz_constant

    deg = np.maximum(
        np.abs(interp.evaluate(np.zeros(samples), np.zeros(samples), v)),
        np.abs(interp.evaluate(a, b, np.zeros(samples))),
    )
    deg_check = _worst("degeneracy", deg, {"a": a, "b": b, "v": v}, 0.0)

    scale_w = L * (np.abs(a) + np.abs(b)) * np.abs(w - v)
    lhs_w = np.abs(interp.evaluate(a, b, w) - interp.evaluate(a, b, v))
    viol_w = lhs_w - scale_w
    lip_w = _worst(
        "lipschitz_velocity",
        viol_w,
        {"a": a, "b": b, "v": v, "w": w},
        1e-12 * np.maximum(1.0, scale_w).max(),
    )

    scale_m = L * (np.abs(a - c) + np.abs(b - d)) * np.abs(v)
    lhs_m = np.abs(interp.evaluate(a, b, v) - interp.evaluate(c, d, v))
    viol_m = lhs_m - scale_m
    lip_m = _worst(
        "lipschitz_mass",
        viol_m,
        {"a": a, "b": b, "c": c, "d": d, "v": v},
        1e-12 * np.maximum(1.0, scale_m).max(),
    )

    left = interp.evaluate(alpha * a, alpha * b, w)
    right = alpha * interp.evaluate(a, b, w)
    hom = np.abs(left - right) / np.maximum(1.0, np.abs(right))
    hom_check = _worst("homogeneity", hom, {"a": a, "b": b, "w": w, "alpha": alpha}, 1e-12)

    return AdmissibilityReport(
        interp.kind,
        L,
        samples,
        seed,
        (deg_check, lip_w, lip_m, hom_check),
    )


def antisymmetrize(v) -> np.ndarray:
    """Explicit helper (v - v^T)/2; never applied implicitly by assembly."""
    v = np.asarray(v, dtype=float)
    return 0.5 * (v - v.T)


def validate_antisymmetric(v: np.ndarray, what: str = "velocity") -> None:
    s = v + v.T
    np.fill_diagonal(s, 0.0)
    worst = np.abs(s).max() if s.size else 0.0
    tol = ANTISYMMETRY_TOL * max(1.0, float(np.abs(v).max()) if v.size else 0.0)
    if worst > tol:
        i, j = np.unravel_index(int(np.abs(s).argmax()), s.shape)
        raise ValueError(
            f"{what} is not antisymmetric: |v[{i},{j}] + v[{j},{i}]| = {worst:.3e} "
            f"exceeds tolerance {tol:.3e}"
        )


def assemble_flux(
    graph: VertexSet,
    eta: np.ndarray,
    rho: np.ndarray,
    v: np.ndarray,
    interp: FluxInterpolation,
) -> np.ndarray:
    """Edge flux F_ij = Phi(rho_i m_j, m_i rho_j; v_ij) * eta_ij, diagonal zero."""
    rho = np.asarray(rho, dtype=float).reshape(-1)
    if rho.shape[0] != graph.n:
        raise ValueError(f"rho has {rho.shape[0]} entries for {graph.n} vertices")
    eta = np.asarray(eta, dtype=float)
    v = np.asarray(v, dtype=float)
    if eta.shape != (graph.n, graph.n) or v.shape != (graph.n, graph.n):
        raise ValueError("eta and v must be (n, n)")
    validate_antisymmetric(v)
    m = graph.masses
    a = rho[:, None] * m[None, :]
    b = m[:, None] * rho[None, :]
    F = interp.evaluate(a, b, v) * eta
    np.fill_diagonal(F, 0.0)
    return F


def mass_rhs(
    graph: VertexSet,
    eta: np.ndarray,
    rho: np.ndarray,
    v: np.ndarray,
    interp: FluxInterpolation,
) -> np.ndarray:
    """Vertex mass rate -div(F); sums to zero up to float summation."""
    return -nonlocal_divergence(assemble_flux(graph, eta, rho, v, interp))
