"""Vertex/edge state containers and the discrete nonlocal calculus.

Mass lives on vertices; weights, velocities and fluxes live on ordered
vertex pairs, stored as dense ``(n, n)`` arrays whose diagonal is kept for
contiguity but never read by any operation.  The norms and the trajectory
metric defined here are what every other module measures against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridMismatchError",
    "VertexSet",
    "AuditTrail",
    "Trajectory",
    "nonlocal_gradient",
    "nonlocal_divergence",
    "tv_norm",
    "sup_norm",
    "d_infinity",
]


class GridMismatchError(ValueError):
    """Two trajectories were compared across different time grids or sizes."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class VertexSet:
    """Atomic vertex cloud: positions in R^d and nonnegative base masses.

    A zero mass marks a ghost vertex outside the support of the base
    measure; such a vertex can neither emit nor receive flux.
    """

    positions: np.ndarray  # (n, d)
    masses: np.ndarray  # (n,)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2:
            raise ValueError(f"positions must be (n, d), got shape {pos.shape}")
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if pos.shape[0] != m.shape[0]:
            raise ValueError(
                f"{pos.shape[0]} positions but {m.shape[0]} masses"
            )
        if m.shape[0] < 1:
            raise ValueError("need at least one vertex")
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(m)):
            raise ValueError("positions and masses must be finite")
        if np.any(m < 0):
            raise ValueError("base masses must be nonnegative")
        if pos.shape[0] > 1:
            diff = pos[:, None, :] - pos[None, :, :]
            dist2 = (diff * diff).sum(axis=-1)
            np.fill_diagonal(dist2, np.inf)
            if dist2.min() == 0.0:
                i, j = np.unravel_index(int(dist2.argmin()), dist2.shape)
                raise ValueError(f"vertices {i} and {j} share a position")
        object.__setattr__(self, "positions", _freeze(pos))
        object.__setattr__(self, "masses", _freeze(m))

    @property
    def n(self) -> int:
        return self.masses.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @classmethod
    def line(cls, n: int, interval=(0.0, 1.0), total_mass: float = 1.0) -> "VertexSet":
        """Midpoint grid on an interval with equal masses summing to total_mass."""
        a, b = float(interval[0]), float(interval[1])
        x = a + (b - a) * (np.arange(n) + 0.5) / n
        return cls(x[:, None], np.full(n, total_mass / n))


def nonlocal_gradient(phi) -> np.ndarray:
    """Edge difference grad[i, j] = phi[j] - phi[i]; exactly antisymmetric."""
    phi = np.asarray(phi, dtype=float).reshape(-1)
    return phi[None, :] - phi[:, None]


def nonlocal_divergence(flux) -> np.ndarray:
    """Adjoint of the nonlocal gradient: div[i] = (1/2) sum_j (J[i,j] - J[j,i]).

    The diagonal of the input is ignored.  For an antisymmetric flux this
    reduces to the plain row sum.
    """
    J = np.asarray(flux, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError(f"flux must be square, got shape {J.shape}")
    J = J.copy()
    np.fill_diagonal(J, 0.0)
    return 0.5 * (J.sum(axis=1) - J.sum(axis=0))


def tv_norm(rho) -> float:
    """Total variation of an atomic mass vector: sum of absolute entries."""
    return float(np.abs(np.asarray(rho, dtype=float)).sum())


def sup_norm(mat) -> float:
    """Max absolute off-diagonal entry (0 for a single vertex)."""
    m = np.asarray(mat, dtype=float)
    if m.shape[0] == 1:
        return 0.0
    a = np.abs(m).copy()
    np.fill_diagonal(a, 0.0)
    return float(a.max())


@dataclass(frozen=True, eq=False)
class AuditTrail:
    """Conserved-quantity trail sampled on the trajectory grid."""

    total_mass: np.ndarray
    tv: np.ndarray
    eta_sup: np.ndarray
    warnings: tuple = ()

    def mass_drift(self) -> float:
        return float(np.abs(self.total_mass - self.total_mass[0]).max())


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-gridded (rho_t, eta_t) samples with their audit trail."""

    times: np.ndarray  # (K+1,)
    rho: np.ndarray  # (K+1, n)
    eta: np.ndarray  # (K+1, n, n)
    audit: AuditTrail

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.shape[0] < 1:
            raise ValueError("times must be a nonempty 1-d array")
        if t.shape[0] > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.rho.shape[0] != t.shape[0] or self.eta.shape[0] != t.shape[0]:
            raise ValueError("sample counts do not match the time grid")
        if self.audit.total_mass.shape[0] != t.shape[0]:
            raise ValueError("audit arrays must cover the full time grid")
        for name in ("times", "rho", "eta"):
            getattr(self, name).setflags(write=False)

    @property
    def n(self) -> int:
        return self.rho.shape[1]


def audit_of(times, rho, eta, warnings=()) -> AuditTrail:
    total = rho.sum(axis=1)
    tv = np.abs(rho).sum(axis=1)
    sups = np.array([sup_norm(eta[k]) for k in range(eta.shape[0])])
    return AuditTrail(_freeze(total), _freeze(tv), _freeze(sups), tuple(warnings))


def d_infinity(traj_a: Trajectory, traj_b: Trajectory) -> float:
    """Grid-sampled metric: max over grid times of TV(rho gap) + sup(eta gap).

    Both trajectories must share the same grid and vertex count; no silent
    interpolation is attempted.
    """
    if traj_a.n != traj_b.n:
        raise GridMismatchError(
            f"vertex counts differ: {traj_a.n} vs {traj_b.n}"
        )
    if traj_a.times.shape != traj_b.times.shape or not np.array_equal(
        traj_a.times, traj_b.times
    ):
        raise GridMismatchError("trajectories are sampled on different time grids")
    gap = 0.0
    for k in range(traj_a.times.shape[0]):
        g = tv_norm(traj_a.rho[k] - traj_b.rho[k]) + sup_norm(
            traj_a.eta[k] - traj_b.eta[k]
        )
        if g > gap:
            gap = g
    return gap
