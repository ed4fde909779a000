"""Acceptance gates, one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""
import math
import time

import numpy as np
import pytest

from coevograph.analysis import (
    ContractionInputs,
    contraction_report,
    fast_limit_study,
    graph_limit_study,
    slow_limit_study,
    working_constants,
)
from coevograph.cli import main as cli_main
from coevograph.config import build_scenario, rebuild_at_resolution, resolve_config
from coevograph.dynamics import IntegratorConfig, PicardConfig, integrate, picard_solve
from coevograph.fields import eval_omega
from coevograph.flux import antisymmetrize, check_admissibility, interpolation, mass_rhs
from coevograph.graph_core import VertexSet, d_infinity, nonlocal_divergence, sup_norm
from coevograph.dynamics import eta_exact_curve


def scenario_for(preset, **top_level):
    raw = {"scenario": {"preset": preset}}
    raw.update(top_level)
    return build_scenario(resolve_config(raw))


def report(num, name, passed, detail):
    print(f"[acceptance {num:02d}] {name}: {'PASS' if passed else 'FAIL'} ({detail})")
    assert passed, f"criterion {num} {name}: {detail}"


def test_01_mass_preservation_opinion_line_50():
    t0 = time.perf_counter()
    sc = scenario_for("opinion-line-50")
    traj = integrate(sc.spec, sc.rho0, sc.eta0, IntegratorConfig(dt=1e-3))
    drift = traj.audit.mass_drift()
    elapsed = time.perf_counter() - t0
    report(
        1,
        "mass preservation",
        drift <= 1e-10 and elapsed <= 10.0,
        f"max drift {drift:.2e} over {traj.times.shape[0]} audited steps, {elapsed:.1f}s",
    )


def _eta_gap(sc, dt):
    traj = integrate(sc.spec, sc.rho0, sc.eta0, IntegratorConfig(dt=dt))
    omega_samples = np.stack(
        [
            eval_omega(sc.spec.omega, t, sc.spec.graph, traj.rho[k])
            for k, t in enumerate(traj.times)
        ]
    )
    exact = eta_exact_curve(sc.eta0, omega_samples, traj.times)
    return max(sup_norm(traj.eta[k] - exact[k]) for k in range(traj.times.shape[0]))


def test_02_eta_closed_form_fourth_order():
    sc = scenario_for("eta-closed-form-12")
    gap_fine = _eta_gap(sc, 1e-3)
    # order check runs where truncation dominates the 1e-15 rounding floor
    g1, g2 = _eta_gap(sc, 0.05), _eta_gap(sc, 0.025)
    factor = g1 / g2
    report(
        2,
        "weight closed form",
        gap_fine <= 1e-6 and 12.0 <= factor <= 20.0,
        f"sup gap {gap_fine:.2e} at dt=1e-3; halving factor {factor:.2f}",
    )


def test_03_picard_contraction():
    t0 = time.perf_counter()
    sc = scenario_for("picard-line-10")
    spec = sc.spec
    consts = working_constants(spec, sc.eta0, probes=32, seed=0)
    rep = contraction_report(
        ContractionInputs(
            consts["l_phi"], consts["c_v"], consts["l_v"], spec.mass_bound,
            consts["c_omega"], consts["l_omega"], consts["eta0_sup"],
        ),
        spec.horizon,
    )
    ratio_bound = rep.kappa * spec.horizon + 0.05
    traj_p, log = picard_solve(
        spec, sc.rho0, sc.eta0, PicardConfig(grid_points=1001, tol=1e-12, max_iters=40),
        t_star=rep.t_star,
    )
    ratios = log.ratios[:7]  # gap ratios for iterations 2 through 8
    traj_r = integrate(spec, sc.rho0, sc.eta0, IntegratorConfig(dt=spec.horizon / 1000))
    agreement = d_infinity(traj_p, traj_r)
    elapsed = time.perf_counter() - t0
    ok = (
        rep.t_star >= 0.5
        and len(ratios) == 7
        and all(r <= ratio_bound for r in ratios)
        and agreement <= 1e-4
        and elapsed <= 30.0
    )
    report(
        3,
        "Picard contraction",
        ok,
        f"T*={rep.t_star:.3f}, max ratio {max(ratios):.3f} <= {ratio_bound:.3f}, "
        f"solver agreement {agreement:.2e}, {elapsed:.1f}s",
    )


def test_04_t_star_worked_value():
    rep = contraction_report(ContractionInputs(1, 1, 0, 1, 0, 0, 1), horizon=1.0)
    err = abs(rep.t_star - 1.0 / 3.0)
    report(4, "T* worked value", err <= 1e-9, f"T* = {rep.t_star!r}, |err| = {err:.1e}")


EPS_LADDER = [10.0**-1, 10.0**-1.5, 10.0**-2, 10.0**-2.5, 10.0**-3]


def test_05_slow_graph_limit():
    t0 = time.perf_counter()
    sc = scenario_for("slow-study-20")
    study = slow_limit_study(
        sc.spec, sc.rho0, sc.eta0, EPS_LADDER, sc.integrator(), probes=32, seed=7
    )
    elapsed = time.perf_counter() - t0
    below = all(e <= b for e, b in zip(study.errors, study.bounds))
    ok = 0.9 <= study.slope <= 1.1 and below and elapsed <= 60.0
    report(
        5,
        "slow-graph limit",
        ok,
        f"slope {study.slope:.3f}, errors within bounds: {below}, {elapsed:.1f}s",
    )


def test_06_fast_graph_limit():
    t0 = time.perf_counter()
    sc = scenario_for("fast-study-20")
    study = fast_limit_study(
        sc.spec, sc.rho0, sc.eta0, EPS_LADDER, sc.integrator(),
        well_prepared=True, probes=32, seed=7,
    )
    elapsed = time.perf_counter() - t0
    below = all(e <= b for e, b in zip(study.errors, study.bounds))
    ok = 0.85 <= study.slope <= 1.15 and below and elapsed <= 120.0
    report(
        6,
        "fast-graph limit",
        ok,
        f"slope {study.slope:.3f}, errors within reconstructed bounds: {below}, {elapsed:.1f}s",
    )


def test_07_discrete_to_continuum():
    t0 = time.perf_counter()
    sc = scenario_for("graph-limit-line")
    study = graph_limit_study(
        lambda n: rebuild_at_resolution(sc.echo, n),
        [8, 16, 32, 64, 128],
        sc.spec.velocity,
        sc.spec.omega,
        sc.spec.interp,
        sc.spec.horizon,
        sc.spec.mass_bound,
        sc.integrator(),
    )
    elapsed = time.perf_counter() - t0
    errs = study.errors
    soft = [i for i in range(1, len(errs)) if errs[i] >= errs[i - 1]]
    hard = [i for i in soft if errs[i] > errs[i - 1] * 1.05]
    mass_gap = max(study.extras["mass_observable_gaps"])
    ok = not hard and len(soft) <= 1 and mass_gap <= 1e-10 and elapsed <= 120.0
    report(
        7,
        "discrete-to-continuum",
        ok,
        f"errors {['%.3e' % e for e in errs]}, mass gap {mass_gap:.1e}, {elapsed:.1f}s",
    )


def test_08_positivity_and_support():
    sc = scenario_for("positivity-ghost-20")
    spec = sc.spec
    # gate: min eta0 >= |omega_-|_inf (e^T - 1), with |omega_-| = 0.15 M here
    omega_neg_sup = 0.15 * spec.mass_bound
    gate = omega_neg_sup * (math.exp(spec.horizon) - 1.0)
    assert sc.eta0.min() >= gate
    # CFL-like positivity guard: dt L_phi |eta| C_V <= 0.5
    c_v = 2.0 * 0.5 * spec.mass_bound * spec.graph.total_mass
    assert 1e-3 * spec.interp.lipschitz_constant * np.abs(sc.eta0).max() * c_v <= 0.5
    traj = integrate(spec, sc.rho0, sc.eta0, IntegratorConfig(dt=1e-3))
    ghost = np.abs(traj.rho[:, 18:]).max()
    min_rho = traj.rho.min()
    ok = min_rho >= -1e-10 and ghost <= 1e-12
    report(
        8,
        "positivity and support",
        ok,
        f"min rho {min_rho:.1e}, ghost mass {ghost:.1e}, min eta {traj.eta.min():.3f}",
    )


def test_09_structural_identities():
    rng = np.random.default_rng(12345)
    worst_adj = 0.0
    worst_sum = 0.0
    up = interpolation("upwind")
    kinds = [interpolation(k) for k in ("upwind", "mean", "max")]
    for trial in range(1000):
        n = int(rng.integers(2, 9))
        phi = rng.standard_normal(n)
        J = rng.standard_normal((n, n))
        lhs = float(np.dot(phi, nonlocal_divergence(J)))
        grad = phi[None, :] - phi[:, None]
        J0 = J.copy()
        np.fill_diagonal(J0, 0.0)
        rhs_val = -0.5 * float((grad * J0).sum())
        worst_adj = max(worst_adj, abs(lhs - rhs_val) / max(1.0, abs(rhs_val)))

        graph = VertexSet(rng.uniform(-1, 1, (n, 1)), rng.uniform(0, 2, n))
        eta = rng.standard_normal((n, n))  # deliberately asymmetric
        rho = rng.standard_normal(n)
        v = antisymmetrize(rng.standard_normal((n, n)))
        out = mass_rhs(graph, eta, rho, v, kinds[trial % 3])
        worst_sum = max(worst_sum, abs(out.sum()) / max(1e-300, np.abs(out).sum(), 1e-12))
    admissible = all(
        check_admissibility(k, samples=10_000, seed=9).passed for k in kinds
    )
    ok = worst_adj <= 1e-12 and worst_sum <= 1e-12 and admissible
    report(
        9,
        "structural identities",
        ok,
        f"adjointness {worst_adj:.1e}, zero-sum {worst_sum:.1e}, admissibility {admissible}",
    )


def test_10_cli_determinism(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(
        "scenario:\n  preset: opinion-line-16\nseed: 2024\nemit:\n  eta: true\n",
        encoding="utf-8",
    )
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    rc1 = cli_main(["simulate", "--config", str(cfg), "--out", str(out1)])
    rc2 = cli_main(["simulate", "--config", str(cfg), "--out", str(out2)])
    same = all(
        (out1 / f).read_bytes() == (out2 / f).read_bytes()
        for f in ("trajectory.csv", "audit.json", "summary.json")
    )
    ok = rc1 == 0 and rc2 == 0 and same
    report(10, "determinism", ok, "repeated CLI runs byte-identical" if same else "outputs differ")
