import math

import numpy as np
import pytest

from coevograph.fields import (
    constant_kernel,
    constant_omega,
    convolution_omega,
    cosine_window_kernel,
    edge_omega_kernel,
    estimate_constants,
    eval_omega,
    eval_velocity,
    gaussian_kernel,
    interaction_velocity,
    modulation_linexp,
    modulation_one,
    modulation_sine,
    pair_omega_kernel,
    tabulated_omega,
    tabulated_velocity,
    zero_velocity,
)
from coevograph.graph_core import VertexSet, sup_norm, tv_norm


@pytest.fixture
def pair_graph():
    return VertexSet(np.array([[0.0], [1.0]]), np.array([1.0, 1.0]))


def test_zero_velocity(pair_graph):
    v = eval_velocity(zero_velocity(), 0.3, pair_graph, np.array([1.0, 2.0]))
    assert np.all(v == 0.0)


def test_interaction_velocity_two_point(pair_graph):
    # K = exp(-|x-y|^2), rho = (1, 0): conv = (1, e^-1), v_12 = -(e^-1 - 1)
    kernel = gaussian_kernel(sigma=math.sqrt(0.5))
    field = interaction_velocity(kernel)
    v = eval_velocity(field, 0.0, pair_graph, np.array([1.0, 0.0]))
    assert v[0, 1] == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)
    assert v[1, 0] == -v[0, 1]


def test_interaction_velocity_zero_mass(pair_graph):
    field = interaction_velocity(gaussian_kernel(0.4))
    assert np.all(eval_velocity(field, 0.0, pair_graph, np.zeros(2)) == 0.0)


def test_interaction_velocity_exactly_antisymmetric():
    rng = np.random.default_rng(0)
    graph = VertexSet(rng.uniform(-1, 1, (9, 3)), rng.uniform(0, 1, 9))
    field = interaction_velocity(gaussian_kernel(0.5, amp=-1.3), modulation_sine(1.0, 0.5, 2.0))
    for t in (0.0, 0.4, 1.0):
        v = eval_velocity(field, t, graph, rng.standard_normal(9))
        assert np.array_equal(v, -v.T)


def test_tabulated_velocity_nearest_left(pair_graph):
    mats = np.array([[[0.0, 1.0], [-1.0, 0.0]], [[0.0, 2.0], [-2.0, 0.0]]])
    field = tabulated_velocity([0.0, 0.5], mats)
    assert eval_velocity(field, 0.49, pair_graph, np.zeros(2))[0, 1] == 1.0
    assert eval_velocity(field, 0.5, pair_graph, np.zeros(2))[0, 1] == 2.0
    assert eval_velocity(field, 0.9, pair_graph, np.zeros(2))[0, 1] == 2.0


def test_tabulated_velocity_validates_antisymmetry():
    bad = np.array([[[0.0, 1.0], [-0.5, 0.0]]])
    with pytest.raises(ValueError, match="antisymmetric"):
        tabulated_velocity([0.0], bad)


def test_constant_omega(pair_graph):
    om = constant_omega(np.full((2, 2), 3.5))
    out = eval_omega(om, 0.7, pair_graph, np.array([5.0, -1.0]))
    assert np.all(out == 3.5)


def test_edge_omega_constant_kernel_gives_total_mass():
    graph = VertexSet.line(5)
    om = convolution_omega(edge_omega_kernel(constant_kernel(1.0)))
    rho = np.array([0.1, 0.2, -0.05, 0.3, 0.0])
    out = eval_omega(om, 0.0, graph, rho)
    assert np.allclose(out, rho.sum())
    assert np.all(eval_omega(om, 0.0, graph, np.zeros(5)) == 0.0)


def test_omega_linearity_in_rho():
    rng = np.random.default_rng(1)
    graph = VertexSet(rng.uniform(0, 1, (7, 1)), rng.uniform(0, 1, 7))
    oms = [
        convolution_omega(pair_omega_kernel(gaussian_kernel(0.3, 0.8))),
        convolution_omega(edge_omega_kernel(gaussian_kernel(0.2, -0.4), modulation_sine(0.5, 0.3, 2.0))),
    ]
    for om in oms:
        for _ in range(20):
            rho, sig = rng.standard_normal((2, 7))
            a, b = rng.uniform(-2, 2, 2)
            lhs = eval_omega(om, 0.3, graph, a * rho + b * sig)
            rhs = a * eval_omega(om, 0.3, graph, rho) + b * eval_omega(om, 0.3, graph, sig)
            scale = max(1.0, np.abs(rhs).max())
            assert np.abs(lhs - rhs).max() <= 1e-12 * scale


def test_tabulated_omega_lookup(pair_graph):
    om = tabulated_omega([0.0, 1.0], np.stack([np.full((2, 2), 1.0), np.full((2, 2), 2.0)]))
    assert eval_omega(om, 0.2, pair_graph, np.zeros(2))[0, 1] == 1.0
    assert eval_omega(om, 1.5, pair_graph, np.zeros(2))[0, 1] == 2.0


def test_modulation_bounds_dominate_grid_sup():
    T = 2.0
    grid = np.linspace(0.0, T, 4001)
    h = 1e-6
    for mod in (modulation_one(), modulation_linexp(0.5, 0.8), modulation_sine(0.8, 0.5, 1.5)):
        vals = np.array([mod(t) for t in grid])
        dvals = np.array([(mod(t + h) - mod(max(t - h, 0.0))) for t in grid]) / (2 * h)
        assert np.abs(vals).max() <= mod.sup_abs(T) + 1e-9
        assert np.abs(dvals[1:-1]).max() <= mod.sup_dabs(T) + 1e-6


def test_cosine_window_compact_support():
    k = cosine_window_kernel(radius=0.5, amp=2.0)
    x = np.array([[0.0], [0.3], [0.6]])
    vals = k(x, np.array([[0.0]]))
    assert vals[0, 0] == pytest.approx(2.0)
    assert 0.0 < vals[1, 0] < 2.0
    assert vals[2, 0] == 0.0


def test_estimate_constants_zero_field(pair_graph):
    rep = estimate_constants(zero_velocity(), pair_graph, probes=8)
    assert rep.working("c_v") == 0.0 and rep.working("l_v") == 0.0


def test_estimate_constants_tabulated_single_edge(pair_graph):
    mats = np.array([[[0.0, 1.0], [-1.0, 0.0]]])
    field = tabulated_velocity([0.0], mats)
    rep = estimate_constants(field, pair_graph, probes=4)
    # max_i sum_j |v_ij| m_j with m = (1, 1) is exactly 1
    assert rep.estimates["c_v"].empirical == pytest.approx(1.0)


def test_estimate_constants_conv_unit_kernel():
    graph = VertexSet.line(6)
    om = convolution_omega(edge_omega_kernel(constant_kernel(1.0)))
    rep = estimate_constants(om, graph, probes=64, mass_bound=1.0, horizon=1.0, seed=5)
    assert rep.estimates["c_omega"].closed_form == pytest.approx(1.0)
    assert rep.estimates["l_omega"].empirical <= 1.0 + 1e-8
    assert rep.estimates["l_omega"].closed_form == pytest.approx(1.0)


def test_velocity_lipschitz_quotient_below_closed_form():
    rng = np.random.default_rng(2)
    graph = VertexSet(rng.uniform(0, 1, (8, 1)), rng.uniform(0.05, 0.3, 8))
    field = interaction_velocity(gaussian_kernel(0.35, amp=0.9))
    bound = 2.0 * 0.9 * graph.total_mass  # 2 sup|K| sum(m)
    for _ in range(50):
        rho, sig = rng.standard_normal((2, 8))
        gap = tv_norm(rho - sig)
        if gap == 0:
            continue
        diff = eval_velocity(field, 0.0, graph, rho) - eval_velocity(field, 0.0, graph, sig)
        a = np.abs(diff)
        np.fill_diagonal(a, 0.0)
        quotient = (a @ graph.masses).max() / gap
        assert quotient <= bound * (1 + 1e-12)


def test_empirical_constants_monotone_in_probes():
    graph = VertexSet.line(6)
    field = interaction_velocity(gaussian_kernel(0.3, amp=1.1))
    vals = [
        estimate_constants(field, graph, probes=p, seed=9).estimates["c_v"].empirical
        for p in (4, 16, 64)
    ]
    assert vals[0] <= vals[1] <= vals[2]


def test_declared_inconsistency_flagged():
    graph = VertexSet.line(6)
    field = interaction_velocity(gaussian_kernel(0.3, amp=1.0), c_v=1e-6)
    rep = estimate_constants(field, graph, probes=16, seed=0)
    assert not rep.estimates["c_v"].declared_consistent
    assert not rep.declared_consistent


def test_c_tilde_estimate_matches_modulation():
    graph = VertexSet.line(4)
    om = convolution_omega(
        edge_omega_kernel(constant_kernel(1.0), modulation_sine(0.0, 1.0, 2.0))
    )
    rep = estimate_constants(om, graph, probes=64, mass_bound=1.0, horizon=3.0, seed=1)
    # |d/dt sin(2t)| <= 2; empirical stays below, closed form equals 2
    assert rep.estimates["c_tilde"].empirical <= 2.0 + 1e-6
    assert rep.estimates["c_tilde"].closed_form == pytest.approx(2.0)
    assert rep.estimates["c_tilde"].empirical > 1.0  # probes do find large slopes


def test_omega_bound_spot_check():
    # |omega| <= C_omega closed form for TV(rho) <= M
    rng = np.random.default_rng(3)
    graph = VertexSet.line(9)
    om = convolution_omega(pair_omega_kernel(gaussian_kernel(0.25, 0.7)))
    M = 1.0
    for _ in range(30):
        rho = rng.standard_normal(9)
        rho *= M / tv_norm(rho)
        w = eval_omega(om, 0.0, graph, rho)
        assert sup_norm(w) <= 0.7 * 0.7 * M + 1e-12
