import math

import numpy as np
import pytest

import entrate as et
from conftest import chain_entropy_rate, golden_section_max
from entrate.markov import FreeChart
from entrate.optimize import certify_objective, jacobi_eigenvalues, mi_objective

PHI = (1 + math.sqrt(5)) / 2


def unit_chart(dim):
    return FreeChart(base_point=np.zeros(dim), basis=np.eye(dim), dimension=dim)


def test_fd_gradient_linear_objective(golden, bsc_channel):
    # H(Z_0|X_0) is linear in the pair vector, so central differences are
    # exact at any step; the small-h gradient must match a large-h one
    chart = et.free_chart(golden, et.max_entropy_chain(golden))

    def f(t):
        return et.conditional_entropy_given_input(chart.joint_at(t), bsc_channel, 0.02)

    g = et.fd_gradient(f, chart, np.zeros(1), h=1e-4)
    big = 1e-2
    expected = (f(np.array([big])) - f(np.array([-big]))) / (2 * big)
    assert g[0] == pytest.approx(expected, abs=1e-8)


def test_fd_gradient_quadratic_calibration():
    chart = unit_chart(3)
    f = lambda t: -float(np.dot(t, t))
    t0 = np.array([0.3, -0.2, 0.05])
    g = et.fd_gradient(f, None, t0, h=1e-4)
    assert np.allclose(g, -2 * t0, atol=1e-10)


def test_fd_hessian_quadratic_calibration():
    f = lambda t: -float(np.dot(t, t))
    h = et.fd_hessian(f, None, np.array([0.1, -0.4]), h=1e-4)
    assert np.allclose(h, -2 * np.eye(2), atol=1e-8)
    assert np.allclose(h, h.T)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_binary_entropy_second_derivative(p):
    # one-parameter family: the transition probability itself is the chart
    chart = FreeChart(base_point=np.array([0.0]), basis=np.array([[1.0]]), dimension=1)
    f = lambda t: -t[0] * math.log(t[0]) - (1 - t[0]) * math.log(1 - t[0])
    hess = et.fd_hessian(f, chart, np.array([p]), h=1e-4)
    expected = -1.0 / p - 1.0 / (1.0 - p)
    assert hess[0, 0] == pytest.approx(expected, abs=1e-4)
    assert expected <= -2.0


def test_noiseless_chart_hessian_negative(golden, bsc_channel):
    chart = et.free_chart(golden, et.max_entropy_chain(golden))
    fv = mi_objective(bsc_channel, golden, 4, 0.0)
    for t in (-0.15, 0.0, 0.12):
        h = et.fd_hessian(lambda tt: fv(chart.point_at(tt)), chart, np.array([t]), delta=1e-4)
        assert h[0, 0] < 0


def test_jacobi_against_characteristic_polynomial():
    rng = np.random.default_rng(5)
    for _ in range(20):
        raw = rng.normal(size=(2, 2))
        sym = (raw + raw.T) / 2
        tr, det = sym[0, 0] + sym[1, 1], sym[0, 0] * sym[1, 1] - sym[0, 1] ** 2
        disc = math.sqrt(max(tr * tr - 4 * det, 0.0))
        expected = sorted([(tr - disc) / 2, (tr + disc) / 2])
        got = jacobi_eigenvalues(sym)
        assert np.allclose(got, expected, atol=1e-10)


def test_jacobi_diagonal_passthrough():
    assert np.allclose(jacobi_eigenvalues(np.diag([3.0, -1.0, 2.0])), [-1.0, 2.0, 3.0])


def test_certification_passes(golden, bsc_channel):
    rep = et.certify_concavity(bsc_channel, golden, n=8, eps=0.01, delta=0.02, grid=9)
    assert rep.passed
    assert rep.max_eigenvalue < 0
    assert len(rep.grid_points) == 9


def test_certification_zero_noise(golden, bsc_channel):
    rep = et.certify_concavity(bsc_channel, golden, n=4, eps=0.0, delta=0.02, grid=9)
    assert rep.passed and rep.max_eigenvalue < -0.5


def test_certification_negative_control(golden):
    chart = et.free_chart(golden, et.max_entropy_chain(golden))
    convex = lambda t: float(np.dot(t, t))
    rep = certify_objective(convex, chart, delta=0.02, grid=5)
    assert not rep.passed
    assert rep.max_eigenvalue > 0


def test_noiseless_optimum(golden, bsc_channel):
    res = et.maximize_mi(bsc_channel, golden, n=4, eps=0.0, delta=1e-3, tol=1e-7)
    assert res.status == "converged"
    assert res.value == pytest.approx(math.log(PHI), abs=1e-8)
    # independent scalar oracle over the one-dimensional chart
    chart = et.free_chart(golden, et.max_entropy_chain(golden))
    lo, hi = -0.3, 0.3
    t_star = golden_section_max(
        lambda t: chain_entropy_rate(golden, chart.point_at([t])), lo, hi
    )
    oracle = chart.point_at([t_star])
    assert np.max(np.abs(res.argmax.values - oracle)) < 1e-6
    assert all(e < 0 for e in res.hessian_eigs)


def test_trivial_constraint_optimum(trivial, bsc_channel):
    res = et.maximize_mi(bsc_channel, trivial, n=3, eps=0.0, delta=1e-3, tol=1e-7)
    assert res.value == pytest.approx(math.log(2), abs=1e-8)
    assert np.allclose(res.argmax.values, 0.25, atol=1e-5)


def test_optimum_dominates_restarts(golden, bsc_channel):
    res = et.maximize_mi(bsc_channel, golden, n=8, eps=0.01, delta=1e-3, tol=1e-7)
    fv = mi_objective(bsc_channel, golden, 8, 0.01)
    assert res.value >= fv(et.project_to_feasible(et.max_entropy_chain(golden).values, golden, 1e-3).values) - 1e-12
    rng = np.random.default_rng(12)
    for _ in range(20):
        raw = rng.dirichlet(np.ones(golden.n_pairs))
        point = et.project_to_feasible(raw, golden, 1e-3)
        assert res.value >= fv(point.values) - 1e-9


def test_multistart_uniqueness(golden, bsc_channel):
    tol = 1e-7
    results = [
        et.maximize_mi(bsc_channel, golden, n=6, eps=0.01, delta=0.02, tol=tol, starts=1, seed=s)
        for s in range(1)
    ]
    multi = et.maximize_mi(bsc_channel, golden, n=6, eps=0.01, delta=0.02, tol=tol, starts=5, seed=99)
    for res in results:
        assert np.max(np.abs(res.argmax.values - multi.argmax.values)) <= 10 * tol


def test_interior_raw_gradient_small(golden, bsc_channel):
    res = et.maximize_mi(bsc_channel, golden, n=6, eps=0.01, delta=1e-3, tol=1e-7)
    assert not res.boundary_active
    chart = et.free_chart(golden, et.max_entropy_chain(golden))
    fv = mi_objective(bsc_channel, golden, 6, 0.01)
    g = et.fd_gradient(
        lambda t: fv(chart.point_at(t)), chart, chart.coords_of(res.argmax.values), delta=1e-3
    )
    assert np.linalg.norm(g) <= 1e-7


def test_capacity_zero_noise_flat(golden, bsc_channel):
    study = et.capacity_sequence(bsc_channel, golden, 0.0, [2, 3, 4], delta=1e-3, tol=1e-7)
    assert all(g <= 2e-7 for g in study.gaps)


def test_capacity_sequence_converges(golden, bsc_channel):
    study = et.capacity_sequence(bsc_channel, golden, 0.01, [4, 6, 8, 10], delta=1e-3, tol=1e-7)
    assert study.gaps[0] > study.gaps[1] > study.gaps[2]
    assert study.fitted_rho < 1.0
    values = [r.value for _, r in study.pairs]
    for a, b in zip(values, values[1:]):
        assert b <= a + 1e-9


def test_objective_dominates_certification_grid(golden, bsc_channel):
    res = et.maximize_mi(bsc_channel, golden, n=6, eps=0.01, delta=0.02, tol=1e-7)
    rep = et.certify_concavity(bsc_channel, golden, n=6, eps=0.01, delta=0.02, grid=9)
    chart = et.free_chart(golden, et.max_entropy_chain(golden))
    fv = mi_objective(bsc_channel, golden, 6, 0.01)
    for t, _ in rep.grid_points:
        assert res.value >= fv(chart.point_at(np.array(t))) - 1e-9
