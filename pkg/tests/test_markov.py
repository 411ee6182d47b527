import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import entrate as et
from conftest import chain_entropy_rate, golden_section_max
from entrate.errors import (
    InfeasibleDelta,
    NotPrimitive,
    NotStochastic,
    SupportViolation,
    ZeroMarginal,
)

PHI = (1 + math.sqrt(5)) / 2


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_stationary_matches_closed_form(golden, p):
    jp = et.from_transition(golden, [[1 - p, p], [1.0, 0.0]])
    pi0, pi1 = 1 / (p + 1), p / (p + 1)
    assert jp.value("00") == pytest.approx(pi0 * (1 - p), abs=1e-12)
    assert jp.value("01") == pytest.approx(pi0 * p, abs=1e-12)
    assert jp.value("10") == pytest.approx(pi1, abs=1e-12)


def test_example_halves(p_half):
    assert np.allclose(p_half.values, [1 / 3, 1 / 3, 1 / 3], atol=1e-12)


def test_p03_joint(golden):
    jp = et.from_transition(golden, [[0.7, 0.3], [1.0, 0.0]])
    assert jp.value("01") == pytest.approx(0.3 / 1.3, abs=1e-12)


def test_trivial_uniform(trivial):
    jp = et.from_transition(trivial, [[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(jp.values, 0.25, atol=1e-14)


def test_from_transition_errors(golden, trivial):
    with pytest.raises(NotStochastic):
        et.from_transition(golden, [[0.5, 0.4], [1.0, 0.0]])
    with pytest.raises(SupportViolation):
        et.from_transition(golden, [[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(NotPrimitive):
        et.from_transition(trivial, [[0.0, 1.0], [1.0, 0.0]])


def test_to_transition_formula(golden):
    jp = et.joint_prob(golden, [0.4, 0.3, 0.3])
    P = et.to_transition(jp)
    assert P[0, 0] == pytest.approx(0.4 / 0.7)
    assert P[1, 0] == 1.0


def test_to_transition_zero_marginal(trivial):
    jp = et.joint_prob(trivial, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ZeroMarginal):
        et.to_transition(jp)


@pytest.mark.parametrize("p", [0.15, 0.5, 0.85])
def test_round_trip(golden, p):
    jp = et.from_transition(golden, [[1 - p, p], [1.0, 0.0]])
    back = et.from_transition(golden, et.to_transition(jp))
    assert np.allclose(jp.values, back.values, atol=1e-10)


def test_parry_chain(golden):
    parry = et.max_entropy_chain(golden)
    P = et.to_transition(parry)
    assert P[0, 1] == pytest.approx(1 / PHI**2, abs=1e-10)
    assert chain_entropy_rate(golden, parry.values) == pytest.approx(math.log(PHI), abs=1e-10)


def test_parry_perron_root(golden):
    lam, vec = et.markov.perron(golden.adjacency)
    assert lam == pytest.approx(PHI, abs=1e-12)
    assert (vec > 0).all()


def test_parry_maximizes_on_grid(golden):
    parry = et.max_entropy_chain(golden)
    chart = et.free_chart(golden, parry)
    assert chart.dimension == 1
    best = chain_entropy_rate(golden, parry.values)
    lo, hi = -0.4, 0.6
    for t in np.arange(lo, hi, 1e-4):
        vals = chart.point_at([t])
        if vals.min() <= 1e-9:
            continue
        assert chain_entropy_rate(golden, vals) <= best + 1e-6


def test_trivial_parry_uniform(trivial):
    parry = et.max_entropy_chain(trivial)
    assert np.allclose(parry.values, 0.25, atol=1e-12)
    assert chain_entropy_rate(trivial, parry.values) == pytest.approx(math.log(2), abs=1e-12)


# -- projection ------------------------------------------------------------


def test_projection_identity_on_feasible(p_half, golden):
    proj = et.project_to_feasible(p_half.values, golden, 0.0)
    assert np.allclose(proj.values, p_half.values, atol=1e-12)


def test_projection_corner_with_oracle(golden):
    v = np.array([1.0, 0.0, 0.0])
    proj = et.project_to_feasible(v, golden, 0.0)
    # the feasible set is {(1-2t, t, t)}; minimize |v - x|^2 = 6 t^2 over t >= 0
    ts = np.arange(0.0, 0.5, 1e-6)
    dists = 6 * ts**2
    t_star = ts[np.argmin(dists)]
    oracle = np.array([1 - 2 * t_star, t_star, t_star])
    assert np.allclose(proj.values, oracle, atol=1e-5)
    # KKT: the residual must not improve along any feasible direction
    chart = et.free_chart(golden, et.max_entropy_chain(golden))
    for d in chart.basis:
        step = proj.values + 1e-6 * d
        if step.min() >= 0:
            assert np.linalg.norm(step - v) >= np.linalg.norm(proj.values - v) - 1e-9


def test_projection_delta_floor(golden):
    proj = et.project_to_feasible(np.array([1.0, 0.0, 0.0]), golden, 0.2)
    assert (proj.values >= 0.2 - 1e-9).all()


def test_projection_infeasible_delta(golden):
    with pytest.raises(InfeasibleDelta):
        et.project_to_feasible(np.array([1.0, 0.0, 0.0]), golden, 0.4)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-2, 2, allow_nan=False), min_size=3, max_size=3),
    st.lists(st.floats(-2, 2, allow_nan=False), min_size=3, max_size=3),
)
def test_projection_nonexpansive_and_idempotent(u, v):
    golden = et.rll_constraint(1, None)
    pu = et.project_to_feasible(np.array(u), golden, 0.0)
    pv = et.project_to_feasible(np.array(v), golden, 0.0)
    assert np.linalg.norm(pu.values - pv.values) <= np.linalg.norm(np.array(u) - np.array(v)) + 1e-9
    again = et.project_to_feasible(pu.values, golden, 0.0)
    assert np.allclose(again.values, pu.values, atol=1e-9)


# -- chart ------------------------------------------------------------------


def test_chart_dimensions(golden, trivial):
    g_chart = et.free_chart(golden, et.max_entropy_chain(golden))
    t_chart = et.free_chart(trivial, et.max_entropy_chain(trivial))
    # independent rank oracle on the affine constraint matrix
    a_g, _ = et.markov.affine_constraints(golden)
    a_t, _ = et.markov.affine_constraints(trivial)
    assert g_chart.dimension == golden.n_pairs - np.linalg.matrix_rank(a_g) == 1
    assert t_chart.dimension == trivial.n_pairs - np.linalg.matrix_rank(a_t) == 2


def test_chart_orthonormal(golden, trivial):
    for c in (golden, trivial):
        chart = et.free_chart(c, et.max_entropy_chain(c))
        gram = chart.basis @ chart.basis.T
        assert np.allclose(gram, np.eye(chart.dimension), atol=1e-12)


def test_chart_points_satisfy_constraints(golden):
    chart = et.free_chart(golden, et.max_entropy_chain(golden))
    a, b = et.markov.affine_constraints(golden)
    for t in (-0.2, 0.0, 0.15):
        vals = chart.point_at([t])
        assert np.allclose(a @ vals, b, atol=1e-12)


def test_in_margin(p_half):
    assert et.in_margin(p_half, 0.2)
    assert not et.in_margin(p_half, 0.5)
