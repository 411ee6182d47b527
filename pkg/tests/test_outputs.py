import itertools
import math

import numpy as np
import pytest

import entrate as et
from conftest import brute_word_probability
from entrate.errors import (
    AlphabetMismatch,
    AssumptionViolated,
    NotCleanWord,
    WordTooShort,
    ZeroMass,
)
from entrate.outputs import stabilization_pairs
from entrate.series import ORD_INF, TropicalMatrix


def test_matrices_match_worked_example(os_half):
    # golden-mean BSC at p = 1/2: entries (1-p)(1-e), pe / 1-e, 0 and
    # (1-p)e, p(1-e) / e, 0
    z0, z1 = os_half.out_index("0"), os_half.out_index("1")
    m0 = os_half.trans_series[z0][:, :, :2]
    m1 = os_half.trans_series[z1][:, :, :2]
    assert np.allclose(m0[0, 0], [0.5, -0.5])
    assert np.allclose(m0[0, 1], [0.0, 0.5])
    assert np.allclose(m0[1, 0], [1.0, -1.0])
    assert np.allclose(m0[1, 1], [0.0, 0.0])
    assert np.allclose(m1[0, 0], [0.0, 0.5])
    assert np.allclose(m1[0, 1], [0.5, -0.5])
    assert np.allclose(m1[1, 0], [0.0, 1.0])
    assert np.allclose(m1[1, 1], [0.0, 0.0])


def test_single_state_channel_joint_states(os_half, p_half):
    assert os_half.n_joint_states == 2
    assert np.allclose(os_half.pi_joint, [2 / 3, 1 / 3], atol=1e-12)
    # with one channel state the summed matrix is the input transition
    assert np.allclose(os_half.full_series[:, :, 0], et.to_transition(p_half))


def test_ge_joint_states(p_half, ge_channel):
    os_ = et.build_output_process(p_half, ge_channel)
    assert os_.n_joint_states == 4
    row_sums = os_.full_series.sum(axis=1)
    assert np.allclose(row_sums[:, 0], 1.0) and np.allclose(row_sums[:, 1:], 0.0)


def test_alphabet_mismatch(p_half):
    ch = et.custom({"s": 1.0}, ["a"], {("a", "s", "a"): [1.0]}, {"a": "a"})
    with pytest.raises(AlphabetMismatch):
        et.build_output_process(p_half, ch)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_word_110_series(golden, bsc_channel, p):
    jp = et.from_transition(golden, [[1 - p, p], [1.0, 0.0]])
    os_ = et.build_output_process(jp, bsc_channel)
    s = os_.word_probability("110")
    assert s.exact_order == 1
    expected = (2 * p - p * p) / (1 + p)
    assert s.leading_coefficient() == pytest.approx(expected, rel=1e-9)


def test_noiseless_words_match_input(os_half, p_half):
    assert os_half.word_probability("00", 0.0) == pytest.approx(p_half.value("00"), abs=1e-14)
    assert os_half.word_probability("11", 0.0) == 0.0


@pytest.mark.parametrize("n", [1, 3, 5, 8])
def test_word_normalization(os_half, n):
    total = sum(os_half.word_probability(w, 0.01) for w in os_half.words_of_length(n))
    assert total == pytest.approx(1.0, abs=1e-10)


def test_conditional_vs_brute_force(os_half, p_half, bsc_channel):
    got = os_half.conditional_probability("0", "11", 0.01)
    expected = brute_word_probability(p_half, bsc_channel, "110", 0.01) / brute_word_probability(
        p_half, bsc_channel, "11", 0.01
    )
    assert got == pytest.approx(expected, abs=1e-12)


def test_word_probability_vs_brute_force_ge(p_half, ge_channel):
    os_ = et.build_output_process(p_half, ge_channel)
    for word in ("0", "10", "110", "0101"):
        got = os_.word_probability(word, 0.02)
        assert got == pytest.approx(brute_word_probability(p_half, ge_channel, word, 0.02), abs=1e-12)


def test_conditional_order_bound(os_half):
    for n in range(1, 9):
        for hist in ["0" * n, "10" * (n // 2) + "0" * (n % 2)]:
            cond = os_half.conditional_probability("1", hist[:n])
            assert cond.exact_order <= os_half.max_kernel_order


def test_conditional_at_zero_is_markov(os_half):
    assert os_half.conditional_probability("1", "00", 0.0) == pytest.approx(0.5)
    assert os_half.conditional_probability("0", "01", 0.0) == pytest.approx(1.0)


def test_simplex_step_matches_bayes(os_half):
    w = np.array([0.5, 0.5])
    num = os_half.numeric(0.01)
    for z in "01":
        stepped = os_half.simplex_step(w, z, 0.01)
        v = w @ num[os_half.out_index(z)]
        assert np.allclose(stepped, v / v.sum(), atol=1e-12)
        assert stepped.sum() == pytest.approx(1.0)


def test_simplex_step_composition(os_half):
    # stepping through a word equals normalizing the full chain
    w = os_half.pi_joint.copy()
    for z in "0100":
        w = os_half.simplex_step(w, z, 0.01)
    num = os_half.numeric(0.01)
    u = os_half.pi_joint.copy()
    for z in "0100":
        u = u @ num[os_half.out_index(z)]
    assert np.allclose(w, u / u.sum(), atol=1e-12)


def test_simplex_step_zero_noise_limit(p_half, ge_channel):
    # after a clean continuation the limit point weights channel states by q
    os_ = et.build_output_process(p_half, ge_channel)
    w = np.zeros(4)
    w[os_.columns_for_output["0"]] = ge_channel.state_probs  # concentrated on input 0
    out = os_.simplex_step(w, "1", 0.0)
    expect = np.zeros(4)
    expect[os_.columns_for_output["1"]] = ge_channel.state_probs
    assert np.allclose(out, expect, atol=1e-12)


def test_simplex_step_zero_mass():
    p = et.from_transition(et.rll_constraint(1, None), [[0.5, 0.5], [1.0, 0.0]])
    os_ = et.build_output_process(p, et.bec())
    w = np.array([0.0, 1.0])  # conditioned on input 1; BEC cannot emit 0 next...
    with pytest.raises(ZeroMass):
        os_.simplex_step(w, "1", 0.0)


def test_classify_typical_all_typical_at_high_alpha(os_half):
    rep = os_half.classify_typical(6, float(os_half.max_kernel_order) + 0.01, 0.01)
    assert rep.atypical_count == 0
    assert rep.atypical_mass == 0.0


def test_classify_typical_zero_noise(os_half):
    rep = os_half.classify_typical(8, 0.3, 0.0)
    assert rep.atypical_mass == 0.0


def test_classify_typical_decay(os_half):
    masses = [os_half.classify_typical(n, 0.3, 0.01).atypical_mass for n in (6, 8, 10)]
    assert masses[2] < masses[1] < masses[0]
    ratios = [b / a for a, b in zip(masses, masses[1:])]
    assert all(r < 1 for r in ratios)


def test_typical_counts_add_up(os_half):
    rep = os_half.classify_typical(7, 0.3, 0.01)
    assert rep.typical_count + rep.atypical_count == 2**7


def test_unique_min_column_in_pair_products(os_half):
    # products over the three clean 2-words each have a unique column whose
    # entries minimize the orders row-wise
    for word in ("00", "01", "10"):
        mats = [TropicalMatrix(os_half.orders[os_half.out_index(z)]) for z in word]
        prod = (mats[0] @ mats[1]).orders
        col_is_min = [all(prod[s, j] == prod[s].min() for s in range(2)) for j in range(2)]
        assert sum(col_is_min) == 1


def test_order_dominance_on_all_clean_words(os_half):
    assert os_half.dominance_block_length == 4  # exponent 2, kernel order 1
    words = os_half.clean_words(6)
    assert len(words) == 13
    for w in words:
        rep = os_half.check_order_dominance(w)
        assert rep.passed, rep


def test_order_dominance_guards(os_half, p_half):
    with pytest.raises(NotCleanWord):
        os_half.check_order_dominance("1100")
    with pytest.raises(WordTooShort):
        os_half.check_order_dominance("010")
    os_bec = et.build_output_process(p_half, et.bec())
    with pytest.raises(AssumptionViolated):
        os_bec.check_order_dominance("0000")


def test_clean_iff_order_zero(os_half, golden):
    allowed = set(et.enumerate_allowed(golden, 6))
    for word in os_half.words_of_length(6):
        if os_half.word_order(word) == 0:
            assert word in allowed
        else:
            assert word not in allowed


def test_marginal_consistency(os_half):
    hist = "0100"
    total = np.zeros(os_half.budget + 1)
    for z0 in os_half.outputs:
        total += os_half.word_probability(hist + z0).coeffs
    assert np.allclose(total, os_half.word_probability(hist).coeffs, atol=1e-13)


def test_stabilization_identical_histories(os_half):
    rep = os_half.check_coefficient_stabilization("010010", "010010", 6, 0)
    assert rep.passed and rep.max_rel_delta == 0.0


def test_stabilization_pairs_k0(os_half):
    pairs = stabilization_pairs(os_half, 6, 50)
    assert len(pairs) == 50
    for a, b in pairs:
        rep = os_half.check_coefficient_stabilization(a, b, 6, 0)
        assert rep.j_max == 5
        assert rep.passed, (a, b, rep.max_rel_delta)


def test_stabilization_k1(os_half):
    # noise inside the shared recent block: suffix 01100 needs one flip
    a, b = "001100", "101100"
    assert os_half._tail_order(a, 5) == 1
    assert os_half._tail_order(b, 5) == 1
    rep = os_half.check_coefficient_stabilization(a, b, 5, 1)
    assert rep.j_max == 0
    assert rep.passed


def test_contraction_of_conditionals(os_half):
    # sup over typical histories of the change when one more symbol of
    # context is added; should decay geometrically
    eps = 0.01
    probs = {}
    for n in range(3, 13):
        _, p = et.kernels.word_stats(os_half.pi_joint, os_half.numeric(eps), os_half.orders, n)
        probs[n] = p
    orders = {n: et.kernels.word_stats(os_half.pi_joint, os_half.numeric(eps), os_half.orders, n)[0] for n in range(3, 13)}
    gaps = []
    for n in range(4, 12):
        pn, pn1 = probs[n], probs[n + 1]
        pm = probs[n - 1]
        worst = 0.0
        mod = 2 ** (n - 1)
        for h in range(2**n):
            if orders[n][h] > 0.3 * n or pn[h] <= 0:
                continue
            short = h % mod
            for z0 in range(2):
                c_long = pn1[h * 2 + z0] / pn[h]
                c_short = pn[short * 2 + z0] / pm[short]
                worst = max(worst, abs(c_long - c_short))
        gaps.append(worst)
    ratios = [b / a for a, b in zip(gaps, gaps[1:]) if a > 1e-14]
    assert np.mean(ratios) < 1.0
