import numpy as np
import pytest

import entrate as et
from entrate.errors import BadParameter, NoiselessViolation, NotInjective, RowSumNotOne
from entrate.series import ORD_INF


def test_bsc_kernel(bsc_channel):
    ch = bsc_channel
    assert np.allclose(ch.kernel[0, 0, 0], [1, -1])  # p(0|0) = 1 - eps
    assert np.allclose(ch.kernel[0, 0, 1], [0, 1])
    assert ch.max_kernel_order == 1
    table0 = ch.kernel_at(0.0)
    assert table0[0, 0, 0] == 1.0 and table0[1, 0, 1] == 1.0


def test_bsc_rows_sum_to_one(bsc_channel):
    sums = bsc_channel.kernel.sum(axis=2)
    assert np.allclose(sums[..., 0], 1.0) and np.allclose(sums[..., 1:], 0.0)


def test_bec_structure():
    ch = et.bec()
    i0, ie = ch.output_index("1"), ch.output_index("e")
    assert ch.kernel_orders[0, 0, i0] == ORD_INF  # never flips
    assert ch.kernel_orders[0, 0, ie] == 1
    assert ch.has_zero_kernel_entries
    assert ch.max_kernel_order == 1
    table0 = ch.kernel_at(0.0)
    assert table0[0, 0, ch.output_index("0")] == 1.0


def test_ge_bad_state_kernel(ge_channel):
    ch = ge_channel
    bad = ch.states.index("bad")
    assert np.allclose(ch.kernel[0, bad, 1], [0, 2.0])  # k * eps
    assert ch.kernel_orders[0, bad, 1] == 1


def test_ge_mixed_flip_coefficient():
    ch = et.gilbert_elliott(0.5, 2.0)
    # state-averaged flip probability has slope q*1 + (1-q)*k = 1.5
    mixed = np.tensordot(ch.state_probs, ch.kernel, axes=(0, 1))
    assert np.allclose(mixed[0, 1], [0.0, 1.5])


def test_ge_parameter_checks():
    with pytest.raises(BadParameter):
        et.gilbert_elliott(0.0, 2.0)
    with pytest.raises(BadParameter):
        et.gilbert_elliott(0.5, -1.0)
    with pytest.raises(BadParameter):
        et.gilbert_elliott(0.5, 20.0)  # k * eps_max > 1


def test_ge_k1_matches_bsc(p_half):
    osg = et.build_output_process(p_half, et.gilbert_elliott(0.3, 1.0), budget=8)
    osb = et.build_output_process(p_half, et.bsc(), budget=8)
    for n in range(1, 7):
        for w in osb.words_of_length(n):
            a = osg.word_probability(w).coeffs
            b = osb.word_probability(w).coeffs
            assert np.max(np.abs(a - b)) < 1e-12


def test_custom_replicates_bsc(p_half):
    table = {
        ("0", "s", "0"): [1, -1],
        ("0", "s", "1"): [0, 1],
        ("1", "s", "0"): [0, 1],
        ("1", "s", "1"): [1, -1],
    }
    ch = et.custom({"s": 1.0}, ["0", "1"], table, {"0": "0", "1": "1"})
    ref = et.bsc()
    assert np.allclose(ch.kernel, ref.kernel)
    assert ch.max_kernel_order == 1


def test_custom_order_two_entry():
    table = {
        ("0", "s", "0"): [1, 0, -1],
        ("0", "s", "1"): [0, 0, 1],
        ("1", "s", "0"): [0, 1],
        ("1", "s", "1"): [1, -1],
    }
    ch = et.custom({"s": 1.0}, ["0", "1"], table, {"0": "0", "1": "1"})
    assert ch.max_kernel_order == 2


def test_custom_validation_errors():
    with pytest.raises(RowSumNotOne):
        et.custom(
            {"s": 1.0},
            ["0", "1"],
            {("0", "s", "0"): [1, -1, 1], ("0", "s", "1"): [0, 1], ("1", "s", "1"): [1]},
            {"0": "0", "1": "1"},
        )
    with pytest.raises(NoiselessViolation):
        et.custom(
            {"s": 1.0},
            ["0", "1"],
            {
                ("0", "s", "0"): [0.5, 0.5],
                ("0", "s", "1"): [0.5, -0.5],
                ("1", "s", "1"): [1],
            },
            {"0": "0", "1": "1"},
        )
    with pytest.raises(NotInjective):
        et.custom(
            {"s": 1.0},
            ["0", "1"],
            {("0", "s", "0"): [1], ("1", "s", "0"): [1]},
            {"0": "0", "1": "0"},
        )


def test_noiseless_at_zero_for_all_families(p_half):
    for ch in (et.bsc(), et.bec(), et.gilbert_elliott(0.4, 3.0)):
        table = ch.kernel_at(0.0)
        for ix, x in enumerate(ch.inputs):
            for ic in range(len(ch.states)):
                row = table[ix, ic]
                assert row[ch.output_index(ch.noiseless_map[x])] == pytest.approx(1.0)
                assert row.sum() == pytest.approx(1.0)
