import itertools
import math

import numpy as np
import pytest

import entrate as et


@pytest.fixture(scope="session")
def golden():
    return et.rll_constraint(1, None)


@pytest.fixture(scope="session")
def trivial():
    return et.build_constraint(["0", "1"], [])


@pytest.fixture(scope="session")
def p_half(golden):
    return et.from_transition(golden, [[0.5, 0.5], [1.0, 0.0]])


@pytest.fixture(scope="session")
def bsc_channel():
    return et.bsc()


@pytest.fixture(scope="session")
def ge_channel():
    return et.gilbert_elliott(0.5, 2.0)


@pytest.fixture(scope="session")
def os_half(p_half, bsc_channel):
    return et.build_output_process(p_half, bsc_channel, budget=12)


def brute_word_probability(p, ch, word, eps):
    """Direct path sum, independent of the matrix-chain machinery.

    The channel state is i.i.d., so emissions marginalize per step:
    p(z|x) = sum_c q_c p(z|x,c)(eps).
    """
    c = p.constraint
    Pi = et.to_transition(p)
    pi_x = np.zeros(c.n_symbols)
    for k, pair in enumerate(c.allowed_pairs):
        pi_x[c.index(pair[0])] += p.values[k]
    table = ch.kernel_at(eps)
    mixed = np.tensordot(ch.state_probs, table, axes=(0, 1))  # (x, z)
    zidx = [ch.outputs.index(z) for z in word]
    total = 0.0
    for xpath in itertools.product(range(c.n_symbols), repeat=len(word)):
        w = pi_x[xpath[0]]
        for a, b in zip(xpath, xpath[1:]):
            w *= Pi[a, b]
        if w == 0.0:
            continue
        emit = 1.0
        for xi, zi in zip(xpath, zidx):
            emit *= mixed[ch.inputs.index(c.alphabet[xi]), zi]
        total += w * emit
    return total


def chain_entropy_rate(c, values):
    """Closed-form entropy rate of a first-order chain from its pair vector."""
    pi_x = np.zeros(c.n_symbols)
    for k, pair in enumerate(c.allowed_pairs):
        pi_x[c.index(pair[0])] += values[k]
    h = 0.0
    for k, pair in enumerate(c.allowed_pairs):
        v = values[k]
        if v > 0.0:
            h -= v * math.log(v / pi_x[c.index(pair[0])])
    return h


def golden_section_max(f, lo, hi, tol=1e-11):
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c_ = b - g * (b - a)
    d_ = a + g * (b - a)
    fc, fd = f(c_), f(d_)
    while b - a > tol:
        if fc > fd:
            b, d_, fd = d_, c_, fc
            c_ = b - g * (b - a)
            fc = f(c_)
        else:
            a, c_, fc = c_, d_, fd
            d_ = a + g * (b - a)
            fd = f(d_)
    return (a + b) / 2
