"""Conditional entropy of the output process and its two-part split.

For a history length n and noise level eps > 0, the conditional entropy
H_n sums -p(word) log p(last|history) over all words of length n+1.  Each
conditional has an exact leading order k in eps, so log p = log(p/eps^k) +
k log eps splits H_n exactly into a smooth part G_n and a coefficient F_n
multiplying log eps:

    H_n = G_n + F_n log eps,   F_n = sum -ord(cond) p(word) <= 0.

Exact mode enumerates the word tree; the Monte Carlo estimator samples
words and averages the same per-word quantities, with a counter-based
generator so runs are reproducible bit for bit at a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channels import ChannelSpec, conditional_entropy_given_input as _h_given_input
from .errors import BudgetExceeded, GridTooCoarse, NonpositiveEps
from .markov import JointProb, free_chart, symbol_marginals
from .outputs import DEFAULT_WORD_BUDGET, OutputProcess, build_output_process

_MC_BLOCK = 1 << 13


@dataclass(frozen=True)
class EntropyDecomposition:
    n: int
    eps: float
    h_n: float
    f_n: float
    g_n: float
    residual: float
    mode: str
    samples: int | None = None
    seed: int | None = None
    stderr: float | None = None


@dataclass(frozen=True)
class ExpansionEstimate:
    f1: float
    g1: float
    h0: float
    eps_grid: tuple[float, ...]
    richardson_error: float


@dataclass(frozen=True)
class DiagnosticsReport:
    n_list: tuple[int, ...]
    values: dict
    diffs: dict
    rhos: dict
    flagged: bool


def conditional_entropy_given_input(p: JointProb, ch: ChannelSpec, eps: float) -> float:
    """H(Z_0|X_0) in nats; linear in the pair probabilities, 0 at eps = 0."""
    return _h_given_input(symbol_marginals(p), p.constraint.alphabet, ch, eps)


def entropy_decomposition(
    p: JointProb,
    ch: ChannelSpec,
    n: int,
    eps: float,
    word_budget: int = DEFAULT_WORD_BUDGET,
) -> EntropyDecomposition:
    """Exact H_n, F_n, G_n by enumerating every output word of length n+1."""
    if eps < 0:
        raise NonpositiveEps("eps must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    nz = len(ch.outputs)
    if nz ** (n + 1) > word_budget:
        raise BudgetExceeded(
            f"{nz}^{n + 1} words exceed the budget {word_budget}; use the Monte Carlo mode"
        )
    os_ = build_output_process(p, ch)
    num = os_.numeric(eps)
    if eps == 0.0:
        h, f, g = kernels.decomp_sums(os_.pi_joint, num, os_.orders, n, 0.0, False)
        residual = abs(h - g)
    else:
        log_eps = math.log(eps)
        h, f, g = kernels.decomp_sums(os_.pi_joint, num, os_.orders, n, log_eps, True)
        residual = abs(h - g - f * log_eps)
    return EntropyDecomposition(n=n, eps=eps, h_n=h, f_n=f, g_n=g, residual=residual, mode="exact")


def mutual_information_n(
    p: JointProb, ch: ChannelSpec, n: int, eps: float, word_budget: int = DEFAULT_WORD_BUDGET
) -> float:
    """I_n between output and input: H_n minus the per-symbol channel loss."""
    d = entropy_decomposition(p, ch, n, eps, word_budget)
    return d.h_n - conditional_entropy_given_input(p, ch, eps)


def _mc_tables(os_: OutputProcess, eps: float):
    ch = os_.channel
    c = os_.constraint
    cum_init_x = np.cumsum(os_.pi_x)
    cum_rows_x = np.cumsum(os_.transition, axis=1)
    cum_state = np.cumsum(ch.state_probs)
    table = ch.kernel_at(eps)
    by_alpha = np.stack([table[ch.inputs.index(sym)] for sym in c.alphabet])
    cum_out = np.cumsum(np.clip(by_alpha, 0.0, None), axis=2)
    cum_out /= cum_out[:, :, -1:]
    return cum_init_x, cum_rows_x, cum_state, cum_out


def entropy_monte_carlo(
    p: JointProb, ch: ChannelSpec, n: int, eps: float, samples: int, seed: int
) -> EntropyDecomposition:
    """Sampled estimate of the decomposition, 3-sigma compatible with exact mode.

    Words are simulated block by block; block b draws its uniforms from a
    Philox stream keyed by (seed, b), so the result is independent of the
    block schedule and identical across runs.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if eps < 0:
        raise NonpositiveEps("eps must be >= 0")
    os_ = build_output_process(p, ch)
    num = os_.numeric(eps)
    cum_init_x, cum_rows_x, cum_state, cum_out = _mc_tables(os_, eps)
    hs, fs = [], []
    done = 0
    block = 0
    while done < samples:
        b = min(_MC_BLOCK, samples - done)
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, block], dtype=np.uint64)))
        u = rng.random((b, n + 1, 3))
        h, f = kernels.mc_block(
            u, cum_init_x, cum_rows_x, cum_state, cum_out, os_.pi_joint, num, os_.orders
        )
        hs.append(h)
        fs.append(f)
        done += b
        block += 1
    h_all = np.concatenate(hs)
    f_all = np.concatenate(fs)
    h_n = float(h_all.mean())
    f_n = float(f_all.mean())
    stderr = float(h_all.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
    g_n = h_n if eps == 0.0 else h_n - f_n * math.log(eps)
    return EntropyDecomposition(
        n=n,
        eps=eps,
        h_n=h_n,
        f_n=f_n,
        g_n=g_n,
        residual=0.0,
        mode="monte_carlo",
        samples=samples,
        seed=seed,
        stderr=stderr,
    )


def _quadratic_at_zero(xs, ys) -> float:
    (x1, x2, x3), (y1, y2, y3) = xs, ys
    return (
        y1 * x2 * x3 / ((x1 - x2) * (x1 - x3))
        + y2 * x1 * x3 / ((x2 - x1) * (x2 - x3))
        + y3 * x1 * x2 / ((x3 - x1) * (x3 - x2))
    )


def _linear_at_zero(xs, ys) -> float:
    (x1, x2), (y1, y2) = xs, ys
    return y2 + (y1 - y2) * x2 / (x2 - x1)


def estimate_expansion(
    p: JointProb,
    ch: ChannelSpec,
    n: int,
    eps_grid,
    word_budget: int = DEFAULT_WORD_BUDGET,
) -> ExpansionEstimate:
    """First-order coefficients of the small-eps expansion at fixed n.

    f1 extrapolates F_n(eps)/eps to eps -> 0 (F_n/eps is smooth there), g1
    extrapolates (G_n(eps) - G_n(0))/eps; both use the quadratic through the
    three smallest grid points, with the linear extrapolant as the error
    reference.
    """
    grid = [float(e) for e in eps_grid]
    if len(grid) < 3:
        raise ValueError("eps_grid needs at least 3 values")
    if any(e <= 0 for e in grid) or any(a <= b for a, b in zip(grid, grid[1:])):
        raise ValueError("eps_grid must be positive and strictly decreasing")
    decomp0 = entropy_decomposition(p, ch, n, 0.0, word_budget)
    h0 = decomp0.g_n
    fvals, gvals = [], []
    for eps in grid:
        d = entropy_decomposition(p, ch, n, eps, word_budget)
        fvals.append(d.f_n / eps)
        gvals.append((d.g_n - h0) / eps)
    xs3, xs2 = grid[-3:], grid[-2:]
    f1 = _quadratic_at_zero(xs3, fvals[-3:])
    g1 = _quadratic_at_zero(xs3, gvals[-3:])
    err_f = abs(f1 - _linear_at_zero(xs2, fvals[-2:]))
    err_g = abs(g1 - _linear_at_zero(xs2, gvals[-2:]))
    err = max(err_f, err_g)
    if err_f > 0.1 * abs(f1) + 1e-9 or err_g > 0.1 * abs(g1) + 1e-9:
        raise GridTooCoarse(
            f"extrapolation error {err:.3g} exceeds 10% of the estimate; refine the grid"
        )
    return ExpansionEstimate(
        f1=float(f1), g1=float(g1), h0=float(h0), eps_grid=tuple(grid), richardson_error=float(err)
    )


def fit_geometric_ratio(ns, diffs) -> float:
    """Per-step ratio from a log-linear fit of successive differences.

    Differences below 1e-14 are treated as converged; all-converged
    sequences report ratio 0.
    """
    ns = np.asarray(ns, dtype=float)
    diffs = np.asarray(diffs, dtype=float)
    keep = diffs > 1e-14
    if keep.sum() < 2:
        return 0.0
    slope = np.polyfit(ns[keep], np.log(diffs[keep]), 1)[0]
    return float(np.exp(slope))


def convergence_diagnostics(
    p: JointProb,
    ch: ChannelSpec,
    eps: float,
    n_list,
    chart_step: float = 1e-4,
    word_budget: int = DEFAULT_WORD_BUDGET,
) -> DiagnosticsReport:
    """Successive differences of H_n, F_n, G_n and of the chart gradient of H_n.

    Fits one geometric ratio per sequence; a ratio at or above 1 flags the
    run as non-converging.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3 or any(a >= b for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing with at least 3 entries")
    chart = free_chart(p.constraint, p)
    t0 = chart.coords_of(p.values)

    def grad_h(n: int) -> np.ndarray:
        g = np.zeros(chart.dimension)
        for i in range(chart.dimension):
            h = chart_step
            while True:
                tp, tm = t0.copy(), t0.copy()
                tp[i] += h
                tm[i] -= h
                if chart.margin_at(tp) > 0 and chart.margin_at(tm) > 0:
                    break
                h /= 2
                if h < 1e-9:
                    raise ValueError("input chain too close to the boundary for gradients")
            dp = entropy_decomposition(chart.joint_at(tp), ch, n, eps, word_budget).h_n
            dm = entropy_decomposition(chart.joint_at(tm), ch, n, eps, word_budget).h_n
            g[i] = (dp - dm) / (2 * h)
        return g

    rows = {}
    for n in n_list:
        d = entropy_decomposition(p, ch, n, eps, word_budget)
        rows[n] = (d.h_n, d.f_n, d.g_n, grad_h(n))
    mids = [(a + b) / 2 for a, b in zip(n_list, n_list[1:])]
    diffs = {
        "H": [abs(rows[b][0] - rows[a][0]) for a, b in zip(n_list, n_list[1:])],
        "F": [abs(rows[b][1] - rows[a][1]) for a, b in zip(n_list, n_list[1:])],
        "G": [abs(rows[b][2] - rows[a][2]) for a, b in zip(n_list, n_list[1:])],
        "grad_H": [
            float(np.linalg.norm(rows[b][3] - rows[a][3])) for a, b in zip(n_list, n_list[1:])
        ],
    }
    rhos = {name: fit_geometric_ratio(mids, d) for name, d in diffs.items()}
    values = {n: {"H": rows[n][0], "F": rows[n][1], "G": rows[n][2]} for n in n_list}
    return DiagnosticsReport(
        n_list=tuple(n_list),
        values=values,
        diffs=diffs,
        rhos=rhos,
        flagged=any(r >= 1.0 for r in rhos.values()),
    )
