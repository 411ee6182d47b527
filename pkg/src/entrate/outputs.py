"""The noisy output process of a constrained Markov input.

The joint (input symbol, channel state) chain has one transition matrix per
output symbol z: entry ((x,c),(y,d)) is Pi[x,y] q[d] p(z|y,d)(eps).  Those
matrices summed over z give the plain joint transition matrix, and the
probability of an output word is the stationary row vector pushed through
the word's matrix chain and summed.  Everything downstream (entropy
decomposition, typicality, the order-dominance and coefficient-stability
checks) reads off either the numeric value of that chain at a fixed eps or
its exact leading order, which the companion integer matrices compute in
min-plus arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSpec
from .constraints import enumerate_allowed
from .errors import (
    AlphabetMismatch,
    AssumptionViolated,
    BadParameter,
    BudgetExceeded,
    NotCleanWord,
    PreconditionFailed,
    UnknownSymbol,
    WordTooShort,
    ZeroHistory,
    ZeroMass,
)
from .markov import JointProb, symbol_marginals, to_transition
from .series import (
    ORD_INF,
    EpsSeries,
    TropicalMatrix,
    poly_eval,
    poly_vec_mat,
    tropical_product,
)
from . import kernels

DEFAULT_WORD_BUDGET = 1 << 22
_ZERO_RTOL = 1e-13


@dataclass(frozen=True)
class TypicalityReport:
    n: int
    alpha: float
    eps: float
    typical_count: int
    atypical_count: int
    atypical_mass: float
    max_order_seen: int


@dataclass(frozen=True)
class DominanceReport:
    word: str
    length: int
    required_length: int
    passed: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class StabilizationReport:
    history_a: str
    history_b: str
    shared_suffix: int
    tail_order_bound: int
    j_max: int
    max_rel_delta: float
    passed: bool
    per_j_delta: tuple[float, ...]


class OutputProcess:
    """Output word machinery for one (input chain, channel) pair."""

    def __init__(self, input_chain: JointProb, channel: ChannelSpec, budget: int = 6):
        c = input_chain.constraint
        for sym in c.alphabet:
            if sym not in channel.inputs:
                raise AlphabetMismatch(f"channel has no kernel for input {sym!r}")
        self.input_chain = input_chain
        self.channel = channel
        self.constraint = c
        self.budget = max(budget, channel.degree)
        K = self.budget

        self.outputs = channel.outputs
        self.joint_states = tuple(
            (x, s) for x in c.alphabet for s in channel.states
        )
        m = len(self.joint_states)
        nz = len(self.outputs)

        Pi = to_transition(input_chain)
        pi_x = symbol_marginals(input_chain)
        q = channel.state_probs
        mc = len(channel.states)

        self.transition = Pi
        self.pi_x = pi_x
        self.pi_joint = np.array(
            [pi_x[c.index(x)] * q[channel.states.index(s)] for x, s in self.joint_states]
        )

        self.trans_series = np.zeros((nz, m, m, K + 1))
        self.orders = np.full((nz, m, m), ORD_INF, dtype=np.int64)
        for a, (x, _) in enumerate(self.joint_states):
            ix = c.index(x)
            for b, (y, d) in enumerate(self.joint_states):
                iy, idx_d = c.index(y), channel.states.index(d)
                base = Pi[ix, iy] * q[idx_d]
                if base <= 0.0:
                    continue
                ichan = channel.inputs.index(y)
                for z in range(nz):
                    coeffs = channel.kernel[ichan, idx_d, z]
                    self.trans_series[z, a, b, : len(coeffs)] = base * coeffs
                    self.orders[z, a, b] = channel.kernel_orders[ichan, idx_d, z]
        self.full_series = self.trans_series.sum(axis=0)
        self.leads = np.zeros((nz, m, m))
        finite = self.orders < ORD_INF
        zi, ai, bi = np.nonzero(finite)
        self.leads[zi, ai, bi] = self.trans_series[zi, ai, bi, self.orders[zi, ai, bi]]

        self.max_kernel_order = channel.max_kernel_order
        self.connect_exponent = c.primitivity_e
        self.columns_for_output = {
            z: np.array(
                [j for j, (x, _) in enumerate(self.joint_states) if channel.noiseless_map[x] == z],
                dtype=int,
            )
            for z in self.outputs
        }
        self._check_build()

    def _check_build(self):
        gap = np.max(np.abs(self.trans_series.sum(axis=0) - self.full_series))
        row_sums = self.full_series.sum(axis=1)
        target = np.zeros(self.budget + 1)
        target[0] = 1.0
        row_gap = np.max(np.abs(row_sums - target))
        if gap > 1e-12 or row_gap > 1e-12:
            raise RuntimeError(f"inconsistent transition build: {gap:.2e}, {row_gap:.2e}")
        pi_gap = np.max(np.abs(self.pi_joint @ self.full_series[:, :, 0] - self.pi_joint))
        if pi_gap > 1e-12:
            raise RuntimeError(f"stationary vector mismatch: {pi_gap:.2e}")

    # -- indexing helpers -------------------------------------------------

    @property
    def n_joint_states(self) -> int:
        return len(self.joint_states)

    def out_index(self, z: str) -> int:
        try:
            return self.outputs.index(z)
        except ValueError:
            raise UnknownSymbol(f"output symbol {z!r} not in {self.outputs}") from None

    def _word_indices(self, word: str) -> list[int]:
        if len(word) < 1:
            raise ValueError("word must have length >= 1")
        return [self.out_index(z) for z in word]

    def numeric(self, eps: float) -> np.ndarray:
        """Per-output transition matrices evaluated at eps, shape (nz, m, m)."""
        table = self.channel.kernel_at(eps)
        if np.any(table < -1e-9) or np.any(table > 1 + 1e-9):
            raise BadParameter(f"channel kernel leaves [0,1] at eps={eps}")
        return poly_eval(self.trans_series, eps)

    @property
    def initial_orders(self) -> np.ndarray:
        return np.where(self.pi_joint > 0, 0, ORD_INF).astype(np.int64)

    # -- word probabilities ------------------------------------------------

    def _series_row(self, word: str) -> np.ndarray:
        """Row vector of series after pushing pi through the word chain."""
        u = np.zeros((self.n_joint_states, self.budget + 1))
        u[:, 0] = self.pi_joint
        for z in self._word_indices(word):
            u = poly_vec_mat(u, self.trans_series[z])
        return u

    def word_order(self, word: str) -> int | float:
        """Exact leading order of the word probability (min-plus)."""
        chain = [TropicalMatrix(self.orders[z]) for z in self._word_indices(word)]
        v = tropical_product(chain, self.initial_orders)
        o = int(v.min())
        return math.inf if o >= ORD_INF else o

    def word_probability(self, word: str, eps: float | None = None):
        """Probability of an output word: EpsSeries when eps is None, else float."""
        idx = self._word_indices(word)
        if eps is None:
            return EpsSeries.from_coeffs(self._series_row(word).sum(axis=0))
        num = self.numeric(eps)
        u = self.pi_joint.copy()
        for z in idx:
            u = u @ num[z]
        return float(u.sum())

    def conditional_probability(self, z0: str, history: str, eps: float | None = None):
        """p(z0 | history), as a series (eps None) or a float at the given eps."""
        iz = self.out_index(z0)
        if eps is None:
            hist = self.word_probability(history)
            if hist.is_zero:
                raise ZeroHistory(f"history {history!r} has probability identically 0")
            word = self.word_probability(history + z0)
            cond = word / hist
            if cond.exact_order is not math.inf and cond.exact_order > self.max_kernel_order:
                raise RuntimeError(
                    f"conditional order {cond.exact_order} exceeds the kernel bound "
                    f"{self.max_kernel_order}; series arithmetic is inconsistent"
                )
            return cond
        num = self.numeric(eps)
        u = self.pi_joint.copy()
        for z in self._word_indices(history):
            u = u @ num[z]
        ph = u.sum()
        if ph <= 0.0:
            raise ZeroHistory(f"history {history!r} has probability 0 at eps={eps}")
        return float((u @ num[iz]).sum() / ph)

    # -- induced map on the joint-state simplex -----------------------------

    def simplex_step(self, w, z: str, eps: float) -> np.ndarray:
        """One conditioning step: renormalized push of w through the z-matrix.

        At eps = 0 the plain quotient can be 0/0; the limit is taken by
        normalizing the minimal-order part of the pushed vector.
        """
        w = np.asarray(w, dtype=float)
        iz = self.out_index(z)
        if eps > 0.0:
            v = w @ self.numeric(eps)[iz]
            s = v.sum()
            if s <= 0.0:
                raise ZeroMass(f"conditioning on {z!r} has zero probability at eps={eps}")
            return v / s
        w_ord = np.where(w > 0, 0, ORD_INF).astype(np.int64)
        col_ord = np.minimum(np.min(w_ord[:, None] + self.orders[iz], axis=0), ORD_INF)
        o_star = int(col_ord.min())
        if o_star >= ORD_INF:
            raise ZeroMass(f"conditioning on {z!r} has probability identically 0")
        lead = np.zeros(self.n_joint_states)
        for j in range(self.n_joint_states):
            if col_ord[j] != o_star:
                continue
            sel = (w_ord + self.orders[iz][:, j]) == o_star
            lead[j] = float(w[sel] @ self.leads[iz][sel, j])
        return lead / lead.sum()

    # -- enumeration ---------------------------------------------------------

    def word_table(self, n: int, budget_paths: int = 1 << 14):
        """Series and min-plus data for every length-n word, lex order.

        Returns (orders_minplus, orders_series, coeffs) with coeffs of shape
        (nz**n, budget+1).  Breadth-first over the word tree; intended for
        cross-checking the two order computations at moderate n.
        """
        nz = len(self.outputs)
        if nz**n > budget_paths:
            raise BudgetExceeded(f"{nz}^{n} exceeds the series table budget {budget_paths}")
        m = self.n_joint_states
        K = self.budget
        U = np.zeros((1, m, K + 1))
        U[0, :, 0] = self.pi_joint
        T = self.initial_orders[None, :]
        for _ in range(n):
            nxt = np.zeros((U.shape[0], nz, m, K + 1))
            for k in range(K + 1):
                for a in range(k + 1):
                    nxt[:, :, :, k] += np.einsum(
                        "pi,zij->pzj", U[:, :, a], self.trans_series[:, :, :, k - a]
                    )
            U = nxt.reshape(-1, m, K + 1)
            T = np.stack(
                [
                    np.minimum(np.min(T[:, :, None] + self.orders[z][None, :, :], axis=1), ORD_INF)
                    for z in range(nz)
                ],
                axis=1,
            ).reshape(-1, m)
        coeffs = U.sum(axis=1)
        trop = T.min(axis=1)
        scale = np.abs(coeffs).max(axis=1)
        tol = _ZERO_RTOL * np.maximum(scale, 1.0)
        big = np.abs(coeffs) > tol[:, None]
        has = big.any(axis=1)
        ser = np.where(has, np.argmax(big, axis=1), ORD_INF).astype(np.int64)
        return trop, ser, coeffs

    def words_of_length(self, n: int) -> list[str]:
        """All output words of length n in the lex order used by word_table."""
        words = [""]
        for _ in range(n):
            words = [w + z for w in words for z in self.outputs]
        return words

    def classify_typical(
        self, n: int, alpha: float, eps: float, word_budget: int = DEFAULT_WORD_BUDGET
    ) -> TypicalityReport:
        """Split length-n words at order alpha*n and weigh the heavy tail."""
        nz = len(self.outputs)
        if nz**n > word_budget:
            raise BudgetExceeded(f"{nz}^{n} exceeds the word budget {word_budget}")
        orders, probs = kernels.word_stats(self.pi_joint, self.numeric(eps), self.orders, n)
        atypical = orders > alpha * n
        finite = orders[orders < ORD_INF]
        return TypicalityReport(
            n=n,
            alpha=alpha,
            eps=eps,
            typical_count=int((~atypical).sum()),
            atypical_count=int(atypical.sum()),
            atypical_mass=float(probs[atypical].sum()),
            max_order_seen=int(finite.max()) if len(finite) else 0,
        )

    # -- structural checks ---------------------------------------------------

    def is_clean(self, word: str) -> bool:
        """True when the word can occur with zero noise (order 0)."""
        return self.word_order(word) == 0

    def clean_words(self, length: int) -> list[str]:
        """Zero-noise images of the allowed input words of the given length."""
        nm = self.channel.noiseless_map
        return ["".join(nm[s] for s in w) for w in enumerate_allowed(self.constraint, length)]

    @property
    def dominance_block_length(self) -> int:
        """Minimal chain length certified for the order-dominance property."""
        return 2 * self.connect_exponent * self.max_kernel_order

    def check_order_dominance(self, word: str) -> DominanceReport:
        """Row-wise order test on the matrix chain of a clean word.

        In every row, the columns compatible with the last symbol must share
        one order, strictly below the order at every other column.
        """
        if self.channel.has_zero_kernel_entries:
            raise AssumptionViolated(
                "channel has identically-zero kernel entries; the dominance "
                "check requires every kernel entry to be eventually positive"
            )
        required = self.dominance_block_length
        if len(word) < required:
            raise WordTooShort(f"need length >= {required}, got {len(word)}")
        if not self.is_clean(word):
            raise NotCleanWord(f"word {word!r} has positive order")
        chain = TropicalMatrix(self.orders[self._word_indices(word)[0]])
        for z in self._word_indices(word)[1:]:
            chain = chain @ TropicalMatrix(self.orders[z])
        mat = chain.orders
        in_cols = self.columns_for_output[word[-1]]
        out_cols = np.array([j for j in range(self.n_joint_states) if j not in set(in_cols)], dtype=int)
        violations = []
        for s in range(self.n_joint_states):
            inside = mat[s, in_cols]
            if len(set(inside.tolist())) != 1:
                violations.append(f"row {s}: unequal orders {inside.tolist()} on matching columns")
                continue
            if len(out_cols) and not np.all(inside[0] < mat[s, out_cols]):
                violations.append(
                    f"row {s}: matching order {int(inside[0])} not below {mat[s, out_cols].tolist()}"
                )
        return DominanceReport(
            word=word,
            length=len(word),
            required_length=required,
            passed=not violations,
            violations=tuple(violations),
        )

    def _tail_order(self, history: str, n: int) -> int | float:
        """Order of the most recent n symbols given the older prefix."""
        full = self.word_order(history)
        if len(history) == n:
            return full
        prefix = self.word_order(history[:-n])
        if full is math.inf:
            return math.inf
        if prefix is math.inf:
            raise ZeroHistory(f"prefix of {history!r} has probability identically 0")
        return full - prefix

    def check_coefficient_stabilization(
        self, history_a: str, history_b: str, n: int, k: int, rel_tol: float = 1e-9
    ) -> StabilizationReport:
        """Compare low-degree coefficients of two conditionals.

        Histories sharing their most recent n symbols, with recent-block
        orders at most k given the rest, must produce next-symbol
        conditionals whose coefficients agree up to degree n - 4k - 1.
        """
        if n < 1 or len(history_a) < n or len(history_b) < n:
            raise PreconditionFailed("histories shorter than the shared-suffix length")
        if history_a[-n:] != history_b[-n:]:
            raise PreconditionFailed("histories do not share their most recent n symbols")
        for h in (history_a, history_b):
            tail = self._tail_order(h, n)
            if tail is math.inf or tail > k:
                raise PreconditionFailed(
                    f"recent-block order of {h!r} is {tail}, above the bound {k}"
                )
        j_max = n - 4 * k - 1
        if j_max < 0:
            raise PreconditionFailed(f"n - 4k - 1 = {j_max} < 0: nothing to compare")
        if j_max > self.budget:
            raise BudgetExceeded(f"degree budget {self.budget} < {j_max}")
        per_j = np.zeros(j_max + 1)
        for z0 in self.outputs:
            ca = self.conditional_probability(z0, history_a)
            cb = self.conditional_probability(z0, history_b)
            lo = ca.coeffs[: j_max + 1]
            hi = cb.coeffs[: j_max + 1]
            # relative to the compared block's scale, so that float dust on
            # mathematically-zero coefficients does not register
            scale = max(float(np.max(np.abs(lo))), float(np.max(np.abs(hi))), 1e-12)
            per_j = np.maximum(per_j, np.abs(lo - hi) / scale)
        worst = float(per_j.max()) if j_max >= 0 else 0.0
        return StabilizationReport(
            history_a=history_a,
            history_b=history_b,
            shared_suffix=n,
            tail_order_bound=k,
            j_max=j_max,
            max_rel_delta=worst,
            passed=worst <= rel_tol,
            per_j_delta=tuple(per_j.tolist()),
        )


def build_output_process(p: JointProb, ch: ChannelSpec, budget: int = 6) -> OutputProcess:
    """Assemble the per-output transition matrices and their order companions."""
    return OutputProcess(p, ch, budget=budget)


def stabilization_pairs(os_: OutputProcess, suffix_len: int, count: int) -> list[tuple[str, str]]:
    """Deterministic clean-word history pairs sharing their last suffix_len symbols.

    Clean histories have recent-block order 0, so every pair qualifies for
    the coefficient-stabilization check with k = 0.
    """
    import itertools

    pairs: list[tuple[str, str]] = []
    for length in range(suffix_len + 1, suffix_len + 4):
        grouped: dict[str, list[str]] = {}
        for w in os_.clean_words(length):
            grouped.setdefault(w[-suffix_len:], []).append(w)
        for suffix in sorted(grouped):
            for a, b in itertools.combinations(sorted(grouped[suffix]), 2):
                pairs.append((a, b))
                if len(pairs) >= count:
                    return pairs
    return pairs
