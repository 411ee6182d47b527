"""Truncated power series in the noise parameter, with exact order tracking.

A series is stored as a dense coefficient array ``c[0] + c[1] eps + ... +
c[K] eps^K`` together with its exact leading order (the degree of the first
nonzero coefficient).  The order is the workhorse quantity downstream: word
probabilities of the noisy output process are polynomials in eps with
nonnegative leading coefficients, so orders add under multiplication and
take minima under addition with no cancellation.  That no-cancellation
property is also why the min-plus (tropical) matrix arithmetic in this
module computes the same orders independently of the float coefficients.

Coefficients below the exact order are exact zeros (they arise as sums of
products that each contain a structural 0.0 factor), so order detection is
exact in the intended regime; a relative threshold guards against float
dust from genuine cancellation outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DivByZeroSeries, OrderUnderflow

# Sentinel for "+infinity" in integer order matrices.  Large enough that no
# real order reaches it, small enough that sums of two never overflow int64.
ORD_INF = 1 << 30

# Relative threshold below which a computed leading coefficient is treated
# as zero when detecting orders from float coefficients.
_ZERO_RTOL = 1e-13


def _detect_order(coeffs: np.ndarray) -> int | float:
    scale = float(np.max(np.abs(coeffs), initial=0.0))
    if scale == 0.0:
        return math.inf
    tol = _ZERO_RTOL * max(scale, 1.0)
    for j, c in enumerate(coeffs):
        if abs(c) > tol:
            return j
    return math.inf


@dataclass(frozen=True, eq=False)
class EpsSeries:
    """Polynomial in eps truncated at a fixed degree budget.

    ``exact_order`` may exceed the budget (the stored coefficients are then
    all zero and ``truncated`` is True); it is ``inf`` only for the
    identically-zero series.
    """

    coeffs: np.ndarray
    exact_order: int | float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[float], budget: int | None = None) -> "EpsSeries":
        raw = np.asarray(coeffs, dtype=float)
        order = _detect_order(raw)
        if budget is None:
            return cls(raw.copy(), order)
        out = np.zeros(budget + 1)
        upto = min(len(raw), budget + 1)
        out[:upto] = raw[:upto]
        if order is not math.inf and order > budget:
            out[:] = 0.0
        return cls(out, order)

    @classmethod
    def zero(cls, budget: int) -> "EpsSeries":
        return cls(np.zeros(budget + 1), math.inf)

    @classmethod
    def constant(cls, value: float, budget: int) -> "EpsSeries":
        c = np.zeros(budget + 1)
        c[0] = value
        return cls(c, 0 if value != 0.0 else math.inf)

    @property
    def budget(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.exact_order is math.inf

    @property
    def truncated(self) -> bool:
        return self.exact_order is not math.inf and self.exact_order > self.budget

    def leading_coefficient(self) -> float:
        if self.is_zero or self.truncated:
            return 0.0
        return float(self.coeffs[int(self.exact_order)])

    def evaluate(self, eps: float) -> float:
        acc = 0.0
        for c in self.coeffs[::-1]:
            acc = acc * eps + c
        return acc

    def __add__(self, other: "EpsSeries") -> "EpsSeries":
        return series_add(self, other)

    def __mul__(self, other) -> "EpsSeries":
        if isinstance(other, (int, float)):
            if other == 0.0:
                return EpsSeries.zero(self.budget)
            return EpsSeries(self.coeffs * other, self.exact_order)
        return series_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: "EpsSeries") -> "EpsSeries":
        return series_div(self, other)

    def __str__(self) -> str:
        terms = []
        for j, c in enumerate(self.coeffs):
            if j == 0:
                terms.append(f"{c:.6g}")
            elif j == 1:
                terms.append(f"{c:.6g} ε")
            else:
                terms.append(f"{c:.6g} ε^{j}")
        ord_txt = "inf" if self.is_zero else str(int(self.exact_order))
        return " + ".join(terms) + f" (ord={ord_txt})"


def _common_budget(a: EpsSeries, b: EpsSeries) -> int:
    return min(a.budget, b.budget)


def series_add(a: EpsSeries, b: EpsSeries) -> EpsSeries:
    k = _common_budget(a, b)
    coeffs = a.coeffs[: k + 1] + b.coeffs[: k + 1]
    floor = min(a.exact_order, b.exact_order)
    if floor is math.inf:
        return EpsSeries(np.zeros(k + 1), math.inf)
    order = _detect_order(coeffs)
    # coefficients below the minimum input order are structural zeros, so
    # detection can only move the order up (cancellation), never down
    order = max(order, floor) if order is not math.inf else math.inf
    return EpsSeries(coeffs, order)


def series_mul(a: EpsSeries, b: EpsSeries) -> EpsSeries:
    k = _common_budget(a, b)
    out = np.convolve(a.coeffs[: k + 1], b.coeffs[: k + 1])[: k + 1]
    order = a.exact_order + b.exact_order
    if order is not math.inf and order > k:
        out[:] = 0.0
    return EpsSeries(out, order)


def series_div(a: EpsSeries, b: EpsSeries) -> EpsSeries:
    """Power-series quotient a/b.

    Requires ord(a) >= ord(b); conditional probabilities always satisfy this
    because the joint word extends the history.
    """
    k = _common_budget(a, b)
    if b.is_zero or b.truncated:
        raise DivByZeroSeries("divisor is zero to the working degree budget")
    ob = int(b.exact_order)
    if a.is_zero:
        return EpsSeries.zero(k)
    if a.exact_order < b.exact_order:
        raise OrderUnderflow(
            f"ord(numerator)={a.exact_order} < ord(denominator)={ob}: "
            "conditioning event has probability zero at leading order"
        )
    order = a.exact_order - ob
    if a.truncated:
        # numerator vanished below the budget: quotient known only by order
        return EpsSeries(np.zeros(k + 1), order)
    oa = int(a.exact_order)
    num = a.coeffs[oa : k + 1]
    den = b.coeffs[ob : k + 1]
    shift = oa - ob
    r = np.zeros(k + 1 - shift)
    for j in range(len(r)):
        acc = num[j] if j < len(num) else 0.0
        for i in range(1, min(j, len(den) - 1) + 1):
            acc -= den[i] * r[j - i]
        r[j] = acc / den[0]
    q = np.zeros(k + 1)
    q[shift:] = r
    return EpsSeries(q, order)


def series_arith(a: EpsSeries, b: EpsSeries, op: str) -> EpsSeries:
    """Dispatch form of the arithmetic, handy for table-driven tests."""
    if op == "add":
        return series_add(a, b)
    if op == "mul":
        return series_mul(a, b)
    if op == "div":
        return series_div(a, b)
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# min-plus (tropical) order arithmetic


def order_to_int(order: int | float) -> int:
    return ORD_INF if order is math.inf or order >= ORD_INF else int(order)


def int_to_order(v: int) -> int | float:
    return math.inf if v >= ORD_INF else int(v)


class TropicalMatrix:
    """Integer order matrix under min-plus multiplication."""

    def __init__(self, orders):
        arr = np.asarray(orders)
        if arr.dtype.kind == "f":
            out = np.full(arr.shape, ORD_INF, dtype=np.int64)
            finite = np.isfinite(arr)
            out[finite] = arr[finite].astype(np.int64)
            arr = out
        self.orders = np.minimum(arr.astype(np.int64), ORD_INF)

    @classmethod
    def identity(cls, n: int) -> "TropicalMatrix":
        m = np.full((n, n), ORD_INF, dtype=np.int64)
        np.fill_diagonal(m, 0)
        return cls(m)

    @property
    def shape(self):
        return self.orders.shape

    def __matmul__(self, other: "TropicalMatrix") -> "TropicalMatrix":
        a, b = self.orders, other.orders
        if a.shape[1] != b.shape[0]:
            raise DimensionMismatch(f"{a.shape} @ {b.shape}")
        c = np.min(a[:, :, None] + b[None, :, :], axis=1)
        return TropicalMatrix(np.minimum(c, ORD_INF))

    def __eq__(self, other) -> bool:
        return isinstance(other, TropicalMatrix) and np.array_equal(self.orders, other.orders)

    def __repr__(self) -> str:
        return f"TropicalMatrix({self.orders!r})"


def tropical_vec_mat(v: np.ndarray, m: TropicalMatrix) -> np.ndarray:
    v = np.minimum(np.asarray(v, dtype=np.int64), ORD_INF)
    if v.shape[0] != m.orders.shape[0]:
        raise DimensionMismatch(f"vector {v.shape} vs matrix {m.orders.shape}")
    return np.minimum(np.min(v[:, None] + m.orders, axis=0), ORD_INF)


def tropical_product(chain: Sequence[TropicalMatrix], left: np.ndarray) -> np.ndarray:
    """Left vector pushed through a chain of order matrices.

    The minimum of the result is the exact order of the corresponding word
    probability (no-cancellation regime).
    """
    v = np.minimum(np.asarray(left, dtype=np.int64), ORD_INF)
    for m in chain:
        v = tropical_vec_mat(v, m)
    return v


# ---------------------------------------------------------------------------
# matrices of series, stored as (..., m, m, K+1) coefficient stacks


def poly_mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(m,m,K+1) x (m,m,K+1) -> (m,m,K+1), truncating at the budget."""
    k1 = a.shape[-1]
    out = np.zeros((a.shape[0], b.shape[1], k1))
    for k in range(k1):
        for i in range(k + 1):
            out[:, :, k] += a[:, :, i] @ b[:, :, k - i]
    return out


def poly_vec_mat(u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """(m,K+1) row-vector of series times (m,m,K+1)."""
    k1 = u.shape[-1]
    out = np.zeros((a.shape[1], k1))
    for k in range(k1):
        for i in range(k + 1):
            out[:, k] += u[:, i] @ a[:, :, k - i]
    return out


def poly_eval(coeffs: np.ndarray, eps: float) -> np.ndarray:
    """Evaluate a coefficient stack (..., K+1) at a scalar eps (Horner)."""
    acc = np.zeros(coeffs.shape[:-1])
    for j in range(coeffs.shape[-1] - 1, -1, -1):
        acc = acc * eps + coeffs[..., j]
    return acc
