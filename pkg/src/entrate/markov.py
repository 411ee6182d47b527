"""Stationary first-order Markov inputs on a constraint.

A chain is identified with its joint-probability vector over the allowed
2-words (in ``allowed_pairs`` order).  The vector lives on the polytope cut
out by nonnegativity, the sum-to-one equation and per-symbol stationarity;
``FreeChart`` supplies an orthonormal coordinate system on the affine part
so that derivatives and the optimizer can work in unconstrained
coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .constraints import Constraint, primitivity_exponent
from .errors import (
    InfeasibleDelta,
    NotMixing,
    NotPrimitive,
    NotStochastic,
    SupportViolation,
    ZeroMarginal,
)

_SUM_TOL = 1e-12
_POWER_TOL = 1e-14
_POWER_MAX_ITER = 10**6


@dataclass(frozen=True, eq=False)
class JointProb:
    constraint: Constraint
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def value(self, pair: str) -> float:
        return float(self.values[self.constraint.pair_index(pair)])


def joint_prob(c: Constraint, values) -> JointProb:
    v = np.asarray(values, dtype=float)
    if v.shape != (c.n_pairs,):
        raise ValueError(f"expected {c.n_pairs} pair probabilities, got shape {v.shape}")
    if np.any(v < -_SUM_TOL):
        raise ValueError("negative pair probability")
    if abs(v.sum() - 1.0) > _SUM_TOL:
        raise ValueError(f"pair probabilities sum to {v.sum()!r}, not 1")
    imbalance = _stationarity_residual(c, v)
    if imbalance > _SUM_TOL:
        raise ValueError(f"stationarity violated by {imbalance:.3e}")
    return JointProb(c, np.maximum(v, 0.0))


def _stationarity_residual(c: Constraint, v: np.ndarray) -> float:
    out = np.zeros(c.n_symbols)
    inc = np.zeros(c.n_symbols)
    for k, pair in enumerate(c.allowed_pairs):
        out[c.index(pair[0])] += v[k]
        inc[c.index(pair[1])] += v[k]
    return float(np.max(np.abs(out - inc)))


def in_margin(p: JointProb, delta: float) -> bool:
    """Membership in the delta-interior: every pair probability exceeds delta."""
    return bool(np.all(p.values > delta))


def symbol_marginals(p: JointProb) -> np.ndarray:
    """Stationary symbol distribution, as row sums of the pair vector."""
    c = p.constraint
    pi = np.zeros(c.n_symbols)
    for k, pair in enumerate(c.allowed_pairs):
        pi[c.index(pair[0])] += p.values[k]
    return pi


def from_transition(c: Constraint, pi_matrix) -> JointProb:
    """Joint pair probabilities of the stationary chain with the given rows."""
    P = np.asarray(pi_matrix, dtype=float)
    n = c.n_symbols
    if P.shape != (n, n):
        raise NotStochastic(f"transition matrix must be {n}x{n}")
    if np.any(P < -_SUM_TOL) or np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-10:
        raise NotStochastic("rows must be nonnegative and sum to 1")
    support = P > 0.0
    if np.any(support & ~c.adjacency):
        raise SupportViolation("positive transition on a forbidden 2-word")
    if primitivity_exponent(support) is None:
        raise NotPrimitive("support of the transition matrix is not primitive")
    pi = stationary_distribution(P)
    vals = [pi[c.index(pair[0])] * P[c.index(pair[0]), c.index(pair[1])] for pair in c.allowed_pairs]
    return joint_prob(c, vals)


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Stationary row vector by power iteration from the uniform start."""
    n = P.shape[0]
    v = np.full(n, 1.0 / n)
    for _ in range(_POWER_MAX_ITER):
        w = v @ P
        w /= w.sum()
        if np.max(np.abs(w - v)) <= _POWER_TOL:
            if np.any(w <= 0.0):
                raise NotPrimitive("stationary vector is not strictly positive")
            return w
        v = w
    raise NotPrimitive("power iteration did not converge")


def to_transition(p: JointProb) -> np.ndarray:
    c = p.constraint
    pi = symbol_marginals(p)
    P = np.zeros((c.n_symbols, c.n_symbols))
    for k, pair in enumerate(c.allowed_pairs):
        i, j = c.index(pair[0]), c.index(pair[1])
        if pi[i] <= 0.0:
            if p.values[k] > 0.0:
                raise ZeroMarginal(f"symbol {pair[0]!r} has zero marginal but positive pair mass")
            continue
        P[i, j] = p.values[k] / pi[i]
    if np.any(pi <= 0.0):
        raise ZeroMarginal("every symbol must have positive marginal probability")
    return P


def perron(adjacency) -> tuple[float, np.ndarray]:
    """Perron root and right eigenvector of a primitive 0/1 matrix."""
    A = np.asarray(adjacency, dtype=float)
    n = A.shape[0]
    r = np.full(n, 1.0 / n)
    lam = 1.0
    for _ in range(_POWER_MAX_ITER):
        w = A @ r
        lam_new = w.sum() / r.sum()
        w /= w.sum()
        if np.max(np.abs(w - r)) <= _POWER_TOL and abs(lam_new - lam) <= _POWER_TOL:
            return lam_new, w
        r, lam = w, lam_new
    raise NotPrimitive("Perron iteration did not converge")


def max_entropy_chain(c: Constraint) -> JointProb:
    """The unique entropy-maximizing chain supported on the constraint.

    Transitions are A[x,y] r[y] / (lambda r[x]) with (lambda, r) the Perron
    data of the adjacency matrix.
    """
    if not c.mixing:
        raise NotMixing("max-entropy chain requires a mixing constraint")
    lam, r = perron(c.adjacency)
    n = c.n_symbols
    P = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if c.adjacency[i, j]:
                P[i, j] = r[j] / (lam * r[i])
        P[i] /= P[i].sum()
    return from_transition(c, P)


# ---------------------------------------------------------------------------
# affine structure of the pair polytope


def affine_constraints(c: Constraint) -> tuple[np.ndarray, np.ndarray]:
    """Equality system (A, b): sum-to-one plus per-symbol flow balance."""
    rows = [np.ones(c.n_pairs)]
    rhs = [1.0]
    for x in c.alphabet:
        row = np.zeros(c.n_pairs)
        for k, pair in enumerate(c.allowed_pairs):
            if pair[0] == x:
                row[k] += 1.0
            if pair[1] == x:
                row[k] -= 1.0
        rows.append(row)
        rhs.append(0.0)
    return np.array(rows), np.array(rhs)


@dataclass(frozen=True, eq=False)
class FreeChart:
    """Orthonormal coordinates on the affine hull of the pair polytope."""

    base_point: np.ndarray
    basis: np.ndarray  # (dimension, n_pairs), orthonormal rows
    dimension: int
    constraint: Constraint | None = None

    def point_at(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.base_point + t @ self.basis

    def joint_at(self, t) -> JointProb:
        if self.constraint is None:
            raise ValueError("chart has no attached constraint")
        return joint_prob(self.constraint, self.point_at(t))

    def coords_of(self, values) -> np.ndarray:
        return self.basis @ (np.asarray(values, dtype=float) - self.base_point)

    def margin_at(self, t) -> float:
        """Smallest coordinate of the embedded point (> delta means interior)."""
        return float(np.min(self.point_at(t)))


def free_chart(c: Constraint, anchor: JointProb) -> FreeChart:
    A, _ = affine_constraints(c)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-12 * s[0]))
    basis = vt[rank:]
    # fix signs so the chart is reproducible across runs
    fixed = []
    for row in basis:
        lead = row[np.argmax(np.abs(row) > 1e-9)]
        fixed.append(row if lead > 0 else -row)
    basis = np.array(fixed) if fixed else np.zeros((0, c.n_pairs))
    return FreeChart(
        base_point=anchor.values.copy(),
        basis=basis,
        dimension=basis.shape[0],
        constraint=c,
    )


def project_to_feasible(v, c: Constraint, delta: float = 0.0) -> JointProb:
    """Euclidean projection onto {affine constraints, all coords >= delta}.

    The pair polytope is tiny, so the optimal active set is found by
    enumerating faces: for every subset of coordinates pinned at delta,
    solve the equality-constrained projection and keep the feasible
    candidate closest to v.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (c.n_pairs,):
        raise ValueError(f"expected vector of length {c.n_pairs}")
    if delta < 0:
        raise InfeasibleDelta("delta must be >= 0")
    if c.n_pairs > 16:
        raise NotImplementedError("face enumeration capped at 16 coordinates")
    A, b = affine_constraints(c)
    best = None
    best_dist = np.inf
    for size in range(c.n_pairs + 1):
        for active in combinations(range(c.n_pairs), size):
            x = _project_face(v, A, b, active, delta, c.n_pairs)
            if x is None:
                continue
            if np.any(x < delta - 1e-9):
                continue
            dist = float(np.linalg.norm(x - v))
            if dist < best_dist - 1e-15:
                best, best_dist = x, dist
    if best is None:
        raise InfeasibleDelta(f"no point of the polytope has all coordinates >= {delta}")
    return joint_prob(c, np.maximum(best, 0.0))


def _project_face(v, A, b, active, delta, npairs):
    free = np.array([i not in active for i in range(npairs)])
    x = np.full(npairs, delta)
    if not free.any():
        resid = A @ x - b
        return x if np.max(np.abs(resid)) <= 1e-9 else None
    Af = A[:, free]
    bf = b - A[:, ~free] @ x[~free]
    vf = v[free]
    # KKT for min |xf - vf|^2 s.t. Af xf = bf
    gram = Af @ Af.T
    mu, *_ = np.linalg.lstsq(gram, bf - Af @ vf, rcond=None)
    xf = vf + Af.T @ mu
    if np.max(np.abs(Af @ xf - bf)) > 1e-9:
        return None
    x[free] = xf
    return x
