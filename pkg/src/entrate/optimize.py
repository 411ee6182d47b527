"""Concavity certification and maximization of the information rate I_n.

All derivatives are central finite differences in the orthonormal chart on
the input polytope; the problems here are 1 to 3 dimensional and the
objective is an exact enumeration, so differencing error is controlled and
checkable against closed forms in the noiseless case.  The ascent is
projected gradient with Armijo backtracking; stationarity is measured by
the norm of the unit-step projected gradient, which reduces to the raw
chart gradient at interior points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSpec
from .constraints import Constraint
from .entropy import (
    conditional_entropy_given_input,
    entropy_decomposition,
    fit_geometric_ratio,
)
from .errors import StepUnderflow
from .markov import (
    FreeChart,
    JointProb,
    free_chart,
    joint_prob,
    max_entropy_chain,
    project_to_feasible,
)
from .outputs import DEFAULT_WORD_BUDGET

_ARMIJO = 1e-4
_STEP_FLOOR = 1e-12


@dataclass
class OptimizationResult:
    argmax: JointProb
    value: float
    grad_norm: float
    hessian_eigs: tuple[float, ...]
    iterations: int
    n: int
    eps: float
    delta: float
    status: str  # "converged" | "max_iter" | "no_progress"
    boundary_active: bool
    certified: bool | None = None


@dataclass
class ConvergenceStudy:
    eps: float
    pairs: list  # (n, OptimizationResult)
    gaps: list[float]
    fitted_rho: float
    flagged: bool


@dataclass
class CertificationReport:
    passed: bool
    max_eigenvalue: float
    grid_points: list  # (chart coords tuple, max eigenvalue)
    n: int | None = None
    eps: float | None = None
    delta: float = 0.0
    skipped: int = 0


def _fit_step(chart: FreeChart | None, t: np.ndarray, i: int, h: float, delta: float, h_min: float):
    hi = h
    while hi >= h_min:
        tp, tm = t.copy(), t.copy()
        tp[i] += hi
        tm[i] -= hi
        if chart is None or (chart.margin_at(tp) > delta and chart.margin_at(tm) > delta):
            return hi
        hi /= 2
    raise StepUnderflow(f"cannot fit a central stencil at coordinate {i} inside the margin")


def fd_gradient(f, chart: FreeChart | None, t, h: float = 1e-4, delta: float = 0.0, h_min: float = 1e-7):
    """Central-difference gradient of f over chart coordinates.

    Steps shrink automatically when the stencil would leave the delta
    interior of the polytope (chart None disables the feasibility check).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    g = np.zeros(len(t))
    for i in range(len(t)):
        hi = _fit_step(chart, t, i, h, delta, h_min)
        tp, tm = t.copy(), t.copy()
        tp[i] += hi
        tm[i] -= hi
        g[i] = (f(tp) - f(tm)) / (2 * hi)
    return g


def fd_hessian(f, chart: FreeChart | None, t, h: float = 1e-4, delta: float = 0.0, h_min: float = 1e-7):
    """Symmetric second-difference Hessian over chart coordinates."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = len(t)
    steps = [_fit_step(chart, t, i, h, delta, h_min) / 2 for i in range(d)]
    f0 = f(t)
    hess = np.zeros((d, d))
    for i in range(d):
        hi = steps[i]
        tp, tm = t.copy(), t.copy()
        tp[i] += 2 * hi
        tm[i] -= 2 * hi
        hess[i, i] = (f(tp) - 2 * f0 + f(tm)) / (4 * hi * hi)
        for j in range(i + 1, d):
            hj = steps[j]
            acc = 0.0
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                tt = t.copy()
                tt[i] += si * hi
                tt[j] += sj * hj
                acc += si * sj * f(tt)
            hess[i, j] = hess[j, i] = acc / (4 * hi * hj)
    return (hess + hess.T) / 2


def jacobi_eigenvalues(mat, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(mat, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = max(np.max(np.abs(a)), 1e-300)
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(a[p, q]))
                if abs(a[p, q]) <= tol * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                sign = 1.0 if theta >= 0 else -1.0
                tval = sign / (abs(theta) + np.sqrt(theta * theta + 1))
                cos = 1.0 / np.sqrt(tval * tval + 1)
                sin = tval * cos
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = cos
                rot[p, q] = sin
                rot[q, p] = -sin
                a = rot.T @ a @ rot
        if off <= tol * scale:
            break
    return np.sort(a.diagonal())


def mi_objective(ch: ChannelSpec, c: Constraint, n: int, eps: float, word_budget: int = DEFAULT_WORD_BUDGET):
    """I_n as a function of the raw pair-probability vector."""

    def f(values) -> float:
        p = joint_prob(c, values)
        d = entropy_decomposition(p, ch, n, eps, word_budget)
        return d.h_n - conditional_entropy_given_input(p, ch, eps)

    return f


def _chart_box(chart: FreeChart, delta: float) -> list[tuple[float, float]]:
    """Feasible parameter interval along each chart axis (others at 0)."""
    base, basis = chart.base_point, chart.basis
    box = []
    for i in range(chart.dimension):
        b = basis[i]
        hi = min(((delta - base[j]) / b[j] for j in range(len(b)) if b[j] < -1e-15), default=np.inf)
        lo = max(((delta - base[j]) / b[j] for j in range(len(b)) if b[j] > 1e-15), default=-np.inf)
        box.append((float(lo), float(hi)))
    return box


def certify_objective(
    f, chart: FreeChart, delta: float, grid: int, h: float = 1e-4
) -> CertificationReport:
    """Grid certification that f has a negative-definite chart Hessian."""
    if grid < 2:
        raise ValueError("grid must be >= 2 points per dimension")
    box = _chart_box(chart, delta)
    axes = []
    for lo, hi in box:
        inset = max(1e-6, 1e-3 * (hi - lo))
        axes.append(np.linspace(lo + inset, hi - inset, grid))
    points = []
    skipped = 0
    max_eig = -np.inf
    for idx in np.ndindex(*(grid,) * chart.dimension):
        t = np.array([axes[i][idx[i]] for i in range(chart.dimension)])
        if chart.margin_at(t) <= delta:
            skipped += 1
            continue
        eigs = jacobi_eigenvalues(fd_hessian(f, chart, t, h=h, delta=delta))
        top = float(eigs[-1])
        points.append((tuple(t.tolist()), top))
        max_eig = max(max_eig, top)
    return CertificationReport(
        passed=bool(points) and max_eig < 0.0,
        max_eigenvalue=max_eig,
        grid_points=points,
        delta=delta,
        skipped=skipped,
    )


def certify_concavity(
    ch: ChannelSpec,
    c: Constraint,
    n: int,
    eps: float,
    delta: float,
    grid: int,
    h: float = 1e-4,
    word_budget: int = DEFAULT_WORD_BUDGET,
) -> CertificationReport:
    """Certify strict concavity of I_n on the delta interior by grid Hessians."""
    chart = free_chart(c, max_entropy_chain(c))
    fv = mi_objective(ch, c, n, eps, word_budget)
    report = certify_objective(lambda t: fv(chart.point_at(t)), chart, delta, grid, h=h)
    report.n = n
    report.eps = eps
    return report


def maximize_mi(
    ch: ChannelSpec,
    c: Constraint,
    n: int,
    eps: float,
    delta: float = 1e-3,
    tol: float = 1e-7,
    max_iter: int = 500,
    starts: int = 1,
    seed: int = 0,
    h: float = 1e-4,
    word_budget: int = DEFAULT_WORD_BUDGET,
) -> OptimizationResult:
    """Projected gradient ascent of I_n over the delta interior.

    The first start is the max-entropy chain projected into the interior;
    extra starts are random feasible points.  Returns the best run, with
    chart Hessian eigenvalues at its argmax.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    parry = max_entropy_chain(c)
    chart = free_chart(c, parry)
    fv = mi_objective(ch, c, n, eps, word_budget)
    start_points = [project_to_feasible(parry.values, c, delta).values]
    if starts > 1:
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
        for _ in range(starts - 1):
            raw = rng.dirichlet(np.ones(c.n_pairs))
            start_points.append(project_to_feasible(raw, c, delta).values)
    best = None
    for x0 in start_points:
        res = _ascend(fv, chart, c, x0, delta, tol, max_iter, h)
        if best is None or res.value > best.value:
            best = res
    t_star = chart.coords_of(best.argmax.values)
    eigs = jacobi_eigenvalues(
        fd_hessian(lambda t: fv(chart.point_at(t)), chart, t_star, h=h, delta=delta)
    )
    best.hessian_eigs = tuple(float(e) for e in eigs)
    best.n = n
    best.eps = eps
    return best


def _ascend(fv, chart, c, x0, delta, tol, max_iter, h) -> OptimizationResult:
    x = np.asarray(x0, dtype=float)
    fx = fv(x)
    eta = 1.0
    status = "max_iter"
    iters = 0
    for iters in range(1, max_iter + 1):
        t = chart.coords_of(x)
        g_t = fd_gradient(lambda tt: fv(chart.point_at(tt)), chart, t, h=h, delta=delta)
        g = g_t @ chart.basis
        pg = project_to_feasible(x + g, c, delta).values - x
        if np.linalg.norm(pg) <= tol:
            status = "converged"
            break
        eta_try = min(eta * 2, 1e6)
        moved = False
        while eta_try >= _STEP_FLOOR:
            w = project_to_feasible(x + eta_try * g, c, delta).values
            fw = fv(w)
            if fw >= fx + _ARMIJO * float(g @ (w - x)) and fw > fx - 1e-15:
                x, fx, eta = w, fw, eta_try
                moved = True
                break
            eta_try /= 2
        if not moved:
            status = "no_progress"
            break
    final_t = chart.coords_of(x)
    g_t = fd_gradient(lambda tt: fv(chart.point_at(tt)), chart, final_t, h=h, delta=delta)
    pg = project_to_feasible(x + g_t @ chart.basis, c, delta).values - x
    return OptimizationResult(
        argmax=joint_prob(c, x),
        value=fx,
        grad_norm=float(np.linalg.norm(pg)),
        hessian_eigs=(),
        iterations=iters,
        n=0,
        eps=0.0,
        delta=delta,
        status=status,
        boundary_active=bool(np.any(x <= delta + 1e-9)),
    )


def capacity_sequence(
    ch: ChannelSpec,
    c: Constraint,
    eps: float,
    n_list,
    delta: float = 1e-3,
    tol: float = 1e-7,
    max_iter: int = 500,
    word_budget: int = DEFAULT_WORD_BUDGET,
) -> ConvergenceStudy:
    """Maximize I_n along n_list and track how fast the argmax settles."""
    n_list = [int(n) for n in n_list]
    if any(a >= b for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    results = []
    for n in n_list:
        results.append((n, maximize_mi(ch, c, n, eps, delta=delta, tol=tol, max_iter=max_iter, word_budget=word_budget)))
    gaps = [
        float(np.linalg.norm(b.argmax.values - a.argmax.values))
        for (_, a), (_, b) in zip(results, results[1:])
    ]
    mids = [(a + b) / 2 for a, b in zip(n_list, n_list[1:])]
    rho = fit_geometric_ratio(mids, gaps) if len(gaps) >= 2 else 0.0
    return ConvergenceStudy(
        eps=eps, pairs=results, gaps=gaps, fitted_rho=rho, flagged=rho >= 1.0
    )
