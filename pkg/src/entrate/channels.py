"""Memoryless channels with i.i.d. state and polynomial noise kernels.

Each kernel entry p(z | x, state) is a polynomial in the noise level eps
(coefficient arrays, constant term first).  At eps = 0 the channel must act
as a deterministic injective relabeling x -> z(x); the largest finite
leading order over all kernel entries (``max_kernel_order``) controls how
fast output-word probabilities can vanish as eps -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter, NoiselessViolation, NotInjective, RowSumNotOne
from .series import ORD_INF, poly_eval

_COEFF_TOL = 1e-12
_GRID_POINTS = 64
DEFAULT_EPS_MAX = 0.1


def _poly_order(coeffs: np.ndarray) -> int:
    nz = np.nonzero(np.abs(coeffs) > _COEFF_TOL)[0]
    return int(nz[0]) if len(nz) else ORD_INF


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    inputs: tuple[str, ...]
    states: tuple[str, ...]
    state_probs: np.ndarray
    outputs: tuple[str, ...]
    kernel: np.ndarray  # (n_inputs, n_states, n_outputs, degree+1)
    noiseless_map: dict[str, str]
    eps_max: float = DEFAULT_EPS_MAX
    max_kernel_order: int = field(init=False, default=0)
    kernel_orders: np.ndarray = field(init=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "state_probs", np.asarray(self.state_probs, dtype=float))
        object.__setattr__(self, "kernel", np.asarray(self.kernel, dtype=float))
        orders = np.empty(self.kernel.shape[:3], dtype=np.int64)
        for ix in range(orders.shape[0]):
            for ic in range(orders.shape[1]):
                for iz in range(orders.shape[2]):
                    orders[ix, ic, iz] = _poly_order(self.kernel[ix, ic, iz])
        object.__setattr__(self, "kernel_orders", orders)
        finite = orders[orders < ORD_INF]
        object.__setattr__(self, "max_kernel_order", int(finite.max()) if len(finite) else 0)
        _validate(self)

    @property
    def degree(self) -> int:
        return self.kernel.shape[-1] - 1

    @property
    def has_zero_kernel_entries(self) -> bool:
        return bool(np.any(self.kernel_orders >= ORD_INF))

    def output_index(self, z: str) -> int:
        return self.outputs.index(z)

    def kernel_at(self, eps: float) -> np.ndarray:
        """Numeric table p(z|x,state) of shape (n_inputs, n_states, n_outputs)."""
        return poly_eval(self.kernel, eps)


def _validate(ch: ChannelSpec) -> None:
    q = ch.state_probs
    if np.any(q < 0) or abs(q.sum() - 1.0) > _COEFF_TOL:
        raise BadParameter("state probabilities must be nonnegative and sum to 1")
    if len(set(ch.noiseless_map.values())) != len(ch.noiseless_map):
        raise NotInjective("noiseless map must be one-to-one")
    for x in ch.inputs:
        if x not in ch.noiseless_map or ch.noiseless_map[x] not in ch.outputs:
            raise NoiselessViolation(f"noiseless map incomplete for input {x!r}")
    row_sums = ch.kernel.sum(axis=2)
    target = np.zeros(ch.degree + 1)
    target[0] = 1.0
    if np.max(np.abs(row_sums - target)) > _COEFF_TOL:
        raise RowSumNotOne("kernel rows must sum to the constant polynomial 1")
    for ix, x in enumerate(ch.inputs):
        iz = ch.output_index(ch.noiseless_map[x])
        for ic in range(len(ch.states)):
            if abs(ch.kernel[ix, ic, iz, 0] - 1.0) > _COEFF_TOL:
                raise NoiselessViolation(
                    f"p({ch.noiseless_map[x]!r}|{x!r},{ch.states[ic]!r}) at eps=0 must be 1"
                )
    grid = np.linspace(0.0, ch.eps_max, _GRID_POINTS)
    for eps in grid:
        table = ch.kernel_at(float(eps))
        if np.any(table < -1e-9) or np.any(table > 1 + 1e-9):
            raise BadParameter(
                f"kernel leaves [0,1] at eps={eps:.4g}; shrink eps_max or fix the table"
            )


def bsc(eps_max: float = DEFAULT_EPS_MAX) -> ChannelSpec:
    """Binary symmetric channel: flips the bit with probability eps."""
    kernel = np.zeros((2, 1, 2, 2))
    for x in range(2):
        kernel[x, 0, x] = [1.0, -1.0]
        kernel[x, 0, 1 - x] = [0.0, 1.0]
    return ChannelSpec(
        inputs=("0", "1"),
        states=("s",),
        state_probs=np.array([1.0]),
        outputs=("0", "1"),
        kernel=kernel,
        noiseless_map={"0": "0", "1": "1"},
        eps_max=eps_max,
    )


def bec(eps_max: float = DEFAULT_EPS_MAX) -> ChannelSpec:
    """Binary erasure channel: erases to 'e' with probability eps, never flips."""
    kernel = np.zeros((2, 1, 3, 2))
    for x in range(2):
        kernel[x, 0, x] = [1.0, -1.0]
        kernel[x, 0, 2] = [0.0, 1.0]
        # the cross entry stays identically zero (order +inf)
    return ChannelSpec(
        inputs=("0", "1"),
        states=("s",),
        state_probs=np.array([1.0]),
        outputs=("0", "1", "e"),
        kernel=kernel,
        noiseless_map={"0": "0", "1": "1"},
        eps_max=eps_max,
    )


def gilbert_elliott(q_good: float, k: float, eps_max: float = DEFAULT_EPS_MAX) -> ChannelSpec:
    """Two-state i.i.d. channel: good state flips with eps, bad state with k*eps."""
    if not 0.0 < q_good < 1.0:
        raise BadParameter("q_good must lie strictly between 0 and 1")
    if k <= 0.0:
        raise BadParameter("k must be positive")
    if k * eps_max > 1.0:
        raise BadParameter(f"k*eps_max = {k * eps_max:.4g} > 1; shrink eps_max")
    kernel = np.zeros((2, 2, 2, 2))
    for x in range(2):
        kernel[x, 0, x] = [1.0, -1.0]
        kernel[x, 0, 1 - x] = [0.0, 1.0]
        kernel[x, 1, x] = [1.0, -k]
        kernel[x, 1, 1 - x] = [0.0, k]
    return ChannelSpec(
        inputs=("0", "1"),
        states=("good", "bad"),
        state_probs=np.array([q_good, 1.0 - q_good]),
        outputs=("0", "1"),
        kernel=kernel,
        noiseless_map={"0": "0", "1": "1"},
        eps_max=eps_max,
    )


def custom(states, outputs, table, noiseless_map, eps_max: float = DEFAULT_EPS_MAX) -> ChannelSpec:
    """Channel from an explicit polynomial table.

    ``table`` maps (input, state, output) to a coefficient list (constant
    first); missing entries are identically zero.  ``states`` is a list of
    (name, probability) pairs or a dict.
    """
    if isinstance(states, dict):
        states = list(states.items())
    state_names = tuple(name for name, _ in states)
    state_probs = np.array([p for _, p in states], dtype=float)
    inputs = tuple(noiseless_map.keys())
    outputs = tuple(outputs)
    degree = 0
    for coeffs in table.values():
        degree = max(degree, len(coeffs) - 1)
    kernel = np.zeros((len(inputs), len(state_names), len(outputs), degree + 1))
    for (x, c, z), coeffs in table.items():
        if x not in inputs or c not in state_names or z not in outputs:
            raise BadParameter(f"table entry ({x!r},{c!r},{z!r}) names unknown labels")
        kernel[inputs.index(x), state_names.index(c), outputs.index(z), : len(coeffs)] = coeffs
    return ChannelSpec(
        inputs=inputs,
        states=state_names,
        state_probs=state_probs,
        outputs=outputs,
        kernel=kernel,
        noiseless_map=dict(noiseless_map),
        eps_max=eps_max,
    )


def noiseless_output(ch: ChannelSpec, word: str) -> str:
    """Image of an input word under the zero-noise relabeling."""
    return "".join(ch.noiseless_map[s] for s in word)


def conditional_entropy_given_input(pi_x: np.ndarray, inputs, ch: ChannelSpec, eps: float) -> float:
    """H(Z_0|X_0) in nats: entropy of the state-averaged kernel, weighted by
    the input marginals.  Linear in the input law; zero at eps = 0."""
    table = ch.kernel_at(eps)  # (x, c, z)
    mixed = np.tensordot(ch.state_probs, table, axes=(0, 1))  # (x, z)
    h = 0.0
    for x, sym in enumerate(inputs):
        ix = ch.inputs.index(sym)
        for z in range(len(ch.outputs)):
            p = mixed[ix, z]
            if p > 0.0:
                h -= pi_x[x] * p * math.log(p)
    return h
