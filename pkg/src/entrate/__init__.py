"""Entropy-rate approximants for noisy channels with constrained Markov inputs.

Computes conditional entropies H_n of the hidden Markov output process, the
exact split H_n = G_n + F_n log(eps) into a smooth part and a log-noise
coefficient, and maximizes the information rate I_n over first-order Markov
inputs supported on a memory-one constraint.
"""

__version__ = "0.1.0"

from .channels import ChannelSpec, bec, bsc, custom, gilbert_elliott
from .constraints import Constraint, build_constraint, enumerate_allowed, rll_constraint
from .entropy import (
    EntropyDecomposition,
    ExpansionEstimate,
    conditional_entropy_given_input,
    convergence_diagnostics,
    entropy_decomposition,
    entropy_monte_carlo,
    estimate_expansion,
    mutual_information_n,
)
from .kernels import BACKEND as kernel_backend
from .markov import (
    FreeChart,
    JointProb,
    free_chart,
    from_transition,
    in_margin,
    joint_prob,
    max_entropy_chain,
    project_to_feasible,
    to_transition,
)
from .optimize import (
    CertificationReport,
    ConvergenceStudy,
    OptimizationResult,
    capacity_sequence,
    certify_concavity,
    fd_gradient,
    fd_hessian,
    maximize_mi,
)
from .outputs import OutputProcess, TypicalityReport, build_output_process
from .series import EpsSeries, TropicalMatrix, series_arith, tropical_product

__all__ = [
    "__version__",
    "kernel_backend",
    "Constraint",
    "build_constraint",
    "rll_constraint",
    "enumerate_allowed",
    "JointProb",
    "joint_prob",
    "from_transition",
    "to_transition",
    "in_margin",
    "max_entropy_chain",
    "project_to_feasible",
    "free_chart",
    "FreeChart",
    "ChannelSpec",
    "bsc",
    "bec",
    "gilbert_elliott",
    "custom",
    "EpsSeries",
    "TropicalMatrix",
    "series_arith",
    "tropical_product",
    "OutputProcess",
    "build_output_process",
    "TypicalityReport",
    "EntropyDecomposition",
    "ExpansionEstimate",
    "entropy_decomposition",
    "entropy_monte_carlo",
    "mutual_information_n",
    "conditional_entropy_given_input",
    "estimate_expansion",
    "convergence_diagnostics",
    "OptimizationResult",
    "ConvergenceStudy",
    "CertificationReport",
    "maximize_mi",
    "capacity_sequence",
    "certify_concavity",
    "fd_gradient",
    "fd_hessian",
]
