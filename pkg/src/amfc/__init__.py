"""Base-d stochastic adding machine: transition operator, spectrum and fibered Julia sets."""
__version__ = "0.1.0"

from .probs import ConfigError, ProbabilitySequence  # noqa: E402
from .adding_machine import amfc_step, simulate, step_distribution, to_digits  # noqa: E402
from .transition import build_truncated, classify_recurrence, transition_prob  # noqa: E402
from .spectrum import eigen_residual, eigenvector, iterate_f, membership_via_q  # noqa: E402
from .julia import classify_connectedness, conjugacy, green_function, quasicircle_check, theta_d  # noqa: E402
from .render import RenderConfig, render, write_pgm  # noqa: E402

__all__ = [
    "ConfigError", "ProbabilitySequence", "amfc_step", "simulate", "step_distribution",
    "to_digits", "build_truncated", "classify_recurrence", "transition_prob",
    "eigen_residual", "eigenvector", "iterate_f", "membership_via_q",
    "classify_connectedness", "conjugacy", "green_function", "quasicircle_check",
    "theta_d", "RenderConfig", "render", "write_pgm",
]
