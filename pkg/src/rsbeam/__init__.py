"""Secrecy-constrained precoder optimization for rate-splitting downlinks."""

from .model import (
    ChannelSet,
    CsitModel,
    PrecoderSolution,
    RateBreakdown,
    SecrecySpec,
    compute_sinrs,
    derive_trial_seed,
    precoder_power,
    random_channels,
    sample_csit,
    specific_channels,
    stack_channels,
    wsr,
)

__version__ = "0.1.0"

from .mulp import solve_mulp_wesr, solve_mulp_wsr  # noqa: E402
from .sca import InfeasibleThresholds, SolveOptions, SolverFailure, solve_wsr  # noqa: E402
from .wmmse import WesrOptions, solve_wesr  # noqa: E402
