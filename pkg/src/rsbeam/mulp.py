"""Secure multi-user linear precoding baseline (no common stream).

MULP is the restriction of the rate-splitting formulations with the common
precoder and the common-rate vector pinned to zero: each user decodes only
its own stream, treating everything else as noise.  Realizing it as a
restriction of the same solver paths (rather than a separate code path)
makes the feasible-set nesting WSR(RS) >= WSR(MULP) hold by construction.
"""

from __future__ import annotations

from .model import ChannelSet, CsitModel, PrecoderSolution, SecrecySpec
from .sca import SolveOptions, solve_wsr
from .wmmse import WesrOptions, solve_wesr

__all__ = ["solve_mulp_wsr", "solve_mulp_wesr"]


def solve_mulp_wsr(channels: ChannelSet, spec: SecrecySpec, power: float,
                   options: SolveOptions | None = None) -> PrecoderSolution:
    """Perfect-CSIT MULP baseline: the SCA solver with the common stream removed."""
    return solve_wsr(channels, spec, power, options, scheme="mulp")


def solve_mulp_wesr(csit: CsitModel, spec: SecrecySpec, power: float, n_samples: int,
                    options: WesrOptions | None = None) -> PrecoderSolution:
    """Imperfect-CSIT MULP baseline: the WMMSE alternating solver, restricted."""
    return solve_wesr(csit, spec, power, n_samples, options, scheme="mulp")
