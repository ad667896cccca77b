"""Exact state-vector simulation of extended Wigner's-friend protocols.

Agents' measurements and inferences are unitary maps on memory registers;
nothing collapses unless the collapse contrast mode is requested.
"""

from __future__ import annotations

from .amplitude import ExactReal, from_sqrt, parse_exact
from .engine import RunConfig, compile_schedule, evolve_round, run
from .protocol import canonical_fr_schedule, parse_schedule

__version__ = "0.1.0"

__all__ = [
    "ExactReal",
    "from_sqrt",
    "parse_exact",
    "RunConfig",
    "compile_schedule",
    "evolve_round",
    "run",
    "canonical_fr_schedule",
    "parse_schedule",
]
