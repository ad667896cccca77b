"""Compiling and running schedules."""

from __future__ import annotations

from .compiler import CompiledSchedule, CompiledStep, InvalidSchedule, compile_schedule, ensure_compiled
from .rng import SplitMix64, categorical, run_seed
from .run import (
    BranchReport,
    EngineError,
    MaxRoundsExceeded,
    RunConfig,
    RunReport,
    SampleResult,
    SampleStatistics,
    branch_reports,
    collapse_ensemble,
    collapse_run,
    detect_violations,
    evolve_round,
    halting_outcome,
    iter_states,
    observer_presentation,
    outcome_distribution,
    reduced_density,
    run,
    sample_many,
    sample_runs,
)
