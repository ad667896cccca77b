"""Executing schedules: unitary rounds, branch reports, sampling and collapse contrast."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from ..agents import CertaintyStatement, rule_s_check
from ..amplitude import ZERO, ExactReal
from ..hilbert import (
    Amplitude,
    MeasurementBasis,
    StateVector,
    SupportLeakage,
    project_unnormalized,
    rewrite_in_basis,
    state_to_json,
)
from ..protocol.model import Measure
from ..timestamp import TimeStamp
from .compiler import CompiledSchedule, CompiledStep, ensure_compiled
from .rng import SplitMix64, categorical, run_seed

MODES = ("exact", "float", "collapse")
OutcomeKey = tuple  # one observed value (or None) per halt condition


class EngineError(RuntimeError):
    pass


class MaxRoundsExceeded(EngineError):
    def __init__(self, result: SampleResult) -> None:
        self.result = result
        super().__init__(f"no halt within {len(result.draws)} rounds")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "exact"
    max_rounds: int = 1000
    seed: int | None = None
    checkpoints: tuple[TimeStamp, ...] = ()
    # ticks added to an observation's time when it becomes a rule-S certainty
    observation_offset: int = 1

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, not {self.mode!r}")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")


# -- unitary evolution --------------------------------------------------------


def iter_states(
    schedule, mode: str = "exact"
) -> Iterator[tuple[CompiledStep | None, StateVector]]:
    """Yield the initial state, then the state after every step."""
    compiled = ensure_compiled(schedule)
    if mode not in ("exact", "float"):
        raise ValueError("unitary evolution runs in exact or float mode")
    psi = compiled.initial(exact=mode == "exact")
    yield None, psi
    for cs in compiled.steps:
        psi = cs.apply(psi)
        yield cs, psi


def evolve_round(
    schedule, mode: str = "exact", checkpoints: Sequence[TimeStamp] = ()
) -> tuple[StateVector, dict[TimeStamp, StateVector]]:
    """Final state of one round plus snapshots taken after all steps at or before each checkpoint."""
    pending = sorted(set(checkpoints))
    snapshots: dict[TimeStamp, StateVector] = {}
    prev: StateVector | None = None
    psi: StateVector | None = None
    for cs, psi in iter_states(schedule, mode):
        if cs is not None:
            while pending and pending[0] < cs.step.at:
                snapshots[pending.pop(0)] = prev
        prev = psi
    for t in pending:
        snapshots[t] = psi
    return psi, snapshots


# -- reading the final state ------------------------------------------------


def observer_presentation(schedule, psi: StateVector) -> tuple[StateVector, list[MeasurementBasis]]:
    """``psi`` rewritten in the bases of the latest measurements of each lab.

    Measurements are taken latest first; a basis is used when its registers
    are disjoint from the ones already rewritten and the state has no weight
    outside its span.
    """
    compiled = ensure_compiled(schedule)
    used: list[MeasurementBasis] = []
    taken: set[str] = set()
    for cs in reversed(compiled.steps):
        if not isinstance(cs.step, Measure) or len(cs.basis.registers) < 2:
            continue
        if taken & set(cs.basis.registers) or any(b.name == cs.basis.name for b in used):
            continue
        try:
            psi = rewrite_in_basis(psi, cs.basis)
        except SupportLeakage:
            continue
        used.append(cs.basis)
        taken.update(cs.basis.registers)
    return psi, used


@dataclass
class BranchReport:
    labels: dict[str, str]
    amplitude: Amplitude
    probability: Amplitude
    records: dict[str, list[CertaintyStatement]]
    display: dict[str, str]
    rule_s_violations: list[tuple[CertaintyStatement, CertaintyStatement]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "labels": self.labels,
            "amplitude": _amp_json(self.amplitude),
            "probability": _amp_json(self.probability),
            "memory": self.display,
            "violations": [
                {"statement_a": a.to_json(), "statement_b": b.to_json()} for a, b in self.rule_s_violations
            ],
        }


def _amp_json(value: Amplitude) -> dict:
    return {
        "exact": value.to_string() if isinstance(value, ExactReal) else None,
        "float": float(value),
    }


def branch_reports(schedule, psi: StateVector, observation_offset: int = 1) -> list[BranchReport]:
    """One report per component of ``psi`` in the observers' presentation."""
    compiled = ensure_compiled(schedule)
    presented, _ = observer_presentation(compiled, psi)
    reports = []
    for key, amp in sorted(presented.items()):
        labels = presented.labels(key)
        records: dict[str, list[CertaintyStatement]] = {}
        display: dict[str, str] = {}
        violations = []
        for reg, tok in labels.items():
            if not compiled.is_memory(reg):
                continue
            rec = compiled.record(reg, tok)
            stmts = rec.certainties(observation_offset)
            records.setdefault(rec.agent, []).extend(stmts)
            display[reg] = rec.display()
        for agent in records:
            violations.extend(rule_s_check(records[agent]))
        reports.append(BranchReport(labels, amp, amp * amp, records, display, violations))
    return reports


def detect_violations(schedule, psi: StateVector, observation_offset: int = 1) -> list[BranchReport]:
    return [r for r in branch_reports(schedule, psi, observation_offset) if r.rule_s_violations]


def outcome_distribution(schedule, psi: StateVector) -> dict[OutcomeKey, Amplitude]:
    """Joint probability of the values observed in the halt-condition registers."""
    compiled = ensure_compiled(schedule)
    halt = compiled.halt
    regs = [reg for reg, _ in halt.conditions]
    idx = [psi.space.index(r) for r in regs]
    dist: dict[OutcomeKey, Amplitude] = {}
    for key, amp in psi.items():
        outcome = tuple(compiled.record(r, key[i]).observed() for r, i in zip(regs, idx))
        dist[outcome] = dist.get(outcome, ZERO if psi.exact else 0.0) + amp * amp
    return dict(sorted(dist.items(), key=lambda kv: tuple("" if v is None else v for v in kv[0])))


def reduced_density(psi: StateVector, registers: Sequence[str]) -> dict[tuple, Amplitude]:
    """Reduced density matrix of ``registers`` as ``{(row label, column label): entry}``."""
    idx = [psi.space.index(r) for r in registers]
    rest = [i for i in range(len(psi.space.registers)) if i not in idx]
    by_env: dict[tuple, list[tuple[tuple, Amplitude]]] = {}
    for key, amp in psi.items():
        env = tuple(key[i] for i in rest)
        by_env.setdefault(env, []).append((tuple(key[i] for i in idx), amp))
    rho: dict[tuple, Amplitude] = {}
    for comps in by_env.values():
        for a, x in comps:
            for b, y in comps:
                rho[(a, b)] = rho.get((a, b), ZERO if psi.exact else 0.0) + x * y
    return {k: v for k, v in rho.items() if v != 0}


def halting_outcome(schedule) -> OutcomeKey:
    return tuple(value for _, value in ensure_compiled(schedule).halt.conditions)


def outcome_label(key: OutcomeKey) -> str:
    return ",".join("-" if v is None else v for v in key)


# -- sampling ---------------------------------------------------------------


@dataclass
class SampleResult:
    run_index: int
    seed: int
    halting_round: int | None
    draws: list[OutcomeKey]

    def to_json(self) -> dict:
        return {
            "run_index": self.run_index,
            "seed": self.seed,
            "halting_round": self.halting_round,
            "draws": [outcome_label(d) for d in self.draws],
        }


def _sampler(distribution: Mapping[OutcomeKey, Amplitude]) -> tuple[list[OutcomeKey], list[float]]:
    outcomes, cumulative = [], []
    running: Amplitude | None = None
    for key, p in distribution.items():
        if float(p) <= 0:
            continue
        running = p if running is None else running + p
        outcomes.append(key)
        cumulative.append(float(running))
    return outcomes, cumulative


def sample_runs(schedule, config: RunConfig, run_index: int = 0, distribution=None) -> SampleResult:
    """Repeat rounds until the halt outcome is drawn.

    Every round starts from the same product state, so each round's joint
    outcome is an independent draw from the final-state distribution.
    """
    if config.seed is None:
        raise ValueError("sampling needs an explicit seed")
    if config.mode not in ("exact", "float"):
        raise ValueError("sampling runs on the unitary (exact or float) evolution")
    if distribution is None:
        final, _ = evolve_round(schedule, config.mode)
        distribution = outcome_distribution(schedule, final)
    target = halting_outcome(schedule)
    outcomes, cumulative = _sampler(distribution)
    seed = run_seed(config.seed, run_index)
    rng = SplitMix64(seed)
    draws: list[OutcomeKey] = []
    for n in range(1, config.max_rounds + 1):
        draw = categorical(rng, outcomes, cumulative)
        draws.append(draw)
        if draw == target:
            return SampleResult(run_index, seed, n, draws)
    raise MaxRoundsExceeded(SampleResult(run_index, seed, None, draws))


@dataclass
class SampleStatistics:
    runs: list[SampleResult]

    @property
    def halting_rounds(self) -> list[int | None]:
        return [r.halting_round for r in self.runs]

    @property
    def completed(self) -> list[SampleResult]:
        return [r for r in self.runs if r.halting_round is not None]

    @property
    def mean_halting_round(self) -> float | None:
        done = self.completed
        return sum(r.halting_round for r in done) / len(done) if done else None

    @property
    def total_rounds(self) -> int:
        return sum(len(r.draws) for r in self.runs)

    def frequencies(self) -> dict[OutcomeKey, float]:
        counts: dict[OutcomeKey, int] = {}
        for r in self.runs:
            for d in r.draws:
                counts[d] = counts.get(d, 0) + 1
        total = self.total_rounds
        return {k: counts[k] / total for k in sorted(counts, key=lambda k: tuple(map(str, k)))}


def sample_many(schedule, config: RunConfig, runs: int, allow_partial: bool = False) -> SampleStatistics:
    compiled = ensure_compiled(schedule)
    if runs < 1:
        raise ValueError("runs must be at least 1")
    final, _ = evolve_round(compiled, config.mode)
    distribution = outcome_distribution(compiled, final)
    results = []
    for i in range(runs):
        try:
            results.append(sample_runs(compiled, config, i, distribution))
        except MaxRoundsExceeded as exc:
            if not allow_partial:
                raise
            results.append(exc.result)
    return SampleStatistics(results)


# -- collapse contrast ------------------------------------------------------


def collapse_ensemble(schedule) -> list[StateVector]:
    """Pure-state ensemble when every observation collapses the state.

    Members are kept unnormalized; a member's weight is its squared norm.
    """
    compiled = ensure_compiled(schedule)
    members = [compiled.initial(exact=True)]
    for cs in compiled.steps:
        members = [cs.apply(m) for m in members]
        if not cs.observes:
            continue
        reg = cs.step.dest if isinstance(cs.step, Measure) else cs.step.table.dest
        basis = MeasurementBasis.computational(reg, compiled.space.alphabet(reg))
        split = []
        for m in members:
            for tok in sorted(m.marginal_support(reg)):
                split.append(project_unnormalized(m, basis, tok))
        members = split
    return members


def collapse_run(schedule, config: RunConfig | None = None) -> dict[OutcomeKey, Amplitude]:
    """Outcome distribution of the collapse-everywhere ensemble."""
    if config is not None and config.mode != "collapse":
        raise ValueError("collapse_run needs mode='collapse'")
    compiled = ensure_compiled(schedule)
    total: dict[OutcomeKey, Amplitude] = {}
    for member in collapse_ensemble(compiled):
        for key, p in outcome_distribution(compiled, member).items():
            total[key] = total.get(key, ZERO) + p
    return dict(sorted(total.items(), key=lambda kv: tuple(map(str, kv[0]))))


# -- reports ----------------------------------------------------------------


def distribution_json(distribution: Mapping[OutcomeKey, Amplitude]) -> dict:
    return {outcome_label(k): _amp_json(p) for k, p in distribution.items()}


@dataclass
class RunReport:
    config: RunConfig
    checkpoints: dict[TimeStamp, StateVector]
    distribution: dict[OutcomeKey, Amplitude]
    violations: list[BranchReport]
    sampling: SampleResult | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def halting_round(self) -> int | None:
        return self.sampling.halting_round if self.sampling else None

    def to_json(self) -> dict:
        cfg = self.config
        return {
            "config": {
                "mode": cfg.mode,
                "max_rounds": cfg.max_rounds,
                "seed": cfg.seed,
                "checkpoints": [t.label for t in cfg.checkpoints],
                "observation_offset": cfg.observation_offset,
            },
            "checkpoints": [
                {"at": t.label, "state": state_to_json(psi)} for t, psi in sorted(self.checkpoints.items())
            ],
            "distribution": distribution_json(self.distribution),
            "violations": [v.to_json() for v in self.violations],
            "sampling": self.sampling.to_json() if self.sampling else None,
            "notes": list(self.notes),
        }


def run(schedule, config: RunConfig) -> RunReport:
    """One full run: checkpoints, joint distribution, violations and optional sampling."""
    compiled = ensure_compiled(schedule)
    if config.mode == "collapse":
        return RunReport(config, {}, collapse_run(compiled, config), [])
    final, snaps = evolve_round(compiled, config.mode, config.checkpoints)
    distribution = outcome_distribution(compiled, final)
    violations = detect_violations(compiled, final, config.observation_offset)
    sampling = None
    if config.seed is not None:
        try:
            sampling = sample_runs(compiled, config, 0, distribution)
        except MaxRoundsExceeded as exc:
            sampling = exc.result
    return RunReport(config, snaps, distribution, violations, sampling)
