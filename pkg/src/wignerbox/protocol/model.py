"""Timed protocol data model and structural validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

from ..agents import InferenceTable
from ..amplitude import ExactReal
from ..hilbert import Label, MeasurementBasis
from ..timestamp import TimeStamp

READY = "ready"

# a vector over some registers, as sorted (label, coefficient) pairs
Ket = tuple[tuple[Label, ExactReal], ...]


def make_ket(vector: Mapping[Label, ExactReal]) -> Ket:
    return tuple(sorted((tuple(k), v) for k, v in vector.items() if v))


def ket_norm_squared(ket: Ket) -> ExactReal:
    return sum((c * c for _, c in ket), ExactReal())


@dataclass(frozen=True)
class RegisterDecl:
    """A register; memory registers (``owner`` set) derive their alphabet from the steps."""

    name: str
    alphabet: tuple[str, ...] | None
    init: str
    owner: str | None = None

    @property
    def is_memory(self) -> bool:
        return self.owner is not None


@dataclass(frozen=True)
class NamedState:
    name: str
    registers: tuple[str, ...]
    ket: Ket


@dataclass(frozen=True)
class LabLabel:
    """Alias for a product label over several registers, e.g. ``hbar``."""

    name: str
    registers: tuple[str, ...]
    label: Label


@dataclass(frozen=True)
class PrepareRandom:
    at: TimeStamp
    register: str
    state: str
    kind = "prepare"


@dataclass(frozen=True)
class ConditionalPrepare:
    at: TimeStamp
    source: str
    target: str
    branches: tuple[tuple[str, Ket], ...]
    kind = "condprepare"


@dataclass(frozen=True)
class Measure:
    at: TimeStamp
    agent: str
    registers: tuple[str, ...]
    basis: str
    dest: str
    variable: str
    kind = "measure"


@dataclass(frozen=True)
class Infer:
    at: TimeStamp
    agent: str
    table: InferenceTable
    check_consistency: bool = False
    kind = "infer"


@dataclass(frozen=True)
class AccessMemory:
    at: TimeStamp
    agent: str
    table: InferenceTable
    kind = "access"


@dataclass(frozen=True)
class HaltCheck:
    """Halt when every ``(memory register, observed value)`` condition holds."""

    at: TimeStamp
    conditions: tuple[tuple[str, str], ...]
    kind = "halt"


Step = Union[PrepareRandom, ConditionalPrepare, Measure, Infer, AccessMemory, HaltCheck]
PREPARATION = (PrepareRandom, ConditionalPrepare)


@dataclass(frozen=True)
class Schedule:
    registers: tuple[RegisterDecl, ...]
    steps: tuple[Step, ...]
    states: tuple[NamedState, ...] = ()
    bases: tuple[MeasurementBasis, ...] = ()
    labels: tuple[LabLabel, ...] = ()
    name: str = field(default="", compare=False)

    __hash__ = None  # type: ignore[assignment]

    def register(self, name: str) -> RegisterDecl:
        for reg in self.registers:
            if reg.name == name:
                return reg
        raise KeyError(f"undeclared register {name!r}")

    def has_register(self, name: str) -> bool:
        return any(reg.name == name for reg in self.registers)

    def state(self, name: str) -> NamedState:
        for st in self.states:
            if st.name == name:
                return st
        raise KeyError(f"undeclared state {name!r}")

    def basis(self, name: str) -> MeasurementBasis:
        for b in self.bases:
            if b.name == name:
                return b
        raise KeyError(f"undeclared basis {name!r}")

    @property
    def agents(self) -> tuple[str, ...]:
        seen: list[str] = []
        for reg in self.registers:
            if reg.owner and reg.owner not in seen:
                seen.append(reg.owner)
        return tuple(seen)

    def memory_of(self, agent: str) -> tuple[str, ...]:
        return tuple(reg.name for reg in self.registers if reg.owner == agent)

    @property
    def halt(self) -> HaltCheck | None:
        halts = [s for s in self.steps if isinstance(s, HaltCheck)]
        return halts[-1] if halts else None

    def events(self) -> list[tuple[TimeStamp, tuple[Step, ...]]]:
        """Steps grouped by time stamp (only preparations may share one)."""
        grouped: list[tuple[TimeStamp, list[Step]]] = []
        for step in self.steps:
            if grouped and grouped[-1][0] == step.at:
                grouped[-1][1].append(step)
            else:
                grouped.append((step.at, [step]))
        return [(t, tuple(steps)) for t, steps in grouped]

    def without(self, predicate) -> Schedule:
        """Copy with every step matching ``predicate`` removed."""
        return Schedule(
            self.registers,
            tuple(s for s in self.steps if not predicate(s)),
            self.states,
            self.bases,
            self.labels,
            self.name,
        )

    def replacing(self, old: Step, new: Step) -> Schedule:
        return Schedule(
            self.registers,
            tuple(new if s == old else s for s in self.steps),
            self.states,
            self.bases,
            self.labels,
            self.name,
        )


@dataclass(frozen=True)
class Diagnostic:
    message: str
    step: int | None = None
    at: TimeStamp | None = None

    def __str__(self) -> str:
        where = f"step {self.step} at {self.at}: " if self.step is not None else ""
        return where + self.message


def step_registers(step: Step) -> list[str]:
    if isinstance(step, PrepareRandom):
        return [step.register]
    if isinstance(step, ConditionalPrepare):
        return [step.source, step.target]
    if isinstance(step, Measure):
        return [*step.registers, step.dest]
    if isinstance(step, (Infer, AccessMemory)):
        return [step.table.source, step.table.dest]
    return [reg for reg, _ in step.conditions]


def _check_ket(schedule: Schedule, registers: tuple[str, ...], ket: Ket, what: str) -> list[str]:
    problems = []
    for reg in registers:
        if not schedule.has_register(reg):
            problems.append(f"{what} uses undeclared register {reg}")
    if problems:
        return problems
    for label, _ in ket:
        for reg, tok in zip(registers, label):
            decl = schedule.register(reg)
            if decl.alphabet is not None and tok not in decl.alphabet:
                problems.append(f"{what}: {tok!r} is not a token of {reg}")
    if ket_norm_squared(ket) != 1:
        problems.append(f"{what} has squared norm {ket_norm_squared(ket)}, not 1")
    return problems


def validate(schedule: Schedule) -> list[Diagnostic]:
    """Every violated schedule invariant, in a stable order; empty means valid."""
    diags: list[Diagnostic] = []

    for reg in schedule.registers:
        if reg.alphabet is not None and reg.init not in reg.alphabet:
            diags.append(Diagnostic(f"register {reg.name}: init token {reg.init!r} not in alphabet"))
        if reg.alphabet is None and reg.owner is None:
            diags.append(Diagnostic(f"register {reg.name} has neither alphabet nor owner"))
    names = [r.name for r in schedule.registers]
    for name in sorted({n for n in names if names.count(n) > 1}):
        diags.append(Diagnostic(f"register {name} declared twice"))

    for st in schedule.states:
        for msg in _check_ket(schedule, st.registers, st.ket, f"state {st.name}"):
            diags.append(Diagnostic(msg))
    for basis in schedule.bases:
        undeclared = [r for r in basis.registers if not schedule.has_register(r)]
        for r in undeclared:
            diags.append(Diagnostic(f"basis {basis.name} uses undeclared register {r}"))
        for msg in basis.orthonormality_defects():
            diags.append(Diagnostic(f"basis {basis.name} is not orthonormal: {msg}"))

    halts = [i for i, s in enumerate(schedule.steps) if isinstance(s, HaltCheck)]
    if len(halts) != 1:
        diags.append(Diagnostic(f"expected exactly one halt check, found {len(halts)}"))
    elif halts[0] != len(schedule.steps) - 1:
        i = halts[0]
        diags.append(Diagnostic("halt check is not the last step", i, schedule.steps[i].at))

    prev: Step | None = None
    for i, step in enumerate(schedule.steps):
        at = step.at
        for reg in step_registers(step):
            if not schedule.has_register(reg):
                diags.append(Diagnostic(f"undeclared register {reg}", i, at))
        if prev is not None:
            if at.round != prev.at.round:
                diags.append(Diagnostic("steps span more than one round", i, at))
            elif at < prev.at:
                diags.append(Diagnostic(f"time {at} precedes previous step at {prev.at}", i, at))
            elif at == prev.at and not (isinstance(step, PREPARATION) and isinstance(prev, PREPARATION)):
                diags.append(Diagnostic(f"two steps at the same time {at}", i, at))
        prev = step
        diags.extend(Diagnostic(msg, i, at) for msg in _check_step(schedule, step))

    if not diags:
        # token derivation catches unresolvable rule-C premises and similar
        from .tokens import ScheduleError, derive_tokens

        try:
            derive_tokens(schedule)
        except ScheduleError as exc:
            diags.append(Diagnostic(exc.message, exc.step, exc.at))
    return diags


def _check_step(schedule: Schedule, step: Step) -> list[str]:
    problems: list[str] = []
    if isinstance(step, PrepareRandom):
        try:
            st = schedule.state(step.state)
        except KeyError as exc:
            return [exc.args[0]]
        if st.registers != (step.register,):
            problems.append(f"state {st.name} is not over register {step.register}")
    elif isinstance(step, ConditionalPrepare):
        if not (schedule.has_register(step.source) and schedule.has_register(step.target)):
            return problems
        seen = set()
        alphabet = schedule.register(step.source).alphabet or ()
        for tok, ket in step.branches:
            if tok in seen:
                problems.append(f"branch {tok!r} listed twice")
            seen.add(tok)
            if tok not in alphabet:
                problems.append(f"{tok!r} is not a token of {step.source}")
            problems += _check_ket(schedule, (step.target,), ket, f"branch {tok}")
    elif isinstance(step, Measure):
        try:
            basis = schedule.basis(step.basis)
        except KeyError as exc:
            return [exc.args[0]]
        if basis.registers != step.registers:
            problems.append(f"basis {basis.name} is over {basis.registers}, not {step.registers}")
        if step.dest in step.registers:
            problems.append(f"{step.dest} is both measured and written")
        if schedule.has_register(step.dest) and not schedule.register(step.dest).is_memory:
            problems.append(f"{step.dest} is not a memory register")
    elif isinstance(step, (Infer, AccessMemory)):
        table = step.table
        if table.agent != step.agent:
            problems.append(f"table belongs to {table.agent}, step to {step.agent}")
        if schedule.has_register(table.dest):
            dest = schedule.register(table.dest)
            if dest.owner != step.agent:
                problems.append(f"{step.agent} writes {table.dest}, which belongs to {dest.owner}")
        outputs = [row.output for row in table.rows]
        if len(set(outputs)) != len(outputs):
            problems.append("two rows write the same token (not injective)")
        if isinstance(step, AccessMemory):
            if schedule.has_register(table.source) and not schedule.register(table.source).is_memory:
                problems.append(f"{table.source} is not a memory register")
            if table.in_place:
                problems.append("memory access reads another register")
    elif isinstance(step, HaltCheck):
        for reg, _ in step.conditions:
            if schedule.has_register(reg) and not schedule.register(reg).is_memory:
                problems.append(f"halt condition on {reg}, which is not a memory register")
    return problems
