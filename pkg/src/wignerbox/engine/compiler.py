"""Turn a validated schedule into operators over a concrete register space."""

from __future__ import annotations

from dataclasses import dataclass

from ..agents import MemoryRecord, compile_inference_unitary
from ..hilbert import (
    BasisMapOperator,
    MeasurementBasis,
    RegisterSpace,
    StateVector,
    apply,
    record_measurement,
)
from ..protocol.model import (
    AccessMemory,
    ConditionalPrepare,
    Diagnostic,
    HaltCheck,
    Infer,
    Measure,
    PrepareRandom,
    Schedule,
    Step,
    validate,
)
from ..protocol.tokens import TokenTable, derive_tokens


class InvalidSchedule(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]) -> None:
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class CompiledStep:
    index: int
    step: Step
    operator: BasisMapOperator | None = None
    basis: MeasurementBasis | None = None
    dest: str | None = None
    token_map: dict | None = None

    @property
    def is_measurement(self) -> bool:
        return self.basis is not None

    @property
    def observes(self) -> bool:
        """Whether an agent learns an outcome here (a collapse point in collapse mode)."""
        if isinstance(self.step, Measure):
            return True
        return isinstance(self.step, Infer) and self.step.table.observe is not None

    def apply(self, psi: StateVector) -> StateVector:
        if self.operator is not None:
            return apply(self.operator, psi)
        if self.basis is not None:
            return record_measurement(psi, self.basis, self.dest, self.token_map)
        return psi


@dataclass
class CompiledSchedule:
    schedule: Schedule
    tokens: TokenTable
    space: RegisterSpace
    steps: tuple[CompiledStep, ...]

    def initial(self, exact: bool = True) -> StateVector:
        return StateVector.product(self.space, {r.name: r.init for r in self.schedule.registers}, exact)

    def record(self, register: str, token: str) -> MemoryRecord:
        return self.tokens.record(register, token)

    def is_memory(self, register: str) -> bool:
        return self.tokens.is_memory(register)

    @property
    def halt(self) -> HaltCheck | None:
        return self.schedule.halt

    def alphabets(self) -> dict[str, tuple[str, ...]]:
        return dict(self.space.registers)


def _compile_step(schedule: Schedule, tokens: TokenTable, i: int, step: Step) -> CompiledStep:
    alphabets = tokens.alphabets
    if isinstance(step, PrepareRandom):
        init = schedule.register(step.register).init
        state = schedule.state(step.state)
        op = BasisMapOperator(
            (step.register,), (((init,), dict(state.ket)),), f"prepare[{step.register}]"
        )
        return CompiledStep(i, step, operator=op)
    if isinstance(step, ConditionalPrepare):
        init = schedule.register(step.target).init
        rows = tuple(
            ((tok, init), {(tok, lab[0]): c for lab, c in ket}) for tok, ket in step.branches
        )
        op = BasisMapOperator((step.source, step.target), rows, f"condprepare[{step.target}]")
        return CompiledStep(i, step, operator=op)
    if isinstance(step, Measure):
        return CompiledStep(
            i, step, basis=schedule.basis(step.basis), dest=step.dest, token_map=tokens.measure_maps[i]
        )
    if isinstance(step, (Infer, AccessMemory)):
        return CompiledStep(i, step, operator=compile_inference_unitary(step.table, alphabets))
    return CompiledStep(i, step)


def compile_schedule(schedule: Schedule) -> CompiledSchedule:
    diags = validate(schedule)
    if diags:
        raise InvalidSchedule(diags)
    tokens = derive_tokens(schedule)
    space = tokens.space(schedule)
    steps = tuple(_compile_step(schedule, tokens, i, s) for i, s in enumerate(schedule.steps))
    for cs in steps:
        if cs.operator is not None:
            cs.operator.check()
    return CompiledSchedule(schedule, tokens, space, steps)


def ensure_compiled(schedule: Schedule | CompiledSchedule) -> CompiledSchedule:
    if isinstance(schedule, CompiledSchedule):
        return schedule
    return compile_schedule(schedule)
