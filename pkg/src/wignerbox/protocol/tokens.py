"""Derive memory alphabets and token meanings by walking a schedule."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..agents import (
    RULE_C,
    RULE_Q_PREDICTED,
    CertaintyStatement,
    Conclusion,
    InferenceTable,
    MemoryRecord,
    rule_q_observed,
)
from ..hilbert import RegisterSpace
from ..timestamp import TimeStamp
from .model import READY, AccessMemory, ConditionalPrepare, Infer, Measure, PrepareRandom, Schedule


class ScheduleError(ValueError):
    def __init__(self, message: str, step: int | None = None, at: TimeStamp | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.step = step
        self.at = at


@dataclass
class TokenTable:
    alphabets: dict[str, tuple[str, ...]]
    records: dict[str, dict[str, MemoryRecord]]
    measure_maps: dict[int, dict[tuple[str, str], str]] = field(default_factory=dict)
    owners: dict[str, str] = field(default_factory=dict)

    def space(self, schedule: Schedule) -> RegisterSpace:
        return RegisterSpace(tuple((r.name, self.alphabets[r.name]) for r in schedule.registers))

    def record(self, register: str, token: str) -> MemoryRecord:
        return self.records[register][token]

    def is_memory(self, register: str) -> bool:
        return register in self.records


def measured_token(prev: str, outcome: str) -> str:
    """Name of the memory token written when ``outcome`` is recorded over ``prev``."""
    return outcome if prev == READY else f"{prev}+{outcome}"


class _Walker:
    def __init__(self, schedule: Schedule) -> None:
        self.schedule = schedule
        self.records: dict[str, dict[str, MemoryRecord]] = {}
        self.alphabets: dict[str, list[str]] = {}
        self.possible: dict[str, list[str]] = {}
        self.established: dict[str, list[CertaintyStatement]] = {}
        self.owners: dict[str, str] = {}
        for reg in schedule.registers:
            if reg.is_memory:
                self.owners[reg.name] = reg.owner
                self.records[reg.name] = {reg.init: MemoryRecord(reg.owner)}
                self.alphabets[reg.name] = [reg.init]
                self.established.setdefault(reg.owner, [])
            else:
                self.alphabets[reg.name] = list(reg.alphabet)
            self.possible[reg.name] = [reg.init]
        self.measure_maps: dict[int, dict[tuple[str, str], str]] = {}

    def fail(self, message: str, i: int) -> ScheduleError:
        return ScheduleError(message, i, self.schedule.steps[i].at)

    def add_token(self, reg: str, token: str, record: MemoryRecord, i: int) -> None:
        known = self.records[reg].get(token)
        if known is not None and known != record:
            raise self.fail(f"token {token!r} of {reg} would carry two different meanings", i)
        if known is None:
            self.records[reg][token] = record
            self.alphabets[reg].append(token)

    def resolve(self, agent: str, concl: Conclusion, basis_premises: tuple, i: int) -> CertaintyStatement:
        if concl.rule == "Q":
            return CertaintyStatement(
                agent, concl.variable, concl.value, concl.time, RULE_Q_PREDICTED, basis_premises
            )
        for stmt in reversed(self.established.get(concl.source, [])):
            if (stmt.variable, stmt.value, stmt.time) == (concl.variable, concl.value, concl.time):
                return CertaintyStatement(agent, concl.variable, concl.value, concl.time, RULE_C, (stmt,))
        raise self.fail(
            f"{agent} lifts {concl.variable}={concl.value} at {concl.time.label} from {concl.source}, "
            f"who never establishes it",
            i,
        )

    def walk(self) -> TokenTable:
        for i, step in enumerate(self.schedule.steps):
            if isinstance(step, PrepareRandom):
                self.possible[step.register] = list(self.alphabets[step.register])
            elif isinstance(step, ConditionalPrepare):
                self.possible[step.target] = list(self.alphabets[step.target])
            elif isinstance(step, Measure):
                self.measure(i, step)
            elif isinstance(step, (Infer, AccessMemory)):
                self.infer(i, step.agent, step.table, step.at)
        return TokenTable(
            {k: tuple(v) for k, v in self.alphabets.items()},
            self.records,
            self.measure_maps,
            self.owners,
        )

    def measure(self, i: int, step: Measure) -> None:
        dest = step.dest
        if dest not in self.records:
            raise self.fail(f"{dest} is not a memory register", i)
        basis = self.schedule.basis(step.basis)
        table: dict[tuple[str, str], str] = {}
        new_possible = []
        for prev in self.possible[dest]:
            prev_rec = self.records[dest][prev]
            for out in basis.tokens:
                new = measured_token(prev, out)
                rec = replace(prev_rec, observations=prev_rec.observations + ((step.variable, out, step.at),))
                self.add_token(dest, new, rec, i)
                table[(prev, out)] = new
                new_possible.append(new)
        self.measure_maps[i] = table
        self.possible[dest] = new_possible

    def infer(self, i: int, agent: str, table: InferenceTable, at: TimeStamp) -> None:
        dest = table.dest
        if dest not in self.records:
            raise self.fail(f"{dest} is not a memory register", i)
        produced: list[CertaintyStatement] = []
        if table.in_place:
            mapping = table.mapping()
            for row in table.rows:
                trig = self.records[dest].get(row.trigger)
                if trig is None:
                    raise self.fail(f"{row.trigger!r} is not a token {dest} can hold here", i)
                premises = tuple(
                    rule_q_observed(agent, var, val, t) for var, val, t in trig.observations
                )
                stmts = tuple(self.resolve(agent, c, premises, i) for c in row.conclusions)
                produced.extend(stmts)
                rec = replace(
                    trig,
                    statements=trig.statements + stmts,
                    no_conclusion=trig.no_conclusion or row.no_conclusion,
                )
                self.add_token(dest, row.output, rec, i)
            self.possible[dest] = [mapping.get(t, t) for t in self.possible[dest]]
        else:
            if self.possible[dest] != [table.ready]:
                raise self.fail(f"{dest} is not ready when {agent} writes into it", i)
            source_is_memory = table.source in self.records
            new_possible = []
            for row in table.rows:
                if row.trigger not in self.alphabets[table.source]:
                    raise self.fail(f"{row.trigger!r} is not a token of {table.source}", i)
                observations = ()
                premises: tuple = ()
                if table.observe:
                    observations = ((table.observe, row.trigger, at),)
                    premises = (rule_q_observed(agent, table.observe, row.trigger, at),)
                stmts = tuple(self.resolve(agent, c, premises, i) for c in row.conclusions)
                produced.extend(stmts)
                rec = MemoryRecord(agent, stmts, observations, row.no_conclusion)
                self.add_token(dest, row.output, rec, i)
            mapping = table.mapping()
            source_now = self.possible[table.source] if source_is_memory else self.alphabets[table.source]
            for tok in source_now:
                out = mapping.get(tok, table.ready)
                if out not in new_possible:
                    new_possible.append(out)
            self.possible[dest] = new_possible
        self.established.setdefault(agent, []).extend(produced)


def derive_tokens(schedule: Schedule) -> TokenTable:
    """Alphabets of every register and the meaning of every memory token."""
    return _Walker(schedule).walk()
