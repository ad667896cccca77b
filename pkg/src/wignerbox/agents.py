"""Certainty statements, the inference rules Q, C and S, and inference unitaries.

An agent's reasoning step is a table from trigger tokens (what the agent
currently holds, or reads) to new memory tokens.  Compiling the table gives a
permutation of memory labels, i.e. a unitary, so agents can reason while in
superposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .amplitude import ONE
from .hilbert import BasisMapOperator, MeasurementBasis, StateVector, born_distribution
from .timestamp import TimeStamp

RULE_Q_PREDICTED = "Q-i"
RULE_Q_OBSERVED = "Q-ii"
RULE_C = "C"
RULES = (RULE_Q_PREDICTED, RULE_Q_OBSERVED, RULE_C)


class NonInjectiveTable(ValueError):
    pass


@dataclass(frozen=True)
class CertaintyStatement:
    """``agent`` is certain that ``variable = value`` at ``time``."""

    agent: str
    variable: str
    value: str
    time: TimeStamp
    rule: str
    premises: tuple[CertaintyStatement, ...] = ()

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ValueError(f"unknown rule tag {self.rule!r}")
        if self.rule == RULE_C:
            if len(self.premises) != 1:
                raise ValueError("a rule-C statement has exactly one premise")
            if self.premises[0].agent == self.agent:
                raise ValueError("rule C lifts another agent's certainty")

    @property
    def key(self) -> tuple[str, TimeStamp]:
        return (self.variable, self.time)

    def describe(self) -> str:
        return f"{self.agent}: certain {self.variable}={self.value} at {self.time.label} [{self.rule}]"

    def grounded(self) -> bool:
        """True if every rule-C chain ends in a rule-Q statement."""
        if self.rule == RULE_C:
            return self.premises[0].grounded()
        return all(p.grounded() for p in self.premises)

    def depth(self) -> int:
        return 1 + max((p.depth() for p in self.premises), default=0)

    def to_json(self) -> dict:
        return {
            "agent": self.agent,
            "variable": self.variable,
            "value": self.value,
            "time": self.time.label,
            "rule": self.rule,
            "premises": [p.to_json() for p in self.premises],
        }


def rule_q_certify(
    prepared_state: StateVector,
    basis: MeasurementBasis,
    time: TimeStamp,
    agent: str = "",
    variable: str = "",
) -> CertaintyStatement | None:
    """Rule Q(i): certainty when exactly one outcome has Born probability 1."""
    probs = born_distribution(prepared_state, basis)
    certain = [tok for tok, p in probs.items() if p == 1]
    if len(certain) != 1:
        return None
    return CertaintyStatement(agent, variable or basis.name, certain[0], time, RULE_Q_PREDICTED)


def rule_q_observed(agent: str, variable: str, outcome: str, time: TimeStamp) -> CertaintyStatement:
    """Rule Q(ii): an agent is certain of what it has just observed."""
    return CertaintyStatement(agent, variable, outcome, time, RULE_Q_OBSERVED)


def rule_c_lift(agent: str, premise: CertaintyStatement) -> CertaintyStatement:
    """Rule C: certainty that another (conforming) agent is certain carries over."""
    return CertaintyStatement(agent, premise.variable, premise.value, premise.time, RULE_C, (premise,))


def rule_s_check(records: Iterable[CertaintyStatement]) -> list[tuple[CertaintyStatement, CertaintyStatement]]:
    """Every pair of records fixing the same timed variable to different values."""
    seen: list[CertaintyStatement] = []
    violations = []
    for stmt in records:
        for prior in seen:
            if prior.key == stmt.key and prior.value != stmt.value:
                violations.append((prior, stmt))
        seen.append(stmt)
    return violations


@dataclass(frozen=True)
class Conclusion:
    """A conclusion written in an inference table, before its premises are resolved.

    ``rule`` is ``"Q"`` (a Born-certain prediction) or ``"C"`` (lifted from
    ``source``'s certainty about the same timed value).
    """

    variable: str
    value: str
    time: TimeStamp
    rule: str = "Q"
    source: str | None = None

    def __post_init__(self) -> None:
        if self.rule not in ("Q", "C"):
            raise ValueError(f"inference tables use rule Q or C, not {self.rule!r}")
        if (self.rule == "C") != (self.source is not None):
            raise ValueError("rule C needs a source agent, rule Q takes none")


@dataclass(frozen=True)
class InferenceRow:
    trigger: str
    output: str
    conclusions: tuple[Conclusion, ...] = ()

    @property
    def no_conclusion(self) -> bool:
        return not self.conclusions


@dataclass(frozen=True)
class InferenceTable:
    """Rows ``trigger -> output`` for one agent.

    With ``source == dest`` the agent rewrites its own memory in place.
    Otherwise it reads ``source`` and writes into ``dest``, which must hold
    ``ready``; ``observe`` names the variable when ``source`` is a physical
    register whose value the agent thereby observes.
    """

    agent: str
    source: str
    dest: str
    rows: tuple[InferenceRow, ...] = ()
    observe: str | None = None
    ready: str = "ready"

    def __post_init__(self) -> None:
        triggers = [row.trigger for row in self.rows]
        if len(set(triggers)) != len(triggers):
            raise NonInjectiveTable(f"{self.agent}: repeated trigger in inference table")

    @property
    def in_place(self) -> bool:
        return self.source == self.dest

    def mapping(self) -> dict[str, str]:
        return {row.trigger: row.output for row in self.rows}

    def row(self, trigger: str) -> InferenceRow | None:
        for row in self.rows:
            if row.trigger == trigger:
                return row
        return None


def _complete_permutation(partial: Mapping, alphabet: Sequence) -> dict:
    """Extend an injective partial map on ``alphabet`` to a permutation."""
    outputs = set(partial.values())
    rest = [x for x in alphabet if x not in partial]
    free = [y for y in alphabet if y not in outputs]
    perm = dict(partial)
    free_set = set(free)
    for x in rest:
        if x in free_set:
            perm[x] = x
            free_set.discard(x)
    pending = [x for x in rest if x not in perm]
    spare = [y for y in free if y in free_set]
    perm.update(zip(pending, spare))
    return perm


def compile_inference_unitary(
    table: InferenceTable, alphabets: Mapping[str, Sequence[str]] | None = None
) -> BasisMapOperator:
    """The memory-register unitary realising ``table``.

    With ``alphabets`` the partial map is completed to a permutation of every
    label of the registers involved; otherwise only the listed rows are
    emitted and the identity is assumed elsewhere.
    """
    name = f"infer[{table.agent}]"
    if table.in_place:
        partial = {(row.trigger,): (row.output,) for row in table.rows}
        registers: tuple[str, ...] = (table.dest,)
    else:
        partial = {
            (row.trigger, table.ready): (row.trigger, row.output) for row in table.rows
        }
        registers = (table.source, table.dest)
    if len(set(partial.values())) != len(partial):
        raise NonInjectiveTable(f"{table.agent}: two rows produce the same memory label")
    if alphabets is not None:
        if table.in_place:
            labels = [(tok,) for tok in alphabets[table.dest]]
        else:
            labels = [(s, d) for s in alphabets[table.source] for d in alphabets[table.dest]]
        missing = [lab for lab in list(partial) + list(partial.values()) if lab not in labels]
        if missing:
            raise ValueError(f"{table.agent}: label {missing[0]} is outside the declared alphabets")
        perm = _complete_permutation(partial, labels)
    else:
        perm = partial
    rows = tuple((src, {dst: ONE}) for src, dst in perm.items() if src != dst)
    return BasisMapOperator(registers, rows, name)


@dataclass(frozen=True)
class MemoryRecord:
    """What one memory token means: who holds it and what they are certain of."""

    agent: str
    statements: tuple[CertaintyStatement, ...] = ()
    observations: tuple[tuple[str, str, TimeStamp], ...] = ()
    no_conclusion: bool = False
    notes: tuple[str, ...] = field(default=(), compare=False)

    def observed(self, variable: str | None = None) -> str | None:
        """Last observed value (of ``variable`` if given)."""
        for var, value, _ in reversed(self.observations):
            if variable is None or var == variable:
                return value
        return None

    def certainties(self, observation_offset: int = 1) -> list[CertaintyStatement]:
        """All certainty records, observations turned into rule-Q(ii) statements.

        ``observation_offset`` shifts the time stamp of observed values to the
        comparison time used by rule S.
        """
        out = [
            rule_q_observed(self.agent, var, value, time.shifted(observation_offset))
            for var, value, time in self.observations
        ]
        out.extend(self.statements)
        return out

    def display(self) -> str:
        parts = [f"{var} = {value}" for var, value, _ in self.observations]
        parts += [f"certain {s.variable} = {s.value} at {s.time.label}" for s in self.statements]
        if self.no_conclusion:
            parts.append("no conclusion")
        return "; ".join(parts) if parts else "ready"
