"""Expected checkpoint states and exact comparison against engine snapshots."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from ..amplitude import ZERO, ExactReal, parse_exact
from ..hilbert import HilbertError, StateVector, rewrite_in_basis
from ..timestamp import TimeStamp
from .compiler import CompiledSchedule, ensure_compiled

Terms = dict[frozenset, ExactReal]


@dataclass(frozen=True)
class ExpectedState:
    at: TimeStamp
    present: tuple[str, ...]
    terms: list[dict]
    notes: tuple[str, ...] = ()


def _merge(rows, defaults: dict[str, str], present) -> Terms:
    acc: dict[frozenset, ExactReal] = {}
    for row in rows:
        labels = {k: v for k, v in defaults.items()}
        for basis in present:
            labels[basis] = None
        labels.update(row["labels"])
        missing = [k for k, v in labels.items() if v is None]
        if missing:
            raise ValueError(f"term leaves {missing} unset")
        key = frozenset(labels.items())
        acc[key] = acc.get(key, ZERO) + parse_exact(row["amplitude"])
    return {k: v for k, v in acc.items() if v != ZERO}


def load_expected(text: str | None = None) -> tuple[dict[str, str], list[ExpectedState]]:
    """Parse the checkpoint data file (the bundled one by default)."""
    if text is None:
        text = resources.files("wignerbox.data").joinpath("fr_checkpoints.json").read_text()
    data = json.loads(text)
    expected = []
    for cp in data["checkpoints"]:
        present = tuple(cp.get("present", ()))
        expected.append(
            ExpectedState(
                TimeStamp.parse(cp["at"]),
                present,
                cp["terms"],  # merged below once register names are known
                tuple(cp.get("notes", ())),
            )
        )
    return data["defaults"], expected


def expected_terms(schedule, exp: ExpectedState, defaults: dict[str, str]) -> Terms:
    compiled = ensure_compiled(schedule)
    regs = set(defaults)
    for name in exp.present:
        regs -= set(compiled.schedule.basis(name).registers)
    return _merge(exp.terms, {k: v for k, v in defaults.items() if k in regs}, exp.present)


def present(schedule, psi: StateVector, bases: tuple[str, ...]) -> StateVector:
    compiled = ensure_compiled(schedule)
    for name in bases:
        psi = rewrite_in_basis(psi, compiled.schedule.basis(name))
    return psi


def state_terms(psi: StateVector) -> Terms:
    return {frozenset(psi.labels(k).items()): a for k, a in psi.items()}


@dataclass
class CheckpointResult:
    at: TimeStamp
    passed: bool
    missing: dict = field(default_factory=dict)
    unexpected: dict = field(default_factory=dict)
    mismatched: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def describe(self) -> str:
        if self.passed:
            return f"{self.at.label}: ok"
        parts = []
        for what, d in (("missing", self.missing), ("unexpected", self.unexpected), ("mismatched", self.mismatched)):
            if d:
                parts.append(f"{len(d)} {what}")
        return f"{self.at.label}: FAIL ({', '.join(parts)})"

    def to_json(self) -> dict:
        def fmt(d):
            return [
                {"labels": dict(sorted(k)), "value": v.to_string() if isinstance(v, ExactReal) else [x.to_string() for x in v]}
                for k, v in sorted(d.items(), key=lambda kv: sorted(kv[0]))
            ]

        return {
            "at": self.at.label,
            "passed": self.passed,
            "missing": fmt(self.missing),
            "unexpected": fmt(self.unexpected),
            "mismatched": fmt(self.mismatched),
            "notes": list(self.notes),
        }


def compare(actual: Terms, expected: Terms, at: TimeStamp, notes=()) -> CheckpointResult:
    missing = {k: v for k, v in expected.items() if k not in actual}
    unexpected = {k: v for k, v in actual.items() if k not in expected}
    mismatched = {k: (actual[k], v) for k, v in expected.items() if k in actual and actual[k] != v}
    ok = not (missing or unexpected or mismatched)
    return CheckpointResult(at, ok, missing, unexpected, mismatched, tuple(notes))


def check_checkpoints(schedule, expected_text: str | None = None) -> list[CheckpointResult]:
    """Run ``schedule`` exactly and compare every expected checkpoint, in time order."""
    compiled: CompiledSchedule = ensure_compiled(schedule)
    defaults, expected = load_expected(expected_text)
    expected.sort(key=lambda e: e.at)
    snaps, failure = _snapshots(compiled, [e.at for e in expected])
    results = []
    for exp in expected:
        want = expected_terms(compiled, exp, defaults)
        if exp.at not in snaps:
            results.append(CheckpointResult(exp.at, False, missing=want, notes=exp.notes + (failure,)))
            continue
        try:
            actual = state_terms(present(compiled, snaps[exp.at], exp.present))
        except HilbertError as exc:
            results.append(CheckpointResult(exp.at, False, missing=want, notes=exp.notes + (f"cannot present state: {exc}",)))
            continue
        results.append(compare(actual, want, exp.at, exp.notes))
    return results


def _snapshots(compiled: CompiledSchedule, times) -> tuple[dict[TimeStamp, StateVector], str]:
    """Snapshots up to the first engine error (if any) and a description of that error."""
    pending = sorted(set(times))
    snaps: dict[TimeStamp, StateVector] = {}
    psi = compiled.initial(exact=True)
    for cs in compiled.steps:
        while pending and pending[0] < cs.step.at:
            snaps[pending.pop(0)] = psi
        try:
            psi = cs.apply(psi)
        except HilbertError as exc:
            return snaps, f"engine error at {cs.step.at.label}: {exc}"
    for t in pending:
        snaps[t] = psi
    return snaps, ""
