from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wignerbox.agents import (
    RULE_C,
    RULE_Q_OBSERVED,
    RULE_Q_PREDICTED,
    CertaintyStatement,
    Conclusion,
    InferenceRow,
    InferenceTable,
    MemoryRecord,
    NonInjectiveTable,
    _complete_permutation,
    compile_inference_unitary,
    rule_c_lift,
    rule_q_certify,
    rule_q_observed,
    rule_s_check,
)
from wignerbox.amplitude import ONE, from_sqrt
from wignerbox.hilbert import MeasurementBasis, RegisterSpace, StateVector, apply
from wignerbox.timestamp import TimeStamp

T31 = TimeStamp(0, 31)
H = from_sqrt(Fraction(1, 2))
L_BASIS = MeasurementBasis(
    "L",
    ("S",),
    (("ok", {("down",): H, ("up",): -H}), ("fail", {("down",): H, ("up",): H})),
)
S_SPACE = RegisterSpace.of(S=("up", "down"))


def test_rule_q_certifies_right_spin_as_fail():
    right = StateVector(S_SPACE, {("down",): H, ("up",): H})
    stmt = rule_q_certify(right, L_BASIS, T31, agent="Fbar", variable="w")
    assert stmt == CertaintyStatement("Fbar", "w", "fail", T31, RULE_Q_PREDICTED)


def test_rule_q_no_certainty_for_down():
    down = StateVector.product(S_SPACE, {"S": "down"})
    assert rule_q_certify(down, L_BASIS, T31) is None


def test_rule_c_chain_and_grounding():
    q = CertaintyStatement("Fbar", "w", "fail", T31, RULE_Q_PREDICTED)
    c1 = rule_c_lift("F", q)
    c2 = rule_c_lift("Wbar", c1)
    c3 = rule_c_lift("W", c2)
    assert (c3.variable, c3.value, c3.time, c3.rule) == ("w", "fail", T31, RULE_C)
    assert c3.grounded() and c3.depth() == 4
    assert c3.to_json()["premises"][0]["premises"][0]["agent"] == "F"


def test_rule_c_needs_other_agent():
    q = CertaintyStatement("F", "w", "fail", T31, RULE_Q_PREDICTED)
    with pytest.raises(ValueError):
        rule_c_lift("F", q)


@pytest.mark.parametrize(
    "records, n",
    [
        ([("w", "fail", 31), ("w", "ok", 31)], 1),
        ([("w", "fail", 31)], 0),
        ([("w", "fail", 31), ("wbar", "ok", 20)], 0),
        ([("w", "fail", 31), ("w", "ok", 30)], 0),
        ([("w", "fail", 31), ("w", "ok", 31), ("w", "maybe", 31)], 3),
    ],
)
def test_rule_s(records, n):
    stmts = [CertaintyStatement("W", v, x, TimeStamp(0, t), RULE_Q_OBSERVED) for v, x, t in records]
    assert len(rule_s_check(stmts)) == n


def test_inference_table_rejects_repeated_trigger():
    with pytest.raises(NonInjectiveTable):
        InferenceTable("F", "FMem", "FMem", (InferenceRow("up", "a"), InferenceRow("up", "b")))


def test_inference_table_rejects_merging_outputs():
    table = InferenceTable("F", "FMem", "FMem", (InferenceRow("up", "a"), InferenceRow("down", "a")))
    with pytest.raises(NonInjectiveTable):
        compile_inference_unitary(table)


def test_compiled_in_place_inference():
    table = InferenceTable(
        "F",
        "FMem",
        "FMem",
        (
            InferenceRow("up", "up_tails", (Conclusion("r", "tails", TimeStamp(0, 10)),)),
            InferenceRow("down", "down_nc"),
        ),
    )
    alphabet = ("ready", "down", "up", "up_tails", "down_nc")
    op = compile_inference_unitary(table, {"FMem": alphabet})
    op.check()
    space = RegisterSpace.of(FMem=alphabet)
    for src, dst in (("up", "up_tails"), ("down", "down_nc")):
        assert apply(op, StateVector.product(space, {"FMem": src})) == StateVector.product(space, {"FMem": dst})
    # the completion is a permutation of the whole alphabet
    images = [next(iter(op.image((tok,)))) for tok in alphabet]
    assert sorted(images) == sorted((tok,) for tok in alphabet)


def test_compiled_cross_register_inference_needs_ready():
    table = InferenceTable("Fbar", "R", "FbarMem", (InferenceRow("tails", "tails_fail"),), observe="r")
    op = compile_inference_unitary(table, {"R": ("heads", "tails"), "FbarMem": ("ready", "tails_fail")})
    space = RegisterSpace.of(R=("heads", "tails"), FbarMem=("ready", "tails_fail"))
    out = apply(op, StateVector.product(space, {"R": "tails", "FbarMem": "ready"}))
    assert out == StateVector.product(space, {"R": "tails", "FbarMem": "tails_fail"})
    assert apply(op, StateVector.product(space, {"R": "heads", "FbarMem": "ready"})).terms == {("heads", "ready"): ONE}


@given(st.data())
def test_complete_permutation_is_bijective(data):
    alphabet = list(range(data.draw(st.integers(1, 8))))
    k = data.draw(st.integers(0, len(alphabet)))
    src = data.draw(st.permutations(alphabet))[:k]
    dst = data.draw(st.permutations(alphabet))[:k]
    partial = dict(zip(src, dst))
    perm = _complete_permutation(partial, alphabet)
    assert sorted(perm) == alphabet
    assert sorted(perm.values()) == alphabet
    assert all(perm[x] == y for x, y in partial.items())


def test_memory_record_observation_offset():
    rec = MemoryRecord(
        "W",
        (CertaintyStatement("W", "w", "fail", T31, RULE_C, (CertaintyStatement("Wbar", "w", "fail", T31, RULE_Q_PREDICTED),)),),
        (("w", "ok", TimeStamp(0, 30)),),
    )
    assert rec.observed() == "ok"
    assert len(rule_s_check(rec.certainties(1))) == 1
    assert rule_s_check(rec.certainties(0)) == []
    assert "w = ok" in rec.display()


@pytest.mark.parametrize(
    "text, expected",
    [("n:31", TimeStamp(0, 31)), ("3:05", TimeStamp(3, 5)), (" n : 2 ", TimeStamp(0, 2))],
)
def test_timestamp_parse(text, expected):
    assert TimeStamp.parse(text) == expected


@pytest.mark.parametrize("text", ["n:60", "x:10", "n:", "31"])
def test_timestamp_parse_errors(text):
    with pytest.raises(ValueError):
        TimeStamp.parse(text)


def test_timestamp_order_and_shift():
    assert TimeStamp(0, 30).shifted(1) == T31
    assert TimeStamp(0, 59) < TimeStamp(1, 0)
    assert T31.label == "n:31"
    assert rule_q_observed("W", "w", "ok", T31).rule == RULE_Q_OBSERVED
