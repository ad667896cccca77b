"""The four-agent extended Wigner's-friend protocol as a built-in schedule."""

from __future__ import annotations

from fractions import Fraction

from ..agents import Conclusion, InferenceRow, InferenceTable
from ..amplitude import ONE, from_sqrt
from ..hilbert import MeasurementBasis
from ..timestamp import TimeStamp
from .model import (
    READY,
    AccessMemory,
    ConditionalPrepare,
    HaltCheck,
    Infer,
    LabLabel,
    Measure,
    NamedState,
    PrepareRandom,
    RegisterDecl,
    Schedule,
    make_ket,
)

CHECKPOINTS = tuple(TimeStamp(0, t) for t in (2, 12, 14, 24, 28, 31))


def _t(tick: int) -> TimeStamp:
    return TimeStamp(0, tick)


def canonical_fr_schedule() -> Schedule:
    half = from_sqrt(Fraction(1, 2))
    registers = (
        RegisterDecl("R", ("heads", "tails"), "heads"),
        RegisterDecl("S", ("up", "down"), "up"),
        RegisterDecl("FbarMem", None, READY, owner="Fbar"),
        RegisterDecl("FMem", None, READY, owner="F"),
        RegisterDecl("WbarMem", None, READY, owner="Wbar"),
        RegisterDecl("WMem", None, READY, owner="W"),
    )
    states = (
        NamedState(
            "init_R",
            ("R",),
            make_ket({("heads",): from_sqrt(Fraction(1, 3)), ("tails",): from_sqrt(Fraction(2, 3))}),
        ),
        NamedState("right", ("S",), make_ket({("down",): half, ("up",): half})),
    )
    labels = (
        LabLabel("hbar", ("R", "FbarMem"), ("heads", "heads_nc")),
        LabLabel("tbar", ("R", "FbarMem"), ("tails", "tails_fail")),
        LabLabel("plus", ("S", "FMem"), ("up", "up_fail")),
        LabLabel("minus", ("S", "FMem"), ("down", "down_nc")),
    )
    hbar, tbar = ("heads", "heads_nc"), ("tails", "tails_fail")
    plus, minus = ("up", "up_fail"), ("down", "down_nc")
    bases = (
        MeasurementBasis("zbasis", ("S",), (("down", {("down",): ONE}), ("up", {("up",): ONE}))),
        MeasurementBasis(
            "Lbar",
            ("R", "FbarMem"),
            (
                ("okbar", {hbar: half, tbar: -half}),
                ("failbar", {hbar: half, tbar: half}),
            ),
        ),
        MeasurementBasis(
            "L",
            ("S", "FMem"),
            (
                ("ok", {minus: half, plus: -half}),
                ("fail", {minus: half, plus: half}),
            ),
        ),
    )
    w_fail = Conclusion("w", "fail", _t(31))
    steps = (
        PrepareRandom(_t(0), "R", "init_R"),
        ConditionalPrepare(
            _t(0),
            "R",
            "S",
            (
                ("heads", make_ket({("down",): ONE})),
                ("tails", states[1].ket),
            ),
        ),
        Infer(
            _t(1),
            "Fbar",
            InferenceTable(
                "Fbar",
                "R",
                "FbarMem",
                (
                    InferenceRow("heads", "heads_nc"),
                    InferenceRow("tails", "tails_fail", (w_fail,)),
                ),
                observe="r",
            ),
        ),
        Measure(_t(10), "F", ("S",), "zbasis", "FMem", "z"),
        Infer(
            _t(11),
            "F",
            InferenceTable(
                "F",
                "FMem",
                "FMem",
                (
                    InferenceRow("up", "up_tails", (Conclusion("r", "tails", _t(10)),)),
                    InferenceRow("down", "down_nc"),
                ),
            ),
        ),
        Infer(
            _t(13),
            "F",
            InferenceTable(
                "F",
                "FMem",
                "FMem",
                (InferenceRow("up_tails", "up_fail", (Conclusion("w", "fail", _t(31), "C", "Fbar"),)),),
            ),
        ),
        Measure(_t(20), "Wbar", ("R", "FbarMem"), "Lbar", "WbarMem", "wbar"),
        Infer(
            _t(21),
            "Wbar",
            InferenceTable(
                "Wbar",
                "WbarMem",
                "WbarMem",
                (
                    InferenceRow(
                        "okbar",
                        "okbar_fail",
                        (Conclusion("z", "up", _t(10)), Conclusion("w", "fail", _t(31), "C", "F")),
                    ),
                    InferenceRow("failbar", "failbar_nc"),
                ),
            ),
        ),
        AccessMemory(
            _t(26),
            "W",
            InferenceTable(
                "W",
                "WbarMem",
                "WMem",
                (
                    InferenceRow("okbar_fail", "cert_fail", (Conclusion("w", "fail", _t(31), "C", "Wbar"),)),
                    InferenceRow("failbar_nc", "nc"),
                ),
            ),
        ),
        Measure(_t(30), "W", ("S", "FMem"), "L", "WMem", "w"),
        Infer(_t(31), "W", InferenceTable("W", "WMem", "WMem"), check_consistency=True),
        HaltCheck(_t(40), (("WbarMem", "okbar"), ("WMem", "ok"))),
    )
    return Schedule(registers, steps, states, bases, labels, name="fr")
