from ..timestamp import TimeStamp
from .canonical import CHECKPOINTS, canonical_fr_schedule
from .dsl import DSLError, DSLSyntaxError, SemanticError, parse_schedule, serialize_schedule
from .model import (
    READY,
    AccessMemory,
    ConditionalPrepare,
    Diagnostic,
    HaltCheck,
    Infer,
    LabLabel,
    Measure,
    NamedState,
    PrepareRandom,
    RegisterDecl,
    Schedule,
    Step,
    make_ket,
    validate,
)
from .tokens import ScheduleError, TokenTable, derive_tokens

__all__ = [
    "TimeStamp", "CHECKPOINTS", "canonical_fr_schedule",
    "DSLError", "DSLSyntaxError", "SemanticError", "parse_schedule", "serialize_schedule",
    "READY", "AccessMemory", "ConditionalPrepare", "Diagnostic", "HaltCheck", "Infer",
    "LabLabel", "Measure", "NamedState", "PrepareRandom", "RegisterDecl", "Schedule", "Step",
    "make_ket", "validate", "ScheduleError", "TokenTable", "derive_tokens",
]
