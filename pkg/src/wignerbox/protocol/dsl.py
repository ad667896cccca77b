"""Line-oriented text format for schedules.

::

    # comments run to end of line
    schedule fr
    register R alphabet {heads, tails} init heads
    register FMem memory of F
    state init_R = sqrt(1/3)|heads> + sqrt(2/3)|tails> on R
    label plus = |up, up_fail> on (S, FMem)
    basis L on (S, FMem) { ok = sqrt(1/2)|minus> - sqrt(1/2)|plus>, fail = ... }
    at 0:00 prepare R as init_R
    at 0:00 condprepare S from R { heads -> |down>, tails -> right }
    at 0:10 measure F on S basis zbasis as z into FMem
    at 0:11 infer F on FMem { up -> up_tails : certain r = tails at n:10 rule Q }
    at 0:01 infer Fbar from R as r into FbarMem { tails -> tails_fail : certain w = fail at n:31 rule Q }
    at 0:26 access W from WbarMem into WMem { okbar_fail -> cert_fail : certain w = fail at n:31 rule C from Wbar }
    at 0:31 check W on WMem rule S
    at 0:40 halt when WbarMem = okbar and WMem = ok

Statements end at a newline unless a ``{`` or ``(`` is open.  Inside
braces, items are separated by commas or newlines.  Tokens that are not
plain identifiers are written as double-quoted strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from ..agents import Conclusion, InferenceRow, InferenceTable
from ..amplitude import ONE, ExactReal, UnrepresentableRadical, from_sqrt, parse_exact
from ..hilbert import Label, MeasurementBasis
from ..timestamp import TimeStamp
from .model import (
    READY,
    AccessMemory,
    ConditionalPrepare,
    Diagnostic,
    HaltCheck,
    Infer,
    Ket,
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


class DSLError(Exception):
    pass


class DSLSyntaxError(DSLError):
    def __init__(self, line: int, col: int, expected: str, found: str = "") -> None:
        self.line, self.col, self.expected, self.found = line, col, expected, found
        got = f", found {found!r}" if found else ""
        super().__init__(f"line {line}, column {col}: expected {expected}{got}")


class SemanticError(DSLError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None,
                 diagnostics: list[Diagnostic] | None = None) -> None:
        self.line, self.col = line, col
        self.diagnostics = diagnostics or []
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Tok:
    kind: str  # ident, string, number, punct, newline, eof
    text: str
    line: int
    col: int
    offset: int


_LEXER = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>\d+)
  | (?P<string>"[^"\n]*")
  | (?P<punct>->|[{}(),|>=:/*+-])
    """,
    re.VERBOSE,
)

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_KEYWORDS = {"and"}


def tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _LEXER.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise DSLSyntaxError(line, col, "a token", text[pos])
        kind = m.lastgroup
        value = m.group()
        if kind == "newline":
            toks.append(Tok("newline", "\n", line, col, pos))
            line += 1
            line_start = m.end()
        elif kind == "string":
            toks.append(Tok("string", value[1:-1], line, col, pos))
        elif kind not in ("ws", "comment"):
            toks.append(Tok(kind, value, line, col, pos))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - line_start + 1, pos))
    return toks


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.depth = 0
        self.name = ""
        self.registers: list[RegisterDecl] = []
        self.states: list[NamedState] = []
        self.labels: list[LabLabel] = []
        self.bases: list[MeasurementBasis] = []
        self.steps: list[Step] = []
        # (step index, agent, token) for tables whose register is resolved later
        self.pending_dest: list[tuple[int, Tok]] = []

    # -- token helpers -----------------------------------------------------

    def peek(self, skip_newlines: bool | None = None) -> Tok:
        skip = self.depth > 0 if skip_newlines is None else skip_newlines
        j = self.i
        while skip and self.toks[j].kind == "newline":
            j += 1
        return self.toks[j]

    def next(self, skip_newlines: bool | None = None) -> Tok:
        skip = self.depth > 0 if skip_newlines is None else skip_newlines
        while skip and self.toks[self.i].kind == "newline":
            self.i += 1
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, tok: Tok, expected: str) -> DSLSyntaxError:
        found = "end of line" if tok.kind == "newline" else ("end of input" if tok.kind == "eof" else tok.text)
        return DSLSyntaxError(tok.line, tok.col, expected, found)

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("punct", "ident") and tok.text == text

    def expect(self, text: str) -> Tok:
        tok = self.next()
        if tok.kind not in ("punct", "ident") or tok.text != text:
            raise self.error(tok, repr(text))
        return tok

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def open(self, text: str) -> None:
        self.expect(text)
        self.depth += 1

    def close(self, text: str) -> None:
        tok = self.next(skip_newlines=True)
        if tok.kind != "punct" or tok.text != text:
            raise self.error(tok, repr(text))
        self.depth -= 1

    def ident(self, what: str = "identifier") -> str:
        tok = self.next()
        if tok.kind != "ident" or tok.text in _KEYWORDS:
            raise self.error(tok, what)
        return tok.text

    def token(self, what: str = "token") -> str:
        tok = self.next()
        if tok.kind in ("ident", "string"):
            return tok.text
        raise self.error(tok, what)

    def number(self) -> int:
        tok = self.next()
        if tok.kind != "number":
            raise self.error(tok, "number")
        return int(tok.text)

    def end_statement(self) -> None:
        tok = self.next(skip_newlines=False)
        if tok.kind not in ("newline", "eof"):
            raise self.error(tok, "end of line")

    # -- grammar -----------------------------------------------------------

    def parse(self) -> Schedule:
        while True:
            tok = self.peek(skip_newlines=True)
            if tok.kind == "eof":
                break
            while self.toks[self.i].kind == "newline":
                self.i += 1
            self.statement()
        self.resolve_pending()
        return Schedule(
            tuple(self.registers),
            tuple(self.steps),
            tuple(self.states),
            tuple(self.bases),
            tuple(self.labels),
            self.name,
        )

    def statement(self) -> None:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error(tok, "a statement")
        handler = {
            "schedule": self.st_schedule,
            "register": self.st_register,
            "state": self.st_state,
            "label": self.st_label,
            "basis": self.st_basis,
            "at": self.st_at,
        }.get(tok.text)
        if handler is None:
            raise self.error(tok, "'schedule', 'register', 'state', 'label', 'basis' or 'at'")
        self.next()
        handler()
        self.end_statement()

    def st_schedule(self) -> None:
        self.name = self.ident("schedule name")

    def st_register(self) -> None:
        name = self.ident("register name")
        if self.accept("alphabet"):
            self.open("{")
            alphabet = [self.token()]
            while self.accept(","):
                alphabet.append(self.token())
            self.close("}")
            self.expect("init")
            init = self.token("init token")
            self.registers.append(RegisterDecl(name, tuple(alphabet), init))
        elif self.accept("memory"):
            self.expect("of")
            owner = self.ident("agent name")
            init = self.token("init token") if self.accept("init") else READY
            self.registers.append(RegisterDecl(name, None, init, owner))
        else:
            raise self.error(self.peek(), "'alphabet' or 'memory'")

    def register_list(self) -> tuple[str, ...]:
        if self.at("("):
            self.open("(")
            regs = [self.ident("register name")]
            while self.accept(","):
                regs.append(self.ident("register name"))
            self.close(")")
            return tuple(regs)
        return (self.ident("register name"),)

    def st_state(self) -> None:
        name = self.ident("state name")
        self.expect("=")
        start = self.peek()
        terms = self.vector()
        self.expect("on")
        regs = self.register_list()
        self.states.append(NamedState(name, regs, self.build_ket(terms, regs, start)))

    def st_label(self) -> None:
        name = self.ident("label name")
        self.expect("=")
        start = self.peek()
        tokens = self.ket()
        self.expect("on")
        regs = self.register_list()
        if len(tokens) != len(regs):
            raise SemanticError(f"label {name} has {len(tokens)} tokens for {len(regs)} registers",
                                start.line, start.col)
        self.labels.append(LabLabel(name, regs, tokens))

    def st_basis(self) -> None:
        name = self.ident("basis name")
        self.expect("on")
        regs = self.register_list()
        self.open("{")
        outcomes = []
        while True:
            out = self.token("outcome token")
            self.expect("=")
            start = self.peek()
            terms = self.vector()
            outcomes.append((out, dict(self.build_ket(terms, regs, start))))
            if not self.item_separator("}"):
                break
        self.close("}")
        try:
            self.bases.append(MeasurementBasis(name, regs, tuple(outcomes)))
        except ValueError as exc:
            raise SemanticError(str(exc)) from None

    def item_separator(self, closer: str) -> bool:
        """Consume a ',' or newline between items; False at the closing bracket."""
        if self.toks[self.i].kind == "punct" and self.toks[self.i].text == ",":
            self.i += 1
            return not (self.peek(True).kind == "punct" and self.peek(True).text == closer)
        saw_newline = False
        while self.toks[self.i].kind == "newline":
            self.i += 1
            saw_newline = True
        nxt = self.toks[self.i]
        if nxt.kind == "punct" and nxt.text == closer:
            return False
        if nxt.kind == "punct" and nxt.text == ",":
            self.i += 1
            return True
        if not saw_newline:
            raise self.error(nxt, f"',' or {closer!r}")
        return True

    # -- vectors -----------------------------------------------------------

    def coefficient_factor(self) -> ExactReal:
        tok = self.next()
        if tok.kind == "number":
            value = Fraction(int(tok.text))
            if self.accept("/"):
                value /= self.number()
            return ExactReal(value)
        if tok.kind == "ident" and tok.text == "sqrt":
            self.open("(")
            value = Fraction(self.number())
            if self.accept("/"):
                value /= self.number()
            self.close(")")
            try:
                return from_sqrt(value)
            except UnrepresentableRadical as exc:
                raise SemanticError(str(exc), tok.line, tok.col) from None
        if tok.kind == "ident" and re.fullmatch(r"sqrt\d+", tok.text):
            try:
                return from_sqrt(int(tok.text[4:]))
            except UnrepresentableRadical as exc:
                raise SemanticError(str(exc), tok.line, tok.col) from None
        if tok.kind == "punct" and tok.text == "(":
            self.depth += 1
            start = self.toks[self.i].offset
            level = 1
            while level:
                t = self.next()
                if t.kind == "eof":
                    raise self.error(t, "')'")
                if t.text == "(" and t.kind == "punct":
                    level += 1
                elif t.text == ")" and t.kind == "punct":
                    level -= 1
            self.depth -= 1
            inner = self.text[start:self.toks[self.i - 1].offset]
            try:
                return parse_exact(inner)
            except ValueError as exc:
                raise SemanticError(str(exc), tok.line, tok.col) from None
        raise self.error(tok, "coefficient or ket")

    def ket(self) -> Label:
        self.expect("|")
        tokens = [self.token("ket token")]
        while self.accept(","):
            tokens.append(self.token("ket token"))
        self.expect(">")
        return tuple(tokens)

    def term(self) -> tuple[ExactReal, Label | str, Tok]:
        """One ``[coef [*]] |ket>`` or ``[coef [*]] state_name`` term."""
        start = self.peek()
        coeff = ONE
        if not self.at("|") and not (start.kind == "ident" and not re.fullmatch(r"sqrt\d*", start.text)):
            coeff = self.coefficient_factor()
            while self.accept("*"):
                if self.at("|") or (self.peek().kind == "ident" and not self.peek().text.startswith("sqrt")):
                    break
                coeff = coeff * self.coefficient_factor()
        if self.at("|"):
            return coeff, self.ket(), start
        tok = self.peek()
        if tok.kind == "ident":
            self.next()
            return coeff, tok.text, start
        raise self.error(tok, "ket")

    def vector(self) -> list[tuple[ExactReal, Label | str, Tok]]:
        sign = ONE
        if self.accept("-"):
            sign = -ONE
        else:
            self.accept("+")
        terms = []
        c, k, t = self.term()
        terms.append((sign * c, k, t))
        while self.at("+") or self.at("-"):
            sign = ONE if self.next().text == "+" else -ONE
            c, k, t = self.term()
            terms.append((sign * c, k, t))
        return terms

    def build_ket(self, terms, regs: tuple[str, ...], start: Tok) -> Ket:
        acc: dict[Label, ExactReal] = {}
        for coeff, ket, tok in terms:
            parts = self.expand(ket, regs, tok)
            for label, c in parts:
                acc[label] = acc.get(label, ExactReal()) + coeff * c
        return make_ket(acc)

    def expand(self, ket: Label | str, regs: tuple[str, ...], tok: Tok) -> list[tuple[Label, ExactReal]]:
        if isinstance(ket, str):
            for st in self.states:
                if st.name == ket:
                    if st.registers != regs:
                        raise SemanticError(f"state {ket} is over {st.registers}, not {regs}", tok.line, tok.col)
                    return list(st.ket)
            raise SemanticError(f"unknown state {ket!r}", tok.line, tok.col)
        if len(ket) == 1 and len(regs) > 1:
            for lab in self.labels:
                if lab.name == ket[0]:
                    if lab.registers != regs:
                        raise SemanticError(f"label {lab.name} is over {lab.registers}, not {regs}",
                                            tok.line, tok.col)
                    return [(lab.label, ONE)]
            raise SemanticError(f"unknown label {ket[0]!r} for registers {regs}", tok.line, tok.col)
        if len(ket) != len(regs):
            raise SemanticError(f"ket has {len(ket)} tokens for registers {regs}", tok.line, tok.col)
        return [(ket, ONE)]

    # -- steps -------------------------------------------------------------

    def timestamp(self) -> TimeStamp:
        tok = self.next()
        if tok.kind == "number":
            rnd = int(tok.text)
        elif tok.kind == "ident" and tok.text == "n":
            rnd = 0
        else:
            raise self.error(tok, "time such as 0:10 or n:10")
        self.expect(":")
        tick_tok = self.peek()
        tick = self.number()
        try:
            return TimeStamp(rnd, tick)
        except ValueError as exc:
            raise SemanticError(str(exc), tick_tok.line, tick_tok.col) from None

    def st_at(self) -> None:
        at = self.timestamp()
        tok = self.next()
        action = {
            "prepare": self.act_prepare,
            "condprepare": self.act_condprepare,
            "measure": self.act_measure,
            "infer": self.act_infer,
            "access": self.act_access,
            "check": self.act_check,
            "halt": self.act_halt,
        }.get(tok.text if tok.kind == "ident" else "")
        if action is None:
            raise self.error(tok, "an action (prepare, condprepare, measure, infer, access, check, halt)")
        self.steps.append(action(at))

    def act_prepare(self, at: TimeStamp) -> Step:
        reg = self.ident("register name")
        self.expect("as")
        return PrepareRandom(at, reg, self.ident("state name"))

    def act_condprepare(self, at: TimeStamp) -> Step:
        target = self.ident("register name")
        self.expect("from")
        source = self.ident("register name")
        self.open("{")
        branches = []
        while True:
            tok = self.token("source token")
            self.expect("->")
            start = self.peek()
            branches.append((tok, self.build_ket(self.vector(), (target,), start)))
            if not self.item_separator("}"):
                break
        self.close("}")
        return ConditionalPrepare(at, source, target, tuple(branches))

    def act_measure(self, at: TimeStamp) -> Step:
        agent = self.ident("agent name")
        self.expect("on")
        regs = self.register_list()
        self.expect("basis")
        basis = self.ident("basis name")
        variable = self.ident("variable name") if self.accept("as") else agent.lower()
        self.expect("into")
        dest = self.ident("register name")
        return Measure(at, agent, regs, basis, dest, variable)

    def conclusion(self) -> Conclusion:
        self.expect("certain")
        var = self.token("variable")
        self.expect("=")
        value = self.token("value")
        self.expect("at")
        time = self.timestamp()
        self.expect("rule")
        rule_tok = self.next()
        if rule_tok.text == "Q":
            return Conclusion(var, value, time)
        if rule_tok.text == "C":
            self.expect("from")
            return Conclusion(var, value, time, "C", self.ident("agent name"))
        raise self.error(rule_tok, "'Q' or 'C'")

    def rows(self) -> tuple[InferenceRow, ...]:
        self.open("{")
        rows: list[InferenceRow] = []
        if self.peek().kind == "punct" and self.peek().text == "}":
            self.close("}")
            return ()
        while True:
            trigger = self.token("trigger token")
            self.expect("->")
            output = None
            nxt = self.peek()
            if not (nxt.kind == "ident" and nxt.text in ("certain", "no")):
                output = self.token("output token")
                self.expect(":")
            conclusions: list[Conclusion] = []
            if self.accept("no"):
                self.expect("conclusion")
            else:
                conclusions.append(self.conclusion())
                while self.accept("and"):
                    conclusions.append(self.conclusion())
            if output is None:
                output = _default_output(trigger, conclusions)
            rows.append(InferenceRow(trigger, output, tuple(conclusions)))
            if not self.item_separator("}"):
                break
        self.close("}")
        return tuple(rows)

    def act_infer(self, at: TimeStamp) -> Step:
        agent_tok = self.peek()
        agent = self.ident("agent name")
        if self.accept("from"):
            source = self.ident("register name")
            observe = self.ident("variable name") if self.accept("as") else None
            self.expect("into")
            dest = self.ident("register name")
            table = InferenceTable(agent, source, dest, self.rows(), observe)
            check = self.trailing_check()
            return Infer(at, agent, table, check)
        dest = self.ident("register name") if self.accept("on") else None
        rows = self.rows()
        check = self.trailing_check()
        if dest is None:
            self.pending_dest.append((len(self.steps), agent_tok))
            dest = ""
        return Infer(at, agent, InferenceTable(agent, dest, dest, rows), check)

    def trailing_check(self) -> bool:
        if self.accept("check"):
            self.expect("rule")
            self.expect("S")
            return True
        return False

    def act_access(self, at: TimeStamp) -> Step:
        agent = self.ident("agent name")
        self.expect("from")
        source = self.ident("register name")
        self.expect("into")
        dest = self.ident("register name")
        return AccessMemory(at, agent, InferenceTable(agent, source, dest, self.rows()))

    def act_check(self, at: TimeStamp) -> Step:
        agent_tok = self.peek()
        agent = self.ident("agent name")
        dest = self.ident("register name") if self.accept("on") else None
        self.expect("rule")
        self.expect("S")
        if dest is None:
            self.pending_dest.append((len(self.steps), agent_tok))
            dest = ""
        return Infer(at, agent, InferenceTable(agent, dest, dest), True)

    def act_halt(self, at: TimeStamp) -> Step:
        self.expect("when")
        conds = []
        while True:
            reg = self.ident("register name")
            self.expect("=")
            conds.append((reg, self.token("value")))
            if not self.accept("and"):
                break
        return HaltCheck(at, tuple(conds))

    def resolve_pending(self) -> None:
        for index, tok in self.pending_dest:
            step = self.steps[index]
            mems = [r.name for r in self.registers if r.owner == step.agent]
            if len(mems) != 1:
                raise SemanticError(
                    f"agent {step.agent} has {len(mems)} memory registers; name one with 'on'",
                    tok.line, tok.col,
                )
            old = step.table
            table = InferenceTable(old.agent, mems[0], mems[0], old.rows, old.observe, old.ready)
            self.steps[index] = Infer(step.at, step.agent, table, step.check_consistency)


def _default_output(trigger: str, conclusions: list[Conclusion]) -> str:
    if not conclusions:
        return f"{trigger}_nc"
    last = conclusions[-1]
    return f"{trigger}_{last.variable}_{last.value}"


def parse_schedule(text: str, check: bool = True) -> Schedule:
    """Parse DSL text; with ``check`` any validation diagnostic raises SemanticError."""
    schedule = _Parser(text).parse()
    if check:
        diags = validate(schedule)
        if diags:
            raise SemanticError("; ".join(str(d) for d in diags), diagnostics=diags)
    return schedule


# -- serialization ----------------------------------------------------------


def _tok(text: str) -> str:
    return text if _IDENT.match(text) and text not in _KEYWORDS else f'"{text}"'


def format_coefficient(c: ExactReal) -> str:
    if c.is_rational():
        return str(c.c1)
    sq = c * c
    if sq.is_rational():
        root = "sqrt(" + str(sq.c1) + ")"
        return root if c.sign() > 0 else "-" + root
    return f"({c.to_string()})"


def _format_vector(ket: Iterable[tuple[Label, ExactReal]], regs: tuple[str, ...], labels: tuple[LabLabel, ...]) -> str:
    out = []
    for i, (label, c) in enumerate(ket):
        alias = next((lab.name for lab in labels if lab.registers == regs and lab.label == label), None)
        body = f"|{alias}>" if alias and len(regs) > 1 else "|" + ", ".join(_tok(t) for t in label) + ">"
        negative = c.sign() < 0
        mag = -c if negative else c
        coef = "" if mag == 1 else format_coefficient(mag)
        if i == 0:
            out.append(("-" if negative else "") + coef + body)
        else:
            out.append(("- " if negative else "+ ") + coef + body)
    return " ".join(out)


def _regs(regs: tuple[str, ...]) -> str:
    return regs[0] if len(regs) == 1 else "(" + ", ".join(regs) + ")"


def _format_conclusion(c: Conclusion) -> str:
    text = f"certain {_tok(c.variable)} = {_tok(c.value)} at {c.time.label} rule {c.rule}"
    return text + (f" from {c.source}" if c.source else "")


def _format_rows(rows: tuple[InferenceRow, ...]) -> str:
    if not rows:
        return "{ }"
    lines = []
    for row in rows:
        body = " and ".join(_format_conclusion(c) for c in row.conclusions) or "no conclusion"
        lines.append(f"  {_tok(row.trigger)} -> {_tok(row.output)} : {body}")
    return "{\n" + "\n".join(lines) + "\n}"


def _format_step(step: Step, schedule: Schedule) -> str:
    head = f"at {step.at} "
    if isinstance(step, PrepareRandom):
        return head + f"prepare {step.register} as {step.state}"
    if isinstance(step, ConditionalPrepare):
        items = ", ".join(
            f"{_tok(tok)} -> {_format_vector(ket, (step.target,), schedule.labels)}" for tok, ket in step.branches
        )
        return head + f"condprepare {step.target} from {step.source} {{ {items} }}"
    if isinstance(step, Measure):
        return head + (
            f"measure {step.agent} on {_regs(step.registers)} basis {step.basis} "
            f"as {_tok(step.variable)} into {step.dest}"
        )
    if isinstance(step, Infer):
        table = step.table
        if table.in_place:
            if not table.rows and step.check_consistency:
                return head + f"check {step.agent} on {table.dest} rule S"
            text = head + f"infer {step.agent} on {table.dest} {_format_rows(table.rows)}"
        else:
            observe = f" as {_tok(table.observe)}" if table.observe else ""
            text = head + (
                f"infer {step.agent} from {table.source}{observe} into {table.dest} {_format_rows(table.rows)}"
            )
        return text + (" check rule S" if step.check_consistency else "")
    if isinstance(step, AccessMemory):
        table = step.table
        return head + f"access {step.agent} from {table.source} into {table.dest} {_format_rows(table.rows)}"
    conds = " and ".join(f"{reg} = {_tok(val)}" for reg, val in step.conditions)
    return head + f"halt when {conds}"


def serialize_schedule(schedule: Schedule) -> str:
    lines = []
    if schedule.name:
        lines.append(f"schedule {schedule.name}")
    for reg in schedule.registers:
        if reg.is_memory:
            init = "" if reg.init == READY else f" init {_tok(reg.init)}"
            lines.append(f"register {reg.name} memory of {reg.owner}{init}")
        else:
            alpha = ", ".join(_tok(t) for t in reg.alphabet)
            lines.append(f"register {reg.name} alphabet {{{alpha}}} init {_tok(reg.init)}")
    for st in schedule.states:
        lines.append(f"state {st.name} = {_format_vector(st.ket, st.registers, ())} on {_regs(st.registers)}")
    for lab in schedule.labels:
        body = ", ".join(_tok(t) for t in lab.label)
        lines.append(f"label {lab.name} = |{body}> on {_regs(lab.registers)}")
    for basis in schedule.bases:
        items = ",\n".join(
            f"  {_tok(tok)} = {_format_vector(make_ket(vec), basis.registers, schedule.labels)}"
            for tok, vec in basis.outcomes
        )
        lines.append(f"basis {basis.name} on {_regs(basis.registers)} {{\n{items}\n}}")
    for step in schedule.steps:
        lines.append(_format_step(step, schedule))
    return "\n".join(lines) + "\n"
