"""Labeled registers, sparse state vectors, basis-map isometries and measurement.

A state is a sparse map from full label tuples (one token per register, in
the order of the :class:`RegisterSpace`) to amplitudes.  Amplitudes are
:class:`~wignerbox.amplitude.ExactReal` in exact mode and ``float`` in float
mode.  Operators and bases always carry exact coefficients; they are
converted on the fly when applied to a float state.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .amplitude import ONE, ZERO, ExactReal, from_sqrt

Amplitude = Union[ExactReal, float]
Label = tuple[str, ...]
# a vector over a subset of registers: local label tuple -> coefficient
LocalVector = Mapping[Label, ExactReal]

FLOAT_ATOL = 1e-12
FLOAT_NORM_TOL = 1e-9


class HilbertError(Exception):
    pass


class IsometryViolation(HilbertError):
    pass


class SupportLeakage(HilbertError):
    pass


class ZeroProbabilityOutcome(HilbertError):
    pass


class DestNotReady(HilbertError):
    pass


class UnknownToken(HilbertError):
    pass


class NonOrthonormalBasis(HilbertError):
    pass


def _is_zero(value: Amplitude) -> bool:
    if isinstance(value, ExactReal):
        return not value
    return abs(value) <= FLOAT_ATOL


def _cast(coeff: ExactReal, exact: bool) -> Amplitude:
    return coeff if exact else float(coeff)


@dataclass(frozen=True)
class RegisterSpace:
    registers: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.registers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register in {names}")
        for name, alphabet in self.registers:
            if not alphabet:
                raise ValueError(f"register {name} has an empty alphabet")
            if len(set(alphabet)) != len(alphabet):
                raise ValueError(f"register {name} repeats a token")

    @classmethod
    def of(cls, **alphabets: Sequence[str]) -> RegisterSpace:
        return cls(tuple((name, tuple(alpha)) for name, alpha in alphabets.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    def index(self, name: str) -> int:
        for i, (reg, _) in enumerate(self.registers):
            if reg == name:
                return i
        raise KeyError(f"unknown register {name!r}")

    def alphabet(self, name: str) -> tuple[str, ...]:
        return self.registers[self.index(name)][1]

    def __contains__(self, name: object) -> bool:
        return any(reg == name for reg, _ in self.registers)

    @property
    def dimension(self) -> int:
        dim = 1
        for _, alphabet in self.registers:
            dim *= len(alphabet)
        return dim

    def replace(self, removed: Sequence[str], name: str, alphabet: Sequence[str]) -> RegisterSpace:
        """Space with ``removed`` registers swapped for one composite register."""
        first = min(self.index(r) for r in removed)
        regs = []
        for i, (reg, alpha) in enumerate(self.registers):
            if i == first:
                regs.append((name, tuple(alphabet)))
            if reg not in removed:
                regs.append((reg, alpha))
        return RegisterSpace(tuple(regs))


class StateVector:
    """Sparse vector over a :class:`RegisterSpace`, kept in canonical form."""

    __slots__ = ("space", "_terms", "exact")

    def __init__(
        self,
        space: RegisterSpace,
        terms: Mapping[Label, Amplitude] | Iterable[tuple[Label, Amplitude]],
        exact: bool | None = None,
    ) -> None:
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[Label, Amplitude] = {}
        width = len(space.registers)
        for key, amp in items:
            key = tuple(key)
            if len(key) != width:
                raise ValueError(f"label {key} does not match {space.names}")
            merged[key] = merged[key] + amp if key in merged else amp
        if exact is None:
            exact = all(isinstance(a, ExactReal) for a in merged.values())
        for key in merged:
            for (reg, alphabet), token in zip(space.registers, key):
                if token not in alphabet:
                    raise UnknownToken(f"{token!r} is not in the alphabet of {reg}")
        self.space = space
        self.exact = exact
        self._terms = {
            k: (v if exact else float(v)) for k, v in merged.items() if not _is_zero(v)
        }

    @classmethod
    def product(cls, space: RegisterSpace, tokens: Mapping[str, str], exact: bool = True) -> StateVector:
        key = tuple(tokens[name] for name in space.names)
        return cls(space, {key: ONE if exact else 1.0}, exact=exact)

    @classmethod
    def from_labels(
        cls,
        space: RegisterSpace,
        terms: Iterable[tuple[Mapping[str, str], Amplitude]],
        exact: bool | None = None,
    ) -> StateVector:
        return cls(space, [(tuple(lab[n] for n in space.names), a) for lab, a in terms], exact)

    @property
    def terms(self) -> Mapping[Label, Amplitude]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Label, Amplitude]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def amplitude(self, key: Label | Mapping[str, str]) -> Amplitude:
        if isinstance(key, Mapping):
            key = tuple(key[n] for n in self.space.names)
        return self._terms.get(tuple(key), ZERO if self.exact else 0.0)

    def labels(self, key: Label) -> dict[str, str]:
        return dict(zip(self.space.names, key))

    def norm_squared(self) -> Amplitude:
        total: Amplitude = ZERO if self.exact else 0.0
        for amp in self._terms.values():
            total = total + amp * amp
        return total

    def is_normalized(self) -> bool:
        n = self.norm_squared()
        if self.exact:
            return n == 1
        return abs(n - 1.0) <= FLOAT_NORM_TOL

    def scale(self, factor: ExactReal | float) -> StateVector:
        f = factor if self.exact else float(factor)
        return StateVector(self.space, {k: a * f for k, a in self._terms.items()}, self.exact)

    def to_float(self) -> StateVector:
        return StateVector(self.space, {k: float(a) for k, a in self._terms.items()}, exact=False)

    def inner(self, other: StateVector) -> Amplitude:
        if other.space != self.space:
            raise ValueError("inner product across different spaces")
        total: Amplitude = ZERO if self.exact and other.exact else 0.0
        for key, amp in self._terms.items():
            if key in other._terms:
                total = total + amp * other._terms[key]
        return total

    def marginal_support(self, register: str) -> set[str]:
        i = self.space.index(register)
        return {key[i] for key in self._terms}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.space == other.space and self._terms == other._terms

    __hash__ = None  # type: ignore[assignment]

    def close_to(self, other: StateVector, atol: float = FLOAT_ATOL) -> bool:
        if self.space != other.space:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(float(self.amplitude(k)) - float(other.amplitude(k))) <= atol for k in keys)

    def __repr__(self) -> str:
        parts = []
        for key, amp in sorted(self._terms.items()):
            parts.append(f"({amp})|{','.join(key)}>")
        return " + ".join(parts) or "0"


def _check_orthonormal(vectors: Sequence[LocalVector], what: str) -> list[str]:
    defects = []
    for i, u in enumerate(vectors):
        for j in range(i, len(vectors)):
            v = vectors[j]
            dot = sum((c * v[k] for k, c in u.items() if k in v), ZERO)
            expected = 1 if i == j else 0
            if dot != expected:
                if i == j:
                    defects.append(f"{what} {i} has squared norm {dot}, not 1")
                else:
                    defects.append(f"{what}s {i} and {j} overlap by {dot}")
    return defects


@dataclass(frozen=True)
class BasisMapOperator:
    """An isometry given by its action on orthogonal product labels.

    Labels that are not listed are left unchanged; such a label must be
    orthogonal to every listed output wherever the operator is applied.
    """

    registers: tuple[str, ...]
    rows: tuple[tuple[Label, LocalVector], ...]
    name: str = ""

    def __post_init__(self) -> None:
        inputs = [inp for inp, _ in self.rows]
        if len(set(inputs)) != len(inputs):
            raise IsometryViolation(f"{self.name or 'operator'}: repeated input label")
        width = len(self.registers)
        for inp, out in self.rows:
            if len(inp) != width or any(len(k) != width for k in out):
                raise ValueError(f"{self.name or 'operator'}: label width does not match {self.registers}")

    @classmethod
    def from_map(
        cls, registers: Sequence[str], mapping: Mapping[Label, LocalVector | Label], name: str = ""
    ) -> BasisMapOperator:
        rows = []
        for inp, out in mapping.items():
            if isinstance(out, tuple):
                out = {out: ONE}
            rows.append((tuple(inp), dict(out)))
        return cls(tuple(registers), tuple(rows), name)

    @classmethod
    def identity(cls, registers: Sequence[str], name: str = "identity") -> BasisMapOperator:
        return cls(tuple(registers), (), name)

    def isometry_defects(self) -> list[str]:
        return _check_orthonormal([out for _, out in self.rows], "output")

    def check(self) -> None:
        defects = self.isometry_defects()
        if defects:
            raise IsometryViolation(f"{self.name or 'operator'}: " + "; ".join(defects))

    def image(self, label: Label) -> LocalVector:
        for inp, out in self.rows:
            if inp == label:
                return out
        return {label: ONE}


def apply(op: BasisMapOperator, psi: StateVector) -> StateVector:
    """Linear extension of ``op`` (identity on unlisted labels) applied to ``psi``."""
    op.check()
    idx = [psi.space.index(r) for r in op.registers]
    rowmap = {inp: out for inp, out in op.rows}
    covered = set()
    for out in rowmap.values():
        covered.update(out)
    acc: dict[Label, Amplitude] = defaultdict(lambda: ZERO if psi.exact else 0.0)
    for key, amp in psi.items():
        local = tuple(key[i] for i in idx)
        out = rowmap.get(local)
        if out is None:
            if local in covered and local not in rowmap:
                raise IsometryViolation(
                    f"{op.name or 'operator'}: unlisted label {local} overlaps a listed output"
                )
            out = {local: ONE}
        for loc, coeff in out.items():
            new = list(key)
            for i, tok in zip(idx, loc):
                new[i] = tok
            acc[tuple(new)] += amp * _cast(coeff, psi.exact)
    return StateVector(psi.space, acc, psi.exact)


@dataclass(frozen=True)
class MeasurementBasis:
    """A (possibly partial) orthonormal basis over some registers."""

    name: str
    registers: tuple[str, ...]
    outcomes: tuple[tuple[str, LocalVector], ...]

    def __post_init__(self) -> None:
        tokens = [tok for tok, _ in self.outcomes]
        if len(set(tokens)) != len(tokens):
            raise ValueError(f"basis {self.name}: repeated outcome token")

    @classmethod
    def computational(cls, register: str, alphabet: Sequence[str], name: str | None = None) -> MeasurementBasis:
        return cls(name or f"{register}_computational", (register,),
                   tuple((tok, {(tok,): ONE}) for tok in alphabet))

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(tok for tok, _ in self.outcomes)

    def vector(self, token: str) -> LocalVector:
        for tok, vec in self.outcomes:
            if tok == token:
                return vec
        raise KeyError(f"basis {self.name} has no outcome {token!r}")

    def orthonormality_defects(self) -> list[str]:
        return _check_orthonormal([vec for _, vec in self.outcomes], f"{self.name} outcome")

    def check(self) -> None:
        defects = self.orthonormality_defects()
        if defects:
            raise NonOrthonormalBasis("; ".join(defects))


def _split(psi: StateVector, registers: Sequence[str]) -> tuple[list[int], dict[Label, dict[Label, Amplitude]]]:
    """Group amplitudes by the labels outside ``registers``."""
    idx = [psi.space.index(r) for r in registers]
    idx_set = set(idx)
    groups: dict[Label, dict[Label, Amplitude]] = defaultdict(dict)
    for key, amp in psi.items():
        rest = tuple(tok for i, tok in enumerate(key) if i not in idx_set)
        groups[rest][tuple(key[i] for i in idx)] = amp
    return idx, groups


def _join(psi: StateVector, idx: list[int], rest: Label, local: Label) -> Label:
    out = []
    rest_it = iter(rest)
    pos = dict(zip(idx, local))
    for i in range(len(psi.space.registers)):
        out.append(pos[i] if i in pos else next(rest_it))
    return tuple(out)


def _coefficients(
    psi: StateVector, basis: MeasurementBasis, vec: Mapping[Label, Amplitude]
) -> dict[str, Amplitude]:
    """Expansion coefficients of a local vector along each outcome; raises on leakage."""
    exact = psi.exact
    coeffs: dict[str, Amplitude] = {}
    residual: dict[Label, Amplitude] = dict(vec)
    for tok, ovec in basis.outcomes:
        c: Amplitude = ZERO if exact else 0.0
        for loc, o in ovec.items():
            if loc in vec:
                c = c + vec[loc] * _cast(o, exact)
        if not _is_zero(c):
            coeffs[tok] = c
            for loc, o in ovec.items():
                residual[loc] = residual.get(loc, ZERO if exact else 0.0) - c * _cast(o, exact)
    leak = [loc for loc, a in residual.items() if not _is_zero(a)]
    if leak:
        raise SupportLeakage(
            f"amplitude on {leak[0]} of {basis.registers} lies outside the span of basis {basis.name}"
        )
    return coeffs


def born_distribution(psi: StateVector, basis: MeasurementBasis) -> dict[str, Amplitude]:
    """Probability of every outcome of ``basis`` (zero-probability outcomes included)."""
    basis.check()
    _, groups = _split(psi, basis.registers)
    probs: dict[str, Amplitude] = {tok: ZERO if psi.exact else 0.0 for tok in basis.tokens}
    for vec in groups.values():
        for tok, c in _coefficients(psi, basis, vec).items():
            probs[tok] = probs[tok] + c * c
    return probs


def project_unnormalized(psi: StateVector, basis: MeasurementBasis, outcome: str) -> StateVector:
    basis.check()
    ovec = basis.vector(outcome)
    idx, groups = _split(psi, basis.registers)
    acc: dict[Label, Amplitude] = defaultdict(lambda: ZERO if psi.exact else 0.0)
    for rest, vec in groups.items():
        c = _coefficients(psi, basis, vec).get(outcome)
        if c is None:
            continue
        for loc, o in ovec.items():
            acc[_join(psi, idx, rest, loc)] += c * _cast(o, psi.exact)
    return StateVector(psi.space, acc, psi.exact)


def project(psi: StateVector, basis: MeasurementBasis, outcome: str) -> tuple[Amplitude, StateVector]:
    """Born probability of ``outcome`` and the renormalized post-measurement state."""
    sub = project_unnormalized(psi, basis, outcome)
    prob = sub.norm_squared()
    if _is_zero(prob):
        raise ZeroProbabilityOutcome(f"outcome {outcome!r} of {basis.name} has probability 0")
    if psi.exact:
        if not prob.is_rational():
            factor = prob.inverse()
            # sqrt of an irrational probability is outside the ring
            raise ValueError(f"cannot renormalize by sqrt({factor})")
        return prob, sub.scale(from_sqrt(1 / prob.c1))
    return prob, sub.scale(prob ** -0.5)


def _normalize_token_map(tokens: Mapping, ready: str) -> dict[tuple[str, str], str]:
    table: dict[tuple[str, str], str] = {}
    for key, new in tokens.items():
        if isinstance(key, tuple):
            table[key] = new
        else:
            table[(ready, key)] = new
    return table


def record_measurement(
    psi: StateVector,
    basis: MeasurementBasis,
    dest: str,
    tokens: Mapping[str, str] | Mapping[tuple[str, str], str],
    ready: str = "ready",
) -> StateVector:
    """Unitarily copy the outcome of ``basis`` into register ``dest``.

    ``tokens`` maps an outcome to the token written over ``ready``, or a
    ``(current token, outcome)`` pair to the token replacing the current one.
    Nothing collapses: each outcome component is tagged in ``dest``.
    """
    basis.check()
    if dest in basis.registers:
        raise ValueError(f"cannot record into measured register {dest}")
    table = _normalize_token_map(tokens, ready)
    per_outcome: dict[str, dict[str, str]] = defaultdict(dict)
    for (prev, out), new in table.items():
        per_outcome[out][prev] = new
    for out, mapping in per_outcome.items():
        if len(set(mapping.values())) != len(mapping):
            raise IsometryViolation(f"recording of outcome {out!r} into {dest} is not injective")
    per_prev: dict[str, list[str]] = defaultdict(list)
    for (prev, out), new in table.items():
        per_prev[prev].append(new)
    for prev, written in per_prev.items():
        if len(set(written)) != len(written):
            raise IsometryViolation(f"two outcomes recorded over {prev!r} in {dest} are indistinguishable")
    dest_alpha = psi.space.alphabet(dest)
    for new in table.values():
        if new not in dest_alpha:
            raise UnknownToken(f"{new!r} is not in the alphabet of {dest}")
    d = psi.space.index(dest)
    idx, groups = _split(psi, basis.registers)
    acc: dict[Label, Amplitude] = defaultdict(lambda: ZERO if psi.exact else 0.0)
    for rest, vec in groups.items():
        sample = _join(psi, idx, rest, next(iter(vec)))
        prev = sample[d]
        for out, c in _coefficients(psi, basis, vec).items():
            new_tok = per_outcome.get(out, {}).get(prev)
            if new_tok is None:
                raise DestNotReady(f"{dest} holds {prev!r}; cannot record outcome {out!r}")
            for loc, o in basis.vector(out).items():
                key = list(_join(psi, idx, rest, loc))
                key[d] = new_tok
                acc[tuple(key)] += c * _cast(o, psi.exact)
    return StateVector(psi.space, acc, psi.exact)


def rewrite_in_basis(psi: StateVector, basis: MeasurementBasis, composite: str | None = None) -> StateVector:
    """Present ``psi`` with ``basis.registers`` merged into one register keyed by outcome."""
    basis.check()
    name = composite or basis.name
    space = psi.space.replace(basis.registers, name, basis.tokens)
    idx, groups = _split(psi, basis.registers)
    first = min(idx)
    # position of the composite among the remaining registers
    insert_at = sum(1 for i in range(first) if i not in idx)
    acc: dict[Label, Amplitude] = defaultdict(lambda: ZERO if psi.exact else 0.0)
    for rest, vec in groups.items():
        for tok, c in _coefficients(psi, basis, vec).items():
            key = rest[:insert_at] + (tok,) + rest[insert_at:]
            acc[key] += c
    return StateVector(space, acc, psi.exact)


def undo_rewrite(
    presented: StateVector, basis: MeasurementBasis, original: RegisterSpace, composite: str | None = None
) -> StateVector:
    """Inverse of :func:`rewrite_in_basis`."""
    name = composite or basis.name
    c_idx = presented.space.index(name)
    idx = [original.index(r) for r in basis.registers]
    acc: dict[Label, Amplitude] = defaultdict(lambda: ZERO if presented.exact else 0.0)
    for key, amp in presented.items():
        rest = key[:c_idx] + key[c_idx + 1:]
        for loc, o in basis.vector(key[c_idx]).items():
            out = [None] * len(original.registers)
            rest_it = iter(rest)
            pos = dict(zip(idx, loc))
            for i in range(len(out)):
                out[i] = pos[i] if i in pos else next(rest_it)
            acc[tuple(out)] += amp * _cast(o, presented.exact)
    return StateVector(original, acc, presented.exact)


def state_to_json(psi: StateVector) -> list[dict]:
    rows = []
    for key, amp in psi.items():
        labels = dict(zip(psi.space.names, key))
        rows.append({
            "labels": dict(sorted(labels.items())),
            "amplitude_exact": amp.to_string() if isinstance(amp, ExactReal) else None,
            "amplitude_float": float(amp),
        })
    rows.sort(key=lambda r: tuple(r["labels"].items()))
    return rows

