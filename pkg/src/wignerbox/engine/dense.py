"""Dense floating-point oracle.

Builds every step as a full unitary matrix on the registers it touches and
applies it to a numpy tensor over the whole product space.  It shares only
the schedule description and the memory alphabets with the sparse engine,
so agreement between the two is a meaningful cross-check.
"""

from __future__ import annotations

import numpy as np

from ..protocol.model import (
    AccessMemory,
    ConditionalPrepare,
    HaltCheck,
    Infer,
    Measure,
    PrepareRandom,
    Schedule,
)
from ..protocol.tokens import derive_tokens, measured_token


def _complete_unitary(columns: dict[int, np.ndarray], dim: int) -> np.ndarray:
    """Unitary whose column ``i`` is ``columns[i]``; other columns fill the orthogonal complement.

    Unlisted inputs that are orthogonal to every given column keep mapping to
    themselves, so steps act as the identity away from their listed rows.
    """
    u = np.zeros((dim, dim))
    for i, col in columns.items():
        u[:, i] = col
    given = np.array([columns[i] for i in columns]).T if columns else np.zeros((dim, 0))
    rest = [i for i in range(dim) if i not in columns]
    keep = [i for i in rest if given.shape[1] == 0 or np.allclose(given[i, :], 0.0)]
    for i in keep:
        u[i, i] = 1.0
    fill = [i for i in rest if i not in keep]
    if fill:
        used = np.concatenate([given, np.eye(dim)[:, keep]], axis=1)
        _, s, vh = np.linalg.svd(used.T)
        null = vh[int(np.sum(s > 1e-12)) :].T
        u[:, fill] = null[:, : len(fill)]
    if not np.allclose(u.T @ u, np.eye(dim), atol=1e-12):
        raise ValueError("step does not extend to a unitary")
    return u


def _permutation(mapping: dict[int, int], dim: int) -> np.ndarray:
    """Permutation matrix extending an injective partial map, identity where possible."""
    perm = dict(mapping)
    targets = [j for j in range(dim) if j not in set(perm.values())]
    pending = []
    for i in range(dim):
        if i in perm:
            continue
        if i in targets:
            perm[i] = i
            targets.remove(i)
        else:
            pending.append(i)
    perm.update(zip(pending, targets))
    p = np.zeros((dim, dim))
    for i, j in perm.items():
        p[j, i] = 1.0
    return p


class DenseSimulator:
    def __init__(self, schedule: Schedule) -> None:
        self.schedule = schedule
        self.tokens = derive_tokens(schedule)
        self.names = [r.name for r in schedule.registers]
        self.alphabets = {n: list(self.tokens.alphabets[n]) for n in self.names}
        self.shape = tuple(len(self.alphabets[n]) for n in self.names)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.shape))

    def _idx(self, reg: str, tok: str) -> int:
        return self.alphabets[reg].index(tok)

    def initial(self) -> np.ndarray:
        psi = np.zeros(self.shape)
        psi[tuple(self._idx(r.name, r.init) for r in self.schedule.registers)] = 1.0
        return psi

    def _ket(self, registers, ket) -> np.ndarray:
        v = np.zeros(tuple(len(self.alphabets[r]) for r in registers))
        for label, c in ket:
            v[tuple(self._idx(r, t) for r, t in zip(registers, label))] += float(c)
        return v.reshape(-1)

    def _apply(self, u: np.ndarray, registers, psi: np.ndarray) -> np.ndarray:
        axes = [self.names.index(r) for r in registers]
        dims = [self.shape[a] for a in axes]
        op = u.reshape(dims + dims)
        k = len(axes)
        out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
        return np.moveaxis(out, list(range(k)), axes)

    def step_unitary(self, index: int) -> tuple[np.ndarray, tuple[str, ...]] | None:
        step = self.schedule.steps[index]
        if isinstance(step, PrepareRandom):
            reg = step.register
            col = self._ket((reg,), self.schedule.state(step.state).ket)
            init = self._idx(reg, self.schedule.register(reg).init)
            return _complete_unitary({init: col}, self.shape[self.names.index(reg)]), (reg,)
        if isinstance(step, ConditionalPrepare):
            regs = (step.source, step.target)
            ns, nt = (len(self.alphabets[r]) for r in regs)
            init = self._idx(step.target, self.schedule.register(step.target).init)
            u = np.zeros((ns * nt, ns * nt))
            branches = dict(step.branches)
            for s, tok in enumerate(self.alphabets[step.source]):
                block = np.eye(nt)
                if tok in branches:
                    block = _complete_unitary({init: self._ket((step.target,), branches[tok])}, nt)
                u[s * nt : (s + 1) * nt, s * nt : (s + 1) * nt] = block
            return u, regs
        if isinstance(step, (Infer, AccessMemory)):
            table = step.table
            nd = len(self.alphabets[table.dest])
            if table.source == table.dest:
                mapping = {self._idx(table.dest, r.trigger): self._idx(table.dest, r.output) for r in table.rows}
                return _permutation(mapping, nd), (table.dest,)
            ns = len(self.alphabets[table.source])
            ready = self._idx(table.dest, table.ready)
            u = np.zeros((ns * nd, ns * nd))
            outs = table.mapping()
            for s, tok in enumerate(self.alphabets[table.source]):
                mapping = {ready: self._idx(table.dest, outs[tok])} if tok in outs else {}
                u[s * nd : (s + 1) * nd, s * nd : (s + 1) * nd] = _permutation(mapping, nd)
            return u, (table.source, table.dest)
        if isinstance(step, Measure):
            basis = self.schedule.basis(step.basis)
            regs = tuple(basis.registers)
            nb = int(np.prod([len(self.alphabets[r]) for r in regs]))
            nd = len(self.alphabets[step.dest])
            dest_alpha = self.alphabets[step.dest]
            u = np.zeros((nb * nd, nb * nd))
            span = np.zeros((nb, nb))
            for tok, vec in basis.outcomes:
                b = self._ket(regs, tuple(vec.items()))
                proj = np.outer(b, b)
                span += proj
                mapping = {}
                for prev in dest_alpha:
                    new = measured_token(prev, tok)
                    if new in dest_alpha:
                        mapping[self._idx(step.dest, prev)] = self._idx(step.dest, new)
                u += np.kron(proj, _permutation(mapping, nd))
            u += np.kron(np.eye(nb) - span, np.eye(nd))
            return u, regs + (step.dest,)
        return None

    def states(self):
        """Yield the state after every step, in schedule order."""
        psi = self.initial()
        for i in range(len(self.schedule.steps)):
            built = self.step_unitary(i)
            if built is not None:
                psi = self._apply(*built, psi)
            yield psi

    def evolve(self) -> np.ndarray:
        psi = self.initial()
        for psi in self.states():
            pass
        return psi

    def to_terms(self, psi: np.ndarray, atol: float = 1e-15) -> dict[tuple[str, ...], float]:
        """Nonzero amplitudes keyed by token labels in register order."""
        out = {}
        for idx in zip(*np.nonzero(np.abs(psi) > atol)):
            out[tuple(self.alphabets[n][i] for n, i in zip(self.names, idx))] = float(psi[idx])
        return out

    def joint_probability(self, psi: np.ndarray, outcomes: dict[str, str]) -> float:
        """Probability of finding each named basis in the given outcome, e.g. ``{"Lbar": "okbar"}``."""
        amp = psi
        axes_names = list(self.names)
        for bname, tok in outcomes.items():
            basis = self.schedule.basis(bname)
            regs = list(basis.registers)
            axes = [axes_names.index(r) for r in regs]
            b = self._ket(regs, tuple(dict(basis.outcomes)[tok].items()))
            b = b.reshape([self.shape[self.names.index(r)] for r in regs])
            amp = np.tensordot(b, amp, axes=(list(range(len(regs))), axes))
            axes_names = [n for n in axes_names if n not in regs]
        return float(np.sum(np.abs(amp) ** 2))

    def halt_probability(self, psi: np.ndarray) -> float:
        """Weight of memory tokens that recorded the halt values."""
        halt = next(s for s in self.schedule.steps if isinstance(s, HaltCheck))
        mask = np.ones(self.shape, dtype=bool)
        for reg, value in halt.conditions:
            ax = self.names.index(reg)
            hit = np.array([self.tokens.record(reg, t).observed() == value for t in self.alphabets[reg]])
            shape = [1] * len(self.shape)
            shape[ax] = len(hit)
            mask &= hit.reshape(shape)
        return float(np.sum(np.abs(psi[mask]) ** 2))
