"""Symbolic automata over Boolean guards, plus concretization.

A symbolic automaton maps each state to accepting entries (guards) and
transition entries (guard, target, action) under a per-state
disjointedness condition: any two stored guards of one state have an
unsatisfiable conjunction. Blocked entries (unsatisfiable guards) are
never stored. The rejection guard of a state is the conjunction of the
negations of all its entry guards and is derived, not stored.

Automata are lazy caches keyed by state: entries are produced on demand
by a step function; no global state set is ever materialized.
"""

from __future__ import annotations

from typing import Callable, Optional

from . import bexp
from .bexp import (
    BExp,
    IndicatorState,
    Registry,
    big_and,
    bnot,
    eval_atom,
    format_bexp,
)
from .solvers import InternalError, SolverHandle

ACC = "acc"
RET = "ret"
BRK = "brk"
CONT = "cont"
JMP = "jmp"

ACCEPT = "accept"
REJECT = "reject"


class Continuation:
    """Outcome of a control-flow step: acc/ret/brk/cont/jmp."""

    __slots__ = ("kind", "pi", "label")

    def __init__(self, kind: str, pi: Optional[IndicatorState] = None,
                 label: Optional[int] = None):
        self.kind = kind
        self.pi = pi
        self.label = label

    def __eq__(self, other):
        return (isinstance(other, Continuation)
                and self.kind == other.kind
                and self.pi == other.pi
                and self.label == other.label)

    def __hash__(self):
        return hash((self.kind, self.pi, self.label))

    def __repr__(self):
        if self.kind == RET:
            return "ret"
        if self.kind == JMP:
            return f"jmp(l{self.label},{self.pi})"
        return f"{self.kind}{self.pi}"


RET_C = Continuation(RET)


def acc(pi: IndicatorState) -> Continuation:
    return Continuation(ACC, pi=pi)


def brk(pi: IndicatorState) -> Continuation:
    return Continuation(BRK, pi=pi)


def cont(pi: IndicatorState) -> Continuation:
    return Continuation(CONT, pi=pi)


def jmp(label_id: int, pi: IndicatorState) -> Continuation:
    return Continuation(JMP, pi=pi, label=label_id)


class SymbolicAutomaton:
    """Lazy symbolic automaton. Entries are computed once per state.

    ``step`` maps a state to (eps-guards, delta-entries) with blocked
    entries already pruned. When a verifying handle is attached, every
    materialized state is checked for disjointedness and total coverage.
    """

    def __init__(self, start, step: Callable, registry: Registry,
                 label_fn: Optional[Callable] = None,
                 verify_handle: Optional[SolverHandle] = None):
        self.start = start
        self.registry = registry
        self._step = step
        self._label_fn = label_fn or repr
        self._entries: dict = {}
        self._rho: dict = {}
        self._ids: dict = {}
        self.verify_handle = verify_handle

    # -- materialization -----------------------------------------------------

    def entries(self, s):
        got = self._entries.get(s)
        if got is None:
            got = self._step(s)
            self._entries[s] = got
            self._ids[s] = len(self._ids)
            if self.verify_handle is not None:
                verify_state(self, s, self.verify_handle)
        return got

    def eps(self, s) -> tuple:
        return self.entries(s)[0]

    def delta(self, s) -> tuple:
        return self.entries(s)[1]

    def rho(self, s) -> BExp:
        got = self._rho.get(s)
        if got is None:
            eps, delta = self.entries(s)
            got = big_and([bnot(g) for g in eps] + [bnot(g) for g, _, _ in delta])
            self._rho[s] = got
        return got

    @property
    def materialized(self) -> int:
        return len(self._entries)

    def state_id(self, s) -> int:
        self.entries(s)
        return self._ids[s]

    def state_label(self, s) -> str:
        return self._label_fn(s)

    # -- debug dump -----------------------------------------------------------

    def dump(self) -> str:
        """One line per materialized state, in materialization order."""
        by_id = sorted(self._entries, key=self._ids.get)
        lines = []
        for s in by_id:
            eps, delta = self._entries[s]
            eps_part = ",".join(format_bexp(g, self.registry) for g in eps)
            delta_part = " ".join(
                f"({format_bexp(g, self.registry)}, "
                f"{self.registry.action_name(p)}, {self.state_id(t)})"
                for g, t, p in delta)
            lines.append(f"state {self._ids[s]} | eps: {eps_part} | delta: {delta_part}")
        return "\n".join(lines)


def table_automaton(start, table: dict, registry: Registry,
                    verify_handle: Optional[SolverHandle] = None) -> SymbolicAutomaton:
    """Automaton over an explicit {state: (eps, delta)} table (fixtures)."""

    def step(s):
        if s not in table:
            raise InternalError(f"unknown state {s!r}")
        return table[s]

    return SymbolicAutomaton(start, step, registry, label_fn=str,
                             verify_handle=verify_handle)


def rho_of(eps: tuple, delta: tuple) -> BExp:
    """Rejection guard from explicit entry lists."""
    return big_and([bnot(g) for g in eps] + [bnot(g) for g, _, _ in delta])


def verify_state(aut: SymbolicAutomaton, s, handle: SolverHandle):
    """Assert per-state invariants: guard satisfiability, pairwise
    disjointedness, and total atom coverage (rho or some guard holds)."""
    eps, delta = aut.entries(s)
    guards = list(eps) + [g for g, _, _ in delta]
    for g in guards:
        if handle.is_zero(g):
            raise InternalError(
                f"blocked entry stored on state {aut.state_label(s)}")
    for i in range(len(guards)):
        for j in range(i + 1, len(guards)):
            if handle.overlaps(guards[i], guards[j]):
                raise InternalError(
                    f"disjointedness violated on state {aut.state_label(s)}: "
                    f"{format_bexp(guards[i])} overlaps {format_bexp(guards[j])}")
    covering = aut.rho(s)
    for g in guards:
        covering = bexp.bor(covering, g)
    if not handle.equiv(covering, bexp.ONE):
        raise InternalError(
            f"total coverage violated on state {aut.state_label(s)}")


def concretize(aut: SymbolicAutomaton, s, atom: int):
    """Outcome of one state under one atom: ACCEPT, REJECT or (target, action).

    Well-defined by disjointedness; two matches raise.
    """
    eps, delta = aut.entries(s)
    hit = None
    for g in eps:
        if eval_atom(g, atom):
            if hit is not None:
                raise InternalError("disjointedness violation: two matching entries")
            hit = ACCEPT
    for g, target, action in delta:
        if eval_atom(g, atom):
            if hit is not None:
                raise InternalError("disjointedness violation: two matching entries")
            hit = (target, action)
    return REJECT if hit is None else hit


class ConcreteAutomaton:
    """Finite atom-indexed automaton: total transition table per state.

    ``zeta[s][atom]`` is ACCEPT, REJECT or (target-index, action-id).
    """

    def __init__(self, registry: Registry, start: int, zeta: list,
                 labels: Optional[list] = None):
        self.registry = registry
        self.start = start
        self.zeta = zeta
        self.labels = labels or [str(i) for i in range(len(zeta))]
        self.atoms = bexp.enumerate_atoms(registry)

    @property
    def n_states(self) -> int:
        return len(self.zeta)

    def result(self, s: int, atom: int):
        return self.zeta[s][atom]

    def accepting(self, s: int) -> bool:
        return any(r == ACCEPT for r in self.zeta[s])


def concretize_full(aut: SymbolicAutomaton, registry: Registry) -> ConcreteAutomaton:
    """Unfold the reachable part of a symbolic automaton into a concrete one.

    Guarded by the atom-table limit; this is the oracle-scale path.
    """
    atoms = bexp.enumerate_atoms(registry)
    index: dict = {aut.start: 0}
    order = [aut.start]
    zeta: list = []
    i = 0
    while i < len(order):
        s = order[i]
        row = []
        for atom in atoms:
            res = concretize(aut, s, atom)
            if res in (ACCEPT, REJECT):
                row.append(res)
            else:
                target, action = res
                if target not in index:
                    index[target] = len(order)
                    order.append(target)
                row.append((index[target], action))
        zeta.append(row)
        i += 1
    labels = [aut.state_label(s) for s in order]
    return ConcreteAutomaton(registry, 0, zeta, labels)
