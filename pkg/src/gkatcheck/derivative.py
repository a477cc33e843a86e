"""On-the-fly symbolic derivatives.

Three layers:

* ``gkat_step`` derives one state of the guarded fragment directly
  (states are expressions).
* ``cf_step`` derives one state of a control-flow automaton (states are
  indicator-state/expression pairs, entries may carry continuations).
  While-loops are computed by accumulation, since one derivative of a
  loop may need several passes through the body under changing
  indicator states.
* ``resolve_jumps`` removes jump continuations by accumulating through
  label extraction, leaving a symbolic automaton whose accepting
  entries are plain guards.

Every generated entry is pruned eagerly when its guard is
unsatisfiable, and successor expressions are canonicalized with the
smart constructors only (left skips vanish, nothing else).
"""

from __future__ import annotations

from typing import Callable

from . import syntax
from .bexp import BExp, IndicatorState, ONE, InputError, Registry, band, bnot, resolve
from .automata import (
    ACC,
    BRK,
    CONT,
    JMP,
    RET,
    RET_C,
    Continuation,
    SymbolicAutomaton,
    acc,
    brk,
    cont,
    jmp,
)
from .solvers import InternalError, SolverHandle
from .syntax import Exp, SKIP, WellFormedProgram, smart_seq, smart_unfold


def accumulate(res: Callable, con: Callable, n0, handle: SolverHandle) -> list:
    """Close a one-step relation under guarded continuation edges.

    ``res(n)`` yields (guard, payload) results reachable in one step;
    ``con(n)`` yields (next-input, guard) edges whose results are
    re-guarded by conjoining the edge guard on the left. A visited set
    cuts cycles, so each input contributes its results at most once per
    derivation path and the recursion terminates on finite input spaces.
    """

    def go(n, visited):
        if n in visited:
            return []
        out = list(res(n))
        inner = visited | {n}
        for n2, g in con(n):
            if handle.is_zero(g):
                continue
            for g2, payload in go(n2, inner):
                g3 = band(g, g2)
                if not handle.is_zero(g3):
                    out.append((g3, payload))
        return out

    deduped: dict = {}
    for g, payload in go(n0, frozenset()):
        deduped.setdefault((g.uid, payload), (g, payload))
    return list(deduped.values())


# ---------------------------------------------------------------------------
# Guarded fragment (expression states, guard-only accepting entries).
# ---------------------------------------------------------------------------


class GkatBuilder:
    def __init__(self, handle: SolverHandle):
        self.handle = handle
        self._memo: dict = {}

    def entries(self, e: Exp):
        got = self._memo.get(e.uid)
        if got is None:
            got = self._step(e)
            self._memo[e.uid] = got
        return got

    def _step(self, e: Exp):
        h = self.handle
        eps: dict = {}
        delta: dict = {}

        def add_eps(g: BExp):
            if not h.is_zero(g):
                eps.setdefault(g.uid, g)

        def add_delta(g: BExp, target: Exp, p: int):
            if not h.is_zero(g):
                delta.setdefault((g.uid, target.uid, p), (g, target, p))

        if e.tag == syntax.TEST:
            add_eps(e.guard)
        elif e.tag == syntax.ACT:
            add_delta(ONE, SKIP, e.action)
        elif e.tag == syntax.SEQ:
            eps1, delta1 = self.entries(e.left)
            for g, target, p in delta1:
                add_delta(g, smart_seq(target, e.right), p)
            for b in eps1:
                eps2, delta2 = self.entries(e.right)
                for a in eps2:
                    add_eps(band(b, a))
                for a, target, p in delta2:
                    add_delta(band(b, a), target, p)
        elif e.tag == syntax.IF:
            then_eps, then_delta = self.entries(e.left)
            for a in then_eps:
                add_eps(band(e.guard, a))
            for a, target, p in then_delta:
                add_delta(band(e.guard, a), target, p)
            else_eps, else_delta = self.entries(e.right)
            ng = bnot(e.guard)
            for a in else_eps:
                add_eps(band(ng, a))
            for a, target, p in else_delta:
                add_delta(band(ng, a), target, p)
        elif e.tag == syntax.WHILE:
            add_eps(bnot(e.guard))
            body_eps, body_delta = self.entries(e.left)
            # a body iteration that accepts without an action diverges
            # silently: no entry.
            for a, target, p in body_delta:
                add_delta(band(e.guard, a), smart_seq(target, e), p)
        else:
            raise InputError(f"{e.tag} is outside the guarded fragment")
        return tuple(eps.values()), tuple(delta.values())


def gkat_step(e: Exp, handle: SolverHandle):
    """Accepting guards and transitions of one expression state."""
    return GkatBuilder(handle).entries(e)


def gkat_automaton(e: Exp, registry: Registry, handle: SolverHandle,
                   verify: bool = False) -> SymbolicAutomaton:
    if not syntax.is_gkat(e):
        raise InputError("expression is outside the guarded fragment")
    builder = GkatBuilder(handle)
    return SymbolicAutomaton(
        e, builder.entries, registry,
        label_fn=lambda s: syntax.render(s, registry),
        verify_handle=handle if verify else None)


# ---------------------------------------------------------------------------
# Control-flow automata (continuation entries, indicator states).
# ---------------------------------------------------------------------------


class CfBuilder:
    """Shared derivative cache for one program (both loop accumulation and
    jump resolution consult it)."""

    def __init__(self, program: WellFormedProgram, handle: SolverHandle):
        self.program = program
        self.handle = handle
        self._memo: dict = {}

    def entries(self, pi: IndicatorState, e: Exp):
        key = (pi, e.uid)
        got = self._memo.get(key)
        if got is None:
            got = self._step(pi, e)
            self._memo[key] = got
        return got

    def _collect(self):
        h = self.handle
        eps: dict = {}
        delta: dict = {}

        def add_eps(g: BExp, c: Continuation):
            if not h.is_zero(g):
                eps.setdefault((g.uid, c), (g, c))

        def add_delta(g: BExp, target, p: int):
            if not h.is_zero(g):
                delta.setdefault((g.uid, target, p), (g, target, p))

        return eps, delta, add_eps, add_delta

    def _step(self, pi: IndicatorState, e: Exp):
        h = self.handle
        eps, delta, add_eps, add_delta = self._collect()

        if e.tag == syntax.TEST:
            add_eps(resolve(e.guard, pi), acc(pi))
        elif e.tag == syntax.ACT:
            add_delta(ONE, (pi, SKIP), e.action)
        elif e.tag == syntax.ASSIGN:
            add_eps(ONE, acc(pi.reassign(e.var, e.val)))
        elif e.tag == syntax.BREAK:
            add_eps(ONE, brk(pi))
        elif e.tag == syntax.CONTINUE:
            add_eps(ONE, cont(pi))
        elif e.tag == syntax.RETURN:
            add_eps(ONE, RET_C)
        elif e.tag == syntax.GOTO:
            add_eps(ONE, jmp(e.label, pi))
        elif e.tag == syntax.LABEL:
            # falling through a label is a no-op
            add_eps(ONE, acc(pi))
        elif e.tag == syntax.SEQ:
            eps1, delta1 = self.entries(pi, e.left)
            for g, (pi2, e2), p in delta1:
                add_delta(g, (pi2, smart_seq(e2, e.right)), p)
            for g, c in eps1:
                if c.kind == ACC:
                    eps2, delta2 = self.entries(c.pi, e.right)
                    for a, c2 in eps2:
                        add_eps(band(g, a), c2)
                    for a, target, p in delta2:
                        add_delta(band(g, a), target, p)
                else:
                    add_eps(g, c)
        elif e.tag == syntax.UNFOLD:
            eps1, delta1 = self.entries(pi, e.left)
            for g, (pi2, e2), p in delta1:
                add_delta(g, (pi2, smart_unfold(e2, e.right)), p)
            for g, c in eps1:
                if c.kind == BRK:
                    add_eps(g, acc(c.pi))
                elif c.kind in (ACC, CONT):
                    eps2, delta2 = self.entries(c.pi, e.right)
                    for a, c2 in eps2:
                        add_eps(band(g, a), c2)
                    for a, target, p in delta2:
                        add_delta(band(g, a), target, p)
                else:  # ret / jmp pass through
                    add_eps(g, c)
        elif e.tag == syntax.IF:
            bp = resolve(e.guard, pi)
            for branch, guard in ((e.left, bp), (e.right, bnot(bp))):
                if h.is_zero(guard):
                    continue
                eps1, delta1 = self.entries(pi, branch)
                for g, c in eps1:
                    add_eps(band(guard, g), c)
                for g, target, p in delta1:
                    add_delta(band(guard, g), target, p)
        elif e.tag == syntax.WHILE:
            return self._loop_step(pi, e)
        else:
            raise InputError(f"unexpected term {e.tag}")
        return tuple(eps.values()), tuple(delta.values())

    def _loop_step(self, pi: IndicatorState, loop: Exp):
        """Loop entries by accumulation over indicator states.

        One-step results: the loop-exit acceptance, break exits turned
        into acceptance, return/jump pass-throughs, and body transitions
        re-entering through the unfolding. Continuation edges: body
        iterations that accept or continue re-enter the accumulation at
        their new indicator state, guarded by the iteration condition.
        """
        h = self.handle
        body, guard = loop.left, loop.guard

        def res(pi2: IndicatorState):
            bp = resolve(guard, pi2)
            out = []
            exit_g = bnot(bp)
            if not h.is_zero(exit_g):
                out.append((exit_g, ("e", acc(pi2))))
            if h.is_zero(bp):
                return out
            eps1, delta1 = self.entries(pi2, body)
            for a, c in eps1:
                g = band(bp, a)
                if h.is_zero(g):
                    continue
                if c.kind == BRK:
                    out.append((g, ("e", acc(c.pi))))
                elif c.kind in (RET, JMP):
                    out.append((g, ("e", c)))
            for a, (sig, e2), p in delta1:
                g = band(bp, a)
                if not h.is_zero(g):
                    out.append((g, ("d", ((sig, smart_unfold(e2, loop)), p))))
            return out

        def con(pi2: IndicatorState):
            bp = resolve(guard, pi2)
            if h.is_zero(bp):
                return []
            eps1, _ = self.entries(pi2, body)
            return [(c.pi, band(bp, a)) for a, c in eps1 if c.kind in (ACC, CONT)]

        eps, delta, add_eps, add_delta = self._collect()
        for g, (kind, payload) in accumulate(res, con, pi, h):
            if kind == "e":
                add_eps(g, payload)
            else:
                add_delta(g, payload[0], payload[1])
        return tuple(eps.values()), tuple(delta.values())

    def resolved(self, state):
        """Entries of one state with jump continuations resolved away.

        Jump outputs are replaced by the resolved dynamics of the label's
        location, by accumulation over (indicator state, expression)
        pairs; afterwards only plain returns remain, so accepting entries
        are stored guard-only.
        """
        h = self.handle

        def res(n):
            sig, f = n
            eps1, delta1 = self.entries(sig, f)
            out = [(g, ("e", c)) for g, c in eps1 if c.kind != JMP]
            out += [(g, ("d", (target, p))) for g, target, p in delta1]
            return out

        def con(n):
            sig, f = n
            eps1, _ = self.entries(sig, f)
            return [((c.pi, self.program.extract(c.label)), g)
                    for g, c in eps1 if c.kind == JMP]

        eps: dict = {}
        delta: dict = {}
        for g, (kind, payload) in accumulate(res, con, state, h):
            if kind == "e":
                c = payload
                if c.kind != RET:
                    raise InternalError(
                        f"non-return continuation {c!r} survived jump resolution")
                eps.setdefault(g.uid, g)
            else:
                delta.setdefault((g.uid, payload[0], payload[1]),
                                 (g, payload[0], payload[1]))
        return tuple(eps.values()), tuple(delta.values())


def cf_step(pi: IndicatorState, e: Exp, handle: SolverHandle,
            program: WellFormedProgram = None):
    """Raw control-flow entries of one (indicator state, expression) pair."""
    builder = CfBuilder(program, handle)
    return builder.entries(pi, e)


def loop_step(pi: IndicatorState, body: Exp, guard: BExp, handle: SolverHandle):
    """Entries of the loop with the given body and condition at pi."""
    builder = CfBuilder(None, handle)
    return builder._loop_step(pi, syntax.while_(guard, body))


def resolve_jumps(program: WellFormedProgram, state, handle: SolverHandle):
    """Resolved entries of one automaton state of a checked program."""
    return CfBuilder(program, handle).resolved(state)


def cf_automaton(program: WellFormedProgram, pi0: IndicatorState,
                 handle: SolverHandle, verify: bool = False) -> SymbolicAutomaton:
    """Lazy symbolic automaton of a program from a starting indicator state."""
    builder = CfBuilder(program, handle)

    def label_fn(state):
        pi, e = state
        return f"{pi.render(program.registry)} {syntax.render(e, program.registry)}"

    return SymbolicAutomaton(
        (pi0, program.exp), builder.resolved, program.registry,
        label_fn=label_fn, verify_handle=handle if verify else None)
