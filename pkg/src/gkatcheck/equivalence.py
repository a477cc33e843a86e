"""The two on-the-fly decision procedures and their shared session state.

A session owns a union-find over the disjoint union of both automata's
states, a monotone known-dead cache, one solver handle shared by both
sides, and instrumentation counters. A session answers exactly one
top-level query; correctness of the procedures requires starting fresh.

Both procedures run the same shape: take a state pair, shortcut via the
union-find representative, union, shortcut via the dead cache, then check
the bisimulation conditions in line order, recursing on matching
transition pairs through an explicit work stack (deterministic insertion
order, no call-stack depth limits). Dead-state detection is lazy: it runs
only when a condition needs it, and caches the whole explored set on the
dead outcome only.

Trace mode decides finite-trace equivalence. Bisimilarity mode replaces
the dead-state oracle with the constant false function, which refines the
semantics to infinite-trace equivalence.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .automata import ACCEPT, REJECT, ConcreteAutomaton, SymbolicAutomaton
from .bexp import BExp, Registry, band, big_or, bnot, format_atom
from .solvers import SolverHandle

TRACE = "trace"
BISIM = "bisim"

EPS_MISMATCH = "eps-mismatch"
REJECT_LEFT = "reject-mismatch-left"
REJECT_RIGHT = "reject-mismatch-right"
ACTION_MISMATCH = "action-mismatch"
DEAD_MISMATCH = "dead-mismatch"


class CheckTimeout(Exception):
    pass


class SessionReused(RuntimeError):
    pass


class UnionFind:
    def __init__(self):
        self.parent: dict = {}
        self.rank: dict = {}

    def find(self, x):
        p = self.parent.get(x)
        if p is None:
            self.parent[x] = x
            self.rank[x] = 0
            return x
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1


@dataclass
class Witness:
    """A replayable discrepancy: a guard-labelled path plus the condition
    that failed at its end.

    ``steps`` and ``tail_atom`` spell a guarded word; in trace mode the
    word lies in exactly one side's language. In bisimilarity mode the
    distinguishing continuation may not exist (``tail_atom`` is None) and
    the path itself is the evidence.
    """

    steps: list
    tail_atom: Optional[int]
    condition: str

    def first_atom(self) -> Optional[int]:
        if self.steps:
            return self.steps[0][0]
        return self.tail_atom

    def render(self, registry: Registry) -> str:
        parts = [
            f"{format_atom(atom, registry)}|{registry.action_name(p)}"
            for atom, p in self.steps
        ]
        if self.tail_atom is not None:
            parts.append(format_atom(self.tail_atom, registry))
        return " ".join(parts)


@dataclass
class _Failure:
    path: list           # [(edge formula or atom, action-id)] root -> failure
    condition: str
    final_formula: Optional[BExp]
    final_atom: Optional[int]
    final_action: Optional[int]
    live_ref: Optional[tuple]   # (side, state) whose trace completes the word


@dataclass
class Verdict:
    equivalent: bool
    condition: Optional[str] = None
    states: int = 0
    solver_queries: int = 0
    dead_checks: int = 0
    failure: Optional[_Failure] = field(default=None, repr=False)

    def stats_line(self) -> str:
        return (f"states={self.states} solver_queries={self.solver_queries} "
                f"dead_checks={self.dead_checks}")


class CheckSession:
    """Mutable context of one equivalence query."""

    def __init__(self, left, right, handle: SolverHandle, mode: str = TRACE,
                 deadline_s: Optional[float] = None):
        if mode not in (TRACE, BISIM):
            raise ValueError(f"unknown mode {mode!r}")
        self.left = left
        self.right = right
        self.handle = handle
        self.mode = mode
        self.uf = UnionFind()
        self.dead: set = set()
        self.states_visited = 0
        self.dead_checks = 0
        self.dead_visited = 0  # states explored by dead-state DFS runs
        self._used = False
        self._deadline = time.monotonic() + deadline_s if deadline_s else None

    def automaton(self, side: int):
        return self.left if side == 0 else self.right

    def claim(self):
        if self._used:
            raise SessionReused("a session answers exactly one top-level query")
        self._used = True

    def tick(self):
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise CheckTimeout()

    def known_dead(self, side: int, s) -> bool:
        if self.mode == BISIM:
            return False
        return (side, s) in self.dead

    # -- symbolic dead-state detection ---------------------------------------

    def is_dead(self, side: int, s) -> bool:
        """DFS over stored transitions; accepting means a satisfiable
        accepting guard (all stored guards are satisfiable, so non-empty).
        Caches the whole reachable set on the dead outcome."""
        if self.mode == BISIM:
            return False
        self.dead_checks += 1
        if (side, s) in self.dead:
            return True
        aut = self.automaton(side)
        seen = {s}
        stack = [s]
        while stack:
            self.tick()
            t = stack.pop()
            if aut.eps(t):
                self.dead_visited += len(seen)
                return False
            for _, t2, _ in aut.delta(t):
                if t2 in seen or (side, t2) in self.dead:
                    continue
                seen.add(t2)
                stack.append(t2)
        self.dead_visited += len(seen)
        self.dead.update((side, t) for t in seen)
        return True

    def is_dead_concrete(self, side: int, s) -> bool:
        if self.mode == BISIM:
            return False
        self.dead_checks += 1
        if (side, s) in self.dead:
            return True
        aut: ConcreteAutomaton = self.automaton(side)
        seen = {s}
        stack = [s]
        while stack:
            self.tick()
            t = stack.pop()
            row = aut.zeta[t]
            if any(r == ACCEPT for r in row):
                return False
            for r in row:
                if r in (ACCEPT, REJECT):
                    continue
                t2 = r[0]
                if t2 in seen or (side, t2) in self.dead:
                    continue
                seen.add(t2)
                stack.append(t2)
        self.dead.update((side, t) for t in seen)
        return True

    def verdict(self, equivalent: bool, failure: Optional[_Failure] = None) -> Verdict:
        return Verdict(
            equivalent=equivalent,
            condition=None if failure is None else failure.condition,
            states=self.states_visited,
            solver_queries=self.handle.queries,
            dead_checks=self.dead_checks,
            failure=failure,
        )


@dataclass
class _Frame:
    l: object
    r: object
    parent: Optional["_Frame"]
    edge: Optional[tuple]  # (formula-or-atom, action-id)


def _path_of(frame: _Frame) -> list:
    path = []
    f = frame
    while f.parent is not None:
        path.append(f.edge)
        f = f.parent
    path.reverse()
    return path


def equiv_symbolic(session: CheckSession) -> Verdict:
    """Decide equivalence of the two symbolic automata's start states.

    Conditions are evaluated in line order: representative shortcut,
    union, known-dead shortcuts, accepting-guard equality first, then the
    rejection overlaps, the action-mismatch overlaps, and finally the
    recursion on overlapping same-action transition pairs.
    """
    session.claim()
    h = session.handle
    aut_l: SymbolicAutomaton = session.left
    aut_r: SymbolicAutomaton = session.right

    def fail(frame, condition, formula=None, action=None, live_ref=None):
        return session.verdict(False, _Failure(
            path=_path_of(frame), condition=condition, final_formula=formula,
            final_atom=None, final_action=action, live_ref=live_ref))

    stack = [_Frame(aut_l.start, aut_r.start, None, None)]
    while stack:
        session.tick()
        f = stack.pop()
        kl, kr = (0, f.l), (1, f.r)
        if session.uf.find(kl) == session.uf.find(kr):
            continue
        session.uf.union(kl, kr)
        session.states_visited += 1

        if session.known_dead(0, f.l):
            if session.is_dead(1, f.r):
                continue
            return fail(f, DEAD_MISMATCH, live_ref=(1, f.r))
        if session.known_dead(1, f.r):
            if session.is_dead(0, f.l):
                continue
            return fail(f, DEAD_MISMATCH, live_ref=(0, f.l))

        eps_l = big_or(aut_l.eps(f.l))
        eps_r = big_or(aut_r.eps(f.r))
        if not h.equiv(eps_l, eps_r):
            mismatch = big_or([band(eps_l, bnot(eps_r)), band(bnot(eps_l), eps_r)])
            return fail(f, EPS_MISMATCH, formula=mismatch)

        delta_l = aut_l.delta(f.l)
        delta_r = aut_r.delta(f.r)

        rho_r = aut_r.rho(f.r)
        if not h.is_zero(rho_r):
            for b, l2, p in delta_l:
                if h.overlaps(b, rho_r) and not session.is_dead(0, l2):
                    return fail(f, REJECT_LEFT, formula=band(b, rho_r),
                                action=p, live_ref=(0, l2))
        rho_l = aut_l.rho(f.l)
        if not h.is_zero(rho_l):
            for a, r2, q in delta_r:
                if h.overlaps(a, rho_l) and not session.is_dead(1, r2):
                    return fail(f, REJECT_RIGHT, formula=band(a, rho_l),
                                action=q, live_ref=(1, r2))

        # one overlap query per transition pair: mismatching actions fail
        # here, matching ones recurse after this pair's checks are done.
        children = []
        for b, l2, p in delta_l:
            for a, r2, q in delta_r:
                if not h.overlaps(b, a):
                    continue
                if p != q:
                    if not session.is_dead(0, l2):
                        return fail(f, ACTION_MISMATCH, formula=band(b, a),
                                    action=p, live_ref=(0, l2))
                    if not session.is_dead(1, r2):
                        return fail(f, ACTION_MISMATCH, formula=band(b, a),
                                    action=q, live_ref=(1, r2))
                else:
                    children.append(_Frame(l2, r2, f, (band(b, a), p)))
        stack.extend(reversed(children))

    return session.verdict(True)


def equiv_concrete(session: CheckSession) -> Verdict:
    """The atom-indexed procedure over finite concrete automata."""
    session.claim()
    aut_l: ConcreteAutomaton = session.left
    aut_r: ConcreteAutomaton = session.right
    atoms = aut_l.atoms

    def fail(frame, condition, atom=None, action=None, live_ref=None):
        return session.verdict(False, _Failure(
            path=_path_of(frame), condition=condition, final_formula=None,
            final_atom=atom, final_action=action, live_ref=live_ref))

    stack = [_Frame(aut_l.start, aut_r.start, None, None)]
    while stack:
        session.tick()
        f = stack.pop()
        kl, kr = (0, f.l), (1, f.r)
        if session.uf.find(kl) == session.uf.find(kr):
            continue
        session.uf.union(kl, kr)
        session.states_visited += 1

        if session.known_dead(0, f.l):
            if session.is_dead_concrete(1, f.r):
                continue
            return fail(f, DEAD_MISMATCH, live_ref=(1, f.r))
        if session.known_dead(1, f.r):
            if session.is_dead_concrete(0, f.l):
                continue
            return fail(f, DEAD_MISMATCH, live_ref=(0, f.l))

        children = []
        for atom in atoms:
            res_l = aut_l.result(f.l, atom)
            res_r = aut_r.result(f.r, atom)
            l_ret = res_l == ACCEPT
            r_ret = res_r == ACCEPT
            if l_ret != r_ret:
                return fail(f, EPS_MISMATCH, atom=atom)
            if l_ret:
                continue
            l_steps = res_l != REJECT
            r_steps = res_r != REJECT
            if l_steps and not r_steps:
                l2, p = res_l
                if not session.is_dead_concrete(0, l2):
                    return fail(f, REJECT_LEFT, atom=atom, action=p,
                                live_ref=(0, l2))
                continue
            if r_steps and not l_steps:
                r2, q = res_r
                if not session.is_dead_concrete(1, r2):
                    return fail(f, REJECT_RIGHT, atom=atom, action=q,
                                live_ref=(1, r2))
                continue
            if not l_steps:
                continue
            (l2, p), (r2, q) = res_l, res_r
            if p != q:
                if not session.is_dead_concrete(0, l2):
                    return fail(f, ACTION_MISMATCH, atom=atom, action=p,
                                live_ref=(0, l2))
                if not session.is_dead_concrete(1, r2):
                    return fail(f, ACTION_MISMATCH, atom=atom, action=q,
                                live_ref=(1, r2))
                continue
            children.append(_Frame(l2, r2, f, (atom, p)))
        stack.extend(reversed(children))

    return session.verdict(True)


# ---------------------------------------------------------------------------
# Witness extraction (on demand; kept out of the check so instrumentation
# reflects the decision procedure alone).
# ---------------------------------------------------------------------------


def _accepting_trace_symbolic(aut: SymbolicAutomaton, s, handle: SolverHandle):
    """Shortest accepting run from s: ([(atom, action)], accepting atom)."""
    prev = {s: None}
    queue = deque([s])
    while queue:
        t = queue.popleft()
        eps = aut.eps(t)
        if eps:
            tail = handle.least_model(big_or(eps))
            steps = []
            cur = t
            while prev[cur] is not None:
                parent, g, p = prev[cur]
                steps.append((handle.least_model(g), p))
                cur = parent
            steps.reverse()
            return steps, tail
        for g, t2, p in aut.delta(t):
            if t2 not in prev:
                prev[t2] = (t, g, p)
                queue.append(t2)
    return None


def _accepting_trace_concrete(aut: ConcreteAutomaton, s, handle=None):
    prev = {s: None}
    queue = deque([s])
    while queue:
        t = queue.popleft()
        row = aut.zeta[t]
        for atom, r in enumerate(row):
            if r == ACCEPT:
                steps = []
                cur = t
                while prev[cur] is not None:
                    parent, atom2, p = prev[cur]
                    steps.append((atom2, p))
                    cur = parent
                steps.reverse()
                return steps, atom
        for atom, r in enumerate(row):
            if r in (ACCEPT, REJECT):
                continue
            t2, p = r
            if t2 not in prev:
                prev[t2] = (t, atom, p)
                queue.append(t2)
    return None


def extract_witness(session: CheckSession, verdict: Verdict) -> Optional[Witness]:
    """Materialize the recorded failure into a replayable witness.

    Each path edge gets its lexicographically least satisfying atom; the
    final condition contributes the mismatching atom, and when one side
    stays live its shortest accepting trace completes a distinguishing
    word (always possible in trace mode).
    """
    if verdict.equivalent or verdict.failure is None:
        return None
    fl = verdict.failure
    h = session.handle
    symbolic = isinstance(session.left, SymbolicAutomaton)

    steps = []
    for edge, action in fl.path:
        atom = h.least_model(edge) if isinstance(edge, BExp) else edge
        steps.append((atom, action))

    final_atom = fl.final_atom
    if final_atom is None and fl.final_formula is not None:
        final_atom = h.least_model(fl.final_formula)

    tail_atom = None
    if fl.condition == EPS_MISMATCH:
        tail_atom = final_atom
    else:
        if fl.condition != DEAD_MISMATCH and final_atom is not None:
            steps.append((final_atom, fl.final_action))
        if fl.live_ref is not None and session.mode == TRACE:
            side, state = fl.live_ref
            aut = session.automaton(side)
            trace = (_accepting_trace_symbolic(aut, state, h) if symbolic
                     else _accepting_trace_concrete(aut, state))
            if trace is not None:
                more, tail_atom = trace
                steps.extend(more)
    return Witness(steps=steps, tail_atom=tail_atom, condition=fl.condition)


def word_accepted(aut: ConcreteAutomaton, steps: list, tail_atom: Optional[int]) -> bool:
    """Replay a guarded word on a concrete automaton."""
    s = aut.start
    for atom, action in steps:
        r = aut.result(s, atom)
        if r in (ACCEPT, REJECT) or r[1] != action:
            return False
        s = r[0]
    if tail_atom is None:
        return False
    return aut.result(s, tail_atom) == ACCEPT


def render_report(verdict: Verdict, registry: Registry,
                  witness: Optional[Witness] = None,
                  want_stats: bool = False) -> str:
    lines = ["EQUIVALENT" if verdict.equivalent else "INEQUIVALENT"]
    if witness is not None:
        lines.append(f"witness: {witness.render(registry)}")
        lines.append(f"condition: {witness.condition}")
    if want_stats:
        lines.append(verdict.stats_line())
    return "\n".join(lines)
