"""Pluggable (UN)SAT backends behind a single {translate, check-sat} surface.

Two backends are registered: a CDCL SAT solver over Tseitin cones and a
reduced ordered BDD engine. Hash-consing makes term identities stable, so
each backend encodes every distinct term exactly once and reuses the
encoding across queries; satisfiability answers are memoized per term in
the handle.

The handle also owns the indicator-constraint table: every ``x == i``
occurring in a term is mapped to one fresh Boolean variable, stable
within the handle, disjoint from the registered tests. Lexicographically
least models (test-declaration order, False < True) are computed by a
backend-independent greedy descent over satisfiability queries.
"""

from __future__ import annotations

from typing import Optional

from . import bexp
from .bexp import (
    AND_TAG,
    IND_TAG,
    NOT_TAG,
    ONE,
    ONE_TAG,
    OR_TAG,
    TEST_TAG,
    ZERO,
    ZERO_TAG,
    BExp,
    InputError,
    Registry,
    band,
    bnot,
    bor,
)


class SolverError(RuntimeError):
    """Backend failure, tagged with the backend's identity."""

    def __init__(self, backend: str, message: str):
        super().__init__(f"[{backend}] {message}")
        self.backend = backend


class InternalError(RuntimeError):
    """A broken internal invariant (bug, not user input)."""


# ---------------------------------------------------------------------------
# CDCL backend.
# ---------------------------------------------------------------------------


class SatBackend:
    """CDCL over per-term clause cones.

    Every distinct term gets a Tseitin gate variable and defining clauses
    once; a term's cone (the clause indices of its transitive gates) is
    cached so a query assembles its clause set by concatenation. Each
    query then runs conflict-driven search with first-UIP learning and
    backjumping, local to the cone; learned clauses are discarded with
    the query. Decisions are only ever made on input variables: once all
    inputs in the cone are assigned, unit propagation forces every gate.
    """

    name = "sat"

    def __init__(self):
        self.clauses: list = []      # global clause store (tuples of lits)
        self.var_count = 0
        self.input_of: dict = {}     # test id -> var
        self._enc: dict = {}         # term uid -> (lit, input tids, cone clause ids)

    def _new_var(self) -> int:
        self.var_count += 1
        return self.var_count

    def _encode(self, b: BExp):
        got = self._enc.get(b.uid)
        if got is not None:
            return got
        if b.tag == TEST_TAG:
            v = self.input_of.get(b.test)
            if v is None:
                v = self._new_var()
                self.input_of[b.test] = v
            out = (v, (b.test,), ())
        elif b.tag == NOT_TAG:
            lit, tids, cone = self._encode(b.left)
            out = (-lit, tids, cone)
        elif b.tag in (AND_TAG, OR_TAG):
            la, ta, ca = self._encode(b.left)
            lc, tc, cc = self._encode(b.right)
            v = self._new_var()
            base = len(self.clauses)
            if b.tag == AND_TAG:
                self.clauses.append((-v, la))
                self.clauses.append((-v, lc))
                self.clauses.append((v, -la, -lc))
            else:
                self.clauses.append((v, -la))
                self.clauses.append((v, -lc))
                self.clauses.append((-v, la, lc))
            out = (v, ta + tc, ca + cc + (base, base + 1, base + 2))
        else:
            raise InputError("constant or indicator test reached the encoder")
        self._enc[b.uid] = out
        return out

    def is_sat(self, b: BExp) -> bool:
        if b is ZERO:
            return False
        if b is ONE:
            return True
        root, tids, cone = self._encode(b)
        ordered = [self.input_of[t] for t in sorted(set(tids))]
        # query-local structures
        clause_ids = dict.fromkeys(cone)
        clauses = [self.clauses[ci] for ci in clause_ids]
        occs: dict = {}
        for ci, cl in enumerate(clauses):
            for l in cl:
                occs.setdefault(l, []).append(ci)
        sat_count = [0] * len(clauses)
        unassigned = [len(cl) for cl in clauses]

        value: dict = {}
        reason: dict = {}
        level: dict = {}
        trail: list = []
        level_marks: list = []  # trail length at the start of each level

        def assign(var: int, val: bool, why: Optional[int]) -> Optional[int]:
            """Assign and propagate; returns a conflicting clause id or None."""
            queue = [(var, val, why)]
            conflict = None
            while queue:
                v, val_v, why_v = queue.pop()
                cur = value.get(v)
                if cur is not None:
                    if cur != val_v and conflict is None:
                        conflict = why_v
                    continue
                value[v] = val_v
                reason[v] = why_v
                level[v] = len(level_marks)
                trail.append(v)
                true_lit = v if val_v else -v
                for ci in occs.get(true_lit, ()):
                    sat_count[ci] += 1
                for ci in occs.get(-true_lit, ()):
                    unassigned[ci] -= 1
                    if sat_count[ci] == 0 and conflict is None:
                        n = unassigned[ci]
                        if n == 0:
                            conflict = ci
                        elif n == 1:
                            for l in clauses[ci]:
                                if abs(l) not in value:
                                    queue.append((abs(l), l > 0, ci))
                                    break
                if conflict is not None:
                    return conflict
            return None

        def undo_to(mark: int):
            while len(trail) > mark:
                v = trail.pop()
                true_lit = v if value[v] else -v
                for ci in occs.get(true_lit, ()):
                    sat_count[ci] -= 1
                for ci in occs.get(-true_lit, ()):
                    unassigned[ci] += 1
                del value[v], reason[v], level[v]

        def add_clause(lits: tuple) -> int:
            ci = len(clauses)
            clauses.append(lits)
            sat_count.append(0)
            unassigned.append(len(lits))
            n_sat = 0
            n_open = len(lits)
            for l in lits:
                occs.setdefault(l, []).append(ci)
                v = abs(l)
                if v in value:
                    n_open -= 1
                    if value[v] == (l > 0):
                        n_sat += 1
            sat_count[ci] = n_sat
            unassigned[ci] = n_open
            return ci

        def analyze(conflict_ci: int):
            """First-UIP learned clause and its backjump level."""
            cur_level = len(level_marks)
            seen: set = set()
            learned: list = []
            pending = 0
            lits = clauses[conflict_ci]
            idx = len(trail) - 1
            while True:
                for l in lits:
                    v = abs(l)
                    if v in seen:
                        continue
                    seen.add(v)
                    lv = level[v]
                    if lv >= cur_level:
                        pending += 1
                    elif lv > 0:
                        learned.append(-v if value[v] else v)
                while trail[idx] not in seen:
                    idx -= 1
                v = trail[idx]
                pending -= 1
                if pending == 0:
                    break
                if reason[v] is None:
                    raise InternalError("conflict analysis passed the decision")
                lits = clauses[reason[v]]
                idx -= 1
            learned.append(-v if value[v] else v)
            back = max((level[abs(l)] for l in learned[:-1]), default=0)
            return tuple(learned), back

        if assign(abs(root), root > 0, None) is not None:
            return False
        while True:
            v = None
            for cand in ordered:
                if cand not in value:
                    v = cand
                    break
            if v is None:
                return True  # all cone inputs assigned, gates forced
            level_marks.append(len(trail))
            conflict = assign(v, False, None)
            while conflict is not None:
                if not level_marks:
                    return False
                learned, back = analyze(conflict)
                undo_to(level_marks[back])
                del level_marks[back:]
                ci = add_clause(learned)
                asserted = learned[-1]
                conflict = assign(abs(asserted), asserted > 0, ci)


# ---------------------------------------------------------------------------
# BDD backend.
# ---------------------------------------------------------------------------


class BddBackend:
    """Reduced ordered BDDs with hash-consed nodes and an apply cache.

    Variable levels are assigned in order of first use, which keeps tests
    that occur together in nearby guards on adjacent levels; this is a
    static order, no reordering happens later.
    """

    name = "bdd"
    FALSE = 0
    TRUE = 1

    def __init__(self):
        # node i >= 2 is (level, lo, hi)
        self.nodes = [None, None]
        self.unique: dict = {}
        self.cache: dict = {}
        self.from_cache: dict = {}
        self.level_of: dict = {}

    def _var_level(self, tid: int) -> int:
        lvl = self.level_of.get(tid)
        if lvl is None:
            lvl = len(self.level_of)
            self.level_of[tid] = lvl
        return lvl

    def mk(self, level: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (level, lo, hi)
        n = self.unique.get(key)
        if n is None:
            n = len(self.nodes)
            self.nodes.append(key)
            self.unique[key] = n
        return n

    def _level(self, n: int) -> int:
        return self.nodes[n][0] if n > 1 else 1 << 60

    def apply_and(self, a: int, b: int) -> int:
        if a == self.FALSE or b == self.FALSE:
            return self.FALSE
        if a == self.TRUE:
            return b
        if b == self.TRUE:
            return a
        if a == b:
            return a
        key = ("&", a, b) if a <= b else ("&", b, a)
        out = self.cache.get(key)
        if out is None:
            la, lb = self._level(a), self._level(b)
            lvl = min(la, lb)
            a_lo, a_hi = (self.nodes[a][1], self.nodes[a][2]) if la == lvl else (a, a)
            b_lo, b_hi = (self.nodes[b][1], self.nodes[b][2]) if lb == lvl else (b, b)
            out = self.mk(lvl, self.apply_and(a_lo, b_lo), self.apply_and(a_hi, b_hi))
            self.cache[key] = out
        return out

    def apply_or(self, a: int, b: int) -> int:
        if a == self.TRUE or b == self.TRUE:
            return self.TRUE
        if a == self.FALSE:
            return b
        if b == self.FALSE:
            return a
        if a == b:
            return a
        key = ("|", a, b) if a <= b else ("|", b, a)
        out = self.cache.get(key)
        if out is None:
            la, lb = self._level(a), self._level(b)
            lvl = min(la, lb)
            a_lo, a_hi = (self.nodes[a][1], self.nodes[a][2]) if la == lvl else (a, a)
            b_lo, b_hi = (self.nodes[b][1], self.nodes[b][2]) if lb == lvl else (b, b)
            out = self.mk(lvl, self.apply_or(a_lo, b_lo), self.apply_or(a_hi, b_hi))
            self.cache[key] = out
        return out

    def apply_not(self, a: int) -> int:
        if a == self.FALSE:
            return self.TRUE
        if a == self.TRUE:
            return self.FALSE
        key = ("!", a)
        out = self.cache.get(key)
        if out is None:
            lvl, lo, hi = self.nodes[a]
            out = self.mk(lvl, self.apply_not(lo), self.apply_not(hi))
            self.cache[key] = out
        return out

    def build(self, b: BExp) -> int:
        cached = self.from_cache.get(b.uid)
        if cached is not None:
            return cached
        if b.tag == ZERO_TAG:
            out = self.FALSE
        elif b.tag == ONE_TAG:
            out = self.TRUE
        elif b.tag == TEST_TAG:
            out = self.mk(self._var_level(b.test), self.FALSE, self.TRUE)
        elif b.tag == NOT_TAG:
            out = self.apply_not(self.build(b.left))
        elif b.tag == AND_TAG:
            out = self.apply_and(self.build(b.left), self.build(b.right))
        elif b.tag == OR_TAG:
            out = self.apply_or(self.build(b.left), self.build(b.right))
        else:
            raise InputError("indicator test reached the solver unencoded")
        self.from_cache[b.uid] = out
        return out

    def is_sat(self, b: BExp) -> bool:
        return self.build(b) != self.FALSE


BACKENDS = {"sat": SatBackend, "bdd": BddBackend}


# ---------------------------------------------------------------------------
# Handle: query surface plus the indicator-constraint table.
# ---------------------------------------------------------------------------


class SolverHandle:
    """One backend context, confined to a single check session/thread."""

    def __init__(self, registry: Registry, backend: str = "sat"):
        if backend not in BACKENDS:
            raise InputError(f"unknown solver backend {backend!r}")
        self.registry = registry
        self.backend_name = backend
        self.backend = BACKENDS[backend]()
        self.queries = 0
        self._fresh_base = len(registry.tests)
        self._fresh: dict = {}  # (var-id, value) -> fresh test id
        self._sat_memo: dict = {}  # term uid -> bool (terms are immutable)

    # -- raw query ---------------------------------------------------------

    def check_sat(self, b: BExp) -> bool:
        if b is ZERO:
            return False
        if b is ONE:
            return True
        got = self._sat_memo.get(b.uid)
        if got is None:
            self.queries += 1
            try:
                got = self.backend.is_sat(b)
            except (InputError, RecursionError) as exc:
                raise SolverError(self.backend_name, str(exc)) from exc
            self._sat_memo[b.uid] = got
        return got

    # -- derived queries ----------------------------------------------------

    def is_zero(self, b: BExp) -> bool:
        return not self.check_sat(b)

    def equiv(self, b: BExp, a: BExp) -> bool:
        if b is a:
            return True
        return self.is_zero(bor(band(b, bnot(a)), band(bnot(b), a)))

    def overlaps(self, b: BExp, a: BExp) -> bool:
        return self.check_sat(band(b, a))

    def least_model(self, b: BExp) -> Optional[int]:
        """Least satisfying atom as a bit mask over the registered tests.

        Order is test-declaration order with False < True. Greedy descent:
        fix each occurring test to False when satisfiability allows it;
        tests not occurring in the term stay False.
        """
        if not self.check_sat(b):
            return None
        mask = 0
        fixed = b
        for tid in sorted(set(bexp.iter_tests(b))):
            t = bexp.test(tid)
            low = band(fixed, bnot(t))
            if self.check_sat(low):
                fixed = low
            else:
                fixed = band(fixed, t)
                if tid < self._fresh_base:
                    mask |= 1 << tid
        return mask

    # -- indicator-constraint encoding (x == i as fresh variables) ----------

    def encode_indicators(self, b: BExp):
        """Replace each indicator test by the handle's fresh variable.

        Returns (encoded pure term, constraint table). Re-encoding the
        same (x, i) always reuses the same variable.
        """
        table = {}

        def go(t: BExp) -> BExp:
            if t.tag == IND_TAG:
                key = (t.var, t.val)
                tid = self._fresh.get(key)
                if tid is None:
                    tid = self._fresh_base + len(self._fresh)
                    self._fresh[key] = tid
                table[key] = tid
                return bexp.test(tid)
            if t.tag == NOT_TAG:
                return bnot(go(t.left))
            if t.tag == AND_TAG:
                return band(go(t.left), go(t.right))
            if t.tag == OR_TAG:
                return bor(go(t.left), go(t.right))
            return t

        return go(b), table

    def instantiate_encoded(self, encoded: BExp, table: dict, pi) -> BExp:
        """Set each fresh variable per pi; result is the plain resolution."""
        by_tid = {}
        for (var_id, val), tid in table.items():
            by_tid[tid] = ONE if pi.get(var_id) == val else ZERO

        def go(t: BExp) -> BExp:
            if t.tag == TEST_TAG:
                if t.test >= self._fresh_base:
                    if t.test not in by_tid:
                        raise InternalError(
                            f"fresh variable {t.test} missing from constraint table"
                        )
                    return by_tid[t.test]
                return t
            if t.tag == NOT_TAG:
                return bnot(go(t.left))
            if t.tag == AND_TAG:
                return band(go(t.left), go(t.right))
            if t.tag == OR_TAG:
                return bor(go(t.left), go(t.right))
            return t

        return go(encoded)
