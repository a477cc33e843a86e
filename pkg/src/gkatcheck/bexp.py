"""Boolean-expression layer: guard terms, indicator resolution, atoms.

Guards live in a free Boolean algebra over a finite registry of primitive
tests, extended with indicator tests ``x == i``. Terms are hash-consed, so
structural equality is identity equality. The only simplification performed
at construction time is constant folding (0 and b -> 0, 1 and b -> b, and
duals); everything else is left to the solver backends.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

ZERO_TAG = "zero"
ONE_TAG = "one"
TEST_TAG = "test"
IND_TAG = "ind"
AND_TAG = "and"
OR_TAG = "or"
NOT_TAG = "not"

# Atom-table limit for anything that materializes all atoms (oracle only).
ATOM_LIMIT = 16


class InputError(ValueError):
    """Bad input from the caller (undeclared name, malformed term, ...)."""


class OracleLimitError(RuntimeError):
    """Raised when an atom-enumerating operation exceeds ATOM_LIMIT tests."""


class BExp:
    """A hash-consed Boolean term. Build through the module constructors."""

    __slots__ = ("tag", "left", "right", "test", "var", "val", "uid")

    def __init__(self, tag, left=None, right=None, test=None, var=None, val=None, uid=0):
        self.tag = tag
        self.left = left
        self.right = right
        self.test = test
        self.var = var
        self.val = val
        self.uid = uid

    def __repr__(self):
        return f"BExp<{format_bexp(self)}>"

    # Identity is interning identity; keep default object hash/eq.

    def is_pure(self) -> bool:
        """True when the term contains no indicator test."""
        return _pure_cache_lookup(self)


_intern: dict = {}
_uid_counter = 0
_pure_cache: dict = {}


def _mk(tag, key, **kw) -> BExp:
    global _uid_counter
    node = _intern.get((tag, key))
    if node is None:
        _uid_counter += 1
        node = BExp(tag, uid=_uid_counter, **kw)
        _intern[(tag, key)] = node
    return node


ZERO = _mk(ZERO_TAG, ())
ONE = _mk(ONE_TAG, ())


def test(test_id: int) -> BExp:
    return _mk(TEST_TAG, test_id, test=test_id)


def ind(var_id: int, val: int) -> BExp:
    return _mk(IND_TAG, (var_id, val), var=var_id, val=val)


def band(a: BExp, b: BExp) -> BExp:
    if a is ZERO or b is ZERO:
        return ZERO
    if a is ONE:
        return b
    if b is ONE:
        return a
    return _mk(AND_TAG, (a.uid, b.uid), left=a, right=b)


def bor(a: BExp, b: BExp) -> BExp:
    if a is ONE or b is ONE:
        return ONE
    if a is ZERO:
        return b
    if b is ZERO:
        return a
    return _mk(OR_TAG, (a.uid, b.uid), left=a, right=b)


def bnot(a: BExp) -> BExp:
    if a is ZERO:
        return ONE
    if a is ONE:
        return ZERO
    return _mk(NOT_TAG, a.uid, left=a)


def big_or(terms: Iterable[BExp]) -> BExp:
    acc = ZERO
    for t in terms:
        acc = bor(acc, t)
    return acc


def big_and(terms: Iterable[BExp]) -> BExp:
    acc = ONE
    for t in terms:
        acc = band(acc, t)
    return acc


def _pure_cache_lookup(b: BExp) -> bool:
    cached = _pure_cache.get(b.uid)
    if cached is not None:
        return cached
    if b.tag == IND_TAG:
        result = False
    elif b.tag in (ZERO_TAG, ONE_TAG, TEST_TAG):
        result = True
    elif b.tag == NOT_TAG:
        result = _pure_cache_lookup(b.left)
    else:
        result = _pure_cache_lookup(b.left) and _pure_cache_lookup(b.right)
    _pure_cache[b.uid] = result
    return result


# ---------------------------------------------------------------------------
# Registry of primitive tests, actions, indicator variables and values.
# ---------------------------------------------------------------------------


@dataclass
class Registry:
    """Finite declarations shared by both sides of a check.

    Roles are exclusive: an identifier may be a test, an action, an
    indicator variable, or a label, never two of those.
    """

    tests: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    ind_vars: list = field(default_factory=list)
    values: set = field(default_factory=lambda: {0})
    labels: list = field(default_factory=list)
    _roles: dict = field(default_factory=dict)

    def _claim(self, name: str, role: str):
        prev = self._roles.get(name)
        if prev is not None and prev != role:
            raise InputError(f"identifier {name!r} used both as {prev} and as {role}")
        self._roles[name] = role

    def add_test(self, name: str) -> int:
        self._claim(name, "test")
        try:
            return self.tests.index(name)
        except ValueError:
            self.tests.append(name)
            return len(self.tests) - 1

    def add_action(self, name: str) -> int:
        self._claim(name, "action")
        try:
            return self.actions.index(name)
        except ValueError:
            self.actions.append(name)
            return len(self.actions) - 1

    def add_ind_var(self, name: str) -> int:
        self._claim(name, "indicator variable")
        try:
            return self.ind_vars.index(name)
        except ValueError:
            self.ind_vars.append(name)
            return len(self.ind_vars) - 1

    def add_label(self, name: str) -> int:
        self._claim(name, "label")
        try:
            return self.labels.index(name)
        except ValueError:
            self.labels.append(name)
            return len(self.labels) - 1

    def add_value(self, v: int):
        self.values.add(v)

    def test_name(self, tid: int) -> str:
        if 0 <= tid < len(self.tests):
            return self.tests[tid]
        return f"_v{tid}"  # fresh solver variable, not a declared test

    def action_name(self, aid: int) -> str:
        return self.actions[aid]

    def var_name(self, vid: int) -> str:
        return self.ind_vars[vid]

    def label_name(self, lid: int) -> str:
        return self.labels[lid]


# ---------------------------------------------------------------------------
# Indicator states.
# ---------------------------------------------------------------------------


class IndicatorState:
    """Total map from declared indicator variables to values.

    Stored as a tuple aligned with the registry's variable order, which
    makes totality structural and equality/hashing cheap.
    """

    __slots__ = ("vals",)

    def __init__(self, vals: tuple):
        self.vals = vals

    def get(self, var_id: int) -> int:
        return self.vals[var_id]

    def reassign(self, var_id: int, val: int) -> "IndicatorState":
        if not (0 <= var_id < len(self.vals)):
            raise InputError(f"undeclared indicator variable id {var_id}")
        if self.vals[var_id] == val:
            return self
        vals = list(self.vals)
        vals[var_id] = val
        return IndicatorState(tuple(vals))

    def __eq__(self, other):
        return isinstance(other, IndicatorState) and self.vals == other.vals

    def __hash__(self):
        return hash(self.vals)

    def __repr__(self):
        return "{" + ",".join(f"x{i}->{v}" for i, v in enumerate(self.vals)) + "}"

    def render(self, registry: Registry) -> str:
        items = ",".join(
            f"{registry.var_name(i)}={v}" for i, v in enumerate(self.vals)
        )
        return "{" + items + "}"


def initial_state(registry: Registry, overrides: Optional[dict] = None) -> IndicatorState:
    """All declared variables start at 0 unless overridden."""
    vals = [0] * len(registry.ind_vars)
    for name, v in (overrides or {}).items():
        if name not in registry.ind_vars:
            raise InputError(f"undeclared indicator variable {name!r}")
        if v not in registry.values:
            registry.add_value(v)
        vals[registry.ind_vars.index(name)] = v
    return IndicatorState(tuple(vals))


def resolve(b: BExp, pi: IndicatorState) -> BExp:
    """Replace every indicator test by its truth value under pi.

    Connectives map through homomorphically; the result is pure. Constant
    folding in the constructors does the collapsing the examples show.
    """
    if b.tag in (ZERO_TAG, ONE_TAG, TEST_TAG):
        return b
    if b.tag == IND_TAG:
        if not (0 <= b.var < len(pi.vals)):
            raise InputError(f"undeclared indicator variable id {b.var}")
        return ONE if pi.get(b.var) == b.val else ZERO
    if b.tag == NOT_TAG:
        return bnot(resolve(b.left, pi))
    if b.tag == AND_TAG:
        return band(resolve(b.left, pi), resolve(b.right, pi))
    return bor(resolve(b.left, pi), resolve(b.right, pi))


# ---------------------------------------------------------------------------
# Atoms: total truth assignments over the registered tests, as bit masks.
# Bit i carries the polarity of test id i.
# ---------------------------------------------------------------------------

atom_enumerations = 0  # incremented on every enumerate_atoms call


def enumerate_atoms(registry: Registry) -> list:
    global atom_enumerations
    n = len(registry.tests)
    if n > ATOM_LIMIT:
        raise OracleLimitError(
            f"{n} tests would need {2 ** n} atoms; limit is 2^{ATOM_LIMIT}"
        )
    atom_enumerations += 1
    return list(range(2 ** n))


def eval_atom(b: BExp, atom: int) -> bool:
    """Evaluate a pure term under an atom."""
    if b.tag == ONE_TAG:
        return True
    if b.tag == ZERO_TAG:
        return False
    if b.tag == TEST_TAG:
        return bool(atom >> b.test & 1)
    if b.tag == NOT_TAG:
        return not eval_atom(b.left, atom)
    if b.tag == AND_TAG:
        return eval_atom(b.left, atom) and eval_atom(b.right, atom)
    if b.tag == OR_TAG:
        return eval_atom(b.left, atom) or eval_atom(b.right, atom)
    raise InputError("cannot evaluate an indicator test against an atom")


def format_atom(atom: int, registry: Registry) -> str:
    if not registry.tests:
        return "1"
    parts = []
    for i, name in enumerate(registry.tests):
        parts.append(name if atom >> i & 1 else "!" + name)
    return "&".join(parts)


def format_bexp(b: BExp, registry: Optional[Registry] = None) -> str:
    """Render a term in the concrete grammar (&&, ||, !, ==)."""

    def name(tid):
        return registry.test_name(tid) if registry else f"t{tid}"

    def var(vid):
        return registry.var_name(vid) if registry else f"x{vid}"

    def go(t, prec):
        if t.tag == ZERO_TAG:
            return "0"
        if t.tag == ONE_TAG:
            return "1"
        if t.tag == TEST_TAG:
            return name(t.test)
        if t.tag == IND_TAG:
            s = f"{var(t.var)} == {t.val}"
            return f"({s})" if prec > 0 else s
        if t.tag == NOT_TAG:
            return "!" + go(t.left, 3)
        if t.tag == AND_TAG:
            s = f"{go(t.left, 2)} && {go(t.right, 2)}"
            return f"({s})" if prec > 2 else s
        s = f"{go(t.left, 1)} || {go(t.right, 1)}"
        return f"({s})" if prec > 1 else s

    return go(b, 0)


def iter_tests(b: BExp) -> Iterator[int]:
    """Yield the test ids occurring in a term (with repeats)."""
    stack = [b]
    while stack:
        t = stack.pop()
        if t.tag == TEST_TAG:
            yield t.test
        elif t.tag == NOT_TAG:
            stack.append(t.left)
        elif t.tag in (AND_TAG, OR_TAG):
            stack.append(t.left)
            stack.append(t.right)
