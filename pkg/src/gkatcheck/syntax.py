"""Program terms: hash-consed syntax, well-formedness, label extraction.

The guarded fragment (tests, actions, sequencing, if, while) is what the
plain pipeline consumes; the control-flow extension adds indicator
assignment, break/continue/return, goto/label and the unfolding operator,
which sequences a loop body so break and continue land correctly.
"""

from __future__ import annotations

from typing import Iterator, Optional

from .bexp import BExp, ONE, InputError, Registry, format_bexp

TEST = "test"
ACT = "act"
ASSIGN = "assign"
SEQ = "seq"
UNFOLD = "unfold"
IF = "if"
WHILE = "while"
BREAK = "break"
CONTINUE = "continue"
RETURN = "return"
GOTO = "goto"
LABEL = "label"


class Exp:
    """Hash-consed program term; identity comparison is structural equality."""

    __slots__ = ("tag", "guard", "left", "right", "action", "var", "val", "label", "uid")

    def __init__(self, tag, guard=None, left=None, right=None, action=None,
                 var=None, val=None, label=None, uid=0):
        self.tag = tag
        self.guard = guard
        self.left = left
        self.right = right
        self.action = action
        self.var = var
        self.val = val
        self.label = label
        self.uid = uid

    def __repr__(self):
        return f"Exp<{render(self)}>"


_intern: dict = {}
_uid_counter = 0


def _mk(tag, key, **kw) -> Exp:
    global _uid_counter
    node = _intern.get((tag, key))
    if node is None:
        _uid_counter += 1
        node = Exp(tag, uid=_uid_counter, **kw)
        _intern[(tag, key)] = node
    return node


def btest(b: BExp) -> Exp:
    return _mk(TEST, b.uid, guard=b)


SKIP = btest(ONE)


def act(action_id: int) -> Exp:
    return _mk(ACT, action_id, action=action_id)


def assign(var_id: int, val: int) -> Exp:
    return _mk(ASSIGN, (var_id, val), var=var_id, val=val)


def seq(e: Exp, f: Exp) -> Exp:
    return _mk(SEQ, (e.uid, f.uid), left=e, right=f)


def unfold(e: Exp, f: Exp) -> Exp:
    return _mk(UNFOLD, (e.uid, f.uid), left=e, right=f)


def if_(b: BExp, e: Exp, f: Exp) -> Exp:
    return _mk(IF, (b.uid, e.uid, f.uid), guard=b, left=e, right=f)


def while_(b: BExp, e: Exp) -> Exp:
    return _mk(WHILE, (b.uid, e.uid), guard=b, left=e)


BREAK_E = _mk(BREAK, ())
CONTINUE_E = _mk(CONTINUE, ())
RETURN_E = _mk(RETURN, ())


def goto(label_id: int) -> Exp:
    return _mk(GOTO, label_id, label=label_id)


def label(label_id: int) -> Exp:
    return _mk(LABEL, label_id, label=label_id)


def smart_seq(e: Exp, f: Exp) -> Exp:
    """Left skip is dropped: (1 ; f) becomes f."""
    if e is SKIP:
        return f
    return seq(e, f)


def smart_unfold(e: Exp, f: Exp) -> Exp:
    """Left skip is dropped: (1 unfold f) becomes f."""
    if e is SKIP:
        return f
    return unfold(e, f)


def seq_all(stmts: list) -> Exp:
    """Right-fold a statement list; the empty list is skip."""
    if not stmts:
        return SKIP
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = seq(s, out)
    return out


def render(e: Exp, registry: Optional[Registry] = None) -> str:
    def a_name(aid):
        return registry.action_name(aid) if registry else f"p{aid}"

    def v_name(vid):
        return registry.var_name(vid) if registry else f"x{vid}"

    def l_name(lid):
        return registry.label_name(lid) if registry else f"l{lid}"

    if e.tag == TEST:
        return f"assert({format_bexp(e.guard, registry)})"
    if e.tag == ACT:
        return a_name(e.action)
    if e.tag == ASSIGN:
        return f"{v_name(e.var)} := {e.val}"
    if e.tag == SEQ:
        return f"{render(e.left, registry)}; {render(e.right, registry)}"
    if e.tag == UNFOLD:
        return f"({render(e.left, registry)} <| {render(e.right, registry)})"
    if e.tag == IF:
        return (f"if ({format_bexp(e.guard, registry)}) {{ {render(e.left, registry)} }}"
                f" else {{ {render(e.right, registry)} }}")
    if e.tag == WHILE:
        return f"while ({format_bexp(e.guard, registry)}) {{ {render(e.left, registry)} }}"
    if e.tag == GOTO:
        return f"goto {l_name(e.label)}"
    if e.tag == LABEL:
        return f"label {l_name(e.label)}"
    return e.tag


def children(e: Exp) -> list:
    if e.tag in (SEQ, UNFOLD, IF):
        return [e.left, e.right]
    if e.tag == WHILE:
        return [e.left]
    return []


def iter_nodes(e: Exp) -> Iterator[Exp]:
    """Preorder walk of the tree (shared nodes revisited per occurrence)."""
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


_label_counts: dict = {}


def label_counts(e: Exp) -> dict:
    """Multiplicity of each label in the tree under e.

    Interned subtrees with equal structure have equal counts, so the memo
    over node identity is exact even though occurrences are counted per
    tree position.
    """
    cached = _label_counts.get(e.uid)
    if cached is not None:
        return cached
    if e.tag == LABEL:
        out = {e.label: 1}
    else:
        out = {}
        for c in children(e):
            for l, n in label_counts(c).items():
                out[l] = out.get(l, 0) + n
    _label_counts[e.uid] = out
    return out


def is_gkat(e: Exp) -> bool:
    """True for the guarded fragment: no control-flow extension, pure guards."""
    for n in iter_nodes(e):
        if n.tag in (ASSIGN, UNFOLD, BREAK, CONTINUE, RETURN, GOTO, LABEL):
            return False
        if n.tag in (TEST, IF, WHILE) and not n.guard.is_pure():
            return False
    return True


def well_formed(e: Exp, registry: Optional[Registry] = None) -> list:
    """Check the four program conditions; returns a list of violations.

    (1) each label appears at most once, (2) every goto has its label,
    (3) break/continue sit inside a loop or the left side of an unfolding,
    (4) the program ends in return.
    """
    violations = []

    def l_name(lid):
        return registry.label_name(lid) if registry else f"l{lid}"

    counts = label_counts(e)
    for lid, n in sorted(counts.items()):
        if n > 1:
            violations.append(
                (1, f"label {l_name(lid)} appears {n} times"))
    for node in iter_nodes(e):
        if node.tag == GOTO and counts.get(node.label, 0) == 0:
            violations.append(
                (2, f"goto {l_name(node.label)} has no matching label"))

    def check_break(n: Exp, protected: bool):
        if n.tag in (BREAK, CONTINUE):
            if not protected:
                violations.append(
                    (3, f"{n.tag} outside any loop or unfolding"))
            return
        if n.tag == WHILE:
            check_break(n.left, True)
            return
        if n.tag == UNFOLD:
            check_break(n.left, True)
            check_break(n.right, protected)
            return
        for c in children(n):
            check_break(c, protected)

    check_break(e, False)

    tail = e
    while tail.tag == SEQ:
        tail = tail.right
    if tail.tag != RETURN:
        violations.append((4, "program does not end in return"))
    return violations


class WellFormedProgram:
    """A checked program together with its registry and label table."""

    def __init__(self, exp: Exp, registry: Registry):
        self.exp = exp
        self.registry = registry
        violations = well_formed(exp, registry)
        if violations:
            raise InputError(
                "; ".join(f"condition ({c}): {msg}" for c, msg in violations))
        self.labels = label_counts(exp)
        self._extracted: dict = {}

    def extract(self, label_id: int) -> Exp:
        out = self._extracted.get(label_id)
        if out is None:
            out = label_extract(self.exp, label_id)
            self._extracted[label_id] = out
        return out


def label_extract(e: Exp, label_id: int) -> Exp:
    """Project the program onto the location of a label.

    Defined when the label occurs exactly once. The result is built with
    the smart constructors, so skips introduced by the equations vanish.
    """
    count = label_counts(e).get(label_id, 0)
    if count == 0:
        raise InputError(f"label id {label_id} does not occur")
    if count > 1:
        raise InputError(f"label id {label_id} occurs {count} times")

    def go(n: Exp) -> Exp:
        if n.tag == LABEL and n.label == label_id:
            return SKIP
        if n.tag == SEQ:
            if label_counts(n.left).get(label_id, 0):
                return smart_seq(go(n.left), n.right)
            return go(n.right)
        if n.tag == UNFOLD:
            if label_counts(n.left).get(label_id, 0):
                return smart_unfold(go(n.left), n.right)
            return go(n.right)
        if n.tag == IF:
            if label_counts(n.left).get(label_id, 0):
                return go(n.left)
            return go(n.right)
        if n.tag == WHILE:
            return smart_unfold(go(n.left), n)
        raise InputError(f"label id {label_id} not found under {n.tag}")

    return go(e)


_size_cache: dict = {}


def size(e: Exp) -> int:
    """Tree size; memoized per interned node (equal subtrees, equal size)."""
    got = _size_cache.get(e.uid)
    if got is None:
        got = 1 + sum(size(c) for c in children(e))
        _size_cache[e.uid] = got
    return got
