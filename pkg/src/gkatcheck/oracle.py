"""Reference decision procedure: eager normalization plus bisimulation.

This is the slow, obviously-correct path used for differential testing at
small test counts. Normalization reroutes every transition into a dead
state to immediate rejection (dead = cannot reach acceptance, computed by
reverse reachability from the accepting states over a backward map built
in one forward pass). Trace equivalence of the originals coincides with
plain bisimulation of the normalized automata.
"""

from __future__ import annotations

from collections import deque

from .automata import ACCEPT, REJECT, ConcreteAutomaton


def normalize(aut: ConcreteAutomaton) -> ConcreteAutomaton:
    backward: list = [[] for _ in range(aut.n_states)]
    accepting = []
    for s in range(aut.n_states):
        row = aut.zeta[s]
        if any(r == ACCEPT for r in row):
            accepting.append(s)
        for r in row:
            if r not in (ACCEPT, REJECT):
                backward[r[0]].append(s)

    live = set(accepting)
    queue = deque(accepting)
    while queue:
        s = queue.popleft()
        for p in backward[s]:
            if p not in live:
                live.add(p)
                queue.append(p)

    zeta = []
    for s in range(aut.n_states):
        row = []
        for r in aut.zeta[s]:
            if r in (ACCEPT, REJECT):
                row.append(r)
            elif r[0] in live:
                row.append(r)
            else:
                row.append(REJECT)
        zeta.append(row)
    return ConcreteAutomaton(aut.registry, aut.start, zeta, list(aut.labels))


def naive_bisim(a: ConcreteAutomaton, b: ConcreteAutomaton) -> bool:
    """Union-find bisimulation over normalized automata: per atom, both
    sides must accept together, reject together, or step with one action
    into a related pair."""
    parent: dict = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    stack = [((0, a.start), (1, b.start))]
    while stack:
        ka, kb = stack.pop()
        ra, rb = find(ka), find(kb)
        if ra == rb:
            continue
        parent[ra] = rb
        sa, sb = ka[1], kb[1]
        for atom in a.atoms:
            res_a = a.result(sa, atom)
            res_b = b.result(sb, atom)
            if res_a == ACCEPT or res_b == ACCEPT:
                if res_a != res_b:
                    return False
                continue
            if res_a == REJECT or res_b == REJECT:
                if res_a != res_b:
                    return False
                continue
            if res_a[1] != res_b[1]:
                return False
            stack.append(((0, res_a[0]), (1, res_b[0])))
    return True


def trace_equivalent(a: ConcreteAutomaton, b: ConcreteAutomaton) -> bool:
    """The original two-pass verdict: normalize both, then bisimulate."""
    return naive_bisim(normalize(a), normalize(b))


def traces_up_to(aut: ConcreteAutomaton, s: int, k: int) -> set:
    """All guarded words of the state with at most k action symbols.

    A word is a tuple of (atom, action) steps ending in an accepting
    atom. Exponential; bounded unfolding for the oracle only.
    """
    out = set()
    row = aut.zeta[s]
    for atom, r in enumerate(row):
        if r == ACCEPT:
            out.add((atom,))
    if k <= 0:
        return out
    for atom, r in enumerate(row):
        if r in (ACCEPT, REJECT):
            continue
        target, action = r
        for w in traces_up_to(aut, target, k - 1):
            out.add((atom, action) + w)
    return out


def bisimilar(a: ConcreteAutomaton, b: ConcreteAutomaton) -> bool:
    """Plain bisimulation on the raw (un-normalized) automata."""
    return naive_bisim(a, b)
