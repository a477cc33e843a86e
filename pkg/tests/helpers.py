"""Shared test utilities: brute-force oracles, fixture automata, generators."""

from __future__ import annotations

import random

from gkatcheck import bexp
from gkatcheck.automata import (
    ACCEPT,
    REJECT,
    ConcreteAutomaton,
    concretize_full,
)
from gkatcheck.bexp import Registry, enumerate_atoms, eval_atom
from gkatcheck.equivalence import CheckSession, equiv_concrete
from gkatcheck.oracle import bisimilar, trace_equivalent
from gkatcheck.pipeline import build_automata, check_exps
from gkatcheck.solvers import SolverHandle


def registry_t2() -> Registry:
    """Two tests t1, t2 and actions p, q (the running examples)."""
    reg = Registry()
    reg.add_test("t1")
    reg.add_test("t2")
    reg.add_action("p")
    reg.add_action("q")
    return reg


def random_pure_bexp(rng: random.Random, n_tests: int, size: int):
    if size <= 1:
        roll = rng.random()
        if roll < 0.06:
            return bexp.ZERO if rng.random() < 0.5 else bexp.ONE
        return bexp.test(rng.randrange(n_tests))
    roll = rng.random()
    if roll < 0.4:
        return bexp.band(random_pure_bexp(rng, n_tests, size // 2),
                         random_pure_bexp(rng, n_tests, size - size // 2))
    if roll < 0.8:
        return bexp.bor(random_pure_bexp(rng, n_tests, size // 2),
                        random_pure_bexp(rng, n_tests, size - size // 2))
    return bexp.bnot(random_pure_bexp(rng, n_tests, size - 1))


def sat_atoms(b, registry: Registry) -> list:
    """Brute-force model set by atom enumeration (the Boolean oracle)."""
    return [a for a in enumerate_atoms(registry) if eval_atom(b, a)]


# Atoms over {t1, t2}: bit 0 is t1, bit 1 is t2.
A_NONE = 0b00   # !t1 !t2
A_T1 = 0b01     # t1 !t2
A_T2 = 0b10     # !t1 t2
A_BOTH = 0b11   # t1 t2


def structured_concrete() -> ConcreteAutomaton:
    """Hand-built location-state automaton of the structured program."""
    reg = registry_t2()
    P, Q = 0, 1
    zeta = [
        # atom order: 0b00, 0b01, 0b10, 0b11
        [ACCEPT, (1, P), (2, P), (1, P)],   # s0
        [ACCEPT, (3, P), (2, P), (2, P)],   # s1
        [ACCEPT, (3, P), (2, P), (2, P)],   # s2
        [REJECT, (3, Q), REJECT, REJECT],   # s3 (dead)
    ]
    return ConcreteAutomaton(reg, 0, zeta, ["s0", "s1", "s2", "s3"])


def goto_concrete() -> ConcreteAutomaton:
    """Hand-built location-state automaton of the goto program."""
    reg = registry_t2()
    P = 0
    zeta = [
        [ACCEPT, (1, P), (1, P), (1, P)],   # u0
        [ACCEPT, REJECT, (2, P), (2, P)],   # u1
        [ACCEPT, REJECT, (2, P), (2, P)],   # u2
    ]
    return ConcreteAutomaton(reg, 0, zeta, ["u0", "u1", "u2"])


def dead_cycle_pair():
    """Two all-dead three-state cycles whose closing edges disagree on the
    action; trace-equivalent, not bisimilar."""
    reg = Registry()
    reg.add_action("p")
    reg.add_action("q")
    a = ConcreteAutomaton(reg, 0, [[(1, 0)], [(2, 0)], [(0, 0)]])
    b = ConcreteAutomaton(reg, 0, [[(1, 0)], [(2, 0)], [(0, 1)]])
    return a, b


def differential_verdicts(left, right, registry, *, lang="gkat", solver="sat",
                          mode="trace", init=None, verify=True):
    """(symbolic, concrete-on-concretization, eager-oracle) verdict triple."""
    verdict, _ = check_exps(left, right, registry, lang=lang, mode=mode,
                            solver=solver, init=init, verify=verify)
    aut_l, aut_r, _ = build_automata(left, right, registry, lang=lang,
                                     solver=solver, init=init)
    ca = concretize_full(aut_l, registry)
    cb = concretize_full(aut_r, registry)
    session = CheckSession(ca, cb, SolverHandle(registry, solver), mode=mode)
    concrete = equiv_concrete(session).equivalent
    oracle = trace_equivalent(ca, cb) if mode == "trace" else bisimilar(ca, cb)
    return verdict.equivalent, concrete, oracle
