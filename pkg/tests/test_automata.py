import re

import pytest

from gkatcheck import bexp
from gkatcheck.automata import (
    ACCEPT,
    REJECT,
    concretize,
    concretize_full,
    rho_of,
    table_automaton,
    verify_state,
)
from gkatcheck.bexp import ONE, Registry, band, bnot, bor, enumerate_atoms, eval_atom
from gkatcheck.derivative import gkat_automaton
from gkatcheck.parser import parse_exp
from gkatcheck.pipeline import strip_trailing_return
from gkatcheck.solvers import InternalError, SolverHandle

from conftest import read_fixture
from helpers import A_BOTH, A_NONE, A_T1, A_T2, registry_t2


def t(i):
    return bexp.test(i)


def structured_automaton(solver="sat", verify=False):
    reg = Registry()
    exp = strip_trailing_return(parse_exp(read_fixture("structured_loop.cfg"), reg))
    handle = SolverHandle(reg, solver)
    aut = gkat_automaton(exp, reg, handle, verify=verify)
    start = aut.start
    loop = aut.delta(start)[0][1]
    dead = [tgt for _, tgt, p in aut.delta(loop) if p == 1][0]
    return reg, handle, aut, start, loop, dead


# -- rho ------------------------------------------------------------------------

def test_rho_single_eps_entry():
    reg = registry_t2()
    aut = table_automaton("s", {"s": ((t(0),), ())}, reg)
    assert aut.rho("s") is bnot(t(0))


def test_rho_empty_state_is_one():
    reg = registry_t2()
    aut = table_automaton("s", {"s": ((), ())}, reg)
    assert aut.rho("s") is ONE


def test_rho_of_loop_state_covers_all_atoms():
    # eps {!t1&&!t2}, delta guards {t2, t1&&!t2}: every atom is covered,
    # so the rejection guard holds for no atom (checked by enumeration)
    reg = registry_t2()
    eps = (band(bnot(t(0)), bnot(t(1))),)
    delta = ((t(1), "x", 0), (band(t(0), bnot(t(1))), "y", 1))
    rho = rho_of(eps, delta)
    assert all(not eval_atom(rho, atom) for atom in enumerate_atoms(reg))


# -- concretize -------------------------------------------------------------------

def test_concretize_start_steps_on_t1(solver):
    reg, handle, aut, start, loop, dead = structured_automaton(solver)
    assert concretize(aut, start, A_BOTH) == (loop, 0)
    assert concretize(aut, start, A_T1) == (loop, 0)


def test_concretize_loop_accepts_no_tests(solver):
    reg, handle, aut, start, loop, dead = structured_automaton(solver)
    assert concretize(aut, loop, A_NONE) == ACCEPT


def test_concretize_rejects_on_rho(solver):
    reg, handle, aut, start, loop, dead = structured_automaton(solver)
    # dead state only steps on t1&!t2; every other atom is rejected
    for atom in (A_NONE, A_T2, A_BOTH):
        assert eval_atom(aut.rho(dead), atom)
        assert concretize(aut, dead, atom) == REJECT


def test_concretize_is_deterministic_per_atom(solver):
    reg, handle, aut, start, loop, dead = structured_automaton(solver)
    for s in (start, loop, dead):
        for atom in enumerate_atoms(reg):
            concretize(aut, s, atom)  # would raise on a double match


def test_concretize_detects_disjointedness_violation():
    reg = registry_t2()
    aut = table_automaton("s", {"s": ((t(0),), ((t(0), "s", 0),))}, reg)
    with pytest.raises(InternalError):
        concretize(aut, "s", A_T1)


# -- invariants --------------------------------------------------------------------

def test_verify_state_accepts_loop_automaton(solver):
    reg, handle, aut, start, loop, dead = structured_automaton(solver, verify=True)
    for s in (start, loop, dead):
        verify_state(aut, s, handle)


def test_verify_state_rejects_overlapping_guards(solver):
    reg = registry_t2()
    handle = SolverHandle(reg, solver)
    aut = table_automaton("s", {"s": ((t(0),), ((bor(t(0), t(1)), "s", 0),))}, reg)
    with pytest.raises(InternalError):
        verify_state(aut, "s", handle)


def test_verify_state_rejects_blocked_entry(solver):
    reg = registry_t2()
    handle = SolverHandle(reg, solver)
    aut = table_automaton("s", {"s": ((band(t(0), bnot(t(0))),), ())}, reg)
    with pytest.raises(InternalError):
        verify_state(aut, "s", handle)


def test_total_coverage_identity(solver):
    reg, handle, aut, start, loop, dead = structured_automaton(solver)
    for s in (start, loop, dead):
        eps, delta = aut.entries(s)
        covering = aut.rho(s)
        for g in list(eps) + [g for g, _, _ in delta]:
            covering = bor(covering, g)
        assert handle.equiv(covering, ONE)


# -- debug dump ----------------------------------------------------------------------

def test_dump_format(solver):
    reg, handle, aut, start, loop, dead = structured_automaton(solver)
    for s in (start, loop, dead):
        aut.entries(s)
    text = aut.dump()
    lines = text.splitlines()
    assert len(lines) == 3
    for i, line in enumerate(lines):
        assert line.startswith(f"state {i} | eps: ")
        assert " | delta:" in line
        for target in re.findall(r", (\d+)\)", line):
            assert int(target) < 3
    # transitions carry the action name between guard and target id
    assert re.search(r", p, \d+\)", lines[0])
    assert re.search(r", q, \d+\)", lines[1])


# -- concretization to a full table -----------------------------------------------------

def test_concretize_full_matches_per_atom_results(solver):
    reg, handle, aut, start, loop, dead = structured_automaton(solver)
    caut = concretize_full(aut, reg)
    assert caut.n_states == 3
    sym_states = {0: start, 1: loop, 2: dead}
    for idx, s in sym_states.items():
        for atom in caut.atoms:
            got = caut.result(idx, atom)
            want = concretize(aut, s, atom)
            if want in (ACCEPT, REJECT):
                assert got == want
            else:
                assert got[1] == want[1]
