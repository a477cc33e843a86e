"""Acceptance suite: one test per criterion, each printing a PASS line.

Every criterion runs under both solver backends through the ``solver``
fixture; the determinism criterion additionally asserts verdict identity
between the backends on a fixed differential batch.
"""

import random
import time
import tracemalloc

import pytest

import gkatcheck.bexp as bexp_mod
from gkatcheck import bexp, syntax
from gkatcheck.automata import concretize_full, table_automaton
from gkatcheck.bexp import ONE, OracleLimitError, Registry, band, bnot
from gkatcheck.cli import main
from gkatcheck.equivalence import CheckSession, equiv_concrete, equiv_symbolic
from gkatcheck.genbench import (
    CfGenConfig,
    GenConfig,
    gen_cf_program,
    gen_pair,
    build_registry,
    mutate,
)
from gkatcheck.oracle import trace_equivalent
from gkatcheck.parser import parse_exp
from gkatcheck.pipeline import build_automata, check_exps
from gkatcheck.solvers import SolverHandle
from gkatcheck.syntax import RETURN_E, act, btest, seq, well_formed

from conftest import FIXTURES, read_fixture
from helpers import random_pure_bexp, sat_atoms


def fx(name):
    return str(FIXTURES / name)


def report(criterion, text):
    print(f"criterion {criterion}: PASS ({text})")


# -- criterion 1: bundled fixture pairs ------------------------------------------

def test_criterion_1_fixture_pairs(solver, capsys):
    t0 = time.perf_counter()
    code = main(["check", fx("structured_loop.cfg"), fx("goto_flow.cfg"), "--mode", "trace",
                 "--solver", solver])
    t_pos = time.perf_counter() - t0
    assert code == 0
    out = capsys.readouterr().out
    assert out.strip() == "EQUIVALENT"

    t0 = time.perf_counter()
    code = main(["check", fx("goto_flow_bad_guard.cfg"), fx("structured_loop.cfg"), "--witness",
                 "--solver", solver])
    t_neg = time.perf_counter() - t0
    assert code == 1
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "INEQUIVALENT"
    witness_line = [l for l in out.splitlines() if l.startswith("witness: ")][0]
    first_atom = witness_line.split()[1]
    assert set(first_atom.split("&")) == {"t1", "!t2"}  # t1 true, t2 false

    assert t_pos < 1.0 and t_neg < 1.0, (t_pos, t_neg)
    with capsys.disabled():
        report(1, f"fixtures, {solver}, {t_pos * 1000:.0f}ms / {t_neg * 1000:.0f}ms")


# -- criterion 2: oracle differential suite --------------------------------------

def _differential_cases():
    """>= 1000 seeded oracle-scale cases: rewritten pairs, mutants, and
    control-flow programs with indicators and jumps."""
    gk = GenConfig(program_size=10, test_count=4, action_count=4,
                   rewrite_steps=5, bexp_size=2, max_depth=5)
    cf = CfGenConfig(program_size=9, test_count=3, action_count=4,
                     ind_vars=1, values=3, bexp_size=2, labels=1, gotos=1)
    cases = []
    for seed in range(350):
        reg, left, right = gen_pair(seed, gk)
        cases.append(("gkat", reg, left, right))
    for seed in range(350):
        reg, left, right = gen_pair(10_000 + seed, gk)
        cases.append(("gkat", reg, left, mutate(right, seed, reg)))
    for seed in range(160):
        reg, p1 = gen_cf_program(seed, cf)
        _, p2 = gen_cf_program(20_000 + seed, cf, registry=reg, label_prefix="m")
        cases.append(("cfgkat", reg, p1, p2))
    for seed in range(150):
        reg, p1 = gen_cf_program(30_000 + seed, cf)
        p2 = mutate(p1, seed, reg)
        if well_formed(p2, reg):
            p2 = p1
        cases.append(("cfgkat", reg, p1, p2))
    assert len(cases) >= 1000
    return cases


def test_criterion_2_oracle_differential(solver, capsys):
    t0 = time.perf_counter()
    cases = _differential_cases()
    agree = 0
    for i, (lang, reg, left, right) in enumerate(cases):
        symbolic, _ = check_exps(left, right, reg, lang=lang, solver=solver)
        aut_l, aut_r, _ = build_automata(left, right, reg, lang=lang,
                                         solver=solver)
        ca = concretize_full(aut_l, reg)
        cb = concretize_full(aut_r, reg)
        session = CheckSession(ca, cb, SolverHandle(reg, solver))
        concrete = equiv_concrete(session)
        oracle = trace_equivalent(ca, cb)
        assert symbolic.equivalent == concrete.equivalent == oracle, (i, lang)
        agree += 1
    elapsed = time.perf_counter() - t0
    assert agree == len(cases)
    assert elapsed < 300.0, elapsed
    with capsys.disabled():
        report(2, f"{agree}/{len(cases)} agreements, {solver}, {elapsed:.1f}s")


# -- criterion 3: mode separation ---------------------------------------------------

def test_criterion_3_mode_separation(solver, capsys):
    wp, wq = read_fixture("while_p.cfg"), read_fixture("while_q.cfg")
    reg = Registry()
    left, right = parse_exp(wp, reg), parse_exp(wq, reg)
    trace_v, _ = check_exps(left, right, reg, solver=solver, mode="trace")
    bisim_v, _ = check_exps(left, right, reg, solver=solver, mode="bisim")
    assert trace_v.equivalent and not bisim_v.equivalent

    # three-state all-dead cycles whose closing actions differ
    reg2 = Registry()
    reg2.add_action("p")
    reg2.add_action("q")
    aut_a = table_automaton("s0", {
        "s0": ((), ((ONE, "s1", 0),)),
        "s1": ((), ((ONE, "s2", 0),)),
        "s2": ((), ((ONE, "s0", 0),)),
    }, reg2)
    aut_b = table_automaton("u0", {
        "u0": ((), ((ONE, "u1", 0),)),
        "u1": ((), ((ONE, "u2", 0),)),
        "u2": ((), ((ONE, "u0", 1),)),
    }, reg2)
    verdicts = {}
    for mode in ("trace", "bisim"):
        session = CheckSession(aut_a, aut_b, SolverHandle(reg2, solver), mode=mode)
        verdicts[mode] = equiv_symbolic(session).equivalent
    assert verdicts == {"trace": True, "bisim": False}
    with capsys.disabled():
        report(3, f"diverging loops and dead cycles split by mode, {solver}")


# -- criterion 4: loop-derivative golden automata --------------------------------------

def test_criterion_4_loop_goldens(solver, capsys):
    from gkatcheck.bexp import initial_state
    from gkatcheck.derivative import loop_step

    reg = Registry()
    exp = parse_exp(read_fixture("loop_indicators.cfg"), reg)
    loop = exp.left
    handle = SolverHandle(reg, solver)
    b_test, a_test = bexp.test(0), bexp.test(1)

    eps, delta = loop_step(initial_state(reg, {"x": 2}), loop.left, loop.guard, handle)
    assert delta == ()
    ((g, c),) = eps
    assert handle.equiv(g, ONE) and c.pi.get(0) == 2

    eps, delta = loop_step(initial_state(reg, {"x": 3}), loop.left, loop.guard, handle)
    assert eps == ()
    by_x = {target[0].get(0): g for g, target, _ in delta}
    assert set(by_x) == {3, 4}
    assert handle.equiv(by_x[3], band(bnot(b_test), a_test))   # self-loop
    assert handle.equiv(by_x[4], band(b_test, a_test))         # exit to x=4
    assert all(target[1] is loop for _, target, _ in delta)
    with capsys.disabled():
        report(4, f"indicator-loop automata match the expected guards, {solver}")


# -- criterion 5: symbolic scaling -------------------------------------------------------

def test_criterion_5_symbolic_scaling(solver, capsys):
    cfg = GenConfig(program_size=200, test_count=1000, action_count=50,
                    rewrite_steps=25, bexp_size=4)
    reg, left, right = gen_pair(7, cfg)
    assert len(reg.tests) == 1000

    atom_enums_before = bexp_mod.atom_enumerations
    tracemalloc.start()
    t0 = time.perf_counter()
    verdict, session = check_exps(left, right, reg, lang="gkat", solver=solver)
    elapsed = time.perf_counter() - t0
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()

    assert verdict.equivalent
    assert elapsed < 60.0, elapsed
    assert peak < 1 << 30, peak
    # no operation on the symbolic path enumerates atoms
    assert bexp_mod.atom_enumerations == atom_enums_before

    # the concrete/oracle path is certified infeasible by the atom guard
    aut_l, _, _ = build_automata(left, right, reg, lang="gkat", solver=solver)
    with pytest.raises(OracleLimitError):
        concretize_full(aut_l, reg)
    with capsys.disabled():
        report(5, f"size 200 / 1000 tests in {elapsed:.1f}s, "
                  f"peak {peak / 1e6:.0f}MB, {solver}")


# -- criterion 6: early termination ---------------------------------------------------------

def test_criterion_6_early_termination(solver, capsys):
    reg_cfg = GenConfig(program_size=8, test_count=4, action_count=4,
                        rewrite_steps=0, bexp_size=2, max_depth=5)
    checked = 0
    full_total = 0
    materialized_total = 0
    case = -1
    while checked < 100:
        case += 1
        reg, base, _ = gen_pair(40_000 + case, reg_cfg)
        # a dead base makes both sides empty-language; the defect must be
        # observable, so only live bases qualify
        probe_aut, _, probe_handle = build_automata(base, base, reg,
                                                    lang="gkat", solver=solver)
        probe = CheckSession(probe_aut, probe_aut, probe_handle)
        if probe.is_dead(0, probe_aut.start):
            continue
        if case % 2 == 0:
            left = seq(act(0), base)
            right = seq(act(1), base)
        else:
            guard = bexp.test(case % 4)
            left = seq(btest(guard), base)
            right = seq(btest(bnot(guard)), base)
        aut_l, aut_r, handle = build_automata(left, right, reg, lang="gkat",
                                              solver=solver)
        session = CheckSession(aut_l, aut_r, handle)
        verdict = equiv_symbolic(session)
        assert not verdict.equivalent, case
        materialized = aut_l.materialized + aut_r.materialized
        bound = (2 + len(aut_l.delta(aut_l.start)) + len(aut_r.delta(aut_r.start))
                 + session.dead_visited)
        assert materialized <= bound, (case, materialized, bound)
        # versus the oracle path, which materializes the full automata
        aut_l2, aut_r2, _ = build_automata(left, right, reg, lang="gkat",
                                           solver=solver)
        full = (concretize_full(aut_l2, reg).n_states
                + concretize_full(aut_r2, reg).n_states)
        full_total += full
        materialized_total += materialized
        checked += 1
    assert checked == 100
    assert materialized_total < full_total
    with capsys.disabled():
        report(6, f"{checked} start-defect mutants, materialized "
                  f"{materialized_total} vs full {full_total}, {solver}")


# -- criterion 7: invariant suites --------------------------------------------------------------

def test_criterion_7_invariants(solver, capsys):
    # (a) disjointedness + total coverage on every materialized state of a
    # mixed batch (verification hooks raise on any violation)
    gk = GenConfig(program_size=12, test_count=4, action_count=3,
                   rewrite_steps=4, bexp_size=2, max_depth=5)
    cf = CfGenConfig(program_size=10, test_count=3, action_count=3,
                     ind_vars=1, values=3, bexp_size=2, labels=1, gotos=2)
    states = 0
    for seed in range(40):
        reg, left, right = gen_pair(seed, gk)
        verdict, session = check_exps(left, right, reg, lang="gkat",
                                      solver=solver, verify=True)
        states += verdict.states
    for seed in range(40):
        reg, p1 = gen_cf_program(seed, cf)
        _, p2 = gen_cf_program(50_000 + seed, cf, registry=reg, label_prefix="m")
        verdict, _ = check_exps(p1, p2, reg, lang="cfgkat", solver=solver,
                                verify=True)
        states += verdict.states
    assert states > 0

    # (b) solver agrees with atom enumeration on 500 random formulas
    reg4 = Registry()
    for i in range(4):
        reg4.add_test(f"t{i + 1}")
    handle = SolverHandle(reg4, solver)
    rng = random.Random(97)
    for _ in range(500):
        b = random_pure_bexp(rng, 4, rng.randint(1, 8))
        assert handle.is_zero(b) == (not sat_atoms(b, reg4))

    # (c) unfolding identity on 100 random bodies with break/continue
    rng = random.Random(131)
    for k in range(100):
        reg = build_registry(2, 2)

        def gen_body(depth, protected=True):
            roll = rng.random()
            if depth == 0 or roll < 0.4:
                leaf = rng.random()
                if leaf < 0.22:
                    return syntax.BREAK_E if rng.random() < 0.5 else syntax.CONTINUE_E
                if leaf < 0.65:
                    return act(rng.randrange(2))
                return btest(bexp.test(rng.randrange(2)))
            if roll < 0.7:
                return seq(gen_body(depth - 1), gen_body(depth - 1))
            return syntax.if_(bexp.test(rng.randrange(2)),
                              gen_body(depth - 1), gen_body(depth - 1))

        body = gen_body(2)
        guard = bexp.test(rng.randrange(2))
        loop = syntax.while_(guard, body)
        unrolled = syntax.if_(guard, syntax.unfold(body, loop), syntax.SKIP)
        verdict, _ = check_exps(seq(loop, RETURN_E), seq(unrolled, RETURN_E),
                                reg, lang="cfgkat", solver=solver)
        assert verdict.equivalent, k
    with capsys.disabled():
        report(7, f"state invariants, 500 formula agreements, "
                  f"100 unfolding identities, {solver}")


def test_generated_pairs_full_scale():
    # 1000 seeded pairs at size 50 with 10 tests all come back equivalent
    cfg = GenConfig(program_size=50, test_count=10, action_count=5,
                    rewrite_steps=10, bexp_size=3)
    t0 = time.perf_counter()
    for seed in range(1000):
        reg, left, right = gen_pair(seed, cfg)
        verdict, _ = check_exps(left, right, reg, lang="gkat", solver="sat")
        assert verdict.equivalent, seed
    print(f"generator soundness: 1000/1000 equivalent "
          f"({time.perf_counter() - t0:.1f}s)")


# -- criterion 8: determinism across backends ------------------------------------------------------

def test_criterion_8_backend_determinism(capsys):
    gk = GenConfig(program_size=10, test_count=4, action_count=4,
                   rewrite_steps=4, bexp_size=2, max_depth=5)
    cf = CfGenConfig(program_size=8, test_count=3, action_count=3,
                     ind_vars=1, values=3, bexp_size=2, labels=1, gotos=1)
    compared = 0
    for seed in range(80):
        reg, left, right = gen_pair(60_000 + seed, gk)
        pairs = [("gkat", reg, left, right),
                 ("gkat", reg, left, mutate(right, seed, reg))]
        for lang, r, a, b in pairs:
            verdicts = {}
            for solver in ("sat", "bdd"):
                for mode in ("trace", "bisim"):
                    v, _ = check_exps(a, b, r, lang=lang, solver=solver, mode=mode)
                    verdicts.setdefault(mode, set()).add(v.equivalent)
            assert all(len(vs) == 1 for vs in verdicts.values()), seed
            compared += 2
    for seed in range(20):
        reg, p1 = gen_cf_program(70_000 + seed, cf)
        _, p2 = gen_cf_program(80_000 + seed, cf, registry=reg, label_prefix="m")
        outcomes = set()
        for solver in ("sat", "bdd"):
            v, _ = check_exps(p1, p2, reg, lang="cfgkat", solver=solver)
            outcomes.add(v.equivalent)
        assert len(outcomes) == 1, seed
        compared += 1
    assert compared >= 200
    with capsys.disabled():
        report(8, f"{compared} checks verdict-identical under sat and bdd")
