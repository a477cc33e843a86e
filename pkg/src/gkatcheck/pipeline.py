"""End-to-end check: sources or terms in, verdict/report out.

Both sides of a check share one registry (tests and actions must mean the
same thing on both sides) and one solver handle per session. The guarded
("gkat") lane rejects control-flow constructs and runs expression-state
derivatives; the control-flow lane checks well-formedness and runs the
jump-resolved construction from the configured starting indicator state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import syntax
from .bexp import InputError, Registry, initial_state
from .derivative import cf_automaton, gkat_automaton
from .equivalence import (
    CheckSession,
    Verdict,
    Witness,
    equiv_symbolic,
    extract_witness,
    render_report,
)
from .parser import parse_exp
from .solvers import SolverHandle
from .syntax import Exp, WellFormedProgram


@dataclass
class CheckResult:
    verdict: Verdict
    witness: Optional[Witness]
    report: str
    dump: Optional[str]
    registry: Registry

    @property
    def exit_code(self) -> int:
        return 0 if self.verdict.equivalent else 1


def strip_trailing_return(e: Exp) -> Exp:
    """Drop the final return a parsed program carries; the guarded lane
    treats normal termination as acceptance directly."""
    if e.tag == syntax.RETURN:
        return syntax.SKIP
    if e.tag == syntax.SEQ:
        if e.right.tag == syntax.RETURN:
            return e.left
        return syntax.seq(e.left, strip_trailing_return(e.right))
    return e


def build_automata(left: Exp, right: Exp, registry: Registry, *,
                   lang: str = "cfgkat", solver: str = "sat",
                   init: Optional[dict] = None, verify: bool = False):
    """Build both symbolic automata plus the shared solver handle."""
    handle = SolverHandle(registry, solver)
    if lang == "gkat":
        left = strip_trailing_return(left)
        right = strip_trailing_return(right)
        for side, e in (("left", left), ("right", right)):
            if not syntax.is_gkat(e):
                raise InputError(
                    f"{side} program uses control-flow constructs; "
                    f"rerun with the control-flow language")
        aut_l = gkat_automaton(left, registry, handle, verify=verify)
        aut_r = gkat_automaton(right, registry, handle, verify=verify)
    elif lang == "cfgkat":
        prog_l = WellFormedProgram(left, registry)
        prog_r = WellFormedProgram(right, registry)
        pi0 = initial_state(registry, init)
        aut_l = cf_automaton(prog_l, pi0, handle, verify=verify)
        aut_r = cf_automaton(prog_r, pi0, handle, verify=verify)
    else:
        raise InputError(f"unknown language {lang!r}")
    return aut_l, aut_r, handle


def check_exps(left: Exp, right: Exp, registry: Registry, *,
               lang: str = "cfgkat", mode: str = "trace", solver: str = "sat",
               init: Optional[dict] = None, verify: bool = False,
               deadline_s: Optional[float] = None):
    """Run one equivalence query; returns (verdict, session)."""
    aut_l, aut_r, handle = build_automata(
        left, right, registry, lang=lang, solver=solver, init=init, verify=verify)
    session = CheckSession(aut_l, aut_r, handle, mode=mode, deadline_s=deadline_s)
    verdict = equiv_symbolic(session)
    return verdict, session


def check_sources(left_source: str, right_source: str, *,
                  lang: str = "cfgkat", mode: str = "trace", solver: str = "sat",
                  init: Optional[dict] = None,
                  want_witness: bool = False, want_stats: bool = False,
                  want_dump: bool = False, verify: bool = False,
                  deadline_s: Optional[float] = None) -> CheckResult:
    registry = Registry()
    left = parse_exp(left_source, registry)
    right = parse_exp(right_source, registry)
    aut_l, aut_r, handle = build_automata(
        left, right, registry, lang=lang, solver=solver, init=init, verify=verify)
    session = CheckSession(aut_l, aut_r, handle, mode=mode, deadline_s=deadline_s)
    verdict = equiv_symbolic(session)
    witness = extract_witness(session, verdict) if want_witness else None
    dump = None
    if want_dump:
        dump = "\n".join(["# left", aut_l.dump(), "# right", aut_r.dump()])
    report = render_report(verdict, registry, witness=witness, want_stats=want_stats)
    return CheckResult(verdict=verdict, witness=witness, report=report,
                       dump=dump, registry=registry)
