"""HTTP face of the checker: request/response models and endpoints."""

from __future__ import annotations

from typing import Dict, List, Literal, Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .bexp import InputError, Registry, format_atom
from .equivalence import CheckTimeout
from .parser import ParseError, parse_exp
from .pipeline import check_sources
from .solvers import InternalError, SolverError
from .syntax import well_formed

app = FastAPI(title="gkatcheck", version="0.1.0")


class CheckRequest(BaseModel):
    left: str
    right: str
    lang: Literal["gkat", "cfgkat"] = "cfgkat"
    mode: Literal["trace", "bisim"] = "trace"
    solver: Literal["sat", "bdd"] = "sat"
    init: Dict[str, int] = Field(default_factory=dict)
    witness: bool = False
    stats: bool = False
    dump_automaton: bool = False


class WitnessStep(BaseModel):
    atom: str
    action: str


class WitnessModel(BaseModel):
    steps: List[WitnessStep]
    tail_atom: Optional[str] = None
    condition: str


class StatsModel(BaseModel):
    states: int
    solver_queries: int
    dead_checks: int


class CheckResponse(BaseModel):
    verdict: Literal["equivalent", "inequivalent"]
    exit_code: int
    report: str
    witness: Optional[WitnessModel] = None
    stats: Optional[StatsModel] = None
    dump: Optional[str] = None


class ParseRequest(BaseModel):
    source: str
    lang: Literal["gkat", "cfgkat"] = "cfgkat"


class ParseResponse(BaseModel):
    ok: bool
    errors: List[str] = Field(default_factory=list)


def _input_error(exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=422,
                        content={"detail": {"errors": [str(exc)], "exit_code": 2}})


def _internal_error(exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=500,
                        content={"detail": {"errors": [str(exc)], "exit_code": 3}})


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/check", response_model=CheckResponse)
def check(req: CheckRequest):
    try:
        result = check_sources(
            req.left, req.right, lang=req.lang, mode=req.mode,
            solver=req.solver, init=req.init or None,
            want_witness=req.witness, want_stats=req.stats,
            want_dump=req.dump_automaton)
    except (ParseError, InputError) as exc:
        return _input_error(exc)
    except (SolverError, InternalError, CheckTimeout, RecursionError) as exc:
        return _internal_error(exc)
    witness_model = None
    if result.witness is not None:
        registry = result.registry
        witness_model = WitnessModel(
            steps=[WitnessStep(atom=format_atom(atom, registry),
                               action=registry.action_name(p))
                   for atom, p in result.witness.steps],
            tail_atom=(format_atom(result.witness.tail_atom, registry)
                       if result.witness.tail_atom is not None else None),
            condition=result.witness.condition)
    stats_model = None
    if req.stats:
        stats_model = StatsModel(states=result.verdict.states,
                                 solver_queries=result.verdict.solver_queries,
                                 dead_checks=result.verdict.dead_checks)
    return CheckResponse(
        verdict="equivalent" if result.verdict.equivalent else "inequivalent",
        exit_code=result.exit_code,
        report=result.report,
        witness=witness_model,
        stats=stats_model,
        dump=result.dump)


@app.post("/parse", response_model=ParseResponse)
def parse(req: ParseRequest):
    registry = Registry()
    try:
        exp = parse_exp(req.source, registry)
    except (ParseError, InputError) as exc:
        return ParseResponse(ok=False, errors=[str(exc)])
    if req.lang == "cfgkat":
        violations = well_formed(exp, registry)
        if violations:
            return ParseResponse(ok=False, errors=[
                f"condition ({c}): {msg}" for c, msg in violations])
    return ParseResponse(ok=True)
