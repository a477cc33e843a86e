"""Random program generation, sound rewriting, mutation, benchmarking.

Equivalent pairs come from rewriting a random guarded program with a
random sequence of sound identities applied at random subterm positions,
so the pair is equivalent by construction and every run is reproducible
from its seed. Mutants apply one semantic perturbation and are only
candidate-inequivalent; differential suites take the oracle's verdict as
ground truth.
"""

from __future__ import annotations

import csv
import io
import random
import statistics
import time
import tracemalloc
from dataclasses import dataclass, field
from typing import Optional

from . import bexp, syntax
from .bexp import BExp, Registry
from .equivalence import CheckTimeout
from .pipeline import check_exps
from .syntax import Exp


def build_registry(test_count: int, action_count: int, ind_vars: int = 0,
                   values: int = 1) -> Registry:
    registry = Registry()
    for i in range(test_count):
        registry.add_test(f"t{i + 1}")
    for i in range(action_count):
        registry.add_action(f"p{i + 1}")
    for i in range(ind_vars):
        registry.add_ind_var(f"x{i + 1}")
    for v in range(values):
        registry.add_value(v)
    return registry


@dataclass
class GenConfig:
    program_size: int = 30
    test_count: int = 4
    action_count: int = 4
    rewrite_steps: int = 8
    bexp_size: int = 3
    max_depth: int = 64


def gen_bexp(rng: random.Random, registry: Registry, size: int) -> BExp:
    if size <= 1 or not registry.tests:
        roll = rng.random()
        if not registry.tests or roll < 0.05:
            return rng.choice((bexp.ZERO, bexp.ONE))
        return bexp.test(rng.randrange(len(registry.tests)))
    op = rng.random()
    if op < 0.4:
        return bexp.band(gen_bexp(rng, registry, size // 2),
                         gen_bexp(rng, registry, size - size // 2))
    if op < 0.8:
        return bexp.bor(gen_bexp(rng, registry, size // 2),
                        gen_bexp(rng, registry, size - size // 2))
    return bexp.bnot(gen_bexp(rng, registry, size - 1))


def gen_program(rng: random.Random, registry: Registry, cfg: GenConfig) -> Exp:
    """Uniform-ish generation over the guarded grammar under a size budget."""

    def go(budget: int, depth: int) -> Exp:
        if budget <= 1 or depth >= cfg.max_depth:
            if rng.random() < 0.7 and registry.actions:
                return syntax.act(rng.randrange(len(registry.actions)))
            return syntax.btest(gen_bexp(rng, registry, cfg.bexp_size))
        roll = rng.random()
        if roll < 0.45:
            split = rng.randint(1, budget - 1)
            return syntax.seq(go(split, depth + 1), go(budget - split, depth + 1))
        if roll < 0.75:
            split = rng.randint(1, max(1, budget - 2))
            return syntax.if_(gen_bexp(rng, registry, cfg.bexp_size),
                              go(split, depth + 1),
                              go(max(1, budget - 1 - split), depth + 1))
        return syntax.while_(gen_bexp(rng, registry, cfg.bexp_size),
                             go(budget - 1, depth + 1))

    return go(cfg.program_size, 0)


# ---------------------------------------------------------------------------
# Sound rewrites. Each takes the node at a position and returns the
# replacement, or None when the shape does not apply.
# ---------------------------------------------------------------------------


def _rw_guard_flip(e, rng, registry, cfg):
    if e.tag == syntax.IF:
        return syntax.if_(bexp.bnot(e.guard), e.right, e.left)
    return None


def _rw_branch_idem_fold(e, rng, registry, cfg):
    if e.tag == syntax.IF and e.left is e.right:
        return e.left
    return None


def _rw_branch_idem_unfold(e, rng, registry, cfg):
    if e.tag in (syntax.TEST, syntax.ACT, syntax.SEQ, syntax.IF, syntax.WHILE):
        return syntax.if_(gen_bexp(rng, registry, cfg.bexp_size), e, e)
    return None


def _rw_guard_absorb_unfold(e, rng, registry, cfg):
    if e.tag == syntax.IF:
        return syntax.if_(e.guard, syntax.seq(syntax.btest(e.guard), e.left), e.right)
    return None


def _rw_guard_absorb_fold(e, rng, registry, cfg):
    if (e.tag == syntax.IF and e.left.tag == syntax.SEQ
            and e.left.left.tag == syntax.TEST and e.left.left.guard is e.guard):
        return syntax.if_(e.guard, e.left.right, e.right)
    return None


def _rw_seq_assoc_left(e, rng, registry, cfg):
    if e.tag == syntax.SEQ and e.left.tag == syntax.SEQ:
        return syntax.seq(e.left.left, syntax.seq(e.left.right, e.right))
    return None


def _rw_seq_assoc_right(e, rng, registry, cfg):
    if e.tag == syntax.SEQ and e.right.tag == syntax.SEQ:
        return syntax.seq(syntax.seq(e.left, e.right.left), e.right.right)
    return None


def _rw_right_distrib(e, rng, registry, cfg):
    if e.tag == syntax.SEQ and e.left.tag == syntax.IF:
        br = e.left
        return syntax.if_(br.guard, syntax.seq(br.left, e.right),
                          syntax.seq(br.right, e.right))
    return None


def _rw_right_distrib_fold(e, rng, registry, cfg):
    if (e.tag == syntax.IF and e.left.tag == syntax.SEQ
            and e.right.tag == syntax.SEQ and e.left.right is e.right.right):
        return syntax.seq(syntax.if_(e.guard, e.left.left, e.right.left),
                          e.left.right)
    return None


def _rw_skip_intro_left(e, rng, registry, cfg):
    return syntax.seq(syntax.SKIP, e)


def _rw_skip_elim_left(e, rng, registry, cfg):
    if e.tag == syntax.SEQ and e.left is syntax.SKIP:
        return e.right
    return None


def _rw_skip_intro_right(e, rng, registry, cfg):
    return syntax.seq(e, syntax.SKIP)


def _rw_skip_elim_right(e, rng, registry, cfg):
    if e.tag == syntax.SEQ and e.right is syntax.SKIP:
        return e.left
    return None


def _rw_loop_unroll(e, rng, registry, cfg):
    # valid in the pure guarded fragment (no break/continue in the body)
    if e.tag == syntax.WHILE:
        return syntax.if_(e.guard, syntax.seq(e.left, e), syntax.SKIP)
    return None


REWRITES = (
    _rw_guard_flip,
    _rw_branch_idem_fold,
    _rw_branch_idem_unfold,
    _rw_guard_absorb_unfold,
    _rw_guard_absorb_fold,
    _rw_seq_assoc_left,
    _rw_seq_assoc_right,
    _rw_right_distrib,
    _rw_right_distrib_fold,
    _rw_skip_intro_left,
    _rw_skip_elim_left,
    _rw_skip_intro_right,
    _rw_skip_elim_right,
    _rw_loop_unroll,
)


def _positions(e: Exp) -> list:
    out = [()]
    for i, c in enumerate(syntax.children(e)):
        out.extend((i,) + p for p in _positions(c))
    return out


def _subterm(e: Exp, path: tuple) -> Exp:
    for i in path:
        e = syntax.children(e)[i]
    return e


def _replace(e: Exp, path: tuple, new: Exp) -> Exp:
    if not path:
        return new
    i = path[0]
    kids = syntax.children(e)
    kids[i] = _replace(kids[i], path[1:], new)
    if e.tag == syntax.SEQ:
        return syntax.seq(kids[0], kids[1])
    if e.tag == syntax.UNFOLD:
        return syntax.unfold(kids[0], kids[1])
    if e.tag == syntax.IF:
        return syntax.if_(e.guard, kids[0], kids[1])
    return syntax.while_(e.guard, kids[0])


def rewrite_once(e: Exp, rng: random.Random, registry: Registry,
                 cfg: GenConfig) -> Exp:
    """Apply one applicable sound rewrite at a random position.

    Growth is budgeted: a rewrite that would push the tree past twice the
    configured program size is skipped, so duplicating rules (branch
    idempotence, loop unrolling) stay at desk scale.
    """
    limit = max(2 * cfg.program_size, cfg.program_size + 40)
    candidates = []
    for path in _positions(e):
        node = _subterm(e, path)
        for rule in REWRITES:
            if rule(node, rng, registry, cfg) is not None:
                candidates.append((path, rule))
    rng.shuffle(candidates)
    total = syntax.size(e)
    for path, rule in candidates:
        node = _subterm(e, path)
        new = rule(node, rng, registry, cfg)
        if new is None:
            continue
        if total - syntax.size(node) + syntax.size(new) > limit:
            continue
        return _replace(e, path, new)
    return e


def gen_pair(seed: int, cfg: GenConfig):
    """A provably-equivalent program pair: (registry, base, rewritten)."""
    rng = random.Random(seed)
    registry = build_registry(cfg.test_count, cfg.action_count)
    base = gen_program(rng, registry, cfg)
    derived = base
    for _ in range(cfg.rewrite_steps):
        derived = rewrite_once(derived, rng, registry, cfg)
    return registry, base, derived


# ---------------------------------------------------------------------------
# Mutation: one semantic perturbation, guaranteed to change the tree.
# ---------------------------------------------------------------------------


def mutate(e: Exp, seed: int, registry: Registry) -> Exp:
    rng = random.Random(seed)
    candidates = []
    for path in _positions(e):
        node = _subterm(e, path)
        if node.tag in (syntax.IF, syntax.WHILE):
            candidates.append((path, "flip-guard"))
        if node.tag == syntax.ACT and len(registry.actions) > 1:
            candidates.append((path, "swap-action"))
        if node.tag == syntax.SEQ:
            candidates.append((path, "drop-left"))
            candidates.append((path, "drop-right"))
    if not candidates:
        return syntax.seq(e, syntax.act(0) if registry.actions else syntax.btest(bexp.ZERO))
    path, kind = rng.choice(candidates)
    node = _subterm(e, path)
    if kind == "flip-guard":
        if node.tag == syntax.IF:
            new = syntax.if_(bexp.bnot(node.guard), node.left, node.right)
        else:
            new = syntax.while_(bexp.bnot(node.guard), node.left)
    elif kind == "swap-action":
        other = rng.choice([i for i in range(len(registry.actions))
                            if i != node.action])
        new = syntax.act(other)
    elif kind == "drop-left":
        new = node.right
    else:
        new = node.left
    return _replace(e, path, new)


# ---------------------------------------------------------------------------
# Control-flow program generation (for differential suites).
# ---------------------------------------------------------------------------


@dataclass
class CfGenConfig:
    program_size: int = 12
    test_count: int = 3
    action_count: int = 3
    ind_vars: int = 1
    values: int = 3
    bexp_size: int = 2
    labels: int = 1
    gotos: int = 1


def gen_cf_program(seed: int, cfg: CfGenConfig, registry: Registry = None,
                   label_prefix: str = "l"):
    """A random well-formed control-flow program: (registry, exp).

    Passing a registry reuses its tests/actions/variables so two programs
    can be checked against each other; label_prefix keeps label names
    distinct between the two sides.
    """
    rng = random.Random(seed)
    if registry is None:
        registry = build_registry(cfg.test_count, cfg.action_count,
                                  cfg.ind_vars, cfg.values)

    def guard(size: int) -> BExp:
        if cfg.ind_vars and rng.random() < 0.35:
            var = rng.randrange(cfg.ind_vars)
            return bexp.ind(var, rng.randrange(cfg.values))
        return gen_bexp(rng, registry, size)

    def go(budget: int, protected: bool) -> Exp:
        if budget <= 1:
            roll = rng.random()
            if protected and roll < 0.15:
                return rng.choice((syntax.BREAK_E, syntax.CONTINUE_E))
            if cfg.ind_vars and roll < 0.4:
                return syntax.assign(rng.randrange(cfg.ind_vars),
                                     rng.randrange(cfg.values))
            if roll < 0.8 and registry.actions:
                return syntax.act(rng.randrange(len(registry.actions)))
            return syntax.btest(guard(cfg.bexp_size))
        roll = rng.random()
        if roll < 0.45:
            split = rng.randint(1, budget - 1)
            return syntax.seq(go(split, protected), go(budget - split, protected))
        if roll < 0.8:
            split = rng.randint(1, max(1, budget - 2))
            return syntax.if_(guard(cfg.bexp_size), go(split, protected),
                              go(max(1, budget - 1 - split), protected))
        return syntax.while_(guard(cfg.bexp_size), go(budget - 1, True))

    body = go(cfg.program_size, False)

    label_ids = []
    for i in range(cfg.labels):
        lid = registry.add_label(f"{label_prefix}{i + 1}")
        label_ids.append(lid)
        paths = _positions(body)
        path = paths[rng.randrange(len(paths))]
        body = _replace(body, path, syntax.seq(syntax.label(lid), _subterm(body, path)))
    if label_ids:
        for _ in range(cfg.gotos):
            paths = _positions(body)
            path = paths[rng.randrange(len(paths))]
            target = rng.choice(label_ids)
            body = _replace(body, path,
                            syntax.seq(syntax.goto(target), _subterm(body, path)))
    return registry, syntax.seq(body, syntax.RETURN_E)


# ---------------------------------------------------------------------------
# Benchmark harness.
# ---------------------------------------------------------------------------


@dataclass
class BenchConfig:
    sizes: tuple = (10, 50, 100)
    cases_per_size: int = 10
    test_count: int = 10
    action_count: int = 10
    rewrite_steps: int = 10
    bexp_size: int = 3
    solver: str = "sat"
    mode: str = "trace"
    timeout_s: Optional[float] = 60.0
    seed: int = 0
    track_memory: bool = True


@dataclass
class BenchCase:
    seed: int
    size: int
    tests: int
    bexp_size: int
    verdict: str
    runtime_ms: float
    states: int
    solver_queries: int
    peak_kb: float


@dataclass
class BenchReport:
    cases: list = field(default_factory=list)

    def buckets(self) -> dict:
        out: dict = {}
        for size in sorted({c.size for c in self.cases}):
            runs = [c for c in self.cases if c.size == size]
            times = [c.runtime_ms for c in runs if c.verdict != "timeout"]
            out[size] = {
                "cases": len(runs),
                "timeouts": sum(1 for c in runs if c.verdict == "timeout"),
                "mean_ms": statistics.mean(times) if times else None,
                "median_ms": statistics.median(times) if times else None,
                "peak_kb": max((c.peak_kb for c in runs), default=0.0),
                "mean_queries": statistics.mean(
                    [c.solver_queries for c in runs]) if runs else None,
            }
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["seed", "size", "tests", "bexp_size", "verdict",
                    "runtime_ms", "states", "solver_queries"])
        for c in self.cases:
            w.writerow([c.seed, c.size, c.tests, c.bexp_size, c.verdict,
                        f"{c.runtime_ms:.3f}", c.states, c.solver_queries])
        return buf.getvalue()


def run_bench(cfg: BenchConfig) -> BenchReport:
    report = BenchReport()
    case_seed = cfg.seed
    for size in cfg.sizes:
        for _ in range(cfg.cases_per_size):
            case_seed += 1
            gen_cfg = GenConfig(program_size=size, test_count=cfg.test_count,
                                action_count=cfg.action_count,
                                rewrite_steps=cfg.rewrite_steps,
                                bexp_size=cfg.bexp_size)
            registry, left, right = gen_pair(case_seed, gen_cfg)
            if cfg.track_memory:
                tracemalloc.start()
            start = time.perf_counter()
            try:
                verdict, session = check_exps(
                    left, right, registry, lang="gkat", mode=cfg.mode,
                    solver=cfg.solver, deadline_s=cfg.timeout_s)
                outcome = "equivalent" if verdict.equivalent else "inequivalent"
                states = verdict.states
                queries = verdict.solver_queries
            except CheckTimeout:
                outcome = "timeout"
                states = 0
                queries = 0
            runtime_ms = (time.perf_counter() - start) * 1000.0
            peak_kb = 0.0
            if cfg.track_memory:
                _, peak = tracemalloc.get_traced_memory()
                tracemalloc.stop()
                peak_kb = peak / 1024.0
            report.cases.append(BenchCase(
                seed=case_seed, size=size, tests=cfg.test_count,
                bexp_size=cfg.bexp_size, verdict=outcome,
                runtime_ms=runtime_ms, states=states,
                solver_queries=queries, peak_kb=peak_kb))
    return report
