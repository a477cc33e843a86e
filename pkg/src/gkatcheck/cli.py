"""Command-line driver: a thin client over the HTTP service.

`check` posts the two program texts to the service (an in-process ASGI
transport by default, a remote server with --url) and maps the response
to the exit-code contract: 0 equivalent, 1 inequivalent, 2 usage or
parse error, 3 internal or solver error. `serve` runs the HTTP service;
`bench` runs the synthetic benchmark locally and writes a CSV.
"""

from __future__ import annotations

import argparse
import asyncio
import sys

import httpx


def _post_check(url: str | None, payload: dict) -> httpx.Response:
    if url:
        with httpx.Client(base_url=url, timeout=600.0) as client:
            return client.post("/check", json=payload)

    async def go() -> httpx.Response:
        from .service import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://gkatcheck.local",
                                     timeout=None) as client:
            return await client.post("/check", json=payload)

    return asyncio.run(go())


def _parse_init(pairs) -> dict:
    init = {}
    for item in pairs or ():
        name, _, value = item.partition("=")
        if not name or not value.lstrip("-").isdigit():
            raise SystemExit(f"bad --init {item!r}; expected name=value")
        init[name] = int(value)
    return init


def cmd_check(args) -> int:
    import sys as _sys
    _sys.setrecursionlimit(100_000)
    try:
        left = open(args.left, encoding="utf-8").read()
        right = open(args.right, encoding="utf-8").read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = {
        "left": left,
        "right": right,
        "lang": args.lang,
        "mode": args.mode,
        "solver": args.solver,
        "init": _parse_init(args.init),
        "witness": args.witness,
        "stats": args.stats,
        "dump_automaton": args.dump_automaton is not None,
    }
    resp = _post_check(args.url, payload)
    if resp.status_code == 422:
        detail = resp.json().get("detail", {})
        errors = detail.get("errors") if isinstance(detail, dict) else None
        for e in errors or [resp.text]:
            print(f"error: {e}", file=sys.stderr)
        return 2
    if resp.status_code != 200:
        print(f"error: {resp.text}", file=sys.stderr)
        return 3
    body = resp.json()
    print(body["report"])
    if args.dump_automaton and body.get("dump"):
        with open(args.dump_automaton, "w", encoding="utf-8") as fh:
            fh.write(body["dump"] + "\n")
    return body["exit_code"]


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_bench(args) -> int:
    sys.setrecursionlimit(100_000)
    from .genbench import BenchConfig, run_bench

    cfg = BenchConfig(
        sizes=tuple(args.sizes),
        cases_per_size=args.cases,
        test_count=args.tests,
        action_count=args.actions,
        rewrite_steps=args.rewrites,
        bexp_size=args.bexp_size,
        solver=args.solver,
        mode=args.mode,
        timeout_s=args.timeout,
        seed=args.seed,
    )
    report = run_bench(cfg)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    for size, stats in report.buckets().items():
        mean = stats["mean_ms"]
        mean_s = f"{mean:.1f}ms" if mean is not None else "-"
        print(f"size {size}: {stats['cases']} cases, mean {mean_s}, "
              f"timeouts {stats['timeouts']}, peak {stats['peak_kb']:.0f}KiB")
    print(f"wrote {args.out}")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gkatcheck")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="decide equivalence of two programs")
    check.add_argument("left")
    check.add_argument("right")
    check.add_argument("--mode", choices=["trace", "bisim"], default="trace")
    check.add_argument("--solver", choices=["sat", "bdd"], default="sat")
    check.add_argument("--lang", choices=["gkat", "cfgkat"], default="cfgkat")
    check.add_argument("--witness", action="store_true")
    check.add_argument("--stats", action="store_true")
    check.add_argument("--dump-automaton", metavar="PATH", default=None)
    check.add_argument("--init", action="append", metavar="VAR=VALUE",
                       help="starting indicator value (default 0)")
    check.add_argument("--url", default=None,
                       help="use a running server instead of in-process")
    check.set_defaults(fn=cmd_check)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(fn=cmd_serve)

    bench = sub.add_parser("bench", help="synthetic benchmark, CSV output")
    bench.add_argument("--sizes", type=int, nargs="+", default=[10, 50, 100])
    bench.add_argument("--cases", type=int, default=10)
    bench.add_argument("--tests", type=int, default=10)
    bench.add_argument("--actions", type=int, default=10)
    bench.add_argument("--rewrites", type=int, default=10)
    bench.add_argument("--bexp-size", type=int, default=3)
    bench.add_argument("--solver", choices=["sat", "bdd"], default="sat")
    bench.add_argument("--mode", choices=["trace", "bisim"], default="trace")
    bench.add_argument("--timeout", type=float, default=60.0)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default="bench.csv")
    bench.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
