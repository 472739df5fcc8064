"""Command line entry point: ``padiclab <suite> [options]``.

Exit status: 0 when every case passes, 1 when a case fails (the report holds
the counterexample), 2 for an invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time

from .padic import ALLOWED_PRIMES
from .suites import SUITES

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _vector(text: str) -> tuple[int, int, int]:
    parts = [int(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("a vector needs three comma-separated integers")
    return tuple(parts)


def _common(parser: argparse.ArgumentParser, *, depth=2, precision=20, alpha="0.5", epsilon=0.01, trials=100):
    parser.add_argument("--p", type=int, default=5, help="prime in {5, 7, 11, 13}")
    parser.add_argument("--depth", type=int, default=depth)
    parser.add_argument("--precision", type=int, default=precision)
    parser.add_argument("--alpha", type=_float_list, default=_float_list(alpha), help="comma-separated list")
    parser.add_argument("--epsilon", type=float, default=epsilon)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None, help="worker count (fallback: PADICLAB_THREADS)")
    parser.add_argument("--out", default=None, help="report path (stdout when omitted)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--mode", choices=("verify", "diagnose"), default="verify")
    parser.add_argument("--trials", type=int, default=trials)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padiclab", description="Exact p-adic experiments with machine-readable reports.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("contraction", help="exact integral of ||d_lambda u_r w||^-alpha over r")
    _common(sp, depth=1)
    sp.add_argument("--lambda-exp", type=int, default=1, help="k with |lambda|_p = p^k")
    sp.add_argument("--w", type=_vector, action="append", help="vector w11,w12,w21 (repeatable)")

    sp = sub.add_parser("m-alpha", help="measure C2, compute m_alpha and verify the contraction on direction classes")
    _common(sp, alpha="0.3,0.5,0.7,0.9")
    sp.add_argument("--c2", type=float, default=None)

    sp = sub.add_parser("interpolation", help="quadratic sublevel measures")
    _common(sp)
    sp.add_argument("--n", type=_int_list, default=[-4, -3, -2, -1, 0])
    sp.add_argument("--a")
    sp.add_argument("--b")
    sp.add_argument("--c")

    sp = sub.add_parser("bch", help="norm equality of the BCH product on random pairs")
    _common(sp, precision=12, trials=1000)

    sp = sub.add_parser("gauss", help="Gauss decomposition round trips")
    _common(sp, trials=1000)
    sp.add_argument("--level", type=int, default=1)

    sp = sub.add_parser("bourgain", help="localize random regular sets")
    _common(sp, depth=6, alpha="0.8", epsilon=0.01, trials=10)

    sp = sub.add_parser("projection", help="projection theorem scans")
    _common(sp, depth=4, alpha="0.8", epsilon=0.05, trials=1)
    sp.add_argument("--r-depth", type=int, default=2)
    sp.add_argument("--sets", type=lambda s: s.split(","), default=["w12-axis", "w21-axis", "random"])

    sp = sub.add_parser("shear", help="shear selection on random and adversarial sets")
    _common(sp, depth=8, trials=20)
    sp.add_argument("--size", type=int, default=200)

    sp = sub.add_parser("sobolev", help="Sobolev norm properties on SL2(Z/p^n)")
    _common(sp, trials=100)
    sp.add_argument("--level", type=int, default=2)
    sp.add_argument("--d", type=float, default=5.0)

    sp = sub.add_parser("margulis", help="Margulis recursion in the transverse-vector model")
    _common(sp, trials=5)
    sp.add_argument("--ell", type=_int_list, default=[1, 2, 3])
    sp.add_argument("--size", type=int, default=20)

    sp = sub.add_parser("siegel", help="integer kernel bases of random matrices")
    _common(sp, trials=100)
    sp.add_argument("--T", type=int, default=9)

    sp = sub.add_parser("heights", help="product formula and inverse-norm bound")
    _common(sp, trials=1000)
    return ap


def resolve_threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("PADICLAB_THREADS")
        value = int(env) if env else 1
    if value < 1:
        raise ConfigError("thread count must be positive")
    return value


def validate(args) -> None:
    if args.p not in ALLOWED_PRIMES:
        raise ConfigError(f"--p must be one of {ALLOWED_PRIMES}")
    if args.trials < 0:
        raise ConfigError("--trials must be >= 0")
    if args.depth < 0 or args.precision < 1:
        raise ConfigError("depth and precision must be positive")
    if not args.alpha or any(not 0 < a < 1 for a in args.alpha):
        raise ConfigError("every alpha must lie in (0, 1)")
    if args.epsilon <= 0:
        raise ConfigError("--epsilon must be positive")
    if args.command == "contraction" and args.lambda_exp < 1:
        raise ConfigError("--lambda-exp must be >= 1")


def build_report(args, result: dict) -> dict:
    cases = result["cases"]
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("threads", "out", "format")}
    return {
        "schema": SCHEMA_VERSION,
        "command": args.command,
        "config": config,
        "constants": result.get("constants", {}),
        "cases": cases,
        "summary": {
            "n_cases": len(cases),
            "n_failed": sum(1 for c in cases if not c.get("ok", False)),
            "ok": all(c.get("ok", False) for c in cases),
        },
    }


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=1, default=_json_default) + "\n"
    keys = sorted({k for c in report["cases"] for k in c})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for c in report["cases"]:
        w.writerow([json.dumps(c[k], sort_keys=True, default=_json_default) if isinstance(c.get(k), (dict, list))
                    else c.get(k, "") for k in keys])
    return buf.getvalue()


def _json_default(x):
    if isinstance(x, float) and x == float("inf"):
        return "inf"
    return str(x)


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".padiclab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        args.threads = resolve_threads(args.threads)
        validate(args)
    except (ConfigError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    start = time.perf_counter()
    result = SUITES[args.command](args)
    report = build_report(args, result)
    text = render(report, args.format)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    # wall time goes to stderr so that reports stay byte-identical across runs
    print(f"{args.command}: {report['summary']['n_cases']} cases, {report['summary']['n_failed']} failed, "
          f"{time.perf_counter() - start:.2f}s", file=sys.stderr)
    return 0 if report["summary"]["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
