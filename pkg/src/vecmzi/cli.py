"""Command-line front end: ``vecmzi run <config>`` and ``vecmzi validate <config>``.

Exit codes: 0 success, 2 config parse error, 3 validation error, 4 runtime
error.  Failures also print a one-line JSON error record to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .config import load_config, validate_config
from .errors import ConfigError, ValidationError, VecmziError
from .runner import execute

OUT_DIR_ENV = "VECMZI_OUT_DIR"

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


def bundled_scenarios() -> dict[str, Path]:
    root = resources.files("vecmzi") / "scenarios"
    return {p.name.removesuffix(".toml"): Path(str(p)) for p in root.iterdir() if p.name.endswith(".toml")}


def resolve_config_path(name_or_path: str) -> Path:
    path = Path(name_or_path)
    if path.is_file():
        return path
    bundled = bundled_scenarios()
    if name_or_path in bundled:
        return bundled[name_or_path]
    raise ConfigError(
        f"no config file {name_or_path!r}; bundled scenarios: {sorted(bundled)}"
    )


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def _resolve_out_dir(args, cfg) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    if cfg.out_dir:
        return Path(cfg.out_dir)
    env = os.environ.get(OUT_DIR_ENV)
    stem = cfg.source_path.stem if cfg.source_path else cfg.scenario
    if env:
        return Path(env) / stem
    return Path("out") / stem


def cmd_run(args) -> int:
    try:
        cfg = load_config(resolve_config_path(args.config))
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), EXIT_PARSE)
    if args.seed is not None:
        cfg.seed = args.seed
    out_dir = _resolve_out_dir(args, cfg)
    try:
        manifest = execute(cfg, out_dir, threads=args.threads)
    except ValidationError as exc:
        return _fail("ValidationError", str(exc), EXIT_VALIDATION)
    except VecmziError as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_RUNTIME)
    print(f"scenario {cfg.scenario} done: {len(manifest.files)} files in {out_dir}")
    for rel, digest, size in manifest.files:
        print(f"  {rel}  {size} bytes  sha256:{digest[:12]}")
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = load_config(resolve_config_path(args.config))
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), EXIT_PARSE)
    violations, warns = validate_config(cfg)
    for w in warns:
        print(f"warning: {w}")
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return _fail("ValidationError", "; ".join(violations), EXIT_VALIDATION)
    print(f"config ok: scenario={cfg.scenario} seed={cfg.seed}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vecmzi",
        description="Vector-beam Mach-Zehnder simulator: run or validate scenario configs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario config (path or bundled name)")
    run_p.add_argument("config", help="config file path or bundled scenario name")
    run_p.add_argument("--out-dir", default=None, help=f"output directory (else config, then ${OUT_DIR_ENV})")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", help="check a config without running it")
    val_p.add_argument("config", help="config file path or bundled scenario name")
    val_p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
