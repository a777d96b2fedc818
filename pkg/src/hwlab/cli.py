"""
Command line entry point.

    hwlab run <config.json> [--output DIR] [--threads N]
    hwlab verify <suite> [--threads N]

Exit status: 0 success, 2 invalid configuration, 3 NaN or blow-up flag.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, parse_config
from .experiments import STATUS_INVALID, Outcome, clean_json, execute
from .grid import set_fft_workers
from .snapshot import write_snapshot

log = logging.getLogger("hwlab")

LEDGER_HEADER = "t,mass,energy,l2hs,h1l2,linf,N\n"


def summary_bytes(cfg: RunConfig, outcome: Outcome) -> bytes:
    """Deterministic summary.json content: sorted keys, repr floats, no timestamps or paths."""
    doc = {
        "experiment": cfg.experiment.value,
        "config": cfg.model_dump(mode="json", exclude={"output_dir"}),
        "status": outcome.status,
        "result": outcome.summary,
    }
    return (json.dumps(clean_json(doc), sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")


def _write(path: Path, data: bytes) -> None:
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def write_outputs(cfg: RunConfig, outcome: Outcome, out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc.strerror}") from exc
    csv = outcome.ledger.to_csv() if outcome.ledger is not None else LEDGER_HEADER
    _write(out_dir / "ledger.csv", csv.encode("ascii"))
    _write(out_dir / "summary.json", summary_bytes(cfg, outcome))
    eq = cfg.equation
    for i, (t, f) in enumerate(outcome.snapshots):
        write_snapshot(out_dir / f"snap_{i}.hwsfld", f, t, eq.p, eq.sign.value)


def run(cfg: RunConfig, output: str | os.PathLike | None = None) -> int:
    """Execute ``cfg`` and write its artifacts; returns the exit status."""
    outcome = execute(cfg)
    write_outputs(cfg, outcome, Path(output if output is not None else cfg.output_dir))
    return outcome.status


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("HWLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer HWLAB_THREADS=%r", env)
    return 1


def _cmd_run(args) -> int:
    try:
        text = Path(args.config).read_bytes()
    except OSError as exc:
        print(f"cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return STATUS_INVALID
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return STATUS_INVALID
    status = run(cfg, args.output)
    print(f"{cfg.experiment.value}: exit {status}, outputs in {args.output or cfg.output_dir}")
    return status


def _cmd_verify(args) -> int:
    from .acceptance import SUITES, run_suite

    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(sorted(SUITES))}", file=sys.stderr)
        return STATUS_INVALID
    results = run_suite(args.suite)
    for r in results:
        print(r.line())
    return 0 if all(r.status != "FAIL" for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hwlab", description="Half-wave Schrodinger laboratory")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--output", default=None, help="output directory (overrides output_dir)")
    r.add_argument("--threads", type=int, default=None)
    r.set_defaults(func=_cmd_run)
    v = sub.add_parser("verify", help="run a named acceptance suite")
    v.add_argument("suite")
    v.add_argument("--threads", type=int, default=None)
    v.set_defaults(func=_cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    set_fft_workers(_threads(args.threads))
    try:
        return args.func(args)
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
