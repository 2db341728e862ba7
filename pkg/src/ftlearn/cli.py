"""Command-line front end: ``ftlearn {thresholds,learn,learn-all,generate,eval}``.

Exit codes: 0 on success (documented skips included), 1 on data or
validation errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .data import Statistic
from .errors import FTLearnError
from .fault_tree import depth, from_json, to_dot, to_json
from .ingestion import balance, dump_csv, load_schema, prepare
from .learner import LearnerConfig, learn, learn_all
from .synthetic import GroundTruth, generate, recovery_report
from .threshold import threshold_all, thresholds_to_json

SUMMARY_HEADER = ["failure", "statistic", "significance", "depth", "gates", "runtime_ms", "status"]


def thread_count() -> int:
    """Worker cap from FTLEARN_THREADS; 0 or unset means one per CPU."""
    raw = os.environ.get("FTLEARN_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise FTLearnError(f"FTLEARN_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise FTLearnError("FTLEARN_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outcomes: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    version: str = __version__

    @classmethod
    def start(cls, command: str, config: dict, paths) -> "RunManifest":
        return cls(command, config, {str(p): sha256_file(p) for p in paths})

    def to_json(self) -> str:
        doc = {"tool": "ftlearn", "version": self.version, "command": self.command,
               "config": self.config, "inputs": self.inputs,
               "outcomes": self.outcomes, "skipped": self.skipped}
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def _write(path, text: str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")


def _learner_config(args, schema) -> LearnerConfig:
    return LearnerConfig.from_dict(
        schema.learner,
        max_inputs=getattr(args, "max_inputs", None),
        min_top_significance=getattr(args, "min_significance", None),
        statistic=getattr(args, "stat", None),
        workers=thread_count(),
    )


def cmd_thresholds(args) -> int:
    schema = load_schema(args.schema)
    config = _learner_config(args, schema)
    data = prepare(args.csv, schema)
    reason = None
    try:
        b = balance(data, args.failure)
        thresholds, skipped = threshold_all(b, args.failure, config.statistic,
                                            workers=config.workers)
    except FTLearnError as exc:
        if args.failure not in data.failures:
            raise
        thresholds, skipped, reason = [], [], str(exc)
    text = thresholds_to_json(args.failure, config.statistic, thresholds, skipped, reason)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    if reason:
        print(f"skipped: {reason}", file=sys.stderr)
    return 0


def _manifest_path(args):
    if args.manifest:
        return args.manifest
    first = args.out_json or args.out_dot
    return f"{first}.manifest.json" if first else None


def cmd_learn(args) -> int:
    schema = load_schema(args.schema)
    config = _learner_config(args, schema)
    manifest = RunManifest.start("learn", {**config.to_dict(), "failure": args.failure},
                                 [args.csv, args.schema])
    data = prepare(args.csv, schema)
    t0 = time.perf_counter()
    try:
        b = balance(data, args.failure)
        tree = learn(b, args.failure, config)
    except FTLearnError as exc:
        if args.failure not in data.failures:
            raise
        manifest.skipped.append({"failure": args.failure, "statistic": config.statistic.value,
                                 "reason": str(exc)})
        print(f"skipped: {exc}")
        path = _manifest_path(args)
        if path:
            manifest.write(path)
        return 0
    runtime = (time.perf_counter() - t0) * 1000.0

    d = depth(tree)
    if args.out_json:
        _write(args.out_json, to_json(tree))
    if args.out_dot:
        _write(args.out_dot, to_dot(tree))
    manifest.outcomes.append({"failure": args.failure, "statistic": config.statistic.value,
                              "significance": tree.significance, "depth": d,
                              "gates": len(tree.gates), "runtime_ms": round(runtime, 3)})
    path = _manifest_path(args)
    if path:
        manifest.write(path)
    print(f"significance {tree.significance:.4f}")
    print(f"depth {d}")
    return 0


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text).strip("_") or "failure"


def cmd_learn_all(args) -> int:
    schema = load_schema(args.schema)
    config = _learner_config(args, schema)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.start("learn-all", config.to_dict(), [args.csv, args.schema])
    data = prepare(args.csv, schema)
    attempts = learn_all(data, config, workers=config.workers)

    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for a in attempts:
            stat = a.statistic.value
            if a.tree is None:
                w.writerow([a.failure, stat, "", "", "", f"{a.runtime_ms:.3f}", "skipped"])
                manifest.skipped.append({"failure": a.failure, "statistic": stat,
                                         "reason": a.reason})
                continue
            d = depth(a.tree)
            stem = f"{_slug(a.failure)}__{stat}"
            _write(out / f"{stem}.json", to_json(a.tree))
            _write(out / f"{stem}.dot", to_dot(a.tree))
            w.writerow([a.failure, stat, repr(a.tree.significance), d, len(a.tree.gates),
                        f"{a.runtime_ms:.3f}", "ok"])
            manifest.outcomes.append({"failure": a.failure, "statistic": stat,
                                      "significance": a.tree.significance, "depth": d,
                                      "gates": len(a.tree.gates),
                                      "runtime_ms": round(a.runtime_ms, 3),
                                      "files": [f"{stem}.json", f"{stem}.dot"]})
    manifest.write(out / "manifest.json")
    ok = sum(a.tree is not None for a in attempts)
    print(f"{len(attempts)} attempts, {ok} trees, {len(attempts) - ok} skipped")
    return 0


def cmd_generate(args) -> int:
    gt = GroundTruth.from_json(Path(args.ground_truth).read_text(encoding="utf-8"))
    if args.rows is not None and args.rows < 0:
        raise FTLearnError("--rows must be non-negative")
    d = generate(gt, args.seed, rows=args.rows)
    schema = gt.schema()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    dump_csv(d, args.out, schema)
    if args.schema_out:
        _write(args.schema_out, json.dumps(schema.to_dict(), indent=2) + "\n")
    print(f"wrote {len(d)} rows to {args.out}")
    return 0


def cmd_eval(args) -> int:
    learned = from_json(Path(args.learned).read_text(encoding="utf-8"))
    gt = GroundTruth.from_json(Path(args.ground_truth).read_text(encoding="utf-8"))
    report = recovery_report(learned, gt)
    sys.stdout.write(report.to_text())
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out_json:
        _write(args.out_json, text)
    else:
        sys.stdout.write(text)
    return 0


def _stat(value: str) -> Statistic:
    try:
        return Statistic(value.lower())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid statistic {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftlearn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ftlearn {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("csv", help="input CSV file")
        sp.add_argument("schema", help="schema config (YAML or JSON)")

    def learner_args(sp):
        sp.add_argument("--max-inputs", type=int, help="maximum gate inputs (default 3)")
        sp.add_argument("--min-significance", type=float,
                        help="top gate must score strictly above this (default 0)")

    stats = [s.value for s in Statistic]
    sp = sub.add_parser("thresholds", help="learn per-sensor thresholds for one failure")
    data_args(sp)
    sp.add_argument("--failure", required=True)
    sp.add_argument("--stat", type=_stat, metavar="{%s}" % ",".join(stats))
    sp.add_argument("--out", help="write JSON here instead of stdout")
    sp.set_defaults(func=cmd_thresholds)

    sp = sub.add_parser("learn", help="learn one fault tree")
    data_args(sp)
    sp.add_argument("--failure", required=True)
    sp.add_argument("--stat", type=_stat, metavar="{%s}" % ",".join(stats))
    learner_args(sp)
    sp.add_argument("--out-dot")
    sp.add_argument("--out-json")
    sp.add_argument("--manifest", help="manifest path (default: next to --out-json/--out-dot)")
    sp.set_defaults(func=cmd_learn)

    sp = sub.add_parser("learn-all", help="learn a tree per failure and statistic")
    data_args(sp)
    learner_args(sp)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_learn_all)

    sp = sub.add_parser("generate", help="sample a CSV from a ground-truth tree")
    sp.add_argument("ground_truth")
    sp.add_argument("--rows", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--schema-out", help="also write a matching schema file")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("eval", help="score a learned tree against a ground truth")
    sp.add_argument("learned")
    sp.add_argument("ground_truth")
    sp.add_argument("--out-json")
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FTLearnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
