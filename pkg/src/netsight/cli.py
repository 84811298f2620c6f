"""Command-line entry point: analyze, generate, score and query.

Exit codes: 0 success, 1 configuration/schema/scenario problems, 2 I/O or
capture errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__, topology
from .ingest import IngestError
from .knowledge import UnreadableFile, knowledge_digest, load_knowledge
from .pipeline.compose import ATTRIBUTES, AttributeClaim, MissingAccuracy, score_chains
from .pipeline.config import ConfigError, default_chain_config, load_chain_config
from .pipeline.profiles import dumps_line, export_profiles, load_profiles
from .policy import PolicyError, load_policies, report_violations

log = logging.getLogger("netsight")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2
KNOWLEDGE_ENV = "NETSIGHT_KNOWLEDGE_DIR"


def _fail(code: int, msg: str) -> int:
    print(f"netsight: {msg}", file=sys.stderr)
    return code


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_analyze(args: argparse.Namespace) -> int:
    from .pipeline.run import run_pipeline

    pcap = Path(args.pcap)
    if not pcap.is_file():
        return _fail(EXIT_IO, f"{pcap}: no such capture")
    try:
        config = load_chain_config(args.config) if args.config else default_chain_config()
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, f"config: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, f"config: {exc}")
    kdir = args.knowledge_dir or os.environ.get(KNOWLEDGE_ENV) or None
    if kdir is not None and not Path(kdir).is_dir():
        return _fail(EXIT_IO, f"{kdir}: knowledge directory not found")
    policy_path = args.policies
    if policy_path is None and kdir is not None and (Path(kdir) / "policies.json").is_file():
        policy_path = str(Path(kdir) / "policies.json")
    try:
        knowledge = load_knowledge(kdir)
        rules = load_policies(policy_path) if policy_path else []
    except PolicyError as exc:
        return _fail(EXIT_CONFIG, f"policies: {exc}")
    except (UnreadableFile, OSError) as exc:
        return _fail(EXIT_IO, str(exc))

    started = time.time()
    try:
        result = run_pipeline(pcap, config, knowledge, rules)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, f"config: {exc}")
    except MissingAccuracy as exc:
        return _fail(EXIT_CONFIG, f"config: {exc.args[0]}")
    except (IngestError, OSError) as exc:
        return _fail(EXIT_IO, f"{pcap}: {exc}")
    finished = time.time()

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        export_profiles(result.profiles, out / "profiles.ndjson")
        (out / "violations.ndjson").write_text(report_violations(result.violations), encoding="utf-8")
        (out / "topology.json").write_text(
            topology.topology_json(result.l2, result.l3, result.dependencies, result.resiliency), encoding="utf-8")
        (out / "occupancy.ndjson").write_text("".join(dumps_line(o.as_dict()) for o in result.occupancy),
                                              encoding="utf-8")
        manifest = {
            "tool_version": __version__,
            "inputs": [{"path": str(pcap), "sha256": _sha256(pcap)}],
            "config_hash": config.digest,
            "knowledge_hash": knowledge_digest(kdir),
            "policies": policy_path,
            "started": started,
            "finished": finished,
            "stats": result.stats.as_dict(),
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        return _fail(EXIT_IO, f"{out}: {exc}")
    log.info("%d packets, %d profiles, %d violations", result.stats.packets, len(result.profiles),
             len(result.violations))
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    from .trafficgen import (InvalidScenario, SelfCheckFailure, bundled_scenario, generate, load_scenario,
                             registry_rows, verify_sidecar, write_knowledge)

    try:
        if Path(args.scenario).is_file():
            sc = load_scenario(args.scenario)
        else:
            try:
                sc = bundled_scenario(args.scenario)
            except FileNotFoundError:
                return _fail(EXIT_IO, f"{args.scenario}: no such scenario file or bundled scenario")
        gen = generate(sc, args.seed)
        verify_sidecar(gen.pcap, gen.sidecar)
    except (InvalidScenario, SelfCheckFailure) as exc:
        return _fail(EXIT_CONFIG, str(exc))
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "capture.pcap").write_bytes(gen.pcap)
        (out / "labels.json").write_text(gen.sidecar_json(), encoding="utf-8")
        write_knowledge(out / "knowledge", registry_rows(sc), sc.policies)
    except OSError as exc:
        return _fail(EXIT_IO, f"{out}: {exc}")
    log.info("%s seed %d: %d packets", sc.name, args.seed, len(gen.packets))
    return EXIT_OK


def _read_json(path: str):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def cmd_score(args: argparse.Namespace) -> int:
    from .trafficgen.generate import SIDECAR_VERSION

    try:
        profiles = load_profiles(args.profiles)
        sidecar = _read_json(args.labels)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    except ValueError as exc:
        return _fail(EXIT_CONFIG, f"schema: {exc}")
    if not isinstance(sidecar, dict) or sidecar.get("schema_version") != SIDECAR_VERSION:
        return _fail(EXIT_CONFIG, f"schema: {args.labels} is not a version {SIDECAR_VERSION} label sidecar")
    labels = {d["device_key"]: d.get("labels", {}) for d in sidecar.get("devices", [])}
    try:
        claims = [AttributeClaim(p["device_key"], c["attribute"], c["value"], float(c["confidence"]),
                                 c["engine_id"], float(c["ts"]))
                  for p in profiles for c in p.get("claims", [])]
    except (KeyError, TypeError, ValueError) as exc:
        return _fail(EXIT_CONFIG, f"schema: bad claim in {args.profiles}: {exc}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["engine_id", "attribute", "accuracy"])
    for (engine, attribute), acc in score_chains(claims, labels).items():
        w.writerow([engine, attribute, f"{acc:.6f}"])
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    filters = []
    for item in args.attr:
        name, sep, value = item.partition("=")
        if not sep:
            return _fail(EXIT_CONFIG, f"--attr {item!r}: expected name=value")
        if name not in ATTRIBUTES:
            return _fail(EXIT_CONFIG, f"unknown attribute {name!r}; known: {', '.join(sorted(ATTRIBUTES))}")
        filters.append((name, value))
    try:
        profiles = load_profiles(args.profiles)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    except ValueError as exc:
        return _fail(EXIT_CONFIG, f"schema: {exc}")
    for p in sorted(profiles, key=lambda p: p["device_key"]):
        attrs = p.get("attributes", {})
        if all((attrs.get(n) or {}).get("value") == v for n, v in filters):
            sys.stdout.write(dumps_line(p))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netsight", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze a capture into profiles and reports")
    p.add_argument("pcap")
    p.add_argument("--config", help="chain config JSON (default: bundled chain)")
    p.add_argument("--knowledge-dir", help=f"knowledge tables (default: ${KNOWLEDGE_ENV})")
    p.add_argument("--policies", help="policy JSON (default: policies.json in the knowledge dir, if any)")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("generate", help="synthesize a labelled capture from a scenario")
    p.add_argument("scenario", help="scenario JSON path or bundled scenario name (e.g. office-small)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="generated")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="per-engine accuracy of profile claims against a label sidecar")
    p.add_argument("profiles")
    p.add_argument("labels")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("query", help="filter profiles by resolved attributes")
    p.add_argument("profiles")
    p.add_argument("--attr", action="append", default=[], metavar="NAME=VALUE")
    p.set_defaults(func=cmd_query)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
