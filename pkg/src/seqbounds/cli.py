"""``seqbounds`` command-line interface.

Each subcommand reads an optional JSON config, applies flag overrides and
writes a deterministic report (sorted-key JSON, or CSV rows).

Exit codes: 0 success, 2 invalid config, 3 bound precondition violated under
``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .commands import COMMANDS, ConfigError, has_invalid_bound, resolve_config

EXIT_OK, EXIT_CONFIG, EXIT_STRICT = 0, 2, 3


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not serializable: {type(o).__name__}")


def to_json(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_default) + "\n"


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v, sort_keys=True, default=_default)
        else:
            out[key] = v
    return out


def to_csv(report) -> str:
    """Tabular rows when the command produces them, otherwise ``key,value`` pairs."""
    result = json.loads(to_json(report))["result"]
    buf = io.StringIO()
    if report["command"] == "simulate":
        cfg = result
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["series_id"] + [f"t{t + 1}" for t in range(cfg["T"])])
        for sid, row in zip(cfg["series_ids"], cfg["values"]):
            w.writerow([sid] + [repr(float(v)) for v in row])
        return buf.getvalue()
    rows = result.get("rows")
    if isinstance(rows, list) and rows and isinstance(rows[0], dict):
        flat = [_flatten(r) for r in rows]
        fields = sorted({k for r in flat for k in r})
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in flat:
            w.writerow(r)
        return buf.getvalue()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in sorted(_flatten(result).items()):
        w.writerow([k, v])
    return buf.getvalue()


def _set_key(cfg, dotted, raw):
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = dotted.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def build_parser():
    parser = argparse.ArgumentParser(prog="seqbounds", description="Generalization bounds for panels of time series.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--strict", action="store_true", help="exit 3 if any bound precondition fails")
        p.add_argument("--workers", type=int, help="worker threads for repetitions")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")
        if name == "advise":
            p.add_argument("--panel", help="panel CSV for data mode")
            p.add_argument("--mode", choices=("data", "oracle"))
    return parser


def _load_config(args):
    cfg = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        _set_key(cfg, key, raw)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    for key in ("panel", "mode"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    if cfg.get("panel") and not Path(cfg["panel"]).exists():
        raise ConfigError(f"panel file {cfg['panel']} does not exist")
    return cfg


def _write_sidecar(path: Path, result) -> None:
    """Phase and process spec next to a simulated panel CSV, as ``load_panel`` expects."""
    meta = {"process_spec": result["process_spec"]}
    if result.get("phase") is not None:
        meta["phase"] = result["phase"]
    path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True, indent=2, default=_default))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, _load_config(args))
        report = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = to_csv(report) if args.format == "csv" else to_json(report)
    if args.out:
        Path(args.out).write_text(text)
        if args.command == "simulate" and args.format == "csv":
            _write_sidecar(Path(args.out), report["result"])
    else:
        sys.stdout.write(text)
    if args.strict and has_invalid_bound(report):
        print("bound precondition violated", file=sys.stderr)
        return EXIT_STRICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
