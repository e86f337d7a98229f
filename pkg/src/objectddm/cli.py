"""Command-line front end: ``objectddm {simulate,baseline,evaluate,sweep}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError
from .scene_io import EventFileError, ManifestError, RasterError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

log = logging.getLogger("objectddm")


def _overrides(args) -> dict:
    out = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = harness.parse_value(value.strip())
    if args.seeds is not None:
        out["n_seeds"] = args.seeds
    if args.out is not None:
        out["out"] = str(Path(args.out).resolve())
    return out


def _require_config(args) -> tuple[dict, Path]:
    if not args.config:
        raise ConfigError("--config is required")
    return harness.load_config(args.config)


def cmd_simulate(args, model: str | None = None) -> int:
    doc, base = _require_config(args)
    if model == "baseline" and doc.get("model", "objectddm") != "baseline":
        doc = {k: v for k, v in doc.items() if k != "params"}
    if model is not None:
        doc["model"] = model
    spec = harness.run_spec_from_dict({k: v for k, v in doc.items() if k != "sweep"}, base, _overrides(args))
    index = harness.run_simulations(spec, args.jobs)
    log.info("wrote %d scanpaths, index %s", len(spec.scenes) * spec.n_seeds, index)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    corpora: dict[str, str] = {}
    out = args.out
    if args.config:
        doc, base = harness.load_config(args.config)
        for name, path in doc.get("corpora", {}).items():
            corpora[name] = str(base / path)
        if out is None and "out" in doc:
            out = str(base / doc["out"])
    for item in args.corpus or []:
        name, sep, path = item.partition("=")
        if not sep or not name:
            raise ConfigError(f"--corpus expects name=path, got {item!r}")
        corpora[name] = path
    if not corpora:
        raise ConfigError("no corpora given (use --corpus name=path or a config with 'corpora')")
    if out is None:
        raise ConfigError("--out is required")
    loaded = {name: harness.load_corpus(path) for name, path in corpora.items()}
    harness.evaluate(loaded, out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc, base = _require_config(args)
    spec = harness.sweep_spec_from_dict(doc, base, _overrides(args))
    harness.run_sweep(spec, args.jobs)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="objectddm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds=True):
        p.add_argument("--config", help="JSON run/sweep/evaluation config")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter (repeatable)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        if seeds:
            p.add_argument("--seeds", type=int, help="number of seeds per video")

    common(sub.add_parser("simulate", help="run ObjectDDM (or the config's model) on every scene and seed"))
    common(sub.add_parser("baseline", help="run the random saliency-peak baseline"))
    ev = sub.add_parser("evaluate", help="compute metrics reports and cross-corpus distances")
    common(ev, seeds=False)
    ev.add_argument("--corpus", action="append", metavar="NAME=PATH", help="run directory or corpus JSON")
    common(sub.add_parser("sweep", help="vary one parameter, evaluate each value"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "baseline":
            return cmd_simulate(args, model="baseline")
        if args.command == "evaluate":
            return cmd_evaluate(args)
        return cmd_sweep(args)
    except (ConfigError, ManifestError, EventFileError) as exc:
        print(f"objectddm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RasterError) as exc:
        print(f"objectddm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
