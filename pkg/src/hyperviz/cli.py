"""Command line entry point.

Subcommands: ``ingest`` summarizes a catalog, ``scene`` bakes a scene
file, ``serve`` runs the collaborative service, ``score`` evaluates a
drawn landmark map. Domain errors (bad input data, mismatched ids,
unknown columns) exit with status 2; unexpected failures propagate.
The ``HYPERVIZ_LOG`` environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .catalog import (
    CATEGORICAL,
    Catalog,
    column_stats,
    format_float_shortest,
    parse_catalog,
)
from .errors import HypervizError
from .links import LinkTemplate
from .mapping import ChannelMapping, build_scene, validate_mapping
from .mapscore import load_landmarks_csv, score_map
from .scene_io import write_scene

logger = logging.getLogger("hyperviz.cli")


def _load_catalog(path: str) -> Catalog:
    return parse_catalog(Path(path).read_bytes())


def cmd_ingest(args) -> int:
    catalog = _load_catalog(args.file)
    for name in catalog.column_names:
        col = catalog.column(name)
        stats = column_stats(col)
        missing = catalog.n_rows - stats.n_present
        parts = [f"{name}: {col.kind}", f"present={stats.n_present}", f"missing={missing}"]
        if col.kind == CATEGORICAL:
            parts.append(f"distinct={len(stats.distinct_categories)}")
        elif stats.n_present:
            parts.append(f"min={format_float_shortest(stats.min)}")
            parts.append(f"max={format_float_shortest(stats.max)}")
            parts.append(f"mean={format_float_shortest(stats.mean)}")
        print(" ".join(parts))
    return 0


def cmd_scene(args) -> int:
    catalog = _load_catalog(args.catalog)
    with open(args.mapping, "r", encoding="utf-8") as fh:
        try:
            mapping = ChannelMapping.from_json(json.load(fh))
        except (json.JSONDecodeError, ValueError) as exc:
            raise HypervizError(f"bad mapping file: {exc}") from None
    validate_mapping(catalog, mapping)
    scene = build_scene(catalog, mapping)
    write_scene(scene, args.out)
    print(f"count={scene.count} excluded_rows={scene.excluded_rows}")
    return 0


def cmd_serve(args) -> int:
    from .server import ServeConfig, run_server

    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise HypervizError(f"bind address must be host:port, got {args.bind!r}")
    catalog = _load_catalog(args.catalog)
    template = LinkTemplate(args.link_template) if args.link_template else None
    config = ServeConfig(
        catalog=catalog,
        host=host,
        port=int(port),
        link_template=template,
        budget=args.budget,
        assets_dir=Path(args.assets) if args.assets else None,
    )
    logger.info("serving on %s:%d", config.host, config.port)
    run_server(config)
    return 0


def cmd_score(args) -> int:
    truth = load_landmarks_csv(args.truth)
    drawn = load_landmarks_csv(args.drawn)
    score = score_map(truth, drawn, align=args.align)
    print(json.dumps(score.to_json(), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperviz",
        description="Map feature catalogs onto 3D scenes and explore them together.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="summarize a CSV catalog per column")
    p.add_argument("file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("scene", help="bake a catalog and mapping into a scene file")
    p.add_argument("catalog")
    p.add_argument("--mapping", required=True, help="JSON channel mapping file")
    p.add_argument("-o", "--out", required=True, help="output scene path")
    p.set_defaults(func=cmd_scene)

    p = sub.add_parser("serve", help="run the collaborative session service")
    p.add_argument("--catalog", required=True)
    p.add_argument("--bind", required=True, help="host:port to listen on")
    p.add_argument("--link-template", default=None, help="archive URL template")
    p.add_argument("--budget", type=int, default=200_000, help="served point budget")
    p.add_argument("--assets", default=None, help="viewer asset directory override")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("score", help="score a drawn landmark map against truth")
    p.add_argument("truth")
    p.add_argument("drawn")
    p.add_argument("--align", action="store_true", help="factor out the best global rotation")
    p.set_defaults(func=cmd_score)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("HYPERVIZ_LOG", "WARNING").upper()
    if level not in {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"}:
        level = "WARNING"
    logging.basicConfig(
        level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HypervizError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
