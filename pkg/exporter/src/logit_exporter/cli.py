"""CLI: export --model <name> --dataset <name> --out-logits ... --out-labels ..."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ExporterError
from .export import export
from .manifest import DATASETS, MODELS, ExportManifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logit-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="run a pretrained classifier over a test set")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--dataset", required=True, choices=DATASETS)
    p.add_argument("--out-logits", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--data-root", help="directory holding the image folders")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = ExportManifest(
            model=args.model,
            dataset=args.dataset,
            out_logits=args.out_logits,
            out_labels=args.out_labels,
            batch_size=args.batch_size,
            data_root=args.data_root,
        )
        record = export(manifest)
    except (ExporterError, ValueError, OSError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    print(json.dumps(record, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
