"""export-logits command line entry point."""

from __future__ import annotations

import argparse
import sys

from .export import ExportError, ExportJob, run_export
from .formats import ExportFormatError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-logits",
        description="Run a pretrained point-cloud classifier over a manifest "
        "and write LGT1 source logits",
    )
    parser.add_argument("--model", required=True,
                        help="checkpoint path, or stub:<n_classes> for testing")
    parser.add_argument("--manifest", required=True, help="JSONL cloud manifest")
    parser.add_argument("--out", required=True, help="output LGT1 path")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--classes", type=int, default=None,
                        help="expected class count; mismatch aborts")
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        model=args.model, manifest=args.manifest, out=args.out,
        device=args.device, expected_classes=args.classes, batch_size=args.batch_size,
    )
    try:
        sidecar = run_export(job)
    except (ExportError, ExportFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"exported {sidecar['n_samples']} x {sidecar['n_classes']} logits -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
