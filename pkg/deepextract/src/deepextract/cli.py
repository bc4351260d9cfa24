"""CLI: export embeddings, and verify emitted files against the format rules."""

from __future__ import annotations

import argparse
import sys

from .extract import extract_deep_view, verify_view_compat
from .extractors import SPECS, SetupError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepextract",
        description="Export pretrained-CNN embeddings into the view-file format",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run a manifest of images through one extractor")
    p.add_argument("--extractor", required=True, choices=sorted(SPECS), help="network name")
    p.add_argument("--manifest", required=True, help="CSV manifest (sample_id,image_path)")
    p.add_argument("--out", required=True, help="output view CSV")
    p.add_argument("--weights-dir", help="directory holding the downloaded checkpoints")
    p.add_argument(
        "--untrained",
        action="store_true",
        help="use fixed-seed random weights (format/dimension smoke runs only)",
    )
    p.add_argument("--batch-size", type=int, default=8)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("verify", help="check a view file against the format rules")
    p.add_argument("--in", dest="path", required=True, help="view CSV to validate")
    p.set_defaults(func=_cmd_verify)
    return parser


def _cmd_extract(args) -> int:
    report = extract_deep_view(
        args.manifest,
        args.extractor,
        args.out,
        weights_dir=args.weights_dir,
        untrained=args.untrained,
        batch_size=args.batch_size,
    )
    print(
        f"extracted {report.n_extracted} image(s) with {report.extractor} "
        f"(d={report.output_dim}) -> {args.out}"
    )
    if report.failures:
        for f in report.failures:
            print(f"FAILED {f.sample_id} ({f.image_path}): {f.error}", file=sys.stderr)
        return 1
    return 0


def _cmd_verify(args) -> int:
    ok, diagnostics = verify_view_compat(args.path)
    if ok:
        print(f"{args.path}: ok")
        return 0
    for d in diagnostics:
        print(f"{args.path}: {d}", file=sys.stderr)
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SetupError as exc:
        print(f"setup error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
