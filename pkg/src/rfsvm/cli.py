"""Command-line entry points.

Subcommands: ``extract-texture``, ``baseline``, ``rfsvm``, ``inspect-matrix``.
Exit codes: 0 on success, 1 for validation problems with the inputs, 2 for
runtime failures such as SMO non-convergence. All randomness is controlled
by ``--seed`` (which overrides the config file's rng_seed).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import VALIDATION_ERRORS, ConvergenceError
from .harness import emit_report, render_text, run_rfsvm, run_single_view_baseline
from .ingest import RunConfig, assemble_dataset, load_config, load_view
from .rfd import load_matrix_csv
from .texture import extract_corpus


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--labels", required=True, help="labels CSV (sample_id,label)")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="overrides the config rng_seed")
    p.add_argument("--trees", type=int, help="overrides n_trees")
    p.add_argument("--repeats", type=int, help="overrides n_repeats")
    p.add_argument("--train-fraction", type=float, help="overrides train_fraction")
    p.add_argument("--mtry", help="overrides mtry (positive integer or 'sqrt')")
    p.add_argument("--c-grid", help="overrides c_grid, comma-separated")
    p.add_argument("--report", help="write the report to this path")
    p.add_argument("--format", choices=("json", "text"), default="json",
                   help="report file format (default json)")


def _config_from_args(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    mtry = args.mtry
    if mtry is not None and mtry != "sqrt":
        mtry = int(mtry)
    c_grid = None
    if args.c_grid is not None:
        c_grid = tuple(float(x) for x in args.c_grid.split(",") if x.strip())
    return config.with_overrides(
        rng_seed=args.seed,
        n_trees=args.trees,
        n_repeats=args.repeats,
        train_fraction=args.train_fraction,
        mtry=mtry,
        c_grid=c_grid,
    )


def _emit(report, args) -> None:
    sys.stdout.write(render_text(report))
    if args.report:
        emit_report(report, args.report, format=args.format)


def _cmd_extract_texture(args) -> int:
    distances = tuple(int(x) for x in args.distances.split(",") if x.strip())
    report = extract_corpus(
        args.manifest, args.out, distances=distances, quantization_levels=args.levels
    )
    print(f"extracted {report.n_extracted} image(s) -> {args.out}")
    if report.failures:
        for f in report.failures:
            print(f"FAILED {f.sample_id} ({f.image_path}): {f.error}", file=sys.stderr)
        return 1
    return 0


def _cmd_baseline(args) -> int:
    config = _config_from_args(args)
    view = load_view(args.view)
    dataset = assemble_dataset([view], args.labels)
    report = run_single_view_baseline(dataset, view.view_name, config)
    _emit(report, args)
    return 0


def _cmd_rfsvm(args) -> int:
    config = _config_from_args(args)
    views = [load_view(p) for p in args.views]
    dataset = assemble_dataset(views, args.labels)
    report = run_rfsvm(dataset, [v.view_name for v in views], config)
    _emit(report, args)
    return 0


def _cmd_inspect_matrix(args) -> int:
    matrix = load_matrix_csv(args.path)
    v = matrix.values
    n = matrix.n_samples
    off = v[~np.eye(n, dtype=bool)] if n > 1 else np.array([])
    print(f"{args.path}: {n} x {n} dissimilarity matrix")
    print("symmetric: yes")
    print("zero diagonal: yes")
    if off.size:
        print(f"off-diagonal range: [{off.min():.6g}, {off.max():.6g}], mean {off.mean():.6g}")
    ids = ", ".join(matrix.sample_ids[:5]) + ("..." if n > 5 else "")
    print(f"sample ids: {ids}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfsvm",
        description="Multi-view classification via random-forest dissimilarity fusion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-texture", help="extract PFTAS+GLCM features into a view file")
    p.add_argument("--manifest", required=True, help="CSV manifest (sample_id,image_path)")
    p.add_argument("--out", required=True, help="output view CSV")
    p.add_argument("--distances", default="1", help="GLCM distances, comma-separated (default 1)")
    p.add_argument("--levels", type=int, default=256, help="GLCM gray levels (default 256)")
    p.set_defaults(func=_cmd_extract_texture)

    p = sub.add_parser("baseline", help="single-view random-forest accuracy")
    p.add_argument("--view", required=True, help="view CSV file")
    _add_run_options(p)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("rfsvm", help="multi-view fusion pipeline")
    p.add_argument("--views", required=True, nargs="+", help="view CSV files")
    _add_run_options(p)
    p.set_defaults(func=_cmd_rfsvm)

    p = sub.add_parser("inspect-matrix", help="validate and summarize an exported matrix")
    p.add_argument("--in", dest="path", required=True, help="matrix CSV file")
    p.set_defaults(func=_cmd_inspect_matrix)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
