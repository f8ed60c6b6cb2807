"""Command-line interface: ``gsdimred {fit,transform,synth-bench,residual-report}``.

Exit codes: 0 success, 2 input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import serialize
from .bench import SCENARIOS, run_scenario
from .dataset import DatasetError, center, load_csv, read_csv_matrix, save_csv, standardize
from .eigen import EigenError
from .extract import ExtractionModel, gca, gfr, pca_model
from .family import FamilyError, parse_family
from .orthogonalizer import NumericalError
from .select import gfa, gfs, uffs

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

EPSILON_HELP = (
    "threshold, passed through verbatim: GFR, GFS and PCA compare residual "
    "variances against EPSILON**2; GCA and GFA compare against EPSILON "
    "itself; UFFS compares Fourier norms against EPSILON"
)


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _degree(text: str) -> int | tuple[int, ...]:
    values = _ints(text)
    return values[0] if len(values) == 1 else tuple(values)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gsdimred",
        description="Gram-Schmidt nonlinear feature extraction and selection.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a model on a CSV file")
    f.add_argument("--algo", required=True, choices=["gfr", "gca", "gfs", "gfa", "uffs", "pca"])
    f.add_argument("--family", default="singletons",
                   help="singletons, multilinear:L or poly:L (UFFS uses L of multilinear:L)")
    f.add_argument("--epsilon", type=float, required=True, help=EPSILON_HELP)
    f.add_argument("--standardize", action="store_true", help="center and scale to unit variance")
    f.add_argument("--no-center", action="store_true", help="use the data as given")
    f.add_argument("--max-features", type=int, default=None)
    f.add_argument("--gfa-argmax", choices=["original", "current"], default="original",
                   help="GFA pick rule: original variances (default) or current residuals")
    f.add_argument("--uffs-ranking", action="store_true",
                   help="UFFS: order by Fourier norm; with --max-features keep that many")
    f.add_argument("--input", required=True)
    f.add_argument("--output", required=True, help="model JSON path")
    f.add_argument("--report", default=None, help="also write the report to this file")

    t = sub.add_parser("transform", help="apply a fitted model to new rows")
    t.add_argument("--model", required=True)
    t.add_argument("--input", required=True)
    t.add_argument("--output", required=True)

    b = sub.add_parser("synth-bench", help="success rates on planted-redundancy data")
    b.add_argument("--scenario", required=True, choices=list(SCENARIOS))
    b.add_argument("--d", type=int, default=30)
    b.add_argument("--n", type=int, default=15)
    b.add_argument("--deg", type=_degree, default=None,
                   help="redundancy degree(s); default 2, or 4 for the mismatch scenarios")
    b.add_argument("--family-degree", type=int, default=None)
    b.add_argument("--sizes", type=_ints, default=[2000])
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--standardize", action="store_true", help="uffs-compare: standardize first")
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.add_argument("--output", default=None)

    r = sub.add_parser("residual-report", help="GFR feature counts per degree and threshold")
    r.add_argument("--input", required=True)
    r.add_argument("--degrees", type=_ints, default=[1, 2, 3],
                   help="family degrees; 1 means singletons (PCA)")
    r.add_argument("--thresholds", type=_floats, required=True,
                   help="values of EPSILON**2, comma-separated")
    r.add_argument("--family-kind", choices=["multilinear", "poly"], default="multilinear")
    r.add_argument("--standardize", action="store_true")
    r.add_argument("--output", default=None)
    return p


def _prepare(path: str, standardized: bool, no_center: bool):
    if not Path(path).exists():
        raise InputError(f"input file not found: {path}")
    ds = load_csv(path)
    if standardized:
        return standardize(ds)
    return ds if no_center else center(ds)


def _report(model) -> str:
    lines = [f"algo: {model.algo}", f"epsilon: {model.epsilon!r}",
             f"stop_reason: {model.stop_reason}"]
    if isinstance(model, ExtractionModel):
        lines.append(f"components: {model.n_components}")
        if model.components is not None:
            lines.append("principal components (0-based): " + " ".join(map(str, model.components)))
        lines.append("step variance direction")
        for j, (v, nu) in enumerate(zip(model.per_step_variance, model.directions), 1):
            lines.append(f"{j} {float(v)!r} " + " ".join(repr(float(x)) for x in nu))
        lines.append("lambda_max(Sigma_j) trace:")
        lines.append(" ".join(repr(float(x)) for x in model.lambda_trace))
    else:
        lines.append(f"selected: {len(model.selected)}")
        lines.append("step index name value")
        for j, (i, v) in enumerate(zip(model.selected, model.per_step_sigma), 1):
            lines.append(f"{j} {i} {model.column_names[i]} {float(v)!r}")
        if model.sigma_trace.size:
            lines.append("max sigma_j trace:")
            lines.append(" ".join(repr(float(x)) for x in model.sigma_trace.max(axis=1)))
        if model.fourier_norms is not None:
            lines.append("fourier norms:")
            lines.append(" ".join(repr(float(x)) for x in model.fourier_norms))
    return "\n".join(lines) + "\n"


def cmd_fit(args) -> int:
    ds = _prepare(args.input, args.standardize, args.no_center)
    if args.algo == "uffs":
        kind, _, level = args.family.partition(":")
        if kind != "multilinear" or not level.isdigit():
            raise InputError("uffs needs --family multilinear:L")
        model = uffs(ds, int(level), args.epsilon, ranking=args.uffs_ranking,
                     n_select=args.max_features if args.uffs_ranking else None)
    elif args.algo == "pca":
        model = pca_model(ds, args.epsilon, max_features=args.max_features)
    else:
        fam = parse_family(args.family, ds.n_features)
        if args.algo == "gfr":
            model = gfr(ds, fam, args.epsilon, max_features=args.max_features)
        elif args.algo == "gca":
            model = gca(ds, fam, args.epsilon, max_features=args.max_features)
        elif args.algo == "gfs":
            model = gfs(ds, fam, args.epsilon, max_features=args.max_features)
        else:
            model = gfa(ds, fam, args.epsilon, argmax=args.gfa_argmax,
                        max_features=args.max_features)
    serialize.save(model, args.output)
    text = _report(model)
    if args.report:
        Path(args.report).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_transform(args) -> int:
    for path in (args.model, args.input):
        if not Path(path).exists():
            raise InputError(f"file not found: {path}")
    model = serialize.load(args.model)
    rows, _ = read_csv_matrix(args.input)
    if rows.shape[1] != len(model.column_names):
        raise InputError(
            f"model expects {len(model.column_names)} columns, input has {rows.shape[1]}"
        )
    out = model.transform(rows)
    if isinstance(model, ExtractionModel):
        names = [f"c{i + 1}" for i in range(out.shape[1])]
    else:
        names = list(model.selected_names)
    save_csv(args.output, out, names)
    return EXIT_OK


def _write_table(header: list[str], rows: list[list], output: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if output:
        Path(output).write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())


def cmd_synth_bench(args) -> int:
    if args.trials < 0:
        raise InputError("--trials must be non-negative")
    degree = args.deg
    if degree is None:
        degree = 4 if args.scenario.endswith("3") else 2
    results = run_scenario(
        args.scenario, d=args.d, n=args.n, degree=degree, sizes=args.sizes,
        trials=args.trials, seed=args.seed, family_degree=args.family_degree,
        standardized=args.standardize,
    )
    compare = args.scenario == "uffs-compare"
    if args.format == "json":
        payload = []
        for r in results:
            item = {"scenario": r.scenario, "N": r.N, "trials": len(r.trials),
                    "successes": r.successes,
                    "success_rate": r.rate if r.trials else None}
            if compare:
                item.update(ratio_median=r.ratio_median() if r.trials else None,
                            gfs_selected_histogram=r.histogram("gfs"),
                            uffs_selected_histogram=r.histogram("uffs"))
            payload.append(item)
        text = json.dumps(payload, indent=1) + "\n"
        if args.output:
            Path(args.output).write_text(text)
        sys.stdout.write(text)
        return EXIT_OK
    header = ["scenario", "N", "trials", "successes", "success_rate"]
    if compare:
        header += ["ratio_median", "gfs_selected_histogram", "uffs_selected_histogram"]
    rows = []
    for r in results:
        if not r.trials:
            continue
        row = [r.scenario, r.N, len(r.trials), r.successes, f"{r.rate:.4f}"]
        if compare:
            hist = lambda h: ";".join(f"{k}:{v}" for k, v in h.items())
            row += [f"{r.ratio_median():.3f}", hist(r.histogram("gfs")), hist(r.histogram("uffs"))]
        rows.append(row)
    _write_table(header, rows, args.output)
    return EXIT_OK


def cmd_residual_report(args) -> int:
    if not args.thresholds:
        raise InputError("--thresholds must list at least one value")
    if not args.degrees or min(args.degrees) < 1:
        raise InputError("--degrees must be positive integers")
    if min(args.thresholds) < 0:
        raise InputError("--thresholds must be non-negative")
    ds = _prepare(args.input, args.standardize, False)
    d = ds.n_features
    rows = []
    for level in args.degrees:
        spec = "singletons" if level == 1 else f"{args.family_kind}:{level}"
        fam = parse_family(spec, d)
        row = [spec]
        for eps2 in args.thresholds:
            row.append(gfr(ds, fam, float(np.sqrt(eps2))).n_components)
        rows.append(row)
    _write_table(["family"] + [repr(t) for t in args.thresholds], rows, args.output)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "transform": cmd_transform,
    "synth-bench": cmd_synth_bench,
    "residual-report": cmd_residual_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except (NumericalError, EigenError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, DatasetError, FamilyError, serialize.ModelFormatError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
