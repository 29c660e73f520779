"""Command-line front door: batch distillation, local surrogates, PCA,
generators, expression evaluation and front reports.

Exit codes: 0 on success, 2 for configuration problems, 3 for data problems.
Every output directory receives a run_manifest.json sufficient to re-execute
the run.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .bench import FORCE_KINDS, ForceLaw, gen_heat, gen_pairwise
from .distill import distill, get_importance, persist_front
from .errors import ConfigError, DataError, SymDistillError
from .expr import eval_batch
from .grammar import parse, render
from .operators import operator_set
from .pca import (
    explained_variance_ratio,
    load_pca,
    pca_fit,
    project,
    reconstruct,
    save_pca,
)
from .search import SRConfig, best_of, front_scores, scores_for
from .slime import SlimeParams, build_locale, slime_fit
from .table import IOTable, VariableTransform, apply_transforms, load_table, save_table

DEFAULT_OPS = "+,*,inv,sin,exp"


def _add_sr_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ops", default=DEFAULT_OPS,
                   help="comma-separated operator names (default: %(default)s)")
    p.add_argument("--iters", type=int, default=400, help="evolution iterations")
    p.add_argument("--parsimony", type=float, default=0.0,
                   help="complexity penalty coefficient")
    p.add_argument("--max-size", type=int, default=25,
                   help="maximum expression complexity")
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--populations", type=int, default=8)
    p.add_argument("--pop-size", type=int, default=50)
    p.add_argument("--loss", choices=("mse", "mae"), default="mse")
    p.add_argument("--op-complexity", action="append", default=[], metavar="OP=N",
                   help="override an operator's complexity weight")
    p.add_argument("--arg-limit", action="append", default=[], metavar="OP=N",
                   help="cap the complexity of an operator's arguments")
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap (default: SYMDISTILL_THREADS or 1)")


def _parse_pairs(pairs: list[str], flag: str) -> dict[str, int]:
    out: dict[str, int] = {}
    for item in pairs:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"{flag} expects OP=N, got {item!r}")
        try:
            out[name.strip()] = int(value)
        except ValueError:
            raise ConfigError(f"{flag} expects an integer, got {item!r}")
    return out


def _build_config(args) -> SRConfig:
    names = [s.strip() for s in args.ops.split(",") if s.strip()]
    if not names:
        raise ConfigError("--ops names an empty operator set")
    ops = operator_set(names,
                       complexities=_parse_pairs(args.op_complexity, "--op-complexity"),
                       limits=_parse_pairs(args.arg_limit, "--arg-limit"))
    return SRConfig(ops=ops, n_populations=args.populations,
                    population_size=args.pop_size, n_iterations=args.iters,
                    parsimony=args.parsimony, max_complexity=args.max_size,
                    seed=args.seed, loss_metric=args.loss)


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        value = args.threads
    else:
        value = int(os.environ.get("SYMDISTILL_THREADS", "1"))
    if value < 1:
        raise ConfigError(f"--threads must be >= 1, got {value}")
    return value


def _config_dict(config: SRConfig) -> dict:
    d = asdict(config)
    d["ops"] = [
        {"name": op.name, "arity": op.arity, "complexity": op.node_complexity,
         "arg_complexity_limit": op.arg_complexity_limit}
        for op in config.ops
    ]
    return d


def _write_manifest(out_dir: Path, subcommand: str, seed, inputs, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "symdistill",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "output_dir": str(out_dir),
    }
    manifest.update(payload)
    (out_dir / "run_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _print_best_table(table: IOTable, result) -> None:
    print(f"{'dim':<4} {'name':<12} {'complexity':<11} {'loss':<13} {'score':<13} equation")
    for j, front in enumerate(result.fronts):
        best = result.best_indices[j]
        entry = front[best]
        score = front_scores(front)[best]
        name = table.output_names[j]
        print(f"{j:<4} {name:<12} {entry.complexity:<11} {entry.loss:<13.6g} "
              f"{score:<13.6g} {render(entry.expr)}")


def _prepare_table(args) -> tuple[IOTable, list[str]]:
    table = load_table(args.data)
    specs = list(getattr(args, "transform", []) or [])
    transforms = []
    names = list(table.input_names)
    for spec in specs:
        t = VariableTransform.from_spec(spec, names)
        transforms.append(t)
        names.append(t.new_name)
    table = apply_transforms(table, transforms, drop=getattr(args, "drop", []) or [])
    return table, specs


def _cmd_distill(args) -> int:
    table, transform_specs = _prepare_table(args)
    config = _build_config(args)
    threads = _resolve_threads(args)
    out_dir = Path(args.out)
    result = distill(table, config, out_dir, block_name=args.block,
                     n_threads=threads)
    _write_manifest(out_dir, "distill", config.seed, [args.data], {
        "block": args.block,
        "config": _config_dict(config),
        "transforms": transform_specs,
        "dropped": list(args.drop or []),
        "input_columns": table.input_names,
        "output_columns": table.output_names,
        "threads": threads,
    })
    _print_best_table(table, result)
    return 0


def _cmd_slime(args) -> int:
    if args.neighbors < 1:
        raise ConfigError("--neighbors must be >= 1")
    if args.synthetic > 0:
        raise DataError(
            "--synthetic needs a model callback to label sampled points; "
            "file-based runs have none, record a denser table instead"
        )
    table, transform_specs = _prepare_table(args)
    x_star = np.array([float(v) for v in args.at.split(",")])
    if x_star.shape[0] != table.d:
        raise ConfigError(
            f"--at lists {x_star.shape[0]} coordinates but the table has {table.d} inputs"
        )
    params = SlimeParams(x_star=x_star, J=args.neighbors, n_synthetic=args.synthetic,
                         sigma2=args.sigma2, M=args.M,
                         kernel_sigma2=args.kernel_sigma2)
    rng = np.random.default_rng(args.seed)
    locale = build_locale(table, params, rng)
    config = _build_config(args)
    threads = _resolve_threads(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_table(locale, out_dir / "locale")
    result = slime_fit(locale, config, n_threads=threads)
    for j, front in enumerate(result.fronts):
        persist_front(front, result.best_indices[j], out_dir, args.block, j)
    _write_manifest(out_dir, "slime", config.seed, [args.data], {
        "block": args.block,
        "config": _config_dict(config),
        "transforms": transform_specs,
        "at": [float(v) for v in x_star],
        "neighbors": args.neighbors,
        "synthetic": args.synthetic,
        "M": args.M,
        "sigma2": args.sigma2,
        "kernel_sigma2": args.kernel_sigma2,
        "threads": threads,
    })
    _print_best_table(locale, result)
    return 0


def _cmd_pca(args) -> int:
    if args.pca_command == "fit":
        table = load_table(args.data)
        M = table.X if args.on == "inputs" else table.Y
        model = pca_fit(M, args.k)
        save_pca(model, args.out)
        _write_manifest(Path(args.out), "pca fit", None, [args.data], {
            "k": args.k, "on": args.on,
        })
        ratios = explained_variance_ratio(model)
        print("component  explained_variance  ratio")
        for i, (v, r) in enumerate(zip(model.explained_variance, ratios)):
            print(f"{i:<10} {v:<19.6g} {r:.6g}")
        return 0
    model = load_pca(args.model)
    table = load_table(args.data)
    if args.pca_command == "apply":
        M = table.X if args.on == "inputs" else table.Y
        Z = project(model, M)
        names = [f"pc{i}" for i in range(Z.shape[1])]
        if args.on == "inputs":
            out = IOTable(names, table.output_names, Z, table.Y)
        else:
            out = IOTable(table.input_names, names, table.X, Z)
    else:  # reconstruct
        M = table.X if args.on == "inputs" else table.Y
        R = reconstruct(model, M)
        names = [f"r{i}" for i in range(R.shape[1])]
        if args.on == "inputs":
            out = IOTable(names, table.output_names, R, table.Y)
        else:
            out = IOTable(table.input_names, names, table.X, R)
    save_table(out, args.out)
    _write_manifest(Path(args.out), f"pca {args.pca_command}", None,
                    [args.data, args.model], {"on": args.on})
    print(f"wrote {out.n} rows to {args.out}")
    return 0


def _cmd_importance(args) -> int:
    table = load_table(args.data)
    print("rank  dim  name          variance")
    for rank, (dim, var) in enumerate(get_importance(table)):
        print(f"{rank:<5} {dim:<4} {table.output_names[dim]:<13} {var:.6g}")
    return 0


def _cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.law == "heat":
        table = gen_heat(args.n, args.alpha, rng)
    else:
        table = gen_pairwise(ForceLaw(args.law, softening=args.softening), args.n, rng)
    save_table(table, args.out)
    _write_manifest(Path(args.out), "gen", args.seed, [], {
        "law": args.law, "n": args.n, "alpha": args.alpha,
        "softening": args.softening,
    })
    print(f"wrote {table.n} rows ({args.law}) to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    table = load_table(args.data)
    bank_path = Path(args.expr)
    if not bank_path.exists():
        raise DataError(f"expression bank {bank_path} does not exist")
    lines = [ln.strip() for ln in bank_path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"expression bank {bank_path} is empty")
    exprs = [parse(ln, variables=table.input_names) for ln in lines]
    preds = np.column_stack([eval_batch(e, table.X) for e in exprs])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"pred_{i}" for i in range(len(exprs))])
        for row in preds:
            writer.writerow([f"{v:.17g}" for v in row])
    sidecar = {
        "tool": "symdistill",
        "version": __version__,
        "subcommand": "eval",
        "inputs": [str(args.expr), str(args.data)],
        "output": str(out),
        "expressions": lines,
    }
    out.with_suffix(out.suffix + ".manifest.json").write_text(
        json.dumps(sidecar, indent=2) + "\n")
    if len(exprs) == table.n_outputs:
        print(f"{'dim':<4} {'rmse':<13} {'mae':<13} r2")
        for j in range(table.n_outputs):
            r = preds[:, j] - table.Y[:, j]
            rmse = float(np.sqrt(np.mean(r**2)))
            mae = float(np.mean(np.abs(r)))
            denom = float(np.sum((table.Y[:, j] - table.Y[:, j].mean()) ** 2))
            r2 = 1.0 - float(np.sum(r**2)) / denom if denom > 0 else float("nan")
            print(f"{j:<4} {rmse:<13.6g} {mae:<13.6g} {r2:.6g}")
    else:
        print(f"evaluated {len(exprs)} expressions on {table.n} rows")
    return 0


def _cmd_report(args) -> int:
    run = Path(args.run)
    front_path = run if run.is_file() else run / "front.csv"
    if not front_path.exists():
        raise DataError(f"no front.csv under {run}")
    with open(front_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"complexity", "loss", "equation"} <= set(
                reader.fieldnames):
            raise DataError(
                f"{front_path} needs complexity, loss and equation columns"
            )
        rows = [(int(r["complexity"]), float(r["loss"]), r["equation"])
                for r in reader]
    if not rows:
        raise DataError(f"{front_path} holds no rows")
    rows.sort(key=lambda r: r[0])
    complexities = [r[0] for r in rows]
    losses = [r[1] for r in rows]
    scores = scores_for(complexities, losses)
    best = best_of(complexities, losses)
    curve_path = front_path.parent / "score_curve.csv"
    with open(curve_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["complexity", "score"])
        for cx, s in zip(complexities, scores):
            writer.writerow([cx, f"{s:.17g}"])
    print(f"{'':<2} {'complexity':<11} {'loss':<13} {'score':<13} equation")
    for i, ((cx, loss, eq), s) in enumerate(zip(rows, scores)):
        marker = "*" if i == best else " "
        print(f"{marker:<2} {cx:<11} {loss:<13.6g} {s:<13.6g} {eq}")
    print(f"best: complexity {complexities[best]} (score {scores[best]:.6g}); "
          f"wrote {curve_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symdistill",
        description="Fit closed-form expressions to recorded input/output data.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distill", help="fit one Pareto front per output dimension")
    p.add_argument("--data", required=True, help="table directory or CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--block", default="block", help="block name in the output layout")
    p.add_argument("--transform", action="append", default=[], metavar="NAME=EXPR",
                   help="append a derived input column")
    p.add_argument("--drop", action="append", default=[], metavar="COL",
                   help="drop an input column after transforms")
    _add_sr_arguments(p)
    p.set_defaults(func=_cmd_distill)

    p = sub.add_parser("slime", help="fit a local surrogate around a point")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--block", default="locale")
    p.add_argument("--at", required=True, help="comma-separated point of interest")
    p.add_argument("--neighbors", type=int, required=True, help="neighbor count J")
    p.add_argument("--synthetic", type=int, default=0)
    p.add_argument("--M", type=float, default=1.0, help="neighbor weight")
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--kernel-sigma2", type=float, default=None)
    p.add_argument("--transform", action="append", default=[], metavar="NAME=EXPR")
    p.add_argument("--drop", action="append", default=[], metavar="COL")
    _add_sr_arguments(p)
    p.set_defaults(func=_cmd_slime)

    p = sub.add_parser("pca", help="fit/apply/invert a PCA model")
    psub = p.add_subparsers(dest="pca_command", required=True)
    pf = psub.add_parser("fit")
    pf.add_argument("--data", required=True)
    pf.add_argument("--k", type=int, required=True)
    pf.add_argument("--out", required=True)
    pf.add_argument("--on", choices=("inputs", "outputs"), default="inputs")
    pa = psub.add_parser("apply")
    pa.add_argument("--model", required=True)
    pa.add_argument("--data", required=True)
    pa.add_argument("--out", required=True)
    pa.add_argument("--on", choices=("inputs", "outputs"), default="inputs")
    pr = psub.add_parser("reconstruct")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--on", choices=("inputs", "outputs"), default="inputs")
    p.set_defaults(func=_cmd_pca)

    p = sub.add_parser("importance", help="rank output dimensions by variance")
    p.add_argument("--data", required=True)
    p.set_defaults(func=_cmd_importance)

    p = sub.add_parser("gen", help="generate a benchmark table")
    p.add_argument("law", choices=("heat",) + FORCE_KINDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.2, help="diffusion coefficient")
    p.add_argument("--softening", type=float, default=1e-2)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("eval", help="evaluate an expression bank on a table")
    p.add_argument("--expr", required=True, help="file with one expression per line")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="CSV of predictions")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="print a front with scores, mark the best row")
    p.add_argument("--run", required=True, help="front.csv or a directory holding it")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SymDistillError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
