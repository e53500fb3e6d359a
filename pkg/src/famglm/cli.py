"""Command-line interface: ``famglm simulate|fit|predict|reconstruct|evaluate``.

Exit status is 0 on success, 2 for usage or configuration errors and 3 for
failures while running.
"""
import argparse
import csv
import math
import os
import sys

import numpy as np

from . import metrics as mt
from .errors import ConfigMismatch, CorpusLoadError, FamGLMError, ShapeMismatch
from .factor import reconstruct, reconstruction_errors
from .glm import FAMILIES
from .ingest import DEFAULT_SIZE, read_manifest, load_corpus
from .model import FamGLM
from .simulate import SCENARIOS, ScenarioConfig, median_durations, parse_ranks, run_experiment

EXIT_USAGE = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


def fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return reader.fieldnames or [], list(reader)


def write_curve(path, points):
    write_csv(path, ["x", "y"], [tuple(p) for p in points])


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _ranks(text):
    try:
        return parse_ranks(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _size(text):
    try:
        h, w = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like H,W, got {text!r}") from None
    return h, w


# -- simulate -------------------------------------------------------------------


def scenario_config(args):
    overrides = dict(p1=args.p1, p2=args.p2, n=args.n, rho=args.rho, family=args.family, seed=args.seed,
                     replicates=args.replicates, folds=args.folds, ranks=args.ranks,
                     center=True if args.center else None, fixed_truth=True if args.fixed_truth else None)
    if args.scenario in SCENARIOS:
        return ScenarioConfig.defaults(args.scenario, **overrides)
    if os.path.isfile(args.scenario):
        with open(args.scenario) as fh:
            return ScenarioConfig.from_text(fh.read(), **overrides)
    raise ConfigMismatch(f"--scenario must be one of {', '.join(SCENARIOS)} or a config file path")


def cmd_simulate(args):
    config = scenario_config(args)
    methods = tuple(args.methods.split(",")) if args.methods else None
    out = _out_dir(args)
    result = run_experiment(config, methods, jobs=args.jobs)
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(config.to_text())
    write_csv(os.path.join(out, "results.csv"), ["method", "metric", "mean", "stderr"], result.table)
    write_csv(os.path.join(out, "ranks.csv"), ["replicate", "method", "fold", "k1", "k2"],
              [(r.replicate, *rank) for r in result.replicates for rank in r.ranks])
    rows = []
    for r in result.replicates:
        for method in result.methods:
            if method in r.failures:
                rows.append((r.replicate, method, "failed", "", r.failures[method]))
            for metric, value in r.metrics.get(method, {}).items():
                rows.append((r.replicate, method, "ok", metric, value))
    write_csv(os.path.join(out, "replicates.csv"), ["replicate", "method", "status", "metric", "value"], rows)
    for method, (roc, pr) in result.curves.items():
        suffix = "" if method == "famglm" else f"_{method}"
        write_curve(os.path.join(out, f"roc{suffix}.csv"), roc)
        write_curve(os.path.join(out, f"pr{suffix}.csv"), pr)
    if args.timing:
        medians = median_durations(result.replicates, result.methods)
        write_csv(os.path.join(out, "timing.csv"), ["method", "median_seconds"], sorted(medians.items()))
        for m, t in sorted(medians.items()):
            print(f"{m}: median {t:.4f} s per replicate")
    for method, metric, mean, se in result.table:
        print(f"{method:8s} {metric:18s} {mean:.4f} ({se:.4f})")
    return 0


# -- fit / predict / reconstruct --------------------------------------------------


def _manifest(args, size):
    if not args.manifest:
        raise UsageError("--manifest is required")
    return read_manifest(args.manifest, size)


def _prediction_rows(model, data):
    linear = np.atleast_1d(model.predict(data.X, data.v, output="linear"))
    mean = np.atleast_1d(model.predict(data.X, data.v, output="mean"))
    rows = []
    for i, path in enumerate(data.paths):
        row = [path, linear[i], mean[i]]
        if model.family == "binomial":
            row.append(int(mean[i] >= 0.5))
        rows.append(row)
    header = ["path", "linear", "mean"] + (["class"] if model.family == "binomial" else [])
    return header, rows


def cmd_fit(args):
    size = args.size or DEFAULT_SIZE
    data = load_corpus(_manifest(args, size))
    family = args.family or "binomial"
    if family == "binomial" and len(np.unique(data.y)) < 2:
        raise FamGLMError("binomial fit needs both classes in the manifest")
    model = FamGLM.fit(data.X, data.y, family, v=data.v, ranks=args.ranks, center=args.center, target_size=size)
    out = _out_dir(args)
    model.save(os.path.join(out, "model.famglm"))
    header, rows = _prediction_rows(model, data)
    write_csv(os.path.join(out, "fitted.csv"), header, rows)
    lo = model.loadings
    print(f"fitted {family} FamGLM: p=({lo.p1},{lo.p2}) k=({lo.k1},{lo.k2}) converged={model.glm.converged} "
          f"reconstruction error={model.train_error:.6g}")
    return 0


def _load_for_model(args):
    if not args.model:
        raise UsageError("--model is required")
    model = FamGLM.load(args.model)
    size = model.target_size or (model.loadings.p1, model.loadings.p2)
    if size != (model.loadings.p1, model.loadings.p2):
        raise ShapeMismatch(f"model target size {size} does not match loadings")
    manifest = _manifest(args, size)
    m = model.n_covariates
    got = len(manifest.entries[0].covariates)
    if got != m:
        raise ShapeMismatch(f"{manifest.entries[0].path}: {got} covariates, model expects {m}")
    return model, load_corpus(manifest)


def cmd_predict(args):
    model, data = _load_for_model(args)
    header, rows = _prediction_rows(model, data)
    out = _out_dir(args)
    write_csv(os.path.join(out, "predictions.csv"), header, rows)
    return 0


def cmd_reconstruct(args):
    model, data = _load_for_model(args)
    Z = model.scores(data.X)
    Xhat = reconstruct(model.loadings, Z)
    errors = reconstruction_errors(data.X, model.loadings, Z)
    out = _out_dir(args)
    recon_dir = os.path.join(out, "recon")
    os.makedirs(recon_dir, exist_ok=True)
    rows = []
    for i, path in enumerate(data.paths):
        stem = os.path.splitext(os.path.basename(path))[0]
        name = f"{i:04d}_{stem}.csv"
        with open(os.path.join(recon_dir, name), "w", newline="") as fh:
            w = csv.writer(fh)
            for r in Xhat[i]:
                w.writerow([fmt(x) for x in r])
        rows.append((path, os.path.join("recon", name), errors[i]))
    write_csv(os.path.join(out, "recon_error.csv"), ["path", "reconstruction", "error"], rows)
    print(f"mean reconstruction error {float(np.mean(errors)):.6g} over {len(rows)} images")
    return 0


# -- evaluate ---------------------------------------------------------------------


def cmd_evaluate(args):
    if not args.predictions:
        raise UsageError("--predictions is required")
    labels_path = args.labels or args.manifest
    if not labels_path:
        raise UsageError("--labels (or --manifest) is required")
    fields, pred_rows = read_csv(args.predictions)
    if "mean" not in fields:
        raise UsageError(f"{args.predictions}: no 'mean' column")
    manifest = read_manifest(labels_path)
    entries = manifest.entries
    if len(entries) != len(pred_rows):
        raise UsageError(f"{len(pred_rows)} predictions for {len(entries)} labels")
    if "path" in fields:
        for i, (row, entry) in enumerate(zip(pred_rows, entries)):
            if os.path.abspath(row["path"]) != os.path.abspath(entry.path):
                raise UsageError(f"row {i}: prediction for {row['path']} but label for {entry.path}")
    try:
        pred = np.array([float(r["mean"]) for r in pred_rows])
    except ValueError:
        raise UsageError(f"{args.predictions}: non-numeric mean") from None
    y = np.array([e.label for e in entries])
    family = args.family or "binomial"
    report = mt.evaluate(family, y, pred)
    out = _out_dir(args)
    write_csv(os.path.join(out, "metrics.csv"), ["metric", "value"], list(report.items()))
    if family == "binomial":
        write_curve(os.path.join(out, "roc.csv"), mt.roc_points(y, pred))
        write_curve(os.path.join(out, "pr.csv"), mt.pr_points(y, pred))
    for k, v in report.items():
        print(f"{k:12s} {v:.6g}" if not math.isnan(v) else f"{k:12s} nan")
    return 0


# -- entry point --------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="famglm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--family", choices=FAMILIES)
        p.add_argument("--seed", type=int)
        p.add_argument("--ranks", type=_ranks, help="k1,k2 (skips rank selection)")
        p.add_argument("--center", action="store_true", help="center before forming moment matrices")
        p.add_argument("--manifest", help="image manifest CSV (path,label[,v1,...])")
        p.add_argument("--model", help="model bundle written by 'fit'")
        return p

    s = common(sub.add_parser("simulate", help="run a simulation scenario"))
    s.add_argument("--scenario", required=True, help=f"one of {', '.join(SCENARIOS)} or a key=value config file")
    s.add_argument("--p1", type=int)
    s.add_argument("--p2", type=int)
    size = s.add_mutually_exclusive_group()
    size.add_argument("--n", type=int)
    size.add_argument("--rho", type=float)
    s.add_argument("--replicates", type=int)
    s.add_argument("--folds", type=int)
    s.add_argument("--fixed-truth", action="store_true", help="reuse one set of true loadings for all replicates")
    s.add_argument("--timing", action="store_true", help="also write median fit+predict time per method")
    s.add_argument("--methods", help="comma-separated methods (default depends on scenario)")
    s.add_argument("--jobs", type=int, default=1, help="replicates run in parallel processes")
    s.set_defaults(func=cmd_simulate)

    f = common(sub.add_parser("fit", help="fit FamGLM on an image manifest"))
    f.add_argument("--size", type=_size, help="preprocessing size H,W (default 150,150)")
    f.set_defaults(func=cmd_fit)

    p = common(sub.add_parser("predict", help="predict with a saved model"))
    p.set_defaults(func=cmd_predict)

    r = common(sub.add_parser("reconstruct", help="reconstruct images from factor scores"))
    r.set_defaults(func=cmd_reconstruct)

    e = common(sub.add_parser("evaluate", help="score a predictions CSV against labels"))
    e.add_argument("--predictions", required=True)
    e.add_argument("--labels", help="manifest or path,label CSV holding the true labels")
    e.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigMismatch) as exc:
        print(f"famglm {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorpusLoadError as exc:
        print(f"famglm {args.command}: cannot load {exc.path} (entry {exc.index}): {exc.cause}", file=sys.stderr)
        return EXIT_RUNTIME
    except (FamGLMError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"famglm {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
