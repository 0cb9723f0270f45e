"""Command-line interface.

Subcommands
-----------
explain   attribute a batch of instances and write SVReport JSON/CSV
compare   score an estimator against stored ground-truth attributions
synth     generate bundled fixtures (demo model, correlated linear data)
bench     time estimator/algorithm combinations on a batch

Exit codes: 0 ok, 2 configuration error, 3 model/data validation error,
4 degenerate query, 5 missing oracle.  Human messages go to stderr; stdout
and output files carry data only.
"""

from __future__ import annotations

import argparse
import csv as _csv
import io
import json
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import engine, fixtures, metrics, oracles
from .data import Dataset, PlayerPartition, load_dataset, quantile_discretize
from .engine import SVReport, brute_force_batch, multi_games_batch
from .estimators import discrete_reduced, leaf_reduced, shap_reduced
from .exceptions import (
    ConfigError,
    DatasetError,
    DegenerateQueryError,
    LeafSVError,
    ModelParseError,
    ModelValidationError,
    UnsupportedConditioningError,
)
from .trees import dump_model, parse_model

__all__ = ["main"]

EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_DEGENERATE = 4
EXIT_NO_ORACLE = 5


def _build_parser() -> tuple[argparse.ArgumentParser, list]:
    parser = argparse.ArgumentParser(
        prog="leafsv", description="Shapley attributions for tree ensembles"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="key=value defaults file; flags override")
        p.add_argument("--model", help="model JSON path")
        p.add_argument("--data", help="reference data CSV path")
        p.add_argument("--schema", help="schema text path")
        p.add_argument("--players", help="player partition JSON path")
        p.add_argument("--instances", help="row selector: start:stop or i,j,k")
        p.add_argument("--estimator", default="leaf",
                       choices=("shap_path", "discrete", "leaf"))
        p.add_argument("--algorithm", default="brute_force",
                       choices=("brute_force", "multi_games"))
        p.add_argument("--q", type=int, help="quantile bins for discretization")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--n-mc", type=int, default=10_000, dest="n_mc")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", default="json", choices=("json", "csv"))
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--strict", action="store_true",
                       help="sequential reduction; byte-identical reruns")

    pe = sub.add_parser("explain", help="write one attribution report per instance")
    common(pe)
    pe.add_argument("--diag-subset", dest="diag_subset",
                    help="comma-separated columns; report the reduced value "
                         "conditioned on them for each instance")

    pc = sub.add_parser("compare", help="score attributions against a truth file")
    common(pc)
    pc.add_argument("--truth", help="ground-truth JSON with a 'phi' matrix")
    pc.add_argument("--top-k", type=int, default=3, dest="top_k")
    pc.add_argument("--by-abs", action="store_true", dest="by_abs",
                    help="rank by |phi| instead of signed value")

    ps = sub.add_parser("synth", help="generate bundled fixtures")
    common(ps)
    ps.add_argument("--kind", required=True, choices=("demo", "exp1"))
    ps.add_argument("--n", type=int, default=10_000)
    ps.add_argument("--p", type=int, default=5)
    ps.add_argument("--rho", type=float, default=0.7)
    ps.add_argument("--truth-instances", type=int, default=0, dest="truth_instances",
                    help="also write exact attributions for the first N rows")

    pb = sub.add_parser("bench", help="time estimators on a batch")
    common(pb)
    pb.add_argument("--repeats", type=int, default=5)
    return parser, [pe, pc, ps, pb]


def _apply_config_file(parser, subparsers, argv):
    """Load key=value defaults from --config, then reparse with flags on top."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if known.config:
        defaults = {}
        with open(known.config) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{known.config}:{lineno}: expected key=value")
                key, val = (part.strip() for part in line.split("=", 1))
                defaults[key.replace("-", "_")] = val
        for key in ("q", "seed", "n_mc", "workers", "top_k", "repeats", "n", "p",
                    "truth_instances"):
            if key in defaults:
                defaults[key] = int(defaults[key])
        if "rho" in defaults:
            defaults["rho"] = float(defaults["rho"])
        for key in ("strict", "by_abs"):
            if key in defaults:
                defaults[key] = defaults[key].lower() in ("1", "true", "yes")
        # subparsers re-apply their own defaults over the parent namespace
        for p in (parser, *subparsers):
            p.set_defaults(**defaults)
    return parser.parse_args(argv)


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _load_inputs(args):
    if not args.model:
        raise ConfigError("--model is required")
    ensemble = parse_model(json.loads(_read(args.model)))
    ds = None
    if args.data:
        if not args.schema:
            raise ConfigError("--schema is required alongside --data")
        ds = load_dataset(_read(args.data), _read(args.schema))
        if ds.p != ensemble.n_features:
            raise DatasetError(
                f"data has {ds.p} columns but the model expects "
                f"{ensemble.n_features}"
            )
    if args.estimator in ("discrete", "leaf") and ds is None:
        raise ConfigError(f"estimator {args.estimator!r} needs --data and --schema")
    if args.algorithm == "multi_games" and args.estimator != "leaf":
        raise ConfigError("multi_games supports only the leaf estimator")
    if args.q is not None:
        if ds is None:
            raise ConfigError("--q needs --data")
        cont = [j for j, m in enumerate(ds.meta) if m.kind == "continuous"]
        result = quantile_discretize(ds, cont, q=args.q)
        for warning in result.warnings:
            print(warning, file=sys.stderr)
        ds = result.dataset
    if args.players:
        players = PlayerPartition.from_json(_read(args.players))
    else:
        names = ensemble.feature_names or [f"x{j}" for j in range(ensemble.n_features)]
        players = PlayerPartition.singletons(ensemble.n_features, names)
    return ensemble, ds, players


def _select_rows(selector: str | None, n: int) -> list[int]:
    if selector is None:
        return list(range(n))
    try:
        if ":" in selector:
            start_s, stop_s = selector.split(":", 1)
            start = int(start_s) if start_s else 0
            stop = int(stop_s) if stop_s else n
            idx = list(range(start, stop))
        else:
            idx = [int(tok) for tok in selector.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --instances selector {selector!r}") from exc
    for i in idx:
        if not 0 <= i < n:
            raise ConfigError(f"instance {i} out of range [0, {n})")
    return idx


def _explain_batch(ensemble, ds, X, players, args):
    """Returns (phi, base, preds); splits instances over --workers unless strict."""

    def run(chunk):
        if args.algorithm == "multi_games":
            phi, base, preds, _ = multi_games_batch(ensemble, ds, chunk, players)
            return phi, base, preds
        return brute_force_batch(ensemble, ds, chunk, players, args.estimator)

    if args.strict or args.workers <= 1 or X.shape[0] <= 1:
        return run(X)
    chunks = np.array_split(X, min(args.workers, X.shape[0]))
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        parts = list(pool.map(run, chunks))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def _reduced_diag(ensemble, ds, subset, x, estimator):
    if estimator == "shap_path":
        return shap_reduced(ensemble, subset, x)
    if estimator == "discrete":
        return discrete_reduced(ensemble, ds, subset, x)
    return leaf_reduced(ensemble, ds, subset, x)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _reports_csv(dicts: list[dict]) -> str:
    buf = io.StringIO()
    labels = sorted(dicts[0]["phi"]) if dicts else []
    with_diag = any("diagnostics" in d for d in dicts)
    writer = _csv.writer(buf)
    header = ["instance", "estimator", "algorithm", "base_value",
              "prediction", "efficiency_residual", *labels]
    if with_diag:
        header += ["diag_subset", "diag_reduced_value"]
    writer.writerow(header)
    for d in dicts:
        row = [d["instance"], d["estimator"], d["algorithm"], repr(d["base_value"]),
               repr(d["prediction"]), repr(d["efficiency_residual"]),
               *[repr(d["phi"][name]) for name in labels]]
        if with_diag:
            diag = d.get("diagnostics", {})
            row += [" ".join(str(c) for c in diag.get("subset", [])),
                    repr(diag["reduced_value"]) if diag else ""]
        writer.writerow(row)
    return buf.getvalue()


def _cmd_explain(args) -> int:
    start = time.perf_counter()
    ensemble, ds, players = _load_inputs(args)
    if ds is not None:
        X_all = ds.values
    else:
        raise ConfigError("explain needs --data to select instances from")
    idx = _select_rows(args.instances, X_all.shape[0])
    X = X_all[idx]
    phi, base, preds = _explain_batch(ensemble, ds, X, players, args)
    diag_cols = None
    if getattr(args, "diag_subset", None):
        diag_cols = sorted(int(t) for t in args.diag_subset.split(","))
    dicts = []
    for row, i in enumerate(idx):
        report = SVReport(players, phi[row], float(base[row]), float(preds[row]),
                          args.estimator, args.algorithm, instance=i)
        d = report.to_dict()
        if diag_cols is not None:
            rv = _reduced_diag(ensemble, ds, diag_cols, X[row], args.estimator)
            d["diagnostics"] = {"subset": diag_cols, "reduced_value": rv.value}
        dicts.append(d)
    text = (json.dumps(dicts, sort_keys=True) if args.format == "json"
            else _reports_csv(dicts))
    _emit(text, args.out)
    elapsed = time.perf_counter() - start
    print(f"explained {len(idx)} instance(s) in {elapsed:.3f}s", file=sys.stderr)
    return 0


def _cmd_compare(args) -> int:
    if not args.truth:
        print("compare needs --truth with ground-truth attributions",
              file=sys.stderr)
        return EXIT_NO_ORACLE
    try:
        truth = json.loads(_read(args.truth))
    except FileNotFoundError:
        print(f"truth file not found: {args.truth}", file=sys.stderr)
        return EXIT_NO_ORACLE
    phi_true = np.asarray(truth["phi"], dtype=float)
    ensemble, ds, players = _load_inputs(args)
    idx = _select_rows(args.instances, ds.n)
    if phi_true.shape[0] != len(idx) or phi_true.shape[1] != len(players):
        raise ConfigError(
            f"truth matrix is {phi_true.shape}, expected ({len(idx)}, {len(players)})"
        )
    X = ds.values[idx]
    phi, _, _ = _explain_batch(ensemble, ds, X, players, args)
    report = metrics.MetricReport(args.estimator)
    for row, i in enumerate(idx):
        rae, excluded = metrics.r_ae(phi_true[row], phi[row])
        score = metrics.tpr(phi_true[row], phi[row], args.top_k, by_abs=args.by_abs)
        report.add(i, r_ae=rae, tpr=score, r_ae_excluded=excluded)
    text = report.to_json() if args.format == "json" else report.to_csv()
    _emit(text, args.out)
    print(
        f"median R-AE {report.aggregate('r_ae'):.4g}, "
        f"mean TPR {report.aggregate('tpr', 'mean'):.4g}",
        file=sys.stderr,
    )
    return 0


def _cmd_synth(args) -> int:
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    if args.kind == "demo":
        path = os.path.join(out_dir, "demo_model.json")
        with open(path, "w") as fh:
            json.dump(fixtures.demo_model_document(), fh, sort_keys=True)
        print(f"wrote {path}", file=sys.stderr)
        return 0
    ds, y, model = oracles.gen_experiment1(
        n=args.n, p=args.p, rho=args.rho, seed=args.seed
    )
    paths = {
        "data": os.path.join(out_dir, "exp1_data.csv"),
        "schema": os.path.join(out_dir, "exp1_schema.txt"),
        "labels": os.path.join(out_dir, "exp1_labels.csv"),
    }
    with open(paths["data"], "w") as fh:
        fh.write(ds.to_csv())
    with open(paths["schema"], "w") as fh:
        fh.write(ds.schema_text())
    with open(paths["labels"], "w") as fh:
        fh.write("y\n" + "\n".join(repr(v) for v in y) + "\n")
    if args.truth_instances > 0:
        players = PlayerPartition.singletons(args.p, [m.name for m in ds.meta])
        rows = []
        for i in range(min(args.truth_instances, ds.n)):
            x = ds.values[i]
            rep = engine.brute_force_sv(
                x, players, value_fn=lambda cols: model.exact_reduced(cols, x)
            )
            rows.append([float(v) for v in rep.phi])
        paths["truth"] = os.path.join(out_dir, "exp1_truth.json")
        with open(paths["truth"], "w") as fh:
            json.dump({"phi": rows}, fh)
    print("wrote " + ", ".join(sorted(paths.values())), file=sys.stderr)
    return 0


def _cmd_bench(args) -> int:
    ensemble, ds, players = _load_inputs(args)
    idx = _select_rows(args.instances, ds.n)
    X = ds.values[idx]
    timings = []
    for _ in range(max(args.repeats, 1)):
        t0 = time.perf_counter()
        if X.shape[0]:
            _explain_batch(ensemble, ds, X, players, args)
        timings.append(time.perf_counter() - t0)
    payload = {
        "estimator": args.estimator,
        "algorithm": args.algorithm,
        "instances": len(idx),
        "repeats": len(timings),
        "median_seconds": float(np.median(timings)),
        "all_seconds": timings,
        "machine": {
            "platform": platform.platform(),
            "python": platform.python_version(),
            "processor": platform.processor(),
        },
    }
    _emit(json.dumps(payload, sort_keys=True), args.out)
    print(f"median {payload['median_seconds']:.4f}s over {len(timings)} repeat(s)",
          file=sys.stderr)
    return 0


_COMMANDS = {
    "explain": _cmd_explain,
    "compare": _cmd_compare,
    "synth": _cmd_synth,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser, subparsers = _build_parser()
    try:
        args = _apply_config_file(
            parser, subparsers, sys.argv[1:] if argv is None else argv
        )
        return _COMMANDS[args.subcommand](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelParseError, ModelValidationError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DegenerateQueryError, UnsupportedConditioningError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except LeafSVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
