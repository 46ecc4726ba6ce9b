"""Command-line driver: fit, predict, bench, check-invertibility, serve.

Thin client over the service handlers; every subcommand echoes its resolved
configuration, supports a machine-readable JSON output mode, and exits 0 on
success, 1 on runtime or data errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from . import __version__, bench
from .service.handlers import (
    handle_bench,
    handle_fit,
    handle_invertibility,
    handle_predict,
)
from .service.schemas import (
    BenchRequest,
    DataPayload,
    FitRequest,
    InvertibilityRequest,
    NoisePayload,
    PredictRequest,
    SigmaPolicySpec,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

THREADS_ENV = "UNCERTREE_THREADS"
FIXTURE_PREFIX = "fixture:"


class _UsageError(Exception):
    pass


def _default_threads() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        return None
    return value if value > 0 else None


def _maybe_index(column: str | None):
    if column is None:
        return None
    return int(column) if re.fullmatch(r"[+-]?\d+", column) else column


def _load_dataset(data_arg: str, target: str | None) -> bench.Dataset:
    if data_arg.startswith(FIXTURE_PREFIX):
        return bench.load_fixture(data_arg[len(FIXTURE_PREFIX):])
    if target is None:
        raise _UsageError("--target is required with a data file")
    return bench.load_csv(data_arg, _maybe_index(target))


def _payload(ds: bench.Dataset) -> DataPayload:
    return DataPayload(
        X=ds.X.tolist(), y=ds.y.tolist(), feature_names=list(ds.feature_names), name=ds.name
    )


def _sigma_spec(value: str) -> SigmaPolicySpec:
    if value == "empirical":
        return SigmaPolicySpec(kind="empirical_std")
    if value == "half":
        return SigmaPolicySpec(kind="half_empirical_std")
    try:
        values = json.loads(Path(value).read_text(encoding="utf-8"))
    except OSError as exc:
        raise _UsageError(
            f"--sigma must be 'empirical', 'half', or a readable JSON file of values ({exc})"
        ) from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"--sigma file {value}: invalid JSON ({exc})") from exc
    if not isinstance(values, list):
        raise ValueError(f"--sigma file {value}: expected a JSON array of numbers")
    return SigmaPolicySpec(kind="fixed", values=[float(v) for v in values])


def _config_echo(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _emit_json(document: dict) -> None:
    print(json.dumps(document, sort_keys=True, indent=2, allow_nan=False))


def _format_bound(bound: float | None) -> str:
    return "inf" if bound is None else f"{bound:.6g}"


def _print_invertibility(info) -> None:
    for j, (bound, s, ok) in enumerate(zip(info.bounds, info.sigma, info.feature_ok)):
        status = "ok" if ok else "violated"
        print(f"feature {j}: sigma={s:.6g} bound={_format_bound(bound)} {status}")
    print(f"separation bound satisfied: {'yes' if info.all_ok else 'no'}")


def cmd_fit(args: argparse.Namespace) -> int:
    ds = _load_dataset(args.data, args.target)
    if args.mtry is not None and args.mtry > ds.p:
        raise _UsageError(f"--mtry {args.mtry} exceeds the {ds.p} available features")
    req = FitRequest(
        data=_payload(ds),
        method=args.method,
        sigma=_sigma_spec(args.sigma),
        min_leaf_fraction=args.min_leaf_frac,
        max_leaves=args.max_leaves,
        max_depth=args.max_depth,
        tau=args.tau,
        mtry=args.mtry,
        bootstrap=not args.no_bootstrap,
        seed=args.seed,
        threads=args.threads,
    )
    resp = handle_fit(req)
    Path(args.out).write_text(
        json.dumps(resp.model, sort_keys=True, indent=2, allow_nan=False) + "\n",
        encoding="utf-8",
    )
    if args.format == "json":
        _emit_json(
            {
                "config": _config_echo(args),
                "kind": resp.kind,
                "n_leaves": resp.n_leaves,
                "tau": resp.tau,
                "training_sse": resp.training_sse,
                "invertibility": None if resp.invertibility is None else resp.invertibility.model_dump(),
                "out": args.out,
            }
        )
    else:
        print(f"config: {json.dumps(_config_echo(args), sort_keys=True)}")
        print(f"model written to {args.out} ({resp.kind})")
        if resp.n_leaves is not None:
            print(f"leaves: {resp.n_leaves}")
        if resp.tau is not None:
            print(f"trees: {resp.tau}")
        print(f"training sse: {resp.training_sse:.6g}")
        if resp.invertibility is not None:
            _print_invertibility(resp.invertibility)
    return EXIT_OK


def _read_matrix(data_arg: str | None, target: str | None) -> tuple[list[list[float]], list[str]]:
    if data_arg is None or data_arg == "-":
        text = sys.stdin.read()
        source = "<stdin>"
    else:
        text = Path(data_arg).read_text(encoding="utf-8")
        source = data_arg
    X, names, _ = bench.parse_matrix(text, drop_column=_maybe_index(target), source=source)
    return X.tolist(), list(names)


def cmd_predict(args: argparse.Namespace) -> int:
    model_doc = json.loads(Path(args.model).read_text(encoding="utf-8"))
    X, names = _read_matrix(args.data, args.target)
    resp = handle_predict(PredictRequest(model=model_doc, data=DataPayload(X=X, feature_names=names)))
    if args.format == "json":
        _emit_json({"config": _config_echo(args), "predictions": resp.predictions})
    else:
        for value in resp.predictions:
            print(f"{value:.12g}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    ds = _load_dataset(args.data, args.target)
    noise = None
    if args.noise:
        noise_seed = args.seed if args.noise_seed is None else args.noise_seed
        noise = NoisePayload(seed=noise_seed)
    req = BenchRequest(
        data=_payload(ds),
        methods=args.methods,
        sigma=_sigma_spec(args.sigma),
        noise=noise,
        folds=args.folds,
        min_leaf_fraction=args.min_leaf_frac,
        seed=args.seed,
        threads=args.threads,
    )
    resp = handle_bench(req)
    if args.format == "json":
        _emit_json({"config": _config_echo(args), "report": resp.report})
    else:
        print(f"config: {json.dumps(_config_echo(args), sort_keys=True)}")
        print(resp.table)
    return EXIT_OK


def cmd_check_invertibility(args: argparse.Namespace) -> int:
    model_doc = json.loads(Path(args.model).read_text(encoding="utf-8"))
    data = None
    if args.data is not None:
        X, names = _read_matrix(args.data, args.target)
        data = DataPayload(X=X, feature_names=names)
    resp = handle_invertibility(InvertibilityRequest(model=model_doc, data=data))
    if args.format == "json":
        _emit_json({"config": _config_echo(args), **resp.model_dump()})
    else:
        print(f"config: {json.dumps(_config_echo(args), sort_keys=True)}")
        _print_invertibility(resp)
        if resp.rank is not None:
            verdict = "yes" if resp.rank_equals_regions else "no"
            print(f"membership rank {resp.rank} of {resp.n_regions} regions: full rank {verdict}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("uncertree.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="base seed for all derived randomness")
    parser.add_argument(
        "--threads",
        type=int,
        default=_default_threads(),
        help=f"worker threads for forests and CV cells (default from ${THREADS_ENV})",
    )
    parser.add_argument(
        "--format", choices=("table", "json"), default="table", help="output style"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uncertree",
        description="Regression trees and forests for inputs measured with Gaussian noise.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a model on a delimited dataset")
    fit.add_argument("data", help=f"CSV/TSV path or {FIXTURE_PREFIX}<name>")
    fit.add_argument("--target", help="target column name or index")
    fit.add_argument(
        "--method", choices=("tree", "utree", "hybrid", "rf", "urf"), default="utree"
    )
    fit.add_argument(
        "--sigma",
        default="empirical",
        help="'empirical', 'half', or a JSON file with fixed per-feature values",
    )
    fit.add_argument("--min-leaf-frac", type=float, default=0.1)
    fit.add_argument("--max-leaves", type=int, default=None)
    fit.add_argument("--max-depth", type=int, default=None)
    fit.add_argument("--tau", type=int, default=None, help="forest size (rf/urf)")
    fit.add_argument("--mtry", type=int, default=None, help="features per forest tree")
    fit.add_argument("--no-bootstrap", action="store_true", help="disable row resampling")
    fit.add_argument("--out", required=True, help="path for the model JSON")
    _add_common(fit)
    fit.set_defaults(func=cmd_fit)

    predict = sub.add_parser("predict", help="predict rows with a saved model")
    predict.add_argument("model", help="model JSON path")
    predict.add_argument("data", nargs="?", help="CSV/TSV path, or '-'/omitted for stdin")
    predict.add_argument("--target", help="column to drop before predicting")
    _add_common(predict)
    predict.set_defaults(func=cmd_predict)

    bench_cmd = sub.add_parser("bench", help="cross-validated RMSE benchmark")
    bench_cmd.add_argument("data", help=f"CSV/TSV path or {FIXTURE_PREFIX}<name>")
    bench_cmd.add_argument("--target", help="target column name or index")
    bench_cmd.add_argument(
        "--methods",
        nargs="+",
        required=True,
        help="e.g. standard_tree uncertain_tree hybrid_tree standard_rf:100 uncertain_rf:15",
    )
    bench_cmd.add_argument("--sigma", default="empirical")
    bench_cmd.add_argument("--noise", action="store_true", help="perturb every cell before folding")
    bench_cmd.add_argument("--noise-seed", type=int, default=None, help="defaults to --seed")
    bench_cmd.add_argument("--folds", type=int, default=5)
    bench_cmd.add_argument("--min-leaf-frac", type=float, default=0.1)
    _add_common(bench_cmd)
    bench_cmd.set_defaults(func=cmd_bench)

    check = sub.add_parser(
        "check-invertibility", help="report per-feature separation bounds for a model"
    )
    check.add_argument("model", help="model JSON path")
    check.add_argument("data", nargs="?", help="optional data to rank-check the membership matrix")
    check.add_argument("--target", help="column to drop from the data first")
    _add_common(check)
    check.set_defaults(func=cmd_check_invertibility)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    _add_common(serve)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
