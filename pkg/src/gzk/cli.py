"""Command-line entry point: ``gzk <subcommand> [flags]``.

Exit codes: 0 success, 1 verification or numerical failure, 2 usage error.
Every subcommand accepts ``--config FILE`` holding ``key=value`` lines named
after the long flags; flags given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from gzk.datasets import LAYOUTS, NORMALIZATIONS, SYNTHETIC, Dataset, ingest_csv, preprocess, synthetic
from gzk.errors import (
    ConfigurationError,
    DomainError,
    GzkError,
    IngestionError,
    InvalidKernelError,
    UnsupportedError,
)
from gzk.features import build_features
from gzk.kernels import (
    GzkModel,
    exponential_model,
    gaussian_model,
    gram_exact,
    gram_truncated,
    ntk_model,
    polynomial_model,
    select_truncation,
)
from gzk.learning import (
    STUDY_KERNELS,
    approx_error_study,
    exact_krr,
    kernel_kmeans,
    kmeans_objective_exact,
    krr_fit,
)
from gzk.spectral import (
    EIG_MAX_N,
    GRAM_MAX_N,
    achieved_epsilon,
    pcp_lambda,
    projection_cost_gap,
    spectral_report,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MODEL_KERNELS = ("gaussian", "exponential", "polynomial", "ntk")
_USAGE_ERRORS = (ConfigurationError, DomainError, IngestionError, InvalidKernelError, UnsupportedError)

DEFAULT_DATA = {
    "build-features": "ball-uniform",
    "verify-spectral": "ball-uniform",
    "verify-projection": "ball-uniform",
    "krr": "smooth-regression",
    "kmeans": "blobs",
    "bench": "ball-uniform",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _common(p: argparse.ArgumentParser, out_help: str) -> None:
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help=out_help)
    p.add_argument("--workers", type=int, help="worker threads (default GZK_THREADS or cores)")


def _data_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--input", help="numeric CSV file")
    g.add_argument("--label-col", type=int, help="0-based coordinate index of --input holding labels")
    g.add_argument("--layout", choices=LAYOUTS, default="columns",
                   help="CSV orientation: one point per column (default) or per row")
    g.add_argument("--header", action="store_true", help="skip the first CSV line")
    g.add_argument("--normalize", choices=NORMALIZATIONS, default="none")
    g.add_argument("--scale", type=float, default=1.0, help="factor for --normalize scale")
    g.add_argument("--synthetic", choices=sorted(SYNTHETIC), help="generated dataset (default depends on subcommand)")
    g.add_argument("--n", type=_positive_int, default=200, help="synthetic point count")
    g.add_argument("--d", type=int, default=3, help="synthetic dimension")


def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("kernel")
    g.add_argument("--kernel", choices=MODEL_KERNELS, default="gaussian")
    g.add_argument("--kernel-gamma", type=float, default=1.0, help="exponential kernel rate")
    g.add_argument("--degree", type=int, default=3, help="polynomial kernel degree")
    g.add_argument("--q", type=int, help="explicit degree cutoff (with --s)")
    g.add_argument("--s", type=int, help="explicit radial order (with --q)")
    g.add_argument("--eps", type=float, default=0.1, help="automatic truncation accuracy")
    g.add_argument("--r", type=float, help="automatic truncation radius (default: max data norm)")
    g.add_argument("--lambda", dest="lam", type=float, default=0.01)
    g.add_argument("--m", type=int, default=256, help="number of sphere samples")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gzk", description="Generalized zonal kernel random features.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("expand-error", help="max errors of Taylor and Gegenbauer series")
    _common(p, "CSV path (default stdout)")
    p.add_argument("--kernel", choices=sorted(STUDY_KERNELS), default="exp2")
    p.add_argument("--dims", type=_int_list, default=[2, 4, 8, 32])
    p.add_argument("--max-degree", type=int, default=15)

    p = sub.add_parser("build-features", help="write a binary feature matrix")
    _common(p, "binary feature file (required)")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--csv", help="also write the features as CSV")

    p = sub.add_parser("verify-spectral", help="spectral approximation report")
    _common(p, "JSON path (default stdout)")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--reference", choices=("auto", "exact", "truncated"), default="auto")
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--max-eps", type=float, help="exit 1 if achieved eps exceeds this")

    p = sub.add_parser("verify-projection", help="projection-cost preservation check")
    _common(p, "JSON path (default stdout)")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--reference", choices=("auto", "exact", "truncated"), default="truncated")
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--factor", type=float, default=16.0, help="pass iff gap <= factor * achieved eps")

    p = sub.add_parser("krr", help="kernel ridge regression with random features")
    _common(p, "prediction CSV (index, value); default stdout")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--lambdas", type=_float_list, help="ridge grid; best held-out MSE is reported")
    p.add_argument("--n-test", type=int, default=100, help="held-out points")
    p.add_argument("--exact", action="store_true", help="also fit exact KRR")
    p.add_argument("--report", help="JSON report path")

    p = sub.add_parser("kmeans", help="k-means on random features")
    _common(p, "assignment CSV (index, value); default stdout")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--exact", action="store_true", help="also report the exact-kernel objective")
    p.add_argument("--report", help="JSON report path")

    p = sub.add_parser("bench", help="feature-generation throughput")
    _common(p, "JSON path (default stdout)")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--repeats", type=int, default=3)
    return parser


def _expand_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Splice ``key=value`` lines from ``--config`` in front of the explicit flags."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None or not argv:
        return argv
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    sub = parser._subparsers._group_actions[0].choices.get(argv[0])  # type: ignore[union-attr]
    if sub is None:
        return argv
    flags = {}
    for a in sub._actions:
        for opt in a.option_strings:
            flags[opt] = a
    extra: list[str] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        opt = "--" + key.replace("_", "-")
        if opt not in flags or opt == "--config":
            raise UsageError(f"{path}:{lineno}: unknown option {key!r} for {argv[0]}")
        if isinstance(flags[opt], argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                extra.append(opt)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"{path}:{lineno}: {key} expects true or false")
        else:
            extra += [opt, value]
    return [argv[0]] + extra + argv[1:]


def _load_data(args, need_labels: bool = False, extra: int = 0) -> Dataset:
    if args.input:
        ds = ingest_csv(args.input, args.label_col, args.header, args.normalize, args.scale, args.layout)
        if need_labels and ds.y is None:
            raise ConfigurationError("this subcommand needs targets; pass --label-col")
        return ds
    name = args.synthetic or DEFAULT_DATA[args.command]
    if need_labels and name not in ("smooth-regression", "blobs"):
        raise ConfigurationError(f"synthetic dataset {name!r} has no targets")
    kwargs = {"k": args.k} if name == "blobs" and hasattr(args, "k") else {}
    ds = synthetic(name, args.n + extra, args.d, args.seed, **kwargs)
    if args.normalize != "none":
        ds.X = preprocess(ds.X, args.normalize, args.scale)
        ds.preprocessing = args.normalize
    return ds


def _truncation(args, ds: Dataset, n: int) -> tuple[int, int]:
    if (args.q is None) != (args.s is None):
        raise ConfigurationError("give both --q and --s for explicit truncation, or neither for automatic")
    if args.q is not None:
        if args.q < 0 or args.s < 1:
            raise ConfigurationError("need --q >= 0 and --s >= 1")
        return args.q, args.s
    r = args.r if args.r is not None else max(ds.max_norm, 1e-3)
    if args.kernel == "gaussian":
        return select_truncation("gaussian", r, ds.d, n, args.eps, args.lam)
    if args.kernel == "exponential":
        return select_truncation("dot_product", r, ds.d, n, args.eps, args.lam, 1.0, max(1.0, args.kernel_gamma))
    if args.kernel == "polynomial":
        return args.degree, args.degree // 2 + 1
    raise ConfigurationError("the ntk kernel has no automatic truncation; pass --q and --s 1")


def _model(args, ds: Dataset, n: int | None = None) -> GzkModel:
    if args.m < 1:
        raise ConfigurationError(f"--m must be >= 1, got {args.m}")
    if not args.lam > 0:
        raise ConfigurationError(f"--lambda must be positive, got {args.lam}")
    q, s = _truncation(args, ds, n or ds.n)
    if args.kernel == "gaussian":
        return gaussian_model(ds.d, q, s)
    if args.kernel == "exponential":
        return exponential_model(ds.d, q, s, args.kernel_gamma)
    if args.kernel == "polynomial":
        return polynomial_model(ds.d, q, s, args.degree)
    if s != 1:
        raise ConfigurationError("the ntk kernel has radial order 1; pass --s 1")
    return ntk_model(ds.d, q)


def _reference_gram(args, model: GzkModel, X: np.ndarray) -> tuple[np.ndarray, str]:
    if X.shape[1] > GRAM_MAX_N:
        raise ConfigurationError(f"exact Gram matrices are limited to n <= {GRAM_MAX_N}")
    which = args.reference
    if which == "auto":
        which = "exact" if model.reference is not None else "truncated"
    if which == "exact":
        return gram_exact(model, X, X), which
    return gram_truncated(model, X, X), which


def _features(args, model, X):
    return build_features(X, model, args.m, args.seed, workers=args.workers)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _index_csv(values) -> str:
    buf = io.StringIO()
    buf.write("index,value\n")
    for i, v in enumerate(np.asarray(values).tolist()):
        buf.write(f"{i},{v!r}\n")
    return buf.getvalue()


def _model_info(model: GzkModel) -> dict:
    return {"kernel": model.name, "q": model.q, "s": model.s, "d": model.d, "fingerprint": model.fingerprint()}


def cmd_expand_error(args) -> int:
    if args.max_degree < 0:
        raise ConfigurationError("--max-degree must be >= 0")
    if not args.dims or min(args.dims) < 2:
        raise ConfigurationError("--dims needs dimensions >= 2")
    rows = approx_error_study(args.kernel, args.dims, range(args.max_degree + 1))
    buf = io.StringIO()
    buf.write("method,d,degree,max_error\n")
    for method, d, degree, err in rows:
        buf.write(f"{method},{d},{degree},{err!r}\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_build_features(args) -> int:
    if not args.out:
        raise ConfigurationError("build-features needs --out")
    ds = _load_data(args)
    model = _model(args, ds)
    Z = _features(args, model, ds.X)
    Z.save(args.out)
    if args.csv:
        Z.to_csv(args.csv)
    return EXIT_OK


def cmd_verify_spectral(args) -> int:
    ds = _load_data(args)
    if ds.n > EIG_MAX_N:
        raise ConfigurationError(f"verify-spectral is limited to n <= {EIG_MAX_N}")
    model = _model(args, ds)
    K, which = _reference_gram(args, model, ds.X)
    Z = _features(args, model, ds.X)
    rank = min(args.rank, ds.n - 1)
    report = spectral_report(K, Z.data, args.lam, rank=rank, m=args.m, seed=args.seed).to_dict()
    report.update(_model_info(model), reference=which)
    ok = args.max_eps is None or report["achieved_eps"] <= args.max_eps
    report["max_eps"] = args.max_eps
    report["pass"] = ok
    _emit(_json(report), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_projection(args) -> int:
    ds = _load_data(args)
    if ds.n > EIG_MAX_N:
        raise ConfigurationError(f"verify-projection is limited to n <= {EIG_MAX_N}")
    if not 1 <= args.rank < ds.n:
        raise ConfigurationError(f"--rank must satisfy 1 <= rank < n, got {args.rank}")
    model = _model(args, ds)
    K, which = _reference_gram(args, model, ds.X)
    Z = _features(args, model, ds.X)
    lam = pcp_lambda(K, args.rank)
    eps = achieved_epsilon(K, Z.data, lam)
    gap = projection_cost_gap(K, Z.data, args.rank, args.trials, args.seed)
    ok = gap <= args.factor * eps
    report = {
        "achieved_eps": eps,
        "proj_cost_gap": gap,
        "lambda": lam,
        "rank": args.rank,
        "factor": args.factor,
        "n": ds.n,
        "m": args.m,
        "seed": args.seed,
        "reference": which,
        "pass": ok,
    }
    report.update(_model_info(model))
    _emit(_json(report), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def _split(ds: Dataset, n_test: int, seed: int):
    n = ds.n
    if not 1 <= n_test < n:
        raise ConfigurationError(f"--n-test must be in [1, {n - 1}], got {n_test}")
    if ds.source.startswith("synthetic:"):
        train, test = np.arange(n - n_test), np.arange(n - n_test, n)
    else:
        perm = np.random.Generator(np.random.Philox(key=np.array([seed, 0x5350], dtype=np.uint64))).permutation(n)
        train, test = np.sort(perm[n_test:]), np.sort(perm[:n_test])
    return train, test


def cmd_krr(args) -> int:
    extra = 0 if args.input else args.n_test
    ds = _load_data(args, need_labels=True, extra=extra)
    train, test = _split(ds, args.n_test, args.seed)
    lams = args.lambdas or [args.lam]
    if min(lams) <= 0:
        raise ConfigurationError("ridge parameters must be positive")
    model = _model(args, ds, n=len(train))
    Z = _features(args, model, ds.X)
    Ztr, Zte = Z.data[:, train], Z.data[:, test]
    ytr, yte = ds.y[train], ds.y[test]
    grid = []
    best = None
    for lam in lams:
        fit = krr_fit(Ztr, ytr, lam)
        pred = Zte.T @ fit.weights
        mse = float(np.mean((pred - yte) ** 2))
        entry = {"lambda": lam, "mse": mse, "method": fit.method}
        if args.exact:
            kernel = gram_exact if model.reference is not None else gram_truncated
            K = kernel(model, ds.X[:, train], ds.X[:, train])
            Kc = kernel(model, ds.X[:, test], ds.X[:, train])
            entry["exact_mse"] = float(np.mean((exact_krr(K, ytr, lam, Kc) - yte) ** 2))
        grid.append(entry)
        if best is None or mse < best[0]:
            best = (mse, lam, pred)
    report = {
        "grid": grid,
        "best_lambda": best[1],
        "best_mse": best[0],
        "n_train": len(train),
        "n_test": len(test),
        "m": args.m,
        "seed": args.seed,
    }
    report.update(_model_info(model))
    _emit(_index_csv(best[2]), args.out)
    if args.report:
        Path(args.report).write_text(_json(report))
    return EXIT_OK


def cmd_kmeans(args) -> int:
    ds = _load_data(args)
    if not 1 <= args.k <= ds.n:
        raise ConfigurationError(f"--k must satisfy 1 <= k <= n, got k={args.k}, n={ds.n}")
    if args.max_iters < 1:
        raise ConfigurationError("--max-iters must be >= 1")
    model = _model(args, ds)
    Z = _features(args, model, ds.X)
    result = kernel_kmeans(Z, args.k, seed=args.seed, max_iters=args.max_iters)
    report = {
        "objective": result.objective,
        "iterations": result.iterations,
        "history": result.history,
        "cluster_sizes": np.bincount(result.assignments, minlength=args.k).tolist(),
        "k": args.k,
        "n": ds.n,
        "m": args.m,
        "seed": args.seed,
    }
    if args.exact:
        K = gram_truncated(model, ds.X, ds.X)
        report["objective_exact"] = kmeans_objective_exact(K, result.assignments)
    if ds.labels is not None:
        report["ground_truth_agreement"] = _agreement(result.assignments, ds.labels, args.k)
    report.update(_model_info(model))
    _emit(_index_csv(result.assignments.tolist()), args.out)
    if args.report:
        Path(args.report).write_text(_json(report))
    return EXIT_OK


def _agreement(assign: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Fraction of points on which ``assign`` agrees with ``labels`` under the best greedy relabelling."""
    table = np.zeros((k, int(labels.max()) + 1), dtype=int)
    np.add.at(table, (assign, labels), 1)
    hits = 0
    while table.size and table.max() > 0:
        i, j = np.unravel_index(np.argmax(table), table.shape)
        hits += int(table[i, j])
        table[i, :] = 0
        table[:, j] = 0
    return hits / len(assign)


def cmd_bench(args) -> int:
    ds = _load_data(args)
    model = _model(args, ds)
    times = []
    Z = None
    for _ in range(max(1, args.repeats)):
        t0 = time.perf_counter()
        Z = _features(args, model, ds.X)
        times.append(time.perf_counter() - t0)
    best = min(times)
    report = {
        "n": ds.n,
        "m": args.m,
        "seed": args.seed,
        "features_sha256": hashlib.sha256(Z.to_bytes()).hexdigest(),
        "timing": {
            "seconds": times,
            "best_seconds": best,
            "columns_per_second": args.m * ds.n / best if best > 0 else math.inf,
            "workers": args.workers,
        },
    }
    report.update(_model_info(model))
    _emit(_json(report), args.out)
    return EXIT_OK


COMMANDS = {
    "expand-error": cmd_expand_error,
    "build-features": cmd_build_features,
    "verify-spectral": cmd_verify_spectral,
    "verify-projection": cmd_verify_projection,
    "krr": cmd_krr,
    "kmeans": cmd_kmeans,
    "bench": cmd_bench,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(parser, argv))
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GzkError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
