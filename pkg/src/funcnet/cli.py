"""Command-line interface: simulate, fit, benchmark, gradcheck.

Every run is reproducible from its flags (or key=value config file; a
flag beats the file).  Exit codes: 0 success, 1 usage/config error,
2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import baselines, datagen, fbnn, fdnn, training
from .gp import MaternParams

SCHEMA_VERSION = 1

MODELS = ("fdnn", "fbnn", "fflm", "vnn")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in str(text).split(",") if part.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in str(text).split(",") if part.strip())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in str(text).split(",") if part.strip())


def _read_config_file(path: str) -> dict:
    """Flat key=value text; '#' starts a comment; keys use underscores."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_file(args: argparse.Namespace, parser_defaults: dict):
    """Fill still-unset options from the config file, then hard defaults."""
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = _read_config_file(args.config)
    for key, (cast, default) in parser_defaults.items():
        if getattr(args, key, None) is not None:
            continue
        if key in file_cfg:
            raw = file_cfg[key]
            try:
                setattr(args, key, cast(raw))
            except (TypeError, ValueError) as exc:
                raise _UsageError(f"config value {key}={raw!r}: {exc}") from exc
        else:
            setattr(args, key, default)
    return args


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


# (cast, hard default) per option, shared by flag parsing and config files
_COMMON = {
    "seed": (int, 0),
    "out": (str, "runs"),
}
_SIM_DEFAULTS = {
    **_COMMON,
    "scenario": (str, "linear"),
    "first_term": (str, "as_printed"),
    "n": (int, 1100),
    "m": (int, 100),
    "m_y": (int, 75),
    "sigma2": (float, 1.0),
    "rho": (float, 0.5),
    "nu": (float, 2.5),
}
_TRAIN_DEFAULTS = {
    "step_size": (float, 1e-2),
    "max_iterations": (int, 2000),
    "patience": (float, 100),
    "optimizer": (str, "adam"),
    "batch_size": (int, None),
    "lam": (float, None),
    "lam_b": (float, 0.0),
    "lam_w": (float, 0.0),
}
_ARCH_DEFAULTS = {
    "neurons": (_int_list, (4,)),
    "grid_points": (_int_list, (50,)),
    "num_basis": (int, 15),
    "hidden": (_int_list, (128, 128)),
    "activation": (str, "tanh"),
}
_FIT_DEFAULTS = {
    **_COMMON,
    **_TRAIN_DEFAULTS,
    **_ARCH_DEFAULTS,
    "data": (str, None),
    "m": (int, None),
    "m_y": (int, None),
    "model": (str, "fdnn"),
    "mode": (str, "early-stopping"),
    "cv_strategy": (str, "mean"),
    "folds": (int, 5),
    "iterations": (int, 1000),
    "lam_grid": (_float_list, None),
    "n_train": (int, None),
    "n_val": (int, None),
    "n_test": (int, None),
    "split_seed": (int, 0),
}
_BENCH_DEFAULTS = {
    **_COMMON,
    **_TRAIN_DEFAULTS,
    **_ARCH_DEFAULTS,
    "scenarios": (_str_list, ("linear",)),
    "models": (_str_list, ("fdnn",)),
    "replicates": (int, 10),
    "n": (int, 1100),
    "m": (int, 100),
    "m_y": (int, 75),
    "first_term": (str, "as_printed"),
    "workers": (int, 1),
    "write_params": (_bool, True),
}
_GRADCHECK_DEFAULTS = {
    **_COMMON,
    "eps": (float, 1e-5),
    "tolerance": (float, 1e-4),
    "corrupt": (_bool, False),
}


def build_parser() -> _Parser:
    parser = _Parser(prog="funcnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(sp, flag, **kw):
        sp.add_argument(flag, default=None, **kw)

    sim = sub.add_parser("simulate", help="generate a scenario dataset CSV")
    add(sim, "--config")
    add(sim, "--scenario", choices=datagen.SCENARIOS)
    add(sim, "--first-term", choices=("as_printed", "s"))
    add(sim, "--n", type=int)
    add(sim, "--m", type=int)
    add(sim, "--m-y", type=int)
    add(sim, "--sigma2", type=float)
    add(sim, "--rho", type=float)
    add(sim, "--nu", type=float)
    add(sim, "--seed", type=int)
    add(sim, "--out")

    fit = sub.add_parser("fit", help="train one model on a dataset CSV")
    add(fit, "--config")
    add(fit, "--data")
    add(fit, "--m", type=int)
    add(fit, "--m-y", type=int)
    add(fit, "--model", choices=MODELS)
    add(fit, "--mode", choices=("early-stopping", "cv", "fixed"))
    add(fit, "--cv-strategy", choices=training.ES_STRATEGIES)
    add(fit, "--folds", type=int)
    add(fit, "--iterations", type=int)
    add(fit, "--neurons", type=_int_list)
    add(fit, "--grid-points", type=_int_list)
    add(fit, "--num-basis", type=int)
    add(fit, "--hidden", type=_int_list)
    add(fit, "--activation")
    add(fit, "--step-size", type=float)
    add(fit, "--max-iterations", type=int)
    add(fit, "--patience", type=float)
    add(fit, "--optimizer", choices=training.OPTIMIZERS)
    add(fit, "--batch-size", type=int)
    add(fit, "--lam", type=float)
    add(fit, "--lam-b", type=float)
    add(fit, "--lam-w", type=float)
    add(fit, "--lam-grid", type=_float_list)
    add(fit, "--n-train", type=int)
    add(fit, "--n-val", type=int)
    add(fit, "--n-test", type=int)
    add(fit, "--split-seed", type=int)
    add(fit, "--seed", type=int)
    add(fit, "--out")

    bench = sub.add_parser("benchmark", help="scenario x model RMSE comparison")
    add(bench, "--config")
    add(bench, "--scenarios", type=_str_list)
    add(bench, "--models", type=_str_list)
    add(bench, "--replicates", type=int)
    add(bench, "--n", type=int)
    add(bench, "--m", type=int)
    add(bench, "--m-y", type=int)
    add(bench, "--first-term", choices=("as_printed", "s"))
    add(bench, "--neurons", type=_int_list)
    add(bench, "--grid-points", type=_int_list)
    add(bench, "--num-basis", type=int)
    add(bench, "--hidden", type=_int_list)
    add(bench, "--activation")
    add(bench, "--step-size", type=float)
    add(bench, "--max-iterations", type=int)
    add(bench, "--patience", type=float)
    add(bench, "--optimizer", choices=training.OPTIMIZERS)
    add(bench, "--batch-size", type=int)
    add(bench, "--lam", type=float)
    add(bench, "--lam-b", type=float)
    add(bench, "--lam-w", type=float)
    add(bench, "--workers", type=int)
    add(bench, "--write-params", type=_bool)
    add(bench, "--seed", type=int)
    add(bench, "--out")

    gc = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    add(gc, "--config")
    add(gc, "--eps", type=float)
    add(gc, "--tolerance", type=float)
    add(gc, "--seed", type=int)
    add(gc, "--out")
    gc.add_argument("--corrupt", action="store_const", const=True, default=None,
                    help=argparse.SUPPRESS)
    return parser


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def cmd_simulate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    scenario = datagen.Scenario(args.scenario, args.first_term)
    matern = MaternParams(sigma2=args.sigma2, rho=args.rho, nu=args.nu)
    data = datagen.generate(scenario, args.n, args.m, args.m_y, matern, args.seed)
    csv_path = os.path.join(args.out, "dataset.csv")
    datagen.save_table(csv_path, data)
    _write_json(
        os.path.join(args.out, "dataset.json"),
        {
            "schema_version": SCHEMA_VERSION,
            "command": "simulate",
            "scenario": args.scenario,
            "first_term": args.first_term,
            "n": args.n,
            "m": args.m,
            "m_y": args.m_y,
            "sigma2": args.sigma2,
            "rho": args.rho,
            "nu": args.nu,
            "seed": args.seed,
        },
    )
    print(f"wrote {csv_path} ({data.n} rows)")
    return 0


def _default_split(n: int) -> tuple[int, int, int]:
    """Default split proportions: 5/11 train, 1/11 validation, 5/11 test."""
    n_test = (5 * n) // 11
    n_val = n // 11
    return n - n_val - n_test, n_val, n_test


def _resolve_layout(args):
    m, m_y = args.m, args.m_y
    sidecar = os.path.splitext(args.data)[0] + ".json"
    if (m is None or m_y is None) and os.path.exists(sidecar):
        with open(sidecar) as fh:
            doc = json.load(fh)
        m = doc["m"] if m is None else m
        m_y = doc["m_y"] if m_y is None else m_y
    if m is None or m_y is None:
        raise _UsageError("--m/--m-y required (no dataset sidecar found)")
    return m, m_y


def _build_network(kind: str, m: int, m_y: int, input_count: int, args, seed):
    if kind == "fdnn":
        cfg = fdnn.FdnnConfig(
            input_points=m,
            output_points=m_y,
            input_count=input_count,
            hidden_neurons=tuple(args.neurons),
            hidden_points=tuple(args.grid_points),
            activation=args.activation,
        )
        return fdnn.init(cfg, seed)
    if kind == "fbnn":
        cfg = fbnn.FbnnConfig(
            input_points=m,
            output_points=m_y,
            input_count=input_count,
            hidden_neurons=tuple(args.neurons),
            hidden_points=tuple(args.grid_points),
            num_intercept_basis=args.num_basis,
            num_row_basis=args.num_basis,
            num_col_basis=args.num_basis,
            activation=args.activation,
        )
        return fbnn.init(cfg, seed)
    if kind == "vnn":
        return baselines.vnn_init(
            input_count, m, m_y, tuple(args.hidden), args.activation, seed
        )
    raise _UsageError(f"cannot build model kind {kind!r}")


def _train_config(args) -> training.TrainConfig:
    lam_b, lam_w = args.lam_b, args.lam_w
    if args.lam is not None:
        lam_b = lam_w = args.lam
    return training.TrainConfig(
        step_size=args.step_size,
        max_iterations=args.max_iterations,
        patience=args.patience if math.isfinite(args.patience) else math.inf,
        optimizer=args.optimizer,
        batch_size=args.batch_size,
        lam_b=lam_b,
        lam_w=lam_w,
        seed=args.seed,
    )


def _rmse_of(model, part) -> float:
    return training.rmse(model.predict(part.x), part.y, part.y_grid)


def cmd_fit(args) -> int:
    if not args.data:
        raise _UsageError("fit requires --data PATH")
    m, m_y = _resolve_layout(args)
    data = datagen.load_table(args.data, m, m_y)
    n_train, n_val, n_test = (
        (args.n_train, args.n_val, args.n_test)
        if args.n_train is not None
        else _default_split(data.n)
    )
    spec = datagen.SplitSpec(n_train, n_val, n_test, args.split_seed)
    train, val, test = datagen.split(data, spec)
    os.makedirs(args.out, exist_ok=True)
    cfg = _train_config(args)
    input_count = data.x.shape[1]

    history = None
    extra: dict = {}
    if args.model == "fflm":
        # the linear model needs no validation set: fit on train + val
        merged = datagen.FuncDataset(
            np.concatenate([train.x, val.x]),
            np.concatenate([train.y, val.y]),
            data.x_grid,
            data.y_grid,
        )
        lam = args.lam if args.lam is not None else args.lam_w
        if args.lam_grid:
            lam = baselines.fflm_tune_lambda(
                merged, args.lam_grid, k=args.folds, seed=args.seed,
                num_intercept_basis=args.num_basis,
                num_pred_basis=args.num_basis,
                num_resp_basis=args.num_basis,
            )
            extra["tuned_lam"] = lam
        model = baselines.fflm_fit(
            merged,
            num_intercept_basis=args.num_basis,
            num_pred_basis=args.num_basis,
            num_resp_basis=args.num_basis,
            lam=lam,
        )
    else:
        if args.lam_grid:
            factory = lambda seed: _build_network(  # noqa: E731
                args.model, m, m_y, input_count, args, seed
            )
            lam_b, lam_w = training.tune_lambda(
                factory, (train.x, train.y), args.lam_grid, k=args.folds, cfg=cfg
            )
            cfg = cfg.replace(lam_b=lam_b, lam_w=lam_w)
            extra["tuned_lam_b"] = lam_b
            extra["tuned_lam_w"] = lam_w
        model = _build_network(args.model, m, m_y, input_count, args, args.seed)
        if args.mode == "early-stopping":
            history = training.train_early_stopping(
                model, (train.x, train.y), (val.x, val.y), cfg
            )
        elif args.mode == "fixed":
            merged_x = np.concatenate([train.x, val.x])
            merged_y = np.concatenate([train.y, val.y])
            history = training.train_fixed(model, merged_x, merged_y,
                                           args.iterations, cfg)
        else:
            factory = lambda seed: _build_network(  # noqa: E731
                args.model, m, m_y, input_count, args, seed
            )
            merged_x = np.concatenate([train.x, val.x])
            merged_y = np.concatenate([train.y, val.y])
            model, cv_res = training.cv_early_stopping(
                factory, (merged_x, merged_y), k=args.folds,
                strategy=args.cv_strategy, cfg=cfg,
            )
            extra["cv"] = {
                "strategy": cv_res.strategy,
                "fold_best_iterations": cv_res.fold_best_iterations,
                "fold_val_losses": cv_res.fold_val_losses,
                "aggregate_iterations": cv_res.aggregate_iterations,
            }

    metrics = {
        "schema_version": SCHEMA_VERSION,
        "model": args.model,
        "mode": args.mode if args.model != "fflm" else "closed-form",
        "train_rmse": _rmse_of(model, train),
        "val_rmse": _rmse_of(model, val) if val.n else None,
        "test_rmse": _rmse_of(model, test) if test.n else None,
        "lam_b": cfg.lam_b if args.model != "fflm" else None,
        "lam_w": cfg.lam_w if args.model != "fflm" else None,
        **extra,
    }
    if history is not None:
        metrics["stopping_iteration"] = history.stopping_iteration
        metrics["best_iteration"] = history.best_iteration
        history.to_csv(os.path.join(args.out, "history.csv"))
        history.to_json(os.path.join(args.out, "history.json"))
    _write_json(os.path.join(args.out, "model.json"), model.to_dict())
    _write_json(os.path.join(args.out, "metrics.json"), metrics)
    print(
        f"{args.model}: train {metrics['train_rmse']:.4f}"
        + (f", test {metrics['test_rmse']:.4f}" if metrics["test_rmse"] else "")
    )
    return 0


def _benchmark_tasks(args):
    """Expand the run matrix; one data stream per (scenario, replicate)."""
    root = np.random.SeedSequence(args.seed)
    scen_seeds = root.spawn(len(args.scenarios))
    tasks = []
    for s_idx, scenario in enumerate(args.scenarios):
        rep_seeds = scen_seeds[s_idx].spawn(args.replicates)
        for rep in range(args.replicates):
            streams = rep_seeds[rep].spawn(2 + len(args.models))
            for m_idx, model in enumerate(args.models):
                tasks.append(
                    {
                        "scenario": scenario,
                        "model": model,
                        "replicate": rep,
                        "data_seed": streams[0],
                        "split_seed": streams[1],
                        "model_seed": streams[2 + m_idx],
                    }
                )
    return tasks


def _run_benchmark_task(task, args) -> dict:
    scenario = datagen.Scenario(task["scenario"], args.first_term)
    data = datagen.generate(scenario, args.n, args.m, args.m_y,
                            seed=task["data_seed"])
    n_train, n_val, n_test = _default_split(data.n)
    train, val, test = datagen.split(
        data, datagen.SplitSpec(n_train, n_val, n_test, task["split_seed"])
    )
    cfg = _train_config(args)
    model_seed = task["model_seed"]
    kind = task["model"]
    if kind == "fflm":
        merged = datagen.FuncDataset(
            np.concatenate([train.x, val.x]),
            np.concatenate([train.y, val.y]),
            data.x_grid,
            data.y_grid,
        )
        lam = args.lam if args.lam is not None else args.lam_w
        model = baselines.fflm_fit(
            merged,
            num_intercept_basis=args.num_basis,
            num_pred_basis=args.num_basis,
            num_resp_basis=args.num_basis,
            lam=lam,
        )
    else:
        model = _build_network(kind, args.m, args.m_y, 1, args, model_seed)
        training.train_early_stopping(model, (train.x, train.y), (val.x, val.y), cfg)
    out = {
        "scenario": task["scenario"],
        "model": kind,
        "replicate": task["replicate"],
        "rmse": _rmse_of(model, test),
    }
    if task["replicate"] == 0 and kind in ("fdnn", "fbnn") and args.write_params:
        out["params_model"] = (
            fbnn.expand_to_direct(model) if kind == "fbnn" else model
        ).to_dict()
    return out


def _task_wrapper(payload):
    task, args_dict = payload
    args = argparse.Namespace(**args_dict)
    try:
        return _run_benchmark_task(task, args)
    except Exception as exc:  # recorded, run continues
        return {
            "scenario": task["scenario"],
            "model": task["model"],
            "replicate": task["replicate"],
            "rmse": None,
            "error": f"{type(exc).__name__}: {exc}",
        }


def _write_param_functions(path, doc):
    """Plot-ready long CSV of a network's parameter functions."""
    net = fdnn.FdnnNetwork.from_dict(doc)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "neuron", "source", "kind", "s", "t", "value"])
        for l_idx, layer in enumerate(net.layers):
            s_pts = layer.out_grid.points
            t_pts = layer.in_grid.points
            for k in range(layer.out_count):
                for s_i, s_val in enumerate(s_pts):
                    writer.writerow(
                        [l_idx, k, "", "intercept", repr(float(s_val)), "",
                         repr(float(layer.b[k, s_i]))]
                    )
                for j in range(layer.in_count):
                    for s_i, s_val in enumerate(s_pts):
                        for t_i, t_val in enumerate(t_pts):
                            writer.writerow(
                                [l_idx, k, j, "weight", repr(float(s_val)),
                                 repr(float(t_val)),
                                 repr(float(layer.w[k, j, s_i, t_i]))]
                            )


def cmd_benchmark(args) -> int:
    for kind in args.models:
        if kind not in MODELS:
            raise _UsageError(f"unknown model {kind!r}; choose from {MODELS}")
    for name in args.scenarios:
        if name not in datagen.SCENARIOS:
            raise _UsageError(f"unknown scenario {name!r}")
    os.makedirs(args.out, exist_ok=True)
    workers = args.workers
    env_workers = os.environ.get("FUNCNET_WORKERS")
    if env_workers:
        workers = int(env_workers)

    tasks = _benchmark_tasks(args)
    args_dict = vars(args).copy()
    payloads = [(task, args_dict) for task in tasks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_task_wrapper, payloads))
    else:
        rows = [_task_wrapper(p) for p in payloads]

    results_path = os.path.join(args.out, "results.csv")
    with open(results_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "model", "replicate", "rmse", "error"])
        for row in sorted(
            rows, key=lambda r: (r["scenario"], r["model"], r["replicate"])
        ):
            writer.writerow(
                [
                    row["scenario"],
                    row["model"],
                    row["replicate"],
                    "" if row["rmse"] is None else repr(float(row["rmse"])),
                    row.get("error", ""),
                ]
            )

    summary_path = os.path.join(args.out, "summary.csv")
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "model", "replicates", "mean_rmse", "se_rmse"])
        for scenario in args.scenarios:
            for kind in args.models:
                vals = [
                    row["rmse"]
                    for row in rows
                    if row["scenario"] == scenario
                    and row["model"] == kind
                    and row["rmse"] is not None
                ]
                if vals:
                    mean = float(np.mean(vals))
                    se = (
                        float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
                        if len(vals) > 1
                        else 0.0
                    )
                    writer.writerow([scenario, kind, len(vals), f"{mean:.6f}",
                                     f"{se:.6f}"])
                else:
                    writer.writerow([scenario, kind, 0, "", ""])

    for row in rows:
        if "params_model" in row:
            path = os.path.join(
                args.out, f"params_{row['scenario']}_{row['model']}.csv"
            )
            _write_param_functions(path, row["params_model"])

    failures = sum(1 for row in rows if row["rmse"] is None)
    print(f"wrote {results_path} and {summary_path}"
          + (f" ({failures} failed replicates)" if failures else ""))
    return 0


def _penalty_fd_error(net, lam_b: float, lam_w: float, eps: float) -> float:
    """Finite-difference audit of the roughness-penalty gradient alone."""
    _, grads = net.penalty(lam_b, lam_w)
    worst = 0.0
    for param, grad in zip(net.parameters(), grads):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for c in range(flat.size):
            keep = flat[c]
            flat[c] = keep + eps
            up = net.penalty(lam_b, lam_w)[0]
            flat[c] = keep - eps
            down = net.penalty(lam_b, lam_w)[0]
            flat[c] = keep
            numeric = (up - down) / (2.0 * eps)
            denom = max(abs(gflat[c]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[c] - numeric) / denom)
    return worst


def cmd_gradcheck(args) -> int:
    """Finite-difference audit of all backward passes on small nets.

    The quadratic-loss gradient and the penalty gradient are audited
    against their own objectives; summing terms of very different
    magnitudes would manufacture near-zero denominators and report
    finite-difference roundoff instead of implementation error.
    """
    os.makedirs(args.out, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    m, m_hidden, m_y = 10, 8, 8
    batch = 3
    x = rng.standard_normal((batch, 1, m))
    y = rng.standard_normal((batch, m_y))

    nets = {
        "fdnn": fdnn.init(
            fdnn.FdnnConfig(m, m_y, 1, (2,), (m_hidden,), "tanh"), rng.integers(2**32)
        ),
        "fbnn": fbnn.init(
            fbnn.FbnnConfig(m, m_y, 1, (2,), (m_hidden,), 5, 5, 5, 4, "tanh"),
            rng.integers(2**32),
        ),
        "vnn": baselines.vnn_init(1, m, m_y, (6,), "tanh", rng.integers(2**32)),
    }
    report = {"schema_version": SCHEMA_VERSION, "eps": args.eps,
              "tolerance": args.tolerance, "errors": {}}
    worst = 0.0
    for name, net in nets.items():
        if args.corrupt:
            original_backward = net.backward

            def broken(cache, resid, _orig=original_backward):
                grads = _orig(cache, resid)
                grads[0] = grads[0] + 1.0
                return grads

            net.backward = broken
        err_loss = training.grad_check(net, x, y, eps=args.eps)
        entry = {"loss": err_loss}
        worst = max(worst, err_loss)
        if name in ("fdnn", "fbnn"):
            err_pen = _penalty_fd_error(net, 1.0, 1.0, args.eps)
            entry["penalty"] = err_pen
            worst = max(worst, err_pen)
            print(f"gradcheck {name}: loss {err_loss:.3e}, penalty {err_pen:.3e}")
        else:
            print(f"gradcheck {name}: loss {err_loss:.3e}")
        report["errors"][name] = entry
    report["worst"] = worst
    _write_json(os.path.join(args.out, "gradcheck.json"), report)
    if worst > args.tolerance:
        print(f"FAIL: worst error {worst:.3e} exceeds {args.tolerance:.1e}",
              file=sys.stderr)
        return 2
    print(f"OK: worst error {worst:.3e} within {args.tolerance:.1e}")
    return 0


_DEFAULTS_BY_COMMAND = {
    "simulate": _SIM_DEFAULTS,
    "fit": _FIT_DEFAULTS,
    "benchmark": _BENCH_DEFAULTS,
    "gradcheck": _GRADCHECK_DEFAULTS,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, _DEFAULTS_BY_COMMAND[args.command])
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "fit":
            return cmd_fit(args)
        if args.command == "benchmark":
            return cmd_benchmark(args)
        return cmd_gradcheck(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help or hard exits
        return 0 if exc.code in (0, None) else 1
    except (training.TrainingDiverged, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
