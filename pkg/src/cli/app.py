"""
Command-line interface: generate, fit, predict, evaluate, clusters and
convergence.

Exit codes: 0 success, 2 invalid input or files, 3 numerical degeneracy
(including singular FEM systems), 1 any other error of the toolkit.
"""
import argparse
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from config.settings import (
    ACTIVE_DISPLAY_THRESHOLD, CONVERGENCE_DESIGN_SIZES, CONVERGENCE_MESH_SIZES, DEFAULT_MESH_SIZE,
    DEFAULT_TEST_SIZE, DEFAULT_TRAIN_SIZE, LOG_FORMAT, LOGS_DIR, MC_SAMPLES, TIMING_REPEATS,
)
from src.cli.run_config import RunConfig
from src.core.convergence_study import ConvergenceStudy
from src.core.exceptions import (
    EmulatorNotFoundError, InvalidArgumentError, MeshClusterError, MeshValidityError, ModelLoadError,
    NumericalDegeneracyError, OutOfDomainError, ValidationError,
)
from src.core.factory import EmulatorFactory
from src.data.csv_io import read_matrix, write_matrix
from src.data.dataset_io import read_dataset, write_dataset
from src.data.model_store import load_model, save_model
from src.emulators.field import predict_field
from src.emulators.mcgp import FittedEmulator
from src.fem.dataset import evaluation_inputs, generate_dataset, training_inputs
from src.metrics.scores import evaluate_model
from src.utils.performance import Stopwatch

logger = logging.getLogger(__name__)

FIT_LOG_FILE = "fit_log.json"
ELBO_TRACE_FILE = "elbo_trace.csv"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_DEGENERATE = 3


def configure_logging(verbose: bool = False, log_dir: str = LOGS_DIR) -> None:
    """Stream handler, plus mcgp.log in log_dir when one is configured."""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        handlers.append(logging.FileHandler(os.path.join(log_dir, "mcgp.log")))
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT,
                        handlers=handlers, force=True)


def exit_code_for(exc: MeshClusterError) -> int:
    if isinstance(exc, (ValidationError, InvalidArgumentError, ModelLoadError, EmulatorNotFoundError,
                        OutOfDomainError)):
        return EXIT_INVALID
    if isinstance(exc, (NumericalDegeneracyError, MeshValidityError)):
        return EXIT_DEGENERATE
    return EXIT_ERROR


def _write_json(path: str, data: Dict[str, Any]) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def _parse_point(text: str) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InvalidArgumentError(f"--at expects 's1,s2', got '{text}'") from exc
    if len(values) != 2:
        raise InvalidArgumentError(f"--at expects two coordinates, got '{text}'")
    return np.array(values)


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "seed": args.seed, "nugget": args.nugget, "elbo_tol": args.elbo_tol, "max_iter": args.max_iter,
        "multistarts": args.multistarts, "max_evals": args.max_evals, "model_type": args.model_type,
        "init_clusters": args.init_clusters,
        "literal_tau_exponent": True if args.literal_tau_exponent else None,
        "priors": {"alpha0": args.alpha0, "K": args.K, "kappa0": args.kappa0},
    }
    return RunConfig.load(args.config, overrides)


# --- COMMANDS ---

def cmd_generate(args: argparse.Namespace) -> int:
    if args.inputs:
        inputs = read_matrix(args.inputs, columns=1)
    elif args.grid is not None:
        inputs = evaluation_inputs(args.grid)
    else:
        inputs = training_inputs(args.equispaced)
    dataset = generate_dataset(args.h, inputs[:, 0])
    manifest = write_dataset(args.out, dataset, seed=args.seed, header=args.header)
    print(f"Dataset: N={manifest['N']} nodes, n={manifest['n']} inputs -> {args.out}")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = read_dataset(args.data)
    logger.info("Fitting %s on %s (N=%d, n=%d)", config.model_type, args.data,
                dataset.mesh.n_nodes, dataset.n_inputs)
    with Stopwatch() as sw:
        model = EmulatorFactory.fit(config.model_type, dataset.solutions, dataset.inputs,
                                    dataset.mesh.nodes, config.to_fit_config())
    save_model(model, args.out)
    converged = bool(getattr(model, "converged", True))
    fit_log = {"model_type": model.model_type, "fit_seconds": sw.elapsed, "converged": converged,
               "config": config.model_dump()}
    if isinstance(model, FittedEmulator):
        write_matrix(os.path.join(args.out, ELBO_TRACE_FILE), np.array(model.elbo_trace))
        fit_log["n_iter"] = model.n_iter
        fit_log["elbo_monotone"] = model.monotone
    _write_json(os.path.join(args.out, FIT_LOG_FILE), fit_log)
    print(f"Fitted {model.model_type} in {sw.elapsed:.2f}s (converged={converged}) -> {args.out}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    dataset = read_dataset(args.data) if args.data else None
    if dataset is not None and dataset.mesh.n_nodes != model.n_nodes:
        raise ValidationError(f"model has {model.n_nodes} nodes, dataset has {dataset.mesh.n_nodes}",
                              path=args.data)
    if args.inputs:
        X = read_matrix(args.inputs, columns=model.input_dim)
    elif dataset is not None:
        X = dataset.inputs
    else:
        raise InvalidArgumentError("predict needs --inputs or --data")

    if args.at:
        if dataset is None:
            raise InvalidArgumentError("--at needs --data for the mesh")
        s = _parse_point(args.at)
        for x in X:
            mean, variance = predict_field(model, dataset.mesh, s, x)
            print(f"{','.join(repr(float(v)) for v in x)},{mean!r},{variance!r}")
    if args.out:
        means, variances = model.predict_all_nodes(X)
        write_matrix(os.path.join(args.out, "pred_mean.csv"), means)
        write_matrix(os.path.join(args.out, "pred_var.csv"), variances)
        print(f"Predicted {X.shape[0]} inputs x {model.n_nodes} nodes -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    test = read_dataset(args.test)
    if test.mesh.n_nodes != model.n_nodes:
        raise ValidationError(f"model has {model.n_nodes} nodes, test set has {test.mesh.n_nodes}",
                              path=args.test)
    fit_seconds = 0.0
    fit_log_path = os.path.join(args.model, FIT_LOG_FILE)
    if os.path.exists(fit_log_path):
        with open(fit_log_path, "r") as f:
            fit_seconds = float(json.load(f).get("fit_seconds", 0.0))
    report = evaluate_model(model, test.inputs, test.solutions.T, fit_seconds=fit_seconds,
                            repeats=args.repeats, per_node=args.per_node)
    data = report.to_dict()
    if args.out:
        _write_json(args.out, data)
    print(json.dumps(data if args.per_node else {k: v for k, v in data.items() if k != "per_node_rmse"},
                     indent=2, sort_keys=True))
    return EXIT_OK


def cmd_clusters(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if not isinstance(model, FittedEmulator):
        raise InvalidArgumentError(f"clusters needs an mcgp model, got {model.model_type}")
    report = model.cluster_report(args.threshold)
    print(f"{'k':>3} {'tau_sq':>12} {'nodes':>7} {'argmax':>7} {'max_q':>8}  theta")
    for row in report.rows:
        if row.k not in report.displayed_clusters and not args.all:
            continue
        theta = " ".join(f"{t:.4g}" for t in row.theta)
        print(f"{row.k:>3} {row.tau_sq:>12.4e} {row.node_count:>7} {row.argmax_count:>7} "
              f"{row.max_responsibility:>8.4f}  {theta}")
    if args.out:
        table = np.array([
            [row.k, row.tau_sq, *row.theta, row.node_count, row.argmax_count, row.max_responsibility,
             int(row.active), int(row.degenerate)]
            for row in report.rows
        ], dtype=float)
        theta_cols = [f"theta{i + 1}" for i in range(model.input_dim)]
        write_matrix(os.path.join(args.out, "clusters.csv"), table,
                     ["k", "tau_sq", *theta_cols, "node_count", "argmax_count", "max_responsibility",
                      "active", "degenerate"])
        nodes = np.column_stack([model.nodes, report.node_argmax, report.node_max])
        write_matrix(os.path.join(args.out, "node_clusters.csv"), nodes,
                     [f"s{i + 1}" for i in range(model.nodes.shape[1])] + ["argmax_cluster", "max_responsibility"])
        write_matrix(os.path.join(args.out, "responsibilities.csv"), model.responsibilities)
    return EXIT_OK


def cmd_convergence(args: argparse.Namespace) -> int:
    config = _run_config(args)
    study = ConvergenceStudy(design_sizes=args.design_sizes, mesh_sizes=args.mesh_sizes,
                             model_type=config.model_type, fit_config=config.to_fit_config(),
                             mc_samples=args.mc_samples, seed=config.seed)
    report = study.run()
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "convergence_grid.csv"), report.grid(), ["h_X", "h_T", "error"])
    _write_json(os.path.join(args.out, "convergence_report.json"), report.to_dict())
    r = report.regression
    print(f"a={r.a:.4g} b={r.b:.4g} nu={r.nu} r={r.r} R^2={r.r_squared:.6f}")
    return EXIT_OK


# --- PARSER ---

def _fit_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("fitting")
    group.add_argument("--config", help="JSON config file (CLI flags take precedence)")
    group.add_argument("--model-type", help="mcgp, ugp, igp or pcagp")
    group.add_argument("--seed", type=int)
    group.add_argument("--nugget", type=float)
    group.add_argument("--elbo-tol", type=float)
    group.add_argument("--max-iter", type=int)
    group.add_argument("--multistarts", type=int)
    group.add_argument("--max-evals", type=int)
    group.add_argument("--alpha0", type=float, help="Stick-breaking concentration")
    group.add_argument("--K", type=int, help="Truncation level")
    group.add_argument("--kappa0", type=float, help="Wishart prior degrees of freedom")
    group.add_argument("--init-clusters", type=int, help="Clusters occupied by the initial assignment")
    group.add_argument("--literal-tau-exponent", action="store_true",
                       help="Use -log(tau^2) instead of -n*log(tau^2) in the responsibility update")
    return parent


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v]


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcgp", description="Mesh-clustered GP emulation of FEM simulations")
    parser.add_argument("-v", "--verbose", action="store_true", help="DEBUG logging")
    sub = parser.add_subparsers(dest="command", required=True)
    fit_flags = _fit_flags()

    p = sub.add_parser("generate", help="Generate a Poisson FEM dataset")
    p.add_argument("--out", required=True, help="Dataset directory")
    p.add_argument("--h", type=float, default=DEFAULT_MESH_SIZE, help="Target mesh size")
    design = p.add_mutually_exclusive_group()
    design.add_argument("--equispaced", type=int, default=DEFAULT_TRAIN_SIZE,
                        help="n cell-midpoint inputs in [-1, 1] (training design)")
    design.add_argument("--grid", type=int, nargs="?", const=DEFAULT_TEST_SIZE,
                        help="m equispaced inputs including the ends (test design, default 201)")
    design.add_argument("--inputs", help="CSV with one input per row")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--header", action="store_true", help="Write CSV header lines")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("fit", help="Fit an emulator to a dataset", parents=[fit_flags])
    p.add_argument("--data", required=True, help="Dataset directory")
    p.add_argument("--out", required=True, help="Model directory")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("predict", help="Predict node coefficients or field values")
    p.add_argument("--model", required=True, help="Model directory")
    p.add_argument("--inputs", help="CSV of query inputs")
    p.add_argument("--data", help="Dataset directory (mesh and default inputs)")
    p.add_argument("--out", help="Directory for pred_mean.csv and pred_var.csv")
    p.add_argument("--at", help="Field query point 's1,s2' printed per input")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("evaluate", help="RMSE, CRPS and timings on a test dataset")
    p.add_argument("--model", required=True, help="Model directory")
    p.add_argument("--test", required=True, help="Test dataset directory")
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--repeats", type=int, default=TIMING_REPEATS)
    p.add_argument("--per-node", action="store_true", help="Include per-node RMSE")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("clusters", help="Cluster table of an mcgp model")
    p.add_argument("--model", required=True, help="Model directory")
    p.add_argument("--threshold", type=float, default=ACTIVE_DISPLAY_THRESHOLD)
    p.add_argument("--all", action="store_true", help="Also list clusters below the threshold")
    p.add_argument("--out", help="Directory for the cluster CSVs")
    p.set_defaults(handler=cmd_clusters)

    p = sub.add_parser("convergence", help="Error-rate study over design and mesh sizes", parents=[fit_flags])
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--design-sizes", type=_int_list, default=list(CONVERGENCE_DESIGN_SIZES))
    p.add_argument("--mesh-sizes", type=_float_list, default=list(CONVERGENCE_MESH_SIZES))
    p.add_argument("--mc-samples", type=int, default=MC_SAMPLES)
    p.set_defaults(handler=cmd_convergence)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parses argv, runs one command and returns its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.verbose)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except MeshClusterError as exc:
        code = exit_code_for(exc)
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
