"""Command-line front end: single-test runs on CSV data and simulation studies.

Exit codes: 0 success, 2 input-data error, 3 numerical error, 4 config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, smooth_residual_bootstrap
from .errors import (
    ConfigInvalid,
    DegenerateResponse,
    EmptyFile,
    MissingColumn,
    NoConvergence,
    NonNumericCell,
    RankDeficient,
    RegcheckError,
    SingularGram,
    SingularSigma,
    ZeroVariance,
)
from .model import Dataset, fit_least_squares, make_linear_model, standardize
from .sim import Dgp, SimStudyConfig, emit_table, make_directional_alternative, run_study
from .weights import (
    DirectionalAlternative,
    cse_directions,
    directional_weight,
    gram_schmidt_basis,
    nonparametric_weight,
    sdr_power_candidates,
)

DATA_ERRORS = (MissingColumn, NonNumericCell, EmptyFile, ZeroVariance, ValueError, OSError)
NUMERIC_ERRORS = (RankDeficient, NoConvergence, SingularGram, SingularSigma, DegenerateResponse)

ALT_SHAPES = ("cos", "quadratic", "cubic")


@dataclass
class RunManifest:
    command: list[str]
    inputs: dict[str, str]
    seed: int
    config: dict
    version: str
    runtime_seconds: float

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def ingest_csv(path: str | Path, response_column: str) -> Dataset:
    """Read a strict numeric CSV with a header row into a Dataset."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if response_column not in header:
            raise MissingColumn(f"{path}: no column named {response_column!r}")
        resp_idx = header.index(response_column)
        pred_idx = [j for j in range(len(header)) if j != resp_idx]
        if not pred_idx:
            raise MissingColumn(f"{path}: no predictor columns besides {response_column!r}")
        rows = []
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise NonNumericCell(f"{path}: line {line_no} has {len(cells)} cells, expected {len(header)}")
            parsed = []
            for j, cell in enumerate(cells):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise NonNumericCell(
                        f"{path}: line {line_no}, column {header[j]!r}: not numeric: {cell!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    return Dataset(arr[:, pred_idx], arr[:, resp_idx])


def write_dataset_csv(data: Dataset, path: Path, response_column: str = "y") -> None:
    header = [f"x{j + 1}" for j in range(data.d)] + [response_column]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            writer.writerow([repr(float(v)) for v in data.X[i]] + [repr(float(data.y[i]))])


def _named_alternative(shape: str, beta_hat: np.ndarray) -> DirectionalAlternative:
    if shape == "cos":
        return make_directional_alternative("H1", beta_hat)
    if shape == "quadratic":
        return make_directional_alternative("H2", beta_hat)
    if shape == "cubic":
        def s(X, th):
            return (X @ th) ** 3

        def grad(X, th):
            return 3.0 * ((X @ th) ** 2)[:, None] * X

        return DirectionalAlternative(s, grad, beta_hat.size, label="(v'x)^3", theta0=beta_hat)
    raise ConfigInvalid(f"unknown alternative shape {shape!r}")


def cmd_test(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    data = ingest_csv(args.data, args.response)
    if args.standardize:
        data = standardize(data)
    spec = make_linear_model(data.d, intercept=args.intercept)
    fit = fit_least_squares(data, spec)

    s_hat = None
    if args.weight == "directional":
        def builder(d, f):
            return directional_weight(d, f, spec, _named_alternative(args.alt, f.beta_hat))
    else:
        def builder(d, f):
            sdr = cse_directions(d)
            cands = sdr_power_candidates(d.X, sdr.directions)
            span = spec.gradient(d.X, f.beta_hat)
            basis = gram_schmidt_basis(d, span, cands, provenance="sdr-powers")
            return nonparametric_weight(d, f, spec, basis)

        s_hat = cse_directions(data).s_hat

    w = builder(data, fit)
    cfg = BootstrapConfig(B=args.bootstrap, seed=args.seed, v_n=args.vn, alpha=args.alpha)
    outcome = smooth_residual_bootstrap(data, spec, fit, w, cfg, weight_builder=builder)

    print(f"statistic       {outcome.statistic:.6g}")
    print(f"p-value         {outcome.p_value:.6g}")
    print(f"critical value  {outcome.critical_value:.6g} (alpha={args.alpha:g})")
    if s_hat is not None:
        print(f"sdr dimension   {s_hat}")
    print(f"decision        {'reject' if outcome.reject else 'fail to reject'} the null family")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report = {
            "statistic": outcome.statistic,
            "p_value": outcome.p_value,
            "critical_value": outcome.critical_value,
            "alpha": args.alpha,
            "reject": outcome.reject,
            "s_hat": s_hat,
            "n": data.n,
            "d": data.d,
        }
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        with (out / "fitted_residuals.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fitted", "residual"])
            for f_val, r_val in zip(fit.fitted, fit.residuals):
                writer.writerow([repr(float(f_val)), repr(float(r_val))])
        manifest = RunManifest(
            command=list(sys.argv),
            inputs={str(args.data): _sha256(Path(args.data))},
            seed=args.seed,
            config={
                "response": args.response,
                "standardize": args.standardize,
                "weight": args.weight,
                "alt": args.alt,
                "intercept": args.intercept,
                "bootstrap": args.bootstrap,
                "vn": args.vn,
                "alpha": args.alpha,
            },
            version=__version__,
            runtime_seconds=time.perf_counter() - start,
        )
        manifest.write(out / "manifest.json")
    return 0


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigInvalid(msg)


def load_study_config(path: str | Path, overrides: dict | None = None) -> SimStudyConfig:
    """Parse and validate a simulate config file (see docs/simulate-config.schema.json)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigInvalid(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from None
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    _require(isinstance(raw, dict), "config must be a JSON object")
    for key in ("master_seed", "reps", "cells"):
        _require(key in raw, f"missing required field {key!r}")
    _require(isinstance(raw["master_seed"], int) and raw["master_seed"] >= 0,
             "master_seed: must be a nonnegative integer")
    _require(isinstance(raw["reps"], int) and raw["reps"] >= 1, "reps: must be an integer >= 1")
    alpha = raw.get("alpha", 0.05)
    _require(isinstance(alpha, (int, float)) and 0 < alpha < 1, "alpha: must lie in (0, 1)")
    boot = raw.get("bootstrap", {})
    _require(isinstance(boot, dict), "bootstrap: must be an object")
    B = boot.get("B", 199)
    v_n = boot.get("v_n", 0.2)
    _require(isinstance(B, int) and B >= 1, "bootstrap.B: must be an integer >= 1")
    _require(isinstance(v_n, (int, float)) and v_n >= 0, "bootstrap.v_n: must be >= 0")
    workers = raw.get("workers", 1)
    _require(isinstance(workers, int) and workers >= 1, "workers: must be an integer >= 1")
    cells = raw["cells"]
    _require(isinstance(cells, list) and cells, "cells: must be a non-empty array")
    grid = []
    for i, cell in enumerate(cells):
        loc = f"cells[{i}]"
        _require(isinstance(cell, dict), f"{loc}: must be an object")
        for key in ("family", "a", "n", "p", "method"):
            _require(key in cell, f"{loc}.{key}: missing")
        try:
            dgp = Dgp(
                family=cell["family"],
                a=float(cell["a"]),
                n=int(cell["n"]),
                p=int(cell["p"]),
                sigma=cell.get("sigma", "identity"),
            )
        except (ValueError, TypeError) as exc:
            raise ConfigInvalid(f"{loc}: {exc}") from None
        method = cell["method"]
        _require(method in ("WICM1", "WICM2", "ICM"), f"{loc}.method: unknown method {method!r}")
        grid.append((dgp, method))
    try:
        return SimStudyConfig(
            grid=tuple(grid),
            reps=int(raw["reps"]),
            B=B,
            v_n=float(v_n),
            alpha=float(alpha),
            master_seed=raw["master_seed"],
            workers=workers,
        )
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None


def cmd_simulate(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    overrides = {"reps": args.reps, "master_seed": args.seed, "workers": args.workers}
    cfg = load_study_config(args.config, overrides)
    result = run_study(cfg)
    for cell_idx, msg in result.failures:
        print(f"cell {cell_idx} failed: {msg}", file=sys.stderr)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    flat = emit_table(result, "flat")
    (out / "results.csv").write_text(flat)
    (out / "results.txt").write_text(emit_table(result, "paper"))
    manifest = RunManifest(
        command=list(sys.argv),
        inputs={str(args.config): _sha256(Path(args.config))},
        seed=cfg.master_seed,
        config={
            "reps": cfg.reps,
            "B": cfg.B,
            "v_n": cfg.v_n,
            "alpha": cfg.alpha,
            "workers": cfg.workers,
            "cells": len(cfg.grid),
        },
        version=__version__,
        runtime_seconds=time.perf_counter() - start,
    )
    manifest.write(out / "manifest.json")
    print(flat, end="")
    if result.failures:
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regcheck",
        description="Specification tests for parametric regression mean functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run a single specification test on CSV data")
    t.add_argument("--data", required=True, help="input CSV path (header row required)")
    t.add_argument("--response", required=True, help="name of the response column")
    t.add_argument("--standardize", action="store_true", help="standardize all variables first")
    t.add_argument("--weight", choices=("directional", "nonparametric"), default="nonparametric")
    t.add_argument("--alt", choices=ALT_SHAPES, default="quadratic",
                   help="directional alternative shape (directional weight only)")
    t.add_argument("--intercept", action="store_true", help="include an intercept in the null family")
    t.add_argument("--bootstrap", type=int, default=500, metavar="B")
    t.add_argument("--vn", type=float, default=0.2, help="bootstrap smoothing bandwidth")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--seed", type=int, required=True, help="RNG seed (required for reproducibility)")
    t.add_argument("--out", default=None, help="directory for report, residuals, and manifest")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="run a Monte Carlo study from a JSON config")
    s.add_argument("--config", required=True, help="JSON study config path")
    s.add_argument("--out", default=".", help="output directory")
    s.add_argument("--workers", type=int, default=None, help="override config worker count")
    s.add_argument("--reps", type=int, default=None, help="override config replication count")
    s.add_argument("--seed", type=int, default=None, help="override config master seed")
    s.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 4
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except NUMERIC_ERRORS as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except DATA_ERRORS as exc:
        print(f"data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except RegcheckError as exc:  # any remaining package error is numerical
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
