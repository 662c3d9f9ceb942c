"""Data-generating processes, the directional alternative classes used by the
study harness, and a deterministic parallel Monte Carlo engine."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from io import StringIO
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .bootstrap import BootstrapConfig, smooth_residual_bootstrap, wild_bootstrap_icm
from .model import Dataset, FittedModel, ModelSpec, fit_least_squares, make_linear_model
from .statistic import WeightVector
from .weights import (
    DirectionalAlternative,
    cse_directions,
    directional_weight,
    gram_schmidt_basis,
    nonparametric_weight,
    sdr_power_candidates,
)

Array = NDArray[np.float64]

FAMILIES = ("H1", "H2", "H3", "H4", "linear_null", "custom")
METHODS = ("WICM1", "WICM2", "ICM")
SIGMAS = ("identity", "geometric")


def beta0(p: int) -> Array:
    """Null linear coefficient (1, ..., 1) / sqrt(p)."""
    return np.ones(p) / np.sqrt(p)


def beta1(p: int) -> Array:
    """Departure index direction: unit entries on the first p/2 coordinates.

    The departure scale that reproduces the reported power tables keeps the
    entries at 1 rather than normalizing the vector; see the README notes on
    the simulation design.
    """
    out = np.zeros(p)
    out[: p // 2] = 1.0
    return out


@dataclass(frozen=True)
class Dgp:
    family: str
    a: float
    n: int
    p: int
    sigma: str = "identity"
    error: str = "std_normal"
    custom_mean: Callable[[Array], Array] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be >= 1")
        if self.sigma not in SIGMAS:
            raise ValueError(f"unknown sigma {self.sigma!r}")
        if self.error != "std_normal":
            raise ValueError("only std_normal errors are supported")
        if self.family == "H4" and self.p < 10:
            raise ValueError("H4 uses the first ten predictors; need p >= 10")
        if self.family in ("H2", "H3") and self.p % 2 != 0:
            raise ValueError(f"{self.family} needs even p")
        if self.family == "custom" and self.custom_mean is None:
            raise ValueError("custom family needs custom_mean")


@dataclass(frozen=True)
class LocalAlternativeSpec:
    """Smooth local departure S with shrinkage rate n^(-rate_exponent)."""

    S: Callable[[Array], Array]
    rate_exponent: float

    def __post_init__(self):
        if not 0.0 <= self.rate_exponent <= 0.5:
            raise ValueError("rate_exponent must lie in [0, 1/2]")


def geometric_covariance(p: int) -> Array:
    idx = np.arange(p)
    return 2.0 ** (-np.abs(idx[:, None] - idx[None, :]))


def _draw_predictors(n: int, p: int, sigma: str, rng: np.random.Generator) -> Array:
    Z = rng.standard_normal((n, p))
    if sigma == "identity":
        return Z
    L = np.linalg.cholesky(geometric_covariance(p))
    return Z @ L.T


def _mean_function(dgp: Dgp, X: Array) -> Array:
    b0 = beta0(dgp.p)
    u0 = X @ b0
    if dgp.family in ("linear_null",):
        return u0
    if dgp.family == "H1":
        return u0 + dgp.a * np.cos(0.6 * np.pi * u0)
    if dgp.family == "H2":
        u1 = X @ beta1(dgp.p)
        return u0 + dgp.a * u1**2
    if dgp.family == "H3":
        u1 = X @ beta1(dgp.p)
        return u0 + dgp.a * (u1**3 + np.cos(np.pi * u1) + u0 * u1)
    if dgp.family == "H4":
        bracket = (
            np.abs(X[:, 1])
            + X[:, 2] ** 3
            - X[:, 3] ** 2
            + X[:, 4] ** 3
            + X[:, 5] * X[:, 6]
            + np.cos(np.pi * X[:, 7])
            + np.sin(0.5 * np.pi * X[:, 8] * X[:, 9])
        )
        return X[:, 0] + dgp.a * bracket
    return dgp.custom_mean(X)


def generate(dgp: Dgp, rng: np.random.Generator) -> Dataset:
    """Draw a dataset from the family: predictors first, then errors."""
    X = _draw_predictors(dgp.n, dgp.p, dgp.sigma, rng)
    eps = rng.standard_normal(dgp.n)
    return Dataset(X, _mean_function(dgp, X) + eps)


def generate_local(
    dgp: Dgp, alt: LocalAlternativeSpec, rng: np.random.Generator
) -> Dataset:
    """Linear null perturbed by n^(-alpha) times the empirically centered S."""
    if dgp.family != "linear_null":
        raise ValueError("local alternatives perturb the linear null family")
    X = _draw_predictors(dgp.n, dgp.p, dgp.sigma, rng)
    eps = rng.standard_normal(dgp.n)
    s_vals = np.asarray(alt.S(X), dtype=float)
    s_vals = s_vals - s_vals.mean()
    r_n = float(dgp.n) ** (-alt.rate_exponent)
    return Dataset(X, X @ beta0(dgp.p) + r_n * s_vals + eps)


# ---------------------------------------------------------------------------
# Directional alternative classes for the study harness: each family's
# departure shape with a free index direction, started at the null fit.
# ---------------------------------------------------------------------------


def make_directional_alternative(family: str, beta_hat: Array) -> DirectionalAlternative:
    b = np.asarray(beta_hat, dtype=float)
    d = b.size

    if family in ("H1", "linear_null", "custom"):
        def s(X, th):
            return np.cos(0.6 * np.pi * (X @ th))

        def grad(X, th):
            return -0.6 * np.pi * np.sin(0.6 * np.pi * (X @ th))[:, None] * X

        return DirectionalAlternative(s, grad, d, label="cos(0.6*pi*v'x)", theta0=b)

    if family == "H2":
        def s(X, th):
            return (X @ th) ** 2

        def grad(X, th):
            return 2.0 * (X @ th)[:, None] * X

        return DirectionalAlternative(s, grad, d, label="(v'x)^2", theta0=b)

    if family == "H3":
        # theta = (c1, c2, c3, v); the linear factor in the cross term stays
        # pinned at the null-fit index.
        def s(X, th):
            u = X @ th[3:]
            w = X @ b
            return th[0] * u**3 + th[1] * np.cos(np.pi * u) + th[2] * w * u

        def grad(X, th):
            u = X @ th[3:]
            w = X @ b
            du = (3.0 * th[0] * u**2 - np.pi * th[1] * np.sin(np.pi * u) + th[2] * w)[:, None] * X
            return np.column_stack([u**3, np.cos(np.pi * u), w * u, du])

        theta0 = np.concatenate([[1.0, 1.0, 1.0], b])
        return DirectionalAlternative(s, grad, 3 + d, label="cubic+cos+cross(v'x)", theta0=theta0)

    if family == "H4":
        def features(X):
            return np.column_stack(
                [
                    np.abs(X[:, 1]),
                    X[:, 2] ** 3,
                    X[:, 3] ** 2,
                    X[:, 4] ** 3,
                    X[:, 5] * X[:, 6],
                    np.cos(np.pi * X[:, 7]),
                    np.sin(0.5 * np.pi * X[:, 8] * X[:, 9]),
                ]
            )

        def s(X, th):
            return features(X) @ th

        def grad(X, th):
            return features(X)

        return DirectionalAlternative(s, grad, 7, label="fixed-feature bracket", theta0=np.zeros(7))

    raise ValueError(f"no directional class for family {family!r}")


def directional_builder(family: str, spec: ModelSpec) -> Callable[[Dataset, FittedModel], WeightVector]:
    def build(data: Dataset, fit: FittedModel) -> WeightVector:
        alt = make_directional_alternative(family, fit.beta_hat)
        return directional_weight(data, fit, spec, alt)

    return build


def nonparametric_builder(
    spec: ModelSpec, powers=(2, 3, 4)
) -> Callable[[Dataset, FittedModel], WeightVector]:
    def build(data: Dataset, fit: FittedModel) -> WeightVector:
        sdr = cse_directions(data)
        cands = sdr_power_candidates(data.X, sdr.directions, powers)
        span = spec.gradient(data.X, fit.beta_hat)
        basis = gram_schmidt_basis(data, span, cands, provenance="sdr-powers")
        return nonparametric_weight(data, fit, spec, basis)

    return build


# ---------------------------------------------------------------------------
# Monte Carlo study engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimStudyConfig:
    grid: tuple[tuple[Dgp, str], ...]
    reps: int
    B: int = 199
    v_n: float = 0.2
    alpha: float = 0.05
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        for _, method in self.grid:
            if method not in METHODS:
                raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SimRow:
    family: str
    a: float
    n: int
    p: int
    sigma: str
    method: str
    reps: int
    B: int
    alpha: float
    rejection_rate: float
    seed: int
    runtime: float = field(compare=False, default=0.0)


@dataclass(frozen=True)
class SimResult:
    rows: tuple[SimRow, ...]
    seed_echo: int
    failures: tuple[tuple[int, str], ...] = field(compare=False, default=())
    details: tuple[dict, ...] = field(compare=False, default=())


def _single_test(dgp: Dgp, method: str, rng: np.random.Generator, B: int, v_n: float, alpha: float) -> bool:
    data = generate(dgp, rng)
    spec = make_linear_model(dgp.p, intercept=False)
    fit = fit_least_squares(data, spec)
    cfg = BootstrapConfig(B=B, seed=int(rng.integers(2**62)), v_n=v_n, alpha=alpha)
    if method == "ICM":
        outcome = wild_bootstrap_icm(data, spec, fit, cfg)
    else:
        builder = (
            directional_builder(dgp.family, spec)
            if method == "WICM1"
            else nonparametric_builder(spec)
        )
        w = builder(data, fit)
        outcome = smooth_residual_bootstrap(data, spec, fit, w, cfg, weight_builder=builder)
    return outcome.reject


def _run_task(args) -> tuple[int, int, int, float, str | None]:
    master_seed, cell_idx, rep, dgp, method, B, v_n, alpha = args
    start = time.perf_counter()
    try:
        rng = np.random.default_rng([master_seed, cell_idx, rep])
        rejected = int(_single_test(dgp, method, rng, B, v_n, alpha))
        return cell_idx, rep, rejected, time.perf_counter() - start, None
    except Exception as exc:  # pragma: no cover - exercised via failure test
        return cell_idx, rep, 0, time.perf_counter() - start, f"{type(exc).__name__}: {exc}"


def run_study(cfg: SimStudyConfig) -> SimResult:
    """Run every (cell, replication) task on a deterministic substream.

    Replication r of cell c uses the stream seeded by (master_seed, c, r), so
    the result is independent of worker count and completion order; failures
    abort only their own cell.
    """
    tasks = [
        (cfg.master_seed, ci, r, dgp, method, cfg.B, cfg.v_n, cfg.alpha)
        for ci, (dgp, method) in enumerate(cfg.grid)
        for r in range(cfg.reps)
    ]
    counts = np.zeros(len(cfg.grid), dtype=int)
    runtimes = np.zeros(len(cfg.grid))
    errors: dict[int, str] = {}
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=4))
    else:
        results = [_run_task(t) for t in tasks]
    for cell_idx, _rep, rejected, elapsed, err in results:
        runtimes[cell_idx] += elapsed
        if err is not None:
            errors.setdefault(cell_idx, err)
        counts[cell_idx] += rejected

    rows = []
    details = []
    for ci, (dgp, method) in enumerate(cfg.grid):
        if ci in errors:
            continue
        rows.append(
            SimRow(
                family=dgp.family,
                a=dgp.a,
                n=dgp.n,
                p=dgp.p,
                sigma=dgp.sigma,
                method=method,
                reps=cfg.reps,
                B=cfg.B,
                alpha=cfg.alpha,
                rejection_rate=int(counts[ci]) / cfg.reps,
                seed=cfg.master_seed,
                runtime=float(runtimes[ci]),
            )
        )
        note = ""
        if method == "WICM1":
            note = make_directional_alternative(dgp.family, np.zeros(dgp.p)).label
        details.append({"cell": ci, "method": method, "weight_class": note})
    return SimResult(
        rows=tuple(rows),
        seed_echo=cfg.master_seed,
        failures=tuple(sorted(errors.items())),
        details=tuple(details),
    )


# ---------------------------------------------------------------------------
# Table emission
# ---------------------------------------------------------------------------

FLAT_HEADER = "family,a,n,p,sigma,method,reps,B,alpha,rejection_rate,seed"


def emit_table(result: SimResult, layout: str = "flat") -> str:
    if layout == "flat":
        out = [FLAT_HEADER]
        for r in result.rows:
            out.append(
                f"{r.family},{r.a!r},{r.n},{r.p},{r.sigma},{r.method},"
                f"{r.reps},{r.B},{r.alpha!r},{r.rejection_rate!r},{r.seed}"
            )
        return "\n".join(out) + "\n"
    if layout == "paper":
        return _paper_table(result)
    raise ValueError(f"unknown layout {layout!r}")


def _paper_table(result: SimResult) -> str:
    buf = StringIO()
    groups: dict[tuple[str, str], list[SimRow]] = {}
    for r in result.rows:
        groups.setdefault((r.family, r.sigma), []).append(r)
    for (family, sigma), rows in groups.items():
        cols = sorted({(r.n, r.p) for r in rows})
        a_vals = sorted({r.a for r in rows})
        methods = [m for m in METHODS if any(r.method == m for r in rows)]
        buf.write(f"Empirical rejection rates, family {family}, sigma {sigma}\n")
        header = ["method", "a"] + [f"n={n},p={p}" for n, p in cols]
        widths = [max(10, len(h) + 2) for h in header]
        buf.write("".join(h.ljust(w) for h, w in zip(header, widths)) + "\n")
        lookup = {(r.method, r.a, r.n, r.p): r.rejection_rate for r in rows}
        for m in methods:
            for a in a_vals:
                cells = [
                    f"{lookup[(m, a, n, p)]:.3f}" if (m, a, n, p) in lookup else "-"
                    for n, p in cols
                ]
                line = [m, f"{a:g}"] + cells
                buf.write("".join(c.ljust(w) for c, w in zip(line, widths)) + "\n")
        buf.write("\n")
    return buf.getvalue()


def parse_flat(text: str) -> SimResult:
    """Rebuild a SimResult from flat CSV output (runtime is not serialized)."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != FLAT_HEADER:
        raise ValueError("not a flat results table")
    rows = []
    for ln in lines[1:]:
        f = ln.split(",")
        rows.append(
            SimRow(
                family=f[0],
                a=float(f[1]),
                n=int(f[2]),
                p=int(f[3]),
                sigma=f[4],
                method=f[5],
                reps=int(f[6]),
                B=int(f[7]),
                alpha=float(f[8]),
                rejection_rate=float(f[9]),
                seed=int(f[10]),
            )
        )
    seed = rows[0].seed if rows else 0
    return SimResult(rows=tuple(rows), seed_echo=seed)
