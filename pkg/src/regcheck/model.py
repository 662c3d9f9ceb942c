"""Datasets, parametric mean-function families, and least-squares fitting.

Mean and gradient callables are vectorized over observations: they take the
full predictor matrix ``X`` of shape ``(n, d)`` and a parameter vector and
return shape ``(n,)`` and ``(n, p)`` respectively. Evaluate a single point by
passing a one-row matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .errors import RankDeficient, ZeroVariance

# Singular values below RANK_TOL * (largest singular value) count as zero.
RANK_TOL = 1e-10
GRAD_TOL = 1e-8
MAX_ITER = 200

Array = NDArray[np.float64]


@dataclass(frozen=True)
class Dataset:
    """An i.i.d. sample of predictor rows and a scalar response."""

    X: Array
    y: Array

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D matrix")
        if y.ndim != 1:
            raise ValueError("y must be a 1-D vector")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("need at least one observation and one predictor")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class ModelSpec:
    """A parametric mean-function family m(x, beta) with its gradient.

    ``linear`` marks families whose gradient does not depend on beta, so the
    least-squares fit reduces to one orthogonal-decomposition solve.
    """

    mean: Callable[[Array, Array], Array]
    gradient: Callable[[Array, Array], Array]
    param_dim: int
    label: str = ""
    linear: bool = False


@dataclass(frozen=True)
class FittedModel:
    beta_hat: Array
    fitted: Array
    residuals: Array
    gradient_norm: float
    converged: bool
    iterations: int

    @property
    def ssr(self) -> float:
        return float(self.residuals @ self.residuals)


def make_linear_model(d: int, intercept: bool = False) -> ModelSpec:
    """Linear family beta' x, optionally with a trailing intercept coefficient."""
    if d < 1:
        raise ValueError("d must be >= 1")
    p = d + 1 if intercept else d

    if intercept:
        def mean(X, beta):
            return X @ beta[:-1] + beta[-1]

        def gradient(X, beta):
            return np.hstack([X, np.ones((X.shape[0], 1))])
    else:
        def mean(X, beta):
            return X @ beta

        def gradient(X, beta):
            return np.asarray(X, dtype=float)

    label = f"linear(d={d}{', intercept' if intercept else ''})"
    return ModelSpec(mean=mean, gradient=gradient, param_dim=p, label=label, linear=True)


def _solve_linear(design: Array, y: Array) -> Array:
    """Least-squares solve via SVD with the package rank tolerance."""
    u, s, vt = np.linalg.svd(design, full_matrices=False)
    if s[0] <= 0.0 or np.any(s < RANK_TOL * s[0]):
        raise RankDeficient(
            f"design matrix rank-deficient: singular values {s.min():.3e}..{s.max():.3e}"
        )
    return vt.T @ ((u.T @ y) / s)


def fit_least_squares(
    data: Dataset, spec: ModelSpec, init: Array | None = None
) -> FittedModel:
    """Minimize the sum of squared residuals of ``spec`` over ``data``.

    Linear families are solved directly. Nonlinear families run damped
    Gauss-Newton with a halving line search from ``init`` (zero by default)
    until the SSR gradient norm is below GRAD_TOL * (1 + SSR) or MAX_ITER
    iterations elapse; the best iterate is returned either way, with
    ``converged`` recording whether the tolerance was met.
    """
    X, y = data.X, data.y
    p = spec.param_dim
    if data.n < p:
        raise ValueError(f"need n >= p ({data.n} < {p})")

    if spec.linear:
        design = spec.gradient(X, np.zeros(p))
        beta = _solve_linear(design, y)
        fitted = spec.mean(X, beta)
        resid = y - fitted
        gnorm = float(np.linalg.norm(2.0 * (design.T @ resid)))
        return FittedModel(beta, fitted, resid, gnorm, True, 0)

    beta = np.zeros(p) if init is None else np.array(init, dtype=float)
    resid = y - spec.mean(X, beta)
    ssr = float(resid @ resid)
    gnorm = np.inf
    iterations = 0
    converged = False
    for iterations in range(1, MAX_ITER + 1):
        jac = spec.gradient(X, beta)
        gnorm = float(np.linalg.norm(2.0 * (jac.T @ resid)))
        if gnorm <= GRAD_TOL * (1.0 + ssr):
            converged = True
            break
        step, *_ = np.linalg.lstsq(jac, resid, rcond=RANK_TOL)
        lam = 1.0
        improved = False
        while lam > 1e-12:
            cand = beta + lam * step
            cand_resid = y - spec.mean(X, cand)
            cand_ssr = float(cand_resid @ cand_resid)
            if np.isfinite(cand_ssr) and cand_ssr < ssr:
                beta, resid, ssr = cand, cand_resid, cand_ssr
                improved = True
                break
            lam *= 0.5
        if not improved:
            # No descent along the Gauss-Newton direction: accept the iterate.
            converged = gnorm <= GRAD_TOL * (1.0 + ssr)
            break
    fitted = y - resid
    return FittedModel(beta, fitted, resid, gnorm, converged, iterations)


def standardize(data: Dataset) -> Dataset:
    """Center and scale every predictor column and the response to sd 1 (ddof=1)."""
    def _scale(col: Array, name: str) -> Array:
        sd = float(np.std(col, ddof=1)) if col.size > 1 else 0.0
        if sd == 0.0:
            raise ZeroVariance(f"{name} has zero sample variance")
        return (col - col.mean()) / sd

    cols = [_scale(data.X[:, j], f"column {j}") for j in range(data.d)]
    y = _scale(data.y, "response")
    return Dataset(np.column_stack(cols), y)
