"""Weight-function construction: directional projections, cumulative slicing
directions, ridge-ratio dimension selection, and Fourier-basis weights."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .errors import DegenerateResponse, NoConvergence, SingularGram
from .model import RANK_TOL, Dataset, FittedModel, ModelSpec, fit_least_squares
from .statistic import WeightVector

Array = NDArray[np.float64]

# A candidate basis column is dropped when orthogonalization removes all but
# this fraction of its empirical norm.
DROP_TOL = 1e-8


@dataclass(frozen=True)
class DirectionalAlternative:
    """Parametric alternative class s(x, theta) used to aim the weight.

    ``s`` and ``gradient_s`` are vectorized like ModelSpec callables:
    (X (n,d), theta (q,)) -> (n,) and (n,q). ``theta0`` is the fitting start
    point; several shape classes are degenerate at theta = 0, so a sensible
    start is part of the class definition.
    """

    s: Callable[[Array, Array], Array]
    gradient_s: Callable[[Array, Array], Array]
    param_dim: int
    label: str = ""
    theta0: Array | None = None


@dataclass(frozen=True)
class SdrEstimate:
    """Estimated central-subspace directions with their eigenvalue profile."""

    directions: Array  # d x s_hat, orthonormal columns
    eigenvalues: Array  # length d, descending
    s_hat: int


@dataclass(frozen=True)
class BasisSet:
    """Basis columns orthonormalized in the empirical inner product (1/n) u'v."""

    columns: Array  # n x l
    provenance: str
    kept: tuple[int, ...]


def _gram_inverse(mdot: Array) -> Array:
    n = mdot.shape[0]
    gram = mdot.T @ mdot / n
    u, s, vt = np.linalg.svd(gram)
    if s[0] <= 0.0 or np.any(s < RANK_TOL * s[0]):
        raise SingularGram(
            f"score Gram matrix singular: singular values {s.min():.3e}..{s.max():.3e}"
        )
    return vt.T @ np.diag(1.0 / s) @ u.T


def _project_and_subtract(mdot: Array, target: Array) -> Array:
    """Projection of target onto span(mdot) in the empirical inner product, minus target."""
    n = mdot.shape[0]
    ginv = _gram_inverse(mdot)
    coef = ginv @ (mdot.T @ target / n)
    return mdot @ coef - target


def directional_weight(
    data: Dataset, fit: FittedModel, spec: ModelSpec, alt: DirectionalAlternative
) -> WeightVector:
    """Weight aimed at a parametric alternative class.

    Fits theta by least squares of the observed responses on s(., theta),
    then returns the projection of s(., theta-hat) onto the span of the null
    score minus s itself, centered.
    """
    theta_spec = ModelSpec(
        mean=alt.s,
        gradient=alt.gradient_s,
        param_dim=alt.param_dim,
        label=alt.label or "alternative",
    )
    theta_fit = fit_least_squares(data, theta_spec, init=alt.theta0)
    if not np.all(np.isfinite(theta_fit.beta_hat)):
        raise NoConvergence(f"alternative fit produced non-finite parameters ({alt.label})")
    s_vals = alt.s(data.X, theta_fit.beta_hat)
    mdot = spec.gradient(data.X, fit.beta_hat)
    raw = _project_and_subtract(mdot, s_vals)
    return WeightVector.from_values(raw, source="directional")


def cse_directions(data: Dataset) -> SdrEstimate:
    """Cumulative-slicing estimate of the central subspace.

    Builds Lambda = (1/n) sum_j m(Y_j) m(Y_j)' with
    m(y) = (1/n) sum_i (X_i - Xbar) 1{Y_i <= y}, eigendecomposes it, and
    selects the dimension with the ridge-ratio rule.
    """
    n, d = data.n, data.d
    y = data.y
    if n < 2:
        raise ValueError("need at least two observations")
    if np.all(y == y[0]):
        raise DegenerateResponse("all response values are identical")
    Xc = data.X - data.X.mean(axis=0)
    order = np.argsort(y, kind="stable")
    cum = np.cumsum(Xc[order], axis=0) / n
    # With ties, m(y) must include every i with Y_i <= y: map each sorted
    # position to the last position sharing its response value.
    y_sorted = y[order]
    last = np.searchsorted(y_sorted, y_sorted, side="right") - 1
    M = cum[last]
    lam = M.T @ M / n
    lam = 0.5 * (lam + lam.T)
    evals, evecs = np.linalg.eigh(lam)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    s_hat = mere_dimension(evals, n) if d >= 2 else 1
    return SdrEstimate(directions=evecs[:, :s_hat], eigenvalues=evals, s_hat=s_hat)


def mere_dimension(eigenvalues: Array, n: int, ridge: float | None = None) -> int:
    """Ridge-ratio dimension selector: argmin_k (lam_{k+1}+c)/(lam_k+c).

    The default ridge is log(n)/sqrt(n); ties break to the smallest k.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size < 2:
        raise ValueError("need at least two eigenvalues")
    if np.any(np.diff(lam) > 0):
        raise ValueError("eigenvalues must be sorted descending")
    c = float(ridge) if ridge is not None else np.log(n) / np.sqrt(n)
    ratios = (lam[1:] + c) / (lam[:-1] + c)
    return int(np.argmin(ratios)) + 1


def gram_schmidt_basis(
    data: Dataset, span_columns: Array, candidates: Array, provenance: str = ""
) -> BasisSet:
    """Orthonormalize candidate columns against a span and each other.

    Uses the empirical inner product <u,v> = (1/n) sum u_i v_i with two
    orthogonalization passes; candidates that lose all but DROP_TOL of their
    norm are dropped and reported through ``kept``.
    """
    n = data.n
    span = np.asarray(span_columns, dtype=float)
    cand = np.asarray(candidates, dtype=float)
    if span.shape[0] != n or cand.shape[0] != n:
        raise ValueError("span and candidate columns must have n rows")

    basis: list[Array] = []
    for j in range(span.shape[1]):
        v = span[:, j].copy()
        for _ in range(2):
            for q in basis:
                v -= (q @ v / n) * q
        norm = np.sqrt(v @ v / n)
        if norm > DROP_TOL:
            basis.append(v / norm)

    span_size = len(basis)
    kept: list[int] = []
    for j in range(cand.shape[1]):
        v = cand[:, j].copy()
        pre = np.sqrt(v @ v / n)
        for _ in range(2):
            for q in basis:
                v -= (q @ v / n) * q
        post = np.sqrt(v @ v / n)
        if pre > 0.0 and post > DROP_TOL * pre:
            basis.append(v / post)
            kept.append(j)

    cols = (
        np.column_stack([q for q in basis[span_size:]])
        if len(basis) > span_size
        else np.zeros((n, 0))
    )
    return BasisSet(columns=cols, provenance=provenance, kept=tuple(kept))


def nonparametric_weight(
    data: Dataset, fit: FittedModel, spec: ModelSpec, basis: BasisSet
) -> WeightVector:
    """Weight from a truncated expansion of the regression function.

    Each kept basis column gets the coefficient a_i = (1/n) sum_j e_j g_i(X_j);
    the expansion m(., beta-hat) + sum a_i g_i is projected onto the score span
    and subtracted from itself, then centered.
    """
    n = data.n
    cols = basis.columns
    if cols.shape[0] != n:
        raise ValueError("basis columns must have n rows")
    coef = cols.T @ fit.residuals / n if cols.shape[1] else np.zeros(0)
    m_l = spec.mean(data.X, fit.beta_hat) + (cols @ coef if cols.shape[1] else 0.0)
    mdot = spec.gradient(data.X, fit.beta_hat)
    raw = _project_and_subtract(mdot, m_l)
    return WeightVector.from_values(raw, source="nonparametric")


def sdr_power_candidates(X: Array, directions: Array, powers=(2, 3, 4)) -> Array:
    """Candidate columns (B_i' x)^k for each direction and power."""
    proj = np.asarray(X, dtype=float) @ np.asarray(directions, dtype=float)
    if proj.ndim == 1:
        proj = proj[:, None]
    return np.hstack([proj**k for k in powers])
