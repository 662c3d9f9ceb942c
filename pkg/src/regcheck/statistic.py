"""Weighted residual process, the weighted and classical ICM statistics,
and the covariance / drift diagnostics attached to their limit theory."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .errors import SingularSigma
from .model import RANK_TOL, Dataset, FittedModel, ModelSpec

Array = NDArray[np.float64]


@dataclass(frozen=True)
class WeightVector:
    """Scalar weight g evaluated at the sample points, with its centered copy."""

    values: Array
    centered: Array
    source: str  # directional | nonparametric | user

    @classmethod
    def from_values(cls, values, source: str = "user") -> "WeightVector":
        v = np.array(values, dtype=float)
        if v.ndim != 1:
            raise ValueError("weight values must be a 1-D vector")
        return cls(values=v, centered=v - v.mean(), source=source)


@dataclass(frozen=True)
class KernelWeight:
    """Cosine transform u -> integral cos(u t) phi(t) dt of an even density phi."""

    m_phi: Callable[[Array], Array]
    fourth_moment_finite: bool = True


@lru_cache(maxsize=8)
def gauss_hermite(nodes: int = 64) -> tuple[Array, Array]:
    """Gauss-Hermite nodes/weights for integrals against exp(-x^2)."""
    x, w = np.polynomial.hermite.hermgauss(nodes)
    return x, w


def m_phi_gaussian(u):
    """Cosine transform of the standard normal density: exp(-u^2/2)."""
    u = np.asarray(u, dtype=float)
    out = np.exp(-0.5 * u * u)
    return float(out) if out.ndim == 0 else out


GAUSSIAN_KERNEL = KernelWeight(m_phi=m_phi_gaussian)


def kernel_from_density(phi: Callable[[Array], Array], nodes: int = 64) -> KernelWeight:
    """Numeric cosine transform of an even density via Gauss-Hermite quadrature."""
    x, w = gauss_hermite(nodes)
    coef = w * np.exp(x * x) * phi(x)

    def m_phi(u):
        u = np.asarray(u, dtype=float)
        out = np.cos(np.multiply.outer(u, x)) @ coef
        return float(out) if out.ndim == 0 else out

    return KernelWeight(m_phi=m_phi)


def u_hat(w: WeightVector, residuals: Array, t):
    """Residual empirical process at index t.

    Returns n^{-1/2} sum_i (g_i - gbar) {cos(t e_i) + sin(t e_i)}; t may be a
    scalar or an array of index points.
    """
    e = np.asarray(residuals, dtype=float)
    c = w.centered
    if e.shape != c.shape:
        raise ValueError("residuals and weights must have equal length")
    t = np.asarray(t, dtype=float)
    arg = np.multiply.outer(t, e)
    vals = (np.cos(arg) + np.sin(arg)) @ c / np.sqrt(e.size)
    return float(vals) if vals.ndim == 0 else vals


def wicm_statistic(
    w: WeightVector, residuals: Array, kernel: KernelWeight = GAUSSIAN_KERNEL
) -> float:
    """Closed-form weighted statistic (1/n) sum_jk c_j c_k M_phi(e_j - e_k)."""
    e = np.asarray(residuals, dtype=float)
    c = w.centered
    if e.shape != c.shape:
        raise ValueError("residuals and weights must have equal length")
    diff = e[:, None] - e[None, :]
    K = kernel.m_phi(diff)
    return float(c @ (K @ c)) / e.size


def icm_statistic(X: Array, residuals: Array) -> float:
    """Classical statistic (1/n) sum_jk e_j e_k exp(-||X_j - X_k||^2 / 2)."""
    X = np.asarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    if X.ndim != 2 or X.shape[0] != e.shape[0]:
        raise ValueError("X rows must match residual length")
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    K = np.exp(-0.5 * d2)
    return float(e @ (K @ e)) / e.size


def _inv_psd(mat: Array, error: type[Exception]) -> Array:
    u, s, vt = np.linalg.svd(mat)
    if s[0] <= 0.0 or np.any(s < RANK_TOL * s[0]):
        raise error(f"matrix singular: smallest/largest singular value {s.min():.3e}/{s.max():.3e}")
    return vt.T @ np.diag(1.0 / s) @ u.T


def _trig_parts(e: Array, t: float) -> tuple[Array, Array]:
    """(cos+sin)(t e) centered by its sample mean, and (sin-cos)(t e)."""
    ct, st = np.cos(t * e), np.sin(t * e)
    cs = ct + st
    return cs - cs.mean(), st - ct


def plug_in_covariance(
    data: Dataset,
    fit: FittedModel,
    spec: ModelSpec,
    w: WeightVector,
    s: float,
    t: float,
) -> float:
    """Finite-sample plug-in of the limiting covariance of the weighted process.

    Population expectations are replaced by sample averages over the fitted
    residuals, the score at beta-hat, and the centered weights. The result is
    the empirical Gram form (1/n) sum_i v_i(s) v_i(t) with
    v_i(t) = g0_i psi_t(i) + t W(t)' Sigma^{-1} mdot_i e_i, hence symmetric
    and positive semidefinite on any index grid up to rounding.
    """
    n = data.n
    if n <= spec.param_dim:
        raise ValueError("need n > p for the plug-in covariance")
    e = fit.residuals
    g0 = w.centered
    mdot = spec.gradient(data.X, fit.beta_hat)
    sigma = mdot.T @ mdot / n
    sigma_inv = _inv_psd(sigma, SingularSigma)

    def influence(idx: float) -> Array:
        psi, sin_minus_cos = _trig_parts(e, idx)
        w_vec = (g0 * sin_minus_cos) @ mdot / n
        return g0 * psi + idx * (mdot @ (sigma_inv @ w_vec)) * e

    return float(influence(s) @ influence(t)) / n


def alternative_drift(
    data: Dataset,
    w: WeightVector,
    residuals_null: Array,
    S_values: Array,
    t: float,
    kind: str = "fixed",
) -> float:
    """Sample analogue of the drift functional under fixed or local departures.

    kind="fixed": mean of g0 {cos(t e) - cos(t eps) + sin(t e) - sin(t eps)}
    with e = eps + S. kind="local": mean of g0 S {cos(t eps) - sin(t eps)}.
    """
    eps = np.asarray(residuals_null, dtype=float)
    S = np.asarray(S_values, dtype=float)
    g0 = w.centered
    if not (eps.shape == S.shape == g0.shape):
        raise ValueError("weights, residuals and S values must share length")
    if kind == "fixed":
        e = eps + S
        vals = np.cos(t * e) - np.cos(t * eps) + np.sin(t * e) - np.sin(t * eps)
        return float(np.mean(g0 * vals))
    if kind == "local":
        return float(np.mean(g0 * S * (np.cos(t * eps) - np.sin(t * eps))))
    raise ValueError(f"unknown drift kind {kind!r}")
