"""Ginzburg-Landau penalty potential, its truncation, and the Hessian bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PotentialParams:
    eps: float
    hf_value: float = 0.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if not self.hf_value >= 0:
            raise ValueError(f"hf_value must be >= 0, got {self.hf_value}")


def theoretical_HF(dim: int) -> float:
    """Dimension constant bounding eps^2 times the Hessian Frobenius norm."""
    if dim not in (2, 3):
        raise ValueError(f"unsupported dimension {dim}; expected 2 or 3")
    return float(np.sqrt(dim * 3 ** 2 + (dim ** 2 - dim) * 2 ** 2))


def F(eps, d):
    """Untruncated quartic potential ``(|d|^2 - 1)^2 / (4 eps^2)``."""
    d = np.asarray(d, dtype=float)
    r2 = np.sum(d * d, axis=-1)
    return 0.25 * (r2 - 1.0) ** 2 / eps ** 2


def F_tilde(eps, d):
    """Truncated potential: quartic inside the unit ball, quadratic outside."""
    d = np.asarray(d, dtype=float)
    r2 = np.sum(d * d, axis=-1)
    r = np.sqrt(r2)
    return np.where(r <= 1.0, 0.25 * (r2 - 1.0) ** 2, (r - 1.0) ** 2) / eps ** 2


def f_tilde(eps, d):
    """Gradient of :func:`F_tilde` with respect to ``d`` (last axis)."""
    d = np.asarray(d, dtype=float)
    r2 = np.sum(d * d, axis=-1, keepdims=True)
    r = np.sqrt(r2)
    inside = r <= 1.0
    coef = np.where(inside, r2 - 1.0, 2.0 * (r - 1.0) / np.where(inside, 1.0, r))
    return coef * d / eps ** 2


def hessian_F_tilde(eps, d):
    d = np.asarray(d, dtype=float)
    m = d.shape[-1]
    r2 = np.sum(d * d, axis=-1)[..., None, None]
    r = np.sqrt(r2)
    outer = d[..., :, None] * d[..., None, :]
    eye = np.eye(m)
    inside = 2.0 * outer + (r2 - 1.0) * eye
    safe = np.where(r > 1.0, r, 1.0)
    outside = 2.0 * outer / safe ** 3 + 2.0 * (safe - 1.0) / safe * eye
    return np.where(r <= 1.0, inside, outside) / eps ** 2


def hessian_frobenius_bound_check(eps, samples) -> float:
    """Largest Hessian Frobenius norm over ``samples``.

    Raises ``AssertionError`` if it exceeds ``theoretical_HF(m) / eps**2``.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ValueError("empty sample list")
    H = hessian_F_tilde(eps, samples)
    worst = float(np.sqrt((H ** 2).sum(axis=(-2, -1))).max())
    bound = theoretical_HF(samples.shape[-1]) / eps ** 2
    if worst > bound * (1 + 1e-12):
        raise AssertionError(f"Hessian norm {worst} exceeds bound {bound}")
    return worst
