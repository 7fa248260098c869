"""Noise channels applied to per-example gradients in DP-SGD.

Gaussian variant: clip, average, add ``N(0, (B sigma / L)^2)`` per coordinate.
VMF variant: clip, average, scale to the unit sphere, draw from ``VMF(mean, kappa)``.

Randomness always comes from an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from privcap.specfn import DomainError, log_bessel_i, log_sphere_area

UNIT_TOL = 1e-9


def clip(g, bound: float) -> np.ndarray:
    """Scale ``g`` down to norm at most ``bound``; shorter vectors pass through."""
    if not bound > 0:
        raise DomainError(f"clipping bound must be > 0, got {bound!r}")
    g = np.asarray(g, dtype=float)
    norm = np.linalg.norm(g)
    if norm <= bound:
        return g
    return g / (norm / bound)


def average(gs: Sequence) -> np.ndarray:
    if len(gs) == 0:
        raise DomainError("cannot average an empty batch")
    arr = np.asarray([np.asarray(g, dtype=float) for g in gs])
    if arr.ndim != 2:
        raise DomainError("gradients must be equal-length vectors")
    return arr.mean(axis=0)


def gaussian_perturb(g, sigma: float, bound: float, lot_size: int,
                     rng: np.random.Generator) -> np.ndarray:
    """``g + N(0, (bound * sigma)^2) / lot_size`` per coordinate."""
    if not sigma >= 0 or not bound > 0 or lot_size < 1:
        raise DomainError("need sigma >= 0, bound > 0, lot_size >= 1")
    g = np.asarray(g, dtype=float)
    return g + rng.normal(0.0, bound * sigma / lot_size, size=g.shape)


def normalize(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    norm = np.linalg.norm(g)
    if not norm > 0 or not math.isfinite(norm):
        raise DomainError("cannot normalize a zero or non-finite vector")
    return g / norm


def _check_unit(mean) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    if mean.ndim != 1 or mean.size < 2:
        raise DomainError("mean must be a vector of dimension >= 2")
    if abs(np.linalg.norm(mean) - 1.0) > UNIT_TOL:
        raise DomainError("mean must have unit norm")
    return mean


def _sample_cosines(p: int, kappa: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Wood's rejection sampler for ``w = mean . y``."""
    if kappa == 0:
        # uniform on the sphere: (w + 1)/2 ~ Beta((p-1)/2, (p-1)/2)
        return 2.0 * rng.beta(0.5 * (p - 1), 0.5 * (p - 1), size=n) - 1.0
    pm1 = p - 1.0
    b = pm1 / (math.sqrt(4.0 * kappa**2 + pm1**2) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + pm1 * math.log1p(-x0 * x0) if x0 < 1 else kappa * x0
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = max(2 * (n - filled), 16)
        z = rng.beta(0.5 * pm1, 0.5 * pm1, size=m)
        u = rng.uniform(size=m)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = kappa * w + pm1 * np.log1p(-x0 * w) - c >= np.log(u)
        take = w[ok][: n - filled]
        out[filled:filled + take.size] = take
        filled += take.size
    return out


def vmf_sample(mean, kappa: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw from the VMF distribution on ``S^{p-1}``.

    Returns one unit vector, or a ``(size, p)`` array when ``size`` is given.
    """
    mean = _check_unit(mean)
    if not kappa >= 0 or not math.isfinite(kappa):
        raise DomainError(f"kappa must be finite and >= 0, got {kappa!r}")
    p = mean.size
    n = 1 if size is None else int(size)
    w = _sample_cosines(p, kappa, n, rng)
    v = rng.standard_normal((n, p))
    v -= np.outer(v @ mean, mean)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    y = w[:, None] * mean + np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * v
    # w and v are exactly orthogonal in theory; renormalize away rounding
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return y[0] if size is None else y


def vmf_log_normalizer(p: int, kappa: float) -> float:
    """``ln C`` with density ``exp(kappa mean.y) / C`` on ``S^{p-1}``."""
    if kappa == 0:
        return log_sphere_area(p)
    nu = 0.5 * p - 1.0
    return (nu + 1.0) * math.log(2.0 * math.pi) + log_bessel_i(nu, kappa) - nu * math.log(kappa)


def vmf_log_density(mean, kappa: float, y) -> float | np.ndarray:
    mean = _check_unit(mean)
    if not kappa >= 0:
        raise DomainError(f"kappa must be >= 0, got {kappa!r}")
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != mean.size:
        raise DomainError("dimension mismatch between mean and y")
    if np.any(np.abs(np.linalg.norm(y, axis=-1) - 1.0) > UNIT_TOL):
        raise DomainError("y must have unit norm")
    out = kappa * (y @ mean) - vmf_log_normalizer(mean.size, kappa)
    return float(out) if np.ndim(out) == 0 else out
