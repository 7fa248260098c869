"""Conversion between RDP curves and (epsilon, delta)-DP.

Both directions optimise the same family over the order alpha:

    ln delta_alpha = (alpha - 1)(tau(alpha) - eps) - ln(alpha - 1) + alpha ln(1 - 1/alpha)
    eps_alpha      = tau(alpha) + [alpha ln(1 - 1/alpha) - ln(alpha - 1) - ln delta] / (alpha - 1)

A log-spaced grid brackets the optimum and a bounded Brent search in
``log alpha`` refines it. Nothing assumes convexity: the refined point only
replaces the grid point if it is better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import optimize

from privcap.rdp import RdpCurve, VmfParams, rdp_curve, vmf_rdp
from privcap.specfn import DomainError, bessel_ratio_consecutive

ALPHA_MIN = 1.0 + 1e-6
ALPHA_MAX = 1e6
N_ALPHA_GRID = 2000


class ConversionError(ArithmeticError):
    """No order on the search interval gave a finite value."""


class NoRootError(ArithmeticError):
    """The VMF stationarity condition has no sign change on the interval."""


@dataclass(frozen=True)
class DpGuarantee:
    epsilon: float
    delta: float
    alpha_star: Optional[float] = None
    log_delta: Optional[float] = None

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not 0 <= self.delta <= 1:
            raise ValueError(f"delta must be in [0, 1], got {self.delta!r}")


def alpha_grid(alpha_max: float = ALPHA_MAX, n: int = N_ALPHA_GRID) -> np.ndarray:
    """The default log-spaced order grid, cut at ``alpha_max``."""
    grid = np.geomspace(ALPHA_MIN, ALPHA_MAX, n)
    if alpha_max < ALPHA_MAX:
        grid = grid[grid <= alpha_max]
        if grid.size == 0 or grid[-1] < alpha_max:
            grid = np.append(grid, alpha_max)
    return grid


def log_delta_alpha(alpha, tau, epsilon: float):
    """``ln delta_alpha`` (vectorised over matching ``alpha``/``tau``)."""
    alpha = np.asarray(alpha, dtype=float)
    am1 = alpha - 1.0
    return am1 * (tau - epsilon) - np.log(am1) + alpha * np.log1p(-1.0 / alpha)


def epsilon_alpha(alpha, tau, log_delta: float):
    alpha = np.asarray(alpha, dtype=float)
    am1 = alpha - 1.0
    return tau + (alpha * np.log1p(-1.0 / alpha) - np.log(am1) - log_delta) / am1


def _refine(objective, grid: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """Minimise ``objective(alpha)`` near the grid argmin; returns ``(alpha, value)``."""
    finite = np.isfinite(values)
    if not finite.any():
        raise ConversionError("no finite evaluation on the order grid")
    masked = np.where(finite, values, np.inf)
    i = int(np.argmin(masked))
    best_a, best_v = float(grid[i]), float(masked[i])
    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[min(i + 1, len(grid) - 1)])
    if hi > lo:
        def f(u):
            v = objective(math.exp(u))
            return v if math.isfinite(v) else math.inf

        res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12})
        if res.fun < best_v:
            best_a, best_v = math.exp(res.x), float(res.fun)
    return best_a, best_v


def delta_given_epsilon(curve: RdpCurve, epsilon: float,
                        grid: Optional[np.ndarray] = None,
                        taus: Optional[np.ndarray] = None) -> DpGuarantee:
    """Smallest delta certified at ``epsilon`` by the curve.

    ``grid``/``taus`` may be passed in to reuse a precomputed evaluation of
    the curve.
    """
    if not epsilon >= 0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon!r}")
    if grid is None:
        grid = alpha_grid(curve.alpha_max)
    if taus is None:
        taus = curve.values(grid)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = log_delta_alpha(grid, taus, epsilon)
    a_star, log_d = _refine(
        lambda a: float(log_delta_alpha(a, curve(a), epsilon)), grid, vals)
    log_d = min(log_d, 0.0)
    return DpGuarantee(epsilon=epsilon, delta=math.exp(log_d), alpha_star=a_star, log_delta=log_d)


def epsilon_given_delta(curve: RdpCurve, delta: float,
                        grid: Optional[np.ndarray] = None,
                        taus: Optional[np.ndarray] = None) -> DpGuarantee:
    """Smallest epsilon certified at ``delta`` by the curve."""
    if not 0 < delta < 1:
        raise DomainError(f"delta must be in (0, 1), got {delta!r}")
    log_delta = math.log(delta)
    if grid is None:
        grid = alpha_grid(curve.alpha_max)
    if taus is None:
        taus = curve.values(grid)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = epsilon_alpha(grid, taus, log_delta)
    a_star, eps = _refine(
        lambda a: float(epsilon_alpha(a, curve(a), log_delta)), grid, vals)
    return DpGuarantee(epsilon=max(eps, 0.0), delta=delta, alpha_star=a_star, log_delta=log_delta)


def vmf_stationarity(params: VmfParams, epsilon: float, alpha: float) -> float:
    """Derivative of ``ln delta_alpha`` in alpha for the VMF curve."""
    x = (2.0 * alpha - 1.0) * params.kappa
    return -epsilon + 2.0 * params.kappa * bessel_ratio_consecutive(params.nu, x) + math.log1p(-1.0 / alpha)


def vmf_optimal_alpha(params: VmfParams, epsilon: float, alpha_max: float = ALPHA_MAX,
                      tol: float = 1e-9) -> float:
    """Root of the VMF stationarity condition, found by bisection.

    The condition increases in alpha (from -inf at 1 to ``2 kappa - eps``),
    so a root exists only when ``eps < 2 kappa``; otherwise, or if the root
    lies beyond ``alpha_max``, :class:`NoRootError` is raised and callers
    should fall back to :func:`delta_given_epsilon`.
    """
    if not epsilon > 0 or not params.kappa > 0:
        raise DomainError("need epsilon > 0 and kappa > 0")
    g = lambda a: vmf_stationarity(params, epsilon, a)
    lo, hi = ALPHA_MIN, alpha_max
    if g(hi) <= 0:
        raise NoRootError(f"stationarity condition has no sign change on ({lo}, {hi}]")
    if g(lo) >= 0:
        return lo
    # bisection in log(alpha - 1): orders span many decades
    u_lo, u_hi = math.log(lo - 1.0), math.log(hi - 1.0)
    for _ in range(400):
        u = 0.5 * (u_lo + u_hi)
        a = 1.0 + math.exp(u)
        r = g(a)
        if abs(r) <= tol * 1e-3 or u_hi - u_lo < 1e-15:
            return a
        if r > 0:
            u_hi = u
        else:
            u_lo = u
    return 1.0 + math.exp(0.5 * (u_lo + u_hi))


def vmf_delta_at_optimal_alpha(params: VmfParams, epsilon: float) -> DpGuarantee:
    """Delta at the bisection root; falls back to the grid search when there is no root."""
    try:
        a = vmf_optimal_alpha(params, epsilon)
    except NoRootError:
        return delta_given_epsilon(rdp_curve(params), epsilon)
    log_d = min(float(log_delta_alpha(a, vmf_rdp(params, a), epsilon)), 0.0)
    return DpGuarantee(epsilon=epsilon, delta=math.exp(log_d), alpha_star=a, log_delta=log_d)
