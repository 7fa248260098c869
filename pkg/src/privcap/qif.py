"""Bayes leakage and Bayes' capacity of discrete and continuous channels.

A discrete channel is a row-stochastic matrix ``C[x, y] = P(y | x)``. Its Bayes'
capacity (maximal multiplicative Bayes leakage over priors) is the sum of the
column maxima. The continuous versions replace the sum by an integral of the
pointwise supremum of the noise density over the input set:

* Gaussian noise on gradients clipped to the ball ``B_R^p``;
* VMF noise on the unit sphere ``S^{p-1}``.

All continuous capacities are computed in log space; the linear value is
``inf`` when it overflows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from privcap.rdp import GaussParams, MechanismSpec, MultiVmfParams, VmfParams
from privcap.specfn import (
    DomainError,
    log_ball_volume,
    log_bessel_i,
    log_binom,
    log_gamma,
    log_sphere_area,
    log_sum_exp,
)

ROW_TOL = 1e-9
COMPARE_TOL = 1e-9
BC_FORMS = ("derivation", "theorem")


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class CapacityValue:
    log_capacity: float

    @property
    def capacity(self) -> float:
        try:
            return math.exp(self.log_capacity)
        except OverflowError:
            return math.inf


class Safety(enum.Enum):
    SAFER = "safer"
    LESS_SAFE = "less_safe"
    EQUAL = "equal"


def as_channel(C) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.size == 0:
        raise ChannelError("channel must be a nonempty 2-d matrix")
    if not np.all(np.isfinite(C)) or (C < 0).any() or (C > 1).any():
        raise ChannelError("channel entries must lie in [0, 1]")
    if not np.allclose(C.sum(axis=1), 1.0, rtol=0, atol=ROW_TOL):
        raise ChannelError("channel rows must sum to 1")
    if (C.max(axis=0) == 0).any():
        raise ChannelError("channel has an all-zero column")
    return C


def as_prior(pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size == 0:
        raise ChannelError("prior must be a nonempty vector")
    if not np.all(np.isfinite(pi)) or (pi < 0).any() or abs(pi.sum() - 1.0) > ROW_TOL:
        raise ChannelError("prior must be a probability vector")
    return pi


def bayes_capacity_channel(C) -> CapacityValue:
    C = as_channel(C)
    return CapacityValue(math.log(math.fsum(C.max(axis=0))))


def prior_vulnerability(pi) -> float:
    return float(as_prior(pi).max())


def posterior_vulnerability(pi, C) -> float:
    pi, C = as_prior(pi), as_channel(C)
    if pi.size != C.shape[0]:
        raise ChannelError(f"prior has {pi.size} entries, channel has {C.shape[0]} rows")
    return math.fsum((pi[:, None] * C).max(axis=0))


def leakage(pi, C) -> float:
    """Multiplicative Bayes leakage: posterior over prior vulnerability."""
    return posterior_vulnerability(pi, C) / prior_vulnerability(pi)


def bayes_capacity_gaussian(p: int, sigma: float, radius: float = 1.0,
                            form: str = "derivation") -> CapacityValue:
    """Capacity of ``y = x + N(0, sigma^2 I_p)`` with inputs in ``B_radius^p``.

    Inside the ball the supremum of the density is its peak; outside, the
    nearest input is on the boundary, and integrating in spherical shells
    gives a binomial sum of half-Gaussian moments. ``form="theorem"`` doubles
    the outside term.
    """
    if int(p) != p or p < 1 or not sigma > 0 or not radius > 0:
        raise DomainError("need integer p >= 1, sigma > 0, radius > 0")
    if form not in BC_FORMS:
        raise ValueError(f"form must be one of {BC_FORMS}")
    p = int(p)
    log_norm = -0.5 * p * math.log(2.0 * math.pi * sigma**2)
    ball = log_ball_volume(p, radius) + log_norm
    log_s2 = math.log(math.sqrt(2.0) * sigma)
    log_r = math.log(radius)
    moments = [log_gamma(0.5 * (p - i)) + (p - i) * log_s2 + log_binom(p - 1, i) + i * log_r
               for i in range(p)]
    half = 0.0 if form == "theorem" else math.log(0.5)
    outside = log_sphere_area(p) + log_norm + half + log_sum_exp(moments)[0]
    return CapacityValue(log_sum_exp([ball, outside])[0])


def bayes_capacity_vmf(p: int, kappa: float) -> CapacityValue:
    """Capacity of VMF noise on ``S^{p-1}``: peak density times sphere area."""
    if int(p) != p or p < 2 or not kappa >= 0:
        raise DomainError("need integer p >= 2 and kappa >= 0")
    if kappa == 0:
        return CapacityValue(0.0)
    nu = 0.5 * p - 1.0
    log_c = (math.log(2.0) - log_gamma(0.5 * p) + nu * math.log(kappa) + kappa
             - 0.5 * p * math.log(2.0) - log_bessel_i(nu, kappa))
    # the peak-to-mean ratio of a density is at least 1
    return CapacityValue(max(log_c, 0.0))


def mechanism_capacity(mechanism: MechanismSpec, form: str = "derivation") -> CapacityValue:
    if isinstance(mechanism, VmfParams):
        return bayes_capacity_vmf(mechanism.p, mechanism.kappa)
    if isinstance(mechanism, MultiVmfParams):
        # independent blocks: the supremum and the integral factor over blocks
        return CapacityValue(math.fsum(bayes_capacity_vmf(b.p, b.kappa).log_capacity
                                       for b in mechanism.blocks))
    if isinstance(mechanism, GaussParams):
        if mechanism.p is None:
            raise DomainError("Gaussian capacity needs the dimension p")
        return bayes_capacity_gaussian(mechanism.p, mechanism.sigma, mechanism.radius, form)
    raise TypeError(f"unknown mechanism {mechanism!r}")


def _dimension(m: MechanismSpec) -> int:
    if isinstance(m, GaussParams):
        if m.p is None:
            raise DomainError("Gaussian mechanism needs the dimension p")
        return m.p
    return m.p


def compare_safety(m1: MechanismSpec, m2: MechanismSpec, form: str = "derivation") -> Safety:
    """Is ``m1`` safer against reconstruction than ``m2`` (smaller capacity)?"""
    if _dimension(m1) != _dimension(m2):
        raise DomainError(f"dimension mismatch: {_dimension(m1)} vs {_dimension(m2)}")
    c1 = mechanism_capacity(m1, form).log_capacity
    c2 = mechanism_capacity(m2, form).log_capacity
    if abs(c1 - c2) <= COMPARE_TOL:
        return Safety.EQUAL
    return Safety.SAFER if c1 < c2 else Safety.LESS_SAFE
