"""Renyi-DP curves for the VMF and Gaussian gradient-perturbation mechanisms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from privcap.specfn import (
    DomainError,
    bessel_ratio_consecutive,
    log_bessel_i,
    log_bessel_i_vec,
    log_bessel_ratio,
)


@dataclass(frozen=True)
class VmfParams:
    """VMF mechanism on the unit sphere in ``R^p`` with concentration ``kappa``."""

    p: int
    kappa: float

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise DomainError(f"VMF dimension must be an integer >= 2, got {self.p!r}")
        if not self.kappa >= 0:
            raise DomainError(f"kappa must be >= 0, got {self.kappa!r}")

    @property
    def nu(self) -> float:
        return self.p / 2.0 - 1.0


@dataclass(frozen=True)
class MultiVmfParams:
    """Independent VMF blocks, one ``(p_i, kappa_i)`` per block."""

    blocks: Tuple[VmfParams, ...]

    def __post_init__(self):
        if len(self.blocks) == 0:
            raise DomainError("need at least one block")

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[int, float]]) -> "MultiVmfParams":
        return cls(tuple(VmfParams(p, k) for p, k in pairs))

    @property
    def p(self) -> int:
        return sum(b.p for b in self.blocks)


@dataclass(frozen=True)
class GaussParams:
    """Gaussian mechanism with noise multiplier ``sigma``.

    ``p`` and ``radius`` only matter for Bayes' capacity (the clipped input
    ball ``B_radius^p``); RDP depends on ``sigma`` alone.
    """

    sigma: float
    p: Optional[int] = None
    radius: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma!r}")
        if self.p is not None and self.p < 1:
            raise DomainError("dimension must be >= 1")
        if not self.radius > 0:
            raise DomainError("radius must be > 0")


MechanismSpec = Union[VmfParams, MultiVmfParams, GaussParams]


@dataclass(frozen=True)
class RdpCurve:
    """An RDP bound ``tau(alpha)``, valid for ``1 <= alpha <= alpha_max``.

    ``vec`` is an optional array version of ``fn`` used for grid evaluation.
    """

    fn: Callable[[float], float]
    mechanism: str
    params: object = None
    alpha_max: float = math.inf
    vec: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __call__(self, alpha: float) -> float:
        if alpha < 1:
            raise DomainError(f"order must be >= 1, got {alpha!r}")
        if alpha > self.alpha_max:
            raise DomainError(f"order {alpha} beyond curve range {self.alpha_max}")
        return self.fn(alpha)

    def values(self, alphas) -> np.ndarray:
        alphas = np.asarray(alphas, dtype=float)
        if self.vec is not None:
            return self.vec(alphas)
        return np.array([self.fn(float(a)) for a in alphas.ravel()]).reshape(alphas.shape)

    def scaled(self, factor: float, mechanism: Optional[str] = None) -> "RdpCurve":
        fn, vec = self.fn, self.vec
        return RdpCurve(
            fn=lambda a: factor * fn(a),
            mechanism=mechanism or self.mechanism,
            params=self.params,
            alpha_max=self.alpha_max,
            vec=None if vec is None else (lambda a: factor * vec(a)),
        )


def vmf_rdp(params: VmfParams, alpha: float) -> float:
    """RDP of the VMF mechanism at order ``alpha`` (antipodal worst case).

    At ``alpha == 1`` this is the KL upper bound ``2 kappa I_{nu+1}(kappa)/I_nu(kappa)``.
    """
    if alpha < 1:
        raise DomainError(f"order must be >= 1, got {alpha!r}")
    nu, kappa = params.nu, params.kappa
    if kappa == 0:
        return 0.0
    if alpha == 1:
        return 2.0 * kappa * bessel_ratio_consecutive(nu, kappa)
    s = 2.0 * alpha - 1.0
    log_ratio = log_bessel_ratio(nu, s * kappa, kappa)
    tau = (log_ratio - nu * math.log(s)) / (alpha - 1.0)
    return max(tau, 0.0)


def _vmf_rdp_vec(params: VmfParams, alphas: np.ndarray) -> np.ndarray:
    nu, kappa = params.nu, params.kappa
    alphas = np.asarray(alphas, dtype=float)
    if kappa == 0:
        return np.zeros_like(alphas)
    out = np.empty_like(alphas)
    one = alphas == 1
    if one.any():
        out[one] = vmf_rdp(params, 1.0)
    rest = ~one
    a = alphas[rest]
    s = 2.0 * a - 1.0
    log_ratio = log_bessel_i_vec(nu, s * kappa) - log_bessel_i(nu, kappa)
    out[rest] = np.maximum((log_ratio - nu * np.log(s)) / (a - 1.0), 0.0)
    return out


def vmf_rdp_multi(params: MultiVmfParams, alpha: float) -> float:
    """RDP of independent VMF blocks: the per-block values add up."""
    if not alpha > 1:
        raise DomainError(f"multivariate VMF RDP needs alpha > 1, got {alpha!r}")
    return sum(vmf_rdp(b, alpha) for b in params.blocks)


def gaussian_rdp(params: GaussParams, alpha: float) -> float:
    """``alpha / (2 sigma^2)``: unit sensitivity, noise std ``sigma``."""
    if alpha < 1:
        raise DomainError(f"order must be >= 1, got {alpha!r}")
    return alpha / (2.0 * params.sigma**2)


def rdp_curve(mechanism: MechanismSpec) -> RdpCurve:
    """The (unsubsampled, single-use) RDP curve of a mechanism."""
    if isinstance(mechanism, VmfParams):
        return RdpCurve(
            fn=lambda a: vmf_rdp(mechanism, a),
            mechanism="vmf",
            params=mechanism,
            vec=lambda a: _vmf_rdp_vec(mechanism, a),
        )
    if isinstance(mechanism, MultiVmfParams):
        def multi(a):
            if a == 1:
                return sum(vmf_rdp(b, 1.0) for b in mechanism.blocks)
            return vmf_rdp_multi(mechanism, a)

        return RdpCurve(
            fn=multi,
            mechanism="vmf_multi",
            params=mechanism,
            vec=lambda a: sum(_vmf_rdp_vec(b, a) for b in mechanism.blocks),
        )
    if isinstance(mechanism, GaussParams):
        sigma = mechanism.sigma
        return RdpCurve(
            fn=lambda a: gaussian_rdp(mechanism, a),
            mechanism="gauss",
            params=mechanism,
            vec=lambda a: np.asarray(a, dtype=float) / (2.0 * sigma**2),
        )
    raise TypeError(f"unknown mechanism {mechanism!r}")
