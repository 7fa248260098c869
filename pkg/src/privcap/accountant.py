"""Privacy accounting for subsampled, composed DP-SGD.

Two pipelines are provided and the better one wins:

* approach 1 converts the single-step RDP curve to (eps, delta)-DP first, then
  amplifies by Poisson subsampling and composes in the (eps, delta) domain
  with the Kairouz-Oh-Viswanath bound;
* approach 2 stays in the RDP domain: subsampled RDP (Zhu-Wang bound, or the
  exact sampled-Gaussian moments for Gaussian noise), composition by
  multiplication, and a single final conversion.

Composition count: an explicit ``steps`` always wins. Otherwise
``composition_unit`` decides: ``"epoch"`` composes once per epoch, ``"step"``
once per batch (``epochs * ceil(1/gamma)`` times), and ``"auto"`` picks
``"epoch"`` for VMF and ``"step"`` for Gaussian noise. The automatic choice is
the one under which the published VMF and Gaussian tables are reproduced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from scipy import special

from privcap import dpconvert
from privcap.dpconvert import DpGuarantee, alpha_grid, epsilon_given_delta
from privcap.rdp import (
    GaussParams,
    MechanismSpec,
    MultiVmfParams,
    RdpCurve,
    VmfParams,
    rdp_curve,
)
from privcap.specfn import DomainError, log_sum_exp

ZHU_PREFACTORS = ("orig", "paper")
KAIROUZ_BRANCHES = ("orig", "paper")
GAUSSIAN_SUBSAMPLING = ("exact", "zhu")
COMPOSITION_UNITS = ("auto", "epoch", "step")


@dataclass(frozen=True)
class Variants:
    """Formula variants where published restatements disagree with their sources.

    zhu_prefactor: ``"orig"`` divides the subsampled log-moment by ``alpha - 1``
        (as in the source theorem), ``"paper"`` by ``alpha``.
    kairouz_branch: ``"orig"`` keeps the ``N eps_s`` factor on the
        ``tanh(eps_s/2)`` term of the advanced composition bound, ``"paper"``
        drops it.
    gaussian_subsampling: ``"exact"`` uses the exact sampled-Gaussian moments,
        ``"zhu"`` the general subsampling bound applied to ``alpha/(2 sigma^2)``.
    """

    zhu_prefactor: str = "orig"
    kairouz_branch: str = "orig"
    gaussian_subsampling: str = "exact"

    def __post_init__(self):
        if self.zhu_prefactor not in ZHU_PREFACTORS:
            raise ValueError(f"zhu_prefactor must be one of {ZHU_PREFACTORS}")
        if self.kairouz_branch not in KAIROUZ_BRANCHES:
            raise ValueError(f"kairouz_branch must be one of {KAIROUZ_BRANCHES}")
        if self.gaussian_subsampling not in GAUSSIAN_SUBSAMPLING:
            raise ValueError(f"gaussian_subsampling must be one of {GAUSSIAN_SUBSAMPLING}")


@dataclass(frozen=True)
class AccountantConfig:
    n_eps: int = 400
    eps_range: Tuple[float, float] = (1e-4, 1e3)
    n_delta_tilde: int = 100
    delta_tilde_span: float = 100.0  # delta_tilde grid covers [delta/span, delta]
    alpha_max: int = 512
    alpha_max_cap: int = 8192
    # exact inversion of approach 1 on top of the grid sweep
    refine: bool = False


@dataclass(frozen=True)
class AccountingScenario:
    gamma: float
    epochs: float
    delta: float
    steps: Optional[int] = None
    composition_unit: str = "auto"

    def __post_init__(self):
        if self.composition_unit not in COMPOSITION_UNITS:
            raise ValueError(f"composition_unit must be one of {COMPOSITION_UNITS}")
        if not 0 < self.gamma <= 1:
            raise DomainError(f"gamma must be in (0, 1], got {self.gamma!r}")
        if not self.epochs >= 1 and self.steps is None:
            raise DomainError(f"epochs must be >= 1, got {self.epochs!r}")
        if self.steps is not None and self.steps < 1:
            raise DomainError(f"steps must be >= 1, got {self.steps!r}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must be in (0, 1), got {self.delta!r}")

    def compositions(self, mechanism: Optional[MechanismSpec] = None) -> float:
        """Number of times the subsampled mechanism is composed."""
        if self.steps is not None:
            return float(self.steps)
        unit = self.composition_unit
        if unit == "auto":
            unit = "step" if isinstance(mechanism, GaussParams) else "epoch"
        if unit == "step":
            return float(epochs_to_steps(self.epochs, self.gamma))
        return float(self.epochs)


def epochs_to_steps(epochs: float, gamma: float) -> int:
    """Batches seen in ``epochs`` passes at sampling rate ``gamma``."""
    return int(math.ceil(epochs * math.ceil(1.0 / gamma - 1e-12)))


@dataclass
class Approach1Result:
    epsilon: float
    base_epsilon: float = math.nan
    base_delta: float = math.nan
    alpha_star: float = math.nan
    epsilon_s: float = math.nan
    delta_s: float = math.nan
    delta_tilde: float = math.nan
    delta_total: float = math.nan


@dataclass
class Approach2Result:
    epsilon: float
    alpha_star: float = math.nan
    alpha_max: int = 0
    curve: Optional[RdpCurve] = field(default=None, repr=False)


@dataclass
class AccountingResult:
    epsilon_approach1: float
    epsilon_approach2: float
    epsilon_best: float
    winner: str
    approach1: Approach1Result
    approach2: Approach2Result
    variants: Variants
    compositions: float = math.nan

    @property
    def alpha_star(self) -> float:
        if self.winner == "approach1":
            return self.approach1.alpha_star
        return self.approach2.alpha_star


# ---------------------------------------------------------------------------
# (eps, delta) domain


def amplify_dp_by_subsampling(epsilon: float, delta: float, gamma: float) -> Tuple[float, float]:
    """Poisson-subsampling amplification ``(ln(1 + gamma(e^eps - 1)), gamma delta)``."""
    if not epsilon >= 0 or not 0 <= delta < 1 or not 0 < gamma <= 1:
        raise DomainError("need eps >= 0, 0 <= delta < 1, 0 < gamma <= 1")
    if epsilon < 1.0:
        eps_s = math.log1p(gamma * math.expm1(epsilon))
    else:
        eps_s = epsilon + math.log(gamma + (1.0 - gamma) * math.exp(-epsilon))
    return min(eps_s, epsilon), gamma * delta


def _kairouz(eps_s, n: float, delta_tilde, branch: str):
    th = np.tanh(0.5 * eps_s)
    lead = n * eps_s * th if branch == "orig" else th
    b1 = n * eps_s
    with np.errstate(divide="ignore"):
        b2 = lead + eps_s * np.sqrt(2.0 * n * np.log(math.e + np.sqrt(n * eps_s**2) / delta_tilde))
        b3 = lead + eps_s * np.sqrt(2.0 * n * -np.log(delta_tilde))
    return np.minimum(b1, np.minimum(b2, b3))


def _delta_total(delta_s, n: float, delta_tilde):
    return -np.expm1(n * np.log1p(-delta_s) + np.log1p(-delta_tilde))


def compose_dp(epsilon_s: float, delta_s: float, n: float, delta_tilde: float,
               branch: str = "orig") -> Tuple[float, float]:
    """``n``-fold advanced composition; returns ``(eps_tilde, delta_total)``."""
    if not epsilon_s >= 0 or not 0 <= delta_s < 1 or not 0 < delta_tilde < 1 or n < 1:
        raise DomainError("invalid composition arguments")
    if branch not in KAIROUZ_BRANCHES:
        raise ValueError(f"branch must be one of {KAIROUZ_BRANCHES}")
    eps = float(_kairouz(epsilon_s, n, delta_tilde, branch))
    return eps, float(_delta_total(delta_s, n, delta_tilde))


def _is_null(mechanism: MechanismSpec) -> bool:
    if isinstance(mechanism, VmfParams):
        return mechanism.kappa == 0
    if isinstance(mechanism, MultiVmfParams):
        return all(b.kappa == 0 for b in mechanism.blocks)
    return False


def approach1(mechanism: MechanismSpec, scenario: AccountingScenario,
              variants: Variants = Variants(), config: AccountantConfig = AccountantConfig()) -> Approach1Result:
    """Convert first, then amplify and compose in the (eps, delta) domain."""
    if _is_null(mechanism):
        return Approach1Result(epsilon=0.0)
    curve = rdp_curve(mechanism)
    grid = alpha_grid(curve.alpha_max)
    taus = curve.values(grid)
    n = scenario.compositions(mechanism)
    gamma, target = scenario.gamma, scenario.delta

    eps_grid = np.geomspace(*config.eps_range, config.n_eps)
    dt_grid = np.geomspace(target / config.delta_tilde_span, target, config.n_delta_tilde)
    base = [dpconvert.delta_given_epsilon(curve, float(e), grid=grid, taus=taus) for e in eps_grid]

    best = Approach1Result(epsilon=math.inf)
    for g in base:
        eps_s, delta_s = amplify_dp_by_subsampling(g.epsilon, min(g.delta, 1.0 - 1e-16), gamma)
        ok = _delta_total(delta_s, n, dt_grid) <= target
        if not ok.any():
            continue
        cand = _kairouz(eps_s, n, dt_grid[ok], variants.kairouz_branch)
        j = int(np.argmin(cand))
        if cand[j] < best.epsilon:
            dtil = float(dt_grid[ok][j])
            best = Approach1Result(
                epsilon=float(cand[j]), base_epsilon=g.epsilon, base_delta=g.delta,
                alpha_star=g.alpha_star, epsilon_s=eps_s, delta_s=delta_s,
                delta_tilde=dtil, delta_total=float(_delta_total(delta_s, n, dtil)))

    if config.refine:
        # every composition branch grows with eps_s, so for a fixed delta_tilde
        # the best base eps is the smallest one whose delta fits the budget
        for dtil in dt_grid:
            log_keep = (math.log1p(-target) - math.log1p(-dtil)) / n
            delta_max = -math.expm1(log_keep) / gamma
            if not 0 < delta_max < 1:
                continue
            g = epsilon_given_delta(curve, delta_max, grid=grid, taus=taus)
            eps_s, delta_s = amplify_dp_by_subsampling(g.epsilon, g.delta, gamma)
            if _delta_total(delta_s, n, dtil) > target * (1 + 1e-12):
                continue
            cand = float(_kairouz(eps_s, n, dtil, variants.kairouz_branch))
            if cand < best.epsilon:
                best = Approach1Result(
                    epsilon=cand, base_epsilon=g.epsilon, base_delta=g.delta,
                    alpha_star=g.alpha_star, epsilon_s=eps_s, delta_s=delta_s,
                    delta_tilde=float(dtil), delta_total=float(_delta_total(delta_s, n, dtil)))
    return best


# ---------------------------------------------------------------------------
# RDP domain


def _zhu_log_moment(gamma: float, alpha: int, tau_int: np.ndarray) -> float:
    # tau_int[l] = tau(l) for l = 0..alpha (entries 0, 1 unused)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_g = math.log(gamma) if gamma > 0 else -math.inf
        log_1mg = math.log1p(-gamma) if gamma < 1 else -math.inf

        def pw(k, lg):
            # k * log(base) with 0 * (-inf) taken as 0
            return np.where(k == 0, 0.0, k * lg)

        first = float(pw(np.array(alpha - 1), log_1mg)) + math.log(alpha * gamma - gamma + 1.0)
        second = (math.log(alpha * (alpha - 1) / 2.0) + float(pw(np.array(2), log_g))
                  + float(pw(np.array(alpha - 2), log_1mg)) + tau_int[2])
        terms = [first, second]
        if alpha >= 3:
            ell = np.arange(3, alpha + 1)
            rest = (math.log(3.0) + special.gammaln(alpha + 1) - special.gammaln(ell + 1)
                    - special.gammaln(alpha - ell + 1) + pw(alpha - ell, log_1mg)
                    + pw(ell, log_g) + (ell - 1) * tau_int[3:alpha + 1])
            terms.extend(rest.tolist())
    val, sign = log_sum_exp([t for t in terms if not math.isnan(t)])
    return val if sign > 0 else -math.inf


def _prefactor(alpha: int, variant: str) -> float:
    if variant not in ZHU_PREFACTORS:
        raise ValueError(f"prefactor variant must be one of {ZHU_PREFACTORS}")
    return 1.0 / (alpha - 1) if variant == "orig" else 1.0 / alpha


def subsampled_rdp(curve: RdpCurve, gamma: float, alpha: float, prefactor: str = "orig") -> float:
    """RDP bound of the Poisson-subsampled mechanism at order ``alpha``.

    Integer ``alpha >= 2`` uses the Zhu-Wang bound; ``alpha == 1`` the
    ``gamma * tau(1)`` KL rule; other orders interpolate linearly between the
    neighbouring integers.
    """
    if not 0 <= gamma <= 1:
        raise DomainError(f"gamma must be in [0, 1], got {gamma!r}")
    if alpha < 1:
        raise DomainError(f"order must be >= 1, got {alpha!r}")
    if alpha == 1:
        return gamma * curve(1.0)
    lo = math.floor(alpha)
    if alpha != lo:
        frac = alpha - lo
        return ((1.0 - frac) * subsampled_rdp(curve, gamma, lo, prefactor)
                + frac * subsampled_rdp(curve, gamma, lo + 1, prefactor))
    a = int(alpha)
    if gamma == 0:
        return 0.0
    tau_int = np.zeros(a + 1)
    tau_int[2:] = curve.values(np.arange(2, a + 1, dtype=float))
    log_m = _zhu_log_moment(gamma, a, tau_int)
    if math.isinf(log_m) and log_m > 0:
        return math.inf
    return _prefactor(a, prefactor) * log_m


def subsampled_integer_curve(curve: RdpCurve, gamma: float, alpha_max: int,
                             prefactor: str = "orig") -> np.ndarray:
    """``tau_s(alpha)`` for ``alpha = 1 .. alpha_max`` (index ``alpha - 1``)."""
    tau_int = np.zeros(alpha_max + 1)
    tau_int[1] = curve(1.0)
    tau_int[2:] = curve.values(np.arange(2, alpha_max + 1, dtype=float))
    out = np.empty(alpha_max)
    out[0] = gamma * tau_int[1]
    for a in range(2, alpha_max + 1):
        out[a - 1] = _prefactor(a, prefactor) * _zhu_log_moment(gamma, a, tau_int)
    return out


def interpolated_curve(values: np.ndarray, mechanism: str, params=None) -> RdpCurve:
    """Piecewise-linear RDP curve through integer orders ``1 .. len(values)``."""
    orders = np.arange(1, len(values) + 1, dtype=float)
    vals = np.asarray(values, dtype=float)
    return RdpCurve(
        fn=lambda a: float(np.interp(a, orders, vals)),
        mechanism=mechanism,
        params=params,
        alpha_max=float(len(values)),
        vec=lambda a: np.interp(a, orders, vals),
    )


def _log_erfc(x: float) -> float:
    return math.log(2.0) + float(special.log_ndtr(-x * math.sqrt(2.0)))


def sampled_gaussian_rdp(gamma: float, sigma: float, alpha: float) -> float:
    """Exact RDP of the Poisson-sampled Gaussian mechanism (unit sensitivity).

    This is ``ln E_{z~N(0,s^2)}[(mu(z)/mu0(z))^alpha] / (alpha - 1)`` with
    ``mu = (1-gamma) N(0, s^2) + gamma N(1, s^2)``, computed by the binomial
    expansion for integer orders and by the erfc-weighted series otherwise.
    """
    if not 0 <= gamma <= 1 or not sigma > 0 or not alpha >= 1:
        raise DomainError("need 0 <= gamma <= 1, sigma > 0, alpha >= 1")
    if gamma == 0:
        return 0.0
    if gamma == 1:
        return alpha / (2.0 * sigma**2)
    if alpha == 1:
        # limit alpha -> 1 is the KL divergence; bounded by convexity
        return gamma / (2.0 * sigma**2)
    log_q, log_1mq = math.log(gamma), math.log1p(-gamma)
    s2 = sigma * sigma
    if float(alpha).is_integer():
        a = int(alpha)
        i = np.arange(a + 1)
        terms = (special.gammaln(a + 1) - special.gammaln(i + 1) - special.gammaln(a - i + 1)
                 + i * log_q + (a - i) * log_1mq + (i * i - i) / (2.0 * s2))
        log_a, _ = log_sum_exp(terms)
        return max(log_a, 0.0) / (alpha - 1.0)

    z0 = s2 * math.log(1.0 / gamma - 1.0) + 0.5
    logs, signs = [], []
    i = 0
    while True:
        coef = special.binom(alpha, i)
        if coef == 0:
            break
        log_coef = math.log(abs(coef))
        sgn = 1 if coef > 0 else -1
        j = alpha - i
        log_t0 = log_coef + i * log_q + j * log_1mq
        log_t1 = log_coef + j * log_q + i * log_1mq
        log_e0 = math.log(0.5) + _log_erfc((i - z0) / (math.sqrt(2.0) * sigma))
        log_e1 = math.log(0.5) + _log_erfc((z0 - j) / (math.sqrt(2.0) * sigma))
        log_s0 = log_t0 + (i * i - i) / (2.0 * s2) + log_e0
        log_s1 = log_t1 + (j * j - j) / (2.0 * s2) + log_e1
        logs.extend([log_s0, log_s1])
        signs.extend([sgn, sgn])
        i += 1
        if i > alpha and max(log_s0, log_s1) < -30.0:
            break
        if i > 100000:
            raise RuntimeError("sampled Gaussian series failed to converge")
    log_a, sign = log_sum_exp(logs, signs)
    if sign <= 0:
        return 0.0
    return max(log_a, 0.0) / (alpha - 1.0)


def sampled_gaussian_curve(params: GaussParams, gamma: float, alpha_max: float) -> RdpCurve:
    cache = {}

    def fn(a):
        a = float(a)
        if a not in cache:
            cache[a] = sampled_gaussian_rdp(gamma, params.sigma, a)
        return cache[a]

    return RdpCurve(fn=fn, mechanism="gauss_sampled", params=params, alpha_max=float(alpha_max))


def compose_rdp(curve: RdpCurve, n: float) -> RdpCurve:
    """``n``-fold composition: the RDP curve scales by ``n``."""
    if n < 1:
        raise DomainError(f"composition count must be >= 1, got {n!r}")
    return curve.scaled(float(n))


def subsampled_curve(mechanism: MechanismSpec, gamma: float, alpha_max: int,
                     variants: Variants = Variants()) -> RdpCurve:
    if isinstance(mechanism, GaussParams) and variants.gaussian_subsampling == "exact":
        return sampled_gaussian_curve(mechanism, gamma, alpha_max)
    base = rdp_curve(mechanism)
    vals = subsampled_integer_curve(base, gamma, alpha_max, variants.zhu_prefactor)
    return interpolated_curve(vals, base.mechanism + "_subsampled", mechanism)


def approach2(mechanism: MechanismSpec, scenario: AccountingScenario,
              variants: Variants = Variants(), config: AccountantConfig = AccountantConfig()) -> Approach2Result:
    """Subsample and compose in the RDP domain, convert once at the end."""
    if _is_null(mechanism):
        return Approach2Result(epsilon=0.0)
    n = scenario.compositions(mechanism)
    alpha_max = config.alpha_max
    best = Approach2Result(epsilon=math.inf)
    while True:
        curve = compose_rdp(subsampled_curve(mechanism, scenario.gamma, alpha_max, variants), n)
        try:
            g = epsilon_given_delta(curve, scenario.delta)
        except dpconvert.ConversionError:
            break
        improved = g.epsilon < best.epsilon
        if improved:
            best = Approach2Result(epsilon=g.epsilon, alpha_star=g.alpha_star,
                                   alpha_max=alpha_max, curve=curve)
        # only grow the order range while the optimum sits near its edge
        if not improved or g.alpha_star < 0.5 * alpha_max or alpha_max >= config.alpha_max_cap:
            break
        alpha_max *= 2
    return best


def best_epsilon(mechanism: MechanismSpec, scenario: AccountingScenario,
                 variants: Variants = Variants(),
                 config: AccountantConfig = AccountantConfig()) -> AccountingResult:
    """Run both pipelines and report the smaller epsilon."""
    r1 = approach1(mechanism, scenario, variants, config)
    r2 = approach2(mechanism, scenario, variants, config)
    winner = "approach1" if r1.epsilon <= r2.epsilon else "approach2"
    return AccountingResult(
        epsilon_approach1=r1.epsilon,
        epsilon_approach2=r2.epsilon,
        epsilon_best=min(r1.epsilon, r2.epsilon),
        winner=winner,
        approach1=r1,
        approach2=r2,
        variants=variants,
        compositions=scenario.compositions(mechanism),
    )
