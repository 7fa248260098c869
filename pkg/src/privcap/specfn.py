"""Log-domain special functions.

Everything here returns natural logarithms so that quantities like
``I_nu(kappa)`` with ``nu ~ 7000`` or ``Gamma(p/2)`` with ``p ~ 13700`` stay
finite. ``log_bessel_i`` switches between three evaluation regimes:

* ascending power series, for arguments small relative to the order,
* the uniform (Debye) large-order expansion, for ``nu >= DEBYE_MIN_ORDER``,
* the Hankel large-argument expansion for small orders and large arguments.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence, Tuple

import numpy as np

NEG_INF = -math.inf

# Regime boundaries. The series and the two asymptotic expansions overlap
# around these values; tests check agreement across each hand-off.
DEBYE_MIN_ORDER = 40.0
SERIES_MAX_ARG_SMALL_ORDER = 40.0
N_DEBYE_TERMS = 14


class DomainError(ValueError):
    """Raised when a special function is called outside its domain."""


class CancellationError(ArithmeticError):
    """Raised when a signed log-sum collapses to zero or below."""


def log_gamma(x: float) -> float:
    """``ln Gamma(x)`` for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def log_binom(n: float, k: float) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def log_sum_exp(terms: Iterable[float], signs: Sequence[int] | None = None) -> Tuple[float, int]:
    """Log of a signed sum of exponentials.

    ``terms`` are logs of magnitudes, ``signs`` (default all +1) their signs.
    Returns ``(log|S|, sign(S))`` with ``sign`` in ``{-1, 0, 1}``; a zero sum
    comes back as ``(-inf, 0)``.
    """
    logs = np.asarray(list(terms), dtype=float)
    if logs.size == 0:
        raise ValueError("log_sum_exp needs at least one term")
    sg = np.ones_like(logs) if signs is None else np.asarray(signs, dtype=float)
    if sg.shape != logs.shape:
        raise ValueError("terms and signs differ in length")
    if logs.size == 1:
        if logs[0] == NEG_INF or sg[0] == 0:
            return NEG_INF, 0
        return float(logs[0]), int(np.sign(sg[0]))
    if np.any(np.isposinf(logs)):
        pos = sg[np.isposinf(logs)]
        if np.all(pos > 0):
            return math.inf, 1
        if np.all(pos < 0):
            return math.inf, -1
        raise CancellationError("opposite-signed infinite terms")
    m = float(np.max(logs))
    if m == NEG_INF:
        return NEG_INF, 0
    if np.all(sg >= 0):
        # all-positive fast path keeps full relative accuracy
        total = float(np.sum(np.exp(logs - m)))
        return m + math.log(total), 1
    # fsum avoids losing the small terms when big ones nearly cancel
    total = math.fsum((sg * np.exp(logs - m)).tolist())
    if total == 0.0:
        return NEG_INF, 0
    return m + math.log(abs(total)), 1 if total > 0 else -1


def log_sum_exp_positive(terms: Iterable[float], signs: Sequence[int] | None = None) -> float:
    """Like :func:`log_sum_exp` but the sum must come out strictly positive."""
    val, sign = log_sum_exp(terms, signs)
    if sign <= 0:
        raise CancellationError("signed sum is not positive")
    return val


# ---------------------------------------------------------------------------
# Debye polynomials u_k(t) for the uniform large-order expansion
#   u_{k+1}(t) = t^2 (1 - t^2)/2 * u_k'(t) + 1/8 * int_0^t (1 - 5 s^2) u_k(s) ds


def _debye_polys(n: int) -> list:
    polys = [[Fraction(1)]]
    for _ in range(n - 1):
        u = polys[-1]
        deg = len(u) - 1
        out = [Fraction(0)] * (deg + 4)
        # t^2 (1 - t^2) / 2 * u'
        for i in range(1, deg + 1):
            c = u[i] * i / 2
            out[i + 1] += c
            out[i + 3] -= c
        # 1/8 * int_0^t (1 - 5 s^2) u(s) ds
        for i in range(deg + 1):
            out[i + 1] += u[i] / (8 * (i + 1))
            out[i + 3] -= 5 * u[i] / (8 * (i + 3))
        while len(out) > 1 and out[-1] == 0:
            out.pop()
        polys.append(out)
    # numpy polyval wants highest degree first
    return [np.array([float(c) for c in reversed(p)]) for p in polys]


_DEBYE = _debye_polys(N_DEBYE_TERMS)
_DEBYE_LISTS = [p.tolist() for p in _DEBYE]


def _log_bessel_series(nu: float, x: float) -> float:
    # I_nu(x) = (x/2)^nu / Gamma(nu+1) * sum_k (x^2/4)^k / (k! (nu+1)_k)
    q = 0.25 * x * x
    acc = 0.0
    term = 1.0
    shift = 0.0  # acc and term are stored divided by exp(shift)
    k = 0
    while True:
        k += 1
        term *= q / (k * (nu + k))
        acc += term
        if term <= 1e-17 * acc or term == 0.0:
            break
        if acc > 1e250:
            acc *= 1e-250
            term *= 1e-250
            shift += 250.0 * math.log(10.0)
        if k > 100000:
            raise RuntimeError("Bessel series failed to converge")
    head = 0.0 if nu == 0 else nu * math.log(0.5 * x) - math.lgamma(nu + 1.0)
    if shift == 0.0:
        return head + math.log1p(acc)
    return head + shift + math.log(acc + math.exp(-shift))


def _debye_sum(t, inv_nu):
    # sum_k u_k(t) / nu^k, Horner in 1/nu over Horner-evaluated u_k(t)
    acc = 0.0
    for poly in reversed(_DEBYE_LISTS):
        v = 0.0
        for c in poly:
            v = v * t + c
        acc = acc * inv_nu + v
    return acc


def _log_bessel_debye(nu: float, x: float) -> float:
    z = x / nu
    root = math.sqrt(1.0 + z * z)
    t = 1.0 / root
    eta = root + math.log(z) - math.log1p(root)
    s = _debye_sum(t, 1.0 / nu)
    return nu * eta - 0.5 * math.log(2.0 * math.pi * nu) + 0.5 * math.log(t) + math.log(s)


def _log_bessel_debye_vec(nu: float, x: np.ndarray) -> np.ndarray:
    z = x / nu
    root = np.sqrt(1.0 + z * z)
    t = 1.0 / root
    eta = root + np.log(z) - np.log1p(root)
    inv = 1.0 / nu
    acc = np.zeros_like(x)
    for poly in reversed(_DEBYE):
        acc = acc * inv + np.polyval(poly, t)
    return nu * eta - 0.5 * math.log(2.0 * math.pi * nu) + 0.5 * np.log(t) + np.log(acc)


def _log_bessel_hankel(nu: float, x: float) -> float:
    mu = 4.0 * nu * nu
    s = 1.0
    term = 1.0
    prev = math.inf
    for k in range(1, 200):
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) > prev:
            break
        s += term
        if abs(term) < 1e-17 * abs(s):
            break
        prev = abs(term)
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(s)


def _hankel_min_arg(nu: float) -> float:
    # ratio of consecutive Hankel terms ~ (4 nu^2)/(8 k x); keeps the
    # truncation error well below double precision
    return max(SERIES_MAX_ARG_SMALL_ORDER, 1.5 * nu * nu)


def log_bessel_i(nu: float, x: float) -> float:
    """``ln I_nu(x)`` for real ``nu >= 0``, ``x >= 0``.

    ``I_nu(0)`` is 1 for ``nu == 0`` and 0 otherwise, so the latter returns
    ``-inf``.
    """
    if nu < 0 or x < 0 or math.isnan(nu) or math.isnan(x):
        raise DomainError(f"log_bessel_i needs nu >= 0 and x >= 0, got ({nu!r}, {x!r})")
    if x == 0.0:
        return 0.0 if nu == 0 else NEG_INF
    if math.isinf(x):
        return math.inf
    if nu >= DEBYE_MIN_ORDER:
        # the ascending series is cheaper and exact enough far below the
        # turning point; Debye everywhere else
        if x * x < 0.04 * (nu + 1.0):
            return _log_bessel_series(nu, x)
        return _log_bessel_debye(nu, x)
    if x <= SERIES_MAX_ARG_SMALL_ORDER or x < _hankel_min_arg(nu):
        return _log_bessel_series(nu, x)
    return _log_bessel_hankel(nu, x)


def log_bessel_i_vec(nu: float, x) -> np.ndarray:
    """Vectorised :func:`log_bessel_i` over an array of arguments."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    flat_x = x.ravel()
    flat = out.ravel()
    if nu >= DEBYE_MIN_ORDER:
        mask = (flat_x > 0) & np.isfinite(flat_x) & ~(flat_x * flat_x < 0.04 * (nu + 1.0))
    else:
        mask = np.zeros(flat_x.shape, dtype=bool)
    if mask.any():
        flat[mask] = _log_bessel_debye_vec(nu, flat_x[mask])
    for i in np.flatnonzero(~mask):
        flat[i] = log_bessel_i(nu, float(flat_x[i]))
    return flat.reshape(x.shape)


def log_bessel_ratio(nu: float, x_num: float, x_den: float, arg_ratio: float | None = None) -> float:
    """``ln(I_nu(x_num) / I_nu(x_den))``.

    If both arguments are 0 the ratio is taken as the limit along
    ``x_num = arg_ratio * x_den``, which is ``nu * ln(arg_ratio)``; pass
    ``arg_ratio`` for that case.
    """
    if nu < 0 or x_num < 0 or x_den < 0:
        raise DomainError("log_bessel_ratio needs nonnegative inputs")
    if x_num == 0.0 and x_den == 0.0 and arg_ratio is not None:
        return nu * math.log(arg_ratio)
    if x_num == x_den:
        return 0.0
    if x_den == 0.0:
        if nu == 0:
            return log_bessel_i(0.0, x_num)
        if x_num == 0.0:
            if arg_ratio is None:
                raise DomainError("both arguments are 0; pass arg_ratio for the limit")
            return nu * math.log(arg_ratio)
        raise DomainError("I_nu(x)/I_nu(0) diverges for nu > 0")
    return log_bessel_i(nu, x_num) - log_bessel_i(nu, x_den)


def _bessel_ratio_cf(nu: float, x: float, max_iter: int) -> float | None:
    # modified Lentz on I_{nu+1}/I_nu = 1 / (b_1 + 1 / (b_2 + ...)), b_k = 2(nu+k)/x
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    for k in range(1, max_iter + 1):
        b = 2.0 * (nu + k) / x
        a = 1.0
        d = b + a * d
        d = tiny if d == 0 else d
        c = b + a / c
        c = tiny if c == 0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            return f
    return None


def bessel_ratio_consecutive(nu: float, x: float) -> float:
    """``I_{nu+1}(x) / I_nu(x)``, always in ``(0, 1)`` for ``x > 0``."""
    if nu < 0 or not x > 0:
        raise DomainError(f"bessel_ratio_consecutive needs nu >= 0, x > 0, got ({nu!r}, {x!r})")
    if math.isinf(x):
        return 1.0
    r = _bessel_ratio_cf(nu, x, max_iter=2000)
    if r is None:
        r = math.exp(log_bessel_i(nu + 1.0, x) - log_bessel_i(nu, x))
    return r


def log_sphere_area(p: int) -> float:
    """Log surface area of the unit sphere ``S^{p-1}`` in ``R^p``."""
    if p < 1:
        raise DomainError("dimension must be >= 1")
    return math.log(2.0) + 0.5 * p * math.log(math.pi) - math.lgamma(0.5 * p)


def log_ball_volume(p: int, radius: float = 1.0) -> float:
    """Log volume of the radius-``radius`` ball in ``R^p``."""
    if p < 1 or not radius > 0:
        raise DomainError("need p >= 1 and radius > 0")
    return 0.5 * p * math.log(math.pi) + p * math.log(radius) - math.lgamma(0.5 * p + 1.0)
