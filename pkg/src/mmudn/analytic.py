"""Closed-form and quadrature spectral-efficiency results (nats/s/Hz).

``lambda_hat`` is always a BS-to-user density ratio.  Both DL and UL share
the same analytical expressions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._validation import check_beam_width, check_path_loss_exponent, check_positive

QUAD_RTOL = 1e-6


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature misses its tolerance."""


@dataclass(frozen=True)
class SeBounds:
    lower: float
    upper: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _quad(f, a, b, *, what: str, **kw):
    kw.setdefault("epsabs", 1e-10)
    kw.setdefault("epsrel", QUAD_RTOL)
    kw.setdefault("limit", 400)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, **kw)
        except integrate.IntegrationWarning as exc:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(f, a, b, **kw)
            tol = max(kw["epsabs"], kw["epsrel"] * abs(val))
            if err > 100 * tol:
                raise QuadratureError(f"{what}: achieved error {err:.3g} > tolerance {tol:.3g} ({exc})") from None
    return val


def rho_const(alpha: float) -> float:
    """``int_0^inf du / (1 + u^(alpha/2)) = (2 pi / alpha) csc(2 pi / alpha)``."""
    alpha = check_path_loss_exponent(alpha)
    x = 2 * math.pi / alpha
    return x / math.sin(x)


def _head(a: float, k: float) -> float:
    """``int_0^a du / (1 + u^k)`` for ``a <= 1``."""
    return _quad(lambda u: 1.0 / (1.0 + u**k), 0.0, a, what="rho head")


def _tail(a: float, k: float) -> float:
    """``int_a^inf du / (1 + u^k)`` for ``a >= 1`` via ``u = 1/v``.

    The transformed integrand ``v^(k-2) / (1 + v^k)`` has an integrable
    singularity at 0 for ``k < 2``, handled through an algebraic weight.
    """
    return _quad(lambda v: 1.0 / (1.0 + v**k), 0.0, 1.0 / a, weight="alg", wvar=(k - 2.0, 0.0),
                 what="rho tail")


def rho_lower_limit(alpha: float, t: float) -> float:
    return math.expm1(t) ** (-2.0 / alpha)


def rho_t(alpha: float, t: float) -> float:
    """``int_{(e^t - 1)^(-2/alpha)}^inf du / (1 + u^(alpha/2))``."""
    alpha = check_path_loss_exponent(alpha)
    t = float(t)
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    if t > 700:
        a = 0.0
    else:
        a = rho_lower_limit(alpha, t)
    k = alpha / 2
    if a <= 1.0:
        return rho_const(alpha) - _head(a, k) if a > 0 else rho_const(alpha)
    return _tail(a, k)


def rho_t_sandwich(alpha: float, t: float) -> tuple[float, float]:
    """Lower and upper bounds on :func:`rho_t`."""
    return 1.0 / (1.0 + 2.0 / alpha) - rho_lower_limit(alpha, t), rho_const(alpha)


def _exact_integrand(t: float, lambda_hat: float, alpha: float) -> float:
    # E_R[exp(-lambda_u pi R^2 c)] with R the nearest-BS distance of a PPP of
    # density lambda equals lambda_hat / (lambda_hat + c)
    c = math.expm1(t) ** (2.0 / alpha) * rho_t(alpha, t)
    return lambda_hat / (lambda_hat + c)


def se_exact_muw(lambda_hat: float, alpha: float) -> float:
    """Ergodic SE of the interference-limited link as a quadrature over t.

    The expectation over the nearest-BS distance is taken in closed form;
    ``rho_t`` is evaluated by an inner quadrature.
    """
    lambda_hat = check_positive(lambda_hat, "lambda_hat")
    alpha = check_path_loss_exponent(alpha)
    # beyond t_tail the integrand behaves like lambda_hat/rho * e^(-2t/alpha)
    rho = rho_const(alpha)
    t_knee = (alpha / 2) * math.log1p(lambda_hat / rho)
    t_tail = t_knee + (alpha / 2) * 40.0
    f = lambda t: _exact_integrand(t, lambda_hat, alpha)  # noqa: E731
    pts = sorted({min(1.0, t_knee), t_knee, t_knee + alpha})
    edges = [0.0] + [p for p in pts if 0 < p < t_tail] + [t_tail]
    total = math.fsum(_quad(f, a, b, what="se_exact_muw") for a, b in zip(edges[:-1], edges[1:]))
    # analytic remainder of the exponential tail
    total += (alpha / 2) * f(t_tail)
    return total


def se_bounds_muw(lambda_hat: float, alpha: float) -> SeBounds:
    lambda_hat = check_positive(lambda_hat, "lambda_hat")
    alpha = check_path_loss_exponent(alpha)
    k = alpha / 2
    rho = rho_const(alpha)
    lower = math.log1p((lambda_hat / rho) ** k) - k
    upper = math.log1p(((1 + 2 / alpha) * lambda_hat) ** k) - k
    return SeBounds(max(lower, 0.0), max(upper, 0.0))


def c_l(lambda_m: float, r_los: float) -> float:
    """Probability that a PPP of density ``lambda_m`` has a point within ``r_los``."""
    lambda_m = check_positive(lambda_m, "lambda_m", allow_inf=True)
    r_los = check_positive(r_los, "r_los", allow_inf=True)
    return -math.expm1(-lambda_m * math.pi * r_los**2)


def _c_l_t(t, lambda_hat, lambda_m, alpha, theta, r_los, rho):
    x = (theta / (2 * math.pi) * math.expm1(t)) ** (2 / alpha)
    if math.isinf(r_los):
        return 1.0
    return -math.expm1(-lambda_m * math.pi * r_los**2 * (1 + rho * x / lambda_hat))


def se_bounds_mmw(lambda_hat_m: float, lambda_m: float, alpha_m: float, theta: float,
                  r_los: float) -> SeBounds:
    """Both mmW bound integrals over ``t``.

    Each integrand vanishes past an explicit cutoff where the clamped factor
    reaches zero, so the integrals run over finite intervals.
    """
    lambda_hat_m = check_positive(lambda_hat_m, "lambda_hat_m")
    lambda_m = check_positive(lambda_m, "lambda_m")
    alpha = check_path_loss_exponent(alpha_m, "alpha_m")
    theta = check_beam_width(theta)
    r_los = check_positive(r_los, "r_los", allow_inf=True)
    rho = rho_const(alpha)
    scale = theta / (2 * math.pi)

    def bound(coef):
        # integrand (1 - coef * [scale (e^t - 1)]^(2/alpha))^+ * C_L(t)
        t_cut = math.log1p(coef ** (-alpha / 2) / scale)

        def f(t):
            x = (scale * math.expm1(t)) ** (2 / alpha)
            clamp = max(0.0, 1.0 - coef * x)
            return clamp * _c_l_t(t, lambda_hat_m, lambda_m, alpha, theta, r_los, rho)

        return _quad(f, 0.0, t_cut, what="se_bounds_mmw")

    lower = bound(rho / lambda_hat_m)
    upper = bound(1.0 / ((1 + 2 / alpha) * lambda_hat_m))
    return SeBounds(lower, upper)


def se_asymptotic_muw(lambda_hat: float, alpha: float) -> float:
    if lambda_hat < 1:
        raise ValueError(f"asymptotic SE needs lambda_hat >= 1, got {lambda_hat!r}")
    alpha = check_path_loss_exponent(alpha)
    return alpha / 2 * math.log(lambda_hat)


def se_asymptotic_mmw(lambda_hat_m: float, lambda_m: float, alpha_m: float, r_los: float) -> float:
    if lambda_hat_m < 1:
        raise ValueError(f"asymptotic SE needs lambda_hat >= 1, got {lambda_hat_m!r}")
    alpha = check_path_loss_exponent(alpha_m, "alpha_m")
    return alpha / 2 * c_l(lambda_m, r_los) * math.log(lambda_hat_m)


def nats_to_bits(x):
    return np.asarray(x) / math.log(2) if np.ndim(x) else x / math.log(2)
