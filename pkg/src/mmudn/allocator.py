"""Microwave UL/DL split that maximizes DL rate under a minimum UL/DL ratio.

The mmW UL bandwidth is capped by the PAPR outage constraint.  Given that
cap, the DL rate falls and the UL rate rises linearly in the microwave UL
bandwidth, so the optimum is the smallest allocation meeting the ratio.

``delta`` is a linear power ratio throughout; use :func:`db_to_linear` for
thresholds quoted in dB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import analytic
from ._validation import check_open_unit, check_positive

CP_VARIANTS = ("inversion", "log-epsilon")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SpectrumConfig:
    w_mu: float
    w_m: float
    f_s: float = 244.14e3
    delta: float = db_to_linear(7.0)
    epsilon: float = 0.7
    zeta: float = 0.2

    def __post_init__(self):
        for name in ("w_mu", "w_m", "f_s", "delta"):
            check_positive(getattr(self, name), name)
        check_open_unit(self.epsilon, "epsilon")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError(f"zeta must lie in [0, 1], got {self.zeta!r}")


@dataclass(frozen=True)
class AllocationResult:
    w_mu_ul: float
    w_m_ul: float
    rate_dl: float
    rate_ul: float
    clamped: bool = False
    feasible: bool = True
    binding: dict = field(default_factory=dict)
    cp_variant: str = "inversion"

    @property
    def ratio(self) -> float:
        return self.rate_ul / self.rate_dl if self.rate_dl > 0 else math.inf


@dataclass(frozen=True)
class SpectralEfficiencies:
    """Per-link SEs in nats/s/Hz."""

    mu_dl: float
    mu_ul: float
    m_dl: float
    m_ul: float

    def __post_init__(self):
        for name in ("mu_dl", "mu_ul", "m_dl", "m_ul"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"SE {name} must be finite and non-negative, got {v!r}")

    @classmethod
    def asymptotic(cls, lambda_hat_m, lambda_hat_mu, lambda_m, alpha_m, alpha_mu, r_los) -> "SpectralEfficiencies":
        g_mu = analytic.se_asymptotic_muw(lambda_hat_mu, alpha_mu)
        g_m = analytic.se_asymptotic_mmw(lambda_hat_m, lambda_m, alpha_m, r_los)
        return cls(g_mu, g_mu, g_m, g_m)


def papr_outage(w_m_ul: float, f_s: float, delta: float) -> float:
    """Approximate ``Pr(PAPR > delta)`` for an OFDM UL of bandwidth ``w_m_ul``."""
    n = w_m_ul * math.exp(-delta) / f_s
    return -math.expm1(-n * math.sqrt(math.pi * delta / 3.0))


def papr_inversion(f_s: float, delta: float, epsilon: float) -> float:
    """Bandwidth at which :func:`papr_outage` equals ``epsilon``."""
    return f_s * math.exp(delta) * math.sqrt(3.0 / (math.pi * delta)) * -math.log1p(-epsilon)


def cp_log_epsilon(f_s: float, delta: float, epsilon: float) -> float:
    """The constant ``sqrt(3) f_s e^delta (pi delta)^(-1/2) / log(1/epsilon)``.

    It does not equal :func:`papr_inversion` (which carries ``log 1/(1-eps)``
    instead); both are kept so either can drive the allocation.
    """
    return math.sqrt(3.0) * f_s * math.exp(delta) / math.sqrt(math.pi * delta) / -math.log(epsilon)


def max_w_m_ul(spec: SpectrumConfig, variant: str = "inversion") -> tuple[float, bool]:
    """Largest mmW UL bandwidth meeting the PAPR outage target.

    Returns ``(bandwidth, clamped)`` where ``clamped`` says the PAPR limit
    exceeded the total mmW band ``w_m``.
    """
    if variant == "inversion":
        w = papr_inversion(spec.f_s, spec.delta, spec.epsilon)
    elif variant == "log-epsilon":
        w = cp_log_epsilon(spec.f_s, spec.delta, spec.epsilon)
    else:
        raise ValueError(f"unknown C_P variant {variant!r}; choose from {CP_VARIANTS}")
    if w > spec.w_m:
        return spec.w_m, True
    return w, False


def rates(w_mu_ul: float, w_m_ul: float, se: SpectralEfficiencies, spec: SpectrumConfig) -> tuple[float, float]:
    """``(rate_dl, rate_ul)`` in nats/s for the given UL bandwidths."""
    tol = 1e-9 * max(spec.w_mu, spec.w_m)
    if not (-tol <= w_mu_ul <= spec.w_mu + tol and -tol <= w_m_ul <= spec.w_m + tol):
        raise ValueError("UL bandwidths exceed the available spectrum")
    rate_ul = w_mu_ul * se.mu_ul + w_m_ul * se.m_ul
    rate_dl = (spec.w_mu - w_mu_ul) * se.mu_dl + (spec.w_m - w_m_ul) * se.m_dl
    return rate_dl, rate_ul


def closed_form_w_mu_ul(spec: SpectrumConfig, gamma_m: float, gamma_mu: float, cp: float) -> float:
    """Unclamped optimal microwave UL bandwidth with DL/UL SEs equal per tier."""
    share = spec.zeta / (1.0 + spec.zeta)
    return spec.w_mu * share + (spec.w_m * share - cp) * gamma_m / gamma_mu


def max_dl_rate_closed_form(spec: SpectrumConfig, lambda_hat_m, lambda_hat_mu, alpha_m, alpha_mu, c_l) -> float:
    """Maximum DL rate with the ratio constraint active (asymptotic SEs)."""
    log_term = (alpha_m * c_l * spec.w_m * math.log(lambda_hat_m)
                + alpha_mu * spec.w_mu * math.log(lambda_hat_mu))
    return log_term / (2.0 * (1.0 + spec.zeta))


def _result(spec, se, w_mu_ul, w_m_ul, *, clamped, variant, papr_clamped) -> AllocationResult:
    rate_dl, rate_ul = rates(w_mu_ul, w_m_ul, se, spec)
    need = spec.zeta * rate_dl
    feasible = rate_ul >= need - 1e-9 * max(abs(need), 1.0)
    binding = {
        "ratio": bool(np.isclose(rate_ul, need, rtol=1e-9, atol=0.0)) and not clamped,
        "papr": not papr_clamped,
        "w_mu_ul_upper": w_mu_ul >= spec.w_mu,
        "w_mu_ul_lower": w_mu_ul <= 0.0,
    }
    return AllocationResult(w_mu_ul, w_m_ul, rate_dl, rate_ul, clamped=clamped, feasible=feasible,
                            binding=binding, cp_variant=variant)


def optimize_closed_form(spec: SpectrumConfig, lambda_hat_m: float, lambda_hat_mu: float,
                         lambda_m: float, alpha_m: float, alpha_mu: float, r_los: float,
                         variant: str = "inversion") -> AllocationResult:
    """Closed-form allocation using the asymptotic (large density ratio) SEs.

    The result is clamped into ``[0, w_mu]``; rates are recomputed from the
    clamped allocation so ``ratio`` reports what is actually achieved.
    """
    if lambda_hat_m <= 1 or lambda_hat_mu <= 1:
        raise ValueError("closed form needs density ratios > 1")
    se = SpectralEfficiencies.asymptotic(lambda_hat_m, lambda_hat_mu, lambda_m, alpha_m, alpha_mu, r_los)
    w_m_ul, papr_clamped = max_w_m_ul(spec, variant)
    cp = w_m_ul
    w = closed_form_w_mu_ul(spec, se.m_dl, se.mu_dl, cp)
    clamped = not 0.0 <= w <= spec.w_mu
    w = min(max(w, 0.0), spec.w_mu)
    return _result(spec, se, w, w_m_ul, clamped=clamped, variant=variant, papr_clamped=papr_clamped)


def optimize_numeric(spec: SpectrumConfig, se: SpectralEfficiencies, variant: str = "inversion") -> AllocationResult:
    """Smallest ``w_mu_ul`` in ``[0, w_mu]`` meeting ``R_u >= zeta R_d``.

    ``R_u - zeta R_d`` is affine in ``w_mu_ul``; its root is bracketed and
    found by bisection, so no per-tier DL/UL equality is assumed.  Returns
    ``feasible=False`` (at ``w_mu_ul = w_mu``) when even the full microwave
    band cannot meet the ratio.
    """
    w_m_ul, papr_clamped = max_w_m_ul(spec, variant)

    def slack(w):
        rd, ru = rates(w, w_m_ul, se, spec)
        return ru - spec.zeta * rd

    lo, hi = 0.0, spec.w_mu
    if slack(lo) >= 0:
        return _result(spec, se, 0.0, w_m_ul, clamped=False, variant=variant, papr_clamped=papr_clamped)
    if slack(hi) < 0:
        return _result(spec, se, hi, w_m_ul, clamped=True, variant=variant, papr_clamped=papr_clamped)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if slack(mid) >= 0:
            hi = mid
        else:
            lo = mid
    # final secant step on the affine slack removes the bisection residue
    s_lo, s_hi = slack(lo), slack(hi)
    w = hi if s_hi == s_lo else min(max(lo - s_lo * (hi - lo) / (s_hi - s_lo), lo), hi)
    return _result(spec, se, w, w_m_ul, clamped=False, variant=variant, papr_clamped=papr_clamped)


class UplinkAllocator(BaseEstimator):
    """Estimator wrapper: ``fit`` on four SEs, ``predict`` the microwave UL share.

    ``fit(X)`` takes ``[mu_dl, mu_ul, m_dl, m_ul]`` (shape ``(4,)`` or
    ``(1, 4)``).  ``predict(X)`` takes rows ``[w_m, zeta]`` and returns the
    optimal ``w_mu_ul`` per row; ``allocate`` returns full results.
    """

    def __init__(self, w_mu=20e6, f_s=244.14e3, delta=db_to_linear(7.0), epsilon=0.7, cp_variant="inversion"):
        self.w_mu = w_mu
        self.f_s = f_s
        self.delta = delta
        self.epsilon = epsilon
        self.cp_variant = cp_variant

    def fit(self, X, y=None):
        X = check_array(np.atleast_2d(X), ensure_all_finite=True)
        if X.shape != (1, 4):
            raise ValueError(f"expected four SE values, got shape {X.shape}")
        self.se_ = SpectralEfficiencies(*map(float, X[0]))
        return self

    def allocate(self, X) -> list[AllocationResult]:
        check_is_fitted(self, "se_")
        X = check_array(np.atleast_2d(X))
        if X.shape[1] != 2:
            raise ValueError("rows must be [w_m, zeta]")
        base = SpectrumConfig(self.w_mu, float(X[0, 0]), self.f_s, self.delta, self.epsilon, float(X[0, 1]))
        return [optimize_numeric(replace(base, w_m=float(w_m), zeta=float(z)), self.se_, self.cp_variant)
                for w_m, z in X]

    def predict(self, X):
        return np.array([r.w_mu_ul for r in self.allocate(X)])
