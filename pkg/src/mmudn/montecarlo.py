"""Monte Carlo estimation of ergodic SE at the probe user.

Realization ``i`` of an experiment draws everything (points, schedule,
fades) from its own substream ``substream(seed, i)``, so results do not
depend on evaluation order or on how realizations are split across workers.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import analytic
from .channel import ALL_LINKS, SIR_FUNCTIONS, ChannelConfig, Link
from .geometry import DensityConfig, Window, default_window, sample_deployment, substream

logger = logging.getLogger(__name__)

DEFAULT_CAP_NATS = 50.0
MIN_EXPECTED_BS = 10


@dataclass(frozen=True)
class SeEstimate:
    link: Link
    mean: float
    stderr: float
    n_samples: int
    n_zero_samples: int = 0
    n_capped: int = 0


@dataclass(frozen=True)
class ExperimentPlan:
    densities: DensityConfig
    channel: ChannelConfig
    n_realizations: int = 10_000
    seed: int = 0
    links: tuple = ALL_LINKS
    window: Window | None = None
    cap_nats: float = DEFAULT_CAP_NATS

    def __post_init__(self):
        if int(self.n_realizations) < 1:
            raise ValueError("n_realizations must be >= 1")
        object.__setattr__(self, "links", tuple(Link(x) for x in self.links))
        if not self.links:
            raise ValueError("no links requested")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def resolved_window(self) -> Window:
        return self.window if self.window is not None else default_window(self.densities)


@dataclass
class _Accumulator:
    values: list = field(default_factory=list)
    zeros: int = 0
    capped: int = 0

    def add(self, sir: float, cap: float):
        if math.isinf(sir):
            self.capped += 1
            v = cap
        else:
            v = min(math.log1p(sir), cap)
            if v == cap:
                self.capped += 1
        if sir == 0.0:
            self.zeros += 1
        self.values.append(v)


def _summary(link: Link, acc: _Accumulator) -> SeEstimate:
    n = len(acc.values)
    if n == 0:
        raise RuntimeError(f"no SE samples collected for {link.value}")
    mean = math.fsum(acc.values) / n
    if n > 1:
        var = math.fsum((v - mean) ** 2 for v in acc.values) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = 0.0
    return SeEstimate(link, mean, stderr, n, acc.zeros, acc.capped)


def window_warnings(plan: ExperimentPlan) -> list[str]:
    w = plan.resolved_window
    out = []
    for name in ("lambda_m", "lambda_mu", "lambda_u"):
        expected = getattr(plan.densities, name) * w.area
        if expected < MIN_EXPECTED_BS:
            out.append(f"window too small: expected {expected:.3g} points for {name} (< {MIN_EXPECTED_BS})")
    return out


def sample_realization(plan: ExperimentPlan, index: int) -> dict[Link, float]:
    """Raw SIR per requested link for realization ``index``."""
    rng = substream(plan.seed, index)
    tiers = {link.tier for link in plan.links}
    dep = sample_deployment(plan.densities, plan.resolved_window, rng, tiers=tiers)
    return {link: SIR_FUNCTIONS[link](dep, plan.channel, rng).value for link in plan.links}


def _run_chunk(plan: ExperimentPlan, start: int, stop: int) -> list[dict[Link, float]]:
    return [sample_realization(plan, i) for i in range(start, stop)]


def estimate_se(plan: ExperimentPlan, *, n_jobs: int = 1, warnings_out: list | None = None) -> dict[Link, SeEstimate]:
    """Mean ``ln(1 + SIR)`` per link with its standard error.

    Infinite (or very large) SIRs are capped at ``plan.cap_nats`` and
    counted; mmW samples with a blocked serving link are counted as zeros.
    ``n_jobs`` spreads realizations over joblib workers; the output is the
    same for any value.
    """
    for msg in window_warnings(plan):
        logger.warning(msg)
        if warnings_out is not None:
            warnings_out.append(msg)
    n = int(plan.n_realizations)
    if n_jobs == 1:
        samples = _run_chunk(plan, 0, n)
    else:
        from joblib import Parallel, delayed, effective_n_jobs

        n_chunks = max(1, min(n, 4 * effective_n_jobs(n_jobs)))
        edges = np.linspace(0, n, n_chunks + 1).astype(int)
        parts = Parallel(n_jobs=n_jobs)(delayed(_run_chunk)(plan, a, b) for a, b in zip(edges[:-1], edges[1:]))
        samples = [s for part in parts for s in part]
    accs = {link: _Accumulator() for link in plan.links}
    for sample in samples:
        for link, sir in sample.items():
            accs[link].add(sir, plan.cap_nats)
    return {link: _summary(link, accs[link]) for link in plan.links}


def analytic_columns(link: Link, densities: DensityConfig, channel: ChannelConfig) -> dict:
    """Bounds and asymptote matching a Monte Carlo row."""
    if link.tier == "muw":
        lh = densities.lambda_hat_mu
        b = analytic.se_bounds_muw(lh, channel.alpha_mu)
        asym = analytic.se_asymptotic_muw(lh, channel.alpha_mu) if lh >= 1 else math.nan
    else:
        lh = densities.lambda_hat_m
        b = analytic.se_bounds_mmw(lh, densities.lambda_m, channel.alpha_m, channel.theta, channel.los.r_los)
        asym = (analytic.se_asymptotic_mmw(lh, densities.lambda_m, channel.alpha_m, channel.los.r_los)
                if lh >= 1 else math.nan)
    return {"lower_bound": b.lower, "upper_bound": b.upper, "asymptote": asym}


SWEEP_COLUMNS = ("lambda_hat", "link", "mean_nats", "stderr", "lower_bound", "upper_bound",
                 "asymptote", "n", "n_zero", "n_capped")


def convergence_sweep(base: ExperimentPlan, lambda_hats) -> list[dict]:
    """Run :func:`estimate_se` with both BS densities set to ``lambda_hat * lambda_u``.

    One row per (lambda_hat, link), in input order.
    """
    lambda_hats = [float(x) for x in lambda_hats]
    if not lambda_hats:
        raise ValueError("empty lambda_hat list")
    if any(x <= 0 for x in lambda_hats):
        raise ValueError("lambda_hat values must be positive")
    if any(b <= a for a, b in zip(lambda_hats, lambda_hats[1:])):
        raise ValueError("lambda_hat list must be strictly increasing")
    rows = []
    for lh in lambda_hats:
        dens = DensityConfig.from_ratios(lh, lh, base.densities.lambda_u)
        plan = ExperimentPlan(dens, base.channel, base.n_realizations, base.seed, base.links, base.window,
                              base.cap_nats)
        est = estimate_se(plan)
        for link in base.links:
            e = est[link]
            rows.append({"lambda_hat": lh, "link": link.value, "mean_nats": e.mean, "stderr": e.stderr,
                         **analytic_columns(link, dens, base.channel),
                         "n": e.n_samples, "n_zero": e.n_zero_samples, "n_capped": e.n_capped})
    return rows


def rows_to_csv(rows, columns=SWEEP_COLUMNS, header: str = "") -> str:
    buf = io.StringIO()
    for line in header.splitlines():
        buf.write(f"# {line}\n")
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
    return buf.getvalue()


class SpectralEfficiencyModel(TransformerMixin, BaseEstimator):
    """Map density ratios to the four link SEs.

    ``transform(X)`` takes rows ``[lambda_hat_m, lambda_hat_mu]`` and returns
    SEs in nats/s/Hz with columns ordered as :data:`ALL_LINKS`.  ``method``
    picks the source: ``"asymptotic"``, ``"bounds"`` (midpoint), ``"exact"``
    (microwave quadrature; mmW falls back to the bound midpoint) or
    ``"montecarlo"``.
    """

    def __init__(self, method="asymptotic", lambda_u=1e-4, alpha_m=4.0, alpha_mu=4.0, theta=2 * math.pi,
                 r_los=100.0, n_realizations=1000, random_state=0):
        self.method = method
        self.lambda_u = lambda_u
        self.alpha_m = alpha_m
        self.alpha_mu = alpha_mu
        self.theta = theta
        self.r_los = r_los
        self.n_realizations = n_realizations
        self.random_state = random_state

    def fit(self, X=None, y=None):
        if self.method not in ("asymptotic", "bounds", "exact", "montecarlo"):
            raise ValueError(f"unknown method {self.method!r}")
        from .blockage import LosModel

        self.channel_ = ChannelConfig(self.alpha_m, self.alpha_mu, self.theta, 0.0, LosModel(self.r_los))
        if X is not None:
            self.n_features_in_ = check_array(X).shape[1]
        return self

    def _row(self, lh_m: float, lh_mu: float) -> list[float]:
        dens = DensityConfig.from_ratios(lh_m, lh_mu, self.lambda_u)
        ch = self.channel_
        if self.method == "montecarlo":
            plan = ExperimentPlan(dens, ch, self.n_realizations, int(self.random_state))
            est = estimate_se(plan)
            return [est[link].mean for link in ALL_LINKS]
        if self.method == "asymptotic":
            g_m = analytic.se_asymptotic_mmw(lh_m, dens.lambda_m, ch.alpha_m, ch.los.r_los)
            g_mu = analytic.se_asymptotic_muw(lh_mu, ch.alpha_mu)
        else:
            g_m = analytic.se_bounds_mmw(lh_m, dens.lambda_m, ch.alpha_m, ch.theta, ch.los.r_los).midpoint
            if self.method == "exact":
                g_mu = analytic.se_exact_muw(lh_mu, ch.alpha_mu)
            else:
                g_mu = analytic.se_bounds_muw(lh_mu, ch.alpha_mu).midpoint
        return [g_m, g_m, g_mu, g_mu]

    def transform(self, X):
        check_is_fitted(self, "channel_")
        X = check_array(np.atleast_2d(X))
        if X.shape[1] != 2:
            raise ValueError("rows must be [lambda_hat_m, lambda_hat_mu]")
        return np.array([self._row(float(a), float(b)) for a, b in X])
