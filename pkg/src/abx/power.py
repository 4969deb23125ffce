"""Analytic false-positive / power calculations for both decision pipelines.

The naive pipeline runs the usual two-sample t-test on the DM estimator.
Asymptotically its statistic is Normal with

    mean = sqrt(N) * ADE_a / sqrt(naive_limit),
    sd   = sigma_tilde_a / sqrt(naive_limit),

composing the estimator's CLT (numerator) with the probability limit of the
naive variance estimator (denominator).  The unbiased pipeline assumes an
efficient unbiased GTE estimator at the information bound sigma_UB, whose
standardized statistic is exactly Normal(sqrt(N)*GTE/sigma_UB, 1).
"""

import math

import numpy as np
from scipy.stats import norm

from .asymptotics import dm_asymptotic_variance
from .cramer_rao import cr_lower_bound
from .model import NumericalError, ValidationError

_FNP_FLOOR = 1e-300  # keeps log10 finite when a tail probability underflows


def normal_quantile(q):
    """Upper quantile of the standard normal: P(W >= normal_quantile(q)) = q."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValidationError("quantile level must lie in (0, 1)")
    return float(norm.isf(q))


def _two_sided_reject_prob(mean, sd, alpha):
    c = normal_quantile(alpha / 2.0)
    return float(norm.sf((c - mean) / sd) + norm.cdf((-c - mean) / sd))


def _naive_power_from_report(report, N, alpha):
    if report.naive_limit <= 0:
        raise NumericalError("degenerate naive variance limit")
    scale = math.sqrt(report.naive_limit)
    mean = math.sqrt(N) * report.ade / scale
    sd = math.sqrt(report.sigma_tilde_sq) / scale
    return _two_sided_reject_prob(mean, sd, alpha)


def naive_test_power(model, a, N, alpha=0.05, report=None):
    """Probability that the naive t-test rejects at sample size N.

    Equals the false positive probability when the model's GTE is zero and
    the power otherwise.  Pass a precomputed AsymptoticReport to amortize
    grid evaluations.
    """
    if report is None:
        report = dm_asymptotic_variance(model, a)
    return _naive_power_from_report(report, N, alpha)


def _unbiased_power_from_parts(gte_value, sigma_ub, N, alpha):
    shift = math.sqrt(N) * gte_value / sigma_ub
    return _two_sided_reject_prob(shift, 1.0, alpha)


def unbiased_test_power(model, a, N, alpha=0.05, bound=None, gte_value=None):
    """Rejection probability of an efficient unbiased pipeline at size N."""
    if bound is None:
        bound = cr_lower_bound(model, a)
    if gte_value is None:
        from .model import gte
        gte_value = gte(model)
    return _unbiased_power_from_parts(gte_value, math.sqrt(bound.sigma_ub_sq), N, alpha)


class PowerCurve:
    """Grid of N against a metric for both pipelines.

    mode 'power' stores rejection probabilities; mode 'fnp' stores
    log10 of the false negative probability (1 - power).
    """

    def __init__(self, rows, alpha, scenario_id, mode):
        if mode not in ("fnp", "power"):
            raise ValidationError("mode must be 'fnp' or 'power'")
        self.rows = rows  # list of (N, metric_naive, metric_unbiased)
        self.alpha = alpha
        self.scenario_id = scenario_id
        self.mode = mode

    def to_csv(self):
        lines = ["N,metric_naive,metric_unbiased,mode"]
        for N, mn, mu in self.rows:
            lines.append(f"{N},{mn!r},{mu!r},{self.mode}")
        return "\n".join(lines) + "\n"


def power_curves(model, a, N_grid, alpha=0.05, scenario_id=""):
    """Analytic rejection probability of both pipelines over an N grid."""
    N_grid = list(N_grid)
    if not N_grid:
        raise ValidationError("N grid must be nonempty")
    report = dm_asymptotic_variance(model, a)
    bound = cr_lower_bound(model, a)
    sigma_ub = math.sqrt(bound.sigma_ub_sq)
    rows = []
    for N in N_grid:
        rows.append((
            int(N),
            _naive_power_from_report(report, N, alpha),
            _unbiased_power_from_parts(report.gte, sigma_ub, N, alpha),
        ))
    return PowerCurve(rows, alpha, scenario_id, "power")


def fnp_curves(model, a, N_grid, alpha=0.05, scenario_id=""):
    """log10 false-negative probability of both pipelines over an N grid."""
    N_grid = list(N_grid)
    if not N_grid or np.any(np.diff(N_grid) <= 0):
        raise ValidationError("N grid must be nonempty and increasing")
    pc = power_curves(model, a, N_grid, alpha, scenario_id)
    rows = [
        (N, math.log10(max(1.0 - pn, _FNP_FLOOR)), math.log10(max(1.0 - pu, _FNP_FLOOR)))
        for N, pn, pu in pc.rows
    ]
    return PowerCurve(rows, alpha, scenario_id, "fnp")
