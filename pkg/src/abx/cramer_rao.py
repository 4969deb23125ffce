"""Information lower bound on the variance of unbiased GTE estimators.

For a Bernoulli customer-randomized experiment, any estimator that is
unbiased for the GTE across all feasible model parameters has scaled
variance N*Var >= sigma_ub_sq, a Cramer-Rao-type bound evaluated on the
embedded (seen state, outcome) chain.  The bound needs each global arm's
value function (Poisson's equation with reward y), the arm's stationary
vector, and likelihood ratios against the experiment's stationary vector.

Note the bound's scope: it constrains estimators unbiased for all feasible
parameter values, not estimators unbiased only at one particular model.
"""

import math

import numpy as np

from .asymptotics import dm_asymptotic_variance, fundamental_solve, _check_allocation
from .model import NumericalError
from .kernels import augmented_kernel, interarrival_kernel, log_augmented_stationary


class ValueFunction:
    """Solution of Poisson's equation on one arm's embedded chain.

    v has shape (K+1, 2) indexed by (seen state, outcome); rho is the arm's
    steady-state booking rate.  The solution is centered: sum phi * v = 0.
    """

    def __init__(self, v, rho, arm):
        self.v = v
        self.rho = rho
        self.arm = arm


class CRBound:
    """sigma_ub_sq with its per-arm contributions."""

    def __init__(self, sigma_ub_sq, treatment_part, control_part, K):
        self.sigma_ub_sq = sigma_ub_sq
        self.treatment_part = treatment_part
        self.control_part = control_part
        self.K = K

    def to_dict(self):
        return {
            "sigma_ub_sq": self.sigma_ub_sq,
            "treatment_part": self.treatment_part,
            "control_part": self.control_part,
            "K": self.K,
        }


def value_function(model, z, reward=None):
    """Value function of the global arm z in {0, 1} on the embedded chain.

    Solves v = g - rho + P v with reward g(k, y) = y by default (the
    `reward` hook accepts any vector over augmented states, used in tests).
    """
    if z not in (0, 1):
        raise ValueError("value functions are defined for global arms z in {0, 1}")
    arm = "control" if z == 0 else "treatment"
    P, phi = augmented_kernel(model, arm)
    K = model.K
    if reward is None:
        g = np.zeros(2 * (K + 1))
        g[1::2] = 1.0
    else:
        g = np.asarray(reward, dtype=float)
    rho = float(phi @ g)
    v = fundamental_solve(P, phi, g - rho)
    return ValueFunction(v.reshape(K + 1, 2), rho, arm)


def value_recursion_residuals(model, z, vf=None):
    """Independent check of the value function via closed-form recursions.

    The embedded chain's structure forces explicit relations between
    neighboring value differences; returns the max absolute residual over
    all four identities.  Undefined (returns None) when some interior
    booking probability is zero.
    """
    if vf is None:
        vf = value_function(model, z)
    p = model.p0 if z == 0 else model.p1
    K, lam, tau = model.K, model.lam, model.tau_full
    if np.any(p[:K] <= 0):
        return None
    v0 = vf.v[:, 0]
    v1 = vf.v[:, 1]
    rho = vf.rho
    res = [abs((v0[K] - v0[K - 1]) - (-lam * rho / tau[K]))] if K >= 1 else []
    if K >= 1:
        res.append(abs((v0[1] - v0[0]) - (rho - p[0]) / p[0]))
    for k in range(1, K):
        lhs = v0[k + 1] - v0[k]
        rhs = (rho - p[k]) / p[k] + (tau[k] / (lam * p[k])) * (v0[k] - v0[k - 1])
        res.append(abs(lhs - rhs))
    for k in range(K):
        res.append(abs(v1[k] - (1.0 + v0[k + 1])))
    return max(res)


def cr_lower_bound(model, a):
    """Evaluate the variance lower bound sigma_ub_sq at allocation a.

    Likelihood ratios phi_z^2 / phi_a span hundreds of orders of magnitude
    at large K, so each ratio is formed in log domain and exponentiated per
    term; the outer sums use compensated (fsum) accumulation.  States with
    phi_z = 0 contribute nothing and are skipped before any division.
    """
    a = _check_allocation(a)
    K = model.K
    D = interarrival_kernel(model)
    log_phi_a = log_augmented_stationary(model, a)
    parts = {}
    for z, arm, weight in ((1, "treatment", 1.0 / a), (0, "control", 1.0 / (1.0 - a))):
        P, _ = augmented_kernel(model, arm, D)
        log_phi_z = log_augmented_stationary(model, arm)
        vf = value_function(model, z)
        vflat = vf.v.reshape(-1)
        terms = []
        for idx in range(2 * (K + 1)):
            if log_phi_z[idx] == -np.inf:
                continue
            if log_phi_a[idx] == -np.inf:
                raise NumericalError(
                    "experiment chain cannot reach a state the global arm "
                    "visits (reducible model)"
                )
            y = idx & 1
            dev = vflat - vflat[idx] + (y - vf.rho)
            inner = float(P[idx] @ dev**2)
            terms.append(math.exp(2.0 * log_phi_z[idx] - log_phi_a[idx]) * inner)
        parts[arm] = weight * math.fsum(terms)
    sigma_ub_sq = parts["treatment"] + parts["control"]
    if sigma_ub_sq < 0:  # pragma: no cover - defensive
        raise NumericalError("negative information bound")
    return CRBound(sigma_ub_sq, parts["treatment"], parts["control"], K)


class GrowthScan:
    """Per-K bounds plus the exponential-growth fit of log sigma_ub_sq vs K."""

    def __init__(self, rows, slope, intercept, r_squared):
        self.rows = rows  # list of (K, sigma_ub_sq, naive_limit)
        self.slope = slope
        self.intercept = intercept
        self.r_squared = r_squared

    def to_csv(self):
        lines = ["K,sigma_ub_sq,naive_limit"]
        for K, s, n in self.rows:
            lines.append(f"{K},{float(s)!r},{float(n)!r}")
        return "\n".join(lines) + "\n"


def growth_scan(family, K_list, a):
    """Evaluate sigma_ub_sq and naive_limit along a family of models.

    `family` maps K to a PlatformModel (e.g. a mean-field scaling).  With
    two or more K values, fits log sigma_ub_sq = intercept + slope*K by
    least squares and reports R^2.
    """
    rows = []
    for K in K_list:
        model = family(K)
        bound = cr_lower_bound(model, a)
        report = dm_asymptotic_variance(model, a)
        rows.append((int(K), bound.sigma_ub_sq, report.naive_limit))
    if len(rows) < 2:
        return GrowthScan(rows, None, None, None)
    Ks = np.array([r[0] for r in rows], dtype=float)
    logs = np.log([r[1] for r in rows])
    slope, intercept = np.polyfit(Ks, logs, 1)
    fitted = intercept + slope * Ks
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return GrowthScan(rows, float(slope), float(intercept), r_squared)
