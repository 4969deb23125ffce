"""Asymptotics of the difference-in-means (DM) estimator under interference.

sqrt(N) * (DM estimate - ADE_a) is asymptotically normal with variance

    sigma_tilde_sq = V(0)/(1-a) + V(1)/a + 2 * cov_tail,

where V(z) is the per-arm outcome variance under the experiment steady state
and cov_tail sums the cross-customer covariance terms of the embedded chain.
The naive (i.i.d.-assuming) variance estimator instead converges to
naive_limit = V(1)/a + V(0)/(1-a), which omits cov_tail entirely.  The tail
is computed exactly with the chain's fundamental matrix.
"""

import warnings

import numpy as np
from scipy import linalg
from scipy.linalg import get_lapack_funcs

from .model import NumericalError, ValidationError, ade, gte, steady_state
from .kernels import interarrival_kernel, seen_state_kernel


class AsymptoticReport:
    """Value object bundling the DM estimator's asymptotic quantities."""

    def __init__(self, gte, ade, v0, v1, cov_tail, sigma_tilde_sq, naive_limit, a):
        self.gte = gte
        self.ade = ade
        self.v0 = v0
        self.v1 = v1
        self.cov_tail = cov_tail
        self.sigma_tilde_sq = sigma_tilde_sq
        self.naive_limit = naive_limit
        self.a = a

    def to_dict(self):
        return {
            "gte": self.gte,
            "ade": self.ade,
            "v0": self.v0,
            "v1": self.v1,
            "cov_tail": self.cov_tail,
            "sigma_tilde_sq": self.sigma_tilde_sq,
            "naive_limit": self.naive_limit,
            "a": self.a,
        }


def _check_allocation(a):
    a = float(a)
    if not 0.0 < a < 1.0:
        raise ValidationError("allocation a must lie strictly in (0, 1)")
    return a


def centered_variance(model, a, z):
    """V(z): variance of one customer's outcome given assignment z, with the
    seen state drawn from the experiment steady state pi_a."""
    a = _check_allocation(a)
    pi_a = steady_state(model, a).probs
    p = model.p0 if z == 0 else model.p1
    m = float(pi_a @ p)
    return float(pi_a @ (p * (1.0 - m) ** 2 + (1.0 - p) * m**2))


def fundamental_solve(kernel, stationary, rhs, check=True):
    """Sum of the centered power series x = sum_{j>=0} kernel^j @ rhs.

    Computed by one dense solve of (I - kernel + 1 stationary^T) x = rhs,
    valid when stationary is the kernel's stationary vector and rhs is
    stationary-centered.  Warns if the system looks ill-conditioned.
    """
    P = np.asarray(kernel, dtype=float)
    pi = np.asarray(getattr(stationary, "probs", stationary), dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if check:
        if np.max(np.abs(pi @ P - pi)) > 1e-8:
            raise ValidationError("stationary vector does not fix the kernel")
        if abs(pi @ rhs) > 1e-10:
            raise ValidationError("rhs is not centered under the stationary vector")
    A = np.eye(P.shape[0]) - P + np.outer(np.ones(P.shape[0]), pi)
    lu, piv = linalg.lu_factor(A)
    gecon = get_lapack_funcs("gecon", (A,))
    rcond, _ = gecon(lu, np.linalg.norm(A, 1))
    if rcond < 1e-12:
        warnings.warn(f"fundamental solve is ill-conditioned (rcond={rcond:.2e})")
    try:
        x = linalg.lu_solve((lu, piv), rhs)
    except linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise NumericalError("singular fundamental-matrix system") from exc
    if not np.all(np.isfinite(x)):
        raise NumericalError("singular fundamental-matrix system")
    resid = np.max(np.abs(x - P @ x + (pi @ x) * np.ones_like(x) - rhs))
    if resid > 1e-9:
        raise NumericalError(f"fundamental solve residual {resid:.2e} exceeds 1e-9")
    return x


def _post_step_measure(model, a, z, D):
    """Signed measure over the next customer's seen state, weighted by the
    current customer's centered outcome under assignment z."""
    K = model.K
    pi_a = steady_state(model, a).probs
    p = model.p0 if z == 0 else model.p1
    m = float(pi_a @ p)
    up = D[np.minimum(np.arange(K + 1) + 1, K)]
    w = (pi_a * p * (1.0 - m)) @ up + (pi_a * (1.0 - p) * (-m)) @ D
    return w, m


def cov_tail_sum(model, a):
    """Exact sum over lags j >= 2 of C_j(0,0) + C_j(1,1) - C_j(0,1) - C_j(1,0).

    C_j(z, z') is the covariance between customer 1's outcome (assigned z)
    and customer j's outcome (assigned z'), with intermediate customers
    randomized as in the experiment.  Linearity lets the four terms combine
    into (w1 - w0)^T F (r1 - r0) with F the fundamental-matrix summation;
    for an A/A model this is exactly zero.
    """
    a = _check_allocation(a)
    D = interarrival_kernel(model)
    M_a = seen_state_kernel(model, a, D)
    pi_a = steady_state(model, a).probs
    w0, m0 = _post_step_measure(model, a, 0, D)
    w1, m1 = _post_step_measure(model, a, 1, D)
    r_diff = (model.p1 - m1) - (model.p0 - m0)
    w_diff = w1 - w0
    if not np.any(w_diff) and not np.any(r_diff):
        return 0.0
    x = fundamental_solve(M_a, pi_a, r_diff)
    return float(w_diff @ x)


def cov_tail_truncated(model, a, tol=1e-10, max_lag=100000):
    """Test oracle: the same tail by direct summation over lags until the
    geometric remainder falls below tol."""
    a = _check_allocation(a)
    D = interarrival_kernel(model)
    M_a = seen_state_kernel(model, a, D)
    w0, m0 = _post_step_measure(model, a, 0, D)
    w1, m1 = _post_step_measure(model, a, 1, D)
    r = (model.p1 - m1) - (model.p0 - m0)
    w = w1 - w0
    total = 0.0
    vec = r.copy()
    for _ in range(max_lag):
        term = float(w @ vec)
        total += term
        if np.abs(vec).max() * np.abs(w).sum() < tol:
            return total
        vec = M_a @ vec
    raise NumericalError("truncated covariance sum did not converge")


def dm_asymptotic_variance(model, a):
    """Assemble the full asymptotic report for the DM estimator at allocation a."""
    a = _check_allocation(a)
    v0 = centered_variance(model, a, 0)
    v1 = centered_variance(model, a, 1)
    naive_limit = v1 / a + v0 / (1.0 - a)
    if naive_limit <= 0.0:
        raise NumericalError("degenerate outcomes: naive variance limit is zero")
    cov_tail = cov_tail_sum(model, a)
    sigma_tilde_sq = v0 / (1.0 - a) + v1 / a + 2.0 * cov_tail
    if sigma_tilde_sq <= 0.0:
        raise NumericalError("nonpositive asymptotic variance (numerical failure)")
    return AsymptoticReport(
        gte=gte(model),
        ade=ade(model, a),
        v0=v0,
        v1=v1,
        cov_tail=cov_tail,
        sigma_tilde_sq=sigma_tilde_sq,
        naive_limit=naive_limit,
        a=a,
    )
