"""Constructors for the benchmark scenarios.

* `logit_scenario`: a strictly positive treatment family where a customer's
  booking odds are proportional to remaining inventory (valuation v0, raised
  by delta under treatment, against an outside option eps_bar).
* `example_sign_inconsistent_null`: a sign-inconsistent treatment tuned, via
  a closed form, so the global treatment effect is exactly zero while the
  average direct effect is negative — the naive pipeline's false-positive
  worst case.
* `example_sign_inconsistent_alt`: a nearby configuration with a small
  positive global effect but an average direct effect of the wrong sign.
* `meanfield_family`: discretization of continuous limit profiles under the
  scaling lambda = K*lambda_bar, tau(k) = K*tau_bar(k/K), p_z(k) = pbar_z(k/K).
"""

import mpmath
import numpy as np

from .model import PlatformModel, ValidationError


def _tau_vector(K, form, tau_bar=1.0):
    if form == "linear":
        return tau_bar * np.arange(1, K + 1, dtype=float)
    if form == "constant":
        return np.full(K, float(tau_bar))
    raise ValidationError(f"unknown tau form {form!r}")


def logit_scenario(K=200, lambda_bar=1.5, tau="linear", tau_bar=1.0,
                   v0=0.5, delta=0.05, eps_bar=1.0):
    """Inventory-logit booking profiles with a uniform valuation lift delta.

    p_z(k) = (K-k) * v_z / (eps_bar + (K-k) * v_z) with v_1 = v_0 + delta;
    strictly decreasing in k and zero at k = K by construction.
    """
    if min(K, lambda_bar, v0, eps_bar) <= 0 or delta < 0:
        raise ValidationError("logit scenario parameters must be positive")
    k = np.arange(K + 1, dtype=float)
    remaining = K - k

    def profile(v):
        return remaining * v / (eps_bar + remaining * v)

    return PlatformModel(
        K=K,
        lam=K * lambda_bar,
        tau=_tau_vector(K, tau, tau_bar),
        p0=profile(v0),
        p1=profile(v0 + delta),
        strict=(delta > 0),
    )


def _pbar(K):
    """Closed-form treatment level making the null example's GTE exactly 0.

    Solves A_K * pbar^2 + pbar = B_K - 1 in 50-digit arithmetic before
    rounding (A_K and B_K saturate quickly; this keeps the root exact to
    double precision for every K).
    """
    with mpmath.workdps(50):
        A = (1 - mpmath.mpf("0.1") ** (K - 1)) / mpmath.mpf("0.9")
        B = (1 - mpmath.mpf("0.5") ** (K + 1)) / mpmath.mpf("0.5")
        pbar = (-1 + mpmath.sqrt(1 + 4 * A * (B - 1))) / (2 * A)
        return float(pbar)


def example_sign_inconsistent_null(K=100, tau="constant"):
    """Sign-inconsistent treatment with zero global effect.

    Control books at 0.5 everywhere; treatment raises the rate to pbar on
    states {0, 1} and cuts it to 0.1 elsewhere, with pbar chosen so both
    arms' steady-state booking rates coincide exactly.  lambda = 1 and
    tau(k) = 1 (the constant-rate reading is the one consistent with the
    example's closed-form steady state; tau='linear' is available for
    comparison).
    """
    if K < 3:
        raise ValidationError("the null example needs K >= 3")
    pbar = _pbar(K)
    p0 = np.full(K + 1, 0.5)
    p0[K] = 0.0
    p1 = np.full(K + 1, 0.1)
    p1[0] = p1[1] = pbar
    p1[K] = 0.0
    return PlatformModel(K=K, lam=1.0, tau=_tau_vector(K, tau, 1.0), p0=p0, p1=p1)


def example_sign_inconsistent_alt(K=30, tau="constant"):
    """Sign-inconsistent treatment with a small positive global effect."""
    p0 = np.full(K + 1, 0.5)
    p0[K] = 0.0
    p1 = np.full(K + 1, 0.0745)
    p1[0] = p1[1] = 0.62
    p1[K] = 0.0
    return PlatformModel(K=K, lam=1.0, tau=_tau_vector(K, tau, 1.0), p0=p0, p1=p1)


def meanfield_family(p0_bar, p1_bar, tau_bar, lambda_bar, K):
    """Discretize continuous limit profiles at system size K.

    Requires p0_bar < p1_bar on [0, 1), both strictly decreasing with
    pbar_z(1) = 0, and tau_bar nondecreasing with tau_bar(0) = 0 (holding
    rates start at state 1, so the zero is never used).
    """
    x = np.arange(K + 1, dtype=float) / K
    p0 = np.array([p0_bar(xi) for xi in x])
    p1 = np.array([p1_bar(xi) for xi in x])
    tau = np.array([K * tau_bar((k + 1) / K) for k in range(K)])
    if tau_bar(0.0) != 0.0:
        raise ValidationError("tau_bar(0) must be 0")
    if p0[-1] != 0.0 or p1[-1] != 0.0:
        raise ValidationError("limit profiles must vanish at x = 1")
    if np.any(p1[:-1] <= p0[:-1]):
        raise ValidationError("need p0_bar < p1_bar strictly on [0, 1)")
    return PlatformModel(K=K, lam=K * lambda_bar, tau=tau, p0=p0, p1=p1, strict=True)


def logit_limits(K, v0=0.5, delta=0.05, eps_bar=1.0):
    """Limit profiles whose meanfield discretization at size K reproduces
    logit_scenario(K, ...) exactly."""
    def make(v):
        def pbar(x):
            rem = K * (1.0 - x)
            return rem * v / (eps_bar + rem * v)
        return pbar

    return make(v0), make(v0 + delta), (lambda x: x)
