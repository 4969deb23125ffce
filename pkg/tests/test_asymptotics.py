import numpy as np
import pytest
from hypothesis import given, settings

from abx.asymptotics import (
    AsymptoticReport,
    centered_variance,
    cov_tail_sum,
    cov_tail_truncated,
    dm_asymptotic_variance,
    fundamental_solve,
)
from abx.kernels import interarrival_kernel, seen_state_kernel
from abx.model import NumericalError, ValidationError, steady_state
from abx.scenarios import (
    example_sign_inconsistent_alt,
    example_sign_inconsistent_null,
    logit_scenario,
)

from test_model import hand_model, random_models


def test_fundamental_solve_against_series():
    # Independent oracle: sum the centered power series directly.
    m = hand_model()
    P = seen_state_kernel(m, 0.5)
    pi = steady_state(m, 0.5).probs
    rhs = np.array([1.0, -0.5, 0.0])
    rhs = rhs - (pi @ rhs)
    series = np.zeros_like(rhs)
    vec = rhs.copy()
    for _ in range(4000):
        series += vec
        vec = P @ vec
    x = fundamental_solve(P, pi, rhs)
    np.testing.assert_allclose(x, series, atol=1e-10)


def test_fundamental_solve_preconditions():
    m = hand_model()
    P = seen_state_kernel(m, 0.5)
    pi = steady_state(m, 0.5).probs
    with pytest.raises(ValidationError):
        fundamental_solve(P, np.array([0.4, 0.4, 0.2]), np.zeros(3))
    with pytest.raises(ValidationError):
        fundamental_solve(P, pi, np.ones(3))  # not centered


def test_centered_variance_direct():
    m = hand_model()
    pi_a = steady_state(m, 0.5).probs
    for z, p in ((0, m.p0), (1, m.p1)):
        mean = pi_a @ p
        # E[(Y - m)^2] with Y | state Bernoulli(p(state)).
        direct = pi_a @ (p * (1 - mean) ** 2 + (1 - p) * mean**2)
        assert centered_variance(m, 0.5, z) == pytest.approx(direct, abs=1e-15)


@pytest.mark.parametrize("make", [
    lambda: logit_scenario(K=50),
    example_sign_inconsistent_null,
    example_sign_inconsistent_alt,
])
def test_cov_tail_fundamental_vs_truncated(make):
    m = make()
    assert abs(cov_tail_sum(m, 0.5) - cov_tail_truncated(m, 0.5)) <= 1e-8


def test_cov_tail_aa_is_exactly_zero():
    assert cov_tail_sum(logit_scenario(K=40).aa_version(), 0.5) == 0.0


@settings(max_examples=15, deadline=None)
@given(random_models())
def test_cov_tail_truncation_agreement_property(model):
    assert abs(cov_tail_sum(model, 0.5) - cov_tail_truncated(model, 0.5)) <= 1e-8


def test_report_fields_and_identity():
    m = hand_model()
    rep = dm_asymptotic_variance(m, 0.4)
    d = rep.to_dict()
    assert list(d) == ["gte", "ade", "v0", "v1", "cov_tail",
                       "sigma_tilde_sq", "naive_limit", "a"]
    assert d["naive_limit"] == pytest.approx(rep.v1 / 0.4 + rep.v0 / 0.6)
    assert d["sigma_tilde_sq"] == pytest.approx(
        rep.v0 / 0.6 + rep.v1 / 0.4 + 2 * rep.cov_tail)


@settings(max_examples=15, deadline=None)
@given(random_models())
def test_naive_limit_universal_bound(model):
    # V(0), V(1) <= 1/4 for Bernoulli outcomes, so the naive limit cannot
    # exceed (1/a + 1/(1-a))/4.
    rep = dm_asymptotic_variance(model, 0.5)
    assert rep.naive_limit <= (1 / 0.5 + 1 / 0.5) / 4 + 1e-12
    assert rep.v0 <= 0.25 + 1e-12 and rep.v1 <= 0.25 + 1e-12


def test_allocation_bounds():
    m = hand_model()
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ValidationError):
            dm_asymptotic_variance(m, bad)


def test_degenerate_outcomes_raise():
    m = hand_model()
    dead = type(m)(m.K, m.lam, m.tau, np.zeros(m.K + 1), np.zeros(m.K + 1))
    with pytest.raises(NumericalError):
        dm_asymptotic_variance(dead, 0.5)


def test_cov_tail_matches_lag_expansion_small_model():
    # Fully independent lag-by-lag oracle on the hand model: covariance of
    # customer 1 (arm z) and customer j (arm z'), intermediate customers
    # mixed, combined with DM estimator signs.
    m = hand_model()
    a = 0.5
    D = interarrival_kernel(m)
    M_a = seen_state_kernel(m, a, D)
    pi_a = steady_state(m, a).probs
    p = {0: m.p0, 1: m.p1}
    mean = {z: float(pi_a @ p[z]) for z in (0, 1)}
    up = D[np.minimum(np.arange(m.K + 1) + 1, m.K)]

    def cov_at_lag(z, zp, lag):
        # E[(Y_1 - m_z)(Y_lag - m_zp)] starting from stationarity.
        w = (pi_a * p[z] * (1 - mean[z])) @ up + (pi_a * (1 - p[z]) * (-mean[z])) @ D
        vec = w.copy()
        for _ in range(lag - 2):
            vec = vec @ M_a
        return float(vec @ (p[zp] - mean[zp]))

    total = 0.0
    for lag in range(2, 400):
        total += (cov_at_lag(1, 1, lag) + cov_at_lag(0, 0, lag)
                  - cov_at_lag(0, 1, lag) - cov_at_lag(1, 0, lag))
    assert cov_tail_sum(m, a) == pytest.approx(total, abs=1e-12)
