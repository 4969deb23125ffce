import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abx.kernels import (
    augmented_kernel,
    interarrival_kernel,
    log_augmented_stationary,
    propagate_arrival_distributions,
    seen_state_kernel,
)
from abx.model import PlatformModel, ValidationError, booking_profile, steady_state

from test_model import hand_model, random_models


def test_interarrival_hand_values():
    # K = 1, lam = 2, tau = (3,): from state 1 the race gives
    # P(stay at 1) = 2/5 and P(drop to 0) = 3/5; state 0 is absorbing
    # until the arrival.
    m = PlatformModel(K=1, lam=2.0, tau=[3.0], p0=[0.5, 0.0], p1=[0.5, 0.0])
    D = interarrival_kernel(m)
    np.testing.assert_allclose(D, [[1.0, 0.0], [0.6, 0.4]], atol=1e-15)


def test_interarrival_is_lower_triangular_stochastic():
    D = interarrival_kernel(hand_model())
    assert np.allclose(D.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(np.triu(D, 1) == 0.0)


@settings(max_examples=30, deadline=None)
@given(random_models())
def test_interarrival_rows_stochastic(model):
    D = interarrival_kernel(model)
    assert np.max(np.abs(D.sum(axis=1) - 1.0)) <= 1e-12
    assert np.all(D >= 0.0)


@settings(max_examples=30, deadline=None)
@given(random_models(), st.sampled_from(["control", "treatment", 0.5]))
def test_pasta_fixed_point(model, arm):
    # The distribution of the state each arriving customer sees is the
    # continuous-time steady state.
    M = seen_state_kernel(model, arm)
    pi = steady_state(model, arm).probs
    assert np.max(np.abs(pi @ M - pi)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(random_models(), st.sampled_from(["control", "treatment", 0.3]))
def test_augmented_kernel_stationary(model, arm):
    P, phi = augmented_kernel(model, arm)
    assert np.max(np.abs(P.sum(axis=1) - 1.0)) <= 1e-12
    assert np.max(np.abs(phi @ P - phi)) <= 1e-10
    assert phi.sum() == pytest.approx(1.0, abs=1e-12)
    # phi marginalizes to the seen-state steady state and conditions on the
    # booking probability.
    pi = steady_state(model, arm).probs
    q = booking_profile(model, arm)
    np.testing.assert_allclose(phi[0::2] + phi[1::2], pi, atol=1e-14)
    np.testing.assert_allclose(phi[1::2], pi * q, atol=1e-14)


def test_log_augmented_stationary_matches():
    m = hand_model()
    _, phi = augmented_kernel(m, 0.5)
    log_phi = log_augmented_stationary(m, 0.5)
    np.testing.assert_allclose(np.exp(log_phi), phi, atol=1e-14)


def test_augmented_outcome_indexing():
    # Destination outcome y' is drawn with the arriving customer's own
    # booking probability q(k'): P[(k,y) -> (k',1)] = D-row * q(k').
    m = hand_model()
    D = interarrival_kernel(m)
    P, _ = augmented_kernel(m, "treatment")
    q = m.p1
    for k in range(m.K + 1):
        for y in (0, 1):
            row = D[min(k + y, m.K)]
            np.testing.assert_allclose(P[2 * k + y, 1::2], row * q, atol=1e-15)
            np.testing.assert_allclose(P[2 * k + y, 0::2], row * (1 - q), atol=1e-15)


def test_propagation_stationary_under_constant_arm():
    m = hand_model()
    pi0 = steady_state(m, "control")
    nus = propagate_arrival_distributions(m, np.zeros(6, dtype=int), pi0)
    assert len(nus) == 6
    for nu in nus:
        np.testing.assert_allclose(nu.probs, pi0.probs, atol=1e-12)


def test_propagation_moves_mass_up_under_treatment():
    m = hand_model()
    pi0 = steady_state(m, "control")
    nus = propagate_arrival_distributions(m, np.ones(8, dtype=int), pi0)
    # All-treatment assignments drive the seen-state distribution toward the
    # treatment steady state, which dominates the control one.
    assert nus[-1].dominates(pi0)


def test_propagation_rejects_empty():
    with pytest.raises(ValidationError):
        propagate_arrival_distributions(hand_model(), [], steady_state(hand_model(), 0.5))
