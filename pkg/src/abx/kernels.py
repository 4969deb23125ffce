"""Discrete-time kernels of the states seen by successive arriving customers.

Between two Poisson arrivals the booked count can only fall, through a race
of exponential departures against the next arrival.  Conditioning on the
state just after a customer's booking decision gives a lower-triangular
"interarrival" kernel; composing it with the booking step gives the
seen-state kernel M_z whose stationary vector is the arm's steady state
(PASTA).  Augmenting the state with the booking outcome yields the embedded
chain used for value functions and the information bound.
"""

import numpy as np

from .model import Distribution, ValidationError, booking_profile, log_steady_state


def interarrival_kernel(model):
    """Matrix D with D[m, k'] = P(next customer sees k' | state m now).

    D[m, k'] = [prod_{kappa=k'+1..m} tau(kappa)/(lam+tau(kappa))] *
               lam/(lam+tau(k'))      for k' <= m, else 0,
    with tau(0) = 0 so the k'=0 entry ends with factor 1.  Rows are
    stochastic by a telescoping identity.
    """
    K, lam = model.K, model.lam
    tau = model.tau_full
    D = np.zeros((K + 1, K + 1))
    for m in range(K + 1):
        prod = 1.0
        for k in range(m, -1, -1):
            D[m, k] = prod * lam / (lam + tau[k])
            prod *= tau[k] / (lam + tau[k])
    return D


def seen_state_kernel(model, arm, D=None):
    """One customer-to-next transition matrix of the seen state.

    Row k mixes "booked" (descend from min(k+1, K)) and "did not book"
    (descend from k) with the arm's booking probability q(k).
    """
    if D is None:
        D = interarrival_kernel(model)
    q = booking_profile(model, arm)
    K = model.K
    up = D[np.minimum(np.arange(K + 1) + 1, K)]
    M = q[:, None] * up + (1.0 - q)[:, None] * D
    return M


def augmented_kernel(model, arm, D=None):
    """Embedded chain over (seen state, booking outcome) pairs.

    Returns (P, phi): the 2(K+1) x 2(K+1) transition matrix with state
    index 2*k + y, and its stationary vector
    phi(k, y) = pi(k) * q(k)^y * (1-q(k))^(1-y).  The arm index governs the
    booking outcome y' of the arriving (destination) customer, matching the
    convention under which sum_i Z_i * Y_i pairs each outcome with that
    customer's own assignment.
    """
    if D is None:
        D = interarrival_kernel(model)
    q = booking_profile(model, arm)
    K = model.K
    n = 2 * (K + 1)
    P = np.zeros((n, n))
    for k in range(K + 1):
        for y in (0, 1):
            row = D[min(k + y, K)]
            P[2 * k + y, 0::2] = row * (1.0 - q)
            P[2 * k + y, 1::2] = row * q
    pi = np.exp(log_steady_state(model, arm))
    phi = np.empty(n)
    phi[0::2] = pi * (1.0 - q)
    phi[1::2] = pi * q
    return P, phi


def log_augmented_stationary(model, arm):
    """log phi over augmented states, index 2*k + y (log-domain product)."""
    q = booking_profile(model, arm)
    log_pi = log_steady_state(model, arm)
    n = 2 * (model.K + 1)
    log_phi = np.empty(n)
    with np.errstate(divide="ignore"):
        log_phi[0::2] = log_pi + np.log1p(-q)
        log_phi[1::2] = log_pi + np.log(q)
    return log_phi


def propagate_arrival_distributions(model, Z, nu1):
    """Exact per-customer seen-state distributions along an assignment vector.

    nu[0] = nu1; nu[i+1] applies customer i's booking step (profile p_{Z_i})
    followed by the interarrival descent.  Returns a list of Distribution,
    one per customer in Z.
    """
    Z = np.asarray(Z)
    if Z.size == 0:
        raise ValidationError("assignment sequence must be nonempty")
    D = interarrival_kernel(model)
    M = {0: seen_state_kernel(model, "control", D),
         1: seen_state_kernel(model, "treatment", D)}
    nu = np.asarray(nu1.probs if isinstance(nu1, Distribution) else nu1, dtype=float)
    out = [Distribution(nu)]
    for z in Z[:-1]:
        nu = nu @ M[int(z)]
        # Guard tiny negative round-off before revalidating.
        nu = np.maximum(nu, 0.0)
        nu = nu / nu.sum()
        out.append(Distribution(nu))
    return out
