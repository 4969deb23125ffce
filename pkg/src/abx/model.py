"""Platform model: a finite-inventory booking system as a birth-death chain.

The system has K listings; the booked count evolves as a continuous-time
birth-death chain driven by Poisson customer arrivals (rate lambda) and
exponential departures (rate tau(k) when k listings are booked).  An arriving
customer who sees k booked listings books with probability q(k), where q is
the control profile p0, the treatment profile p1, or the experiment mixture
q_a = (1-a)*p0 + a*p1 under Bernoulli(a) randomization.

This module holds the model type, its validation, steady states, booking
rates, the global treatment effect (GTE), the average direct effect (ADE),
stochastic dominance, and sign classification of treatments.
"""

import enum
import json
import math

import numpy as np
from scipy.special import logsumexp


class ValidationError(ValueError):
    """A model, distribution, or configuration violates its invariants."""


class NumericalError(RuntimeError):
    """A numerical computation failed (singular solve, degenerate variance)."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

class CustomerType:
    """One customer segment: Poisson arrival rate and booking profile.

    booking[k] is the probability that a customer of this type books when
    it sees k listings already booked; booking[K] must be 0 (no inventory).
    """

    def __init__(self, rate, booking):
        rate = float(rate)
        booking = np.asarray(booking, dtype=float)
        if rate <= 0:
            raise ValidationError("customer type rate must be > 0")
        if booking.ndim != 1 or booking.size < 2:
            raise ValidationError("booking profile must be a vector of length K+1 >= 2")
        if np.any(booking < 0) or np.any(booking > 1):
            raise ValidationError("booking probabilities must lie in [0, 1]")
        if booking[-1] != 0:
            raise ValidationError("booking probability at full occupancy must be 0")
        self.rate = rate
        self.booking = booking


def aggregate_types(control_types, treatment_types=None):
    """Aggregate customer segments into arrival-rate-weighted booking profiles.

    With one list, returns (lam, p) for that arm.  With two lists, returns
    (lam, p0, p1); both arms must describe the same arrival process, so their
    total rates must agree.
    """
    def one_arm(types):
        if not types:
            raise ValidationError("need at least one customer type per arm")
        lengths = {t.booking.size for t in types}
        if len(lengths) != 1:
            raise ValidationError("booking profiles have mismatched lengths")
        lam = sum(t.rate for t in types)
        p = sum(t.rate * t.booking for t in types) / lam
        return lam, p

    lam0, p0 = one_arm(control_types)
    if treatment_types is None:
        return lam0, p0
    lam1, p1 = one_arm(treatment_types)
    if not math.isclose(lam0, lam1, rel_tol=1e-9, abs_tol=0.0):
        raise ValidationError("arms disagree on total arrival rate")
    if p0.size != p1.size:
        raise ValidationError("arms disagree on K")
    return lam0, p0, p1


class Distribution:
    """Probability vector over states 0..K with tail-dominance comparison."""

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1:
            raise ValidationError("distribution must be a vector")
        if np.any(probs < 0):
            raise ValidationError("distribution entries must be >= 0")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValidationError("distribution must sum to 1 within 1e-12")
        self.probs = probs

    def __len__(self):
        return self.probs.size

    def __getitem__(self, k):
        return self.probs[k]

    def dominates(self, other, tol=1e-12):
        return dominates(self, other, tol=tol)


def dominates(nu, mu, tol=1e-12):
    """True iff nu stochastically dominates mu: every tail sum of nu weakly
    exceeds mu's (within tol), with strict excess (> tol) for at least one k.
    """
    a = nu.probs if isinstance(nu, Distribution) else np.asarray(nu, dtype=float)
    b = mu.probs if isinstance(mu, Distribution) else np.asarray(mu, dtype=float)
    if a.size != b.size:
        raise ValidationError("dominance comparison needs equal lengths")
    # Tail sums over k..K; the k=0 tails are both 1 and never strict.
    diff = np.cumsum((a - b)[::-1])[::-1]
    if np.any(diff < -tol):
        return False
    return bool(np.any(diff > tol))


class SignClass(enum.Enum):
    """Sign classification of a treatment's state-wise booking change.

    Under elementwise comparison with tolerance, "positive but nowhere
    strictly positive" collapses to Identical, so classify_sign only ever
    returns Identical, StrictlyPositive, StrictlyNegative, or Inconsistent;
    Positive/Negative exist for completeness of the taxonomy.
    """

    Identical = "identical"
    StrictlyPositive = "strictly_positive"
    StrictlyNegative = "strictly_negative"
    Positive = "positive"
    Negative = "negative"
    Inconsistent = "inconsistent"


# ---------------------------------------------------------------------------
# The model
# ---------------------------------------------------------------------------

class PlatformModel:
    """Birth-death booking platform with control/treatment booking profiles.

    Parameters
    ----------
    K : int
        Number of listings (states run 0..K).
    lam : float
        Aggregate Poisson arrival rate, > 0.
    tau : array of length K
        Departure rates tau(1..K); positive and nondecreasing.
    p0, p1 : arrays of length K+1
        Control / treatment booking probabilities; p_z(K) = 0.
    strict : bool
        If True, additionally require strictly decreasing positive booking
        probabilities p_z(0) > p_z(1) > ... > p_z(K-1) > 0.
    """

    def __init__(self, K, lam, tau, p0, p1, strict=False):
        K = int(K)
        lam = float(lam)
        tau = np.asarray(tau, dtype=float)
        p0 = np.asarray(p0, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        if K < 1:
            raise ValidationError("K must be a positive integer")
        if lam <= 0:
            raise ValidationError("arrival rate lambda must be > 0")
        if tau.shape != (K,):
            raise ValidationError("tau must have length K (rates for states 1..K)")
        if np.any(tau <= 0):
            raise ValidationError("holding rates tau(k) must be > 0")
        if np.any(np.diff(tau) < 0):
            raise ValidationError("holding rates must be nondecreasing in k")
        for name, p in (("p0", p0), ("p1", p1)):
            if p.shape != (K + 1,):
                raise ValidationError(f"{name} must have length K+1")
            if np.any(p < 0) or np.any(p > 1):
                raise ValidationError(f"{name} entries must lie in [0, 1]")
            if p[K] != 0:
                raise ValidationError(f"{name}(K) must be 0 (no inventory left)")
        self.K = K
        self.lam = lam
        self.tau = tau
        self.p0 = p0
        self.p1 = p1
        if strict:
            bad = self.strict_violations()
            if bad:
                raise ValidationError("strict mode: " + "; ".join(bad))

    def strict_violations(self):
        """Messages for violations of the strict (decreasing-profile) mode."""
        out = []
        for name, p in (("p0", self.p0), ("p1", self.p1)):
            interior = p[: self.K]
            if np.any(np.diff(interior) >= 0):
                out.append(f"{name} is not strictly decreasing on 0..K-1")
            if interior[-1] <= 0:
                out.append(f"{name}(K-1) must be > 0")
        return out

    @property
    def tau_full(self):
        """tau indexed by state 0..K with the convention tau(0) = 0."""
        return np.concatenate(([0.0], self.tau))

    def aa_version(self):
        """The A/A twin of this model: treatment profile forced to control."""
        return PlatformModel(self.K, self.lam, self.tau, self.p0, self.p0)

    # -- JSON ingestion ----------------------------------------------------

    @classmethod
    def from_dict(cls, doc, strict=False):
        if "types" in doc:
            ctrl = [CustomerType(t["rate"], t["booking"]) for t in doc["types"]["control"]]
            trt = [CustomerType(t["rate"], t["booking"]) for t in doc["types"]["treatment"]]
            lam, p0, p1 = aggregate_types(ctrl, trt)
            K = p0.size - 1
            tau = _parse_tau(doc.get("tau", {"form": "linear", "tau_bar": 1.0}), K)
            return cls(K, lam, tau, p0, p1, strict=strict)
        K = int(doc["K"])
        tau = _parse_tau(doc["tau"], K)
        return cls(K, doc["lambda"], tau, doc["p0"], doc["p1"], strict=strict)

    @classmethod
    def from_json(cls, text, strict=False):
        return cls.from_dict(json.loads(text), strict=strict)

    def to_dict(self):
        return {
            "K": self.K,
            "lambda": self.lam,
            "tau": self.tau.tolist(),
            "p0": self.p0.tolist(),
            "p1": self.p1.tolist(),
        }


def _parse_tau(spec, K):
    if isinstance(spec, dict):
        if spec.get("form") != "linear":
            raise ValidationError("tau form must be 'linear' or an explicit list")
        tau_bar = float(spec.get("tau_bar", 1.0))
        return tau_bar * np.arange(1, K + 1, dtype=float)
    return np.asarray(spec, dtype=float)


def booking_profile(model, arm):
    """Booking profile for an arm: 'control', 'treatment', or a mixture a.

    A float arm a in [0, 1] denotes the experiment mixture
    q_a = (1-a)*p0 + a*p1 seen under Bernoulli(a) randomization.
    """
    if arm == "control":
        return model.p0
    if arm == "treatment":
        return model.p1
    a = float(arm)
    if not 0.0 <= a <= 1.0:
        raise ValidationError("allocation a must lie in [0, 1]")
    return (1.0 - a) * model.p0 + a * model.p1


# ---------------------------------------------------------------------------
# Steady-state analysis
# ---------------------------------------------------------------------------

def log_steady_state(model, arm):
    """Log stationary probabilities of the booked-count chain for one arm.

    Detailed balance gives the product form
        pi(k) proportional to prod_{j=1..k} lam*q(j-1)/tau(j),
    accumulated in log domain so large K cannot underflow.  O(K).
    """
    q = booking_profile(model, arm)
    with np.errstate(divide="ignore"):
        log_ratio = np.log(model.lam * q[:-1]) - np.log(model.tau)
    log_w = np.concatenate(([0.0], np.cumsum(log_ratio)))
    return log_w - logsumexp(log_w)


def steady_state(model, arm):
    """Stationary distribution of the booked count under the given arm."""
    return Distribution(np.exp(log_steady_state(model, arm)))


def booking_rate(model, arm):
    """Steady-state probability that an arriving customer books (PASTA)."""
    pi = steady_state(model, arm).probs
    return float(pi @ booking_profile(model, arm))


def gte(model):
    """Global treatment effect: booking rate under global treatment minus
    booking rate under global control."""
    return booking_rate(model, "treatment") - booking_rate(model, "control")


def ade(model, a):
    """Average direct effect at allocation a: the state-wise booking-rate
    lift averaged under the experiment's steady state.  This is the
    probability limit of the difference-in-means estimator."""
    if not 0.0 <= float(a) <= 1.0:
        raise ValidationError("allocation a must lie in [0, 1]")
    pi_a = steady_state(model, float(a)).probs
    return float(pi_a @ (model.p1 - model.p0))


def generator_matrix(model, arm):
    """The (K+1)x(K+1) generator of the continuous-time booked-count chain."""
    q = booking_profile(model, arm)
    K = model.K
    Q = np.zeros((K + 1, K + 1))
    for k in range(K + 1):
        if k < K:
            Q[k, k + 1] = model.lam * q[k]
        if k > 0:
            Q[k, k - 1] = model.tau[k - 1]
        Q[k, k] = -Q[k].sum()
    return Q


def classify_sign(model, tol=1e-12):
    """Classify the treatment by the sign pattern of p1 - p0 over states."""
    diff = model.p1 - model.p0
    pos = bool(np.any(diff > tol))
    neg = bool(np.any(diff < -tol))
    if pos and neg:
        return SignClass.Inconsistent
    if pos:
        return SignClass.StrictlyPositive
    if neg:
        return SignClass.StrictlyNegative
    return SignClass.Identical
