"""Event-driven Monte Carlo engine for customer-randomized experiments.

Each replication runs N customers through the booking platform: customer i
draws an assignment Z_i ~ Bernoulli(a), books with the assigned arm's
probability at the state it sees, and then departures race the next Poisson
arrival as competing exponentials, event by event.  The replication yields
the difference-in-means estimate, the naive two-sample variance estimate,
the t statistic, and the reject flag.

Replications use counter-based streams keyed by (seed, replication index)
(splitmix64 keying into an xorshift64* generator), so results are
bit-identical regardless of how replications are scheduled across threads.
The inner loop is numba-compiled; ABX_THREADS caps the worker count.

The module also houses an exact-enumeration oracle for the A/A analysis:
with outcomes independent of assignments, the naive variance estimator is
conditionally unbiased for the variance of the difference in means, and the
estimator pair's distribution is invariant to permuting outcomes.
"""

import itertools
import math
import os

import numpy as np
from numba import njit, prange

from .model import Distribution, NumericalError, ValidationError, gte, steady_state
from .power import normal_quantile

_U64 = np.uint64
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, inline="always")
def _splitmix64(x):
    z = (x + _U64(0x9E3779B97F4A7C15)) & _U64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _U64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _U64(0xFFFFFFFFFFFFFFFF)
    return z ^ (z >> _U64(31))


@njit(cache=True, inline="always")
def _stream_init(seed, rep):
    s = _splitmix64(seed ^ (_U64(rep) * _U64(0x9E3779B97F4A7C15)))
    s = _splitmix64(s)
    if s == _U64(0):
        s = _U64(0x1234567887654321)
    return s


@njit(cache=True, inline="always")
def _next_uniform(s):
    # xorshift64* step; returns (new_state, uniform in [0, 1)).
    s ^= s >> _U64(12)
    s ^= (s << _U64(25)) & _U64(0xFFFFFFFFFFFFFFFF)
    s ^= s >> _U64(27)
    out = (s * _U64(0x2545F4914F6CDD1D)) & _U64(0xFFFFFFFFFFFFFFFF)
    return s, float(out >> _U64(11)) * _INV_2_53


@njit(cache=True)
def _one_replication(q0, q1, tau_full, lam, a, N, init_cdf, seed, rep):
    s = _stream_init(seed, rep)
    s, u = _next_uniform(s)
    k = 0
    while k < init_cdf.shape[0] - 1 and u >= init_cdf[k]:
        k += 1
    n1 = 0
    sum1 = 0.0
    sum0 = 0.0
    for _ in range(N):
        s, u = _next_uniform(s)
        z = u < a
        q = q1[k] if z else q0[k]
        s, u = _next_uniform(s)
        y = u < q
        if y:
            k += 1
        # Departures race the next arrival as competing exponentials.
        while k > 0:
            t = tau_full[k]
            s, u = _next_uniform(s)
            if u < t / (lam + t):
                k -= 1
            else:
                break
        if z:
            n1 += 1
            if y:
                sum1 += 1.0
        elif y:
            sum0 += 1.0
    return n1, sum1, sum0


@njit(cache=True, parallel=True)
def _all_replications(q0, q1, tau_full, lam, a, N, init_cdf, seed, R):
    out_n1 = np.empty(R, dtype=np.int64)
    out_s1 = np.empty(R, dtype=np.float64)
    out_s0 = np.empty(R, dtype=np.float64)
    for r in prange(R):
        n1, s1, s0 = _one_replication(q0, q1, tau_full, lam, a, N, init_cdf, seed, r)
        out_n1[r] = n1
        out_s1[r] = s1
        out_s0[r] = s0
    return out_n1, out_s1, out_s0


def _configure_threads():
    raw = os.environ.get("ABX_THREADS")
    if raw:
        import numba

        limit = numba.config.NUMBA_NUM_THREADS
        numba.set_num_threads(max(1, min(int(raw), limit)))


# ---------------------------------------------------------------------------
# Configuration and result types
# ---------------------------------------------------------------------------

class SimConfig:
    """Experiment configuration for the Monte Carlo engine.

    initial: 'control' (default; the control arm's steady state),
    'treatment', an integer fixed starting state, or a Distribution.
    """

    def __init__(self, model, a=0.5, N=1000, replications=1, seed=0,
                 initial="control", alpha=0.05):
        if not 0.0 < float(a) < 1.0:
            raise ValidationError("allocation a must lie strictly in (0, 1)")
        if int(N) < 2:
            raise ValidationError("need at least N = 2 customers")
        if int(replications) < 1:
            raise ValidationError("need at least one replication")
        if not 0.0 < float(alpha) < 1.0:
            raise ValidationError("alpha must lie in (0, 1)")
        self.model = model
        self.a = float(a)
        self.N = int(N)
        self.replications = int(replications)
        self.seed = int(seed)
        self.initial = initial
        self.alpha = float(alpha)

    def initial_distribution(self):
        init = self.initial
        if init == "control":
            return steady_state(self.model, "control")
        if init == "treatment":
            return steady_state(self.model, "treatment")
        if isinstance(init, Distribution):
            if len(init) != self.model.K + 1:
                raise ValidationError("initial distribution has wrong length")
            return init
        k = int(init)
        if not 0 <= k <= self.model.K:
            raise ValidationError("fixed initial state out of range")
        probs = np.zeros(self.model.K + 1)
        probs[k] = 1.0
        return Distribution(probs)

    def echo(self):
        initial = self.initial if isinstance(self.initial, (str, int)) else "custom"
        return {
            "model": self.model.to_dict(),
            "a": self.a,
            "N": self.N,
            "replications": self.replications,
            "seed": self.seed,
            "initial": initial,
            "alpha": self.alpha,
        }


class TrajectoryOutcome:
    """Statistics of one replication; degenerate when either arm has <= 1
    customer, in which case the t statistic is undefined (NaN) and the
    replication never rejects."""

    def __init__(self, gte_hat, var_hat, t_stat, n1, n0, rejected, degenerate):
        self.gte_hat = gte_hat
        self.var_hat = var_hat
        self.t_stat = t_stat
        self.n1 = n1
        self.n0 = n0
        self.rejected = rejected
        self.degenerate = degenerate


class ReplicationSummary:
    """Aggregate of R replications, retaining per-replication statistics."""

    def __init__(self, config, n1, s1, s0):
        N = config.N
        R = config.replications
        n1 = np.asarray(n1, dtype=np.int64)
        n0 = N - n1
        degenerate = (n1 <= 1) | (n0 <= 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ybar1 = np.where(n1 > 0, s1 / n1, np.nan)
            ybar0 = np.where(n0 > 0, s0 / n0, np.nan)
            gte_hat = ybar1 - ybar0
            # Bernoulli outcomes: sum of squares equals the sum.
            ss1 = s1 - np.where(n1 > 0, s1**2 / n1, 0.0)
            ss0 = s0 - np.where(n0 > 0, s0**2 / n0, 0.0)
            var_hat = np.where(
                degenerate, np.nan,
                ss1 / (n1 * (n1 - 1.0)) + ss0 / (n0 * (n0 - 1.0)),
            )
            t_stat = np.where(
                ~degenerate & (var_hat > 0), gte_hat / np.sqrt(var_hat), np.nan
            )
        crit = normal_quantile(config.alpha / 2.0)
        rejected = np.abs(np.nan_to_num(t_stat, nan=0.0)) > crit
        self.config = config
        self.n1 = n1
        self.n0 = n0
        self.gte_hat = gte_hat
        self.var_hat = var_hat
        self.t_stat = t_stat
        self.rejected = rejected
        self.degenerate = degenerate
        self.degenerate_count = int(degenerate.sum())
        self.reject_rate = float(rejected.sum()) / R
        self.reject_se = math.sqrt(self.reject_rate * (1.0 - self.reject_rate) / R)
        ok = ~degenerate
        if ok.any():
            vals = gte_hat[ok]
            self.mean_gte_hat = float(vals.mean())
            self.gte_hat_se = (
                float(vals.std(ddof=1)) / math.sqrt(vals.size) if vals.size > 1 else 0.0
            )
        else:
            self.mean_gte_hat = math.nan
            self.gte_hat_se = math.nan

    def outcome(self, r):
        return TrajectoryOutcome(
            gte_hat=float(self.gte_hat[r]),
            var_hat=float(self.var_hat[r]),
            t_stat=float(self.t_stat[r]),
            n1=int(self.n1[r]),
            n0=int(self.n0[r]),
            rejected=bool(self.rejected[r]),
            degenerate=bool(self.degenerate[r]),
        )

    def to_dict(self):
        return {
            "reject_rate": self.reject_rate,
            "reject_se": self.reject_se,
            "mean_gte_hat": self.mean_gte_hat,
            "gte_hat_se": self.gte_hat_se,
            "degenerate_count": self.degenerate_count,
            "config": self.config.echo(),
        }

    def to_csv(self):
        lines = ["rep,gte_hat,var_hat,t_stat,n1,n0,rejected"]
        for r in range(self.config.replications):
            lines.append(
                f"{r},{float(self.gte_hat[r])!r},{float(self.var_hat[r])!r},"
                f"{float(self.t_stat[r])!r},{self.n1[r]},{self.n0[r]},"
                f"{int(self.rejected[r])}"
            )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Engine entry points
# ---------------------------------------------------------------------------

def _kernel_args(config):
    model = config.model
    init_cdf = np.cumsum(config.initial_distribution().probs)
    init_cdf[-1] = 1.0
    return (
        model.p0.astype(np.float64),
        model.p1.astype(np.float64),
        model.tau_full.astype(np.float64),
        float(model.lam),
        config.a,
        config.N,
        init_cdf,
        _U64(np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF)),
    )


def simulate_trajectory(config, rep=0):
    """Run a single replication on the stream keyed by (config.seed, rep)."""
    args = _kernel_args(config)
    n1, s1, s0 = _one_replication(*args, rep)
    single = SimConfig(config.model, config.a, config.N, 1, config.seed,
                       config.initial, config.alpha)
    return ReplicationSummary(single, np.array([n1]), np.array([s1]),
                              np.array([s0])).outcome(0)


def run_replications(config):
    """Run all replications (in parallel where available) and aggregate."""
    _configure_threads()
    args = _kernel_args(config)
    n1, s1, s0 = _all_replications(*args, config.replications)
    return ReplicationSummary(config, n1, s1, s0)


# ---------------------------------------------------------------------------
# Exact-enumeration oracle for A/A joints
# ---------------------------------------------------------------------------

class ExchangeableMoments:
    """Exact conditional moments of (DM estimate, naive variance estimate)."""

    def __init__(self, mean_gte, mean_var_hat, var_gte):
        self.mean_gte = mean_gte
        self.mean_var_hat = mean_var_hat
        self.var_gte = var_gte


def _enumeration_moments(Y, py, a):
    """Exact conditional moments for one explicit outcome joint.

    Y: (S, N) support matrix, py: (S,) probabilities.  Enumerates all 2^N
    assignment vectors; assignments are independent of outcomes (A/A).
    Returns moments conditioned on nondegenerate arm counts.
    """
    S, N = Y.shape
    Z = np.array(list(itertools.product((0, 1), repeat=N)), dtype=float)
    n1 = Z.sum(axis=1)
    n0 = N - n1
    pz = a**n1 * (1.0 - a) ** n0
    s1 = Z @ Y.T  # (2^N, S)
    st = Y.sum(axis=1)
    s0 = st[None, :] - s1
    sq1 = Z @ (Y**2).T
    sqt = (Y**2).sum(axis=1)
    sq0 = sqt[None, :] - sq1
    w = pz[:, None] * py[None, :]

    both_pos = (n1 > 0) & (n0 > 0)
    both_two = (n1 > 1) & (n0 > 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        gte_hat = s1 / n1[:, None] - s0 / n0[:, None]
        var_hat = (sq1 - s1**2 / n1[:, None]) / (n1 * (n1 - 1.0))[:, None] + (
            sq0 - s0**2 / n0[:, None]
        ) / (n0 * (n0 - 1.0))[:, None]

    w_pos = w[both_pos]
    mass_pos = w_pos.sum()
    mean_gte = float((w_pos * gte_hat[both_pos]).sum() / mass_pos)

    w_two = w[both_two]
    mass_two = w_two.sum()
    g = gte_hat[both_two]
    mean_g2 = float((w_two * g).sum() / mass_two)
    mean_gsq = float((w_two * g**2).sum() / mass_two)
    mean_var_hat = float((w_two * var_hat[both_two]).sum() / mass_two)
    return ExchangeableMoments(mean_gte, mean_var_hat, mean_gsq - mean_g2**2)


def exchangeable_oracle(joint, a):
    """Exact moments for an explicit outcome joint and for its uniformly
    permuted version.

    joint: sequence of (outcome_vector, probability) pairs, vectors of a
    common length N <= 6.  Returns (original, permuted) ExchangeableMoments.
    """
    a = float(a)
    if not 0.0 < a < 1.0:
        raise ValidationError("allocation a must lie strictly in (0, 1)")
    support = [(np.asarray(y, dtype=float), float(p)) for y, p in joint]
    if not support:
        raise ValidationError("joint must have at least one support point")
    N = support[0][0].size
    if N > 6:
        raise ValidationError("enumeration oracle supports N <= 6")
    if any(y.size != N for y, _ in support):
        raise ValidationError("support vectors have mismatched lengths")
    if len(support) > 2**6:
        raise ValidationError("support too large for exact enumeration")
    py = np.array([p for _, p in support])
    if abs(py.sum() - 1.0) > 1e-12:
        raise ValidationError("support probabilities must sum to 1")
    Y = np.stack([y for y, _ in support])

    original = _enumeration_moments(Y, py, a)

    # The uniformly permuted joint is the mixture over all N! relabelings of
    # the outcome coordinates; its support is the stacked permuted copies
    # with probabilities split evenly, and its moments are computed by the
    # same enumeration (so the comparison is a genuine recomputation).
    perms = list(itertools.permutations(range(N)))
    stacked = np.concatenate([Y[:, sigma] for sigma in perms], axis=0)
    stacked_p = np.tile(py / len(perms), len(perms))
    permuted = _enumeration_moments(stacked, stacked_p, a)
    return original, permuted


def aa_false_positive_check(model, a=0.5, N=2000, R=50000, alpha=0.05, seed=0):
    """Convenience: A/A reject rate from the common steady state."""
    aa = model.aa_version()
    config = SimConfig(aa, a=a, N=N, replications=R, seed=seed,
                       initial="control", alpha=alpha)
    return run_replications(config)
