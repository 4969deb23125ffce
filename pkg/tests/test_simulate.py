import itertools

import numpy as np
import pytest

from abx.model import Distribution, ValidationError, steady_state
from abx.scenarios import logit_scenario
from abx.simulate import (
    ReplicationSummary,
    SimConfig,
    aa_false_positive_check,
    exchangeable_oracle,
    run_replications,
    simulate_trajectory,
)

from test_model import hand_model


def small_config(**overrides):
    kwargs = dict(model=hand_model(), a=0.5, N=200, replications=50,
                  seed=123, alpha=0.05)
    kwargs.update(overrides)
    return SimConfig(**kwargs)


def test_config_validation():
    with pytest.raises(ValidationError):
        small_config(a=0.0)
    with pytest.raises(ValidationError):
        small_config(N=1)
    with pytest.raises(ValidationError):
        small_config(replications=0)
    with pytest.raises(ValidationError):
        small_config(alpha=1.0)
    with pytest.raises(ValidationError):
        small_config(initial=99).initial_distribution()
    with pytest.raises(ValidationError):
        small_config(initial=Distribution([0.5, 0.5])).initial_distribution()


def test_initial_distribution_modes():
    cfg = small_config(initial="control")
    np.testing.assert_allclose(cfg.initial_distribution().probs,
                               steady_state(cfg.model, "control").probs)
    cfg = small_config(initial=2)
    np.testing.assert_array_equal(cfg.initial_distribution().probs, [0, 0, 1])
    custom = Distribution([0.2, 0.3, 0.5])
    cfg = small_config(initial=custom)
    assert cfg.initial_distribution() is custom
    assert cfg.echo()["initial"] == "custom"


def test_determinism_and_seed_sensitivity():
    s1 = run_replications(small_config())
    s2 = run_replications(small_config())
    np.testing.assert_array_equal(s1.n1, s2.n1)
    np.testing.assert_array_equal(s1.gte_hat, s2.gte_hat)
    s3 = run_replications(small_config(seed=124))
    assert not np.array_equal(s1.n1, s3.n1) or not np.allclose(
        s1.gte_hat, s3.gte_hat)


def test_trajectory_matches_batch_replication():
    cfg = small_config()
    summary = run_replications(cfg)
    for rep in (0, 7, 49):
        traj = simulate_trajectory(cfg, rep=rep)
        batch = summary.outcome(rep)
        assert traj.n1 == batch.n1 and traj.n0 == batch.n0
        assert traj.gte_hat == batch.gte_hat
        assert traj.rejected == batch.rejected


def test_summary_statistics_against_direct_formulas():
    # Feed synthetic sufficient statistics through the summary and compare
    # with a literal two-sample computation on reconstructed 0/1 outcomes.
    cfg = small_config(N=10, replications=3)
    n1 = np.array([4, 6, 1])
    s1 = np.array([3.0, 2.0, 1.0])
    s0 = np.array([2.0, 3.0, 4.0])
    summary = ReplicationSummary(cfg, n1, s1, s0)
    for r in range(3):
        y1 = np.array([1.0] * int(s1[r]) + [0.0] * (int(n1[r]) - int(s1[r])))
        y0 = np.array([1.0] * int(s0[r]) + [0.0] * (10 - int(n1[r]) - int(s0[r])))
        if min(y1.size, y0.size) <= 1:
            assert summary.degenerate[r]
            assert np.isnan(summary.t_stat[r])
            assert not summary.rejected[r]
            continue
        gte_hat = y1.mean() - y0.mean()
        var_hat = y1.var(ddof=1) / y1.size + y0.var(ddof=1) / y0.size
        assert summary.gte_hat[r] == pytest.approx(gte_hat, abs=1e-15)
        assert summary.var_hat[r] == pytest.approx(var_hat, abs=1e-15)
        assert summary.t_stat[r] == pytest.approx(
            gte_hat / np.sqrt(var_hat), abs=1e-12)
    assert summary.degenerate_count == 1
    # Degenerate replications are excluded from the bias summary only.
    assert summary.mean_gte_hat == pytest.approx(
        np.mean(summary.gte_hat[:2]), abs=1e-15)


def test_zero_variance_replication_never_rejects():
    cfg = small_config(N=8, replications=1)
    summary = ReplicationSummary(cfg, np.array([4]), np.array([4.0]),
                                 np.array([0.0]))
    assert np.isnan(summary.t_stat[0])
    assert not summary.rejected[0]
    assert not summary.degenerate[0]


def test_csv_and_dict_contracts():
    summary = run_replications(small_config(replications=4))
    lines = summary.to_csv().splitlines()
    assert lines[0] == "rep,gte_hat,var_hat,t_stat,n1,n0,rejected"
    assert len(lines) == 5
    assert "np." not in lines[1]
    d = summary.to_dict()
    assert set(d) == {"reject_rate", "reject_se", "mean_gte_hat",
                      "gte_hat_se", "degenerate_count", "config"}


def test_aa_reject_rate_is_near_alpha():
    # Moderate-R smoke check; the tight version lives in the acceptance suite.
    summary = aa_false_positive_check(logit_scenario(K=20), N=500, R=4000, seed=5)
    assert abs(summary.reject_rate - 0.05) <= 0.015


def test_arm_counts_are_binomial_like():
    summary = run_replications(small_config(a=0.3, N=1000, replications=300))
    mean_share = summary.n1.mean() / 1000
    assert abs(mean_share - 0.3) <= 0.01


# ---------------------------------------------------------------------------
# Exact enumeration oracle
# ---------------------------------------------------------------------------

def iid_joint(N, p):
    support = list(itertools.product((0, 1), repeat=N))
    return [(np.array(y, float), p ** sum(y) * (1 - p) ** (N - sum(y)))
            for y in support]


def test_oracle_exchangeable_identities():
    rng = np.random.default_rng(42)
    for _ in range(10):
        # Mixtures of iid levels are exchangeable.
        levels = rng.uniform(0.1, 0.9, size=2)
        w = rng.uniform(0.2, 0.8)
        base = iid_joint(4, levels[0])
        other = iid_joint(4, levels[1])
        joint = [(y, w * p + (1 - w) * q)
                 for (y, p), (_, q) in zip(base, other)]
        for a in (0.3, 0.5):
            orig, _ = exchangeable_oracle(joint, a)
            assert abs(orig.mean_gte) <= 1e-12
            assert abs(orig.mean_var_hat - orig.var_gte) <= 1e-12


def test_oracle_permutation_invariance_non_exchangeable():
    rng = np.random.default_rng(7)
    for _ in range(10):
        Y = rng.integers(0, 2, size=(5, 4)).astype(float)
        probs = rng.dirichlet(np.ones(5))
        joint = list(zip(Y, probs))
        for a in (0.3, 0.5):
            orig, perm = exchangeable_oracle(joint, a)
            assert abs(orig.mean_gte - perm.mean_gte) <= 1e-12
            assert abs(orig.mean_var_hat - perm.mean_var_hat) <= 1e-12
            assert abs(orig.var_gte - perm.var_gte) <= 1e-12


def test_oracle_validation():
    with pytest.raises(ValidationError):
        exchangeable_oracle([], 0.5)
    with pytest.raises(ValidationError):
        exchangeable_oracle(iid_joint(4, 0.5), 0.0)
    with pytest.raises(ValidationError):
        exchangeable_oracle([(np.zeros(7), 1.0)], 0.5)
    bad = [(np.zeros(3), 0.5), (np.ones(3), 0.4)]
    with pytest.raises(ValidationError):
        exchangeable_oracle(bad, 0.5)
