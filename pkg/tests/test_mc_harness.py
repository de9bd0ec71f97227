import math

import numpy as np
import pytest

from unitary_clt.covariance import FourierSeries, sigma_T
from unitary_clt.errors import InvalidParameter, StatisticsError
from unitary_clt.free_limit import moment, tau_table
from unitary_clt.matrix_core import FULL, SPECIAL
from unitary_clt.mc_harness import (
    MCEstimate,
    clt_report,
    estimate_traces,
    exact_cov_mc_check,
    haar_power_moments,
    jackknife_covariance,
    sample_haar,
    sample_traces,
    sigma_def_crosscheck,
    variance_bound_check,
    variance_bound_report,
)
from unitary_clt.unitary_bm import BrownianConfig

TWO_COS = FourierSeries.cos(1, 2.0)
TWO_SIN = FourierSeries.sin(1, 2.0)


def test_mc_estimate_invariants():
    with pytest.raises(StatisticsError):
        MCEstimate(0.0, 0.0, 1)
    assert MCEstimate(np.ones(2), np.zeros(2), 5).to_dict()["value"] == [1.0, 1.0]


def test_jackknife_matches_explicit_loop():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 3)) @ np.array([[1, 0.5, 0], [0, 1, 0.2], [0, 0, 2]])
    cov, se = jackknife_covariance(X)
    assert np.allclose(cov, np.cov(X.T))
    reps = np.array([np.cov(np.delete(X, i, axis=0).T) for i in range(len(X))])
    want = np.sqrt((len(X) - 1) / len(X) * np.sum((reps - reps.mean(axis=0)) ** 2, axis=0))
    assert np.allclose(se, want)


def test_constant_function_has_zero_covariance():
    cfg = BrownianConfig(4, 1.0, steps=20)
    est = estimate_traces(cfg, [FourierSeries.constant(2.5), TWO_COS], 100)
    assert est.mean.value[0] == 2.5
    assert np.all(est.cov.value[0] == 0) and np.all(est.cov.value[:, 0] == 0)
    assert est.cov.std_error[0, 0] == 0


def test_too_few_samples():
    with pytest.raises(StatisticsError):
        estimate_traces(BrownianConfig(2, 1.0), [TWO_COS], 50)


def test_mean_and_variance_n16():
    cfg = BrownianConfig(16, 1.0, steps=200, seed=1000)
    est = estimate_traces(cfg, [TWO_COS], 1500)
    assert abs(est.mean.value[0] - 2 * math.exp(-0.5)) <= 3 * est.mean.std_error[0] + 2e-3
    target = 2 - 3 / math.e
    assert abs(est.cov.value[0, 0] - target) <= 3 * est.cov.std_error[0, 0] + 0.02


def test_determinism_and_workers():
    cfg = BrownianConfig(4, 0.5, steps=20, seed=42)
    a = sample_traces(cfg, [TWO_COS, TWO_SIN], 120)
    b = sample_traces(cfg, [TWO_COS, TWO_SIN], 120)
    c = sample_traces(cfg, [TWO_COS, TWO_SIN], 120, workers=2)
    assert np.array_equal(a, b) and np.array_equal(a, c)


def test_seed_ranges_agree():
    fs = [TWO_COS]
    a = estimate_traces(BrownianConfig(8, 1.0, steps=50, seed=0), fs, 800)
    b = estimate_traces(BrownianConfig(8, 1.0, steps=50, seed=10_000), fs, 800)
    se = math.hypot(a.cov.std_error[0, 0], b.cov.std_error[0, 0])
    assert abs(a.cov.value[0, 0] - b.cov.value[0, 0]) <= 4 * se
    se = math.hypot(a.mean.std_error[0], b.mean.std_error[0])
    assert abs(a.mean.value[0] - b.mean.value[0]) <= 4 * se


def test_clt_report_T_zero():
    rep = clt_report(BrownianConfig(4, 0.0), [TWO_COS, TWO_SIN], 100)
    assert np.all(rep.empirical.cov.value == 0)
    assert np.all(rep.z_scores == 0)
    assert rep.passed()
    assert "max |z|" in rep.to_text()


def test_clt_report_su_targets_alpha_zero():
    rep = clt_report(BrownianConfig(8, 1.0, steps=100, metric=SPECIAL, seed=7), [TWO_SIN], 1500)
    assert rep.target.alpha == 0.0
    assert rep.target.entries[0, 0] == pytest.approx(2 - 5 / math.e)
    assert rep.max_abs_z <= 3
    d = rep.to_dict()
    assert d["config"]["variant"] == "special" and len(d["z_scores"]) == 1


def test_clt_report_full_small():
    rep = clt_report(BrownianConfig(16, 0.5, steps=100, seed=3), [TWO_COS, FourierSeries.cos(2)], 1000)
    assert rep.target.alpha is None
    assert rep.max_abs_z <= 3.5


# --- Haar -------------------------------------------------------------------


def test_haar_is_unitary():
    rng = np.random.default_rng(0)
    for n in (1, 2, 8, 20):
        U = sample_haar(n, rng)
        assert np.max(np.abs(U.conj().T @ U - np.eye(n))) <= 1e-10


def test_haar_moments():
    est = haar_power_moments(8, 6000, 4, seed=5)
    for p in range(1, 5):
        assert abs(est.value[p - 1] - p) <= 3 * est.std_error[p - 1]


def test_haar_mean_trace_zero():
    rng = np.random.default_rng(9)
    tr = np.array([np.trace(sample_haar(6, rng)) for _ in range(3000)])
    assert abs(tr.real.mean()) <= 3 * tr.real.std() / math.sqrt(3000)
    assert abs(tr.imag.mean()) <= 3 * tr.imag.std() / math.sqrt(3000)


def test_haar_phase_distribution():
    # first column entry phases must be uniform (no bias from the triangular factor)
    rng = np.random.default_rng(4)
    ph = np.array([np.angle(sample_haar(3, rng)[0, 0]) for _ in range(4000)])
    m = np.abs(np.mean(np.exp(1j * ph)))
    assert m <= 3 / math.sqrt(4000)


# --- variance bound -----------------------------------------------------------


def test_variance_bound_trivial():
    assert variance_bound_check(BrownianConfig(4, 1.0, steps=20), FourierSeries.constant(3.0), 100)


def test_variance_bound_examples():
    rep = variance_bound_report(BrownianConfig(32, 1.0, seed=1), TWO_COS, 300)
    assert rep["ok"] and rep["bound"] == pytest.approx(4 / 32**2)
    assert variance_bound_check(BrownianConfig(32, 4.0, seed=2), FourierSeries.sin(3, 2.0), 150)


# --- definitional cross-check -------------------------------------------------


def test_sigma_def_constant_is_zero():
    est = sigma_def_crosscheck(1.0, FourierSeries.constant(1.0), 32, 4, nodes=5)
    assert est.value == 0 and est.std_error == 0


def test_sigma_def_guards():
    with pytest.raises(InvalidParameter):
        sigma_def_crosscheck(1.0, TWO_COS, 8, 10)
    with pytest.raises(InvalidParameter):
        sigma_def_crosscheck(1.0, TWO_COS, 32, 10, nodes=20)


def test_sigma_def_sin_T2():
    T = 2.0
    est = sigma_def_crosscheck(T, TWO_SIN, 32, 60, nodes=11, seed=3)
    target = sigma_T(TWO_SIN, TWO_SIN, tau_table(2, T))
    assert abs(est.value - target) <= est.combined_error + 0.01
    assert est.quadrature_error < 0.05


# --- exact covariance arbiter ---------------------------------------------------


def test_exact_cov_t_zero():
    r = exact_cov_mc_check(8, 2, 1, 0.0, 20)
    assert r["mc"] == 64 and r["mc_std_error"] == 0 and r["composed"] == 64
    assert r["composed_ok"]


def test_exact_cov_arbiter_n2_m1():
    r = exact_cov_mc_check(8, 2, 1, 1.0, 1500, seed=77)
    assert r["composed_ok"] and not r["literal_ok"]
