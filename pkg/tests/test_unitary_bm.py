import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unitary_clt.covariance import FourierSeries
from unitary_clt.errors import InvalidInput, InvalidParameter
from unitary_clt.free_limit import moment
from unitary_clt.matrix_core import FULL, SPECIAL, alpha_metric
from unitary_clt.unitary_bm import (
    BrownianConfig,
    default_steps,
    power_traces,
    power_traces_batch,
    simulate_batch,
    simulate_path,
    trace_function,
    unitary_eigenangles,
    write_snapshots_csv,
)


def test_config_defaults_and_validation():
    assert BrownianConfig(4, 1.0).steps == 200
    assert BrownianConfig(4, 3.5).steps == 700
    assert default_steps(0) == 200
    for bad in (dict(n=0, T=1.0), dict(n=2, T=-1.0), dict(n=2, T=1.0, steps=0), dict(n=2, T=float("nan"))):
        with pytest.raises(InvalidParameter):
            BrownianConfig(**bad)


def test_T_zero_is_identity():
    s = simulate_path(BrownianConfig(5, 0.0, seed=3), snapshot_times=[0.0])
    assert np.array_equal(s.final, np.eye(5))
    assert np.array_equal(s.snapshots[0][1], np.eye(5))


def test_n1_is_phase():
    s = simulate_path(BrownianConfig(1, 2.0, seed=7))
    assert abs(abs(s.final[0, 0]) - 1) <= 1e-12


def test_n1_exact_law():
    # for n = 1 the scheme is exact: U = exp(i B_T)
    cfg = BrownianConfig(1, 1.0, steps=10)
    finals, _ = simulate_batch(cfg, range(20000))
    x = finals[:, 0, 0]
    assert abs(x.real.mean() - math.exp(-0.5)) <= 3 * x.real.std() / math.sqrt(len(x))


def test_unitarity_long_path():
    s = simulate_path(BrownianConfig(16, 1.0, steps=1000, seed=1))
    assert np.max(np.abs(s.final.conj().T @ s.final - np.eye(16))) <= 1e-9


def test_special_determinant_snapshots():
    cfg = BrownianConfig(6, 2.0, steps=400, metric=SPECIAL, seed=2)
    s = simulate_path(cfg, snapshot_times=[0.5, 1.0, 1.5, 2.0])
    assert len(s.snapshots) == 4
    for _, V in s.snapshots:
        assert abs(np.linalg.det(V) - 1) <= 1e-8


def test_snapshot_grid_validation():
    cfg = BrownianConfig(2, 1.0, steps=10)
    with pytest.raises(InvalidParameter):
        simulate_path(cfg, snapshot_times=[0.05])
    with pytest.raises(InvalidParameter):
        simulate_path(cfg, snapshot_times=[2.0])


def test_determinism_and_batch_independence():
    cfg = BrownianConfig(4, 0.5, steps=50, seed=11)
    a = simulate_path(cfg).final
    b = simulate_path(cfg).final
    assert np.array_equal(a, b)
    finals, _ = simulate_batch(cfg, [5, 11, 13])
    assert np.array_equal(finals[1], a)


def _mean_trace(cfg, M):
    finals, _ = simulate_batch(cfg, range(cfg.seed, cfg.seed + M))
    tr = power_traces_batch(finals, 1)[:, 1]
    return tr.real.mean(), tr.real.std(ddof=1) / math.sqrt(M)


def test_mean_trace_full_n8():
    cfg = BrownianConfig(8, 1.0, steps=200)
    m, se = _mean_trace(cfg, 4000)
    assert abs(m - math.exp(-0.5)) <= 3 * se + 1e-3


@pytest.mark.parametrize("T", [0.5, 4.0])
def test_mean_trace_full(T):
    cfg = BrownianConfig(6, T, steps=100, seed=100)
    m, se = _mean_trace(cfg, 2000)
    assert abs(m - math.exp(-T / 2 - T * cfg.dt / 24)) <= 3 * se


def test_mean_trace_special():
    N, T = 4, 1.0
    cfg = BrownianConfig(N, T, steps=100, metric=SPECIAL, seed=5)
    m, se = _mean_trace(cfg, 3000)
    assert abs(m - math.exp(-(1 - 1 / N**2) * T / 2)) <= 3 * se + 1e-3


def test_mean_trace_alpha():
    N, T, a = 4, 1.0, 2.0
    cfg = BrownianConfig(N, T, steps=100, metric=alpha_metric(a), seed=9)
    m, se = _mean_trace(cfg, 3000)
    assert abs(m - math.exp(-(1 + (a * a - 1) / N**2) * T / 2)) <= 3 * se + 1e-3


def test_moments_near_free_limit():
    N, T = 64, 1.0
    finals, _ = simulate_batch(BrownianConfig(N, T, steps=100), range(60))
    P = power_traces_batch(finals, 4)
    for k in range(1, 5):
        x = P[:, k].real
        assert abs(x.mean() - moment(k, T)) <= 3 * x.std(ddof=1) / math.sqrt(len(x)) + 0.01


# --- traces --------------------------------------------------------------


def test_power_traces_examples():
    t = power_traces(np.eye(3), 4)
    assert all(v == 1 for v in t.values())
    assert power_traces(np.eye(3), 0) == {0: 1}
    t = power_traces(np.diag([1j, -1j]), 2)
    assert abs(t[1]) < 1e-15 and t[2] == pytest.approx(-1)
    assert t[-2] == np.conj(t[2])


def test_power_traces_rejects_nonunitary():
    with pytest.raises(InvalidInput):
        power_traces(2 * np.eye(2), 1)


def test_trace_function_examples():
    two_cos = FourierSeries.cos(1, 2.0)
    assert trace_function(np.eye(2), FourierSeries.constant(1.5)) == 1.5
    assert trace_function(np.eye(2), two_cos) == pytest.approx(2.0)
    assert trace_function(np.diag([1j, -1j]), two_cos) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(InvalidInput):
        trace_function(np.eye(2), FourierSeries({1: 1.0}))


def test_eigenangles_examples():
    assert np.allclose(unitary_eigenangles(np.eye(3)), 0)
    assert unitary_eigenangles(-np.eye(1))[0] == pytest.approx(math.pi)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_eigenangles_spectral_consistency(method):
    U = simulate_path(BrownianConfig(8, 1.0, seed=4)).final
    th = unitary_eigenangles(U, method=method)
    assert np.all(np.diff(th) >= 0) and np.all(th > -math.pi) and np.all(th <= math.pi)
    assert abs(np.mean(np.exp(1j * th)) - np.trace(U) / 8) <= 1e-8
    assert np.allclose(np.sort(np.angle(np.linalg.eigvals(U))), th, atol=1e-8)


def test_snapshot_csv(tmp_path):
    s = simulate_path(BrownianConfig(2, 1.0, steps=10), snapshot_times=[0.0, 1.0])
    path = tmp_path / "snap.csv"
    write_snapshots_csv(s, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("time,re_0_0,im_0_0")
    assert len(lines) == 3
    row = [float(x) for x in lines[2].split(",")]
    M = np.array(row[1::2]) + 1j * np.array(row[2::2])
    assert np.array_equal(M.reshape(2, 2), s.final)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.floats(0.0, 3.0), st.integers(0, 2**31), st.sampled_from(["full", "special", "alpha"]))
def test_property_paths_stay_on_group(n, T, seed, variant):
    metric = {"full": FULL, "special": SPECIAL, "alpha": alpha_metric(0.5)}[variant]
    U = simulate_path(BrownianConfig(n, T, steps=20, metric=metric, seed=seed)).final
    assert np.max(np.abs(U.conj().T @ U - np.eye(n))) <= 1e-10
    if variant == "special":
        assert abs(np.linalg.det(U) - 1) <= 1e-10
    t = power_traces(U, 3)
    for j in range(1, 4):
        assert t[-j] == np.conj(t[j])
        assert abs(t[j]) <= 1 + 1e-12
