"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict; the lines are printed as they
happen (visible with ``-s``) and again in the terminal summary.  Criteria 10
and 13 are long Monte Carlo runs (tens of minutes on one core).
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from unitary_clt.cli import main as cli_main
from unitary_clt.covariance import FourierSeries, h_half_norm2, sigma_T, tau_tables
from unitary_clt.free_limit import moment_bound_check, pairs_up_to, tau_bound_check, tau_table
from unitary_clt.matrix_core import FULL, SPECIAL, alpha_metric, coalescence_sum, ntr, orthonormal_basis, split_sum
from unitary_clt.mc_harness import clt_report, exact_cov_mc_check, haar_power_moments, sigma_def_crosscheck
from unitary_clt.symcomb import (
    count_walks,
    cycle,
    exact_cov_terms,
    exact_power_trace_covariance,
    kappa_series,
    lr_hook,
    lr_hook_bruteforce,
    partitions,
    verify_itocombi,
)
from unitary_clt.unitary_bm import BrownianConfig, simulate_batch

from conftest import random_complex

VERDICTS: list[str] = []


def verdict(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"acceptance {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    VERDICTS.append(line)
    print(line)
    assert ok, line


# -------------------------------------------------------------------- 1


CLOSED_TAU = {
    (1, 0): lambda T: T * math.exp(-T / 2),
    (1, 1): lambda T: math.exp(-T) * (T - T * T / 2),
    (1, -1): lambda T: 1 - math.exp(-T),
    (2, -1): lambda T: T * math.exp(-1.5 * T),
    (2, -2): lambda T: 0.5 - math.exp(-2 * T) * (0.5 + T * T),
}


def test_01_closed_form_kernel():
    worst_exact = worst_ode = 0.0
    for T in (0.25, 1.0, 2.0, 5.0):
        exact = tau_table(4, T, "exact")
        ode = tau_table(4, T, "ode")
        for key, fn in CLOSED_TAU.items():
            worst_exact = max(worst_exact, abs(exact(*key) - fn(T)))
            worst_ode = max(worst_ode, abs(ode(*key) - fn(T)))
    ok = worst_exact <= 1e-12 and worst_ode <= 1e-6
    verdict(1, "closed-form tau values", ok, f"exact err {worst_exact:.1e}, ode err {worst_ode:.1e}")


# -------------------------------------------------------------------- 2


def test_02_exact_vs_ode_sweep():
    times = [0.5 * i for i in range(21)]
    exact = tau_tables(8, times, "exact")
    ode = tau_tables(8, times, "ode", ode_steps=4000)
    worst = 0.0
    for te, to in zip(exact, ode):
        for j, k in pairs_up_to(8):
            if abs(j) + abs(k) <= 8:
                worst = max(worst, abs(te(j, k) - to(j, k)))
    verdict(2, "exact vs ODE kernel sweep, |j|+|k| <= 8, T <= 10", worst <= 1e-6, f"max diff {worst:.1e}")


# -------------------------------------------------------------------- 3


def test_03_decay_bounds():
    checked = 0
    ok = True
    for T in (32.0, 48.0, 64.0):
        table = tau_table(8, T, "exact")
        for k in range(1, 9):
            ok &= moment_bound_check(k, T, 0.25)
            checked += 1
        for j, k in pairs_up_to(8):
            if (j, k) != (0, 0) and abs(j) + abs(k) <= 8:
                ok &= tau_bound_check(j, k, T, table)
                checked += 1
    verdict(3, "moment and kernel decay bounds at T in {32, 48, 64}", ok, f"{checked} checks")


# -------------------------------------------------------------------- 4


def test_04_sigma_closed_form():
    f = FourierSeries.cos(1, 2.0)
    worst = 0.0
    for T in (0.1, 0.5, 1.0, 2.0, 4.0, 8.0):
        closed = 2 - math.exp(-T) * (2 + 2 * T - T * T)
        worst = max(worst, abs(sigma_T(f, f, tau_table(2, T)) - closed))
    at_one = sigma_T(f, f, tau_table(2, 1.0))
    ok = worst <= 1e-10 and abs(at_one - (2 - 3 / math.e)) <= 1e-12
    verdict(4, "sigma_T(2 cos) closed form", ok, f"max err {worst:.1e}, sigma_1 = {at_one:.7f}")


# -------------------------------------------------------------------- 5


def test_05_haar_limit():
    table = tau_table(16, 64.0)
    worst = 0.0
    for k in range(1, 9):
        for f in (FourierSeries.sin(k), FourierSeries.cos(k)):
            worst = max(worst, abs(sigma_T(f, f, table) - h_half_norm2(f)))
    verdict(5, "large-T limit equals the H^1/2 norm at T = 64", worst <= 1e-6, f"max gap {worst:.1e}")


# -------------------------------------------------------------------- 6


def _lr_sweep():
    cases = mismatches = 0
    for size in range(11):
        for beta in partitions(size):
            for n in range(1, min(6, size) + 1):
                for alpha in partitions(size - n):
                    if len(alpha) > len(beta) or any(a > b for a, b in zip(alpha, beta)):
                        continue
                    for r in range(n):
                        cases += 1
                        mismatches += lr_hook(alpha, n, r, beta) != lr_hook_bruteforce(alpha, n, r, beta)
    return cases, mismatches


def test_06_combinatorial_identities():
    cases, mismatches = _lr_sweep()
    ito = [verify_itocombi(j, t - j, n) for t in range(2, 6) for j in range(1, t) for n in range(5) if n + 1 <= 6]
    free = [
        count_walks(cycle(k), l, 0) == math.comb(k, l + 1) * Fraction(k) ** (l - 1)
        for k in range(1, 7)
        for l in range(0, 6)
    ]
    ok = mismatches == 0 and cases > 1000 and all(ito) and all(free)
    detail = f"{cases} LR cases, {mismatches} mismatches; {sum(ito)}/{len(ito)} recursion cases; {sum(free)}/{len(free)} defect-free counts"
    verdict(6, "LR snake rule, walk recursion, defect-free counts", ok, detail)


# -------------------------------------------------------------------- 7


def test_07_kappa_vs_tau():
    worst = 0.0
    for T in (0.5, 1.0, 2.0):
        table = tau_table(6, T)
        for j in (1, 2, 3):
            for k in (1, 2, 3):
                worst = max(worst, abs(kappa_series(j, k, T, 30) + j * k * table(j, k)))
    verdict(7, "kappa series equals -jk tau", worst <= 1e-6, f"max diff {worst:.1e}")


# -------------------------------------------------------------------- 8


def test_08_exact_finite_n_covariance():
    worst = 0.0
    for N in range(3, 11):
        for t in (0.3, 1.0, 2.5):
            worst = max(worst, abs(exact_power_trace_covariance(N, 1, 1, t) - (1 + (N * N - 1) * math.exp(-t))))
    at_zero = limits = True
    count = 0
    for N in range(3, 11):
        for n in range(1, 6):
            for m in range(1, 7 - n):
                if N < n + m + 1:
                    continue
                const, terms = exact_cov_terms(N, n, m)
                at_zero &= const + sum(Fraction(d) for d, _ in terms) == N * N
                limits &= const == (n if n == m else 0)
                count += 1
    ok = worst <= 1e-10 and at_zero and limits
    verdict(8, "exact SU(N) power-trace covariance", ok, f"(N,1,1,t) err {worst:.1e}; {count} exact t=0 and t->inf cases")


# -------------------------------------------------------------------- 9


def test_09_mc_exact_covariance():
    rep = exact_cov_mc_check(8, 1, 1, 1.0, 4000, seed=0)
    target = 1 + 63 / math.e
    z = (rep["mc"] - target) / rep["mc_std_error"]
    ok = abs(z) <= 3 and abs(rep["mc"] - 24.1767) <= 3 * rep["mc_std_error"]
    verdict(9, "SU(8) Monte Carlo vs exact covariance", ok, f"{rep['mc']:.4f} +- {rep['mc_std_error']:.4f} vs {target:.4f}, z = {z:+.2f}")


# -------------------------------------------------------------------- 10


@pytest.mark.slow
def test_10_clt_sweep():
    fs = [FourierSeries.cos(1, 2.0), FourierSeries.sin(1, 2.0), FourierSeries.cos(2)]
    parts, ok = [], True
    for T in (0.5, 1.0, 4.0):
        rep = clt_report(BrownianConfig(64, T, 200, seed=0), fs, 4000)
        print(rep.to_text())
        ok &= rep.passed()
        parts.append(f"T={T:g}: max|z| {rep.max_abs_z:.2f}, shape {'ok' if rep.gaussian_ok() else 'off'}")
    verdict(10, "CLT at N = 64", ok, "; ".join(parts))


# -------------------------------------------------------------------- 11


def test_11_haar_moments():
    est = haar_power_moments(8, 20000, 4, seed=0)
    z = (est.value - np.arange(1, 5)) / est.std_error
    ok = bool(np.all(np.abs(z) <= 3))
    verdict(11, "Haar moments E|Tr U^p|^2 = p", ok, "z = " + ", ".join(f"{v:+.2f}" for v in z))


# -------------------------------------------------------------------- 12


def test_12_trace_identities():
    rng = np.random.default_rng(12)
    worst = 0.0
    metrics = [("full", FULL, 1.0), ("special", SPECIAL, 0.0)] + [(f"alpha {a:g}", alpha_metric(a), a) for a in (0.5, 2.0)]
    for _, metric, alpha in metrics:
        for n in (2, 5, 8):
            basis = orthonormal_basis(n, metric)
            for _ in range(100):
                A, B = random_complex(rng, n), random_complex(rng, n)
                c = alpha * alpha - 1
                coal = -(ntr(A @ B) + c * ntr(A) * ntr(B)) / n**2
                split = -(ntr(A) * ntr(B) + c * ntr(A @ B) / n**2)
                worst = max(
                    worst,
                    abs(coalescence_sum(A, B, basis) - coal) / max(1, abs(coal)),
                    abs(split_sum(A, B, basis) - split) / max(1, abs(split)),
                )
    verdict(12, "basis trace identities for every metric", worst <= 1e-12, f"max rel err {worst:.1e}")


# -------------------------------------------------------------------- 13


@pytest.mark.slow
def test_13_definitional_sigma():
    est = sigma_def_crosscheck(1.0, FourierSeries.cos(1, 2.0), 64, 500, nodes=21, seed=0)
    target = 2 - 3 / math.e
    gap = abs(est.value - target)
    detail = f"{est.value:.4f} vs {target:.4f}, gap {gap:.4f}, combined error {est.combined_error:.4f}"
    verdict(13, "definitional sigma cross-check", gap <= est.combined_error, detail)


# -------------------------------------------------------------------- 14


def _cli(capsys, *argv):
    assert cli_main(list(argv)) == 0
    return capsys.readouterr().out


def test_14_determinism(capsys):
    cfg = BrownianConfig(6, 0.7, seed=5)
    a, _ = simulate_batch(cfg, range(5, 15))
    b, _ = simulate_batch(cfg, range(5, 15))
    same = np.array_equal(a.view(np.uint8), b.view(np.uint8))
    runs = [
        ("simulate", "--N", "5", "--T", "0.5", "--samples", "20", "--traces", "3", "--seed", "9"),
        ("clt", "--N", "6", "--T", "0.5", "--samples", "100", "--functions", "cos:1", "sin:2", "--seed", "3"),
        ("exact-cov", "--N", "5", "--n", "2", "--m", "1", "--t", "0.5", "--mc", "100", "--seed", "4"),
        ("sigma", "--T", "1", "--functions", "cos:1", "sin:1", "--alpha", "0.5"),
    ]
    for argv in runs:
        same &= _cli(capsys, *argv) == _cli(capsys, *argv)
    verdict(14, "bit-identical reruns", bool(same), f"library batch plus {len(runs)} CLI commands")
