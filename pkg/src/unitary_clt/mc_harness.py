"""Monte Carlo estimation around the unitary Brownian motion.

Sample ``i`` of a run is always driven by ``default_rng(seed + i)``, so an
estimate depends only on ``(config, seed, M)``: neither the chunking nor the
number of worker processes changes a single bit of the output.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .covariance import CovarianceMatrix, FourierSeries, sigma_matrix
from .errors import InvalidInput, InvalidParameter, NumericalFailure, StatisticsError
from .matrix_core import FULL, SPECIAL, Metric
from .symcomb import exact_power_trace_covariance, literal_power_trace_covariance
from .unitary_bm import BrownianConfig, default_steps, power_traces_batch, simulate_batch

__all__ = [
    "MCEstimate",
    "TraceEstimate",
    "CLTReport",
    "estimate_traces",
    "clt_report",
    "sample_haar",
    "haar_power_moments",
    "variance_bound_check",
    "variance_bound_report",
    "SigmaDefEstimate",
    "sigma_def_crosscheck",
    "exact_cov_mc_check",
    "jackknife_covariance",
]

MIN_SAMPLES = 100
CHUNK = 50


@dataclass
class MCEstimate:
    value: np.ndarray | float
    std_error: np.ndarray | float
    samples: int

    def __post_init__(self):
        if self.samples < 2:
            raise StatisticsError("an estimate needs at least 2 samples")

    def to_dict(self) -> dict:
        return {"value": _jsonable(self.value), "std_error": _jsonable(self.std_error), "samples": int(self.samples)}


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


# ---------------------------------------------------------------- statistics


def jackknife_covariance(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample covariance of the rows of ``X`` and its delete-one jackknife SE.

    The leave-one-out scatter matrix is ``S - M/(M-1) d_i d_i^T`` with
    ``d_i`` the centered row, so all ``M`` replicates cost one pass.
    """
    X = np.asarray(X, dtype=float)
    M = X.shape[0]
    if M < 3:
        raise StatisticsError("jackknife covariance needs at least 3 samples")
    D = X - X.mean(axis=0)
    S = D.T @ D
    cov = S / (M - 1)
    outer = np.einsum("ia,ib->iab", D, D)
    reps = (S[None] - M / (M - 1) * outer) / (M - 2)
    dev = reps - reps.mean(axis=0)
    se = np.sqrt((M - 1) / M * np.sum(dev**2, axis=0))
    return cov, se


def _shape_moments(x: np.ndarray):
    """Sample skewness, excess kurtosis and their standard errors under normality."""
    M = len(x)
    d = x - x.mean()
    m2 = np.mean(d**2)
    se_skew = math.sqrt(6.0 * M * (M - 1) / ((M - 2) * (M + 1) * (M + 3)))
    se_kurt = 2.0 * se_skew * math.sqrt((M * M - 1.0) / ((M - 3) * (M + 5)))
    if m2 == 0:
        return 0.0, se_skew, 0.0, se_kurt
    skew = float(np.mean(d**3) / m2**1.5)
    kurt = float(np.mean(d**4) / m2**2 - 3.0)
    return skew, se_skew, kurt, se_kurt


def _z(diff, se):
    diff = np.asarray(diff, dtype=float)
    se = np.asarray(se, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))
    return z


# ---------------------------------------------------------------- trace sampling


def _trace_values(U: np.ndarray, fs: Sequence[FourierSeries]) -> np.ndarray:
    jmax = max((f.degree for f in fs), default=0)
    P = power_traces_batch(U, max(jmax, 1))
    out = np.empty((U.shape[0], len(fs)))
    for c, f in enumerate(fs):
        acc = np.zeros(U.shape[0], dtype=complex)
        for j, a in f.coeffs.items():
            acc += a * (P[:, j] if j >= 0 else np.conj(P[:, -j]))
        if np.max(np.abs(acc.imag), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(acc.real), initial=0.0)):
            raise NumericalFailure("imaginary residual in a real trace functional")
        out[:, c] = acc.real
    return out


def _trace_chunk(cfg: BrownianConfig, fs, seeds):
    finals, _ = simulate_batch(cfg, seeds)
    return _trace_values(finals, fs)


def _map_chunks(fn, args_list, workers: int):
    if workers <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args_list)))


def _seed_chunks(base: int, M: int):
    return [list(range(base + s, base + min(s + CHUNK, M))) for s in range(0, M, CHUNK)]


def sample_traces(cfg: BrownianConfig, fs: Sequence[FourierSeries], M: int, workers: int = 1) -> np.ndarray:
    """``(M, len(fs))`` array of ``tr f_i(U(T))``; row ``s`` uses seed ``cfg.seed + s``."""
    for f in fs:
        if not f.finite or not f.is_real():
            raise InvalidInput("trace sampling needs real trigonometric polynomials")
    chunks = _seed_chunks(cfg.seed, M)
    parts = _map_chunks(_trace_chunk, [(cfg, list(fs), c) for c in chunks], workers)
    return np.concatenate(parts, axis=0)


@dataclass
class TraceEstimate:
    """Mean of ``tr f_i`` and covariance of ``N (tr f_i - mean)``."""

    mean: MCEstimate
    cov: MCEstimate
    values: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"mean": self.mean.to_dict(), "cov": self.cov.to_dict()}


def estimate_traces(cfg: BrownianConfig, fs: Sequence[FourierSeries], M: int, workers: int = 1) -> TraceEstimate:
    if M < MIN_SAMPLES:
        raise StatisticsError(f"need at least {MIN_SAMPLES} samples, got {M}")
    X = sample_traces(cfg, fs, M, workers)
    mean = X.mean(axis=0)
    mean_se = X.std(axis=0, ddof=1) / math.sqrt(M)
    cov, cov_se = jackknife_covariance(cfg.n * X)
    return TraceEstimate(MCEstimate(mean, mean_se, M), MCEstimate(cov, cov_se, M), X)


@dataclass
class CLTReport:
    config: BrownianConfig
    functions: list[FourierSeries]
    empirical: TraceEstimate
    target: CovarianceMatrix
    z_scores: np.ndarray
    skewness: np.ndarray
    skewness_se: np.ndarray
    excess_kurtosis: np.ndarray
    kurtosis_se: np.ndarray

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z_scores), initial=0.0))

    def gaussian_ok(self, k: float = 3.0) -> bool:
        return bool(np.all(np.abs(self.skewness) <= k * self.skewness_se) and np.all(np.abs(self.excess_kurtosis) <= k * self.kurtosis_se))

    def passed(self, k: float = 3.0) -> bool:
        return self.max_abs_z <= k and self.gaussian_ok(k)

    def to_dict(self) -> dict:
        return {
            "config": self.config.as_dict(),
            "functions": [f.to_dict() for f in self.functions],
            "mean": self.empirical.mean.to_dict(),
            "empirical_cov": self.empirical.cov.to_dict(),
            "target_cov": self.target.to_dict(),
            "z_scores": self.z_scores.tolist(),
            "max_abs_z": self.max_abs_z,
            "skewness": self.skewness.tolist(),
            "skewness_se": self.skewness_se.tolist(),
            "excess_kurtosis": self.excess_kurtosis.tolist(),
            "excess_kurtosis_se": self.kurtosis_se.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        c = self.config
        lines = [
            f"CLT report: N={c.n} T={c.T:g} steps={c.steps} metric={c.metric.label} seed={c.seed} M={self.empirical.cov.samples}",
        ]
        labels = [f.label or f"f{i}" for i, f in enumerate(self.functions)]
        for a, la in enumerate(labels):
            for b in range(a, len(labels)):
                emp = self.empirical.cov.value[a, b]
                se = self.empirical.cov.std_error[a, b]
                lines.append(
                    f"  cov({la}, {labels[b]}): empirical {emp:.6g} +- {se:.2g}  target {self.target.entries[a, b]:.6g}  z {self.z_scores[a, b]:+.2f}"
                )
        for a, la in enumerate(labels):
            lines.append(
                f"  {la}: skewness {self.skewness[a]:+.4f} (SE {self.skewness_se[a]:.4f})  "
                f"excess kurtosis {self.excess_kurtosis[a]:+.4f} (SE {self.kurtosis_se[a]:.4f})"
            )
        lines.append(f"  max |z| = {self.max_abs_z:.3f}; {'PASS' if self.passed() else 'FAIL'}")
        return "\n".join(lines)


def _target_alpha(metric: Metric) -> float | None:
    if metric.variant == "full":
        return None
    if metric.variant == "special":
        return 0.0
    return metric.alpha


def clt_report(cfg: BrownianConfig, fs: Sequence[FourierSeries], M: int, workers: int = 1) -> CLTReport:
    """Compare the empirical covariance of ``N tr f_i`` with the limiting matrix."""
    fs = list(fs)
    est = estimate_traces(cfg, fs, M, workers)
    target = sigma_matrix(fs, cfg.T, alpha=_target_alpha(cfg.metric))
    z = _z(est.cov.value - target.entries, est.cov.std_error)
    stats = [_shape_moments(est.values[:, i]) for i in range(len(fs))]
    arr = np.array(stats).reshape(len(fs), 4)
    return CLTReport(cfg, fs, est, target, z, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


# ---------------------------------------------------------------- Haar measure


def sample_haar(N: int, rng: np.random.Generator, retries: int = 5) -> np.ndarray:
    """Haar unitary: modified Gram-Schmidt on a complex Ginibre matrix.

    Columns are orthogonalized twice; each column of ``Q`` is scaled so that
    the corresponding diagonal entry of ``R`` is positive.
    """
    if N < 1:
        raise InvalidParameter("N must be >= 1")
    for _ in range(retries):
        Z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
        Q = np.empty_like(Z)
        ok = True
        for k in range(N):
            v = Z[:, k].copy()
            for _pass in range(2):
                for i in range(k):
                    v -= (Q[:, i].conj() @ v) * Q[:, i]
            r = np.linalg.norm(v)
            if not r > 1e-10 * max(1.0, np.linalg.norm(Z[:, k])):
                ok = False
                break
            # r is real positive, so this is already the phase-corrected column
            Q[:, k] = v / r
        if ok:
            return Q
    raise NumericalFailure("degenerate Ginibre draws in sample_haar")


def haar_power_moments(N: int, M: int, pmax: int, seed: int = 0) -> MCEstimate:
    """``E|Tr U^p|^2`` (unnormalized trace), ``p = 1..pmax``, under Haar measure."""
    if M < 2:
        raise StatisticsError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    vals = np.empty((M, pmax))
    for s in range(M):
        U = sample_haar(N, rng)
        tr = N * power_traces_batch(U, pmax)[1:]
        vals[s] = np.abs(tr) ** 2
    return MCEstimate(vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(M), M)


# ---------------------------------------------------------------- variance bound


def variance_bound_report(cfg: BrownianConfig, f: FourierSeries, M: int, workers: int = 1) -> dict:
    """Empirical ``Var tr f(U(T))`` against ``T (sum |j a_j|)^2 / N^2``."""
    X = sample_traces(cfg, [f], M, workers)
    var, se = jackknife_covariance(X)
    bound = cfg.T * f.lipschitz_bound() ** 2 / cfg.n**2
    v, s = float(var[0, 0]), float(se[0, 0])
    return {"variance": v, "std_error": s, "bound": bound, "ok": v <= bound + 3 * s}


def variance_bound_check(cfg: BrownianConfig, f: FourierSeries, M: int, workers: int = 1) -> bool:
    return bool(variance_bound_report(cfg, f, M, workers)["ok"])


# ---------------------------------------------------------------- definitional cross-check


def _matrix_function(X: np.ndarray, coeffs: dict[int, complex]) -> np.ndarray:
    """``sum_j c_j X^j`` for a batch of unitaries (negative powers via adjoints)."""
    n = X.shape[-1]
    deg = max((abs(j) for j in coeffs), default=0)
    out = np.zeros(X.shape, dtype=complex)
    if 0 in coeffs:
        out += coeffs[0] * np.eye(n)
    P = X
    for j in range(1, deg + 1):
        if j > 1:
            P = P @ X
        if j in coeffs:
            out += coeffs[j] * P
        if -j in coeffs:
            out += coeffs[-j] * np.conj(np.swapaxes(P, -1, -2))
    return out


def _def_chunk(T, n, steps, grid, dcoeffs, seeds):
    cfg = BrownianConfig(n, T, steps, FULL)
    times = list(grid)
    _, su = simulate_batch(cfg, [3 * s for s in seeds], times)
    _, sv = simulate_batch(cfg, [3 * s + 1 for s in seeds], times)
    _, sw = simulate_batch(cfg, [3 * s + 2 for s in seeds], times)
    node = len(times)
    out = np.empty((len(seeds), node))
    for i in range(node):
        U = su[i][1]
        V = sv[node - 1 - i][1]
        W = sw[node - 1 - i][1]
        A = _matrix_function(U @ V, dcoeffs)
        B = _matrix_function(U @ W, dcoeffs)
        out[:, i] = np.real(np.einsum("bij,bji->b", A, B)) / n
    return out


def _trapezoid(y: np.ndarray, h: float) -> np.ndarray:
    return h * (y[..., 0] / 2 + y[..., 1:-1].sum(axis=-1) + y[..., -1] / 2)


@dataclass
class SigmaDefEstimate(MCEstimate):
    quadrature_error: float = 0.0

    @property
    def combined_error(self) -> float:
        return 3.0 * float(self.std_error) + self.quadrature_error

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(quadrature_error=self.quadrature_error, combined_error=self.combined_error)
        return d


def sigma_def_crosscheck(
    T: float, f: FourierSeries, N: int, M: int, nodes: int = 21, seed: int = 0, workers: int = 1
) -> SigmaDefEstimate:
    """Estimate ``sigma_T(f, f)`` straight from its three-process definition.

    For each sample an independent triple ``(U, V, W)`` of Brownian paths is
    simulated once; node ``s`` of the grid uses ``U(s)``, ``V(T - s)`` and
    ``W(T - s)``.  Each sample's trapezoid integral is an i.i.d. draw, so the
    SE is taken across samples.  The quadrature error is the Richardson
    estimate ``|I_h - I_2h| / 3`` (``nodes - 1`` must be even).
    """
    if N < 32 or M < 2 or nodes < 3 or (nodes - 1) % 2:
        raise InvalidParameter("need N >= 32, M >= 2 and an odd number of nodes >= 3")
    if not f.finite or not f.is_real():
        raise InvalidInput("sigma_def_crosscheck needs a real trigonometric polynomial")
    if T == 0:
        return SigmaDefEstimate(0.0, 0.0, M, 0.0)
    steps = default_steps(T)
    steps = (nodes - 1) * math.ceil(steps / (nodes - 1))
    grid = [T * i / (nodes - 1) for i in range(nodes)]
    dcoeffs = f.derivative().coeffs
    chunks = _seed_chunks(seed, M)
    parts = _map_chunks(_def_chunk, [(T, N, steps, grid, dcoeffs, c) for c in chunks], workers)
    Y = np.concatenate(parts, axis=0)
    h = T / (nodes - 1)
    fine = _trapezoid(Y, h)
    coarse = _trapezoid(Y[:, ::2], 2 * h)
    value = float(fine.mean())
    se = float(fine.std(ddof=1) / math.sqrt(M))
    quad = abs(value - float(coarse.mean())) / 3.0
    return SigmaDefEstimate(value, se, M, quad)


# ---------------------------------------------------------------- exact SU(N) covariance


def _power_chunk(cfg, n, m, seeds):
    finals, _ = simulate_batch(cfg, seeds)
    P = cfg.n * power_traces_batch(finals, max(n, m))
    return np.real(P[:, n] * np.conj(P[:, m]))


def exact_cov_mc_check(N: int, n: int, m: int, t: float, M: int, seed: int = 0, steps: int | None = None, workers: int = 1) -> dict:
    """Score the composed and literal exact values against an SU(N) simulation."""
    composed = exact_power_trace_covariance(N, n, m, t)
    literal = literal_power_trace_covariance(N, n, m, t)
    if M < 2:
        raise StatisticsError("need at least 2 samples")
    cfg = BrownianConfig(N, t, steps, SPECIAL, seed)
    parts = _map_chunks(_power_chunk, [(cfg, n, m, c) for c in _seed_chunks(seed, M)], workers)
    x = np.concatenate(parts)
    est = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(M))
    z_c = float(_z(est - composed, se))
    z_l = float(_z(est - literal, se))
    return {
        "N": N,
        "n": n,
        "m": m,
        "t": t,
        "steps": cfg.steps,
        "seed": seed,
        "samples": M,
        "mc": est,
        "mc_std_error": se,
        "composed": composed,
        "literal": literal,
        "z_composed": z_c,
        "z_literal": z_l,
        "composed_ok": abs(z_c) <= 3,
        "literal_ok": abs(z_l) <= 3,
    }
