"""Brownian motion on U(n), SU(n) and the alpha-deformed unitary groups.

Paths are generated by the geometric (Lie-Euler) scheme

    U <- U exp(dK),

where ``dK`` is the Gaussian increment of the Lie-algebra Brownian motion
over one step.  The Ito drift ``-U dt / 2`` of the SDE (``-(1 - 1/n^2) V dt/2``
on SU(n), ``-(1 + (a^2 - 1)/n^2) V dt / 2`` for the alpha variant) equals
``U * sum_k X_k^2 / 2`` over an orthonormal basis, which is exactly the
second-order term of ``E[exp(dK)]``.  The exponential map therefore carries
the drift and no explicit drift term is added.  For the alpha variant the
scalar part ``i a dB / n`` commutes with everything, so accumulating it
inside the increments is the same as multiplying ``V(t)`` by
``exp(i a B_t / n)``.

Each sample path owns its random stream ``default_rng(seed)``; batches of
paths are advanced together so that numpy can vectorize the eigensolves,
but the numbers drawn for a path do not depend on the batch it sits in.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInput, InvalidParameter, NumericalFailure
from .matrix_core import (
    FULL,
    Metric,
    expm_antihermitian,
    hermitian_eig,
    increments_from_normals,
    n_normals,
)

__all__ = [
    "BrownianConfig",
    "UnitarySample",
    "default_steps",
    "simulate_path",
    "simulate_batch",
    "power_traces",
    "power_traces_batch",
    "trace_function",
    "unitary_eigenangles",
    "write_snapshots_csv",
]

UNITARY_TOL = 1e-8


def default_steps(T: float) -> int:
    return max(200, math.ceil(200 * T))


@dataclass(frozen=True)
class BrownianConfig:
    n: int
    T: float
    steps: int | None = None
    metric: Metric = FULL
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InvalidParameter(f"n must be a positive integer, got {self.n!r}")
        if not (self.T >= 0 and math.isfinite(self.T)):
            raise InvalidParameter(f"T must be a finite nonnegative real, got {self.T!r}")
        if self.steps is None:
            object.__setattr__(self, "steps", default_steps(self.T))
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
            raise InvalidParameter(f"steps must be a positive integer, got {self.steps!r}")

    @property
    def dt(self) -> float:
        return self.T / self.steps

    def as_dict(self) -> dict:
        return {
            "n": int(self.n),
            "T": float(self.T),
            "steps": int(self.steps),
            "variant": self.metric.variant,
            "alpha": float(self.metric.alpha),
            "seed": int(self.seed),
        }


@dataclass
class UnitarySample:
    final: np.ndarray
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)


def _snapshot_steps(cfg: BrownianConfig, times: Sequence[float]) -> dict[int, float]:
    out = {}
    for t in times:
        if not 0 <= t <= cfg.T + 1e-12:
            raise InvalidParameter(f"snapshot time {t} outside [0, {cfg.T}]")
        k = 0 if cfg.T == 0 else int(round(t / cfg.dt))
        if cfg.T > 0 and abs(k * cfg.dt - t) > 1e-9 * max(1.0, cfg.T):
            raise InvalidParameter(f"snapshot time {t} is not on the step grid")
        out[k] = t
    return out


def simulate_batch(cfg: BrownianConfig, seeds: Sequence[int], snapshot_times: Sequence[float] = ()):
    """Simulate one path per seed.

    Returns ``(finals, snaps)`` with ``finals`` of shape ``(len(seeds), n, n)``
    and ``snaps`` a list of ``(time, array of shape (len(seeds), n, n))``.
    """
    n, steps, dt = cfg.n, cfg.steps, cfg.dt
    rngs = [np.random.default_rng(int(s)) for s in seeds]
    B = len(rngs)
    U = np.broadcast_to(np.eye(n, dtype=complex), (B, n, n)).copy()
    wanted = _snapshot_steps(cfg, snapshot_times)
    snaps = []
    if 0 in wanted:
        snaps.append((wanted[0], U.copy()))
    if cfg.T == 0:
        return U, snaps
    k = n_normals(n, cfg.metric)
    z = np.empty((B, k))
    for step in range(1, steps + 1):
        for b, rng in enumerate(rngs):
            z[b] = rng.standard_normal(k)
        dK = increments_from_normals(z, n, dt, cfg.metric)
        U = U @ expm_antihermitian(dK, check=False)
        if step in wanted:
            snaps.append((wanted[step], U.copy()))
    if not np.all(np.isfinite(U)):
        raise NumericalFailure("non-finite entries in simulated path")
    return U, snaps


def simulate_path(cfg: BrownianConfig, snapshot_times: Sequence[float] = ()) -> UnitarySample:
    """Simulate a single path seeded by ``cfg.seed``."""
    finals, snaps = simulate_batch(cfg, [cfg.seed], snapshot_times)
    return UnitarySample(finals[0], [(t, M[0]) for t, M in snaps])


def _check_unitary(U, tol=UNITARY_TOL):
    n = U.shape[-1]
    err = np.max(np.abs(np.conj(np.swapaxes(U, -1, -2)) @ U - np.eye(n)), initial=0.0)
    if not err <= tol:
        raise InvalidInput(f"matrix is not unitary (max |U*U - I| = {err:.3e})")


def power_traces_batch(U, jmax: int) -> np.ndarray:
    """``tr(U^j)`` for ``j = 0..jmax`` on a stack; shape ``(..., jmax + 1)``."""
    U = np.asarray(U, dtype=complex)
    out = np.empty(U.shape[:-2] + (jmax + 1,), dtype=complex)
    out[..., 0] = 1.0
    P = U
    for j in range(1, jmax + 1):
        out[..., j] = np.trace(P, axis1=-2, axis2=-1) / U.shape[-1]
        if j < jmax:
            P = P @ U
    return out


def power_traces(U, jmax: int, check: bool = True) -> dict[int, complex]:
    """Map ``j -> tr(U^j)`` (normalized trace) for ``-jmax <= j <= jmax``."""
    if jmax < 0:
        raise InvalidParameter("jmax must be nonnegative")
    U = np.asarray(U, dtype=complex)
    if check:
        _check_unitary(U)
    pos = power_traces_batch(U, jmax)
    out = {0: complex(1.0)}
    for j in range(1, jmax + 1):
        out[j] = complex(pos[j])
        out[-j] = complex(np.conj(pos[j]))
    return out


def trace_function(U, f, check: bool = True) -> float:
    """``tr f(U)`` for a real trigonometric polynomial ``f`` (a FourierSeries)."""
    if not f.is_real():
        raise InvalidInput("trace_function requires a real-valued Fourier series")
    traces = power_traces(U, f.degree, check=check)
    value = sum(a * traces[j] for j, a in f.coeffs.items())
    value = complex(value)
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise NumericalFailure(f"imaginary residual {value.imag:.3e} in trace_function")
    return value.real


def unitary_eigenangles(U, method: str = "lapack") -> np.ndarray:
    """Sorted eigenangles in ``(-pi, pi]``.

    The commuting Hermitian pair ``A = (U + U*)/2``, ``S = (U - U*)/(2i)`` is
    diagonalized jointly through the generic combination ``A + g S``; the
    angles are then read off ``V* U V``.
    """
    U = np.asarray(U, dtype=complex)
    _check_unitary(U)
    A = 0.5 * (U + U.conj().T)
    S = (U - U.conj().T) / 2j
    g = 0.6180339887498949
    _, V = hermitian_eig(A + g * S, method=method)
    D = V.conj().T @ U @ V
    theta = np.angle(np.diag(D))
    theta[theta <= -np.pi] = np.pi
    # degenerate eigenvalues of A + gS can leave small off-diagonal residue
    if np.max(np.abs(D - np.diag(np.diag(D))), initial=0.0) > 1e-6:
        raise NumericalFailure("joint diagonalization failed to separate the spectrum")
    return np.sort(theta)


def write_snapshots_csv(sample: UnitarySample, path) -> None:
    """Dump snapshots as rows ``time, re_00, im_00, re_01, ...``."""
    rows = sample.snapshots or []
    if not rows:
        raise InvalidParameter("sample has no snapshots")
    n = rows[0][1].shape[0]
    header = ["time"]
    for a in range(n):
        for b in range(n):
            header += [f"re_{a}_{b}", f"im_{a}_{b}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, M in rows:
            flat = []
            for x in M.ravel():
                flat += [repr(float(x.real)), repr(float(x.imag))]
            w.writerow([repr(float(t))] + flat)
