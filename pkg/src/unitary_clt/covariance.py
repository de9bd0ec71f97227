"""Test functions on the circle and the limiting covariance of their traces.

A test function is a :class:`FourierSeries` ``f(e^{it}) = sum_j a_j e^{ijt}``.
The limiting covariance of ``N tr f(U_N(T))`` and ``N tr g(U_N(T))`` is

    sigma_T(f, g) = - sum_{j,k} j k a_j(f) a_k(g) tau_{j,k}(T),

and as ``T -> infinity`` it tends to the H^{1/2} product
``sum_j |j| a_j(f) conj(a_j(g))`` of the Haar central limit theorem.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InvalidInput, InvalidParameter, NumericalFailure, TruncationError
from .free_limit import T0, TauTable, moment, tau_bound, tau_resonant_bound, tau_table

__all__ = [
    "FourierSeries",
    "CovarianceMatrix",
    "series_from_samples",
    "h_half_inner",
    "h_half_norm2",
    "sigma_T",
    "sigma_T_alpha",
    "sigma_matrix",
    "haar_limit_gap",
    "haar_limit_bound",
    "tail_certificate",
    "certified_cutoff",
    "kernel_value",
    "tau_tables",
    "FIGURE_PANELS",
    "figure_panel",
    "write_panel_csv",
]

REAL_TOL = 1e-12


@dataclass
class FourierSeries:
    """Fourier coefficients ``a_j`` of a function on the unit circle.

    ``coeffs`` holds the finitely many explicit coefficients.  A series with
    infinite support additionally carries ``tail_coeff`` (the coefficient
    function for ``|j| > cutoff``) and an ``envelope`` ``("geometric", C, rho)``
    or ``("power", C, p)`` bounding ``|a_j|`` beyond the cutoff.
    """

    coeffs: dict[int, complex] = field(default_factory=dict)
    label: str = ""
    tail_coeff: Callable[[int], complex] | None = None
    envelope: tuple | None = None

    def __post_init__(self):
        self.coeffs = {int(j): complex(a) for j, a in self.coeffs.items() if a != 0}

    @classmethod
    def constant(cls, c: float) -> "FourierSeries":
        return cls({0: c}, label=f"const:{c:g}")

    @classmethod
    def cos(cls, k: int, amplitude: float = 1.0) -> "FourierSeries":
        if k == 0:
            return cls({0: amplitude}, label=f"cos:0")
        return cls({k: amplitude / 2, -k: amplitude / 2}, label=f"cos:{k}" if amplitude == 1 else f"{amplitude:g}cos:{k}")

    @classmethod
    def sin(cls, k: int, amplitude: float = 1.0) -> "FourierSeries":
        return cls({k: -0.5j * amplitude, -k: 0.5j * amplitude}, label=f"sin:{k}" if amplitude == 1 else f"{amplitude:g}sin:{k}")

    @classmethod
    def monomial(cls, r: int, c: complex = 1.0) -> "FourierSeries":
        return cls({r: c}, label=f"z^{r}")

    @classmethod
    def infinite(cls, coeff: Callable[[int], complex], envelope: tuple, cutoff: int = 0, label: str = "") -> "FourierSeries":
        kind = envelope[0]
        if kind not in ("geometric", "power"):
            raise InvalidParameter(f"unknown envelope kind {kind!r}")
        explicit = {j: coeff(j) for j in range(-cutoff, cutoff + 1)}
        return cls(explicit, label=label, tail_coeff=coeff, envelope=tuple(envelope))

    @classmethod
    def parse(cls, text: str) -> "FourierSeries":
        """Parse ``cos:k``, ``sin:k``, ``const:c``, ``poly:j=c,...`` or ``@file.json``."""
        text = text.strip()
        try:
            if text.startswith("@"):
                with open(text[1:]) as fh:
                    data = json.load(fh)
                raw = data.get("coefficients", data) if isinstance(data, dict) else data
                coeffs = {}
                for j, v in raw.items():
                    coeffs[int(j)] = complex(*v) if isinstance(v, list) else complex(v)
                return cls(coeffs, label=text)
            kind, _, arg = text.partition(":")
            kind = kind.lower()
            if kind == "cos":
                return cls.cos(int(arg))
            if kind == "sin":
                return cls.sin(int(arg))
            if kind == "const":
                return cls.constant(float(arg))
            if kind == "poly":
                coeffs = {}
                for item in arg.split(","):
                    j, _, c = item.partition("=")
                    coeffs[int(j)] = complex(c.replace(" ", ""))
                return cls(coeffs, label=text)
        except (ValueError, TypeError, OSError) as exc:
            raise InvalidParameter(f"cannot parse function spec {text!r}: {exc}") from exc
        raise InvalidParameter(f"unknown function spec {text!r}")

    @property
    def finite(self) -> bool:
        return self.tail_coeff is None

    @property
    def degree(self) -> int:
        return max((abs(j) for j in self.coeffs), default=0)

    def a(self, j: int) -> complex:
        if j in self.coeffs:
            return self.coeffs[j]
        if self.tail_coeff is not None and abs(j) > self.degree:
            return complex(self.tail_coeff(j))
        return 0j

    def truncate(self, n: int) -> "FourierSeries":
        return FourierSeries({j: self.a(j) for j in range(-n, n + 1)}, label=self.label)

    def is_real(self, tol: float = REAL_TOL) -> bool:
        scale = max([1.0] + [abs(a) for a in self.coeffs.values()])
        return all(abs(a - np.conj(self.coeffs.get(-j, 0))) <= tol * scale for j, a in self.coeffs.items())

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=complex)
        for j, a in self.coeffs.items():
            out += a * np.exp(1j * j * theta)
        return out

    def derivative(self) -> "FourierSeries":
        """``f'(z) = d/dh f(z e^{ih})``: coefficient ``a_j -> i j a_j``."""
        return FourierSeries({j: 1j * j * a for j, a in self.coeffs.items()}, label=f"d({self.label})")

    def lipschitz_bound(self) -> float:
        return float(sum(abs(j * a) for j, a in self.coeffs.items()))

    def __add__(self, other):
        keys = set(self.coeffs) | set(other.coeffs)
        return FourierSeries({j: self.coeffs.get(j, 0) + other.coeffs.get(j, 0) for j in keys})

    def __mul__(self, c):
        return FourierSeries({j: c * a for j, a in self.coeffs.items()})

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"label": self.label, "coefficients": {str(j): [a.real, a.imag] for j, a in sorted(self.coeffs.items())}}


@dataclass
class CovarianceMatrix:
    functions: list[FourierSeries]
    T: float
    entries: np.ndarray
    alpha: float | None = None

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "alpha": self.alpha,
            "functions": [f.label for f in self.functions],
            "entries": self.entries.tolist(),
        }


def series_from_samples(values, J: int) -> FourierSeries:
    """Fourier coefficients ``a_j``, ``|j| <= J``, from ``2M`` equispaced samples."""
    values = np.asarray(values)
    if values.ndim != 1 or values.size % 2:
        raise InvalidParameter("expected an even number of equispaced samples")
    M = values.size // 2
    if M <= J:
        raise InvalidParameter(f"aliasing: {2 * M} samples cannot resolve degree {J}")
    c = np.fft.fft(values) / values.size
    coeffs = {j: c[j % values.size] for j in range(-J, J + 1)}
    if np.isrealobj(values):
        coeffs = {j: 0.5 * (coeffs[j] + np.conj(coeffs[-j])) for j in coeffs}
    scale = max(1.0, max(abs(v) for v in coeffs.values()))
    coeffs = {j: (0 if abs(v) < 1e-15 * scale else v) for j, v in coeffs.items()}
    return FourierSeries(coeffs, label="samples")


def _require_finite_h_half(f: FourierSeries):
    if not f.finite:
        kind, C, x = f.envelope
        if kind == "power" and x <= 1:
            raise DomainError("power envelope with p <= 1 does not certify an H^1/2 function")


def h_half_inner(f: FourierSeries, g: FourierSeries) -> float:
    """``sum_j |j| a_j(f) conj(a_j(g))`` on the explicit coefficients."""
    _require_finite_h_half(f)
    _require_finite_h_half(g)
    total = sum(abs(j) * a * np.conj(g.coeffs.get(j, 0)) for j, a in f.coeffs.items())
    total = complex(total)
    scale = max(1.0, abs(total))
    if abs(total.imag) > REAL_TOL * scale:
        raise NumericalFailure(f"imaginary residual {total.imag:.3e} in H^1/2 product")
    return total.real


def h_half_norm2(f: FourierSeries) -> float:
    return h_half_inner(f, f)


def _bilinear(f: FourierSeries, g: FourierSeries, table: TauTable) -> complex:
    need = f.degree + g.degree
    if need > table.J:
        raise TruncationError(f"degrees {f.degree}+{g.degree} exceed tau table cap J={table.J}")
    total = 0j
    for j, a in f.coeffs.items():
        if j == 0:
            continue
        for k, b in g.coeffs.items():
            if k != 0:
                total += j * k * a * b * table(j, k)
    return -total


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise NumericalFailure(f"imaginary residual {value.imag:.3e} in {what}")
    return value.real


def sigma_T(f: FourierSeries, g: FourierSeries, table: TauTable) -> float:
    """Limiting covariance ``sigma_T(f, g)`` using the kernel values in ``table``."""
    if not f.finite or not g.finite:
        return _sigma_infinite(f, g, table.T, table.method)
    return _real(_bilinear(f, g, table), "sigma_T")


def _derivative_mean(f: FourierSeries, T: float) -> complex:
    return sum(j * a * moment(j, T) for j, a in f.coeffs.items())


def sigma_T_alpha(f: FourierSeries, g: FourierSeries, T: float, alpha: float, table: TauTable) -> float:
    """Covariance for the alpha-Brownian motion (``alpha = 0``: SU(N)).

    ``u_s v_{T-s}`` has the law of ``u_T``, so the extra integrand is constant
    in ``s`` and integrates to ``(alpha^2 - 1) T tau(f'(u_T)) tau(g'(u_T))``.
    """
    if alpha < 0:
        raise InvalidParameter("alpha must be nonnegative")
    if table.T != T:
        raise InvalidParameter(f"table built at T={table.T}, requested T={T}")
    base = _bilinear(f, g, table)
    extra = -(alpha**2 - 1) * T * _derivative_mean(f, T) * _derivative_mean(g, T)
    return _real(base + extra, "sigma_T_alpha")


def tau_tables(J: int, times: Sequence[float], method: str = "auto", ode_steps: int = 2000) -> list[TauTable]:
    """One table per time; the ODE route reuses a single trajectory."""
    times = [float(t) for t in times]
    method_ = method
    if method == "auto":
        method_ = "exact" if J <= 16 else "ode"
    if method_ == "exact" and J <= 16:
        return [tau_table(J, t, "exact") for t in times]
    from .free_limit import _canonical, _system

    sys_ = _system(J)
    order = sorted(range(len(times)), key=lambda i: times[i])
    tmax = max(times) if times else 0.0
    out: list[TauTable | None] = [None] * len(times)
    y = np.zeros(len(sys_.pairs))
    t = 0.0
    for i in order:
        target = times[i]
        span = target - t
        if span > 0:
            n = max(1, math.ceil(ode_steps * span / tmax))
            h = span / n
            for s in range(n):
                tt = t + s * h
                k1 = sys_.rhs(tt, y)
                k2 = sys_.rhs(tt + h / 2, y + h / 2 * k1)
                k3 = sys_.rhs(tt + h / 2, y + h / 2 * k2)
                k4 = sys_.rhs(tt + h, y + h * k3)
                y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = target
        if not np.all(np.isfinite(y)):
            raise NumericalFailure("non-finite state in tau ODE integration")
        values = {}
        for (j, k), v in zip(sys_.pairs, y):
            values.setdefault(_canonical(j, k), float(v))
        out[i] = TauTable(target, J, "ode", values)
    return out


def sigma_matrix(fs: Sequence[FourierSeries], T: float, table: TauTable | None = None, alpha: float | None = None) -> CovarianceMatrix:
    """Matrix ``(sigma_T(f_i, f_j))`` (or the alpha version) for real trig polynomials."""
    fs = list(fs)
    for f in fs:
        if not f.is_real():
            raise InvalidInput(f"function {f.label or f.coeffs} is not real-valued")
    J = max(1, 2 * max((f.degree for f in fs), default=1))
    if table is None:
        table = tau_table(J, T)
    n = len(fs)
    S = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            if alpha is None:
                v = sigma_T(fs[i], fs[j], table)
            else:
                v = sigma_T_alpha(fs[i], fs[j], T, alpha, table)
            S[i, j] = S[j, i] = v + 0.0  # no negative zeros
    if n:
        floor = np.linalg.eigvalsh(S).min()
        if floor < -1e-10 * max(1.0, np.abs(S).max()):
            raise NumericalFailure(f"covariance matrix not positive semidefinite (min eigenvalue {floor:.3e})")
    return CovarianceMatrix(fs, T, S, alpha)


def tail_certificate(f: FourierSeries, n: int, T: float, box: int = 256) -> float:
    """Upper bound on the part of ``sum |j k a_j a_k tau_{j,k}(T)|`` with ``max(|j|,|k|) > n``.

    Inside the box ``|j|, |k| <= n + box`` the kernel bounds valid for ``T > 32``
    are summed term by term; outside it the declared envelope of ``f`` gives a
    crude closed-form remainder.
    """
    if T <= T0:
        raise DomainError("tail certificates need T > 32")
    if f.finite:
        return 0.0 if n >= f.degree else math.inf
    kind, C, x = f.envelope
    K = n + box
    idx = np.arange(-K, K + 1)
    A = np.abs(np.array([f.a(int(j)) for j in idx]))
    jj, kk = np.meshgrid(idx, idx, indexing="ij")
    s = np.abs(jj) + np.abs(kk)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = 4 * np.exp(-np.abs(jj + kk) * T / 4) / s + s * T0 * np.exp(-s * (T - T0) / 4)
    bound[s == 0] = 0.0
    mask = (np.maximum(np.abs(jj), np.abs(kk)) > n) & (s > 0)
    inside = float(np.sum((np.abs(jj * kk) * np.outer(A, A) * bound)[mask]))

    # outside the box: 4|jk|/(|j|+|k|) <= 2 sqrt|jk| and sum_l exp(-|l| T/4) = L
    L = (1 + math.exp(-T / 4)) / (1 - math.exp(-T / 4))
    g_sup = float(np.max(np.sqrt(np.abs(idx)) * A, initial=C))
    if kind == "geometric":
        rho = x
        if not 0 < rho < 1:
            raise InvalidParameter("geometric envelope needs 0 < rho < 1")
        g_tail = 2 * C * rho ** (K + 1) * ((K + 1) - K * rho) / (1 - rho) ** 2
    else:
        p = x
        if p <= 1.5:
            return math.inf
        g_tail = 2 * C * K ** (1.5 - p) / (p - 1.5)
    Cmax = max(float(A.max(initial=0.0)), C)
    c = (T - T0) / 4
    ss = np.arange(K + 1, K + 1 + 200000, dtype=float)
    terms = 4 * ss**4 * np.exp(-c * ss)
    second = Cmax**2 * T0 * float(terms.sum())
    if terms[-1] > 1e-300:
        second += 2 * Cmax**2 * T0 * terms[-1] / (1 - math.exp(-c))
    return inside + 4 * g_sup * L * g_tail + second


def _sigma_infinite(f: FourierSeries, g: FourierSeries, T: float, method: str = "auto", rel_tol: float = 1e-8, n_max: int = 24) -> float:
    if f is not g:
        raise InvalidParameter("infinite-support series are supported for sigma_T(f, f) only; polarize for cross terms")
    if T <= T0:
        raise DomainError("infinite-support series are admitted only for T > 32")
    n = certified_cutoff(f, T, rel_tol, n_max)
    tr = f.truncate(n)
    table = tau_table(2 * n, T, "ode" if method == "ode" else "auto")
    return _real(_bilinear(tr, tr, table), "sigma_T")


def certified_cutoff(f: FourierSeries, T: float, rel_tol: float = 1e-8, n_max: int = 24) -> int:
    """Smallest degree ``n`` whose tail certificate is below ``rel_tol * ||f_n||^2_{1/2}``."""
    for n in range(1, n_max + 1):
        norm2 = max(h_half_norm2(f.truncate(n)), 1e-300)
        if tail_certificate(f, n, T) <= rel_tol * norm2:
            return n
    raise TruncationError(f"no truncation up to degree {n_max} certifies relative error {rel_tol:g}")


def haar_limit_gap(f: FourierSeries, T: float, table: TauTable | None = None) -> float:
    """``|sigma_T(f, f) - ||f||^2_{1/2}|``."""
    if not f.finite:
        if T <= T0:
            raise DomainError("infinite-support series need T > 32")
        value = _sigma_infinite(f, f, T)
        return abs(value - h_half_norm2(f.truncate(certified_cutoff(f, T))))
    if table is None:
        table = tau_table(max(1, 2 * f.degree), T)
    return abs(sigma_T(f, f, table) - h_half_norm2(f))


def haar_limit_bound(f: FourierSeries, T: float) -> float:
    """Bound on ``haar_limit_gap`` for a trig polynomial from the large-time kernel decay bounds."""
    if T < T0:
        raise DomainError("kernel decay bounds hold only for T >= 32")
    if not f.finite:
        raise InvalidParameter("haar_limit_bound takes a trigonometric polynomial")
    total = 0.0
    for j, a in f.coeffs.items():
        for k, b in f.coeffs.items():
            if j and k:
                w = abs(j * k * a * b)
                total += w * (tau_resonant_bound(j, T) if j + k == 0 else tau_bound(j, k, T))
    return total


def kernel_value(theta: float, phi: float, T: float, J: int, table: TauTable | None = None) -> float:
    """Truncated kernel ``sum_{0 < |j|+|k|, |j|,|k| <= J} e^{ij theta} e^{ik phi} tau_{j,k}(T)``."""
    if T <= T0:
        raise DomainError("the kernel is defined for T > 32")
    if table is None:
        table = tau_table(2 * J, T)
    total = 0j
    for j in range(-J, J + 1):
        for k in range(-J, J + 1):
            if j or k:
                total += cmath.exp(1j * (j * theta + k * phi)) * table(j, k)
    return _real(total, "kernel_value")


FIGURE_PANELS = {
    "sigma_sk_ck": [(f"s{k},s{k}", ("sin", k), ("sin", k)) for k in range(1, 9)]
    + [(f"c{k},c{k}", ("cos", k), ("cos", k)) for k in range(1, 9)],
    "moments": [(f"mu{k}", k) for k in range(1, 7)],
    "sigma_sk_sk1": [(f"s{k},s{k + 1}", ("sin", k), ("sin", k + 1)) for k in range(1, 16)],
    "sigma_ck_ck1": [(f"c{k},c{k + 1}", ("cos", k), ("cos", k + 1)) for k in range(1, 16)],
    "sigma_sk_sk3": [(f"s{k},s{k + 3}", ("sin", k), ("sin", k + 3)) for k in (1, 4, 7, 10, 13)],
    "sigma_sk_sk2": [(f"s{k},s{k + 2}", ("sin", k), ("sin", k + 2)) for k in range(1, 14, 2)],
}


def _fn(spec):
    kind, k = spec
    return FourierSeries.sin(k) if kind == "sin" else FourierSeries.cos(k)


def figure_panel(name: str, times: Sequence[float], tables: Sequence[TauTable] | None = None) -> list[tuple[float, str, float]]:
    """Rows ``(T, label, value)`` for one panel of the covariance figure."""
    if name not in FIGURE_PANELS:
        raise InvalidParameter(f"unknown panel {name!r}; choose from {sorted(FIGURE_PANELS)}")
    rows = []
    if name == "moments":
        for t in times:
            for label, k in FIGURE_PANELS[name]:
                rows.append((float(t), label, moment(k, t)))
        return rows
    if tables is None:
        tables = tau_tables(32, times)
    for t, table in zip(times, tables):
        for label, a, b in FIGURE_PANELS[name]:
            rows.append((float(t), label, sigma_T(_fn(a), _fn(b), table)))
    return rows


def write_panel_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "label", "value"])
        for t, label, v in rows:
            w.writerow([repr(t), label, f"{v + 0.0:.17g}"])
