"""Moments of the free unitary Brownian motion and the covariance kernel tau.

``mu_k(T) = exp(-|k| T / 2) P_|k|(T)`` with an explicit polynomial ``P_k``.
The kernel ``tau_{j,k}(T)`` solves a triangular linear ODE system driven by
the moments; it is computed two independent ways:

* ``exact``: ``tau_{j,k}(T) = 1{j != 0} delta_{j+k,0} / |j| + exp(-(|j|+|k|)T/2) R_{j,k}(T)``
  where the polynomials ``R_{j,k}`` are integrated term by term in rational
  arithmetic;
* ``ode``: classical fourth-order Runge-Kutta on the ODE system itself.

For resonant pairs (``j + k == 0``) the polynomial recursion needs
``R_{j,-j}(0) = -1/|j|`` so that ``tau_{j,-j}(0) = 0``; with ``R(0) = 0`` the
two routes would disagree.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import DomainError, InvalidParameter, NumericalFailure, TruncationError

__all__ = [
    "RationalPolynomial",
    "TauTable",
    "EXACT_CAP",
    "moment",
    "moment_polynomial",
    "tau_polynomials",
    "tau_exact",
    "tau_table",
    "pairs_up_to",
    "moment_bound_check",
    "moment_bound_T0",
    "tau_bound",
    "tau_resonant_bound",
    "tau_bound_check",
]

EXACT_CAP = 16
T0 = 32.0


class RationalPolynomial:
    """Polynomial with ``Fraction`` coefficients in ascending degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def constant(cls, c) -> "RationalPolynomial":
        return cls([c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other):
        if not isinstance(other, RationalPolynomial):
            other = RationalPolynomial.constant(other)
        a, b = self.coeffs, other.coeffs
        m = max(len(a), len(b))
        return RationalPolynomial(
            (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(m)
        )

    __radd__ = __add__

    def __neg__(self):
        return RationalPolynomial(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, RationalPolynomial) else -Fraction(other))

    def __mul__(self, other):
        if not isinstance(other, RationalPolynomial):
            f = Fraction(other)
            return RationalPolynomial(c * f for c in self.coeffs)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return RationalPolynomial()
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return RationalPolynomial(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, RationalPolynomial):
            other = RationalPolynomial.constant(other)
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def antiderivative(self, constant=0) -> "RationalPolynomial":
        return RationalPolynomial([Fraction(constant)] + [c / (i + 1) for i, c in enumerate(self.coeffs)])

    def derivative(self) -> "RationalPolynomial":
        return RationalPolynomial(i * c for i, c in enumerate(self.coeffs) if i > 0)

    def __call__(self, x):
        """Horner evaluation; exact for ``Fraction``/``int`` arguments."""
        acc = Fraction(0) if isinstance(x, (Fraction, int)) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + (c if isinstance(acc, Fraction) else float(c))
        return acc

    def exact_at(self, x: float) -> Fraction:
        return self(Fraction(x))

    def __repr__(self):
        if not self.coeffs:
            return "RationalPolynomial(0)"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}" if i == 0 else f"({c})*T^{i}")
        return "RationalPolynomial(" + " + ".join(terms) + ")"


@lru_cache(maxsize=None)
def moment_polynomial(k: int) -> RationalPolynomial:
    """``P_k`` with ``mu_k(T) = exp(-kT/2) P_k(T)``; ``P_{-k} = P_k``."""
    k = abs(int(k))
    if k == 0:
        return RationalPolynomial([1])
    coeffs = []
    for l in range(k):
        coeffs.append(Fraction((-1) ** l * math.comb(k, l + 1)) * Fraction(k) ** (l - 1) / math.factorial(l))
    return RationalPolynomial(coeffs)


def moment(k: int, T: float) -> float:
    """``mu_k(T)``, the k-th moment of the free unitary Brownian motion at time T."""
    k = abs(int(k))
    if k == 0:
        return 1.0
    return math.exp(-k * T / 2) * float(moment_polynomial(k).exact_at(T))


def pairs_up_to(J: int) -> list[tuple[int, int]]:
    """All ``(j, k)`` with ``|j| + |k| <= J`` sorted by ``|j| + |k|``."""
    out = []
    for s in range(J + 1):
        for j in range(-s, s + 1):
            r = s - abs(j)
            out.extend({(j, r), (j, -r)})
    out.sort(key=lambda p: (abs(p[0]) + abs(p[1]), p))
    return out


def _sgn(x: int) -> int:
    return (x > 0) - (x < 0)


_R_CACHE: dict[tuple[int, int], RationalPolynomial] = {}


def _R(j: int, k: int) -> RationalPolynomial:
    key = (j, k)
    if key in _R_CACHE:
        return _R_CACHE[key]
    rhs = moment_polynomial(j + k) if j * k >= 0 else RationalPolynomial()
    aj, ak = abs(j), abs(k)
    for l in range(1, aj):
        rhs = rhs - moment_polynomial(l) * _R(_sgn(j) * (aj - l), k) * (aj - l)
    for m in range(1, ak):
        rhs = rhs - moment_polynomial(m) * _R(j, _sgn(k) * (ak - m)) * (ak - m)
    initial = Fraction(-1, aj) if (j != 0 and j + k == 0) else Fraction(0)
    poly = rhs.antiderivative(initial)
    _R_CACHE[key] = poly
    return poly


def tau_polynomials(J: int) -> dict[tuple[int, int], RationalPolynomial]:
    """The polynomials ``R_{j,k}`` for every pair with ``|j| + |k| <= J``."""
    if J < 1:
        raise InvalidParameter("J must be >= 1")
    return {p: _R(*p) for p in pairs_up_to(J)}


def tau_exact(j: int, k: int, T: float) -> float:
    """``tau_{j,k}(T)`` from the closed polynomial form (no table)."""
    R = _R(j, k)
    const = 1.0 / abs(j) if (j != 0 and j + k == 0) else 0.0
    s = (abs(j) + abs(k)) / 2
    return const + math.exp(-s * T) * float(R.exact_at(T))


def _canonical(j: int, k: int) -> tuple[int, int]:
    return max((j, k), (k, j), (-j, -k), (-k, -j))


@dataclass
class TauTable:
    T: float
    J: int
    method: str
    values: dict[tuple[int, int], float] = field(default_factory=dict)

    def __call__(self, j: int, k: int) -> float:
        if abs(j) + abs(k) > self.J:
            raise TruncationError(f"tau_({j},{k}) outside table cap J={self.J}")
        return self.values[_canonical(j, k)]

    get = __call__

    def to_dict(self) -> dict:
        entries = [[j, k, self.values[(j, k)]] for (j, k) in sorted(self.values)]
        return {"T": self.T, "J": self.J, "method": self.method, "entries": entries}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "TauTable":
        values = {_canonical(int(j), int(k)): float(v) for j, k, v in d["entries"]}
        return cls(float(d["T"]), int(d["J"]), str(d["method"]), values)

    @classmethod
    def from_json(cls, text: str) -> "TauTable":
        return cls.from_dict(json.loads(text))


class _TauSystem:
    """Sparse form of the triangular ODE for all pairs ``|j| + |k| <= J``."""

    def __init__(self, J: int):
        self.J = J
        self.pairs = pairs_up_to(J)
        index = {p: i for i, p in enumerate(self.pairs)}
        self.mu_index = np.array([abs(j + k) for j, k in self.pairs])
        self.rate = np.array([(abs(j) + abs(k)) / 2 for j, k in self.pairs])
        rows, cols, weights, ls = [], [], [], []
        for i, (j, k) in enumerate(self.pairs):
            aj, ak = abs(j), abs(k)
            for l in range(1, aj):
                rows.append(i)
                cols.append(index[(_sgn(j) * (aj - l), k)])
                weights.append(aj - l)
                ls.append(l)
            for m in range(1, ak):
                rows.append(i)
                cols.append(index[(j, _sgn(k) * (ak - m))])
                weights.append(ak - m)
                ls.append(m)
        self.rows = np.array(rows, dtype=int)
        self.cols = np.array(cols, dtype=int)
        self.weights = np.array(weights, dtype=float)
        self.ls = np.array(ls, dtype=int)
        self.P = [np.array([float(c) for c in reversed(moment_polynomial(l).coeffs)]) for l in range(J + 1)]

    def moments(self, T: float) -> np.ndarray:
        return np.array([math.exp(-l * T / 2) * np.polyval(self.P[l], T) for l in range(self.J + 1)])

    def rhs(self, T: float, tau: np.ndarray) -> np.ndarray:
        mu = self.moments(T)
        coupling = np.bincount(
            self.rows, weights=self.weights * mu[self.ls] * tau[self.cols], minlength=len(self.pairs)
        )
        return mu[self.mu_index] - self.rate * tau - coupling

    def integrate(self, T: float, steps: int) -> np.ndarray:
        y = np.zeros(len(self.pairs))
        if T == 0:
            return y
        h = T / steps
        t = 0.0
        for i in range(steps):
            k1 = self.rhs(t, y)
            k2 = self.rhs(t + h / 2, y + h / 2 * k1)
            k3 = self.rhs(t + h / 2, y + h / 2 * k2)
            k4 = self.rhs(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = (i + 1) * h
        if not np.all(np.isfinite(y)):
            raise NumericalFailure("non-finite state in tau ODE integration")
        return y


@lru_cache(maxsize=8)
def _system(J: int) -> _TauSystem:
    return _TauSystem(J)


def tau_table(J: int, T: float, method: str = "auto", ode_steps: int = 2000) -> TauTable:
    """Table of ``tau_{j,k}(T)`` for all ``|j| + |k| <= J``.

    ``method`` is ``exact``, ``ode`` or ``auto`` (exact up to ``J = 16``,
    ODE beyond).  An explicit ``exact`` request above the cap falls back to
    the ODE route and the returned table records ``ode``.
    """
    if J < 1:
        raise InvalidParameter("J must be >= 1")
    if not (T >= 0 and math.isfinite(T)):
        raise InvalidParameter(f"T must be finite and nonnegative, got {T}")
    if method not in ("auto", "exact", "ode"):
        raise InvalidParameter(f"unknown tau method {method!r}")
    if method == "auto" or (method == "exact" and J > EXACT_CAP):
        method = "exact" if J <= EXACT_CAP else "ode"
    values = {}
    if method == "exact":
        for j, k in pairs_up_to(J):
            key = _canonical(j, k)
            if key not in values:
                values[key] = tau_exact(j, k, T)
    else:
        if ode_steps < 1:
            raise InvalidParameter("ode_steps must be >= 1")
        sys_ = _system(J)
        y = sys_.integrate(T, ode_steps)
        for (j, k), v in zip(sys_.pairs, y):
            values.setdefault(_canonical(j, k), float(v))
    return TauTable(float(T), int(J), method, values)


def moment_bound_T0(eps: float) -> float:
    return 2 / eps * math.log(1 + 2 / eps)


def moment_bound_check(k: int, T: float, eps: float) -> bool:
    """``|mu_k(T)| <= exp(-|k| T (1/2 - eps))``, valid once ``T >= T0(eps)``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    if T < moment_bound_T0(eps):
        raise DomainError(f"T={T} below the validity threshold {moment_bound_T0(eps):.4f}")
    return abs(moment(k, T)) <= math.exp(-abs(k) * T * (0.5 - eps))


def tau_bound(j: int, k: int, T: float) -> float:
    s = abs(j) + abs(k)
    return 4 * math.exp(-abs(j + k) * T / 4) / s + s * T0 * math.exp(-s * (T - T0) / 4)


def tau_resonant_bound(j: int, T: float) -> float:
    a = abs(j)
    return math.exp(-T / 4) / a + 2 * a * T0 * math.exp(-a * (T - T0) / 2)


def tau_bound_check(j: int, k: int, T: float, table: TauTable | None = None) -> bool:
    """Large-time decay bounds on ``tau_{j,k}`` (and its limit ``1/|j|`` when ``k = -j``)."""
    if T < T0:
        raise DomainError(f"decay bounds hold only for T >= {T0}")
    if j == 0 and k == 0:
        raise DomainError("(j, k) = (0, 0) is excluded")
    value = table(j, k) if table is not None else tau_exact(j, k, T)
    ok = abs(value) <= tau_bound(j, k, T)
    if k == -j:
        ok = ok and abs(value - 1 / abs(j)) <= tau_resonant_bound(j, T)
    return ok
