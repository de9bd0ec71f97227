"""Dense complex matrix kernels for the unitary group and its Lie algebra.

Matrices are plain ``numpy`` complex arrays of shape ``(n, n)``; most
functions also accept a leading batch axis ``(..., n, n)``.

The Lie algebra u(n) of anti-Hermitian matrices carries the scalar product
``<X, Y> = n Tr(X* Y)``.  Three variants are supported:

* ``full``    -- u(n) with the product above,
* ``special`` -- the traceless hyperplane su(n) with the induced product,
* ``alpha``   -- u(n) with ``n Tr(X* Y) + (1 - a^2)/a^2 Tr(X*) Tr(Y)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, InvalidParameter, NumericalFailure

__all__ = [
    "Metric",
    "FULL",
    "SPECIAL",
    "alpha_metric",
    "metric_inner",
    "orthonormal_basis",
    "gram_matrix",
    "sample_increment",
    "increments_from_normals",
    "n_normals",
    "expm_antihermitian",
    "hermitian_eig",
    "is_antihermitian",
    "ntr",
    "coalescence_sum",
    "split_sum",
]

ANTIHERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class Metric:
    """Choice of Ad-invariant scalar product on u(n)."""

    variant: str = "full"
    alpha: float = 1.0

    def __post_init__(self):
        if self.variant not in ("full", "special", "alpha"):
            raise InvalidParameter(f"unknown metric variant {self.variant!r}")
        if self.variant == "alpha" and not (self.alpha >= 0 and np.isfinite(self.alpha)):
            raise InvalidParameter(f"alpha must be a finite nonnegative real, got {self.alpha}")

    @property
    def label(self) -> str:
        if self.variant == "alpha":
            return f"alpha({self.alpha:g})"
        return self.variant

    @classmethod
    def parse(cls, text: str) -> "Metric":
        """Parse ``full``, ``special``, ``alpha:0.5`` or ``alpha(0.5)``."""
        text = text.strip().lower()
        if text in ("full", "u"):
            return FULL
        if text in ("special", "su"):
            return SPECIAL
        if text.startswith("alpha"):
            rest = text[5:].strip(":=()")
            try:
                return alpha_metric(float(rest))
            except ValueError:
                pass
        raise InvalidParameter(f"cannot parse metric {text!r}")


FULL = Metric("full")
SPECIAL = Metric("special")


def alpha_metric(alpha: float) -> Metric:
    return Metric("alpha", float(alpha))


def ntr(A):
    """Normalized trace ``Tr(A)/n`` over the last two axes."""
    return np.trace(A, axis1=-2, axis2=-1) / A.shape[-1]


def is_antihermitian(X, tol: float = ANTIHERMITIAN_TOL) -> bool:
    X = np.asarray(X)
    scale = max(1.0, float(np.max(np.abs(X), initial=0.0)))
    return bool(np.max(np.abs(X + np.conj(np.swapaxes(X, -1, -2))), initial=0.0) <= tol * scale)


def metric_inner(X, Y, metric: Metric = FULL) -> float:
    """Real scalar product of two anti-Hermitian matrices under ``metric``."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    n = X.shape[-1]
    value = n * np.real(np.sum(np.conj(X) * Y))
    if metric.variant == "alpha" and metric.alpha != 1.0:
        trx, try_ = np.trace(X), np.trace(Y)
        if metric.alpha == 0.0:
            if abs(trx) > 1e-12 or abs(try_) > 1e-12:
                raise InvalidInput("alpha = 0 metric is degenerate off the traceless hyperplane")
        else:
            value += (1 - metric.alpha**2) / metric.alpha**2 * np.real(np.conj(trx) * try_)
    return float(value)


def _offdiagonal_basis(n: int) -> list[np.ndarray]:
    out = []
    scale = 1.0 / np.sqrt(2 * n)
    for j in range(n):
        for k in range(j + 1, n):
            X = np.zeros((n, n), dtype=complex)
            X[j, k], X[k, j] = scale, -scale
            Y = np.zeros((n, n), dtype=complex)
            Y[j, k] = Y[k, j] = 1j * scale
            out.extend((X, Y))
    return out


def _traceless_diagonal_basis(n: int) -> list[np.ndarray]:
    # Gram-Schmidt on i(E_jj - E_{j+1,j+1}) lands on the generalized Gell-Mann family.
    out = []
    for m in range(1, n):
        d = np.zeros(n)
        d[:m] = 1.0
        d[m] = -m
        out.append(np.diag(1j * d / np.sqrt(n * m * (m + 1))))
    return out


def orthonormal_basis(n: int, metric: Metric = FULL) -> list[np.ndarray]:
    """Orthonormal basis of u(n) (or su(n)) for the given metric.

    ``full`` returns ``n**2`` matrices, ``special`` returns ``n**2 - 1``
    traceless ones.  ``alpha`` returns the special basis completed by
    ``(i alpha / n) I``; for ``alpha == 0`` the metric degenerates and only the
    traceless part is returned.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParameter(f"invalid dimension n={n}")
    n = int(n)
    basis = _offdiagonal_basis(n)
    if metric.variant == "full":
        for j in range(n):
            H = np.zeros((n, n), dtype=complex)
            H[j, j] = 1j / np.sqrt(n)
            basis.append(H)
        return basis
    basis.extend(_traceless_diagonal_basis(n))
    if metric.variant == "alpha" and metric.alpha > 0:
        basis.append((1j * metric.alpha / n) * np.eye(n, dtype=complex))
    return basis


def gram_matrix(basis, metric: Metric = FULL) -> np.ndarray:
    d = len(basis)
    G = np.empty((d, d))
    for a in range(d):
        for b in range(a, d):
            G[a, b] = G[b, a] = metric_inner(basis[a], basis[b], metric)
    return G


def coalescence_sum(A, B, basis) -> complex:
    """``sum_k tr(A X_k) tr(B X_k)`` with the normalized trace."""
    Xs = np.asarray(basis)
    ta = ntr(np.einsum("ij,kjl->kil", A, Xs))
    tb = ntr(np.einsum("ij,kjl->kil", B, Xs))
    return complex(np.sum(ta * tb))


def split_sum(A, B, basis) -> complex:
    """``sum_k tr(A X_k B X_k)`` with the normalized trace."""
    Xs = np.asarray(basis)
    AX = np.einsum("ij,kjl->kil", A, Xs)
    BX = np.einsum("ij,kjl->kil", B, Xs)
    return complex(np.sum(ntr(AX @ BX)))


def n_normals(n: int, metric: Metric = FULL) -> int:
    """Number of standard normals consumed by one increment."""
    return n * n + (1 if metric.variant == "alpha" else 0)


def increments_from_normals(z, n: int, dt: float, metric: Metric = FULL) -> np.ndarray:
    """Map standard normals of shape ``(..., n_normals)`` to Brownian increments.

    Off-diagonal entries are ``(B + iC)/sqrt(2n)``, diagonal entries
    ``i D / sqrt(n)``, everything scaled by ``sqrt(dt)``.
    """
    z = np.asarray(z, dtype=float)
    batch = z.shape[:-1]
    m = n * (n - 1) // 2
    iu = np.triu_indices(n, 1)
    W = np.zeros(batch + (n, n), dtype=complex)
    W[(...,) + iu] = (z[..., :m] + 1j * z[..., m : 2 * m]) / np.sqrt(2 * n)
    X = W - np.conj(np.swapaxes(W, -1, -2))
    diag = 1j * z[..., 2 * m : 2 * m + n] / np.sqrt(n)
    if metric.variant != "full":
        diag = diag - diag.mean(axis=-1, keepdims=True)
    if metric.variant == "alpha":
        diag = diag + 1j * metric.alpha * z[..., n * n : n * n + 1] / n
    idx = np.arange(n)
    X[..., idx, idx] = diag
    return np.sqrt(dt) * X


def sample_increment(n: int, dt: float, metric: Metric, rng: np.random.Generator) -> np.ndarray:
    """Gaussian increment of the Brownian motion on the Lie algebra over time ``dt``."""
    if not dt >= 0:
        raise InvalidParameter(f"dt must be nonnegative, got {dt}")
    if n < 1:
        raise InvalidParameter(f"invalid dimension n={n}")
    return increments_from_normals(rng.standard_normal(n_normals(n, metric)), n, dt, metric)


def expm_antihermitian(X, check: bool = True) -> np.ndarray:
    """Matrix exponential of an anti-Hermitian matrix (or a stack of them)."""
    X = np.asarray(X, dtype=complex)
    if check and not is_antihermitian(X):
        raise InvalidInput("expm_antihermitian: input is not anti-Hermitian")
    w, V = np.linalg.eigh(-1j * X)
    return (V * np.exp(1j * w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def hermitian_eig(H, method: str = "lapack", tol: float = 1e-10, max_sweeps: int = 30):
    """Eigen-decomposition ``H = V diag(w) V*`` with ascending ``w``.

    ``method="jacobi"`` runs a cyclic complex Jacobi iteration and serves as a
    dependency-free cross-check of the LAPACK path.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol * scale:
        raise InvalidInput("hermitian_eig: input is not Hermitian")
    if not np.all(np.isfinite(H)):
        raise NumericalFailure("hermitian_eig: non-finite entries")
    if method == "lapack":
        return np.linalg.eigh(H)
    if method != "jacobi":
        raise InvalidParameter(f"unknown eigensolver {method!r}")
    w, V = _jacobi_eigh(H, max_sweeps)
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def _jacobi_eigh(H, max_sweeps):
    A = 0.5 * (H + H.conj().T)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    norm = np.linalg.norm(A)
    if n == 1 or norm == 0.0:
        return np.real(np.diag(A)).copy(), V
    target = 1e-15 * norm
    mask = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps):
        off = np.linalg.norm(A[mask])
        if off <= target:
            return np.real(np.diag(A)).copy(), V
        # threshold sweeps: skip small pivots during the first three passes
        threshold = 0.2 * off / n**2 if sweep < 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = A[p, q]
                ag = abs(g)
                if ag <= threshold or ag == 0.0:
                    continue
                a, b = A[p, p].real, A[q, q].real
                zeta = (b - a) / (2.0 * ag)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                phase = g / ag
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                J = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                cols = [p, q]
                A[:, cols] = A[:, cols] @ J
                A[cols, :] = J.conj().T @ A[cols, :]
                A[p, q] = A[q, p] = 0.0
                V[:, cols] = V[:, cols] @ J
    raise NumericalFailure(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
