"""Exact combinatorics behind the covariance formulas.

* transposition walks on the symmetric group, counted by length and defect
  (number of steps that merge two cycles),
* hook Littlewood-Richardson coefficients, by the snake rule and by direct
  enumeration of LR tableaux,
* Casimir eigenvalues and Weyl dimensions of SU(N) irreducibles, and the
  resulting exact power-trace covariance of the SU(N) Brownian motion.

Permutations are tuples of 0-based images (one-line notation); partitions
are tuples of positive integers in weakly decreasing order.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from .errors import CapacityError, InvalidParameter, ShapeError

__all__ = [
    "cycle",
    "concat",
    "n_cycles",
    "cayley_distance",
    "count_walks",
    "defect_free_count",
    "count_walks_split",
    "itocombi_rhs",
    "verify_itocombi",
    "split_count_recursive",
    "kappa_series",
    "kappa_tail_bound",
    "SkewAnalysis",
    "skew_analysis",
    "lr_hook",
    "lr_hook_bruteforce",
    "alt_sum",
    "alt_sum_closed",
    "partitions",
    "lambda_shape",
    "casimir",
    "casimir_exact",
    "schur_dim",
    "exact_cov_terms",
    "exact_power_trace_covariance",
    "literal_power_trace_covariance",
]

MAX_WALK_POINTS = 6
MAX_WALK_LENGTH = 6
MAX_LR_BOXES = 14


# ---------------------------------------------------------------- permutations


def cycle(j: int) -> tuple[int, ...]:
    """The full cycle ``(1 2 ... j)`` in one-line notation."""
    if j < 1:
        raise InvalidParameter("cycle length must be >= 1")
    return tuple((i + 1) % j for i in range(j))


def concat(sigma: tuple[int, ...], tau: tuple[int, ...]) -> tuple[int, ...]:
    j = len(sigma)
    return tuple(sigma) + tuple(t + j for t in tau)


def _check_perm(sigma) -> tuple[int, ...]:
    sigma = tuple(int(x) for x in sigma)
    if sorted(sigma) != list(range(len(sigma))):
        raise InvalidParameter(f"{sigma} is not a permutation of 0..{len(sigma) - 1}")
    return sigma


@lru_cache(maxsize=None)
def n_cycles(sigma: tuple[int, ...]) -> int:
    seen = [False] * len(sigma)
    count = 0
    for i in range(len(sigma)):
        if not seen[i]:
            count += 1
            while not seen[i]:
                seen[i] = True
                i = sigma[i]
    return count


def cayley_distance(sigma) -> int:
    """Transposition distance to the identity: ``n - #cycles``."""
    sigma = _check_perm(sigma)
    return len(sigma) - n_cycles(sigma)


@lru_cache(maxsize=None)
def _walk_table(sigma: tuple[int, ...], n: int) -> tuple[int, ...]:
    """Counts of length-``n`` walks from ``sigma`` indexed by defect."""
    size = len(sigma)
    transpositions = list(combinations(range(size), 2))
    layer = {sigma: [1] + [0] * n}
    for _ in range(n):
        nxt: dict[tuple[int, ...], list[int]] = defaultdict(lambda: [0] * (n + 1))
        for perm, counts in layer.items():
            c0 = n_cycles(perm)
            for a, b in transpositions:
                q = list(perm)
                q[a], q[b] = q[b], q[a]
                q = tuple(q)
                up = n_cycles(q) < c0
                target = nxt[q]
                if up:
                    for d in range(n):
                        target[d + 1] += counts[d]
                else:
                    for d in range(n + 1):
                        target[d] += counts[d]
        layer = nxt
    totals = [0] * (n + 1)
    for counts in layer.values():
        for d, c in enumerate(counts):
            totals[d] += c
    return tuple(totals)


def count_walks(sigma, n: int, d: int) -> int:
    """``S(sigma, n, d)``: length-``n`` transposition walks from ``sigma`` with defect ``d``."""
    sigma = _check_perm(sigma)
    if n < 0 or d < 0:
        raise InvalidParameter("n and d must be nonnegative")
    if len(sigma) > MAX_WALK_POINTS or n > MAX_WALK_LENGTH:
        raise CapacityError(
            f"walk enumeration limited to S_j with j <= {MAX_WALK_POINTS} and length <= {MAX_WALK_LENGTH}"
        )
    if d > n:
        return 0
    return _walk_table(sigma, n)[d]


def defect_free_count(k: int, l: int) -> int:
    """``S((1..k), l, 0) = C(k, l+1) k^(l-1)`` (zero once ``l >= k``)."""
    if k < 1 or l < 0:
        raise InvalidParameter("need k >= 1 and l >= 0")
    value = Fraction(math.comb(k, l + 1)) * Fraction(k) ** (l - 1)
    assert value.denominator == 1
    return int(value)


def count_walks_split(j: int, k: int, n: int) -> int:
    """``S'((1..j) x (1..k), n, 1)`` from brute-force walk counts."""
    if j < 1 or k < 1:
        raise InvalidParameter("j, k must be >= 1")
    s, t = cycle(j), cycle(k)
    total = count_walks(concat(s, t), n, 1)
    for n1 in range(n + 1):
        c = math.comb(n, n1)
        total -= c * (
            count_walks(s, n1, 1) * count_walks(t, n - n1, 0) + count_walks(s, n1, 0) * count_walks(t, n - n1, 1)
        )
    return total


def itocombi_rhs(j: int, k: int, n: int, split=count_walks_split, free=None) -> int:
    """Right-hand side of the first-step recursion for ``S'(..., n + 1, 1)``."""
    if free is None:
        free = lambda r, p: count_walks(cycle(r), p, 0)  # noqa: E731
    total = j * k * free(j + k, n)
    for l in range(1, j):
        total += j * sum(math.comb(n, p) * free(l, p) * split(j - l, k, n - p) for p in range(n + 1))
    for m in range(1, k):
        total += k * sum(math.comb(n, q) * free(m, q) * split(j, k - m, n - q) for q in range(n + 1))
    return total


def verify_itocombi(j: int, k: int, n: int) -> bool:
    """Check the first-step recursion exactly against enumerated walk counts."""
    if j + k > MAX_WALK_POINTS or n + 1 > MAX_WALK_LENGTH:
        raise CapacityError(f"itocombi check limited to j + k <= {MAX_WALK_POINTS}, n + 1 <= {MAX_WALK_LENGTH}")
    return count_walks_split(j, k, n + 1) == itocombi_rhs(j, k, n)


@lru_cache(maxsize=None)
def split_count_recursive(j: int, k: int, n: int) -> int:
    """``S'((1..j) x (1..k), n, 1)`` from the recursion and closed-form defect-free counts."""
    if n == 0:
        return 0
    return itocombi_rhs(j, k, n - 1, split=split_count_recursive, free=defect_free_count)


KAPPA_MAX_POINTS = 16
KAPPA_MAX_TERMS = 30


def kappa_series(j: int, k: int, T: float, n_max: int = 30) -> float:
    """``kappa_{j,k}(T) = exp(-(j+k)T/2) sum_{n <= n_max} (-T)^n/n! S'(..., n, 1)``.

    Walks with a single defect have length at most ``j + k``, so the sum is
    exact once ``n_max >= j + k``; see :func:`kappa_tail_bound`.
    """
    if j < 1 or k < 1:
        raise InvalidParameter("j, k must be >= 1")
    if j + k > KAPPA_MAX_POINTS or n_max > KAPPA_MAX_TERMS:
        raise CapacityError(f"kappa series limited to j + k <= {KAPPA_MAX_POINTS}, n_max <= {KAPPA_MAX_TERMS}")
    poly = sum(Fraction((-1) ** n * split_count_recursive(j, k, n), math.factorial(n)) * Fraction(T) ** n for n in range(n_max + 1))
    return math.exp(-(j + k) * T / 2) * float(poly)


def kappa_tail_bound(j: int, k: int, T: float, n_max: int) -> float:
    """Bound on the terms dropped by :func:`kappa_series` at cutoff ``n_max``."""
    top = j + k
    if n_max >= top:
        return 0.0
    steps = math.comb(j + k, 2)
    return math.exp(-(j + k) * T / 2) * sum((steps * T) ** n / math.factorial(n) for n in range(n_max + 1, top + 1))


# ---------------------------------------------------------------- partitions


def _part(p) -> tuple[int, ...]:
    p = tuple(int(x) for x in p)
    if any(x < 0 for x in p) or any(p[i] < p[i + 1] for i in range(len(p) - 1)):
        raise ShapeError(f"{p} is not a partition")
    return tuple(x for x in p if x > 0)


def partitions(total: int, max_part: int | None = None):
    """All partitions of ``total`` (largest part first)."""
    if max_part is None:
        max_part = total
    if total == 0:
        yield ()
        return
    for first in range(min(total, max_part), 0, -1):
        for rest in partitions(total - first, first):
            yield (first,) + rest


def _contained(alpha, beta) -> bool:
    return len(alpha) <= len(beta) and all(a <= b for a, b in zip(alpha, beta))


def _skew_boxes(alpha, beta) -> set[tuple[int, int]]:
    boxes = set()
    for i, b in enumerate(beta):
        a = alpha[i] if i < len(alpha) else 0
        for c in range(a, b):
            boxes.add((i, c))
    return boxes


@dataclass(frozen=True)
class SkewAnalysis:
    contains_2x2: bool
    components: int
    vertical_dominoes: int


def skew_analysis(alpha, beta) -> SkewAnalysis:
    """2x2 test, number of edge-connected components and vertical dominoes of ``beta/alpha``."""
    alpha, beta = _part(alpha), _part(beta)
    if not _contained(alpha, beta):
        raise ShapeError(f"{alpha} is not contained in {beta}")
    boxes = _skew_boxes(alpha, beta)
    square = any({(r, c + 1), (r + 1, c), (r + 1, c + 1)} <= boxes for r, c in boxes)
    v = sum(1 for r, c in boxes if (r - 1, c) in boxes)
    seen: set[tuple[int, int]] = set()
    comps = 0
    for start in boxes:
        if start in seen:
            continue
        comps += 1
        stack = [start]
        seen.add(start)
        while stack:
            r, c = stack.pop()
            for nb in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
                if nb in boxes and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
    return SkewAnalysis(square, comps, v)


def _check_hook(n: int, r: int):
    if n < 1 or not 0 <= r <= n - 1:
        raise ShapeError(f"invalid hook parameters n={n}, r={r}")


def lr_hook(alpha, n: int, r: int, beta) -> int:
    """``N^beta_{alpha, eta_{n,r}}`` for the hook ``eta_{n,r} = (n - r, 1^r)`` by the snake rule."""
    _check_hook(n, r)
    alpha, beta = _part(alpha), _part(beta)
    if not _contained(alpha, beta) or sum(beta) != sum(alpha) + n:
        return 0
    sk = skew_analysis(alpha, beta)
    if sk.contains_2x2:
        return 0
    v, k = sk.vertical_dominoes, sk.components
    if not v <= r <= v + k - 1:
        return 0
    return math.comb(k - 1, r - v)


def lr_hook_bruteforce(alpha, n: int, r: int, beta) -> int:
    """Count LR tableaux of shape ``beta/alpha`` and content ``eta_{n,r}``.

    Entries record the hook row a box comes from: ``n - r`` ones and one each of
    ``2..r+1``.  Rows weakly increase, columns strictly increase and the
    right-to-left, top-to-bottom reading word is a lattice word.
    """
    _check_hook(n, r)
    alpha, beta = _part(alpha), _part(beta)
    if sum(beta) > MAX_LR_BOXES:
        raise CapacityError(f"LR enumeration limited to |beta| <= {MAX_LR_BOXES}")
    if not _contained(alpha, beta) or sum(beta) != sum(alpha) + n:
        return 0
    boxes = _skew_boxes(alpha, beta)
    order = sorted(boxes, key=lambda b: (b[0], -b[1]))
    content = [0, n - r] + [1] * r  # index = entry value
    top = r + 1
    filling: dict[tuple[int, int], int] = {}
    used = [0] * (top + 2)

    def place(i: int) -> int:
        if i == len(order):
            return 1
        row, col = order[i]
        lo = 1
        above = (row - 1, col)
        if above in filling:
            lo = filling[above] + 1
        hi = top
        right = (row, col + 1)
        if right in filling:
            hi = min(hi, filling[right])
        total = 0
        for x in range(lo, hi + 1):
            if used[x] >= content[x]:
                continue
            if x > 1 and used[x - 1] < used[x] + 1:
                continue
            used[x] += 1
            filling[(row, col)] = x
            total += place(i + 1)
            del filling[(row, col)]
            used[x] -= 1
        return total

    return place(0)


def alt_sum(alpha, beta, n: int) -> int:
    """``sum_r (-1)^r N^beta_{alpha, eta_{n,r}}``."""
    return sum((-1) ** r * lr_hook(alpha, n, r, beta) for r in range(n))


def alt_sum_closed(alpha, beta, n: int) -> int:
    """``(-1)^v`` on connected 2x2-free skews of size ``n``, else 0."""
    alpha, beta = _part(alpha), _part(beta)
    if not _contained(alpha, beta) or sum(beta) != sum(alpha) + n:
        return 0
    sk = skew_analysis(alpha, beta)
    if sk.contains_2x2 or sk.components != 1:
        return 0
    return (-1) ** sk.vertical_dominoes


# ---------------------------------------------------------------- SU(N) harmonic analysis


def lambda_shape(N: int, m: int, r2: int, n: int, r1: int) -> tuple[int, ...]:
    """``(n-r1+m-r2) (n-r1+1)^r2 (n-r1)^(N-r1-r2-2) (n-r1-1)^r1`` with zero rows dropped."""
    if n < 1 or m < 1 or N < n + m or not 0 <= r1 <= n - 1 or not 0 <= r2 <= m - 1:
        raise InvalidParameter(f"invalid parameters N={N}, m={m}, r2={r2}, n={n}, r1={r1}")
    a = n - r1
    rows = [a + m - r2] + [a + 1] * r2 + [a] * (N - r1 - r2 - 2) + [a - 1] * r1
    return tuple(x for x in rows if x > 0)


def _padded(lam, N: int) -> list[int]:
    lam = _part(lam)
    if len(lam) > N:
        raise ShapeError(f"partition {lam} has more than N={N} rows")
    return list(lam) + [0] * (N - len(lam))


def casimir_exact(lam, N: int) -> Fraction:
    """``c(lam) = (sum lam_i^2 + sum_{i<j}(lam_i - lam_j))/N - |lam|^2/N^2``."""
    x = _padded(lam, N)
    quad = sum(v * v for v in x) + sum((N - 1 - 2 * i) * v for i, v in enumerate(x))
    return Fraction(quad, N) - Fraction(sum(x) ** 2, N * N)


def casimir(lam, N: int) -> float:
    return float(casimir_exact(lam, N))


def schur_dim(lam, N: int) -> int:
    """Weyl dimension ``prod_{i<j} (lam_i - lam_j + j - i)/(j - i)``."""
    x = _padded(lam, N)
    num = 1
    den = 1
    for i in range(N):
        for j in range(i + 1, N):
            num *= x[i] - x[j] + j - i
            den *= j - i
    q, rem = divmod(num, den)
    assert rem == 0
    return q


def exact_cov_terms(N: int, n: int, m: int) -> tuple[int, list[tuple[int, Fraction]]]:
    """Constant ``n delta_{n,m}`` and the list of ``(signed dimension, Casimir)`` terms."""
    if n < 1 or m < 1 or N < n + m + 1:
        raise InvalidParameter(f"need n, m >= 1 and N >= n + m + 1 (got N={N}, n={n}, m={m})")
    if n < m:
        n, m = m, n
    terms = []
    for r1 in range(n):
        for r2 in range(m):
            lam = lambda_shape(N, m, r2, n, r1)
            terms.append(((-1) ** (r1 + r2) * schur_dim(lam, N), casimir_exact(lam, N)))
    return (n if n == m else 0), terms


def exact_power_trace_covariance(N: int, n: int, m: int, t: float) -> float:
    """``E[Tr(V^n) conj(Tr(V^m))]`` for the SU(N) Brownian motion at time ``t``."""
    if t < 0:
        raise InvalidParameter("t must be nonnegative")
    const, terms = exact_cov_terms(N, n, m)
    return const + sum(d * math.exp(-float(c) * t / 2) for d, c in terms)


def literal_power_trace_covariance(N: int, n: int, m: int, t: float) -> float:
    """The closed-form expression for the same expectation, evaluated exactly as printed.

    Its inner exponentials ``e^{-n r t/2}`` do not follow from the Casimir
    values above; it is kept only to be scored against simulation.
    """
    if n < 1 or m < 1 or N < n + m + 1:
        raise InvalidParameter(f"need n, m >= 1 and N >= n + m + 1 (got N={N}, n={n}, m={m})")
    pre = (-1) ** (n + m) * math.exp(
        -(n + m) * t / 2 - (n * (n - 1) + m * (m - 1)) / N * t / 2 - (n - m) ** 2 / N**2 * t / 2
    )
    total = 0.0
    for r1 in range(n):
        for r2 in range(m):
            ratio = Fraction((N + r1 + r2 + 1) * (N - n - m + r1 + r2 + 1), (N - n + r1 + r2 + 1) * (N - m + r1 + r2 + 1))
            total += (
                (-1) ** (r1 + r2)
                * math.exp(-n * r1 * t / 2)
                * math.comb(n - 1, r1)
                * math.comb(N + r1, n)
                * math.exp(-n * r2 * t / 2)
                * math.comb(m - 1, r2)
                * math.comb(N + r2, m)
                * float(ratio)
            )
    return (n if n == m else 0) + pre * total
