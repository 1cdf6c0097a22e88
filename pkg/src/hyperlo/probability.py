"""Per-state improvement probabilities for the mutation operators on LeadingOnes.

State ``i`` is the current LeadingOnes value: positions ``[0, i)`` are ones
and position ``i`` is zero. A child is strictly fitter iff position ``i`` is
toggled an odd number of times and every prefix position an even number of
times; the suffix is irrelevant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from .errors import BudgetExceeded, InvalidConfiguration

ENUMERATION_BUDGET = 10**8


class Family(str, enum.Enum):
    BITFLIP = "bitflip"  # m positions drawn with replacement
    RLS = "rls"  # m distinct positions
    SBM = "sbm"  # standard bit mutation, independent per-bit rate


class Model(str, enum.Enum):
    LEADING = "leading"  # dominant-term formula
    EXACT = "exact"


@dataclass(frozen=True)
class OperatorSpec:
    family: Family
    m: int = 1
    rate: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.SBM:
            if self.rate is None or not 0.0 < self.rate < 1.0:
                raise InvalidConfiguration(f"standard bit mutation needs a rate in (0, 1), got {self.rate}")
        elif self.m < 1:
            raise InvalidConfiguration(f"flip count m must be at least 1, got {self.m}")

    @property
    def label(self) -> str:
        if self.family is Family.BITFLIP:
            return f"{self.m}BitFlip"
        if self.family is Family.RLS:
            return f"RLS_{self.m}"
        return f"SBM({self.rate:g})"

    def rate_for(self, n: int) -> float:
        return float(self.rate) if self.rate is not None else 0.0


def _check_state(i, n: int) -> np.ndarray:
    arr = np.asarray(i)
    if n < 1 or np.any(arr < 0) or np.any(arr >= n):
        raise InvalidConfiguration(f"state must satisfy 0 <= i < n (n={n})")
    return arr


def p_improve_leading(m: int, i, n: int):
    """Dominant-term improvement probability m/n * ((n-i-1)/n)**(m-1).

    Exact for m in {1, 2}; for larger m it omits the (nonnegative) cases where
    a prefix bit is flipped and flipped back, which are O(1/n**2).
    Accepts a scalar or array ``i``.
    """
    arr = _check_state(i, n)
    out = m / n * ((n - arr - 1) / n) ** (m - 1)
    return float(out) if np.ndim(out) == 0 else out


def p_improve_rls(m: int, i: int, n: int) -> float:
    """C(n-i-1, m-1) / C(n, m); zero when fewer than m-1 suffix bits remain."""
    return float(p_improve_rls_fraction(m, i, n))


def p_improve_rls_fraction(m: int, i: int, n: int) -> Fraction:
    _check_state(i, n)
    if m < 1 or m > n:
        raise InvalidConfiguration(f"need 1 <= m <= n, got m={m}, n={n}")
    return Fraction(math.comb(n - i - 1, m - 1), math.comb(n, m))


def p_improve_rls_array(m: int, i, n: int) -> np.ndarray:
    """Vectorised RLS probability via the ratio product (m/n) * prod (n-i-s)/(n-s)."""
    arr = np.asarray(_check_state(i, n), dtype=np.float64)
    out = np.full(arr.shape, m / n)
    for s in range(1, m):
        out *= np.clip(n - arr - s, 0.0, None) / (n - s)
    return out


@njit(cache=True)
def _enumerate_improving(n, m, i):
    """Count ordered m-tuples over [0, n) satisfying the parity condition."""
    draws = np.zeros(m, np.int64)
    hits = np.zeros(n, np.int64)
    total = 0
    while True:
        for p in range(i + 1):
            hits[p] = 0
        for a in range(m):
            if draws[a] <= i:
                hits[draws[a]] += 1
        ok = hits[i] & 1
        if ok:
            for p in range(i):
                if hits[p] & 1:
                    ok = 0
                    break
        total += ok
        a = m - 1
        while a >= 0:
            draws[a] += 1
            if draws[a] < n:
                break
            draws[a] = 0
            a -= 1
        if a < 0:
            return total


def p_improve_exact_mbitflip(m: int, i: int, n: int, budget: int = ENUMERATION_BUDGET) -> Fraction:
    """Exact probability by enumerating all n**m ordered draw tuples."""
    _check_state(i, n)
    if m < 1:
        raise InvalidConfiguration(f"flip count m must be at least 1, got {m}")
    if n**m > budget:
        raise BudgetExceeded(f"n**m = {n**m} exceeds the enumeration budget {budget}")
    return Fraction(int(_enumerate_improving(n, m, i)), n**m)


def _even_power_coeffs(m: int, i):
    """Coefficients g_0..g_m of cosh(x)**i, with ``i`` a scalar or float array.

    Uses the recurrence for powers of a series with unit constant term:
    g_k = (1/k) * sum_j ((i+1)j - k) f_j g_{k-j}, f_j the cosh coefficients.
    """
    f = [Fraction(1, math.factorial(j)) if j % 2 == 0 else Fraction(0) for j in range(m + 1)]
    exact = isinstance(i, int)
    g = [Fraction(1) if exact else np.ones_like(i, dtype=np.float64)]
    for k in range(1, m + 1):
        acc = Fraction(0) if exact else np.zeros_like(i, dtype=np.float64)
        for j in range(1, k + 1):
            if f[j]:
                c = f[j] if exact else float(f[j])
                acc = acc + ((i + 1) * j - k) * c * g[k - j]
        g.append(acc / k)
    return g


def p_improve_mbitflip_exact(m: int, i, n: int):
    """Exact with-replacement probability from the counting series.

    The number of improving ordered tuples is m! times the x**m coefficient of
    cosh(x)**i * sinh(x) * exp((n-i-1) x). With integer ``i`` the result is a
    Fraction; with an array ``i`` it is a float array (all terms nonnegative).
    """
    if m < 1:
        raise InvalidConfiguration(f"flip count m must be at least 1, got {m}")
    if isinstance(i, (int, np.integer)):
        i = int(i)
        _check_state(i, n)
        g = _even_power_coeffs(m, i)
        total = Fraction(0)
        for a in range(0, m, 2):
            for b in range(1, m - a + 1, 2):
                c = m - a - b
                total += g[a] * Fraction((n - i - 1) ** c, math.factorial(b) * math.factorial(c))
        return total * math.factorial(m) / Fraction(n**m)
    arr = np.asarray(_check_state(i, n), dtype=np.float64)
    g = _even_power_coeffs(m, arr)
    r = (n - arr - 1) / n
    total = np.zeros_like(arr)
    for a in range(0, m, 2):
        for b in range(1, m - a + 1, 2):
            c = m - a - b
            total += g[a] * n ** (-float(a + b)) * r**c / (math.factorial(b) * math.factorial(c))
    return total * math.factorial(m)


def p_improve(op: OperatorSpec, i, n: int, model: Model | str = Model.LEADING):
    """Dispatch to the probability model for ``op``; vectorised over ``i``."""
    model = Model(model)
    arr = np.asarray(i)
    if op.family is Family.BITFLIP:
        if model is Model.EXACT and op.m >= 3:
            return p_improve_mbitflip_exact(op.m, arr if arr.ndim else int(arr), n)
        return p_improve_leading(op.m, arr, n)
    if op.family is Family.RLS:
        out = p_improve_rls_array(op.m, arr, n)
        return float(out) if out.ndim == 0 else out
    rate = float(op.rate)
    out = rate * (1.0 - rate) ** np.asarray(arr, dtype=np.float64)
    return float(out) if np.ndim(out) == 0 else out


def improvement_table(ops: list[OperatorSpec], n: int, model: Model | str = Model.LEADING) -> np.ndarray:
    """Array of shape (len(ops), n) with the per-state probability of each operator."""
    levels = np.arange(n)
    return np.vstack([np.asarray(p_improve(op, levels, n, model), dtype=np.float64) for op in ops])


def crossover_point(a: int, b: int, n: int) -> float:
    """State below which flipping b bits beats flipping a bits (dominant-term model)."""
    if not b > a >= 1:
        raise InvalidConfiguration(f"need b > a >= 1, got a={a}, b={b}")
    return n * (1.0 - (b / a) ** (1.0 / (a - b))) - 1.0


def optimal_operator(i: int, n: int, k: int) -> int:
    """Flip count among 1..k with the largest dominant-term probability at state i.

    Flip count m owns states floor(n/(m+1)) .. floor(n/m) - 1 for m < k, and k
    owns everything below floor(n/k). Boundary states where two operators tie
    go to the larger one.
    """
    if k < 1:
        raise InvalidConfiguration(f"operator count must be at least 1, got {k}")
    _check_state(i, n)
    for m in range(1, k):
        if i >= n // (m + 1):
            return m
    return k


def region_bounds(n: int, k: int) -> list[tuple[int, int, int]]:
    """(m, first, last) state ranges of :func:`optimal_operator`, highest m first."""
    out = [(k, 0, n // k - 1)]
    for m in range(k - 1, 0, -1):
        out.append((m, n // (m + 1), n // m - 1))
    return [(m, lo, hi) for m, lo, hi in out if hi >= lo]
