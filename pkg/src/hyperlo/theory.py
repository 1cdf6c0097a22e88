"""Closed-form expected-runtime constants, all normalised by n**2.

The finite-n sums run over fitness levels with exact float terms and are
added with :func:`math.fsum`. The learning-period bound for the generalised
random gradient is a sum over ``w`` equal stages of the fitness range; its
exponentials are evaluated relative to the largest one so nothing overflows.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfiguration
from .probability import Family, region_bounds
from .tau import TauSpec

log = logging.getLogger(__name__)

DEFAULT_STAGES = 100_000
DEFAULT_EPSILON = 0.01
OMEGA = math.inf  # learning period growing faster than n
_EXP_LIMIT = math.log(np.finfo(np.float64).max)


class TauValidityWarning(UserWarning):
    """The learning period lies outside the range where the bound is proven."""


@dataclass(frozen=True)
class TheoryQuery:
    """Parameters of one closed-form evaluation.

    ``tau_over_n`` may be :data:`OMEGA`. ``n`` is optional and only used for
    the validity check of the learning period.
    """

    k: int
    tau_over_n: float = OMEGA
    w: int = DEFAULT_STAGES
    p1: float | None = None
    x_over_n: float = 1.0
    family: Family = Family.BITFLIP
    epsilon: float = DEFAULT_EPSILON
    n: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.k < 1:
            raise InvalidConfiguration(f"operator count must be at least 1, got {self.k}")
        if self.w < 1:
            raise InvalidConfiguration(f"stage count must be at least 1, got {self.w}")
        if not self.tau_over_n > 0:
            raise InvalidConfiguration(f"learning period must be positive, got tau/n={self.tau_over_n}")
        if self.p1 is not None and not 0.0 <= self.p1 <= 1.0:
            raise InvalidConfiguration(f"weight p1 must lie in [0, 1], got {self.p1}")
        if not 0.0 < self.x_over_n <= 1.0:
            raise InvalidConfiguration(f"target fraction must lie in (0, 1], got {self.x_over_n}")
        if self.family is Family.SBM:
            raise InvalidConfiguration("no closed forms are provided for standard bit mutation")

    @classmethod
    def with_tau(cls, k: int, tau: TauSpec | str, n: int | None = None, **kw) -> TheoryQuery:
        spec = tau if isinstance(tau, TauSpec) else TauSpec.parse(tau)
        return cls(k=k, tau_over_n=spec.over_n(n), n=n, **kw)


@dataclass(frozen=True)
class BoundReport:
    value: float
    valid: bool | None  # None when no problem size was given
    min_valid_n: float
    overflow: bool


def _sum_levels(inv: np.ndarray) -> float:
    return math.fsum(inv.tolist())


def _mixture(k: int, levels: np.ndarray, n: int) -> np.ndarray:
    """Sum over m=1..k of m/n * ((n-i-1)/n)**(m-1), vectorised over levels."""
    r = (n - levels - 1) / n
    total = np.zeros_like(r)
    for m in range(k, 0, -1):
        total = total * r + m / n  # Horner form
    return total


def rt_opt_k(k: int, n: int) -> float:
    """Runtime constant of always using the locally best of 1..k flips."""
    if k < 1 or n < 1:
        raise InvalidConfiguration("need k >= 1 and n >= 1")
    parts = []
    for m, lo, hi in region_bounds(n, k):
        levels = np.arange(lo, hi + 1, dtype=np.float64)
        p = m / n * ((n - levels - 1) / n) ** (m - 1)
        parts.append(1.0 / p)
    return _sum_levels(np.concatenate(parts)) / (2.0 * n * n)


def rt_simple_random_k(k: int, n: int, target: int | None = None) -> float:
    """Constant for picking each of 1..k flips with probability 1/k, up to ``target``."""
    if k < 1 or n < 1:
        raise InvalidConfiguration("need k >= 1 and n >= 1")
    x = n if target is None else int(target)
    if not 0 < x <= n:
        raise InvalidConfiguration(f"target must lie in (0, n], got {target}")
    levels = np.arange(x, dtype=np.float64)
    return k * _sum_levels(1.0 / _mixture(k, levels, n)) / (2.0 * n * n)


def rt_simple_random_weights(weights, n: int, target: int | None = None) -> float:
    """Finite-n constant for arbitrary selection weights over 1..len(weights) flips."""
    w = np.asarray(weights, dtype=np.float64)
    x = n if target is None else int(target)
    levels = np.arange(x, dtype=np.float64)
    r = (n - levels - 1) / n
    p = sum(wm * (m + 1) / n * r**m for m, wm in enumerate(w))
    with np.errstate(divide="ignore"):
        inv = 1.0 / p
    if not np.all(np.isfinite(inv)):
        return math.inf
    return _sum_levels(inv) / (2.0 * n * n)


def rt_simple_random_two(p1: float) -> float:
    """Limit constant with 1-flip weight p1 and 2-flip weight 1-p1; inf at p1=0."""
    if not 0.0 <= p1 <= 1.0:
        raise InvalidConfiguration(f"p1 must lie in [0, 1], got {p1}")
    if p1 == 0.0:
        return math.inf
    if p1 == 1.0:
        return 0.5
    return math.log((2.0 - p1) / p1) / (4.0 * (1.0 - p1))


def _region_integral(m: int, a: float, b: float) -> float:
    """Integral of 1/(m (1-x)**(m-1)) over [a, b]."""
    if m == 1:
        return b - a
    if m == 2:
        return 0.5 * (math.log1p(-a) - math.log1p(-b))
    return ((1.0 - b) ** (2 - m) - (1.0 - a) ** (2 - m)) / (m * (m - 2))


def grg_optimal_constant(k: int) -> float:
    """Large-n limit of :func:`rt_opt_k`.

    This is also the bound's value when the learning period grows faster than
    n (while staying below (1/k) n ln n), so the random gradient with such a
    period matches the best per-level choice.
    """
    if k < 1:
        raise InvalidConfiguration(f"operator count must be at least 1, got {k}")
    total = [_region_integral(k, 0.0, 1.0 / k)]
    total += [_region_integral(m, 1.0 / (m + 1), 1.0 / m) for m in range(1, k)]
    return 0.5 * math.fsum(total)


def m_weight(m: int, j, w: int, tau_over_n: float):
    """Per-operator stage weight of the learning-period bound.

    m=1 gives min(tau/n, 1). For m >= 2 it is 1/(m (1-j/w)**(m-1)) capped at
    tau/n, and tau/n in the last stage. Vectorised over ``j``.
    """
    jj = np.asarray(j, dtype=np.float64)
    if np.any(jj < 1) or np.any(jj > w):
        raise InvalidConfiguration(f"stage index must lie in [1, {w}]")
    t = tau_over_n
    if m == 1:
        out = np.full(jj.shape, min(t, 1.0))
    else:
        r = 1.0 - jj / w
        with np.errstate(divide="ignore"):
            base = 1.0 / (m * r ** (m - 1))
        out = np.where((jj == w) | (base > t), t, base)
    return float(out) if out.ndim == 0 else out


def _stage_terms(k: int, t: float, w: int, last: int) -> tuple[np.ndarray, bool]:
    j = np.arange(1, last + 1, dtype=np.float64)
    r = 1.0 - j / w
    expo = np.vstack([m * t * r ** (m - 1) for m in range(1, k + 1)])
    weights = np.vstack([m_weight(m, j, w, t) for m in range(1, k + 1)])
    top = expo.max(axis=0)
    overflow = bool(top.max() > _EXP_LIMIT)
    # numerator and denominator are both divided by e^top
    scale = np.exp(-top)
    rel = np.exp(expo - top)
    num = k * t * scale + (rel * weights).sum(axis=0)
    # e^E - 1 via expm1 where it is representable, to avoid cancellation near E = 0
    finite = expo < _EXP_LIMIT - 1.0
    den = np.where(finite, np.expm1(np.where(finite, expo, 0.0)) * scale, rel - scale).sum(axis=0)
    return num / (w * den), overflow


def grg_bound_report(query: TheoryQuery) -> BoundReport:
    """Evaluate the learning-period bound together with its validity data."""
    k, t, w = query.k, query.tau_over_n, query.w
    limit = 1.0 / k - query.epsilon
    ln_min = t / limit if limit > 0 else math.inf
    min_n = math.exp(ln_min) if ln_min < _EXP_LIMIT else math.inf
    valid = None if query.n is None else query.n >= min_n
    if query.n is not None and not valid:
        warnings.warn(
            f"tau/n={t:g} exceeds (1/k - eps) ln n for k={k}, n={query.n}; the bound is only proven for n >= {min_n:.4g}",
            TauValidityWarning,
            stacklevel=2,
        )
    if math.isinf(t):
        value = grg_optimal_constant(k)
        if query.x_over_n < 1.0:
            value = _optimal_fixed_target(k, query.x_over_n)
        return BoundReport(value, valid, min_n, False)
    if k == 1:
        return BoundReport(0.5 * query.x_over_n, valid, min_n, False)
    last = min(w, math.ceil(query.x_over_n * w - 1e-12))
    terms, overflow = _stage_terms(k, t, w, last)
    return BoundReport(0.5 * math.fsum(terms.tolist()), valid, min_n, overflow)


def grg_upper_bound(query: TheoryQuery) -> float:
    return grg_bound_report(query).value


def _optimal_fixed_target(k: int, x: float) -> float:
    """Limit constant of the best per-level choice up to fitness x*n."""
    parts = []
    for m in range(k, 0, -1):
        a = 0.0 if m == k else 1.0 / (m + 1)
        b = 1.0 / m
        if a >= x:
            break
        parts.append(_region_integral(m, a, min(b, x)))
    return 0.5 * math.fsum(parts)


def fixed_target_theory(query: TheoryQuery, mechanism: str, n: int | None = None) -> float:
    """Constant for first reaching fitness x*n.

    ``mechanism`` is "simple" (uniform over 1..k flips, finite-n sum, needs
    ``n`` or ``query.n``) or "grg" (stage sum cut after ceil(x*w) stages).
    """
    if mechanism == "simple":
        size = n if n is not None else query.n
        if size is None:
            raise InvalidConfiguration("the simple random fixed-target sum needs a problem size")
        target = max(1, math.floor(query.x_over_n * size + 1e-9))
        return rt_simple_random_k(query.k, size, target)
    if mechanism == "grg":
        return grg_upper_bound(query)
    raise InvalidConfiguration(f"unknown mechanism {mechanism!r}; use 'simple' or 'grg'")


def tau_validity(k: int, tau_over_n: float, n: int, epsilon: float = DEFAULT_EPSILON) -> bool:
    limit = 1.0 / k - epsilon
    return limit > 0 and tau_over_n <= limit * math.log(n)
