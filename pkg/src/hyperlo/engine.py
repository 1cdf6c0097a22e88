"""Run engines: exact per-evaluation simulation and fitness-level fast sampling.

The exact engine mutates a concrete bit string and counts every fitness
evaluation. The fast engine keeps only the current LeadingOnes value: it
samples the geometric waiting time to the next improvement of the active
operator and then advances past the run of uniformly random ones that
follows the flipped bit.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .bitstring import BitString, leading_ones
from .errors import BudgetExceeded, InvalidConfiguration
from .mechanisms import HeuristicSet, Kind, MechanismState, hh_step, validate_weights
from .probability import Family, Model, improvement_table

log = logging.getLogger(__name__)

ENGINES = ("exact", "fast")
FAST_KINDS = (Kind.SIMPLE_RANDOM, Kind.RANDOM_GRADIENT, Kind.GRG)
EXACT_SIZE_HINT = 10**5
NO_LIMIT = 2**62

_FAMILY_CODE = {Family.BITFLIP: K.BITFLIP, Family.RLS: K.RLS, Family.SBM: K.SBM}
_KIND_CODE = {
    Kind.SIMPLE_RANDOM: K.SIMPLE,
    Kind.PERMUTATION: K.PERMUTATION,
    Kind.GREEDY: K.GREEDY,
    Kind.RANDOM_GRADIENT: K.GRG,
    Kind.GRG: K.GRG,
}


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run (or a batch of replicates).

    ``tau`` is the integer learning period for GRG. ``targets`` are fitness
    thresholds in (0, n], strictly increasing; n itself is always recorded.
    """

    n: int
    heuristics: HeuristicSet
    mechanism: Kind = Kind.SIMPLE_RANDOM
    tau: int | None = None
    weights: tuple[float, ...] | None = None
    engine: str = "exact"
    model: Model = Model.LEADING
    seed: int = 0
    targets: tuple[int, ...] = ()
    max_evals: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mechanism", Kind(self.mechanism))
        object.__setattr__(self, "model", Model(self.model))
        if self.n < 1:
            raise InvalidConfiguration(f"problem size must be positive, got {self.n}")
        if self.engine not in ENGINES:
            raise InvalidConfiguration(f"unknown engine {self.engine!r}; choose from {ENGINES}")
        for op in self.heuristics.operators:
            if op.family is Family.RLS and op.m > self.n:
                raise InvalidConfiguration(f"{op.label} needs m <= n = {self.n}")
        if self.mechanism is Kind.GRG:
            if self.tau is None or int(self.tau) < 1:
                raise InvalidConfiguration("the generalised random gradient needs a learning period tau >= 1")
            object.__setattr__(self, "tau", int(self.tau))
        if self.weights is not None:
            if self.mechanism is not Kind.SIMPLE_RANDOM:
                raise InvalidConfiguration("weights only apply to the simple random mechanism")
            w = validate_weights(np.asarray(self.weights), self.heuristics.k)
            object.__setattr__(self, "weights", tuple(float(v) for v in w))
        targets = tuple(int(t) for t in self.targets)
        if any(t <= 0 or t > self.n for t in targets):
            raise InvalidConfiguration(f"targets must lie in (0, n] = (0, {self.n}]")
        if any(b <= a for a, b in zip(targets, targets[1:])):
            raise InvalidConfiguration("targets must be strictly increasing")
        object.__setattr__(self, "targets", targets)
        if self.engine == "fast":
            if self.mechanism not in FAST_KINDS:
                raise InvalidConfiguration(
                    f"the fast engine supports simple random and the random gradient mechanisms, not {self.mechanism.value}"
                )
            if any(op.family is Family.SBM for op in self.heuristics.operators):
                raise InvalidConfiguration("the fast engine has no model for standard bit mutation")
        elif self.n > EXACT_SIZE_HINT:
            log.warning("exact engine at n=%d will be slow; the fast engine is meant for this range", self.n)

    @property
    def all_targets(self) -> tuple[int, ...]:
        return self.targets if self.targets and self.targets[-1] == self.n else self.targets + (self.n,)

    @property
    def weight_array(self) -> np.ndarray:
        k = self.heuristics.k
        return np.asarray(self.weights, dtype=np.float64) if self.weights else np.full(k, 1.0 / k)

    @property
    def kernel_tau(self) -> int:
        if self.mechanism is Kind.RANDOM_GRADIENT:
            return 1
        return int(self.tau) if self.tau is not None else 1


@dataclass(frozen=True)
class RunResult:
    total_evals: int
    hitting: dict[int, int]


@dataclass
class Batch:
    """Replicate outcomes in replicate-index order."""

    config: RunConfig
    totals: np.ndarray
    hits: np.ndarray  # shape (replicates, len(targets))
    targets: tuple[int, ...]

    def __len__(self) -> int:
        return int(self.totals.size)

    def result(self, r: int) -> RunResult:
        return RunResult(int(self.totals[r]), {t: int(v) for t, v in zip(self.targets, self.hits[r])})

    def results(self) -> list[RunResult]:
        return [self.result(r) for r in range(len(self))]


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    stderr: float
    normalised_mean: float


@dataclass(frozen=True)
class AggregateStats:
    replicates: int
    n: int
    total: Summary
    hitting: dict[int, Summary] = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return self.total.mean

    @property
    def std(self) -> float:
        return self.total.std

    @property
    def stderr(self) -> float:
        return self.total.stderr

    @property
    def normalised_mean(self) -> float:
        return self.total.normalised_mean


def replicate_rng(master_seed: int, replicate: int) -> np.random.Generator:
    """Independent generator for one replicate, a pure function of (seed, index)."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replicate),))
    return np.random.Generator(np.random.PCG64(seq))


def _operator_arrays(config: RunConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ops = config.heuristics.operators
    fam = np.array([_FAMILY_CODE[op.family] for op in ops], dtype=np.int64)
    ms = np.array([op.m for op in ops], dtype=np.int64)
    rates = np.array([op.rate_for(config.n) for op in ops], dtype=np.float64)
    return fam, ms, rates


class _Prepared:
    """Kernel arguments derived once per configuration."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.fam, self.ms, self.rates = _operator_arrays(config)
        self.weights = config.weight_array
        self.cumw = np.cumsum(self.weights)
        self.mech = _KIND_CODE[config.mechanism]
        self.tau = config.kernel_tau
        self.targets = np.array(config.all_targets, dtype=np.int64)
        self.max_evals = np.int64(config.max_evals if config.max_evals is not None else NO_LIMIT)
        self.model = K.MODEL_FORMULA
        self.table = np.zeros((1, 1))
        if config.engine == "fast" and config.model is Model.EXACT:
            self.model = K.MODEL_TABLE
            self.table = improvement_table(list(config.heuristics.operators), config.n, Model.EXACT)

    def run(self, rng: np.random.Generator, hits: np.ndarray) -> int:
        c = self.config
        hits[:] = -1
        if c.engine == "exact":
            total = K.exact_run(
                rng, c.n, self.fam, self.ms, self.rates, self.cumw, self.mech, self.tau,
                self.targets, self.max_evals, hits,
            )
            if total < 0:
                raise BudgetExceeded(f"run exceeded max_evals={c.max_evals}")
        else:
            total = K.fast_run(
                rng, c.n, self.fam, self.ms, self.weights, self.mech, self.tau,
                self.model, self.table, self.targets, hits,
            )
            if total < 0:
                raise InvalidConfiguration("no operator can improve some fitness level; the optimum is unreachable")
        return int(total)


def _result(config: RunConfig, total: int, hits: np.ndarray) -> RunResult:
    return RunResult(total, {t: int(v) for t, v in zip(config.all_targets, hits)})


def run_exact(config: RunConfig, rng: np.random.Generator) -> RunResult:
    if config.engine != "exact":
        config = replace(config, engine="exact")
    hits = np.empty(len(config.all_targets), dtype=np.int64)
    total = _Prepared(config).run(rng, hits)
    return _result(config, total, hits)


def run_fast(config: RunConfig, rng: np.random.Generator) -> RunResult:
    if config.engine != "fast":
        config = replace(config, engine="fast")
    hits = np.empty(len(config.all_targets), dtype=np.int64)
    total = _Prepared(config).run(rng, hits)
    return _result(config, total, hits)


def run(config: RunConfig, replicate: int = 0) -> RunResult:
    """One replicate of ``config`` with its derived random source."""
    rng = replicate_rng(config.seed, replicate)
    return run_exact(config, rng) if config.engine == "exact" else run_fast(config, rng)


def run_replicates(config: RunConfig, replicates: int, jobs: int = 1, start: int = 0) -> Batch:
    """Run replicates ``start .. start+replicates-1``; output is independent of ``jobs``."""
    if replicates < 1:
        raise InvalidConfiguration(f"need at least one replicate, got {replicates}")
    prep = _Prepared(config)
    targets = config.all_targets
    totals = np.empty(replicates, dtype=np.int64)
    hits = np.empty((replicates, len(targets)), dtype=np.int64)

    def work(r: int) -> None:
        totals[r] = prep.run(replicate_rng(config.seed, start + r), hits[r])

    if jobs <= 1 or replicates == 1:
        for r in range(replicates):
            work(r)
    else:
        # the kernels release the GIL, so threads run replicates in parallel
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, range(replicates)))
    return Batch(config, totals, hits, targets)


def _summary(values: np.ndarray, n: int) -> Summary:
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return Summary(mean, std, std / math.sqrt(values.size), mean / n**2)


def aggregate(results: Batch | list[RunResult], n: int | None = None) -> AggregateStats:
    """Means, deviations and n**2-normalised means, reduced in input order."""
    if isinstance(results, Batch):
        n = results.config.n
        totals = results.totals
        hit_cols = {t: results.hits[:, j] for j, t in enumerate(results.targets)}
    else:
        if not results:
            raise InvalidConfiguration("cannot aggregate an empty list of results")
        if n is None:
            n = max(max(r.hitting) for r in results)
        totals = np.array([r.total_evals for r in results])
        keys = list(results[0].hitting)
        if any(list(r.hitting) != keys for r in results):
            raise InvalidConfiguration("results record different targets")
        hit_cols = {t: np.array([r.hitting[t] for r in results]) for t in keys}
    if len(totals) == 0:
        raise InvalidConfiguration("cannot aggregate an empty batch")
    return AggregateStats(
        replicates=int(len(totals)),
        n=int(n),
        total=_summary(totals, n),
        hitting={t: _summary(v, n) for t, v in hit_cols.items()},
    )


def sample_waiting_time(p: float, u: float) -> int:
    """Geometric waiting time ceil(log(1-u)/log(1-p)), at least 1."""
    if not 0.0 < p <= 1.0:
        raise InvalidConfiguration(f"success probability must lie in (0, 1], got {p}; the wait would be infinite")
    if not 0.0 <= u < 1.0:
        raise InvalidConfiguration(f"uniform draw must lie in [0, 1), got {u}")
    return int(K.waiting_time(float(p), float(u)))


def sample_freeriders(remaining: int, rng: np.random.Generator) -> int:
    """Leading ones of a uniform random suffix of length ``remaining``."""
    if remaining < 0:
        raise InvalidConfiguration(f"remaining suffix length must be >= 0, got {remaining}")
    return int(min(rng.geometric(0.5) - 1, remaining))


@dataclass
class TraceEntry:
    operator: int
    improved: bool
    fitness: int
    evals: int


def run_reference(
    config: RunConfig,
    rng: np.random.Generator,
    trace: list[TraceEntry] | None = None,
    max_evals: int | None = None,
) -> RunResult:
    """Exact run driven by the readable mechanism state machines.

    Much slower than :func:`run_exact`; used as an oracle and for decision
    traces.
    """
    hset = config.heuristics
    state = MechanismState.create(
        config.mechanism, hset.k, rng, weights=config.weights,
        tau=config.tau if config.mechanism is Kind.GRG else None,
    )
    x = BitString.random(config.n, rng)
    fx = leading_ones(x)
    evals = 0
    targets = config.all_targets
    hitting: dict[int, int] = {}
    limit = max_evals if max_evals is not None else config.max_evals

    def record() -> None:
        for t in targets:
            if t not in hitting and fx >= t:
                hitting[t] = evals

    record()
    while fx < config.n:
        if limit is not None and evals >= limit:
            raise BudgetExceeded(f"run exceeded max_evals={limit}")
        step = hh_step(state, hset, x, rng, fitness=fx)
        evals += step.evals
        x, fx = step.x, step.fitness
        if trace is not None:
            trace.append(TraceEntry(step.operator, step.improved, fx, evals))
        record()
    return RunResult(evals, {t: hitting[t] for t in targets})
