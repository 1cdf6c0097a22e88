"""Experiment specifications, grid expansion and the command implementations."""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .engine import RunConfig, aggregate, replicate_rng, run_reference, run_replicates, TraceEntry
from .errors import InvalidConfiguration
from .mechanisms import HeuristicSet, Kind
from .output import Table
from .probability import (
    Family,
    Model,
    p_improve_exact_mbitflip,
    p_improve_leading,
    p_improve_rls_fraction,
)
from .tau import TauSpec, tau_range
from .theory import (
    DEFAULT_EPSILON,
    DEFAULT_STAGES,
    TauValidityWarning,
    TheoryQuery,
    fixed_target_theory,
    grg_bound_report,
    grg_optimal_constant,
    rt_opt_k,
    rt_simple_random_k,
    rt_simple_random_two,
    rt_simple_random_weights,
)

log = logging.getLogger(__name__)

COMMANDS = ("theory", "simulate", "sweep", "fixed-target", "validate")
MECHANISM_ALIASES = {
    "simple": Kind.SIMPLE_RANDOM,
    "simple-random": Kind.SIMPLE_RANDOM,
    "random": Kind.SIMPLE_RANDOM,
    "permutation": Kind.PERMUTATION,
    "greedy": Kind.GREEDY,
    "random-gradient": Kind.RANDOM_GRADIENT,
    "rg": Kind.RANDOM_GRADIENT,
    "grg": Kind.GRG,
}
THEORY_MECHANISMS = ("grg", "simple", "opt")
DEFAULT_FIXED_TARGETS = tuple(round(0.05 * j, 2) for j in range(1, 21))


@dataclass
class ExperimentSpec:
    """A fully parsed command configuration.

    List-valued fields are grid axes; the grid is their Cartesian product in
    the order n, k, tau, mechanism.
    """

    command: str
    n: list[int] = field(default_factory=lambda: [1000])
    k: list[int] = field(default_factory=lambda: [2])
    tau: list[TauSpec] = field(default_factory=lambda: [TauSpec.parse("10n")])
    mechanism: list[str] = field(default_factory=lambda: ["grg"])
    engine: str = "auto"
    family: str = "bitflip"
    model: str = "leading"
    replicates: int = 10_000
    seed: int = 0
    w: int = DEFAULT_STAGES
    targets: list[float] = field(default_factory=list)
    weights: list[float] | None = None
    rate: float | None = None
    p1: float | None = None
    epsilon: float = DEFAULT_EPSILON
    jobs: int = 1
    out: str | None = None

    def canonical(self) -> dict:
        """Everything that affects results (not output path or parallelism)."""
        d = asdict(self)
        d["tau"] = [t.raw for t in self.tau]
        d.pop("out")
        d.pop("jobs")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def metadata(self) -> dict:
        return {
            "tool": f"hyperlo {__version__}",
            "command": self.command,
            "spec_sha256": self.digest(),
            "seed": self.seed,
            "engine": self.engine,
            "model": self.model,
            "family": self.family,
            "tau": [t.raw for t in self.tau],
            "replicates": self.replicates,
            "spec": self.canonical(),
        }


# parsing -------------------------------------------------------------------

def _split(text: str) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise InvalidConfiguration(f"expected a number, got {text!r}") from exc


def _integer(text: str) -> int:
    value = _number(text)
    if value != int(value):
        raise InvalidConfiguration(f"expected an integer, got {text!r}")
    return int(value)


def parse_int_list(text: str) -> list[int]:
    """Comma list of integers; items may be inclusive ranges start:stop[:step]."""
    out: list[int] = []
    for item in _split(text):
        if ":" in item:
            parts = [_integer(p) for p in item.split(":")]
            if len(parts) == 2:
                parts.append(1)
            if len(parts) != 3 or parts[2] <= 0:
                raise InvalidConfiguration(f"bad integer range {item!r}")
            out.extend(range(parts[0], parts[1] + 1, parts[2]))
        else:
            out.append(_integer(item))
    if not out:
        raise InvalidConfiguration(f"empty list {text!r}")
    return out


def parse_tau_list(text: str) -> list[TauSpec]:
    out: list[TauSpec] = []
    for item in _split(text):
        out.extend(tau_range(item))
    if not out:
        raise InvalidConfiguration(f"empty learning-period list {text!r}")
    return out


def parse_float_list(text: str) -> list[float]:
    return [_number(p) for p in _split(text)]


_FIELD_PARSERS = {
    "n": parse_int_list,
    "k": parse_int_list,
    "tau": parse_tau_list,
    "mechanism": lambda s: [p.lower() for p in _split(s)],
    "engine": lambda s: s.strip().lower(),
    "family": lambda s: s.strip().lower(),
    "model": lambda s: s.strip().lower(),
    "replicates": _integer,
    "seed": _integer,
    "w": _integer,
    "targets": parse_float_list,
    "weights": parse_float_list,
    "rate": _number,
    "p1": _number,
    "epsilon": _number,
    "jobs": _integer,
    "out": lambda s: s.strip(),
}


def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfiguration(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfiguration(f"{path}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_PARSERS and key != "command":
            raise InvalidConfiguration(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_spec(command: str, raw: dict[str, str]) -> ExperimentSpec:
    """Parse raw string values into a validated spec with command defaults."""
    if command not in COMMANDS:
        raise InvalidConfiguration(f"unknown command {command!r}")
    spec = ExperimentSpec(command=command)
    if command == "theory":
        spec.n = []  # closed-form limits unless a size is given
        spec.k = [2, 3, 4, 5]
        spec.tau = [TauSpec.parse(t) for t in ("5n", "50n", "100n")]
    elif command == "fixed-target":
        spec.n = [10_000]
        spec.mechanism = ["simple", "grg"]
        spec.targets = list(DEFAULT_FIXED_TARGETS)
    for key, value in raw.items():
        if value is None or key == "command":
            continue
        setattr(spec, key, _FIELD_PARSERS[key](str(value)))
    _validate_spec(spec)
    return spec


def _validate_spec(spec: ExperimentSpec) -> None:
    if any(n < 1 for n in spec.n):
        raise InvalidConfiguration("problem sizes must be positive")
    if any(k < 1 for k in spec.k):
        raise InvalidConfiguration("operator counts must be positive")
    if spec.replicates < 1:
        raise InvalidConfiguration("replicates must be at least 1")
    if spec.w < 1:
        raise InvalidConfiguration("stage count w must be at least 1")
    if spec.jobs < 1:
        raise InvalidConfiguration("jobs must be at least 1")
    if spec.engine not in ("auto", "exact", "fast"):
        raise InvalidConfiguration(f"unknown engine {spec.engine!r}")
    try:
        Family(spec.family)
        Model(spec.model)
    except ValueError as exc:
        raise InvalidConfiguration(str(exc)) from exc
    allowed = THEORY_MECHANISMS if spec.command == "theory" else tuple(MECHANISM_ALIASES)
    for m in spec.mechanism:
        if m not in allowed:
            raise InvalidConfiguration(f"unknown mechanism {m!r} for {spec.command}; choose from {allowed}")
    if spec.command == "fixed-target":
        if not spec.targets:
            raise InvalidConfiguration("fixed-target needs at least one target")
        for n in spec.n:
            resolve_targets(spec.targets, n)


def resolve_targets(values: list[float], n: int) -> tuple[int, ...]:
    """Targets as fitness levels. All values <= 1 are fractions of n, else absolute levels."""
    if not values:
        return ()
    if all(0 < v <= 1 for v in values):
        levels = [max(1, math.floor(v * n + 1e-9)) for v in values]
    elif all(float(v).is_integer() for v in values):
        levels = [int(v) for v in values]
    else:
        raise InvalidConfiguration(f"targets are either all fractions in (0, 1] or all integer levels, got {values}")
    if any(t <= 0 or t > n for t in levels):
        raise InvalidConfiguration(f"targets must lie in (0, n] = (0, {n}], got {values}")
    return tuple(sorted(set(levels)))


# grid -----------------------------------------------------------------------

@dataclass(frozen=True)
class GridPoint:
    index: int
    n: int
    k: int
    tau: TauSpec | None
    mechanism: str


def expand_grid(spec: ExperimentSpec) -> list[GridPoint]:
    """Cartesian product n x k x tau x mechanism; tau collapses for mechanisms without one."""
    points: list[GridPoint] = []
    seen = set()
    for n, k, tau, mech in itertools.product(spec.n, spec.k, spec.tau, spec.mechanism):
        uses_tau = mech == "grg"
        key = (n, k, tau.raw if uses_tau else None, mech)
        if key in seen:
            continue
        seen.add(key)
        points.append(GridPoint(len(points), n, k, tau if uses_tau else None, mech))
    return points


def point_seed(master: int, index: int) -> int:
    """Independent 64-bit seed for one grid point."""
    state = np.random.SeedSequence(entropy=int(master), spawn_key=(int(index),)).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def heuristic_set(spec: ExperimentSpec, k: int, n: int) -> HeuristicSet:
    family = Family(spec.family)
    if family is Family.SBM:
        return HeuristicSet.sbm(spec.rate if spec.rate is not None else 1.0 / n)
    return HeuristicSet.flips(k, family)


def run_config(spec: ExperimentSpec, point: GridPoint, targets: tuple[int, ...] = ()) -> RunConfig:
    kind = MECHANISM_ALIASES[point.mechanism]
    hset = heuristic_set(spec, point.k, point.n)
    tau = point.tau.resolve(point.n) if point.tau is not None else None
    engine = spec.engine
    if engine == "auto":
        fast_ok = kind in (Kind.SIMPLE_RANDOM, Kind.RANDOM_GRADIENT, Kind.GRG) and spec.family != "sbm"
        engine = "fast" if fast_ok else "exact"
    weights = tuple(spec.weights) if spec.weights and kind is Kind.SIMPLE_RANDOM else None
    return RunConfig(
        n=point.n,
        heuristics=hset,
        mechanism=kind,
        tau=tau,
        weights=weights,
        engine=engine,
        model=Model(spec.model),
        seed=point_seed(spec.seed, point.index),
        targets=targets,
    )


# commands -------------------------------------------------------------------

def _theory_value(spec: ExperimentSpec, mech: str, k: int, n: int | None, tau: TauSpec | None, x: float = 1.0):
    """(constant, valid, min_valid_n) for one theory grid point."""
    if mech == "opt":
        return (rt_opt_k(k, n) if n else grg_optimal_constant(k)), None, math.nan
    if mech == "simple":
        if spec.p1 is not None and k == 2 and x == 1.0:
            return rt_simple_random_two(spec.p1), None, math.nan
        if n is None:
            raise InvalidConfiguration("the simple random constant is a finite sum; give --n")
        if spec.weights:
            return rt_simple_random_weights(spec.weights, n, max(1, math.floor(x * n + 1e-9))), None, math.nan
        return fixed_target_theory(TheoryQuery(k, x_over_n=x, n=n), "simple"), None, math.nan
    q = TheoryQuery(k, tau_over_n=tau.over_n(n), w=spec.w, x_over_n=x, epsilon=spec.epsilon, n=n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TauValidityWarning)
        rep = grg_bound_report(q)
    valid, min_n = rep.valid, rep.min_valid_n
    if tau.unit == "nlnn":
        # c * n ln n is in range for every n or for none
        valid = tau.value <= 1.0 / k - spec.epsilon
        min_n = 1.0 if valid else math.inf
    if valid is False:
        log.warning("k=%d tau=%s: outside the proven range at n=%s (needs n >= %.4g)", k, tau.raw, n, min_n)
    return rep.value, valid, min_n


def cmd_theory(spec: ExperimentSpec) -> Table:
    table = Table(
        columns=["mechanism", "k", "n", "tau", "tau_over_n", "w", "constant", "valid", "min_valid_n"],
        metadata=spec.metadata(),
        dat_groups=("mechanism", "k"),
        dat_x="tau_over_n",
        dat_y="constant",
    )
    ns: list[int | None] = list(spec.n) or [None]
    for n, k, tau, mech in itertools.product(ns, spec.k, spec.tau, spec.mechanism):
        if mech != "grg" and tau is not spec.tau[0]:
            continue
        if tau.unit in ("nlnn", "") and n is None and mech == "grg":
            raise InvalidConfiguration(f"learning period {tau.raw!r} depends on n; give --n")
        value, valid, min_n = _theory_value(spec, mech, k, n, tau)
        table.add(
            mechanism=mech, k=k, n=n, tau=tau.raw if mech == "grg" else None,
            tau_over_n=tau.over_n(n) if mech == "grg" else None, w=spec.w if mech == "grg" else None,
            constant=value, valid=valid, min_valid_n=min_n,
        )
    return table


def _simulate(spec: ExperimentSpec, with_theory: bool) -> Table:
    cols = ["n", "k", "mechanism", "family", "engine", "tau", "tau_evals", "point_seed",
            "replicates", "mean", "std", "stderr", "mean_over_n2"]
    if with_theory:
        cols.append("theory")
    table = Table(columns=cols, metadata=spec.metadata(), dat_groups=("mechanism", "k", "tau"), dat_x="n", dat_y="mean_over_n2")
    if with_theory and len(spec.tau) > 1:
        table.dat_groups = ("mechanism", "k", "n")
        table.dat_x = "tau_over_n"
        table.columns.insert(table.columns.index("tau_evals") + 1, "tau_over_n")
    for point in expand_grid(spec):
        config = run_config(spec, point)
        log.info("point %d: n=%d k=%d %s tau=%s engine=%s", point.index, point.n, point.k, point.mechanism,
                 point.tau.raw if point.tau else "-", config.engine)
        stats = aggregate(run_replicates(config, spec.replicates, jobs=spec.jobs))
        row = dict(
            n=point.n, k=config.heuristics.k, mechanism=point.mechanism, family=spec.family, engine=config.engine,
            tau=point.tau.raw if point.tau else None, tau_evals=config.tau, point_seed=config.seed,
            replicates=stats.replicates, mean=stats.mean, std=stats.std, stderr=stats.stderr,
            mean_over_n2=stats.normalised_mean,
        )
        if "tau_over_n" in table.columns:
            row["tau_over_n"] = config.tau / point.n if config.tau else None
        if with_theory:
            row["theory"] = _prediction(spec, point, config)
        table.add(**row)
    return table


def _prediction(spec: ExperimentSpec, point: GridPoint, config: RunConfig, x: float = 1.0) -> float:
    """Closed-form constant matching a simulated grid point, or nan if none applies."""
    if spec.family == "sbm":
        return math.nan
    kind = config.mechanism
    if kind is Kind.GRG:
        q = TheoryQuery(point.k, tau_over_n=config.tau / point.n, w=spec.w, x_over_n=x)
        return grg_bound_report(q).value if point.k > 1 else 0.5 * x
    if kind is Kind.SIMPLE_RANDOM:
        target = max(1, math.floor(x * point.n + 1e-9))
        if spec.weights:
            return rt_simple_random_weights(spec.weights, point.n, target)
        return rt_simple_random_k(point.k, point.n, target)
    return math.nan


def cmd_simulate(spec: ExperimentSpec) -> Table:
    return _simulate(spec, with_theory=False)


def cmd_sweep(spec: ExperimentSpec) -> Table:
    return _simulate(spec, with_theory=True)


def cmd_fixed_target(spec: ExperimentSpec) -> Table:
    table = Table(
        columns=["n", "k", "mechanism", "engine", "tau", "target", "target_over_n", "replicates",
                 "mean", "stderr", "mean_over_n2", "theory"],
        metadata=spec.metadata(),
        dat_groups=("mechanism", "k", "tau"),
        dat_x="target_over_n",
        dat_y="mean_over_n2",
    )
    for point in expand_grid(spec):
        targets = resolve_targets(spec.targets, point.n)
        config = run_config(spec, point, targets)
        stats = aggregate(run_replicates(config, spec.replicates, jobs=spec.jobs))
        for x in config.all_targets:
            s = stats.hitting[x]
            table.add(
                n=point.n, k=config.heuristics.k, mechanism=point.mechanism, engine=config.engine,
                tau=point.tau.raw if point.tau else None, target=x, target_over_n=x / point.n,
                replicates=stats.replicates, mean=s.mean, stderr=s.stderr, mean_over_n2=s.normalised_mean,
                theory=_prediction(spec, point, config, x / point.n),
            )
    return table


# validation -----------------------------------------------------------------

@dataclass
class Check:
    name: str
    expected: object
    provenance: str  # "reference" (published value), "derived" (oracle) or "definition"
    observed: object
    tolerance: float | None
    passed: bool

    def as_dict(self) -> dict:
        def clean(v):
            if isinstance(v, Fraction):
                return str(v)
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            return v

        return {k: clean(v) for k, v in asdict(self).items()}


TABLE_REFERENCE = {
    (2, 5): 0.46493, (2, 50): 0.42363, (2, 100): 0.42329,
    (3, 5): 0.46802, (3, 50): 0.40579, (3, 100): 0.40525,
    (4, 5): 0.48102, (4, 50): 0.39897, (4, 100): 0.39830,
    (5, 5): 0.49630, (5, 50): 0.39568, (5, 100): 0.39492,
}


def _close(name, expected, observed, tol, provenance="reference") -> Check:
    return Check(name, expected, provenance, observed, tol, bool(abs(observed - expected) <= tol))


def validation_checks(seed: int = 0, replicates: int = 2000) -> list[Check]:
    checks: list[Check] = []

    # probability oracles
    worst = 0.0
    ok12 = True
    for n in range(2, 13):
        for i in range(n):
            ok12 &= p_improve_exact_mbitflip(1, i, n) == Fraction(1, n)
            ok12 &= p_improve_exact_mbitflip(2, i, n) == Fraction(2 * (n - i - 1), n * n)
    checks.append(Check("bitflip m<=2 enumeration equals closed form (n<=12)", True, "derived", ok12, None, ok12))
    for n in range(6, 21):
        for i in range(n):
            gap = float(p_improve_exact_mbitflip(3, i, n)) - p_improve_leading(3, i, n)
            worst = max(worst, abs(gap) * n * n)
    checks.append(Check("bitflip m=3 dominant-term gap times n^2 (n in 6..20)", 20.0, "derived", worst, None, worst <= 20.0))
    ok_rls = True
    for n in range(2, 11):
        for m in range(1, min(4, n) + 1):
            subsets = list(itertools.combinations(range(n), m))
            for i in range(n):
                good = sum(1 for s in subsets if i in s and all(p >= i for p in s))
                ok_rls &= p_improve_rls_fraction(m, i, n) == Fraction(good, len(subsets))
    checks.append(Check("RLS_m formula equals subset enumeration (n<=10, m<=4)", True, "derived", ok_rls, None, ok_rls))

    # closed forms
    for (k, t), ref in TABLE_REFERENCE.items():
        value = grg_bound_report(TheoryQuery(k, tau_over_n=t)).value
        checks.append(_close(f"learning-period bound k={k} tau={t}n", ref, value, 5e-4))
    for k, ref in ((1, 0.5), (2, 0.42329), (3, 0.40525), (5, 0.39492)):
        checks.append(_close(f"best per-level constant k={k} (n=1e6)", ref, rt_opt_k(k, 10**6), 1e-4))
    checks.append(_close("simple random p1=1/2 constant", math.log(3) / 2, rt_simple_random_two(0.5), 1e-6, "definition"))
    checks.append(_close("simple random k=3 constant (n=1e6)", 0.65281, rt_simple_random_k(3, 10**6), 1e-4))

    # decision traces of the two gradient mechanisms
    equal = True
    for r in range(5):
        traces = []
        for kind, tau in ((Kind.GRG, 1), (Kind.RANDOM_GRADIENT, None)):
            cfg = RunConfig(100, HeuristicSet.flips(2), kind, tau=tau, seed=seed)
            tr: list[TraceEntry] = []
            res = run_reference(cfg, replicate_rng(seed, r), trace=tr)
            traces.append((res, [(e.operator, e.improved) for e in tr]))
        equal &= traces[0] == traces[1]
    checks.append(Check("gradient with tau=1 trace-equals random gradient (n=100)", True, "definition", equal, None, equal))

    # engine agreement on an exactly modelled operator set
    n = 100
    for kind, tau in ((Kind.SIMPLE_RANDOM, None), (Kind.GRG, 5 * n)):
        base = RunConfig(n, HeuristicSet.flips(2, Family.RLS), kind, tau=tau, seed=seed)
        a = aggregate(run_replicates(replace(base, engine="exact"), replicates))
        b = aggregate(run_replicates(replace(base, engine="fast"), replicates))
        se = math.hypot(a.stderr, b.stderr)
        checks.append(Check(
            f"exact vs fast engine, {kind.value} RLS_1/RLS_2 n={n} (diff / combined SE)",
            0.0, "derived", abs(a.mean - b.mean) / se, 2.0, abs(a.mean - b.mean) <= 2 * se,
        ))
    return checks


def cmd_validate(spec: ExperimentSpec) -> tuple[dict, bool]:
    checks = validation_checks(spec.seed, min(spec.replicates, 2000))
    report = {
        "metadata": {"tool": f"hyperlo {__version__}", "seed": spec.seed},
        "checks": [c.as_dict() for c in checks],
        "passed": sum(c.passed for c in checks),
        "failed": sum(not c.passed for c in checks),
    }
    return report, all(c.passed for c in checks)
