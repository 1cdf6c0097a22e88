"""Heuristic-selection mechanisms as explicit state machines.

This is the readable reference implementation. It drives one mutation per
call of :func:`hh_step` on a :class:`~hyperlo.bitstring.BitString` and is
used as an oracle for the compiled engine.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .bitstring import BitString, leading_ones, mbitflip, rls_flip, standard_bit_mutation
from .errors import InvalidConfiguration
from .probability import Family, OperatorSpec


class Kind(str, enum.Enum):
    SIMPLE_RANDOM = "simple"
    PERMUTATION = "permutation"
    GREEDY = "greedy"
    RANDOM_GRADIENT = "random-gradient"
    GRG = "grg"

    @property
    def needs_tau(self) -> bool:
        return self is Kind.GRG


@dataclass(frozen=True)
class HeuristicSet:
    operators: tuple[OperatorSpec, ...]

    def __post_init__(self) -> None:
        ops = tuple(self.operators)
        if not ops:
            raise InvalidConfiguration("a heuristic set needs at least one operator")
        object.__setattr__(self, "operators", ops)

    @property
    def k(self) -> int:
        return len(self.operators)

    @classmethod
    def flips(cls, k: int, family: Family | str = Family.BITFLIP) -> HeuristicSet:
        """The canonical set {1, ..., k} flips of one family."""
        if k < 1:
            raise InvalidConfiguration(f"operator count must be at least 1, got {k}")
        return cls(tuple(OperatorSpec(Family(family), m) for m in range(1, k + 1)))

    @classmethod
    def sbm(cls, rate: float) -> HeuristicSet:
        return cls((OperatorSpec(Family.SBM, 1, rate),))

    @property
    def labels(self) -> list[str]:
        return [op.label for op in self.operators]


def apply_operator(op: OperatorSpec, x: BitString, rng: np.random.Generator) -> BitString:
    if op.family is Family.BITFLIP:
        return mbitflip(x, op.m, rng)
    if op.family is Family.RLS:
        return rls_flip(x, op.m, rng)
    return standard_bit_mutation(x, float(op.rate), rng)


@dataclass
class MechanismState:
    """Selection state for one run.

    ``fails`` is the consecutive-failure counter of the current operator and
    ``current`` the operator index held by the gradient mechanisms.
    """

    kind: Kind
    k: int
    weights: np.ndarray | None = None
    tau: int | None = None
    permutation: list[int] = field(default_factory=list)
    cursor: int = 0
    current: int | None = None
    fails: int = 0
    last_improved: bool = False

    @classmethod
    def create(
        cls,
        kind: Kind | str,
        k: int,
        rng: np.random.Generator,
        weights=None,
        tau: int | None = None,
    ) -> MechanismState:
        kind = Kind(kind)
        if k < 1:
            raise InvalidConfiguration(f"operator count must be at least 1, got {k}")
        state = cls(kind=kind, k=k)
        if kind is Kind.SIMPLE_RANDOM:
            w = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=np.float64)
            state.weights = validate_weights(w, k)
        elif weights is not None:
            raise InvalidConfiguration("weights only apply to the simple random mechanism")
        if kind is Kind.GRG:
            if tau is None or tau < 1:
                raise InvalidConfiguration(f"learning period must be a positive integer, got {tau}")
            state.tau = int(tau)
        if kind is Kind.PERMUTATION:
            state.permutation = [int(v) for v in rng.permutation(k)]
        return state


def validate_weights(w: np.ndarray, k: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.size != k:
        raise InvalidConfiguration(f"expected {k} weights, got {w.size}")
    if np.any(w < 0) or np.any(w > 1) or abs(w.sum() - 1.0) > 1e-9:
        raise InvalidConfiguration(f"weights must lie in [0, 1] and sum to 1, got {w.tolist()}")
    return w


def select_operator(state: MechanismState, rng: np.random.Generator) -> int:
    """Choose the operator index for the next (non-greedy) step."""
    kind = state.kind
    if kind is Kind.GREEDY:
        raise InvalidConfiguration("greedy applies every operator; it has no single selection")
    if kind is Kind.SIMPLE_RANDOM:
        if state.k == 1:
            return 0
        return int(rng.choice(state.k, p=state.weights))
    if kind is Kind.PERMUTATION:
        h = state.permutation[state.cursor]
        state.cursor = (state.cursor + 1) % state.k
        return h
    if kind is Kind.RANDOM_GRADIENT:
        # keep the operator only while it keeps improving
        if state.current is None or not state.last_improved:
            state.current = int(rng.integers(state.k))
        return state.current
    if state.current is None or state.fails >= state.tau:
        state.current = int(rng.integers(state.k))
        state.fails = 0
    return state.current


def record_outcome(state: MechanismState, improved: bool) -> None:
    state.last_improved = improved
    state.fails = 0 if improved else state.fails + 1


@dataclass(frozen=True)
class StepResult:
    x: BitString
    fitness: int
    evals: int
    improved: bool
    operator: int


def hh_step(
    state: MechanismState,
    hset: HeuristicSet,
    x: BitString,
    rng: np.random.Generator,
    fitness: int | None = None,
) -> StepResult:
    """One iteration: select, mutate, accept iff strictly fitter."""
    fx = leading_ones(x) if fitness is None else fitness
    if fx >= x.n:
        raise InvalidConfiguration("the string is already optimal")
    if state.kind is Kind.GREEDY:
        children = [apply_operator(op, x, rng) for op in hset.operators]
        values = np.array([leading_ones(c) for c in children])
        best = int(values.max())
        if best <= fx:
            record_outcome(state, False)
            return StepResult(x, fx, hset.k, False, -1)
        ties = np.flatnonzero(values == best)
        h = int(ties[0]) if ties.size == 1 else int(rng.choice(ties))
        record_outcome(state, True)
        return StepResult(children[h], best, hset.k, True, h)

    h = select_operator(state, rng)
    child = apply_operator(hset.operators[h], x, rng)
    fc = leading_ones(child)
    improved = fc > fx
    record_outcome(state, improved)
    if improved:
        return StepResult(child, fc, 1, True, h)
    return StepResult(x, fx, 1, False, h)
