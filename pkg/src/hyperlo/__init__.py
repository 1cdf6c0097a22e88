"""Selection hyper-heuristics over mutation operators on LeadingOnes.

Runtime constants from closed forms, and two simulators (exact and
fitness-level fast sampling) to check them.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .bitstring import BitString, leading_ones, mbitflip, rls_flip, standard_bit_mutation  # noqa: E402
from .engine import (  # noqa: E402
    AggregateStats,
    Batch,
    RunConfig,
    RunResult,
    aggregate,
    replicate_rng,
    run,
    run_exact,
    run_fast,
    run_reference,
    run_replicates,
    sample_freeriders,
    sample_waiting_time,
)
from .errors import BudgetExceeded, InvalidConfiguration  # noqa: E402
from .mechanisms import HeuristicSet, Kind, MechanismState, hh_step, select_operator  # noqa: E402
from .probability import (  # noqa: E402
    Family,
    Model,
    OperatorSpec,
    crossover_point,
    optimal_operator,
    p_improve,
    p_improve_exact_mbitflip,
    p_improve_leading,
    p_improve_mbitflip_exact,
    p_improve_rls,
)
from .tau import TauSpec  # noqa: E402
from .theory import (  # noqa: E402
    OMEGA,
    TheoryQuery,
    fixed_target_theory,
    grg_optimal_constant,
    grg_upper_bound,
    m_weight,
    rt_opt_k,
    rt_simple_random_k,
    rt_simple_random_two,
)
