"""r-flip local search and hybrid tabu search for QUBO."""
from .core import (
    DimensionError,
    FlipSet,
    InvalidFlipSetError,
    QuboInstance,
    SolutionState,
    apply_one_flip,
    apply_set_flip,
    compute_derivatives,
    delta_one_flip,
    delta_set_flip,
    evaluate_objective,
    is_one_flip_local_opt,
)
from .estimators import (
    ExhaustiveRFlipSearch,
    HybridTabuSearch,
    MST2Search,
    OneFlipSearch,
    Strategy1Search,
    Strategy2Search,
)
from .io import GeneratorSpec, InstanceParseError, generate_instance, load_instance, parse_instance, write_instance
from .mst2 import Mst2Config, mst2_run
from .search import (
    alg1_one_flip,
    alg2_exhaustive_rflip,
    alg3_strategy1,
    alg4_strategy2,
    build_D1,
    build_Dn,
    candidate_prefix_sets,
    compute_M,
    improving_rflip_certificate,
)
from .solve import ALGORITHMS, solve
from .tabu import SearchConfig, SearchResult, alg5_hybrid

__all__ = [name for name in dir() if not name.startswith("_")]
