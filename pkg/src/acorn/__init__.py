"""Control-plane verifier over symbolic routing graphs.

Encodes stable-routing instances as SMT constraint systems, verifies
reachability and policy properties under a hierarchy of route-selection
abstractions, validates counterexamples against concrete semantics, and
ships an exhaustive oracle plus benchmark generators.
"""

from .srp import (
    AbstractionLevel,
    Attribute,
    AttributeSchema,
    CommMode,
    FULL,
    LP,
    LP_PATHLEN,
    LP_PATHLEN_MED,
    Level,
    NO_ROUTE,
    Pref,
    Protocol,
    STAR,
    SrpInstance,
    Topology,
    compare,
    minimal_set,
    prune_schema,
)
from .policy import DROPPED, EdgePolicy, PolicyIR, apply_transfer
from .air import parse_air, print_air, ingest_gml
from .encoder import GRAPH, STANDARD, UnsupportedFeatureError, encode, encode_path_regex
from .bridge import SolverConfig, SolverOutcome, default_config, enumerate_models, solve
from .verifier import (
    PropertySpec,
    RefinePolicy,
    Verdict,
    VerdictStatus,
    validate_counterexample,
    verify,
)
from .oracle import check_overapprox, enumerate_solutions, random_instance

__version__ = "0.1.0"
