"""Self-contained SMT-LIB / graph-CNF solver used as the default backend.

Covers exactly the fragment the encoders emit: quantifier-free booleans and
unsigned bit-vectors for standard scripts, plus DIMACS-with-graph files whose
reachability atoms are discharged by a lazy theory loop.  Invoked as a
subprocess (``python -m acorn.minismt file``); any external SMT-LIB solver can
replace it via the ACORN_SOLVER environment variable.
"""

from .core import Sat
from .bitblast import BitBlaster, CnfBuilder

__all__ = ["Sat", "BitBlaster", "CnfBuilder"]
