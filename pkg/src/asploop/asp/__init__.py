"""Parser, grounder, and enumerator for the grid-puzzle ASP fragment."""

from .ground import (
    GroundChoice,
    GroundConstraint,
    GroundProgram,
    GroundRule,
    GroundingError,
    ground_program,
)
from .parser import Diagnostic, ParseResult, parse_ground_atom, parse_program
from .solve import (
    BRUTE_FORCE_BOUND,
    BruteForceRefusal,
    EnumerationBudgetError,
    brute_force_models,
    enumerate_models,
)
from .syntax import (
    Atom,
    GroundAtom,
    Statement,
    ground_atom_key,
    render_ground_atom,
    render_program,
    render_statement,
)

__all__ = [
    "Atom",
    "BRUTE_FORCE_BOUND",
    "BruteForceRefusal",
    "Diagnostic",
    "EnumerationBudgetError",
    "GroundAtom",
    "GroundChoice",
    "GroundConstraint",
    "GroundProgram",
    "GroundRule",
    "GroundingError",
    "ParseResult",
    "Statement",
    "brute_force_models",
    "enumerate_models",
    "ground_atom_key",
    "ground_program",
    "parse_ground_atom",
    "parse_program",
    "render_ground_atom",
    "render_program",
    "render_statement",
]
