"""Bounded satisfiability checking for metric first-order temporal logic.

Specifications pair a set of requirements with a property; the checker
searches for a minimal-volume finite trace that satisfies every requirement
while violating the property, grounding quantifiers incrementally over a
growing domain of relational objects and delegating to an SMT solver.
"""

from .core import (
    Always, And, Atom, DataConstraint, Eventually, Exists, FalseF, Forall,
    Formula, GuardError, Implies, Interval, Next, Not, Once, Or, Prev,
    Signature, Since, Spec, TrueF, Until, Var, desugar, validate,
    validate_spec,
)
from .oracle import EnumerationBudget, enumerate_check, nbsc
from .parsing import ParseError, parse_formula, parse_spec, pretty_print
from .search import (
    GREEDY, OPTIMAL, BoundedUnsat, InconclusiveError, Sat, Unsat, check,
)
from .smtlib import SolverError, SolverHandle, default_solver_command
from .traces import (
    EMPTY_TRACE, GroundAtom, Trace, check_requirements, evaluate, make_trace,
    volume,
)

__version__ = "0.1.0"

__all__ = [
    "Always", "And", "Atom", "BoundedUnsat", "DataConstraint",
    "EMPTY_TRACE", "EnumerationBudget", "Eventually", "Exists", "FalseF",
    "Forall", "Formula", "GREEDY", "GroundAtom", "GuardError", "Implies",
    "InconclusiveError", "Interval", "Next", "Not", "OPTIMAL", "Once", "Or",
    "ParseError", "Prev", "Sat", "Signature", "Since", "SolverError",
    "SolverHandle", "Spec", "Trace", "TrueF", "Unsat", "Until", "Var",
    "check", "check_requirements", "default_solver_command", "desugar",
    "enumerate_check", "evaluate", "make_trace", "nbsc", "parse_formula",
    "parse_spec", "pretty_print", "validate", "validate_spec", "volume",
]
