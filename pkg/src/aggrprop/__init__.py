"""Aggregate constraints compiled into propagators, checked against naive
ground-and-solve and a brute-force stable-model oracle."""

from .errors import (AggrPropError, ArityError, AtomCapExceeded, GroundingBudgetExceeded,
                     NonTightProgramError, ParseError, SafetyError, TimeBudgetExceeded,
                     UnsupportedError)
from .grounder import (DEFAULT_GROUND_CAP, GroundProgram, dependency_graph, ground_program,
                       ground_rule, herbrand_universe, is_recursive, is_tight)
from .oracle import enumerate_stable, eval_aggregate, flp_reduct, is_model, is_stable
from .parser import parse, parse_file
from .propagator import AggregateBounds, CompiledPropagator, PropagationResult, compile
from .solver import (CheckResult, SolveResult, SolveStats, check_model, enumerate_models,
                     solve)
from .syntax import (AggregateAtom, AggregateElement, Atom, Literal, Program, Rule,
                     Variable)
from .tuples import (FALSE, TRUE, UNDEFINED, IndexedTupleStore, Status, TupleDatabase,
                     TupleHandle)

__version__ = "0.1.0"
