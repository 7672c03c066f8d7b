"""tempolower: compile away PDDL2.1 over-all conditions, at-end
conditions, and duration ranges into plain Markovian action models with
delayed effects, and certify the lowering on small instances."""

from .errors import (
    EvaluationError, InputError, ModelError, ParseError, TempoLowerError,
)
from .lowering import (
    DEFAULT_PASSES, DefinitionGroup, InterferenceEdge, LoweringReport,
    RateAnnotation, detect_interference, expand_definitions, expand_formula,
    is_markovian, lower_at_end_conditions, lower_duration_range,
    lower_over_all, run_pipeline, synthesize_definitions,
)
from .parser import (
    parse_domain, parse_groups, parse_plan, parse_problem, parse_rates,
)
from .printer import print_domain, print_plan, print_problem
from .search import (
    EquivalenceVerdict, SearchResult, check_equivalence, map_plan,
    plan_search,
)
from .semantics import (
    LOWERED_MODE, PDDL21_MODE, EvalContext, EventQueue, TimedState,
    ValidationReport, Violation, advance_time, apply_action, ground_action,
    holds, validate_plan,
)

__version__ = "0.1.0"
