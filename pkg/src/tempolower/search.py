"""Bounded forward-chaining plan search and the lowering equivalence oracle.

The search is a duplicate-pruned breadth-first walk over decision epochs:
at each node either start an applicable ground action now or advance the
clock to the next queued event.  It is an oracle for micro-instances, not
a planner: every returned plan is re-certified by the validator in the
same mode, and exhausting the bounded space proves unsolvability within
the given horizon and step count.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import InputError, ModelError
from .model import (
    AT_START, DURATIVE, TIME_TYPE,
    ActionSchema, Atom, Cmp, Domain, FixedDuration, FluentRef, Plan, PlanStep,
    Problem, RangeDuration, VarRef, conjuncts, effect_atoms, is_variable,
    substitute,
)
from .printer import format_rational
from .semantics import (
    LOWERED_MODE, PDDL21_MODE,
    ActiveRecord, ActiveTracker, EvalContext, EventQueue, GroundAction,
    TimedState, Violation, advance_time, apply_action, drain, ground_action,
    holds, make_ground_action, require_markovian, validate_plan,
)

DEFAULT_MAX_NODES = 200_000


@dataclass(frozen=True)
class SearchResult:
    status: str                 # found | unsolvable | bound-exceeded
    plan: Optional[Plan]
    nodes: int
    horizon: Fraction
    max_steps: int

    @property
    def found(self) -> bool:
        return self.status == "found"


@dataclass(frozen=True)
class EquivalenceVerdict:
    instance: str
    status: str                          # conclusive | inconclusive
    original_solvable: Optional[bool]
    lowered_solvable: Optional[bool]
    agree: Optional[bool]
    witness: dict
    mapping_notes: list[str]


# ---------------------------------------------------------------------------
# grounding

@dataclass(frozen=True)
class _Candidate:
    schema: ActionSchema
    obj_binding: dict = field(compare=False)
    # (time parameter name, fluent whose recorded value binds it)
    links: tuple[tuple[str, FluentRef], ...] = ()

    def solve(self, state: TimedState) -> Optional[GroundAction]:
        binding = dict(self.obj_binding)
        for var, ref in self.links:
            key = (ref.name, *(binding.get(a, a) if is_variable(a) else a
                               for a in ref.args))
            if key not in state.fluents:
                return None
            binding[var] = state.fluents[key]
        return make_ground_action(self.schema, binding)


def _schema_time_links(schema: ActionSchema) \
        -> tuple[tuple[str, FluentRef], ...]:
    """For each time parameter, the fluent whose value determines it:
    an at-start conjunct of the shape (= (FLUENT ...) ?var)."""
    time_params = [p.name for p in schema.params if p.type == TIME_TYPE]
    if not time_params:
        return ()
    links: dict[str, FluentRef] = {}
    for f in schema.conditions_at(AT_START):
        for c in conjuncts(f):
            if isinstance(c, Cmp) and c.op == "=":
                pairs = [(c.lhs, c.rhs), (c.rhs, c.lhs)]
                for a, b in pairs:
                    if isinstance(a, FluentRef) and isinstance(b, VarRef) \
                            and b.name in time_params and b.name not in links:
                        links[b.name] = a
    missing = [p for p in time_params if p not in links]
    if missing:
        raise ModelError(
            f"cannot enumerate action {schema.name!r}: time parameter(s) "
            f"{missing} are not determined by a (= (FLUENT ...) ?VAR) "
            f"condition")
    return tuple((p, links[p]) for p in time_params)


def _ground_conflicts(schema: ActionSchema, binding: dict) -> bool:
    from .model import AT_END
    for tag in (AT_START, AT_END):
        adds, dels = set(), set()
        for eff in schema.effects_at(tag):
            for atom, is_add in effect_atoms(eff):
                key = substitute(atom, binding).key()
                (adds if is_add else dels).add(key)
        if adds & dels:
            return True
    return False


def enumerate_candidates(domain: Domain, problem: Problem) -> list[_Candidate]:
    """All well-typed ground instances over the problem's objects, with
    time parameters left to be solved against the running state.  Ground
    instances that would both add and delete one atom are skipped."""
    tree = domain.type_tree()
    out: list[_Candidate] = []
    for schema in domain.actions:
        links = _schema_time_links(schema)
        obj_params = [p for p in schema.params if p.type != TIME_TYPE]
        pools = [[o for o, t in problem.objects if tree.is_subtype(t, p.type)]
                 for p in obj_params]
        for combo in itertools.product(*pools):
            binding = {p.name: o for p, o in zip(obj_params, combo)}
            if _ground_conflicts(schema, binding):
                continue
            out.append(_Candidate(schema, binding, links))
    return out


# ---------------------------------------------------------------------------
# search nodes

@dataclass
class _Node:
    state: TimedState
    queue: EventQueue
    records: list[ActiveRecord]
    plan: tuple[PlanStep, ...]

    def digest(self):
        return (
            str(self.state.clock),
            tuple(sorted(self.state.atoms)),
            tuple(sorted((k, str(v)) for k, v in self.state.fluents.items())),
            tuple(sorted(ev.key() for ev in self.queue.pending())),
            tuple(sorted((r.action, str(r.start), str(r.end))
                         for r in self.records)),
        )


def _duration_choices(ga: GroundAction, state: TimedState, mode: str,
                      queue: EventQueue) -> list[Optional[Fraction]]:
    if ga.schema.duration is None:
        return [None]
    lo, hi = ga.duration_bounds(state)
    if isinstance(ga.schema.duration, FixedDuration):
        return [lo] if lo >= 0 else []
    if mode == LOWERED_MODE:
        raise InputError("range durations cannot appear in lowered mode")
    choices = {lo, hi}
    for ev in queue.pending():
        d = ev.time - state.clock
        if lo <= d <= hi:
            choices.add(d)
    return sorted(c for c in choices if c >= 0)


def _applicable(node: _Node, candidates: Sequence[_Candidate], mode: str,
                ctx: EvalContext):
    out = []
    for cand in candidates:
        ga = cand.solve(node.state)
        if ga is None:
            continue
        try:
            if not holds(node.state, ga.conditions_at(AT_START), ctx):
                continue
            durations = _duration_choices(ga, node.state, mode, node.queue)
        except ModelError:
            continue  # e.g. an empty evaluated duration range
        for d in durations:
            out.append((ga, d))
    return out


def _apply_step(node: _Node, ga: GroundAction, duration: Optional[Fraction],
                mode: str, ctx: EvalContext) -> Optional[_Node]:
    state = node.state.clone()
    queue = node.queue.clone()
    records = list(node.records)
    tracker = ActiveTracker(state, ctx, records) if mode == PDDL21_MODE else None
    try:
        apply_action(state, queue, ga, duration, ctx,
                     check_range=(mode == PDDL21_MODE))
        if tracker is not None:
            tracker.start(ga, state.clock, duration or Fraction(0), queue)
            tracker.on_mutation(state.clock)
    except Violation:
        return None
    step = PlanStep(state.clock, ga.schema.name, ga.args, duration)
    return _Node(state, queue, records, node.plan + (step,))


def _wait(node: _Node, t: Fraction, mode: str, ctx: EvalContext) \
        -> Optional[_Node]:
    state = node.state.clone()
    queue = node.queue.clone()
    records = list(node.records)
    tracker = ActiveTracker(state, ctx, records) if mode == PDDL21_MODE else None
    hooks = ((tracker.on_instant, tracker.on_mutation) if tracker
             else (None, None))
    try:
        advance_time(state, queue, t, ctx, *hooks)
    except Violation:
        return None
    return _Node(state, queue, records, node.plan)


def _finishes(node: _Node, mode: str, ctx: EvalContext,
              goal) -> bool:
    state = node.state.clone()
    queue = node.queue.clone()
    records = list(node.records)
    tracker = ActiveTracker(state, ctx, records) if mode == PDDL21_MODE else None
    hooks = ((tracker.on_instant, tracker.on_mutation) if tracker
             else (None, None))
    try:
        drain(state, queue, ctx, *hooks)
    except Violation:
        return False
    return holds(state, goal, ctx)


def plan_search(domain: Domain, problem: Problem, mode: str,
                horizon: Fraction, max_steps: int, *,
                dedupe: bool = True,
                max_nodes: int = DEFAULT_MAX_NODES) -> SearchResult:
    """Breadth-first search over decision epochs.

    found: a plan exists (certified by validate_plan in the same mode).
    unsolvable: the bounded space is exhausted — no plan starts every
    action at time <= horizon with at most max_steps steps.
    bound-exceeded: the node budget ran out first.
    """
    if mode not in (PDDL21_MODE, LOWERED_MODE):
        raise InputError(f"unknown search mode {mode!r}")
    if mode == LOWERED_MODE:
        require_markovian(domain)
    horizon = Fraction(horizon)
    ctx = EvalContext(domain, problem)
    candidates = enumerate_candidates(domain, problem)

    root = _Node(TimedState.from_problem(problem), EventQueue(), [], ())
    frontier: deque[_Node] = deque([root])
    seen = {root.digest()}
    expanded = 0

    while frontier:
        expanded += 1
        if expanded > max_nodes:
            return SearchResult("bound-exceeded", None, expanded, horizon,
                                max_steps)
        node = frontier.popleft()

        if _finishes(node, mode, ctx, problem.goal):
            plan = tuple(node.plan)
            report = validate_plan(domain, problem, plan, mode)
            if report.verdict != "valid":
                raise ModelError(
                    "search produced a plan the validator rejects: "
                    f"{report.violation}")
            return SearchResult("found", plan, expanded, horizon, max_steps)

        children: list[_Node] = []
        if len(node.plan) < max_steps and node.state.clock <= horizon:
            for ga, d in _applicable(node, candidates, mode, ctx):
                child = _apply_step(node, ga, d, mode, ctx)
                if child is not None:
                    children.append(child)
        nt = node.queue.next_time()
        if nt is not None and nt <= horizon:
            child = _wait(node, nt, mode, ctx)
            if child is not None:
                children.append(child)

        for child in children:
            key = child.digest()
            if dedupe:
                if key in seen:
                    continue
                seen.add(key)
            frontier.append(child)

    return SearchResult("unsolvable", None, expanded, horizon, max_steps)


# ---------------------------------------------------------------------------
# equivalence oracle

def map_plan(original_domain: Domain, original_problem: Problem, plan: Plan,
             range_mappings) -> Plan:
    """Translate a pddl21-mode plan for the original model into a plan for
    the lowered model: surviving actions map to themselves; a range action
    with duration d becomes A-start (at the maximum duration) plus A-stop
    at t + d, or A-start alone when d equals the maximum."""
    by_name = {m.action: m for m in range_mappings}
    ctx = EvalContext(original_domain, original_problem)
    state = TimedState.from_problem(original_problem)
    queue = EventQueue()
    out: list[PlanStep] = []
    for step in plan:
        advance_time(state, queue, step.time, ctx)
        ga = ground_action(original_domain, original_problem, step.action,
                           step.args)
        m = by_name.get(step.action)
        if m is not None:
            lo, hi = ga.duration_bounds(state)
            out.append(PlanStep(step.time, m.start, step.args, hi))
            if step.duration < hi:
                stop_args = step.args + (format_rational(step.time),) \
                    * m.time_params
                out.append(PlanStep(step.time + step.duration, m.stop,
                                    stop_args, None))
        else:
            out.append(step)
        apply_action(state, queue, ga, step.duration, ctx)
    out.sort(key=lambda s: s.time)  # stable; preserves construction order
    return tuple(out)


def check_equivalence(original: tuple[Domain, Problem],
                      lowered: tuple[Domain, Problem],
                      range_mappings,
                      horizon: Fraction, max_steps: int,
                      instance: str = "",
                      max_nodes: int = DEFAULT_MAX_NODES) -> EquivalenceVerdict:
    """Certify that lowering preserved solvability on one micro-instance:
    search the original under pddl21 semantics and the lowered model under
    Markovian semantics with the same bounds, and compare."""
    od, op = original
    ld, lp = lowered
    instance = instance or f"{od.name}/{op.name}"
    r1 = plan_search(od, op, PDDL21_MODE, horizon, max_steps,
                     max_nodes=max_nodes)
    r2 = plan_search(ld, lp, LOWERED_MODE, horizon, max_steps,
                     max_nodes=max_nodes)
    notes: list[str] = []
    witness: dict = {
        "original": _witness(r1),
        "lowered": _witness(r2),
    }
    if r1.status == "bound-exceeded" or r2.status == "bound-exceeded":
        sides = [s for s, r in (("original", r1), ("lowered", r2))
                 if r.status == "bound-exceeded"]
        notes.append(f"node budget exceeded on: {', '.join(sides)}")
        return EquivalenceVerdict(instance, "inconclusive", None, None, None,
                                  witness, notes)

    orig_solvable = r1.found
    low_solvable = r2.found
    agree = orig_solvable == low_solvable

    if orig_solvable:
        mapped = map_plan(od, op, r1.plan, range_mappings)
        from .printer import print_plan
        witness["mapped"] = print_plan(mapped).strip()
        report = validate_plan(ld, lp, mapped, LOWERED_MODE)
        if report.verdict == "valid":
            notes.append("mapped original plan is valid in the lowered model")
        else:
            notes.append(
                "mapped original plan is NOT valid in the lowered model: "
                f"{report.violation}")
    return EquivalenceVerdict(instance, "conclusive", orig_solvable,
                              low_solvable, agree, witness, notes)


def _witness(r: SearchResult) -> str:
    if r.found:
        from .printer import print_plan
        return print_plan(r.plan).strip() or "(empty plan)"
    return (f"{r.status} within horizon {format_rational(r.horizon)} "
            f"and {r.max_steps} step(s); {r.nodes} node(s) expanded")
