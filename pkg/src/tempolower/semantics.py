"""Timed-state progression with a delayed-effect event queue.

A durative action applies its at-start effects immediately and enqueues
every at-end effect at clock + duration; conditional guards stay
unevaluated until their event fires.  Events sharing a fire time apply
as one simultaneous batch: guards and expressions are evaluated against
the common pre-state, and an add/delete (or assign) collision inside a
batch is a hard effect-conflict.  All arithmetic is exact rational.

Two validation modes share this machinery.  In `pddl21` mode over-all
and at-end conditions are enforced through active-action records — the
extra, non-Markovian bookkeeping.  In `lowered` mode the state alone
decides applicability, and domains still carrying over-all/at-end
conditions or range durations are rejected as input errors.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .errors import EvaluationError, InputError, ModelError
from .model import (
    AT_END, AT_START, DURATIVE, OVER_ALL, SIMPLE, TIME_TYPE,
    ActionSchema, Add, And, Arith, Assign, Atom, Binding, Cmp, CurrentTime,
    DefinedAtom, Del, Domain, Effect, FixedDuration, Forall, Formula,
    FluentRef, Increase, Not, Num, NumericExpr, Or, Plan, PlanStep, Problem,
    RangeDuration, Record, VarRef, When, conj, is_variable, substitute,
)

PDDL21_MODE = "pddl21"
LOWERED_MODE = "lowered"

AtomKey = tuple[str, ...]
FluentKey = tuple[str, ...]

# a guard-true, do-nothing effect; used to mark an action's end instant
NOOP_EFFECT = When(And(()), ())


class EvalContext:
    """Shared read-only evaluation context: declarations, definitions,
    and the typed object universe."""

    def __init__(self, domain: Domain, problem: Optional[Problem] = None):
        self.domain = domain
        self.problem = problem
        self.tree = domain.type_tree()
        self.definitions = {d.name: d for d in domain.definitions}

    def objects_of_type(self, typ: str) -> tuple[str, ...]:
        if self.problem is None:
            raise EvaluationError(
                "cannot evaluate a quantified formula without a problem")
        return self.problem.objects_of_type(typ, self.tree)


class TimedState:
    __slots__ = ("clock", "atoms", "fluents")

    def __init__(self, clock: Fraction = Fraction(0),
                 atoms: Optional[set[AtomKey]] = None,
                 fluents: Optional[dict[FluentKey, Fraction]] = None):
        self.clock = clock
        self.atoms = atoms if atoms is not None else set()
        self.fluents = fluents if fluents is not None else {}

    @classmethod
    def from_problem(cls, problem: Problem) -> "TimedState":
        atoms = {a.key() for a in problem.init_atoms}
        fluents = {(f.name, *f.args): v for f, v in problem.init_fluents}
        return cls(Fraction(0), atoms, fluents)

    def clone(self) -> "TimedState":
        return TimedState(self.clock, set(self.atoms), dict(self.fluents))

    def digest(self) -> str:
        payload = repr((str(self.clock),
                        sorted(self.atoms),
                        sorted((k, str(v)) for k, v in self.fluents.items())))
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Event:
    time: Fraction
    seq: int
    source: str           # ground action instance text
    source_start: Fraction
    effect: Effect        # ground

    def key(self):
        return (str(self.time), _effect_key(self.effect), self.source,
                str(self.source_start))


class EventQueue:
    def __init__(self):
        self._heap: list[tuple[Fraction, int, Event]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: Fraction, source: str, source_start: Fraction,
             effect: Effect) -> None:
        ev = Event(time, self._seq, source, source_start, effect)
        heapq.heappush(self._heap, (time, self._seq, ev))
        self._seq += 1

    def next_time(self) -> Optional[Fraction]:
        return self._heap[0][0] if self._heap else None

    def pop_batch(self) -> list[Event]:
        """Remove and return all events sharing the earliest fire time,
        in insertion order."""
        if not self._heap:
            return []
        t = self._heap[0][0]
        batch = []
        while self._heap and self._heap[0][0] == t:
            batch.append(heapq.heappop(self._heap)[2])
        return batch

    def clone(self) -> "EventQueue":
        q = EventQueue()
        q._heap = list(self._heap)
        q._seq = self._seq
        return q

    def pending(self) -> list[Event]:
        return [ev for _, _, ev in sorted(self._heap, key=lambda x: (x[0], x[1]))]


def _effect_key(e: Effect):
    """Canonical hashable form of a ground effect (for digests)."""
    if isinstance(e, Add):
        return ("add", e.atom.key())
    if isinstance(e, Del):
        return ("del", e.atom.key())
    if isinstance(e, Assign):
        return ("assign", (e.fluent.name, *e.fluent.args), _expr_key(e.expr))
    if isinstance(e, Increase):
        return ("inc", (e.fluent.name, *e.fluent.args), _expr_key(e.expr))
    if isinstance(e, Record):
        return ("rec", (e.fluent.name, *e.fluent.args))
    if isinstance(e, When):
        return ("when", _formula_key(e.cond), tuple(_effect_key(t) for t in e.then))
    raise ModelError(f"unknown effect {e!r}")


def _expr_key(e: NumericExpr):
    if isinstance(e, Num):
        return ("num", str(e.value))
    if isinstance(e, FluentRef):
        return ("fl", e.name, *e.args)
    if isinstance(e, CurrentTime):
        return ("now",)
    if isinstance(e, VarRef):
        return ("var", e.name)
    return ("arith", e.op, _expr_key(e.lhs), _expr_key(e.rhs))


def _formula_key(f: Formula):
    if isinstance(f, Atom):
        return ("atom", f.key())
    if isinstance(f, DefinedAtom):
        return ("def", f.name, *f.args)
    if isinstance(f, Not):
        return ("not", _formula_key(f.body))
    if isinstance(f, And):
        return ("and", tuple(_formula_key(p) for p in f.parts))
    if isinstance(f, Or):
        return ("or", tuple(_formula_key(p) for p in f.parts))
    if isinstance(f, Cmp):
        return ("cmp", f.op, _expr_key(f.lhs), _expr_key(f.rhs))
    if isinstance(f, Forall):
        return ("forall", tuple((p.name, p.type) for p in f.params),
                _formula_key(f.body))
    raise ModelError(f"unknown formula {f!r}")


# ---------------------------------------------------------------------------
# evaluation

def eval_expr(e: NumericExpr, state: TimedState) -> Fraction:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, CurrentTime):
        return state.clock
    if isinstance(e, FluentRef):
        key = (e.name, *e.args)
        if key in state.fluents:
            return state.fluents[key]
        raise EvaluationError(
            "fluent (" + " ".join(key) + ") has no value", e.span)
    if isinstance(e, VarRef):
        raise EvaluationError(f"unbound variable {e.name} in expression", e.span)
    if isinstance(e, Arith):
        lhs, rhs = eval_expr(e.lhs, state), eval_expr(e.rhs, state)
        if e.op == "+":
            return lhs + rhs
        if e.op == "-":
            return lhs - rhs
        if e.op == "*":
            return lhs * rhs
        if e.op == "/":
            if rhs == 0:
                raise EvaluationError("division by zero", e.span)
            return lhs / rhs
    raise EvaluationError(f"cannot evaluate {e!r}")


_CMP_FNS = {
    "=": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def holds(state: TimedState, f: Formula, ctx: EvalContext) -> bool:
    """Closed-world truth of a ground formula: atoms by membership,
    comparisons by exact arithmetic, defined atoms by their bodies.
    Conjunction and disjunction evaluate left to right."""
    if isinstance(f, Atom):
        return f.key() in state.atoms
    if isinstance(f, DefinedAtom):
        d = ctx.definitions.get(f.name)
        if d is None:
            raise EvaluationError(f"unknown definition {f.name!r}", f.span)
        binding: Binding = {p.name: a for p, a in zip(d.params, f.args)}
        return holds(state, substitute(d.body, binding, strict=False), ctx)
    if isinstance(f, Not):
        return not holds(state, f.body, ctx)
    if isinstance(f, And):
        return all(holds(state, p, ctx) for p in f.parts)
    if isinstance(f, Or):
        return any(holds(state, p, ctx) for p in f.parts)
    if isinstance(f, Cmp):
        return _CMP_FNS[f.op](eval_expr(f.lhs, state), eval_expr(f.rhs, state))
    if isinstance(f, Forall):
        for p in f.params:
            if p.type == TIME_TYPE:
                raise EvaluationError(
                    "cannot enumerate the time type in a quantifier", f.span)
        domains = [ctx.objects_of_type(p.type) for p in f.params]

        def rec(i: int, binding: Binding) -> bool:
            if i == len(f.params):
                return holds(state, substitute(f.body, binding, strict=False), ctx)
            return all(rec(i + 1, {**binding, f.params[i].name: obj})
                       for obj in domains[i])

        return rec(0, {})
    raise EvaluationError(f"cannot evaluate formula {f!r}")


# ---------------------------------------------------------------------------
# violations

@dataclass(frozen=True)
class Violation(Exception):
    kind: str            # precondition | over-all | at-end | effect-conflict | goal
    time: Fraction
    culprit: str
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.kind} violation at t={self.time}: {self.culprit}"
        return f"{msg} ({self.detail})" if self.detail else msg


# ---------------------------------------------------------------------------
# ground actions

@dataclass(frozen=True)
class GroundAction:
    schema: ActionSchema
    args: tuple[str, ...]      # printable argument tokens
    binding: "dict[str, object]" = field(compare=False)
    name: str = field(compare=False)

    @property
    def kind(self) -> str:
        return self.schema.kind

    def conditions_at(self, tag: str) -> Formula:
        return conj([substitute(f, self.binding)
                     for f in self.schema.conditions_at(tag)])

    def effects_at(self, tag: str) -> list[Effect]:
        return [substitute(e, self.binding) for e in self.schema.effects_at(tag)]

    def duration_bounds(self, state: TimedState) \
            -> Optional[tuple[Fraction, Fraction]]:
        """Evaluated (lo, hi) in the given state; None for simple actions."""
        if self.schema.duration is None:
            return None
        spec = substitute_duration(self.schema.duration, self.binding)
        if isinstance(spec, FixedDuration):
            v = eval_expr(spec.expr, state)
            return (v, v)
        lo, hi = eval_expr(spec.lo, state), eval_expr(spec.hi, state)
        if lo > hi:
            raise ModelError(
                f"duration range of {self.name} is empty: {lo} > {hi}")
        return (lo, hi)


def substitute_duration(spec, binding):
    if isinstance(spec, FixedDuration):
        from .model import _sub_expr
        return FixedDuration(_sub_expr(spec.expr, binding, True))
    from .model import _sub_expr
    return RangeDuration(_sub_expr(spec.lo, binding, True),
                         _sub_expr(spec.hi, binding, True))


def ground_action(domain: Domain, problem: Problem, name: str,
                  args: tuple[str, ...]) -> GroundAction:
    """Bind an action schema to explicit argument tokens (as found in a
    plan).  Object parameters take declared objects of a compatible type;
    time parameters take rational numerals."""
    schema = domain.action(name)
    if schema is None:
        raise InputError(f"unknown action {name!r}")
    if len(args) != len(schema.params):
        raise InputError(
            f"action {name!r} takes {len(schema.params)} argument(s), "
            f"got {len(args)}")
    tree = domain.type_tree()
    binding: dict[str, object] = {}
    for p, a in zip(schema.params, args):
        if p.type == TIME_TYPE:
            try:
                if "/" in a:
                    num, _, den = a.partition("/")
                    binding[p.name] = Fraction(int(num), int(den))
                else:
                    binding[p.name] = Fraction(a)
            except (ValueError, ZeroDivisionError):
                raise InputError(
                    f"argument {a!r} of {name!r} must be a rational number")
        else:
            otype = problem.object_type(a)
            if otype is None:
                raise InputError(f"unknown object {a!r} in action {name!r}")
            if not tree.is_subtype(otype, p.type):
                raise InputError(
                    f"object {a!r} has type {otype!r}, parameter {p.name} of "
                    f"{name!r} needs {p.type!r}")
            binding[p.name] = a
    text = "(" + " ".join((name,) + args) + ")"
    return GroundAction(schema, args, binding, text)


def make_ground_action(schema: ActionSchema, binding: dict[str, object]) \
        -> GroundAction:
    """Construct a ground action from an already-checked binding."""
    args = []
    for p in schema.params:
        v = binding[p.name]
        args.append(str(v) if isinstance(v, Fraction) else v)
    text = "(" + " ".join([schema.name] + args) + ")"
    return GroundAction(schema, tuple(args), binding, text)


def ground_effect_conflicts(ga: GroundAction) -> bool:
    """True when one time tag of the ground action both adds and deletes
    the same atom (unconditionally or possibly, guards ignored)."""
    from .model import effect_atoms
    for tag in (AT_START, AT_END):
        adds, dels = set(), set()
        for eff in ga.effects_at(tag):
            for atom, is_add in effect_atoms(eff):
                (adds if is_add else dels).add(atom.key())
        if adds & dels:
            return True
    return False


# ---------------------------------------------------------------------------
# effect application

def _collect_ops(batch: Iterable[tuple[str, Effect]], pre: TimedState,
                 ctx: EvalContext) -> list[tuple]:
    """Evaluate guards and expressions against the shared pre-state and
    return primitive operations tagged with their source."""
    ops: list[tuple] = []

    def prim(source: str, eff: Effect) -> None:
        if isinstance(eff, Add):
            ops.append(("add", eff.atom.key(), source))
        elif isinstance(eff, Del):
            ops.append(("del", eff.atom.key(), source))
        elif isinstance(eff, Assign):
            key = (eff.fluent.name, *eff.fluent.args)
            ops.append(("assign", key, eval_expr(eff.expr, pre), source))
        elif isinstance(eff, Increase):
            key = (eff.fluent.name, *eff.fluent.args)
            if key not in pre.fluents:
                raise EvaluationError(
                    "increase of undefined fluent (" + " ".join(key) + ")")
            ops.append(("inc", key, eval_expr(eff.expr, pre), source))
        elif isinstance(eff, Record):
            key = (eff.fluent.name, *eff.fluent.args)
            ops.append(("assign", key, pre.clock, source))
        else:
            raise ModelError(f"unexpected effect {eff!r}")

    for source, eff in batch:
        if isinstance(eff, When):
            if holds(pre, eff.cond, ctx):
                for t in eff.then:
                    prim(source, t)
        else:
            prim(source, eff)
    return ops


def apply_ops(state: TimedState, ops: list[tuple], time: Fraction) -> None:
    """Apply a simultaneous batch of primitive operations, first checking
    for add/delete and numeric-write conflicts."""
    adds: dict[AtomKey, str] = {}
    dels: dict[AtomKey, str] = {}
    assigns: dict[FluentKey, tuple[Fraction, str]] = {}
    incs: dict[FluentKey, list[tuple[Fraction, str]]] = {}
    for op in ops:
        if op[0] == "add":
            adds.setdefault(op[1], op[2])
        elif op[0] == "del":
            dels.setdefault(op[1], op[2])
        elif op[0] == "assign":
            _, key, value, source = op
            if key in assigns:
                raise Violation(
                    "effect-conflict", time, source,
                    f"fluent ({' '.join(key)}) assigned twice, also by "
                    f"{assigns[key][1]}")
            assigns[key] = (value, source)
        elif op[0] == "inc":
            _, key, value, source = op
            incs.setdefault(key, []).append((value, source))
    for key in adds.keys() & dels.keys():
        raise Violation(
            "effect-conflict", time, adds[key],
            f"atom ({' '.join(key)}) both added and deleted, delete by "
            f"{dels[key]}")
    for key in assigns.keys() & incs.keys():
        raise Violation(
            "effect-conflict", time, assigns[key][1],
            f"fluent ({' '.join(key)}) both assigned and increased, increase "
            f"by {incs[key][0][1]}")
    for key, src in dels.items():
        state.atoms.discard(key)
    for key in adds:
        state.atoms.add(key)
    for key, (value, _) in assigns.items():
        state.fluents[key] = value
    for key, entries in incs.items():
        state.fluents[key] += sum(v for v, _ in entries)


def apply_action(state: TimedState, queue: EventQueue, ga: GroundAction,
                 duration: Optional[Fraction], ctx: EvalContext,
                 check_range: bool = True) -> None:
    """Check at-start applicability and apply the ground action in place:
    at-start effects now, at-end effects enqueued at clock + duration."""
    bounds = ga.duration_bounds(state)
    if bounds is None:
        if duration is not None:
            raise InputError(f"simple action {ga.name} cannot take a duration")
        duration = Fraction(0)
    else:
        lo, hi = bounds
        if duration is None:
            raise InputError(f"durative action {ga.name} needs a duration")
        if duration < 0:
            raise Violation("precondition", state.clock, ga.name,
                            f"negative duration {duration}")
        if isinstance(ga.schema.duration, FixedDuration):
            if duration != lo:
                raise Violation(
                    "precondition", state.clock, ga.name,
                    f"duration {duration} does not match required {lo}")
        elif check_range and not (lo <= duration <= hi):
            raise Violation(
                "precondition", state.clock, ga.name,
                f"duration {duration} outside [{lo}, {hi}]")

    cond = ga.conditions_at(AT_START)
    if not holds(state, cond, ctx):
        raise Violation("precondition", state.clock, ga.name,
                        "at-start condition is false")

    ops = _collect_ops([(ga.name, e) for e in ga.effects_at(AT_START)],
                       state, ctx)
    apply_ops(state, ops, state.clock)

    if ga.kind == DURATIVE:
        fire = state.clock + duration
        for eff in ga.effects_at(AT_END):
            queue.push(fire, ga.name, state.clock, eff)


def advance_time(state: TimedState, queue: EventQueue, t: Fraction,
                 ctx: EvalContext,
                 on_instant: Optional[Callable[[Fraction, list[Event]], None]] = None,
                 on_mutation: Optional[Callable[[Fraction], None]] = None) -> None:
    """Fire every queued event with fire time <= t in fire-time order
    (simultaneous events as one batch) and set the clock to t.

    `on_instant` runs before each batch applies (against the pre-state);
    `on_mutation` runs after each batch applies.
    """
    if t < state.clock:
        raise InputError(f"cannot advance time backwards to {t}")
    while True:
        nt = queue.next_time()
        if nt is None or nt > t:
            break
        batch = queue.pop_batch()
        state.clock = nt
        if on_instant is not None:
            on_instant(nt, batch)
        ops = _collect_ops([(ev.source, ev.effect) for ev in batch], state, ctx)
        apply_ops(state, ops, nt)
        if on_mutation is not None:
            on_mutation(nt)
    state.clock = t


def drain(state: TimedState, queue: EventQueue, ctx: EvalContext,
          on_instant=None, on_mutation=None) -> None:
    """Fire all remaining events."""
    while True:
        nt = queue.next_time()
        if nt is None:
            return
        advance_time(state, queue, nt, ctx, on_instant, on_mutation)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class ActiveRecord:
    """pddl21-mode bookkeeping for one executing durative action: the
    state alone no longer decides validity, this record carries the rest."""
    action: str
    start: Fraction
    end: Fraction
    over_all: tuple[Formula, ...]   # ground literals to protect
    at_end: Optional[Formula]       # ground condition checked on completion


class ActiveTracker:
    """Maintains ActiveRecords across a pddl21-mode execution: at-end
    conditions check against the pre-batch state at each record's end
    instant, protected facts re-check after every state change strictly
    inside the record's interval."""

    def __init__(self, state: TimedState, ctx: EvalContext,
                 records: Optional[list[ActiveRecord]] = None):
        self.state = state
        self.ctx = ctx
        self.records: list[ActiveRecord] = records if records is not None else []

    def start(self, ga: "GroundAction", time: Fraction, duration: Fraction,
              queue: EventQueue) -> None:
        if ga.kind != DURATIVE:
            return
        end = time + duration
        at_end = [substitute(c, ga.binding)
                  for c in ga.schema.conditions_at(AT_END)]
        self.records.append(ActiveRecord(
            ga.name, time, end, _over_all_literals(ga),
            conj(at_end) if at_end else None))
        # marker so the end instant is processed even without end effects
        queue.push(end, ga.name, time, NOOP_EFFECT)

    def on_instant(self, t: Fraction, batch: list[Event]) -> None:
        for rec in self.records:
            if rec.end == t and rec.at_end is not None:
                if not holds(self.state, rec.at_end, self.ctx):
                    raise Violation("at-end", t, rec.action,
                                    "at-end condition is false on completion")

    def on_mutation(self, t: Fraction) -> None:
        self.records[:] = [r for r in self.records if r.end > t]
        for rec in self.records:
            if rec.start < t < rec.end:
                for lit in rec.over_all:
                    if not holds(self.state, lit, self.ctx):
                        raise Violation(
                            "over-all", t, rec.action,
                            f"protected fact {_fmt(lit)} no longer holds")


@dataclass(frozen=True)
class TraceEntry:
    time: Fraction
    action: str
    state_digest: str


@dataclass(frozen=True)
class ValidationReport:
    verdict: str                       # valid | invalid
    trace: tuple[TraceEntry, ...]
    violation: Optional[Violation]
    goal_holds: Optional[bool]
    mode: str


def _over_all_literals(ga: GroundAction) -> tuple[Formula, ...]:
    out: list[Formula] = []
    for f in (substitute(c, ga.binding)
              for c in ga.schema.conditions_at(OVER_ALL)):
        if isinstance(f, And):
            out.extend(f.parts)
        else:
            out.append(f)
    return tuple(out)


def require_markovian(domain: Domain) -> None:
    """Reject domains the lowered mode cannot honestly execute."""
    for a in domain.actions:
        if a.conditions_at(OVER_ALL) or a.conditions_at(AT_END):
            raise InputError(
                f"action {a.name!r} still carries over-all or at-end "
                f"conditions; lower the domain first or validate in "
                f"pddl21 mode")
        if isinstance(a.duration, RangeDuration):
            raise InputError(
                f"action {a.name!r} still carries a duration range; lower "
                f"the domain first or validate in pddl21 mode")


def validate_plan(domain: Domain, problem: Problem, plan: Plan,
                  mode: str) -> ValidationReport:
    if mode not in (PDDL21_MODE, LOWERED_MODE):
        raise InputError(f"unknown validation mode {mode!r}")
    if mode == LOWERED_MODE:
        require_markovian(domain)

    ctx = EvalContext(domain, problem)
    state = TimedState.from_problem(problem)
    queue = EventQueue()
    trace: list[TraceEntry] = []
    tracker = ActiveTracker(state, ctx) if mode == PDDL21_MODE else None
    hooks = ((tracker.on_instant, tracker.on_mutation) if tracker
             else (None, None))

    last_time = Fraction(0)
    try:
        for step in plan:
            if step.time < last_time:
                raise InputError("plan steps are not sorted by time")
            last_time = step.time
            advance_time(state, queue, step.time, ctx, *hooks)
            ga = ground_action(domain, problem, step.action, step.args)
            apply_action(state, queue, ga, step.duration, ctx,
                         check_range=(mode == PDDL21_MODE))
            if tracker is not None:
                tracker.start(ga, step.time, step.duration or Fraction(0),
                              queue)
                tracker.on_mutation(step.time)
            trace.append(TraceEntry(step.time, ga.name, state.digest()))
        drain(state, queue, ctx, *hooks)
    except Violation as v:
        return ValidationReport("invalid", tuple(trace), v, None, mode)

    goal_ok = holds(state, problem.goal, ctx)
    if not goal_ok:
        v = Violation("goal", state.clock, "(goal)", "goal is false after "
                      "all effects fire")
        return ValidationReport("invalid", tuple(trace), v, False, mode)
    return ValidationReport("valid", tuple(trace), None, True, mode)


def _fmt(f: Formula) -> str:
    from .printer import format_formula
    return format_formula(f)
