"""Source-to-source passes that compile away the non-Markovian features.

Three transformations, each a pure Domain -> Domain function:

* over-all conditions become progressive predicates: the action asserts
  an activity is ongoing, and every action whose effects could falsify a
  protected fact gets the negated activity as a precondition;
* at-end conditions become conditional end effects plus a monotone
  failure atom whose negation is conjoined to the goal;
* duration ranges become a start action with a fixed maximum duration
  (posting a default completion) and an instantaneous stop action that
  interpolates annotated fluents from the recorded start time.

A fourth layer groups activity predicates into named definitions and
expands them away again.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

from .errors import InputError, ModelError
from .model import (
    AT_END, AT_START, DURATIVE, OVER_ALL, SIMPLE, TIME_TYPE,
    ActionSchema, Add, And, Arith, Assign, Atom, Binding, Cmp, CurrentTime,
    DefinedAtom, Definition, Del, Domain, Effect, FixedDuration, Forall,
    Formula, FluentRef, FunctionDecl, Increase, Not, Num, NumericExpr, Or,
    Param, PredicateDecl, Problem, RangeDuration, Record, SourceSpan, VarRef,
    When, conj, conjuncts, domain_names, effect_atoms, free_variables,
    fresh_name, guard, is_variable, nnf, rename_apart, resolve, substitute,
    unify, validate_domain,
)

DEFAULT_PASSES = ("duration-range", "over-all", "at-end")
ALL_PASSES = ("duration-range", "over-all", "at-end", "synth-defs",
              "expand-defs")


@dataclass(frozen=True)
class InterferenceEdge:
    """A syntactic match between one action's effect and the negation of
    another action's protected over-all fact."""
    protector: str
    protected: Formula            # literal as written in the protector
    interferer: str
    effect: Formula               # Atom (an add) or Not(Atom) (a delete)
    binding: tuple[tuple[str, str], ...]  # protector var -> interferer term


@dataclass(frozen=True)
class RateAnnotation:
    """Modeling input for duration-range lowering: how annotated fluents
    progress while the activity runs, and what the default completion
    does when the stop action never fires."""
    action: str
    rates: tuple[tuple[FluentRef, NumericExpr], ...]
    overrun: Optional[Effect] = None
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class DefinitionGroup:
    name: str
    params: tuple[Param, ...]
    members: tuple[str, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class RangeMapping:
    """How one range-duration action was split, for plan mapping."""
    action: str
    start: str
    stop: str
    time_params: int      # number of start-time arguments the stop takes


@dataclass
class LoweringReport:
    pass_name: str
    synthesized: list[str] = field(default_factory=list)
    modified_actions: list[str] = field(default_factory=list)
    added_preconditions: list[str] = field(default_factory=list)
    goal_augmentations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    range_mappings: list[RangeMapping] = field(default_factory=list)


# ---------------------------------------------------------------------------
# over-all conditions

def _protected_literals(a: ActionSchema) -> list[Formula]:
    """The over-all conjuncts; anything but a conjunction of literals is
    rejected (the technique protects individual facts)."""
    out: list[Formula] = []
    for f in a.conditions_at(OVER_ALL):
        for c in conjuncts(f):
            if isinstance(c, Atom) or (isinstance(c, Not)
                                       and isinstance(c.body, Atom)):
                out.append(c)
            else:
                raise ModelError(
                    f"over-all condition of {a.name!r} is not a conjunction "
                    f"of literals; cannot lower it", a.span)
    return out


def detect_interference(d: Domain) -> list[InterferenceEdge]:
    """Every (protected over-all literal, possibly-falsifying effect) pair
    found by unification, across all action pairs including self-pairs.
    Purely syntactic and conservative: no reachability pruning."""
    tree = d.type_tree()
    edges: list[InterferenceEdge] = []
    for a in d.actions:
        if a.kind != DURATIVE:
            continue
        literals = _protected_literals(a)
        if not literals:
            continue
        a_types = a.param_types()
        for lit in literals:
            target = lit.body if isinstance(lit, Not) else lit
            falsified_by_add = isinstance(lit, Not)
            for b in d.actions:
                b_types = b.param_types()
                for tag in (AT_START, AT_END):
                    for eff in b.effects_at(tag):
                        for atom, is_add in effect_atoms(eff):
                            if is_add != falsified_by_add:
                                continue
                            if atom.pred != target.pred:
                                continue
                            edge = _make_edge(a, lit, target, b, atom, is_add,
                                              a_types, b_types, tree)
                            if edge is not None and edge not in edges:
                                edges.append(edge)
    return edges


def _make_edge(a, lit, target, b, effect_atom, is_add, a_types, b_types, tree):
    taken = set(b_types) | {t for t in effect_atom.args if is_variable(t)}
    renamed, rename_map = rename_apart(target, taken)
    types = dict(b_types)
    types.update({rename_map[v]: a_types.get(v, "object") for v in rename_map})
    mgu = unify(renamed, effect_atom, types, tree)
    if mgu is None:
        return None
    binding = []
    for v in sorted(set(t for t in target.args if is_variable(t)),
                    key=target.args.index):
        resolved = resolve(rename_map[v], mgu)
        if resolved in rename_map.values() and is_variable(resolved):
            continue  # stays unbound: universal closure at guard time
        binding.append((v, resolved))
    effect_literal = effect_atom if is_add else Not(effect_atom)
    return InterferenceEdge(a.name, lit, b.name, effect_literal,
                            tuple(binding))


@dataclass(frozen=True)
class _Progressive:
    name: str
    params: tuple[Param, ...]

    def atom(self) -> Atom:
        return Atom(self.name, tuple(p.name for p in self.params))


def _progressive_params(a: ActionSchema, literals: Sequence[Formula]) \
        -> tuple[Param, ...]:
    used: set[str] = set()
    for lit in literals:
        used |= free_variables(lit)
    return tuple(p for p in a.params if p.name in used)


def lower_over_all(d: Domain) -> tuple[Domain, LoweringReport]:
    report = LoweringReport("over-all")
    edges = detect_interference(d)

    taken = domain_names(d)
    progressives: dict[str, _Progressive] = {}
    for a in d.actions:
        if a.kind != DURATIVE:
            continue
        literals = _protected_literals(a)
        if not literals:
            continue
        name = fresh_name(f"ongoing-{a.name}", taken)
        taken.add(name)
        progressives[a.name] = _Progressive(name, _progressive_params(a, literals))
        report.synthesized.append(name)

    if not progressives:
        return d, report

    new_predicates = list(d.predicates) + [
        PredicateDecl(p.name, p.params) for p in progressives.values()]

    guards_by_action: dict[str, list[Formula]] = {}
    for edge in edges:
        prog = progressives[edge.protector]
        interferer = d.action(edge.interferer)
        g = _interference_guard(prog, edge, interferer)
        bucket = guards_by_action.setdefault(edge.interferer, [])
        if g not in bucket:
            bucket.append(g)
            report.added_preconditions.append(
                f"{edge.interferer}: {_fmt(g)}")

    new_actions = []
    for a in d.actions:
        conditions = list(a.conditions)
        effects = list(a.effects)
        changed = False
        if a.name in progressives:
            prog = progressives[a.name]
            present = {f for t, f in conditions if t == AT_START}
            moved = [(AT_START, f) for t, f in conditions
                     if t == OVER_ALL and f not in present]
            conditions = [(t, f) for t, f in conditions if t != OVER_ALL] + moved
            effects = [(AT_START, Add(prog.atom())),
                       (AT_END, Del(prog.atom()))] + effects
            changed = True
        for g in guards_by_action.get(a.name, ()):
            conditions.append((AT_START, g))
            changed = True
        if changed:
            report.modified_actions.append(a.name)
        new_actions.append(replace(a, conditions=tuple(conditions),
                                   effects=tuple(effects)))

    out = replace(d, predicates=tuple(new_predicates),
                  actions=tuple(new_actions))
    validate_domain(out)
    return out, report


def _interference_guard(prog: _Progressive, edge: InterferenceEdge,
                        interferer: ActionSchema) -> Formula:
    binding = dict(edge.binding)
    b_names = {p.name for p in interferer.params}
    closure: list[Param] = []
    args: list[str] = []
    for p in prog.params:
        term = binding.get(p.name)
        if term is None:
            fresh = p.name
            i = 1
            while fresh in b_names or any(c.name == fresh for c in closure):
                i += 1
                fresh = f"{p.name}{i}"
            closure.append(Param(fresh, p.type))
            args.append(fresh)
        else:
            args.append(term)
    inner = Not(Atom(prog.name, tuple(args)))
    if closure:
        return Forall(tuple(closure), inner)
    return inner


# ---------------------------------------------------------------------------
# definitions

def synthesize_definitions(d: Domain, groups: Sequence[DefinitionGroup]) -> Domain:
    """Add one disjunctive definition per group and collapse preconditions
    that conjoin the negations of all group members into the single
    negated group literal."""
    if not groups:
        return d
    taken = domain_names(d)
    tree = d.type_tree()
    definitions = list(d.definitions)
    known = {p.name: p.params for p in d.predicates}
    known.update({df.name: df.params for df in d.definitions})

    for g in groups:
        if g.name in taken:
            raise ModelError(f"group name {g.name!r} is already declared",
                             g.span)
        taken.add(g.name)
        if not g.members:
            raise ModelError(f"group {g.name!r} has no members", g.span)
        for m in g.members:
            sig = known.get(m)
            if sig is None:
                raise ModelError(
                    f"group {g.name!r} member {m!r} is not declared", g.span)
            if len(sig) != len(g.params):
                raise ModelError(
                    f"group {g.name!r} member {m!r} takes {len(sig)} "
                    f"argument(s), the group declares {len(g.params)}", g.span)
            for gp, mp in zip(g.params, sig):
                if not tree.is_subtype(gp.type, mp.type):
                    raise ModelError(
                        f"group {g.name!r} parameter {gp.name} of type "
                        f"{gp.type!r} does not fit member {m!r} "
                        f"(needs {mp.type!r})", g.span)
        argnames = tuple(p.name for p in g.params)
        members = tuple(Atom(m, argnames) for m in g.members)
        body: Formula = members[0] if len(members) == 1 else Or(members)
        df = Definition(g.name, g.params, body, span=g.span)
        definitions.append(df)
        known[g.name] = g.params

    new_actions = tuple(_collapse_group_negations(a, groups) for a in d.actions)
    out = replace(d, definitions=tuple(definitions), actions=new_actions)
    validate_domain(out)
    return out


def _collapse_group_negations(a: ActionSchema,
                              groups: Sequence[DefinitionGroup]) -> ActionSchema:
    start_entries = [(i, f) for i, (t, f) in enumerate(a.conditions)
                     if t == AT_START]
    if not start_entries:
        return a
    flat: list[Formula] = []
    for _, f in start_entries:
        flat.extend(conjuncts(f))

    changed = False
    for g in groups:
        while True:
            replaced = _collapse_once(flat, g)
            if not replaced:
                break
            changed = True
    if not changed:
        return a
    others = tuple((t, f) for t, f in a.conditions if t != AT_START)
    return replace(a, conditions=others + ((AT_START, conj(flat)),))


def _collapse_once(flat: list[Formula], g: DefinitionGroup) -> bool:
    """Find one argument tuple for which every member's negation is
    present; splice in the negated group literal."""
    negated: dict[tuple[str, ...], set[str]] = {}
    for f in flat:
        if isinstance(f, Not) and isinstance(f.body, Atom):
            if f.body.pred in g.members:
                negated.setdefault(f.body.args, set()).add(f.body.pred)
    for args, members in sorted(negated.items()):
        if members == set(g.members):
            first = None
            kept: list[Formula] = []
            for f in flat:
                if (isinstance(f, Not) and isinstance(f.body, Atom)
                        and f.body.pred in g.members and f.body.args == args):
                    if first is None:
                        first = len(kept)
                    continue
                kept.append(f)
            kept.insert(first, Not(DefinedAtom(g.name, args)))
            flat[:] = kept
            return True
    return False


def _rename_bound(f: Formula, taken: set[str]) -> Formula:
    """Rename quantified variables away from `taken` (capture avoidance
    when substituting definition bodies)."""
    if isinstance(f, Forall):
        mapping: Binding = {}
        new_params = []
        for p in f.params:
            fresh = p.name
            i = 1
            while fresh in taken:
                i += 1
                fresh = f"{p.name}{i}"
            taken.add(fresh)
            mapping[p.name] = fresh
            new_params.append(Param(fresh, p.type))
        body = substitute(f.body, mapping, strict=False)
        return Forall(tuple(new_params), _rename_bound(body, taken))
    if isinstance(f, Not):
        return Not(_rename_bound(f.body, taken))
    if isinstance(f, And):
        return And(tuple(_rename_bound(p, taken) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(_rename_bound(p, taken) for p in f.parts))
    return f


def expand_formula(f: Formula, definitions: Sequence[Definition]) -> Formula:
    """Replace every defined atom by its (recursively expanded) body,
    innermost first, and restore negation normal form."""
    expanded: dict[str, Definition] = {}
    for df in definitions:
        body = _expand(df.body, expanded)
        expanded[df.name] = replace(df, body=body)
    return nnf(_expand(f, expanded))


def _expand(f: Formula, expanded: dict[str, Definition]) -> Formula:
    if isinstance(f, DefinedAtom):
        df = expanded.get(f.name)
        if df is None:
            raise ModelError(f"unknown definition {f.name!r}", f.span)
        body = _rename_bound(df.body, set(f.args) | {p.name for p in df.params})
        binding: Binding = {p.name: a for p, a in zip(df.params, f.args)}
        return substitute(body, binding, strict=False)
    if isinstance(f, Not):
        return Not(_expand(f.body, expanded))
    if isinstance(f, And):
        return And(tuple(_expand(p, expanded) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(_expand(p, expanded) for p in f.parts))
    if isinstance(f, Forall):
        return Forall(f.params, _expand(f.body, expanded))
    return f


def expand_definitions(d: Domain) -> Domain:
    """Expand defined atoms everywhere in the domain; the output carries
    no definitions."""
    if not d.definitions:
        return d
    defs = d.definitions

    def fix_formula(f: Formula) -> Formula:
        return expand_formula(f, defs)

    def fix_effect(e: Effect) -> Effect:
        if isinstance(e, When):
            return When(fix_formula(e.cond), e.then, span=e.span)
        return e

    new_actions = tuple(
        replace(a,
                conditions=tuple((t, fix_formula(f)) for t, f in a.conditions),
                effects=tuple((t, fix_effect(e)) for t, e in a.effects))
        for a in d.actions)
    out = replace(d, definitions=(), actions=new_actions)
    validate_domain(out)
    return out


# ---------------------------------------------------------------------------
# at-end conditions

def lower_at_end_conditions(d: Domain, p: Problem) \
        -> tuple[Domain, Problem, LoweringReport]:
    report = LoweringReport("at-end")
    taken = domain_names(d)
    new_predicates = list(d.predicates)
    new_actions = []
    goal_parts: list[Formula] = []

    for a in d.actions:
        end_conditions = a.conditions_at(AT_END)
        if a.kind != DURATIVE or not end_conditions:
            new_actions.append(a)
            continue
        cond = conj(end_conditions)
        params = tuple(q for q in a.params
                       if q.name in free_variables(cond))
        fail_name = fresh_name(f"failed-{a.name}", taken)
        taken.add(fail_name)
        new_predicates.append(PredicateDecl(fail_name, params))
        fail_atom = Atom(fail_name, tuple(q.name for q in params))
        report.synthesized.append(fail_name)
        report.modified_actions.append(a.name)

        effects = []
        for t, e in a.effects:
            if t == AT_END:
                effects.append((t, guard(cond, e)))
            else:
                effects.append((t, e))
        effects.append((AT_END, When(nnf(Not(cond)), (Add(fail_atom),))))
        conditions = tuple((t, f) for t, f in a.conditions if t != AT_END)
        new_actions.append(replace(a, conditions=conditions,
                                   effects=tuple(effects)))

        closed: Formula = Not(fail_atom)
        if params:
            closed = Forall(params, closed)
        goal_parts.append(closed)
        report.goal_augmentations.append(_fmt(closed))

    if not goal_parts:
        return d, p, report

    out_d = replace(d, predicates=tuple(new_predicates),
                    actions=tuple(new_actions))
    validate_domain(out_d)
    out_p = replace(p, goal=conj([p.goal] + goal_parts))
    return out_d, out_p, report


# ---------------------------------------------------------------------------
# duration ranges

def lower_duration_range(d: Domain, rates: Sequence[RateAnnotation]) \
        -> tuple[Domain, LoweringReport]:
    report = LoweringReport("duration-range")
    range_actions = [a for a in d.actions
                     if isinstance(a.duration, RangeDuration)]
    if not range_actions:
        return d, report

    by_name = {r.action: r for r in rates}
    taken = domain_names(d)
    new_predicates = list(d.predicates)
    new_functions = list(d.functions)
    new_actions: list[ActionSchema] = []

    for a in d.actions:
        if not isinstance(a.duration, RangeDuration):
            new_actions.append(a)
            continue
        ann = by_name.get(a.name)
        if ann is None:
            raise ModelError(
                f"range-duration action {a.name!r} has no rate annotation")
        for ref, _ in ann.rates:
            if d.function(ref.name) is None:
                raise ModelError(
                    f"rate annotation of {a.name!r} names unknown fluent "
                    f"{ref.name!r}", ann.span)
            extra = {t for t in ref.args if is_variable(t)} \
                - {q.name for q in a.params}
            if extra:
                raise ModelError(
                    f"rate fluent of {a.name!r} uses non-parameters "
                    f"{sorted(extra)}", ann.span)

        start_a, stop_a, synthesized = _split_range_action(
            a, ann, taken, new_predicates, new_functions)
        report.synthesized.extend(synthesized)
        report.modified_actions.append(a.name)
        report.range_mappings.append(RangeMapping(
            a.name, start_a.name, stop_a.name,
            sum(1 for q in stop_a.params if q.type == TIME_TYPE)))
        if any(_writes_annotated(e, ann) for e in a.effects_at(AT_END)):
            report.warnings.append(
                f"{a.name}: at-end writes to annotated fluents are replaced "
                f"by the stop action's elapsed-time interpolation")
        new_actions.extend([start_a, stop_a])

    out = replace(d, predicates=tuple(new_predicates),
                  functions=tuple(new_functions),
                  actions=tuple(new_actions))
    validate_domain(out)
    return out, report


def _annotated_keys(ann: RateAnnotation) -> set[tuple]:
    return {(ref.name, ref.args) for ref, _ in ann.rates}


def _writes_annotated(e: Effect, ann: RateAnnotation) -> bool:
    keys = _annotated_keys(ann)

    def writes(prim) -> bool:
        if isinstance(prim, (Assign, Increase, Record)):
            return (prim.fluent.name, prim.fluent.args) in keys
        return False

    if isinstance(e, When):
        return any(writes(t) for t in e.then)
    return writes(e)


def _split_range_action(a: ActionSchema, ann: RateAnnotation,
                        taken: set[str], predicates: list, functions: list):
    assert isinstance(a.duration, RangeDuration)
    lo, hi = a.duration.lo, a.duration.hi
    synthesized: list[str] = []

    prog_name = fresh_name(f"ongoing-{a.name}", taken)
    taken.add(prog_name)
    predicates.append(PredicateDecl(prog_name, a.params))
    prog = Atom(prog_name, tuple(q.name for q in a.params))
    synthesized.append(prog_name)

    # one timestamp fluent per annotated fluent; a bare one if a positive
    # lower bound must be enforced without any rates
    stamp_specs: list[tuple[str, FluentRef]] = []
    for ref, _ in ann.rates:
        sname = fresh_name(f"started-{a.name}-{ref.name}", taken)
        taken.add(sname)
        params = tuple(q for q in a.params if q.name in ref.args)
        functions.append(FunctionDecl(sname, params))
        stamp_specs.append((sname, FluentRef(sname, ref.args)))
        synthesized.append(sname)
    if not stamp_specs and not _is_zero(lo):
        sname = fresh_name(f"started-{a.name}", taken)
        taken.add(sname)
        functions.append(FunctionDecl(sname, a.params))
        stamp_specs.append(
            (sname, FluentRef(sname, tuple(q.name for q in a.params))))
        synthesized.append(sname)

    start_name = fresh_name(f"{a.name}-start", taken)
    taken.add(start_name)
    stop_name = fresh_name(f"{a.name}-stop", taken)
    taken.add(stop_name)
    synthesized.extend([start_name, stop_name])

    start_effects: list[tuple[str, Effect]] = [
        (t, e) for t, e in a.effects if t == AT_START]
    start_effects.append((AT_START, Add(prog)))
    for _, ref in stamp_specs:
        start_effects.append((AT_START, Record(ref)))
    # the default completion at the maximum duration, all guarded by the
    # activity still being ongoing
    start_effects.append((AT_END, guard(prog, Del(prog))))
    for e in a.effects_at(AT_END):
        start_effects.append((AT_END, guard(prog, e)))
    if ann.overrun is not None:
        start_effects.append((AT_END, guard(prog, ann.overrun)))

    start_action = ActionSchema(
        name=start_name,
        kind=DURATIVE,
        params=a.params,
        duration=FixedDuration(hi),
        conditions=a.conditions,
        effects=tuple(start_effects),
    )

    stop_params = list(a.params)
    time_vars: list[VarRef] = []
    for i, _ in enumerate(stamp_specs):
        vname = "?start" if len(stamp_specs) == 1 else f"?start{i + 1}"
        stop_params.append(Param(vname, TIME_TYPE))
        time_vars.append(VarRef(vname))

    stop_conditions: list[Formula] = [prog]
    for (_, ref), var in zip(stamp_specs, time_vars):
        stop_conditions.append(Cmp("=", ref, var))
    if time_vars:
        elapsed = Arith("-", CurrentTime(), time_vars[0])
        stop_conditions.append(Cmp(">=", elapsed, lo))
        stop_conditions.append(Cmp("<=", elapsed, hi))

    stop_effects: list[tuple[str, Effect]] = [(AT_START, Del(prog))]
    for (ref, rate), var in zip(ann.rates, time_vars):
        elapsed = Arith("-", CurrentTime(), var)
        stop_effects.append(
            (AT_START, Increase(ref, Arith("*", elapsed, rate))))
    for e in a.effects_at(AT_END):
        if not _writes_annotated(e, ann):
            stop_effects.append((AT_START, e))

    stop_action = ActionSchema(
        name=stop_name,
        kind=SIMPLE,
        params=tuple(stop_params),
        duration=None,
        conditions=((AT_START, conj(stop_conditions)),),
        effects=tuple(stop_effects),
    )
    return start_action, stop_action, synthesized


def _is_zero(e) -> bool:
    return isinstance(e, Num) and e.value == 0


# ---------------------------------------------------------------------------
# pipeline

def is_markovian(d: Domain) -> bool:
    """No over-all nodes, no at-end conditions, no range durations."""
    for a in d.actions:
        if a.conditions_at(OVER_ALL) or a.conditions_at(AT_END):
            return False
        if isinstance(a.duration, RangeDuration):
            return False
    return True


def run_pipeline(domain: Domain, problem: Optional[Problem],
                 passes: Sequence[str] = DEFAULT_PASSES,
                 rates: Sequence[RateAnnotation] = (),
                 groups: Sequence[DefinitionGroup] = ()) \
        -> tuple[Domain, Optional[Problem], list[LoweringReport]]:
    """Apply the selected passes in the given order."""
    reports: list[LoweringReport] = []
    d, p = domain, problem
    for name in passes:
        if name == "duration-range":
            d, rep = lower_duration_range(d, rates)
        elif name == "over-all":
            d, rep = lower_over_all(d)
        elif name == "at-end":
            has_at_end = any(a.conditions_at(AT_END) for a in d.actions
                             if a.kind == DURATIVE)
            if not has_at_end:
                rep = LoweringReport("at-end")
            elif p is None:
                raise InputError(
                    "the at-end pass augments the goal and needs a problem")
            else:
                d, p, rep = lower_at_end_conditions(d, p)
        elif name == "synth-defs":
            d = synthesize_definitions(d, groups)
            rep = LoweringReport("synth-defs",
                                 synthesized=[g.name for g in groups])
        elif name == "expand-defs":
            old_defs = d.definitions
            d = expand_definitions(d)
            rep = LoweringReport("expand-defs",
                                 modified_actions=[df.name for df in old_defs])
            if p is not None and old_defs:
                p = replace(p, goal=expand_formula(p.goal, old_defs))
        else:
            raise InputError(f"unknown pass {name!r}; expected one of "
                             f"{', '.join(ALL_PASSES)}")
        reports.append(rep)
    return d, p, reports


def _fmt(f: Formula) -> str:
    from .printer import format_formula
    return format_formula(f)
