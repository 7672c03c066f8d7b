"""Abstract syntax and ground-model types shared by every pass.

Formulas are kept in negation normal form: negation is only ever applied
to atoms, defined atoms, and numeric comparisons.  All numbers are exact
rationals (fractions.Fraction); there is no floating point anywhere in
the model.  Every node is a frozen dataclass and safe to share; source
spans are carried for diagnostics but excluded from equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

from .errors import ModelError

# time tags
AT_START = "at-start"
AT_END = "at-end"
OVER_ALL = "over-all"

# the built-in numeric parameter type (start-time variables of stop actions)
TIME_TYPE = "time"
OBJECT_TYPE = "object"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int   # 1-based
    column: int  # 1-based

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


def is_variable(term: str) -> bool:
    return term.startswith("?")


# ---------------------------------------------------------------------------
# numeric expressions

@dataclass(frozen=True)
class Num:
    value: Fraction
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class FluentRef:
    name: str
    args: tuple[str, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class VarRef:
    """A numeric variable (a parameter of the built-in type `time`)."""
    name: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class CurrentTime:
    """The wall clock at the instant the enclosing effect or condition is
    evaluated."""
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Arith:
    op: str  # one of + - * /
    lhs: "NumericExpr"
    rhs: "NumericExpr"
    span: Optional[SourceSpan] = field(default=None, compare=False)


NumericExpr = Union[Num, FluentRef, VarRef, CurrentTime, Arith]


# ---------------------------------------------------------------------------
# formulas

@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[str, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def key(self) -> tuple[str, ...]:
        return (self.pred, *self.args)


@dataclass(frozen=True)
class DefinedAtom:
    name: str
    args: tuple[str, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Not:
    body: "Formula"
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Cmp:
    op: str  # one of = < <= > >=
    lhs: NumericExpr
    rhs: NumericExpr
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Forall:
    params: tuple["Param", ...]
    body: "Formula"
    span: Optional[SourceSpan] = field(default=None, compare=False)


Formula = Union[Atom, DefinedAtom, Not, And, Or, Cmp, Forall]

TRUE = And(())


def conj(parts: Iterable[Formula]) -> Formula:
    """Conjunction with And-flattening; () is TRUE, a single part is itself."""
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def conjuncts(f: Formula) -> tuple[Formula, ...]:
    return f.parts if isinstance(f, And) else (f,)


def nnf(f: Formula) -> Formula:
    """Push negations down to atoms, defined atoms, and comparisons."""
    if isinstance(f, Not):
        b = f.body
        if isinstance(b, Not):
            return nnf(b.body)
        if isinstance(b, And):
            return Or(tuple(nnf(Not(p)) for p in b.parts), span=f.span)
        if isinstance(b, Or):
            return And(tuple(nnf(Not(p)) for p in b.parts), span=f.span)
        if isinstance(b, Forall):
            raise ModelError("cannot negate a universally quantified formula", f.span)
        return Not(nnf(b), span=f.span)
    if isinstance(f, And):
        return And(tuple(nnf(p) for p in f.parts), span=f.span)
    if isinstance(f, Or):
        return Or(tuple(nnf(p) for p in f.parts), span=f.span)
    if isinstance(f, Forall):
        return Forall(f.params, nnf(f.body), span=f.span)
    return f


# ---------------------------------------------------------------------------
# effects

@dataclass(frozen=True)
class Add:
    atom: Atom
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Del:
    atom: Atom
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Assign:
    fluent: FluentRef
    expr: NumericExpr
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Increase:
    fluent: FluentRef
    expr: NumericExpr
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Record:
    """Timestamp record: write the current clock into a fluent.

    Only legal among at-start effects."""
    fluent: FluentRef
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class When:
    cond: Formula
    then: tuple["SimpleEffect", ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


SimpleEffect = Union[Add, Del, Assign, Increase, Record]
Effect = Union[Add, Del, Assign, Increase, Record, When]


def guard(cond: Formula, eff: Effect) -> When:
    """Wrap an effect in a condition, flattening an existing guard."""
    if isinstance(eff, When):
        return When(nnf(conj([cond, eff.cond])), eff.then)
    return When(nnf(cond), (eff,))


# ---------------------------------------------------------------------------
# declarations

@dataclass(frozen=True)
class Param:
    name: str
    type: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    params: tuple[Param, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: tuple[Param, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple[Param, ...]
    body: Formula
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class FixedDuration:
    expr: NumericExpr
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class RangeDuration:
    lo: NumericExpr
    hi: NumericExpr
    span: Optional[SourceSpan] = field(default=None, compare=False)


DurationSpec = Union[FixedDuration, RangeDuration]

SIMPLE = "simple"
DURATIVE = "durative"


@dataclass(frozen=True)
class ActionSchema:
    name: str
    kind: str  # SIMPLE or DURATIVE
    params: tuple[Param, ...]
    duration: Optional[DurationSpec]
    conditions: tuple[tuple[str, Formula], ...]  # (time tag, formula)
    effects: tuple[tuple[str, Effect], ...]      # (time tag, effect)
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def conditions_at(self, tag: str) -> tuple[Formula, ...]:
        return tuple(f for t, f in self.conditions if t == tag)

    def effects_at(self, tag: str) -> tuple[Effect, ...]:
        return tuple(e for t, e in self.effects if t == tag)

    def param_types(self) -> dict[str, str]:
        return {p.name: p.type for p in self.params}


@dataclass(frozen=True)
class TypeDecl:
    name: str
    supertype: str  # OBJECT_TYPE at the root
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Domain:
    name: str
    types: tuple[TypeDecl, ...]
    predicates: tuple[PredicateDecl, ...]
    functions: tuple[FunctionDecl, ...]
    definitions: tuple[Definition, ...]
    actions: tuple[ActionSchema, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def predicate(self, name: str) -> Optional[PredicateDecl]:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def function(self, name: str) -> Optional[FunctionDecl]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def definition(self, name: str) -> Optional[Definition]:
        for d in self.definitions:
            if d.name == name:
                return d
        return None

    def action(self, name: str) -> Optional[ActionSchema]:
        for a in self.actions:
            if a.name == name:
                return a
        return None

    def type_tree(self) -> "TypeTree":
        return TypeTree(self.types)


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...]  # (object name, type)
    init_atoms: tuple[Atom, ...]          # ground
    init_fluents: tuple[tuple[FluentRef, Fraction], ...]  # ground
    goal: Formula
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def objects_of_type(self, typ: str, tree: "TypeTree") -> tuple[str, ...]:
        return tuple(o for o, t in self.objects if tree.is_subtype(t, typ))

    def object_type(self, name: str) -> Optional[str]:
        for o, t in self.objects:
            if o == name:
                return t
        return None


@dataclass(frozen=True)
class PlanStep:
    time: Fraction
    action: str
    args: tuple[str, ...]  # constants; numerals kept as their token text
    duration: Optional[Fraction]
    span: Optional[SourceSpan] = field(default=None, compare=False)


Plan = tuple[PlanStep, ...]


class TypeTree:
    """Single-inheritance type hierarchy rooted at `object`.

    `time` is a built-in numeric type outside the tree."""

    def __init__(self, decls: Iterable[TypeDecl]):
        self.parent: dict[str, str] = {}
        for d in decls:
            self.parent[d.name] = d.supertype

    def known(self, typ: str) -> bool:
        return typ == OBJECT_TYPE or typ == TIME_TYPE or typ in self.parent

    def ancestors(self, typ: str) -> Iterator[str]:
        seen = set()
        while True:
            yield typ
            if typ == OBJECT_TYPE or typ in seen:
                return
            seen.add(typ)
            typ = self.parent.get(typ, OBJECT_TYPE)

    def is_subtype(self, typ: str, ancestor: str) -> bool:
        if typ == TIME_TYPE or ancestor == TIME_TYPE:
            return typ == ancestor
        return ancestor in self.ancestors(typ)

    def compatible(self, a: str, b: str) -> bool:
        """True when one type is an ancestor of the other (their ground
        instances can overlap)."""
        return self.is_subtype(a, b) or self.is_subtype(b, a)

    def meet(self, a: str, b: str) -> Optional[str]:
        if self.is_subtype(a, b):
            return a
        if self.is_subtype(b, a):
            return b
        return None


# ---------------------------------------------------------------------------
# substitution

Binding = dict[str, Union[str, Fraction]]


def _sub_term(term: str, binding: Binding, strict: bool) -> str:
    if is_variable(term):
        if term in binding:
            val = binding[term]
            if isinstance(val, Fraction):
                raise ModelError(
                    f"numeric value bound to {term} used in an atom argument")
            return val
        if strict:
            raise ModelError(f"unbound variable {term}")
    return term


def _sub_expr(e: NumericExpr, binding: Binding, strict: bool) -> NumericExpr:
    if isinstance(e, Num) or isinstance(e, CurrentTime):
        return e
    if isinstance(e, VarRef):
        if e.name in binding:
            val = binding[e.name]
            if isinstance(val, Fraction):
                return Num(val)
            # a numeral that arrived as a plan-argument token
            return Num(Fraction(val))
        if strict:
            raise ModelError(f"unbound variable {e.name}")
        return e
    if isinstance(e, FluentRef):
        return FluentRef(e.name, tuple(_sub_term(t, binding, strict) for t in e.args),
                         span=e.span)
    if isinstance(e, Arith):
        return Arith(e.op, _sub_expr(e.lhs, binding, strict),
                     _sub_expr(e.rhs, binding, strict), span=e.span)
    raise ModelError(f"unknown numeric expression {e!r}")


def substitute(node, binding: Binding, strict: bool = True):
    """Apply a variable binding to a formula or effect, returning a copy.

    With strict=True (the default) every free variable must be bound;
    an unbound one raises a ModelError naming it.  Ground inputs come
    back unchanged, so the operation is idempotent on its own output.
    """
    if isinstance(node, Atom):
        return Atom(node.pred, tuple(_sub_term(t, binding, strict) for t in node.args),
                    span=node.span)
    if isinstance(node, DefinedAtom):
        return DefinedAtom(node.name,
                           tuple(_sub_term(t, binding, strict) for t in node.args),
                           span=node.span)
    if isinstance(node, Not):
        return Not(substitute(node.body, binding, strict), span=node.span)
    if isinstance(node, And):
        return And(tuple(substitute(p, binding, strict) for p in node.parts),
                   span=node.span)
    if isinstance(node, Or):
        return Or(tuple(substitute(p, binding, strict) for p in node.parts),
                  span=node.span)
    if isinstance(node, Cmp):
        return Cmp(node.op, _sub_expr(node.lhs, binding, strict),
                   _sub_expr(node.rhs, binding, strict), span=node.span)
    if isinstance(node, Forall):
        inner = {k: v for k, v in binding.items()
                 if k not in {p.name for p in node.params}}
        return Forall(node.params, substitute(node.body, inner, strict=False),
                      span=node.span)
    if isinstance(node, Add):
        return Add(substitute(node.atom, binding, strict), span=node.span)
    if isinstance(node, Del):
        return Del(substitute(node.atom, binding, strict), span=node.span)
    if isinstance(node, Assign):
        return Assign(_sub_expr(node.fluent, binding, strict),
                      _sub_expr(node.expr, binding, strict), span=node.span)
    if isinstance(node, Increase):
        return Increase(_sub_expr(node.fluent, binding, strict),
                        _sub_expr(node.expr, binding, strict), span=node.span)
    if isinstance(node, Record):
        return Record(_sub_expr(node.fluent, binding, strict), span=node.span)
    if isinstance(node, When):
        return When(substitute(node.cond, binding, strict),
                    tuple(substitute(e, binding, strict) for e in node.then),
                    span=node.span)
    raise ModelError(f"cannot substitute into {node!r}")


def free_variables(node) -> set[str]:
    out: set[str] = set()

    def walk(n, bound: frozenset[str]):
        if isinstance(n, (Atom, DefinedAtom)):
            out.update(t for t in n.args if is_variable(t) and t not in bound)
        elif isinstance(n, Not):
            walk(n.body, bound)
        elif isinstance(n, (And, Or)):
            for p in n.parts:
                walk(p, bound)
        elif isinstance(n, Cmp):
            walk_expr(n.lhs, bound)
            walk_expr(n.rhs, bound)
        elif isinstance(n, Forall):
            walk(n.body, bound | {p.name for p in n.params})
        elif isinstance(n, (Add, Del)):
            walk(n.atom, bound)
        elif isinstance(n, (Assign, Increase)):
            walk_expr(n.fluent, bound)
            walk_expr(n.expr, bound)
        elif isinstance(n, Record):
            walk_expr(n.fluent, bound)
        elif isinstance(n, When):
            walk(n.cond, bound)
            for e in n.then:
                walk(e, bound)

    def walk_expr(e, bound: frozenset[str]):
        if isinstance(e, FluentRef):
            out.update(t for t in e.args if is_variable(t) and t not in bound)
        elif isinstance(e, VarRef):
            if e.name not in bound:
                out.add(e.name)
        elif isinstance(e, Arith):
            walk_expr(e.lhs, bound)
            walk_expr(e.rhs, bound)

    walk(node, frozenset())
    return out


# ---------------------------------------------------------------------------
# unification

def rename_apart(atom: Atom, taken: set[str]) -> tuple[Atom, dict[str, str]]:
    """Rename the atom's variables away from `taken`; returns the renamed
    atom and the old->new map."""
    mapping: dict[str, str] = {}
    new_args = []
    for t in atom.args:
        if is_variable(t):
            if t not in mapping:
                fresh = t
                i = 0
                while fresh in taken:
                    i += 1
                    fresh = f"{t}#{i}"
                mapping[t] = fresh
                taken.add(fresh)
            new_args.append(mapping[t])
        else:
            new_args.append(t)
    return Atom(atom.pred, tuple(new_args)), mapping


def unify(a: Atom, b: Atom,
          types: Optional[dict[str, str]] = None,
          tree: Optional[TypeTree] = None) -> Optional[dict[str, str]]:
    """Most general unifier of two atoms sharing no variables.

    Returns a substitution (variable -> term) making them equal, or None.
    When `types` maps variables to their declared types and a TypeTree is
    given, a variable pair only unifies if one type is an ancestor of the
    other, and a variable binds a constant unconditionally (constant types
    are unknown before a problem is loaded — conservative).
    """
    if a.pred != b.pred or len(a.args) != len(b.args):
        return None
    subst: dict[str, str] = {}

    def walk(t: str) -> str:
        while is_variable(t) and t in subst:
            t = subst[t]
        return t

    for x, y in zip(a.args, b.args):
        x, y = walk(x), walk(y)
        if x == y:
            continue
        if is_variable(x) and is_variable(y):
            if types is not None and tree is not None:
                tx, ty = types.get(x, OBJECT_TYPE), types.get(y, OBJECT_TYPE)
                if not tree.compatible(tx, ty):
                    return None
            subst[x] = y
        elif is_variable(x):
            subst[x] = y
        elif is_variable(y):
            subst[y] = x
        else:
            return None
    return subst


def resolve(term: str, subst: dict[str, str]) -> str:
    while is_variable(term) and term in subst:
        term = subst[term]
    return term


# ---------------------------------------------------------------------------
# model validation

def _check_unique(names: Iterable[str], what: str, span) -> None:
    seen = set()
    for n in names:
        if n in seen:
            raise ModelError(f"duplicate {what} name {n!r}", span)
        seen.add(n)


def effect_atoms(eff: Effect) -> list[tuple[Atom, bool]]:
    """All (atom, is_add) pairs an effect can produce, guards ignored."""
    if isinstance(eff, Add):
        return [(eff.atom, True)]
    if isinstance(eff, Del):
        return [(eff.atom, False)]
    if isinstance(eff, When):
        out = []
        for e in eff.then:
            out.extend(effect_atoms(e))
        return out
    return []


def validate_domain(d: Domain) -> None:
    """Check the structural invariants every pass relies on."""
    _check_unique((t.name for t in d.types), "type", d.span)
    for t in d.types:
        if t.name in (OBJECT_TYPE, TIME_TYPE):
            raise ModelError(f"type name {t.name!r} is reserved", t.span)
    tree = d.type_tree()
    for t in d.types:
        if not tree.known(t.supertype):
            raise ModelError(f"unknown supertype {t.supertype!r} of {t.name!r}", t.span)

    # predicates and definitions share the namespace formulas refer into
    _check_unique([p.name for p in d.predicates] + [df.name for df in d.definitions],
                  "predicate", d.span)
    _check_unique((f.name for f in d.functions), "function", d.span)
    _check_unique((a.name for a in d.actions), "action", d.span)

    declared_defs: set[str] = set()
    for df in d.definitions:
        if df.name in declared_defs:
            raise ModelError(f"duplicate definition {df.name!r}", df.span)
        extra = free_variables(df.body) - {p.name for p in df.params}
        if extra:
            raise ModelError(
                f"definition {df.name!r} body uses unbound {sorted(extra)}", df.span)
        _check_defs_stratified(df, declared_defs, d)
        declared_defs.add(df.name)

    for a in d.actions:
        _validate_action(a, d)


def _check_defs_stratified(df: Definition, declared: set[str], d: Domain) -> None:
    used: set[str] = set()

    def walk(f: Formula):
        if isinstance(f, DefinedAtom):
            used.add(f.name)
        elif isinstance(f, Not):
            walk(f.body)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p)
        elif isinstance(f, Forall):
            walk(f.body)

    walk(df.body)
    for u in used:
        if u == df.name or u not in declared:
            raise ModelError(
                f"definition {df.name!r} refers to {u!r}, which is not a "
                f"previously declared definition (definitions are stratified)",
                df.span)


def _validate_action(a: ActionSchema, d: Domain) -> None:
    params = {p.name for p in a.params}
    if a.kind == SIMPLE:
        if a.duration is not None:
            raise ModelError(f"simple action {a.name!r} carries a duration", a.span)
        bad = [t for t, _ in a.conditions if t != AT_START]
        bad += [t for t, _ in a.effects if t != AT_START]
        if bad:
            raise ModelError(
                f"simple action {a.name!r} uses time tag {bad[0]!r}", a.span)
    elif a.kind == DURATIVE:
        if a.duration is None:
            raise ModelError(f"durative action {a.name!r} lacks a duration", a.span)
    else:
        raise ModelError(f"unknown action kind {a.kind!r}", a.span)

    for tag, eff in a.effects:
        for node in _iter_effect_nodes(eff):
            if isinstance(node, Record) and tag != AT_START:
                raise ModelError(
                    f"timestamp record in {a.name!r} is only legal at start", a.span)
            if isinstance(node, When):
                for sub in node.then:
                    if isinstance(sub, When):
                        raise ModelError(
                            f"nested conditional effect in {a.name!r}", a.span)

    free: set[str] = set()
    for _, f in a.conditions:
        free |= free_variables(f)
    for _, e in a.effects:
        free |= free_variables(e)
    extra = free - params
    if extra:
        raise ModelError(
            f"action {a.name!r} uses variables {sorted(extra)} that are not "
            f"parameters", a.span)


def _iter_effect_nodes(eff: Effect) -> Iterator[Effect]:
    yield eff
    if isinstance(eff, When):
        yield from eff.then


def fresh_name(base: str, taken: set[str]) -> str:
    """Deterministic fresh identifier: base, then base-2, base-3, ..."""
    if base not in taken:
        return base
    i = 2
    while f"{base}-{i}" in taken:
        i += 1
    return f"{base}-{i}"


def domain_names(d: Domain) -> set[str]:
    """Every name already spoken for in any of the domain's namespaces."""
    out = {d.name}
    out.update(t.name for t in d.types)
    out.update(p.name for p in d.predicates)
    out.update(f.name for f in d.functions)
    out.update(df.name for df in d.definitions)
    out.update(a.name for a in d.actions)
    return out


__all__ = [
    "AT_START", "AT_END", "OVER_ALL", "TIME_TYPE", "OBJECT_TYPE",
    "SIMPLE", "DURATIVE", "TRUE",
    "SourceSpan", "Num", "FluentRef", "VarRef", "CurrentTime", "Arith",
    "NumericExpr", "Atom", "DefinedAtom", "Not", "And", "Or", "Cmp", "Forall",
    "Formula", "Add", "Del", "Assign", "Increase", "Record", "When",
    "SimpleEffect", "Effect", "Param", "PredicateDecl", "FunctionDecl",
    "Definition", "FixedDuration", "RangeDuration", "DurationSpec",
    "ActionSchema", "TypeDecl", "Domain", "Problem", "PlanStep", "Plan",
    "TypeTree", "Binding", "is_variable", "conj", "conjuncts", "nnf", "guard",
    "substitute", "free_variables", "rename_apart", "unify", "resolve",
    "effect_atoms", "validate_domain", "fresh_name", "domain_names",
]
