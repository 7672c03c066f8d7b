"""Deterministic writers for the surface syntax.

Two prints of the same object are byte-identical, and parsing a printed
domain or problem yields a structurally equal object.  Rationals print
as integers or p/q literals, both of which the reader accepts exactly.
"""

from __future__ import annotations

from fractions import Fraction

from .model import (
    AT_END, AT_START, DURATIVE, OVER_ALL,
    ActionSchema, Add, And, Arith, Assign, Atom, Cmp, CurrentTime, DefinedAtom,
    Definition, Del, Domain, Effect, FixedDuration, Forall, Formula, Increase,
    Not, Num, NumericExpr, Or, Param, Plan, Problem, RangeDuration, Record,
    VarRef, When,
)

_TAG_TEXT = {AT_START: "at start", AT_END: "at end", OVER_ALL: "over all"}


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_numeric(e: NumericExpr) -> str:
    if isinstance(e, Num):
        return format_rational(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, CurrentTime):
        return "(current-time)"
    if isinstance(e, Arith):
        return f"({e.op} {format_numeric(e.lhs)} {format_numeric(e.rhs)})"
    # FluentRef
    return "(" + " ".join((e.name,) + e.args) + ")"


def _format_params(params: tuple[Param, ...]) -> str:
    return " ".join(f"{p.name} - {p.type}" for p in params)


def format_formula(f: Formula) -> str:
    if isinstance(f, (Atom, DefinedAtom)):
        name = f.pred if isinstance(f, Atom) else f.name
        return "(" + " ".join((name,) + f.args) + ")"
    if isinstance(f, Not):
        return f"(not {format_formula(f.body)})"
    if isinstance(f, And):
        if not f.parts:
            return "(and)"
        return "(and " + " ".join(format_formula(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(format_formula(p) for p in f.parts) + ")"
    if isinstance(f, Cmp):
        return f"({f.op} {format_numeric(f.lhs)} {format_numeric(f.rhs)})"
    if isinstance(f, Forall):
        return f"(forall ({_format_params(f.params)}) {format_formula(f.body)})"
    raise TypeError(f"cannot print formula {f!r}")


def format_effect(e: Effect) -> str:
    if isinstance(e, Add):
        return format_formula(e.atom)
    if isinstance(e, Del):
        return f"(not {format_formula(e.atom)})"
    if isinstance(e, Assign):
        return f"(assign {format_numeric(e.fluent)} {format_numeric(e.expr)})"
    if isinstance(e, Increase):
        return f"(increase {format_numeric(e.fluent)} {format_numeric(e.expr)})"
    if isinstance(e, Record):
        inner = " ".join((e.fluent.name,) + e.fluent.args)
        return f"({inner} (current-time))"
    if isinstance(e, When):
        if len(e.then) == 1:
            body = format_effect(e.then[0])
        else:
            body = "(and " + " ".join(format_effect(t) for t in e.then) + ")"
        return f"(when {format_formula(e.cond)} {body})"
    raise TypeError(f"cannot print effect {e!r}")


def _format_duration(d) -> str:
    if isinstance(d, FixedDuration):
        return f"(= ?duration {format_numeric(d.expr)})"
    if isinstance(d, RangeDuration):
        return (f"(and (>= ?duration {format_numeric(d.lo)}) "
                f"(<= ?duration {format_numeric(d.hi)}))")
    raise TypeError(f"cannot print duration {d!r}")


def _print_action(a: ActionSchema, out: list[str]) -> None:
    durative = a.kind == DURATIVE
    header = ":durative-action" if durative else ":action"
    out.append(f"  ({header} {a.name}")
    out.append(f"    :parameters ({_format_params(a.params)})")
    if a.duration is not None:
        out.append(f"    :duration {_format_duration(a.duration)}")
    cond_kw = ":condition" if durative else ":precondition"
    if a.conditions:
        if durative:
            body = [f"({_TAG_TEXT[t]} {format_formula(f)})"
                    for t, f in a.conditions]
            if len(body) == 1:
                out.append(f"    {cond_kw} {body[0]}")
            else:
                out.append(f"    {cond_kw} (and")
                for b in body:
                    out.append(f"      {b}")
                out.append("    )")
        else:
            forms = [f for _, f in a.conditions]
            if len(forms) == 1:
                out.append(f"    {cond_kw} {format_formula(forms[0])}")
            else:
                out.append(f"    {cond_kw} (and")
                for f in forms:
                    out.append(f"      {format_formula(f)}")
                out.append("    )")
    if a.effects:
        body = []
        for t, e in a.effects:
            if durative:
                body.append(f"({_TAG_TEXT[t]} {format_effect(e)})")
            else:
                body.append(format_effect(e))
        if len(body) == 1:
            out.append(f"    :effect {body[0]}")
        else:
            out.append("    :effect (and")
            for b in body:
                out.append(f"      {b}")
            out.append("    )")
    out.append("  )")


def print_domain(d: Domain) -> str:
    out: list[str] = [f"(define (domain {d.name})"]
    if d.types:
        out.append("  (:types")
        for t in d.types:
            out.append(f"    {t.name} - {t.supertype}")
        out.append("  )")
    if d.predicates:
        out.append("  (:predicates")
        for p in d.predicates:
            inner = p.name if not p.params else f"{p.name} {_format_params(p.params)}"
            out.append(f"    ({inner})")
        out.append("  )")
    if d.functions:
        out.append("  (:functions")
        for f in d.functions:
            inner = f.name if not f.params else f"{f.name} {_format_params(f.params)}"
            out.append(f"    ({inner})")
        out.append("  )")
    for df in d.definitions:
        head = df.name if not df.params else f"{df.name} {_format_params(df.params)}"
        out.append(f"  (:derived ({head})")
        out.append(f"    {format_formula(df.body)}")
        out.append("  )")
    for a in d.actions:
        _print_action(a, out)
    out.append(")")
    return "\n".join(out) + "\n"


def print_problem(p: Problem) -> str:
    out: list[str] = [f"(define (problem {p.name})",
                      f"  (:domain {p.domain_name})"]
    if p.objects:
        out.append("  (:objects")
        for name, typ in p.objects:
            out.append(f"    {name} - {typ}")
        out.append("  )")
    out.append("  (:init")
    for atom in p.init_atoms:
        out.append(f"    {format_formula(atom)}")
    for ref, value in p.init_fluents:
        out.append(f"    (= {format_numeric(ref)} {format_rational(value)})")
    out.append("  )")
    out.append(f"  (:goal {format_formula(p.goal)})")
    out.append(")")
    return "\n".join(out) + "\n"


def print_plan(plan: Plan) -> str:
    lines = []
    for step in plan:
        head = f"{format_rational(step.time)}: (" + " ".join(
            (step.action,) + step.args) + ")"
        if step.duration is not None:
            head += f" [{format_rational(step.duration)}]"
        lines.append(head)
    return "\n".join(lines) + ("\n" if lines else "")
