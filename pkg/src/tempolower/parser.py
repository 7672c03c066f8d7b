"""Surface-syntax readers: domains, problems, plans, and sidecar files.

The grammar is the parenthesized PDDL2.1 subset the tool operates on:
typed parameters, durative actions with tagged conditions and effects,
fixed and closed-range durations, derived predicates, and numeric fluents
with exact rational values.  Formulas come out in negation normal form.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Optional

from .errors import ParseError
from .model import (
    AT_END, AT_START, DURATIVE, OVER_ALL, SIMPLE, TIME_TYPE,
    ActionSchema, Add, And, Arith, Assign, Atom, Cmp, CurrentTime, DefinedAtom,
    Definition, Del, Domain, Effect, FixedDuration, FluentRef, Forall, Formula,
    FunctionDecl, Increase, Not, Num, NumericExpr, Or, Param, PlanStep, Plan,
    PredicateDecl, Problem, RangeDuration, Record, TypeDecl, TypeTree, VarRef,
    When, conj, free_variables, is_variable, nnf, validate_domain,
)
from .model import SourceSpan
from .sexpr import (
    SAtom, SExpr, SList, _try_number, expect_atom, expect_list, expect_symbol,
    head_is, read_all,
)

_CMP_OPS = {"=", "<", "<=", ">", ">="}
_ARITH_OPS = {"+", "-", "*", "/"}


def _parse_typed_list(items: tuple[SExpr, ...], what: str) -> list[tuple[str, str, object]]:
    """`a b - t c - u d` -> [(a,t),(b,t),(c,u),(d,object)] with spans."""
    out: list[tuple[str, str, object]] = []
    pending: list[SAtom] = []
    i = 0
    while i < len(items):
        tok = expect_symbol(items[i], f"{what} name")
        if tok.text == "-":
            if not pending:
                raise ParseError(f"stray '-' in {what} list", tok.span)
            if i + 1 >= len(items):
                raise ParseError(f"missing type after '-' in {what} list", tok.span)
            typ = expect_symbol(items[i + 1], "type name")
            out.extend((p.text, typ.text, p.span) for p in pending)
            pending = []
            i += 2
        else:
            pending.append(tok)
            i += 1
    out.extend((p.text, "object", p.span) for p in pending)
    return out


def _parse_params(items: tuple[SExpr, ...], span) -> tuple[Param, ...]:
    triples = _parse_typed_list(items, "parameter")
    params = []
    for name, typ, sp in triples:
        if not is_variable(name):
            raise ParseError(f"parameter {name!r} must start with '?'", sp)
        params.append(Param(name, typ, span=sp))
    seen = set()
    for p in params:
        if p.name in seen:
            raise ParseError(f"duplicate parameter {p.name}", span)
        seen.add(p.name)
    return tuple(params)


class _Decls:
    """Declaration tables built up while a domain parses."""

    def __init__(self, filename: str):
        self.filename = filename
        self.types: list[TypeDecl] = []
        self.predicates: dict[str, PredicateDecl] = {}
        self.functions: dict[str, FunctionDecl] = {}
        self.definitions: dict[str, Definition] = {}

    def tree(self) -> TypeTree:
        return TypeTree(self.types)

    def check_type(self, name: str, span) -> None:
        if not self.tree().known(name):
            raise ParseError(f"unknown type {name!r}", span)


class _FormulaParser:
    """Parses formulas, effects, and numeric expressions against a
    declaration table and a variable scope (name -> type)."""

    def __init__(self, decls: _Decls, scope: dict[str, str],
                 objects: Optional[dict[str, str]] = None):
        self.decls = decls
        self.scope = scope
        self.objects = objects  # constant -> type, when a problem is in play

    # -- terms ---------------------------------------------------------

    def _term(self, e: SExpr, expected_type: str, span) -> str:
        tok = expect_atom(e, "term")
        if tok.value is not None:
            raise ParseError("number used as an object term", tok.span)
        t = tok.text
        tree = self.decls.tree()
        if is_variable(t):
            if t not in self.scope:
                raise ParseError(f"variable {t} is not in scope", tok.span)
            vtype = self.scope[t]
            if vtype == TIME_TYPE:
                raise ParseError(
                    f"time variable {t} used as an object term", tok.span)
            if not tree.is_subtype(vtype, expected_type):
                raise ParseError(
                    f"{t} has type {vtype!r}, expected {expected_type!r}", tok.span)
        elif self.objects is not None:
            otype = self.objects.get(t)
            if otype is None:
                raise ParseError(f"unknown object {t!r}", tok.span)
            if not tree.is_subtype(otype, expected_type):
                raise ParseError(
                    f"object {t!r} has type {otype!r}, expected {expected_type!r}",
                    tok.span)
        return t

    def _atom_like(self, lst: SList, head: SAtom):
        pred = self.decls.predicates.get(head.text)
        if pred is not None:
            decl_params = pred.params
            ctor = Atom
        else:
            df = self.decls.definitions.get(head.text)
            if df is None:
                return None
            decl_params = df.params
            ctor = DefinedAtom
        args = lst.items[1:]
        if len(args) != len(decl_params):
            raise ParseError(
                f"{head.text!r} takes {len(decl_params)} argument(s), got {len(args)}",
                lst.span)
        terms = tuple(self._term(a, p.type, lst.span)
                      for a, p in zip(args, decl_params))
        return ctor(head.text, terms, span=lst.span)

    # -- numeric expressions -------------------------------------------

    def numeric(self, e: SExpr) -> NumericExpr:
        if isinstance(e, SAtom):
            if e.value is not None:
                return Num(e.value, span=e.span)
            if is_variable(e.text):
                if self.scope.get(e.text) != TIME_TYPE:
                    raise ParseError(
                        f"variable {e.text} is not a time variable but appears "
                        f"in a numeric expression", e.span)
                return VarRef(e.text, span=e.span)
            raise ParseError(f"expected a numeric expression, found {e.text!r}", e.span)
        if len(e.items) == 0:
            raise ParseError("empty numeric expression", e.span)
        head = expect_symbol(e.items[0], "numeric operator or fluent")
        if head.text == "current-time":
            if len(e.items) != 1:
                raise ParseError("(current-time) takes no arguments", e.span)
            return CurrentTime(span=e.span)
        if head.text in _ARITH_OPS:
            if len(e.items) != 3:
                raise ParseError(f"({head.text} ...) takes two operands", e.span)
            return Arith(head.text, self.numeric(e.items[1]),
                         self.numeric(e.items[2]), span=e.span)
        fn = self.decls.functions.get(head.text)
        if fn is None:
            raise ParseError(f"unknown function {head.text!r}", head.span)
        args = e.items[1:]
        if len(args) != len(fn.params):
            raise ParseError(
                f"function {head.text!r} takes {len(fn.params)} argument(s), "
                f"got {len(args)}", e.span)
        terms = tuple(self._term(a, p.type, e.span) for a, p in zip(args, fn.params))
        return FluentRef(head.text, terms, span=e.span)

    # -- formulas -------------------------------------------------------

    def formula(self, e: SExpr) -> Formula:
        f = self._formula(e)
        return nnf(f)

    def _formula(self, e: SExpr) -> Formula:
        lst = expect_list(e, "formula")
        if len(lst.items) == 0:
            raise ParseError("empty formula", lst.span)
        head = expect_symbol(lst.items[0], "formula head")
        if head.text == "and":
            return And(tuple(self._formula(i) for i in lst.items[1:]), span=lst.span)
        if head.text == "or":
            return Or(tuple(self._formula(i) for i in lst.items[1:]), span=lst.span)
        if head.text == "not":
            if len(lst.items) != 2:
                raise ParseError("(not ...) takes one formula", lst.span)
            return Not(self._formula(lst.items[1]), span=lst.span)
        if head.text == "forall":
            if len(lst.items) != 3:
                raise ParseError("(forall (vars) body) takes two parts", lst.span)
            vars_list = expect_list(lst.items[1], "quantified variable list")
            params = _parse_params(vars_list.items, vars_list.span)
            for p in params:
                self.decls.check_type(p.type, vars_list.span)
            inner = dict(self.scope)
            inner.update({p.name: p.type for p in params})
            sub = _FormulaParser(self.decls, inner, self.objects)
            return Forall(params, sub._formula(lst.items[2]), span=lst.span)
        if head.text in _CMP_OPS:
            if len(lst.items) != 3:
                raise ParseError(f"({head.text} ...) takes two operands", lst.span)
            return Cmp(head.text, self.numeric(lst.items[1]),
                       self.numeric(lst.items[2]), span=lst.span)
        atom = self._atom_like(lst, head)
        if atom is None:
            raise ParseError(f"unknown predicate {head.text!r}", head.span)
        return atom

    # -- effects ----------------------------------------------------------

    def effect_items(self, e: SExpr) -> list[Effect]:
        """Flatten (and ...) conjunctions into a list of effect items."""
        if head_is(e, "and"):
            out: list[Effect] = []
            for item in expect_list(e, "effect").items[1:]:
                out.extend(self.effect_items(item))
            return out
        return [self._effect(e)]

    def _effect(self, e: SExpr) -> Effect:
        lst = expect_list(e, "effect")
        if len(lst.items) == 0:
            raise ParseError("empty effect", lst.span)
        head = expect_symbol(lst.items[0], "effect head")
        if head.text == "when":
            if len(lst.items) != 3:
                raise ParseError("(when COND EFFECT) takes two parts", lst.span)
            cond = self.formula(lst.items[1])
            then = self.effect_items(lst.items[2])
            for t in then:
                if isinstance(t, When):
                    raise ParseError("nested (when ...) effects are not allowed",
                                     lst.span)
            return When(cond, tuple(then), span=lst.span)
        if head.text == "not":
            if len(lst.items) != 2:
                raise ParseError("(not ...) in an effect takes one atom", lst.span)
            inner = expect_list(lst.items[1], "atom")
            ihead = expect_symbol(inner.items[0], "predicate")
            atom = self._atom_like(inner, ihead)
            if not isinstance(atom, Atom):
                raise ParseError(
                    f"only declared predicates can be deleted, not {ihead.text!r}",
                    inner.span)
            return Del(atom, span=lst.span)
        if head.text in ("assign", "increase"):
            if len(lst.items) != 3:
                raise ParseError(f"({head.text} FLUENT EXPR) takes two parts",
                                 lst.span)
            target = self.numeric(lst.items[1])
            if not isinstance(target, FluentRef):
                raise ParseError(f"({head.text} ...) must target a fluent", lst.span)
            expr = self.numeric(lst.items[2])
            ctor = Assign if head.text == "assign" else Increase
            return ctor(target, expr, span=lst.span)
        # timestamp-record surface form: (FLUENT ARGS... (current-time))
        if head.text in self.decls.functions:
            items = lst.items
            if len(items) >= 2 and head_is(items[-1], "current-time"):
                target = self.numeric(SList(items[:-1], lst.span))
                assert isinstance(target, FluentRef)
                return Record(target, span=lst.span)
            raise ParseError(
                f"fluent {head.text!r} in effect position must be written "
                f"(assign ...), (increase ...), or (... (current-time))", lst.span)
        atom = self._atom_like(lst, head)
        if not isinstance(atom, Atom):
            raise ParseError(f"unknown predicate {head.text!r} in effect", head.span)
        return Add(atom, span=lst.span)


# ---------------------------------------------------------------------------
# domain

_TAG_WORDS = {("at", "start"): AT_START, ("at", "end"): AT_END,
              ("over", "all"): OVER_ALL}


def _split_tag(e: SExpr) -> Optional[tuple[str, SExpr]]:
    """Recognize (at start X), (at end X), (over all X)."""
    if not isinstance(e, SList) or len(e.items) != 3:
        return None
    a, b = e.items[0], e.items[1]
    if isinstance(a, SAtom) and isinstance(b, SAtom):
        tag = _TAG_WORDS.get((a.text, b.text))
        if tag is not None:
            return tag, e.items[2]
    return None


def _parse_duration(e: SExpr, fp: _FormulaParser) -> FixedDuration | RangeDuration:
    lst = expect_list(e, "duration specification")

    def duration_bound(item: SExpr) -> tuple[str, NumericExpr]:
        b = expect_list(item, "duration bound")
        if len(b.items) != 3:
            raise ParseError("malformed duration bound", b.span)
        op = expect_symbol(b.items[0], "duration operator").text
        var = expect_symbol(b.items[1], "?duration")
        if var.text != "?duration":
            raise ParseError("duration bound must constrain ?duration", var.span)
        return op, fp.numeric(b.items[2])

    if head_is(e, "and"):
        bounds = dict(duration_bound(i) for i in lst.items[1:])
        if set(bounds) == {">=", "<="} and len(lst.items) == 3:
            return RangeDuration(bounds[">="], bounds["<="], span=lst.span)
        raise ParseError(
            "a duration range is (and (>= ?duration LO) (<= ?duration HI))",
            lst.span)
    op, expr = duration_bound(e)
    if op != "=":
        raise ParseError("a fixed duration is (= ?duration EXPR)", lst.span)
    return FixedDuration(expr, span=lst.span)


def _parse_condition_entries(e: SExpr, fp: _FormulaParser,
                             durative: bool) -> list[tuple[str, Formula]]:
    entries: list[tuple[str, Formula]] = []

    def one(item: SExpr) -> None:
        tagged = _split_tag(item) if durative else None
        if tagged is not None:
            tag, body = tagged
            entries.append((tag, fp.formula(body)))
        else:
            entries.append((AT_START, fp.formula(item)))

    if head_is(e, "and") and durative:
        lst = expect_list(e, "condition")
        # a top-level (and ...) over tagged items distributes into entries;
        # over plain formulas it is one untagged (at-start) formula
        tags = [_split_tag(i) is not None for i in lst.items[1:]]
        if tags and all(tags):
            for i in lst.items[1:]:
                one(i)
            return entries
        if any(tags):
            raise ParseError(
                "either every conjunct of a durative condition is tagged "
                "(at start/at end/over all ...) or none is", lst.span)
    one(e)
    return entries


def _parse_effect_entries(e: SExpr, fp: _FormulaParser,
                          durative: bool) -> list[tuple[str, Effect]]:
    entries: list[tuple[str, Effect]] = []

    def walk(item: SExpr) -> None:
        if head_is(item, "and"):
            for sub in expect_list(item, "effect").items[1:]:
                walk(sub)
            return
        tagged = _split_tag(item) if durative else None
        if tagged is not None:
            tag, body = tagged
            if tag == OVER_ALL:
                raise ParseError("effects cannot be tagged (over all ...)",
                                 item.span)
            for eff in fp.effect_items(body):
                entries.append((tag, eff))
        else:
            entries.append((AT_START, fp._effect(item)))

    walk(e)
    return entries


def _parse_action(lst: SList, decls: _Decls, durative: bool) -> ActionSchema:
    if len(lst.items) < 2:
        raise ParseError("action is missing a name", lst.span)
    name = expect_symbol(lst.items[1], "action name").text
    params: tuple[Param, ...] = ()
    duration = None
    conditions: list[tuple[str, Formula]] = []
    effects: list[tuple[str, Effect]] = []
    seen: set[str] = set()

    i = 2
    while i < len(lst.items):
        key = expect_symbol(lst.items[i], "action keyword")
        if not key.text.startswith(":"):
            raise ParseError(f"expected an action keyword, found {key.text!r}",
                             key.span)
        slot = ":condition" if key.text == ":precondition" else key.text
        if slot in seen:
            raise ParseError(f"duplicate {key.text} in action {name!r}", key.span)
        seen.add(slot)
        if key.text == ":parameters":
            # one or more parenthesized groups, concatenated
            groups = []
            i += 1
            while i < len(lst.items) and isinstance(lst.items[i], SList):
                groups.extend(expect_list(lst.items[i], "parameter list").items)
                i += 1
            params = _parse_params(tuple(groups), key.span)
            for p in params:
                if p.type != TIME_TYPE:
                    decls.check_type(p.type, key.span)
            continue
        if i + 1 >= len(lst.items):
            raise ParseError(f"{key.text} is missing its value", key.span)
        value = lst.items[i + 1]
        scope = {p.name: p.type for p in params}
        fp = _FormulaParser(decls, scope)
        if key.text == ":duration":
            if not durative:
                raise ParseError("simple actions cannot carry :duration", key.span)
            duration = _parse_duration(value, fp)
        elif key.text in (":precondition", ":condition"):
            # the figures write :precondition on durative actions too;
            # both spellings are accepted, printing normalizes them
            if not durative and key.text == ":condition":
                raise ParseError("simple actions use :precondition", key.span)
            if not (head_is(value, "and")
                    and len(expect_list(value, "c").items) == 1):
                conditions.extend(_parse_condition_entries(value, fp, durative))
        elif key.text == ":effect":
            if not (head_is(value, "and")
                    and len(expect_list(value, "e").items) == 1):
                effects.extend(_parse_effect_entries(value, fp, durative))
        else:
            raise ParseError(f"unknown action keyword {key.text}", key.span)
        i += 2

    if durative and duration is None:
        raise ParseError(f"durative action {name!r} lacks :duration", lst.span)
    return ActionSchema(
        name=name,
        kind=DURATIVE if durative else SIMPLE,
        params=params,
        duration=duration,
        conditions=tuple(conditions),
        effects=tuple(effects),
        span=lst.span,
    )


def parse_domain(text: str, filename: str = "<domain>") -> Domain:
    forms = read_all(text, filename)
    if len(forms) != 1:
        span = forms[1].span if len(forms) > 1 else SourceSpan(filename, 1, 1)
        raise ParseError("a domain file holds exactly one (define ...) form", span)
    top = expect_list(forms[0], "(define ...)")
    if not head_is(top, "define"):
        raise ParseError("expected (define (domain NAME) ...)", top.span)
    if len(top.items) < 2 or not head_is(top.items[1], "domain"):
        raise ParseError("expected (domain NAME) after define", top.span)
    dom_form = expect_list(top.items[1], "(domain NAME)")
    if len(dom_form.items) != 2:
        raise ParseError("(domain NAME) takes one name", dom_form.span)
    name = expect_symbol(dom_form.items[1], "domain name").text

    decls = _Decls(filename)
    actions: list[ActionSchema] = []
    definitions: list[Definition] = []

    for section in top.items[2:]:
        sec = expect_list(section, "domain section")
        if len(sec.items) == 0:
            raise ParseError("empty domain section", sec.span)
        key = expect_symbol(sec.items[0], "section keyword")
        if key.text == ":types":
            for tname, super_, sp in _parse_typed_list(sec.items[1:], "type"):
                if is_variable(tname):
                    raise ParseError("type names cannot be variables", sp)
                decls.types.append(TypeDecl(tname, super_, span=sp))
        elif key.text == ":predicates":
            for p in sec.items[1:]:
                plist = expect_list(p, "predicate declaration")
                pname = expect_symbol(plist.items[0], "predicate name").text
                params = _parse_params(plist.items[1:], plist.span)
                for prm in params:
                    decls.check_type(prm.type, plist.span)
                if pname in decls.predicates:
                    raise ParseError(f"duplicate predicate {pname!r}", plist.span)
                decls.predicates[pname] = PredicateDecl(pname, params, span=plist.span)
        elif key.text == ":functions":
            for f in sec.items[1:]:
                flist = expect_list(f, "function declaration")
                fname = expect_symbol(flist.items[0], "function name").text
                params = _parse_params(flist.items[1:], flist.span)
                for prm in params:
                    decls.check_type(prm.type, flist.span)
                if fname in decls.functions:
                    raise ParseError(f"duplicate function {fname!r}", flist.span)
                decls.functions[fname] = FunctionDecl(fname, params, span=flist.span)
        elif key.text == ":derived":
            if len(sec.items) != 3:
                raise ParseError("(:derived (NAME PARAMS) BODY) takes two parts",
                                 sec.span)
            headl = expect_list(sec.items[1], "derived predicate head")
            dname = expect_symbol(headl.items[0], "derived predicate name").text
            params = _parse_params(headl.items[1:], headl.span)
            for prm in params:
                decls.check_type(prm.type, headl.span)
            if dname in decls.predicates or dname in decls.definitions:
                raise ParseError(f"duplicate name {dname!r}", headl.span)
            fp = _FormulaParser(decls, {p.name: p.type for p in params})
            body = fp.formula(sec.items[2])
            df = Definition(dname, params, body, span=sec.span)
            definitions.append(df)
            decls.definitions[dname] = df
        elif key.text == ":action":
            actions.append(_parse_action(sec, decls, durative=False))
        elif key.text == ":durative-action":
            actions.append(_parse_action(sec, decls, durative=True))
        else:
            raise ParseError(f"unknown domain section {key.text}", key.span)

    d = Domain(
        name=name,
        types=tuple(decls.types),
        predicates=tuple(decls.predicates.values()),
        functions=tuple(decls.functions.values()),
        definitions=tuple(definitions),
        actions=tuple(actions),
        span=top.span,
    )
    try:
        validate_domain(d)
    except Exception as exc:
        raise ParseError(str(exc), top.span) from exc
    return d


# ---------------------------------------------------------------------------
# problem

def parse_problem(text: str, domain: Domain, filename: str = "<problem>") -> Problem:
    forms = read_all(text, filename)
    if len(forms) != 1:
        raise ParseError("a problem file holds exactly one (define ...) form",
                         forms[-1].span)
    top = expect_list(forms[0], "(define ...)")
    if not head_is(top, "define") or len(top.items) < 2 \
            or not head_is(top.items[1], "problem"):
        raise ParseError("expected (define (problem NAME) ...)", top.span)
    pform = expect_list(top.items[1], "(problem NAME)")
    name = expect_symbol(pform.items[1], "problem name").text

    decls = _Decls(filename)
    decls.types = list(domain.types)
    decls.predicates = {p.name: p for p in domain.predicates}
    decls.functions = {f.name: f for f in domain.functions}
    decls.definitions = {df.name: df for df in domain.definitions}
    tree = domain.type_tree()

    domain_name = None
    objects: list[tuple[str, str]] = []
    init_atoms: list[Atom] = []
    init_fluents: list[tuple[FunctionDecl, tuple[str, ...], Fraction, object]] = []
    goal: Formula = And(())

    for section in top.items[2:]:
        sec = expect_list(section, "problem section")
        key = expect_symbol(sec.items[0], "section keyword")
        if key.text == ":domain":
            domain_name = expect_symbol(sec.items[1], "domain name").text
            if domain_name != domain.name:
                raise ParseError(
                    f"problem is for domain {domain_name!r}, got {domain.name!r}",
                    sec.span)
        elif key.text == ":objects":
            for oname, otype, sp in _parse_typed_list(sec.items[1:], "object"):
                if is_variable(oname):
                    raise ParseError("object names cannot be variables", sp)
                if not tree.known(otype) or otype == TIME_TYPE:
                    raise ParseError(f"unknown object type {otype!r}", sp)
                if any(o == oname for o, _ in objects):
                    raise ParseError(f"duplicate object {oname!r}", sp)
                objects.append((oname, otype))
        elif key.text == ":init":
            obj_types = dict(objects)
            fp = _FormulaParser(decls, {}, objects=obj_types)
            for item in sec.items[1:]:
                lst = expect_list(item, "init item")
                head = expect_symbol(lst.items[0], "init head")
                if head.text == "=":
                    if len(lst.items) != 3:
                        raise ParseError("(= (FLUENT ...) VALUE) takes two parts",
                                         lst.span)
                    target = fp.numeric(lst.items[1])
                    if not isinstance(target, FluentRef):
                        raise ParseError("init (= ...) must target a fluent",
                                         lst.span)
                    valtok = expect_atom(lst.items[2], "number")
                    if valtok.value is None:
                        raise ParseError("init fluent value must be a number",
                                         valtok.span)
                    fdecl = decls.functions[target.name]
                    init_fluents.append((fdecl, target.args, valtok.value, lst.span))
                else:
                    atom = fp._atom_like(lst, head)
                    if not isinstance(atom, Atom):
                        raise ParseError(f"unknown predicate {head.text!r} in init",
                                         head.span)
                    if free_variables(atom):
                        raise ParseError("init atoms must be ground", lst.span)
                    init_atoms.append(atom)
        elif key.text == ":goal":
            if len(sec.items) != 2:
                raise ParseError("(:goal FORMULA) takes one formula", sec.span)
            obj_types = dict(objects)
            fp = _FormulaParser(decls, {}, objects=obj_types)
            goal = fp.formula(sec.items[1])
        else:
            raise ParseError(f"unknown problem section {key.text}", key.span)

    if domain_name is None:
        raise ParseError("problem lacks a (:domain ...) section", top.span)

    fluents = tuple(
        (FluentRef(fd.name, args), value)
        for fd, args, value, _ in init_fluents)
    seen_fl = set()
    for (ref, _), (_, _, _, sp) in zip(fluents, init_fluents):
        k = (ref.name, ref.args)
        if k in seen_fl:
            raise ParseError(f"fluent {ref.name}{ref.args} initialized twice", sp)
        seen_fl.add(k)

    return Problem(
        name=name,
        domain_name=domain_name,
        objects=tuple(objects),
        init_atoms=tuple(init_atoms),
        init_fluents=fluents,
        goal=goal,
        span=top.span,
    )


# ---------------------------------------------------------------------------
# plans

_RAT = r"-?\d+(?:\.\d+)?(?:/\d+)?"
_PLAN_LINE = re.compile(
    rf"^\s*({_RAT})\s*:\s*\(\s*([^()\s]+)((?:\s+[^()\s]+)*)\s*\)"
    rf"\s*(?:\[\s*({_RAT})\s*\])?\s*$")


def _rational(tok: str) -> Fraction:
    if "/" in tok:
        num, _, den = tok.partition("/")
        return Fraction(int(num), int(den))
    return Fraction(tok)


def parse_plan(text: str, filename: str = "<plan>") -> Plan:
    steps: list[PlanStep] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        span = SourceSpan(filename, lineno, 1)
        m = _PLAN_LINE.match(line)
        if m is None:
            raise ParseError(f"malformed plan line: {raw.strip()!r}", span)
        time = _rational(m.group(1))
        if time < 0:
            raise ParseError("plan step time cannot be negative", span)
        action = m.group(2).lower()
        args = tuple(a if _try_number(a) is not None else a.lower()
                     for a in m.group(3).split())
        duration = _rational(m.group(4)) if m.group(4) else None
        if duration is not None and duration < 0:
            raise ParseError("plan step duration cannot be negative", span)
        steps.append(PlanStep(time, action, args, duration, span=span))
    steps.sort(key=lambda s: s.time)  # stable: ties keep file order
    return tuple(steps)


# ---------------------------------------------------------------------------
# sidecars

def parse_rates(text: str, domain: Domain, filename: str = "<rates>"):
    """Rate annotation sidecar:

        (:rates (ACTION (FLUENT-TERM RATE-EXPR) ... [:overrun EFFECT]) ...)
    """
    from .lowering import RateAnnotation

    forms = read_all(text, filename)
    if len(forms) != 1 or not head_is(forms[0], ":rates"):
        raise ParseError("a rates file holds one (:rates ...) form",
                         forms[0].span if forms else None)
    top = expect_list(forms[0], "(:rates ...)")
    decls = _Decls(filename)
    decls.types = list(domain.types)
    decls.predicates = {p.name: p for p in domain.predicates}
    decls.functions = {f.name: f for f in domain.functions}
    decls.definitions = {df.name: df for df in domain.definitions}

    annotations = []
    for entry in top.items[1:]:
        lst = expect_list(entry, "rate entry")
        aname = expect_symbol(lst.items[0], "action name").text
        action = domain.action(aname)
        if action is None:
            raise ParseError(f"unknown action {aname!r} in rates file", lst.span)
        fp = _FormulaParser(decls, action.param_types())
        rates = []
        overrun = None
        i = 1
        while i < len(lst.items):
            item = lst.items[i]
            if isinstance(item, SAtom) and item.text == ":overrun":
                if i + 1 >= len(lst.items):
                    raise ParseError(":overrun is missing its effect", item.span)
                overrun = fp._effect(lst.items[i + 1])
                i += 2
                continue
            pair = expect_list(item, "rate pair")
            if len(pair.items) != 2:
                raise ParseError("a rate pair is (FLUENT-TERM RATE-EXPR)", pair.span)
            target = fp.numeric(pair.items[0])
            if not isinstance(target, FluentRef):
                raise ParseError("rate pair must name a fluent term", pair.span)
            rate = fp.numeric(pair.items[1])
            rates.append((target, rate))
            i += 1
        annotations.append(RateAnnotation(aname, tuple(rates), overrun,
                                          span=lst.span))
    return annotations


def parse_groups(text: str, domain: Domain, filename: str = "<groups>"):
    """Definition group sidecar:

        (:groups (NAME (TYPED-PARAMS) MEMBER...) ...)
    """
    from .lowering import DefinitionGroup

    forms = read_all(text, filename)
    if len(forms) != 1 or not head_is(forms[0], ":groups"):
        raise ParseError("a groups file holds one (:groups ...) form",
                         forms[0].span if forms else None)
    top = expect_list(forms[0], "(:groups ...)")
    tree = domain.type_tree()
    groups = []
    for entry in top.items[1:]:
        lst = expect_list(entry, "group entry")
        if len(lst.items) < 2:
            raise ParseError("a group is (NAME (TYPED-PARAMS) MEMBER...)", lst.span)
        gname = expect_symbol(lst.items[0], "group name").text
        plist = expect_list(lst.items[1], "group parameter list")
        params = _parse_params(plist.items, plist.span)
        for p in params:
            if not tree.known(p.type) or p.type == TIME_TYPE:
                raise ParseError(f"unknown type {p.type!r} in group", plist.span)
        members = tuple(expect_symbol(m, "group member").text
                        for m in lst.items[2:])
        groups.append(DefinitionGroup(gname, params, members, span=lst.span))
    return groups
