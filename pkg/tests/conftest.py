"""Shared corpus loaders and the random-walk executor used by the
property suites."""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest

from tempolower import (
    LOWERED_MODE, EvalContext, EventQueue, TimedState, Violation,
    advance_time, apply_action, holds, parse_domain, parse_groups,
    parse_plan, parse_problem, parse_rates, run_pipeline,
)
from tempolower.model import AT_START
from tempolower.search import _duration_choices, enumerate_candidates
from tempolower.semantics import drain

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

# (directory, problem, rates, groups) for each shipped instance
INSTANCES = {
    "figure1": ("problem.pddl", None, None),
    "figure2": ("problem.pddl", None, None),
    "figure3": ("problem.pddl", "rates.pddl", None),
    "figure4": ("problem.pddl", "rates.pddl", None),
    "stationary": ("problem.pddl", None, "groups.pddl"),
}


def corpus_path(*parts) -> Path:
    return CORPUS.joinpath(*parts)


def load_domain(fig: str, name: str = "domain.pddl"):
    path = corpus_path(fig, name)
    return parse_domain(path.read_text(), str(path))


def load_instance(fig: str):
    """(domain, problem, rates, groups) for one corpus instance."""
    problem_name, rates_name, groups_name = INSTANCES[fig]
    domain = load_domain(fig)
    path = corpus_path(fig, problem_name)
    problem = parse_problem(path.read_text(), domain, str(path))
    rates = ()
    if rates_name:
        rpath = corpus_path(fig, rates_name)
        rates = parse_rates(rpath.read_text(), domain, str(rpath))
    groups = ()
    if groups_name:
        gpath = corpus_path(fig, groups_name)
        groups = parse_groups(gpath.read_text(), domain, str(gpath))
    return domain, problem, rates, groups


def load_plan(fig: str, name: str):
    path = corpus_path(fig, name)
    return parse_plan(path.read_text(), str(path))


def lowered_instance(fig: str, passes=None):
    domain, problem, rates, groups = load_instance(fig)
    kwargs = {"rates": rates, "groups": groups}
    if passes is not None:
        kwargs["passes"] = passes
    low_d, low_p, reports = run_pipeline(domain, problem, **kwargs)
    return low_d, (low_p or problem), reports


@pytest.fixture(scope="session")
def figure1():
    return load_instance("figure1")


@pytest.fixture(scope="session")
def figure4_lowered():
    return lowered_instance("figure4")


# ---------------------------------------------------------------------------
# random valid execution

def random_walk(domain, problem, rng: random.Random, *, max_steps=8,
                horizon=Fraction(60), observe=None):
    """Execute a random valid plan: at each step pick an applicable ground
    action or advance to the next event, never violating anything.  Calls
    `observe(state)` after every state change and returns the step count."""
    ctx = EvalContext(domain, problem)
    candidates = enumerate_candidates(domain, problem)
    state = TimedState.from_problem(problem)
    queue = EventQueue()

    def note(_t=None):
        if observe is not None:
            observe(state)

    note()
    steps = 0
    for _ in range(max_steps * 3):
        if steps >= max_steps:
            break
        options = []
        if state.clock <= horizon:
            for cand in candidates:
                ga = cand.solve(state)
                if ga is None:
                    continue
                try:
                    if not holds(state, ga.conditions_at(AT_START), ctx):
                        continue
                    durations = _duration_choices(ga, state, LOWERED_MODE,
                                                  queue)
                except Exception:
                    continue
                for d in durations:
                    options.append((ga, d))
        if queue.next_time() is not None:
            options.append((None, None))
        if not options:
            break
        ga, d = options[rng.randrange(len(options))]
        try:
            if ga is None:
                advance_time(state, queue, queue.next_time(), ctx,
                             on_mutation=note)
            else:
                apply_action(state, queue, ga, d, ctx)
                steps += 1
        except Violation:
            continue
        note()
    drain(state, queue, ctx, None, note)
    note()
    return steps


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            name = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in name:
                key = name.split("test_criterion_", 1)[1]
                num = key.split("_", 1)[0]
                label = key.split("_", 1)[1] if "_" in key else ""
                verdict = "PASS" if status == "passed" else "FAIL"
                lines[int(num)] = (
                    f"criterion {num} ({label.replace('_', '-')}): {verdict}")
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for num in sorted(lines):
            terminalreporter.write_line(lines[num])
