"""One structured-report schema shared by validation, lowering, and
equivalence results, plus their human-readable text renderings.

Rationals serialize as strings ("5", "81/2") so values survive JSON
without floating-point loss.
"""

from __future__ import annotations

import json
from typing import Sequence

from .lowering import LoweringReport
from .printer import format_rational
from .search import EquivalenceVerdict
from .semantics import ValidationReport


def validation_to_dict(r: ValidationReport) -> dict:
    violation = None
    if r.violation is not None:
        violation = {
            "kind": r.violation.kind,
            "time": format_rational(r.violation.time),
            "culprit": r.violation.culprit,
            "detail": r.violation.detail,
        }
    return {
        "report": "validation",
        "mode": r.mode,
        "verdict": r.verdict,
        "violation": violation,
        "goal": r.goal_holds,
        "trace": [
            {"time": format_rational(t.time), "action": t.action,
             "state": t.state_digest}
            for t in r.trace
        ],
    }


def validation_to_text(r: ValidationReport) -> str:
    lines = [f"verdict: {r.verdict} (mode {r.mode})"]
    for t in r.trace:
        lines.append(f"  t={format_rational(t.time)}  {t.action}  "
                     f"state {t.state_digest}")
    if r.violation is not None:
        v = r.violation
        lines.append(f"first violation: {v.kind} at t={format_rational(v.time)} "
                     f"by {v.culprit}")
        if v.detail:
            lines.append(f"  {v.detail}")
    if r.goal_holds is not None:
        lines.append(f"goal: {'holds' if r.goal_holds else 'does not hold'}")
    return "\n".join(lines) + "\n"


def lowering_to_dict(reports: Sequence[LoweringReport]) -> dict:
    return {
        "report": "lowering",
        "passes": [
            {
                "pass": r.pass_name,
                "synthesized": list(r.synthesized),
                "modified_actions": list(r.modified_actions),
                "added_preconditions": list(r.added_preconditions),
                "goal_augmentations": list(r.goal_augmentations),
                "warnings": list(r.warnings),
                "range_mappings": [
                    {"action": m.action, "start": m.start, "stop": m.stop,
                     "time_params": m.time_params}
                    for m in r.range_mappings
                ],
            }
            for r in reports
        ],
    }


def lowering_to_text(reports: Sequence[LoweringReport]) -> str:
    lines = []
    for r in reports:
        lines.append(f"pass {r.pass_name}:")
        if r.synthesized:
            lines.append(f"  synthesized: {', '.join(r.synthesized)}")
        if r.modified_actions:
            lines.append(f"  modified: {', '.join(r.modified_actions)}")
        for p in r.added_preconditions:
            lines.append(f"  precondition  {p}")
        for g in r.goal_augmentations:
            lines.append(f"  goal        + {g}")
        for m in r.range_mappings:
            lines.append(f"  split       {m.action} -> {m.start} + {m.stop}")
        for w in r.warnings:
            lines.append(f"  warning: {w}")
        if len(lines) and lines[-1] == f"pass {r.pass_name}:":
            lines.append("  (no changes)")
    return "\n".join(lines) + "\n"


def equivalence_to_dict(v: EquivalenceVerdict) -> dict:
    return {
        "report": "equivalence",
        "instance": v.instance,
        "status": v.status,
        "original_solvable": v.original_solvable,
        "lowered_solvable": v.lowered_solvable,
        "agree": v.agree,
        "witness": v.witness,
        "mapping_notes": list(v.mapping_notes),
    }


def equivalence_to_text(v: EquivalenceVerdict) -> str:
    lines = [f"instance: {v.instance}", f"status: {v.status}"]
    if v.status == "conclusive":
        lines.append(f"original solvable: {v.original_solvable}")
        lines.append(f"lowered solvable:  {v.lowered_solvable}")
        lines.append(f"agree: {v.agree}")
    for side, text in v.witness.items():
        first, *rest = text.splitlines() or [""]
        lines.append(f"{side}: {first}")
        lines.extend(f"  {line}" for line in rest)
    for n in v.mapping_notes:
        lines.append(f"note: {n}")
    return "\n".join(lines) + "\n"


def to_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"
