"""Depth-first training-data generation.

Per puzzle: sample candidate encodings step by step, let the solver label
each one chosen or rejected, emit SFT records for chosen candidates and
chosen x rejected preference pairs, then branch the search on up to two
chosen candidates. A hint whose candidates all fail is dropped; the walk
continues with the next hint using the same partial encoding, and the
dropped hint never reappears in a prompt.
"""

from __future__ import annotations

import json
import logging
import os
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .asp import parse_program
from .gateway import DEFAULT_CAP, SolverGateway
from .generators import Generator, GeneratorError
from .matching import match_solution
from .puzzles import PuzzleInstance
from .trajectory import (
    CandidateEncoding,
    Step,
    Trajectory,
    build_base_prompt,
    build_hint_prompt,
    combine,
    generate,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SftRecord:
    prompt: str
    completion: str
    instance_id: str
    step_index: int
    branch_id: str


@dataclass(frozen=True)
class PreferenceRecord:
    prompt: str
    chosen: str
    rejected: str
    instance_id: str
    step_index: int
    branch_id: str

    def __post_init__(self):
        if self.chosen == self.rejected:
            raise ValueError("chosen and rejected texts must differ")


@dataclass
class DfsConfig:
    n_samples: int = 5
    temperature: float = 0.8
    max_chosen_branch: int = 2
    cap: int | None = None
    shots: tuple = ()
    preamble: str | None = None


def classification_cap(instance: PuzzleInstance, cap: int | None) -> int:
    """Solving cap for labeling: headroom of 4x the expected model count so
    blowups surface as cap_exceeded quickly, never above the gateway default.
    """
    if cap is not None:
        return cap
    return min(4 * instance.expected_model_count, DEFAULT_CAP)


def target_predicate_for(base_text: str) -> str | None:
    """The predicate generated by the base block's first choice rule; the
    answer matcher falls back to arity inference when there is none.
    """
    result = parse_program(base_text)
    for statement in result.statements:
        if statement.kind == "choice-rule" and statement.elements:
            return statement.elements[0].atom.pred
    return None


def _matches_ground_truth(verdict, instance, predicate) -> bool:
    for model in verdict.models:
        try:
            if match_solution(model, instance, predicate).matched:
                return True
        except ValueError:
            continue
    return False


def classify(
    candidate: CandidateEncoding,
    trajectory: Trajectory,
    instance: PuzzleInstance,
    cap: int,
    gateway: SolverGateway,
    target_predicate: str | None = None,
) -> str:
    """Label one hint-step candidate: chosen iff the partial program solves
    without flags and the ground truth is still among its models.
    """
    program = combine(trajectory, candidate)
    verdict = gateway.solve(program, cap=cap)
    candidate.verdict = verdict
    label = "rejected"
    if verdict.flagless and _matches_ground_truth(verdict, instance, target_predicate):
        label = "chosen"
    candidate.label = label
    return label


def classify_base(
    candidate: CandidateEncoding,
    instance: PuzzleInstance,
    cap: int,
    gateway: SolverGateway,
) -> str:
    """Label a step-0 candidate. Membership of the ground truth is too weak
    for the unconstrained base, so the criterion is the exact expected model
    count (n!)^(m-1).
    """
    verdict = gateway.solve(candidate.text, cap=cap)
    candidate.verdict = verdict
    label = "rejected"
    if verdict.flagless and verdict.model_count == instance.expected_model_count:
        label = "chosen"
    candidate.label = label
    return label


def _emit(
    records_sft: list,
    records_pref: list,
    prompt: str,
    chosen: list[CandidateEncoding],
    rejected: list[CandidateEncoding],
    instance_id: str,
    step_index: int,
    branch_id: str,
    max_chosen_branch: int,
) -> None:
    for candidate in chosen:
        records_sft.append(
            SftRecord(prompt, candidate.text, instance_id, step_index, branch_id)
        )
    if chosen and rejected:
        for winner in chosen[:max_chosen_branch]:
            for loser in rejected:
                if winner.text == loser.text:
                    continue
                records_pref.append(
                    PreferenceRecord(
                        prompt, winner.text, loser.text, instance_id, step_index, branch_id
                    )
                )


class _DfsAbort(Exception):
    pass


def run_dfs(
    instance: PuzzleInstance,
    generator: Generator,
    config: DfsConfig | None = None,
    gateway: SolverGateway | None = None,
) -> tuple[list[SftRecord], list[PreferenceRecord], dict]:
    """Generate SFT and preference records for one puzzle.

    Returns (sft_records, pref_records, stats). Stats carries one row per
    visited step with its chosen/rejected counts plus means and population
    standard deviations, and an abort reason when the instance produced no
    usable base encoding or the generator failed.
    """
    config = config or DfsConfig()
    gateway = gateway or SolverGateway()
    cap = classification_cap(instance, config.cap)
    sft: list[SftRecord] = []
    pref: list[PreferenceRecord] = []
    step_rows: list[dict] = []

    def stats(aborted_reason: str | None = None) -> dict:
        chosen_counts = [row["chosen"] for row in step_rows]
        rejected_counts = [row["rejected"] for row in step_rows]
        return {
            "instance_id": instance.id,
            "steps": step_rows,
            "chosen_mean": statistics.mean(chosen_counts) if chosen_counts else 0.0,
            "chosen_std": statistics.pstdev(chosen_counts) if chosen_counts else 0.0,
            "rejected_mean": statistics.mean(rejected_counts) if rejected_counts else 0.0,
            "rejected_std": statistics.pstdev(rejected_counts) if rejected_counts else 0.0,
            "sft_records": len(sft),
            "pref_records": len(pref),
            "aborted_reason": aborted_reason,
        }

    base_prompt = build_base_prompt(instance, config.shots, config.preamble)
    try:
        base_candidates = generate(
            generator, base_prompt, config.n_samples, config.temperature
        )
    except GeneratorError as exc:
        logger.warning("datagen aborted for %s: %s", instance.id, exc)
        return [], [], stats(aborted_reason=str(exc))

    for candidate in base_candidates:
        classify_base(candidate, instance, cap, gateway)
    chosen = [c for c in base_candidates if c.label == "chosen"]
    rejected = [c for c in base_candidates if c.label == "rejected"]
    step_rows.append(
        {"step": 0, "branch": "", "hint": None,
         "chosen": len(chosen), "rejected": len(rejected)}
    )
    _emit(sft, pref, base_prompt, chosen, rejected, instance.id, 0, "",
          config.max_chosen_branch)
    if not chosen:
        logger.warning("datagen aborted for %s: no usable base encoding", instance.id)
        return sft, pref, stats(aborted_reason="no usable base encoding")

    def walk(trajectory: Trajectory, hint_pos: int, step_index: int, branch_id: str):
        if hint_pos >= len(instance.hints):
            return
        hint = instance.hints[hint_pos]
        prompt = build_hint_prompt(trajectory, hint)
        try:
            candidates = generate(generator, prompt, config.n_samples, config.temperature)
        except GeneratorError as exc:
            raise _DfsAbort(str(exc)) from exc
        predicate = target_predicate_for(trajectory.steps[0].selected.text)
        for candidate in candidates:
            classify(candidate, trajectory, instance, cap, gateway, predicate)
        step_chosen = [c for c in candidates if c.label == "chosen"]
        step_rejected = [c for c in candidates if c.label == "rejected"]
        step_rows.append(
            {
                "step": step_index,
                "branch": branch_id,
                "hint": hint_pos,
                "chosen": len(step_chosen),
                "rejected": len(step_rejected),
            }
        )
        _emit(sft, pref, prompt, step_chosen, step_rejected, instance.id, step_index,
              branch_id, config.max_chosen_branch)
        if not step_chosen:
            trajectory.dropped_hints.append(hint_pos)
            walk(trajectory, hint_pos + 1, step_index, branch_id)
            return
        branches = step_chosen[: config.max_chosen_branch]
        for branch_index, candidate in enumerate(branches):
            child = Trajectory(
                instance_ref=trajectory.instance_ref,
                steps=list(trajectory.steps),
                dropped_hints=list(trajectory.dropped_hints),
            )
            selected_index = next(
                i for i, c in enumerate(candidates) if c is candidate
            )
            child.steps.append(
                Step(input_text=hint, candidates=candidates,
                     selected_index=selected_index)
            )
            child_branch = (
                f"{branch_id}.{branch_index}" if branch_id else str(branch_index)
            )
            walk(child, hint_pos + 1, step_index + 1, child_branch)

    try:
        for branch_index, candidate in enumerate(chosen[: config.max_chosen_branch]):
            root = Trajectory(instance_ref=instance.id)
            selected_index = next(
                i for i, c in enumerate(base_candidates) if c is candidate
            )
            root.steps.append(
                Step(
                    input_text=base_prompt,
                    candidates=base_candidates,
                    selected_index=selected_index,
                )
            )
            walk(root, 0, 1, str(branch_index))
    except _DfsAbort as exc:
        logger.warning("datagen aborted for %s: %s", instance.id, exc)
        return [], [], stats(aborted_reason=str(exc))
    return sft, pref, stats()


def export(records, path: str | Path, format: str) -> int:
    """Write records as JSONL with a stable field order. On I/O failure the
    partial file is removed before the error propagates.
    """
    if format not in ("sft-jsonl", "pref-jsonl"):
        raise ValueError(f"unknown export format {format!r}")
    path = Path(path)
    written = 0
    try:
        with open(path, "w", encoding="utf-8") as handle:
            for record in records:
                if format == "sft-jsonl":
                    row = {
                        "prompt": record.prompt,
                        "completion": record.completion,
                        "meta": {
                            "instance_id": record.instance_id,
                            "step": record.step_index,
                            "branch": record.branch_id,
                        },
                    }
                else:
                    row = {
                        "prompt": record.prompt,
                        "chosen": record.chosen,
                        "rejected": record.rejected,
                        "meta": {
                            "instance_id": record.instance_id,
                            "step": record.step_index,
                            "branch": record.branch_id,
                        },
                    }
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")
                written += 1
    except OSError:
        try:
            os.unlink(path)
        except OSError:
            pass
        raise
    return written


def load_records(path: str | Path, format: str):
    """Inverse of export, for round-trip checks and downstream tooling."""
    if format not in ("sft-jsonl", "pref-jsonl"):
        raise ValueError(f"unknown export format {format!r}")
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            row = json.loads(line)
            meta = row["meta"]
            if format == "sft-jsonl":
                out.append(
                    SftRecord(row["prompt"], row["completion"], meta["instance_id"],
                              meta["step"], meta["branch"])
                )
            else:
                out.append(
                    PreferenceRecord(row["prompt"], row["chosen"], row["rejected"],
                                     meta["instance_id"], meta["step"], meta["branch"])
                )
    return out
