"""Greedy test-time search: best-of-N per step with two recovery moves.

Each step samples N candidate encodings, scores every candidate by solving
the partial program, and keeps the reward maximum. When a whole pool scores
negative the search first regenerates extra candidates into the same pool,
then backtracks: it revisits the earlier hint step whose selected candidate
had the highest reward and still has an untried alternative, switches that
selection, and rebuilds everything after it. Backtracking is budgeted;
past the budget the search accepts the least-bad candidate and moves on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .datagen import classification_cap, target_predicate_for
from .gateway import SolverGateway, SolverVerdict
from .generators import Generator, GeneratorError
from .matching import match_solution
from .puzzles import PuzzleInstance
from .rewards import RewardValue, choice_rule_reward, is_negative, reward
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


@dataclass
class SearchConfig:
    n: int = 5
    temperature: float = 1.0
    backtrack_limit: int = 5
    regen_multiplier: int = 2
    enable_regeneration: bool = True
    cap: int | None = None
    shots: tuple = ()
    preamble: str | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.regen_multiplier < 1:
            raise ValueError("regen_multiplier must be at least 1")
        if self.backtrack_limit < 0:
            raise ValueError("backtrack_limit must be non-negative")


@dataclass
class SearchOutcome:
    final_program: str
    final_verdict: SolverVerdict
    predicted_solution: tuple | None
    trace: list[dict] = field(default_factory=list)
    total_output_tokens: int = 0


class SearchError(RuntimeError):
    """Hard generator or gateway failure; carries the trace gathered so far."""

    def __init__(self, message: str, trace: list[dict]):
        super().__init__(message)
        self.trace = trace


def _score(candidate: CandidateEncoding, trajectory: Trajectory | None,
           instance: PuzzleInstance, gateway: SolverGateway, cap: int,
           step_zero: bool) -> RewardValue:
    program = candidate.text if step_zero else combine(trajectory, candidate)
    verdict = gateway.solve(program, cap=cap)
    candidate.verdict = verdict
    if step_zero:
        value = choice_rule_reward(verdict, instance.expected_model_count)
    else:
        value = reward(verdict)
    candidate.reward = value
    return value


def best_of_n_step(
    trajectory: Trajectory,
    input_text: str,
    config: SearchConfig,
    *,
    generator: Generator,
    gateway: SolverGateway,
    instance: PuzzleInstance,
    cap: int,
    step_zero: bool = False,
) -> tuple[CandidateEncoding, list[RewardValue]]:
    """Sample n candidates for one step, score them all, select the reward
    maximum (ties to the lowest index), and append the step to the
    trajectory. Step 0 uses the strict expected-count reward.
    """
    candidates = generate(generator, input_text, config.n, config.temperature)
    rewards = [
        _score(c, trajectory, instance, gateway, cap, step_zero) for c in candidates
    ]
    best = max(range(len(rewards)), key=lambda i: (rewards[i].value, -i))
    trajectory.steps.append(
        Step(input_text=input_text, candidates=candidates, selected_index=best)
    )
    return candidates[best], rewards


def _rerank(step: Step) -> int:
    rewards = [c.reward.value for c in step.candidates]
    return max(range(len(rewards)), key=lambda i: (rewards[i], -i))


def _next_best_untried(step: Step, tried: set[int]) -> int | None:
    """Highest-reward candidate not yet selected at this step. A negative
    candidate is not an alternative worth revisiting, so none is returned
    once only flagged or unsatisfiable candidates remain.
    """
    ranked = sorted(
        range(len(step.candidates)),
        key=lambda i: (-step.candidates[i].reward.value, i),
    )
    for index in ranked:
        if index not in tried and not is_negative(step.candidates[index].reward):
            return index
    return None


def run_search(
    instance: PuzzleInstance,
    generator: Generator,
    config: SearchConfig | None = None,
    gateway: SolverGateway | None = None,
) -> SearchOutcome:
    """Search one puzzle and return the final program with its verdict.

    Examples of the trace shapes this produces:
    - every step has a flag-free candidate: only step/rank events, no
      regenerate or backtrack entries, final model count 1;
    - one step's first pool is all-negative but the regeneration batch
      recovers: exactly one regenerate event;
    - only an alternate earlier selection admits a valid continuation:
      exactly one backtrack event naming that step, later steps rebuilt.
    """
    config = config or SearchConfig()
    gateway = gateway or SolverGateway()
    cap = classification_cap(instance, config.cap)
    trace: list[dict] = []
    trajectory = Trajectory(instance_ref=instance.id)
    tokens = 0
    backtracks = 0
    tried: dict[int, set[int]] = {}
    regenerated: set[int] = set()

    def record_rank(step_index: int, step: Step) -> None:
        if len(step.candidates) >= 2:
            trace.append(
                {
                    "event": "rank",
                    "step": step_index,
                    "rewards": [c.reward.value for c in step.candidates],
                    "selected": step.selected_index,
                }
            )

    def all_negative(step: Step) -> bool:
        return all(is_negative(c.reward) for c in step.candidates)

    def pool_tokens(step: Step) -> int:
        return sum(c.token_count for c in step.candidates)

    try:
        base_prompt = build_base_prompt(instance, config.shots, config.preamble)
        hint_pos = 0
        pending_input: str | None = base_prompt
        while pending_input is not None:
            step_index = len(trajectory.steps)
            step_zero = step_index == 0
            try:
                best_of_n_step(
                    trajectory,
                    pending_input,
                    config,
                    generator=generator,
                    gateway=gateway,
                    instance=instance,
                    cap=cap,
                    step_zero=step_zero,
                )
            except GeneratorError as exc:
                raise SearchError(str(exc), trace) from exc
            step = trajectory.steps[step_index]
            tokens += pool_tokens(step)
            trace.append({"event": "step", "step": step_index, "pool": len(step.candidates)})

            if all_negative(step) and config.enable_regeneration and step_index not in regenerated:
                regenerated.add(step_index)
                extra_n = config.regen_multiplier * config.n
                try:
                    extra = generate(generator, pending_input, extra_n, config.temperature)
                except GeneratorError as exc:
                    raise SearchError(str(exc), trace) from exc
                # score against the program before this step; the step itself
                # is already on the trajectory but its selection is void
                prefix = Trajectory(
                    instance_ref=trajectory.instance_ref,
                    steps=trajectory.steps[:step_index],
                )
                for candidate in extra:
                    _score(candidate, prefix, instance, gateway, cap, step_zero)
                    tokens += candidate.token_count
                step.candidates.extend(extra)
                step.selected_index = _rerank(step)
                trace.append(
                    {"event": "regenerate", "step": step_index, "added": extra_n}
                )

            if all_negative(step):
                target = None
                if backtracks < config.backtrack_limit:
                    eligible = [
                        i
                        for i in range(1, step_index)
                        if len(trajectory.steps[i].candidates) >= 2
                        and _next_best_untried(trajectory.steps[i], tried[i]) is not None
                    ]
                    if eligible:
                        target = max(
                            eligible,
                            key=lambda i: (
                                trajectory.steps[i].selected.reward.value,
                                i,
                            ),
                        )
                if target is not None:
                    backtracks += 1
                    switch_to = _next_best_untried(
                        trajectory.steps[target], tried[target]
                    )
                    trajectory.steps[target].selected_index = switch_to
                    tried[target].add(switch_to)
                    trace.append(
                        {
                            "event": "backtrack",
                            "count": backtracks,
                            "to_step": target,
                            "selected": switch_to,
                        }
                    )
                    for removed in range(target + 1, len(trajectory.steps)):
                        tried.pop(removed, None)
                        regenerated.discard(removed)
                    del trajectory.steps[target + 1 :]
                    # hint at position target-1 produced step `target`; resume
                    # with the next one
                    hint_pos = target
                    pending_input = build_hint_prompt(trajectory, instance.hints[hint_pos])
                    continue
                step.selected_index = _rerank(step)
                trace.append(
                    {
                        "event": "accept_exhausted",
                        "step": step_index,
                        "selected": step.selected_index,
                    }
                )

            record_rank(step_index, step)
            tried[step_index] = {step.selected_index}
            if step_zero:
                hint_pos = 0
            else:
                hint_pos += 1
            if hint_pos < len(instance.hints):
                pending_input = build_hint_prompt(trajectory, instance.hints[hint_pos])
            else:
                pending_input = None
    except SearchError:
        raise
    except GeneratorError as exc:
        raise SearchError(str(exc), trace) from exc

    final_program = combine(trajectory)
    final_verdict = gateway.solve(final_program, cap=cap)
    predicate = target_predicate_for(trajectory.steps[0].selected.text)
    predicted = None
    if final_verdict.flagless and final_verdict.model_count >= 1:
        predicted = _extract_prediction(final_verdict, predicate, instance)
    trace.append(
        {
            "event": "final",
            "models": final_verdict.model_count,
            "flagless": final_verdict.flagless,
            "backtracks": backtracks,
        }
    )
    return SearchOutcome(
        final_program=final_program,
        final_verdict=final_verdict,
        predicted_solution=predicted,
        trace=trace,
        total_output_tokens=tokens,
    )


def _extract_prediction(verdict: SolverVerdict, predicate: str | None,
                        instance: PuzzleInstance) -> tuple:
    model = verdict.models[0]
    if predicate is None:
        preds = {a.pred for a in model if a.arity == instance.m}
        predicate = "assignment" if "assignment" in preds else (
            preds.pop() if len(preds) == 1 else None
        )
    rows = sorted(
        tuple(str(value) for value in atom.args)
        for atom in model
        if predicate is not None and atom.pred == predicate
    )
    return tuple(rows)


def evaluate_accuracy(
    outcomes: list[SearchOutcome], instances: list[PuzzleInstance]
) -> dict:
    """Exact-match accuracy plus failure buckets and per-split breakdowns.

    An outcome is correct only when its final program has exactly one model
    and that model matches the ground truth; several models are wrong even
    if one of them matches.
    """
    if len(outcomes) != len(instances):
        raise ValueError(
            f"{len(outcomes)} outcomes paired with {len(instances)} instances"
        )
    buckets = {
        "error": 0,
        "unsat": 0,
        "multiple-models": 0,
        "wrong-unique-model": 0,
        "cap-exceeded": 0,
    }
    by_size: dict[str, dict] = {}
    by_difficulty: dict[str, dict] = {}
    correct = 0
    per_instance = []
    for outcome, instance in zip(outcomes, instances):
        verdict = outcome.final_verdict
        ok = False
        if verdict.has_error:
            bucket = "error"
        elif verdict.is_unsat:
            bucket = "unsat"
        elif verdict.cap_exceeded:
            bucket = "cap-exceeded"
        elif verdict.model_count > 1:
            bucket = "multiple-models"
        else:
            matched = _final_match(verdict, instance)
            if matched:
                ok = True
                bucket = None
            else:
                bucket = "wrong-unique-model"
        if ok:
            correct += 1
        else:
            buckets[bucket] += 1
        per_instance.append(
            {
                "instance_id": instance.id,
                "size": instance.size,
                "correct": ok,
                "bucket": bucket,
                "models": verdict.model_count,
                "tokens": outcome.total_output_tokens,
            }
        )
        _bump(by_size, instance.size, ok)
        difficulty = instance.meta.get("difficulty") if instance.meta else None
        if difficulty is not None:
            _bump(by_difficulty, str(difficulty), ok)
    total = len(outcomes)
    return {
        "total": total,
        "correct": correct,
        "accuracy": correct / total if total else 0.0,
        "buckets": buckets,
        "by_size": by_size,
        "by_difficulty": by_difficulty,
        "mean_output_tokens": (
            sum(o.total_output_tokens for o in outcomes) / total if total else 0.0
        ),
        "per_instance": per_instance,
    }


def _final_match(verdict: SolverVerdict, instance: PuzzleInstance) -> bool:
    try:
        return match_solution(verdict.models[0], instance).matched
    except ValueError:
        return False


def _bump(table: dict, key: str, ok: bool) -> None:
    row = table.setdefault(key, {"total": 0, "correct": 0, "accuracy": 0.0})
    row["total"] += 1
    row["correct"] += int(ok)
    row["accuracy"] = row["correct"] / row["total"]
