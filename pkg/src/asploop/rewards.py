"""Reward for a solved candidate encoding.

value = recip - 1[error] - 1[unsat] - 1[cap exceeded], where recip is 1/M
for a clean verdict with at least one model and 0 otherwise. The strict
variant used at the choice-rule step replaces 1/M with an exact count check
against the expected model count of the unconstrained grid.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gateway import SolverVerdict


@dataclass(frozen=True)
class RewardValue:
    value: float
    recip_term: float
    error_indicator: bool
    unsat_indicator: bool
    cap_indicator: bool


def _assemble(recip: float, verdict: SolverVerdict) -> RewardValue:
    value = (
        recip
        - (1.0 if verdict.has_error else 0.0)
        - (1.0 if verdict.is_unsat else 0.0)
        - (1.0 if verdict.cap_exceeded else 0.0)
    )
    return RewardValue(
        value=value,
        recip_term=recip,
        error_indicator=verdict.has_error,
        unsat_indicator=verdict.is_unsat,
        cap_indicator=verdict.cap_exceeded,
    )


def reward(verdict: SolverVerdict) -> RewardValue:
    """1/M reward with unit penalties for error, unsat, and cap overflow.
    The reciprocal contributes only when no flag is set and M >= 1."""
    if verdict.flagless and verdict.model_count >= 1:
        recip = 1.0 / verdict.model_count
    else:
        recip = 0.0
    return _assemble(recip, verdict)


def choice_rule_reward(verdict: SolverVerdict, expected_count: int) -> RewardValue:
    """Strict reward for the base (choice rule) step: full credit only when
    enumeration finished cleanly with exactly `expected_count` models. A
    flagless verdict implies the enumeration was exhausted, so the count is
    trustworthy."""
    if expected_count < 1:
        raise ValueError(f"expected_count must be >= 1, got {expected_count}")
    recip = 1.0 if (verdict.flagless and verdict.model_count == expected_count) else 0.0
    return _assemble(recip, verdict)


def is_negative(value: RewardValue) -> bool:
    """Strictly below zero; a 0.0 reward is not negative."""
    return value.value < 0
