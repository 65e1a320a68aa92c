from __future__ import annotations

import shutil

import pytest

from asploop.asp import render_ground_atom
from asploop.gateway import (
    DEFAULT_CAP,
    SolverConfigError,
    SolverGateway,
    SolverVerdict,
)

GOLDEN = "item(a;b). 1 {pick(X) : item(X)} 1. :- pick(b)."
UNSAT = "item(a). 1 {pick(X) : item(X)} 1. :- pick(a)."
MANY = "item(a;b;c). {pick(X) : item(X)}."
BROKEN = "p(a. "

needs_refsolver = pytest.mark.skipif(
    shutil.which("asploop-refsolver") is None,
    reason="reference solver binary not installed",
)


def rendered(model):
    return sorted(render_ground_atom(a) for a in model)


def test_default_configuration():
    gateway = SolverGateway()
    assert gateway.cap == DEFAULT_CAP
    verdict = gateway.solve(GOLDEN)
    assert verdict.flagless
    assert verdict.model_count == 1
    assert rendered(verdict.models[0]) == ["item(a)", "item(b)", "pick(a)"]
    assert verdict.wall_time >= 0.0


def test_parse_errors_become_error_verdicts():
    verdict = SolverGateway().solve(BROKEN)
    assert verdict.has_error
    assert not verdict.flagless
    assert verdict.model_count == 0
    assert verdict.diagnostics


def test_unsat_verdict():
    verdict = SolverGateway().solve(UNSAT)
    assert verdict.is_unsat
    assert not verdict.flagless
    assert not verdict.has_error
    assert verdict.model_count == 0


def test_cap_exceeded_verdict():
    verdict = SolverGateway(cap=2).solve(MANY)
    assert verdict.cap_exceeded
    assert not verdict.has_error
    assert not verdict.flagless
    assert verdict.model_count == 3


def test_unsafe_program_is_an_error_not_a_crash():
    verdict = SolverGateway().solve(":- item(X), not X == Y.")
    assert verdict.has_error
    assert any("unsafe" in str(d) for d in verdict.diagnostics)


def test_repeat_solves_agree():
    gateway = SolverGateway()
    first = gateway.solve(GOLDEN)
    second = gateway.solve(GOLDEN)
    assert first.models == second.models
    assert first.flagless and second.flagless


def test_external_backend_requires_a_command():
    with pytest.raises(SolverConfigError):
        SolverGateway(backend="external")


def test_unknown_backend_is_rejected():
    with pytest.raises(SolverConfigError):
        SolverGateway(backend="sideways")


def test_env_var_supplies_the_command(monkeypatch):
    monkeypatch.setenv("ASPLOOP_SOLVER_CMD", "asploop-refsolver")
    gateway = SolverGateway(backend="external")
    assert gateway.solve(GOLDEN).flagless


def test_auto_backend_without_command_runs_in_process(monkeypatch):
    monkeypatch.delenv("ASPLOOP_SOLVER_CMD", raising=False)
    gateway = SolverGateway(backend="auto")
    assert gateway.solve(GOLDEN).flagless


@needs_refsolver
@pytest.mark.parametrize("cmd", ["asploop-refsolver", ["asploop-refsolver"]])
def test_external_backend_matches_internal(cmd):
    internal = SolverGateway()
    external = SolverGateway(backend="external", solver_cmd=cmd)
    for text in (GOLDEN, UNSAT, MANY, BROKEN):
        a = internal.solve(text)
        b = external.solve(text)
        assert set(a.models) == set(b.models), text
        assert (a.is_unsat, a.cap_exceeded, a.has_error) == (
            b.is_unsat,
            b.cap_exceeded,
            b.has_error,
        ), text


@needs_refsolver
def test_external_cap_exceeded():
    gateway = SolverGateway(backend="external", solver_cmd="asploop-refsolver", cap=2)
    verdict = gateway.solve(MANY)
    assert verdict.cap_exceeded
    assert verdict.model_count == 3


def test_external_timeout_is_an_error():
    gateway = SolverGateway(
        backend="external",
        solver_cmd=["python3", "-c", "import time; time.sleep(5)"],
        timeout=0.3,
    )
    verdict = gateway.solve(GOLDEN)
    assert verdict.has_error
    assert any("timed out" in str(d) for d in verdict.diagnostics)


def test_external_bad_exit_code_is_an_error():
    gateway = SolverGateway(
        backend="external", solver_cmd=["python3", "-c", "import sys; sys.exit(1)"]
    )
    verdict = gateway.solve(GOLDEN)
    assert verdict.has_error


def test_external_unparseable_output_is_an_error():
    gateway = SolverGateway(
        backend="external", solver_cmd=["python3", "-c", "print('nonsense')"]
    )
    verdict = gateway.solve(GOLDEN)
    assert verdict.has_error
    assert verdict.model_count == 0


def _verdict(**overrides):
    base = dict(
        models=(),
        model_count=0,
        is_unsat=False,
        cap_exceeded=False,
        has_error=False,
        diagnostics=[],
        wall_time=0.0,
    )
    base.update(overrides)
    return SolverVerdict(**base)


def test_verdict_flagless_property():
    assert _verdict(models=(frozenset(),), model_count=1).flagless
    assert not _verdict(is_unsat=True).flagless
    assert not _verdict(has_error=True).flagless
    assert not _verdict(models=(frozenset(),), model_count=1, cap_exceeded=True).flagless


def test_verdict_rejects_count_mismatch():
    with pytest.raises(ValueError):
        _verdict(model_count=1)


def test_verdict_rejects_error_with_unsat():
    with pytest.raises(ValueError):
        _verdict(is_unsat=True, has_error=True)


def test_verdict_rejects_unsat_with_models():
    with pytest.raises(ValueError):
        _verdict(models=(frozenset(),), model_count=1, is_unsat=True)
