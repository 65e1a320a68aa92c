"""Grounding: from parsed statements to a variable-free program.

Safety discipline: every variable must be bound by a positive body atom (or,
inside a choice element, by the element's own positive conditions). The
anonymous variable binds nothing and is only allowed in positive atom
argument positions. Violations raise GroundingError naming the variable.

The grounder classifies predicates into "independent" (defined by facts and
rules that never touch a choice head) and "choice-dependent" (everything
downstream of a choice head). Choice rule bodies and element conditions must
be independent, so choice activity and candidate sets are fixed at ground
time. Constraints and cardinality heads may freely mix both kinds; their
independent literals are resolved here and only the choice-dependent residue
survives into the ground program.

Cardinality-equality heads compile away entirely: for each ground body
instantiation the element comparisons are already decided, so an instance
either holds for every model (dropped) or forbids its body atoms (kept as a
plain ground constraint).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .syntax import (
    Anon,
    Arith,
    Atom,
    AtomLit,
    CardinalityRule,
    Choice,
    CmpLit,
    Constraint,
    Fact,
    GroundAtom,
    GroundValue,
    Literal,
    Num,
    Rule,
    Statement,
    Sym,
    Term,
    Tup,
    Var,
    ground_atom_key,
    value_order_key,
)


class GroundingError(Exception):
    def __init__(self, message: str, source: str = ""):
        detail = f"{message} in statement: {source}" if source else message
        super().__init__(detail)
        self.message = message
        self.source = source


@dataclass(frozen=True)
class GroundChoice:
    lower: int
    upper: int | None
    candidates: tuple[GroundAtom, ...]
    source: str = field(default="", compare=False)


@dataclass(frozen=True)
class GroundRule:
    head: GroundAtom
    pos: tuple[GroundAtom, ...]
    neg: tuple[GroundAtom, ...]
    source: str = field(default="", compare=False)


@dataclass(frozen=True)
class GroundConstraint:
    """Violated when all of pos are in the model and none of neg are."""

    pos: tuple[GroundAtom, ...]
    neg: tuple[GroundAtom, ...]
    source: str = field(default="", compare=False)


@dataclass
class GroundProgram:
    facts: frozenset[GroundAtom]
    choices: list[GroundChoice]
    rules: list[GroundRule]
    constraints: list[GroundConstraint]
    possible: frozenset[GroundAtom]

    @property
    def choice_candidate_count(self) -> int:
        return sum(len(c.candidates) for c in self.choices)


# --------------------------------------------------------------------------
# Term evaluation and comparison

def eval_term(term: Term, binding: dict[str, GroundValue], source: str = "") -> GroundValue:
    if isinstance(term, Num):
        return term.value
    if isinstance(term, Sym):
        return term.name
    if isinstance(term, Var):
        try:
            return binding[term.name]
        except KeyError:
            raise GroundingError(f"unsafe variable {term.name}", source) from None
    if isinstance(term, Tup):
        return tuple(eval_term(t, binding, source) for t in term.items)
    if isinstance(term, Arith):
        lhs = eval_term(term.lhs, binding, source)
        rhs = eval_term(term.rhs, binding, source)
        if not isinstance(lhs, int) or not isinstance(rhs, int):
            raise GroundingError("arithmetic over a symbolic constant", source)
        return lhs + rhs if term.op == "+" else lhs - rhs
    if isinstance(term, Anon):
        raise GroundingError("unsafe variable _", source)
    raise TypeError(f"not a term: {term!r}")


def compare_values(lhs: GroundValue, op: str, rhs: GroundValue) -> bool:
    if op in ("==", "="):
        return lhs == rhs
    if op == "!=":
        return lhs != rhs
    a, b = value_order_key(lhs), value_order_key(rhs)
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == "<=":
        return a <= b
    if op == ">=":
        return a >= b
    raise ValueError(f"unknown comparison operator {op!r}")


def eval_cmp(lit: CmpLit, binding: dict[str, GroundValue], source: str = "") -> bool:
    value = compare_values(eval_term(lit.lhs, binding, source), lit.op, eval_term(lit.rhs, binding, source))
    return (not value) if lit.negated else value


def instantiate_atom(atom: Atom, binding: dict[str, GroundValue], source: str = "") -> GroundAtom:
    return GroundAtom(atom.pred, tuple(eval_term(a, binding, source) for a in atom.args))


# --------------------------------------------------------------------------
# Variable collection for safety analysis

def _vars_binding(term: Term) -> set[str]:
    """Variables a positive-atom argument position can bind."""
    if isinstance(term, Var):
        return {term.name}
    if isinstance(term, Tup):
        out: set[str] = set()
        for t in term.items:
            out |= _vars_binding(t)
        return out
    return set()


def _vars_all(term: Term) -> set[str]:
    if isinstance(term, Var):
        return {term.name}
    if isinstance(term, (Tup,)):
        out: set[str] = set()
        for t in term.items:
            out |= _vars_all(t)
        return out
    if isinstance(term, Arith):
        return _vars_all(term.lhs) | _vars_all(term.rhs)
    return set()


def _has_anon_outside_binding(term: Term) -> bool:
    """True when `_` occurs somewhere it cannot simply mean 'match anything'."""
    if isinstance(term, Anon):
        return True
    if isinstance(term, Tup):
        return any(_has_anon_outside_binding(t) for t in term.items)
    if isinstance(term, Arith):
        return _contains_anon(term)
    return False


def _contains_anon(term: Term) -> bool:
    if isinstance(term, Anon):
        return True
    if isinstance(term, Tup):
        return any(_contains_anon(t) for t in term.items)
    if isinstance(term, Arith):
        return _contains_anon(term.lhs) or _contains_anon(term.rhs)
    return False


def _atom_binding_vars(atom: Atom) -> set[str]:
    out: set[str] = set()
    for a in atom.args:
        out |= _vars_binding(a)
    return out


def _atom_all_vars(atom: Atom) -> set[str]:
    out: set[str] = set()
    for a in atom.args:
        out |= _vars_all(a)
    return out


def _atom_arith_vars(atom: Atom) -> set[str]:
    """Variables occurring only under arithmetic inside the atom's arguments;
    these cannot be bound by matching and must come from elsewhere."""
    out: set[str] = set()
    for a in atom.args:
        out |= _vars_all(a) - _vars_binding(a)
    return out


def _cmp_vars(lit: CmpLit) -> set[str]:
    return _vars_all(lit.lhs) | _vars_all(lit.rhs)


def _split_body(body: tuple[Literal, ...]):
    pos = [l.atom for l in body if isinstance(l, AtomLit) and not l.negated]
    neg = [l.atom for l in body if isinstance(l, AtomLit) and l.negated]
    cmps = [l for l in body if isinstance(l, CmpLit)]
    return pos, neg, cmps


def _check_unsafe(needed: set[str], bound: set[str], source: str) -> None:
    unsafe = sorted(needed - bound)
    if unsafe:
        names = ", ".join(unsafe)
        raise GroundingError(f"unsafe variable{'s' if len(unsafe) > 1 else ''} {names}", source)


def _check_body_safety(body: tuple[Literal, ...], bound: set[str], source: str) -> None:
    pos, neg, cmps = _split_body(body)
    for atom in pos:
        _check_unsafe(_atom_arith_vars(atom), bound, source)
        for a in atom.args:
            if isinstance(a, Arith) and _contains_anon(a):
                raise GroundingError("unsafe variable _", source)
    for atom in neg:
        if any(_contains_anon(a) for a in atom.args):
            raise GroundingError("unsafe variable _", source)
        _check_unsafe(_atom_all_vars(atom), bound, source)
    for cmp in cmps:
        if _contains_anon(cmp.lhs) or _contains_anon(cmp.rhs):
            raise GroundingError("unsafe variable _", source)
        _check_unsafe(_cmp_vars(cmp), bound, source)


def check_safety(stmt: Statement) -> None:
    source = stmt.source_text or ""
    if isinstance(stmt, Fact):
        if any(_contains_anon(a) for a in stmt.atom.args):
            raise GroundingError("unsafe variable _", source)
        _check_unsafe(_atom_all_vars(stmt.atom), set(), source)
        return
    if isinstance(stmt, Rule):
        pos, _, _ = _split_body(stmt.body)
        bound = set().union(*[_atom_binding_vars(a) for a in pos]) if pos else set()
        if any(_contains_anon(a) for a in stmt.head.args):
            raise GroundingError("unsafe variable _", source)
        _check_unsafe(_atom_all_vars(stmt.head), bound, source)
        _check_body_safety(stmt.body, bound, source)
        return
    if isinstance(stmt, Constraint):
        pos, _, _ = _split_body(stmt.body)
        bound = set().union(*[_atom_binding_vars(a) for a in pos]) if pos else set()
        _check_body_safety(stmt.body, bound, source)
        return
    if isinstance(stmt, Choice):
        pos, _, _ = _split_body(stmt.body)
        bound = set().union(*[_atom_binding_vars(a) for a in pos]) if pos else set()
        _check_body_safety(stmt.body, bound, source)
        for el in stmt.elements:
            cond_pos, _, _ = _split_body(el.conditions)
            local = bound | (set().union(*[_atom_binding_vars(a) for a in cond_pos]) if cond_pos else set())
            if any(_contains_anon(a) for a in el.atom.args):
                raise GroundingError("unsafe variable _", source)
            _check_unsafe(_atom_all_vars(el.atom), local, source)
            _check_body_safety(el.conditions, local, source)
        return
    if isinstance(stmt, CardinalityRule):
        pos, _, _ = _split_body(stmt.body)
        bound = set().union(*[_atom_binding_vars(a) for a in pos]) if pos else set()
        _check_body_safety(stmt.body, bound, source)
        for el in stmt.elements:
            if _contains_anon(el.lhs) or _contains_anon(el.rhs):
                raise GroundingError("unsafe variable _", source)
            _check_unsafe(_cmp_vars(el), bound, source)
        return
    raise TypeError(f"not a statement: {stmt!r}")


# --------------------------------------------------------------------------
# Matching positive atoms against a ground-atom index

class _Index:
    def __init__(self):
        self.by_pred: dict[tuple[str, int], list[GroundAtom]] = {}
        self.atoms: set[GroundAtom] = set()

    def add(self, atom: GroundAtom) -> bool:
        if atom in self.atoms:
            return False
        self.atoms.add(atom)
        self.by_pred.setdefault((atom.pred, atom.arity), []).append(atom)
        return True

    def bucket(self, pred: str, arity: int) -> list[GroundAtom]:
        return self.by_pred.get((pred, arity), [])


def _unify_arg(pattern: Term, value: GroundValue, binding: dict, trail: list) -> bool:
    if isinstance(pattern, Var):
        name = pattern.name
        if name in binding:
            return binding[name] == value
        binding[name] = value
        trail.append(name)
        return True
    if isinstance(pattern, Anon):
        return True
    if isinstance(pattern, Num):
        return isinstance(value, int) and pattern.value == value
    if isinstance(pattern, Sym):
        return isinstance(value, str) and pattern.name == value
    if isinstance(pattern, Tup):
        if not isinstance(value, tuple) or len(value) != len(pattern.items):
            return False
        return all(_unify_arg(t, v, binding, trail) for t, v in zip(pattern.items, value))
    if isinstance(pattern, Arith):
        # arith args cannot bind; their variables must already be bound
        return eval_term(pattern, binding) == value
    return False


def _order_for_matching(atoms: list[Atom], initially_bound: set[str], source: str) -> list[Atom]:
    """Order positive atoms so arithmetic arguments only use bound variables."""
    remaining = list(atoms)
    ordered: list[Atom] = []
    bound = set(initially_bound)
    while remaining:
        for i, atom in enumerate(remaining):
            if _atom_arith_vars(atom) <= bound:
                ordered.append(atom)
                bound |= _atom_binding_vars(atom)
                del remaining[i]
                break
        else:
            raise GroundingError("cannot order positive literals for grounding", source)
    return ordered


def _iter_matches(patterns: list[Atom], index: _Index, binding: dict, matched: list[GroundAtom]):
    """Yield (binding, matched atoms) for every way the positive patterns can
    match the index. The binding dict is mutated in place; callers must
    consume results immediately."""
    if not patterns:
        yield binding, matched
        return
    first = patterns[0]
    rest = patterns[1:]
    args = first.args
    for ga in index.bucket(first.pred, len(args)):
        trail: list[str] = []
        values = ga.args
        ok = True
        for p, v in zip(args, values):
            if not _unify_arg(p, v, binding, trail):
                ok = False
                break
        if ok:
            matched.append(ga)
            yield from _iter_matches(rest, index, binding, matched)
            matched.pop()
        for name in trail:
            del binding[name]


# --------------------------------------------------------------------------
# Dependency classification

def _dependent_preds(statements: list[Statement]) -> set[tuple[str, int]]:
    dependent: set[tuple[str, int]] = set()
    for stmt in statements:
        if isinstance(stmt, Choice):
            for el in stmt.elements:
                dependent.add((el.atom.pred, el.atom.arity))
    rules = [s for s in statements if isinstance(s, Rule)]
    changed = True
    while changed:
        changed = False
        for rule in rules:
            key = (rule.head.pred, rule.head.arity)
            if key in dependent:
                continue
            pos, neg, _ = _split_body(rule.body)
            if any((a.pred, a.arity) in dependent for a in pos + neg):
                dependent.add(key)
                changed = True
    return dependent


# --------------------------------------------------------------------------
# The grounder proper

def ground_program(statements: list[Statement]) -> GroundProgram:
    for stmt in statements:
        check_safety(stmt)

    dependent = _dependent_preds(statements)

    facts: set[GroundAtom] = set()
    for stmt in statements:
        if isinstance(stmt, Fact):
            facts.add(instantiate_atom(stmt.atom, {}, stmt.source_text))

    rules = [s for s in statements if isinstance(s, Rule)]
    independent_rules = [r for r in rules if (r.head.pred, r.head.arity) not in dependent]

    # D0: everything true in every model, independent of any choice.
    base = _Index()
    for f in facts:
        base.add(f)
    _close(base, independent_rules, negative_against=base)

    # Ground the choice rules; bodies and conditions must stay independent.
    choices: list[GroundChoice] = []
    for idx, stmt in enumerate(statements):
        if not isinstance(stmt, Choice):
            continue
        _require_independent(stmt.body, dependent, stmt.source_text)
        for el in stmt.elements:
            _require_independent(el.conditions, dependent, stmt.source_text)
        for body_binding, _ in _body_instantiations(stmt.body, base, base, stmt.source_text):
            candidates: list[GroundAtom] = []
            seen: set[GroundAtom] = set()
            for el in stmt.elements:
                for el_binding, _ in _body_instantiations(el.conditions, base, base, stmt.source_text, initial=body_binding):
                    atom = instantiate_atom(el.atom, el_binding, stmt.source_text)
                    if atom not in seen:
                        seen.add(atom)
                        candidates.append(atom)
            candidates.sort(key=ground_atom_key)
            choices.append(GroundChoice(stmt.lower, stmt.upper, tuple(candidates), stmt.source_text))

    # Possible atoms: facts, choice candidates, then optimistic rule closure.
    possible = _Index()
    for f in facts:
        possible.add(f)
    for ch in choices:
        for c in ch.candidates:
            possible.add(c)
    _close(possible, rules, negative_against=None)

    # Ground definite rules over the possible atoms.
    ground_rules: list[GroundRule] = []
    seen_rules: set[tuple] = set()
    for stmt in rules:
        for inst in _residual_instances(stmt.body, possible, base, dependent, stmt.source_text):
            binding, pos_dep, neg_dep = inst
            head = instantiate_atom(stmt.head, binding, stmt.source_text)
            key = (head, tuple(pos_dep), tuple(neg_dep))
            if key in seen_rules:
                continue
            seen_rules.add(key)
            ground_rules.append(GroundRule(head, tuple(pos_dep), tuple(neg_dep), stmt.source_text))

    # Constraints and cardinality-equality heads both land as ground constraints.
    ground_constraints: list[GroundConstraint] = []
    seen_cons: set[tuple] = set()
    for stmt in statements:
        if isinstance(stmt, Constraint):
            for binding, pos_dep, neg_dep in _residual_instances(stmt.body, possible, base, dependent, stmt.source_text):
                _add_constraint(ground_constraints, seen_cons, pos_dep, neg_dep, stmt.source_text)
        elif isinstance(stmt, CardinalityRule):
            for binding, pos_dep, neg_dep in _residual_instances(stmt.body, possible, base, dependent, stmt.source_text):
                # ground elements form a set: two element comparisons that
                # instantiate identically collapse to one, as in clingo
                seen_elements: set[tuple] = set()
                true_count = 0
                for el in stmt.elements:
                    key = (
                        eval_term(el.lhs, binding, stmt.source_text),
                        el.op,
                        eval_term(el.rhs, binding, stmt.source_text),
                    )
                    if key in seen_elements:
                        continue
                    seen_elements.add(key)
                    if eval_cmp(el, binding, stmt.source_text):
                        true_count += 1
                if true_count != stmt.count:
                    _add_constraint(ground_constraints, seen_cons, pos_dep, neg_dep, stmt.source_text)

    return GroundProgram(
        facts=frozenset(facts),
        choices=choices,
        rules=ground_rules,
        constraints=ground_constraints,
        possible=frozenset(possible.atoms),
    )


def _add_constraint(out: list[GroundConstraint], seen: set, pos, neg, source: str) -> None:
    key = (frozenset(pos), frozenset(neg))
    if key in seen:
        return
    seen.add(key)
    out.append(GroundConstraint(tuple(pos), tuple(neg), source))


def _require_independent(body: tuple[Literal, ...], dependent: set[tuple[str, int]], source: str) -> None:
    pos, neg, _ = _split_body(body)
    for atom in itertools.chain(pos, neg):
        if (atom.pred, atom.arity) in dependent:
            raise GroundingError(
                f"choice rule depends on choice-derived atoms ({atom.pred}/{atom.arity})", source
            )


def _body_instantiations(body: tuple[Literal, ...], index: _Index, negatives: _Index, source: str, initial: dict | None = None):
    """All bindings satisfying a fully-independent body. Negated atoms and
    comparisons are decided against `negatives` (normally the same index)."""
    pos, neg, cmps = _split_body(body)
    ordered = _order_for_matching(pos, set(initial or ()), source)
    binding = dict(initial or {})
    for b, matched in _iter_matches(ordered, index, binding, []):
        if any(instantiate_atom(a, b, source) in negatives.atoms for a in neg):
            continue
        if not all(eval_cmp(c, b, source) for c in cmps):
            continue
        yield dict(b), list(matched)


def _residual_instances(body: tuple[Literal, ...], possible: _Index, base: _Index, dependent: set, source: str):
    """Instantiate a body over the possible atoms, resolving independent
    literals against the deterministic base. Yields (binding, pos_residue,
    neg_residue) for instances that can still fire in some model."""
    pos, neg, cmps = _split_body(body)
    ordered = _order_for_matching(pos, set(), source)
    binding: dict[str, GroundValue] = {}
    for b, matched in _iter_matches(ordered, possible, binding, []):
        if not all(eval_cmp(c, b, source) for c in cmps):
            continue
        pos_dep: list[GroundAtom] = []
        dead = False
        for ga in matched:
            if (ga.pred, ga.arity) in dependent:
                if ga not in pos_dep:
                    pos_dep.append(ga)
            elif ga not in base.atoms:
                dead = True  # independent atom that can never be true
                break
        if dead:
            continue
        neg_dep: list[GroundAtom] = []
        for atom in neg:
            ga = instantiate_atom(atom, b, source)
            if (ga.pred, ga.arity) in dependent:
                if ga not in neg_dep:
                    neg_dep.append(ga)
            elif ga in base.atoms:
                dead = True  # negated independent atom that is always true
                break
        if dead:
            continue
        yield dict(b), pos_dep, neg_dep


def _close(index: _Index, rules: list[Rule], negative_against: _Index | None) -> None:
    """Forward-chain rule heads into the index until fixpoint. When
    negative_against is None the closure is optimistic: negated atoms are
    assumed satisfiable (used for the possible-atom over-approximation)."""
    changed = True
    while changed:
        changed = False
        for rule in rules:
            pos, neg, cmps = _split_body(rule.body)
            ordered = _order_for_matching(pos, set(), rule.source_text)
            binding: dict[str, GroundValue] = {}
            for b, _ in _iter_matches(ordered, index, binding, []):
                if negative_against is not None and any(
                    instantiate_atom(a, b, rule.source_text) in negative_against.atoms for a in neg
                ):
                    continue
                if not all(eval_cmp(c, b, rule.source_text) for c in cmps):
                    continue
                head = instantiate_atom(rule.head, b, rule.source_text)
                if index.add(head):
                    changed = True
