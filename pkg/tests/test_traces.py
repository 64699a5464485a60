"""Trace model and reference evaluator, cross-checked against an
independent naive re-implementation of the semantics."""

import random

import pytest

from mfotlsat.core import (
    And, Atom, Const, CORE_NODES, Eq, ExistsGuarded, FalseF, Gt, Next, Not,
    Prev, Since, TrueF, Until, Var, desugar,
)
from mfotlsat.traces import (
    GroundAtom, Trace, check_requirements, evaluate, make_trace, volume,
)
from mfotlsat.cli import fixture_path

from gen import random_spec


# ---------------------------------------------------------------------------
# helpers

def sigma(n: int) -> Trace:
    return Trace.from_json(fixture_path(f"sigma{n}.json").read_text())


def random_trace(rng: random.Random, sig) -> Trace:
    """Canonical trace: length <= 5, volume <= 6, values 0..3, times 0..10."""
    length = rng.randint(0, 5)
    times = sorted(rng.sample(range(11), length))
    positions = []
    budget = 6
    for i, t in enumerate(times):
        most = budget - (length - 1 - i)  # leave one atom per later position
        k = rng.randint(1, max(1, min(2, most)))
        budget -= k
        atoms = set()
        while len(atoms) < k:
            rel, arity = rng.choice(sig.relations)
            atoms.add((rel, tuple(rng.randint(0, 3) for _ in range(arity))))
        positions.append((t, sorted(atoms)))
    return make_trace(positions)


def naive(tr: Trace, f, val, i: int) -> bool:
    """Independent evaluator: desugars eagerly, quantifies over index sets
    with explicit comprehensions."""
    if not isinstance(f, CORE_NODES):
        f = desugar(f)
    n = len(tr)

    def term(t):
        if isinstance(t, Const):
            return t.value
        if isinstance(t, Var):
            return val[t.name]
        # Add / Scale
        if hasattr(t, "coeff"):
            return t.coeff * term(t.term)
        return term(t.left) + term(t.right)

    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Eq):
        return term(f.left) == term(f.right)
    if isinstance(f, Gt):
        return term(f.left) > term(f.right)
    if isinstance(f, Atom):
        if i >= n:
            return False
        want = GroundAtom(f.rel, tuple(term(a) for a in f.args))
        return want in tr.atoms(i)
    if isinstance(f, Not):
        return not naive(tr, f.sub, val, i)
    if isinstance(f, And):
        return naive(tr, f.left, val, i) and naive(tr, f.right, val, i)
    if isinstance(f, ExistsGuarded):
        if i >= n:
            return False
        for atom in tr.atoms(i):
            if atom.rel != f.guard.rel or len(atom.args) != len(f.guard.args):
                continue
            binding = {}
            fits = True
            for slot, t in zip(atom.args, f.guard.args):
                if isinstance(t, Var) and t.name in f.vars:
                    if binding.setdefault(t.name, slot) != slot:
                        fits = False
                        break
                elif term(t) != slot:
                    fits = False
                    break
            if fits and set(binding) == set(f.vars) \
                    and naive(tr, f.body, {**val, **binding}, i):
                return True
        return False
    if isinstance(f, Until):
        return any(
            f.interval.contains(tr.time(j) - tr.time(i))
            and naive(tr, f.right, val, j)
            and all(naive(tr, f.left, val, k) for k in range(i, j))
            for j in range(i, n))
    if isinstance(f, Since):
        return n > 0 and any(
            f.interval.contains(tr.time(i) - tr.time(j))
            and naive(tr, f.right, val, j)
            and all(naive(tr, f.left, val, k) for k in range(j + 1, i + 1))
            for j in range(0, i + 1))
    if isinstance(f, Next):
        return i + 1 < n and f.interval.contains(tr.time(i + 1) - tr.time(i)) \
            and naive(tr, f.sub, val, i + 1)
    if isinstance(f, Prev):
        return i > 0 and f.interval.contains(tr.time(i) - tr.time(i - 1)) \
            and naive(tr, f.sub, val, i - 1)
    raise TypeError(f)


# ---------------------------------------------------------------------------
# invariants

def test_timestamps_strictly_increasing():
    with pytest.raises(ValueError):
        make_trace([(2, [("Access", (0, 0))]), (2, [("Access", (0, 1))])])


def test_no_empty_positions():
    with pytest.raises(ValueError):
        make_trace([(0, [])])


def test_volume():
    assert volume(make_trace([])) == 0
    assert volume(sigma(2)) == 3
    assert volume(sigma(4)) == 3
    assert volume(sigma(5)) == 3


def test_json_round_trip():
    for n in range(1, 6):
        tr = sigma(n)
        assert Trace.from_json(tr.to_json()) == tr


# ---------------------------------------------------------------------------
# walk-through facts on the DCC traces

def test_sigma1_satisfies_req0(dcc_weak):
    reqs = dict(dcc_weak.requirements)
    assert evaluate(sigma(1), reqs["req0"], {}, 0)


def test_sigma2_is_a_counterexample(dcc_weak):
    assert evaluate(sigma(2), Not(dcc_weak.property), {}, 0)


def test_sigma3_violates_req2_first(dcc_reqs12):
    reqs = [f for _, f in dcc_reqs12.requirements]
    names = dict((f, n) for (n, f) in dcc_reqs12.requirements)
    assert names[check_requirements(sigma(3), reqs)] == "req2"


def test_sigma4_violates_req1_first(dcc_reqs12):
    reqs = [f for _, f in dcc_reqs12.requirements]
    names = dict((f, n) for (n, f) in dcc_reqs12.requirements)
    assert names[check_requirements(sigma(4), reqs)] == "req1"


def test_sigma5_solves_reqs12(dcc_reqs12):
    reqs = [f for _, f in dcc_reqs12.requirements]
    assert check_requirements(sigma(5), reqs) is None
    assert evaluate(sigma(5), Not(dcc_reqs12.property), {}, 0)


# ---------------------------------------------------------------------------
# randomized cross-check

def test_evaluator_against_naive_reimplementation():
    rng = random.Random(0)
    pairs = 0
    while pairs < 1000:
        spec = random_spec(rng.randrange(500))
        tr = random_trace(rng, spec.signature)
        for f in [f for _, f in spec.requirements] + [spec.property]:
            pos = rng.randrange(max(1, len(tr)))
            assert evaluate(tr, f, {}, pos) == naive(tr, desugar(f), {}, pos)
            # consistency: phi and not-phi never both hold
            assert not (evaluate(tr, f, {}, pos)
                        and evaluate(tr, Not(f), {}, pos))
            pairs += 1


def test_empty_trace_degenerate_position():
    empty = make_trace([])
    assert evaluate(empty, TrueF(), {}, 0)
    assert not evaluate(empty, Atom("Access", (Const(0), Const(0))), {}, 0)
