"""Core data model: intervals, validation, desugaring."""

import random

import pytest

from mfotlsat.core import (
    Always, And, Atom, Const, Eq, Eventually, Exists, ExistsGuarded, Forall,
    Gt, Implies, Interval, Not, Once, Or, Signature, Since, TrueF, Until,
    Var, desugar, free_vars, validate,
)
from mfotlsat.traces import evaluate

from gen import random_spec
from test_traces import random_trace

SIG = Signature((("Collect", 2), ("Update", 2), ("Access", 2)),
                (("WEEK", 168),))


# ---------------------------------------------------------------------------
# intervals

def test_interval_membership():
    iv = Interval(5, 10)
    assert not iv.contains(4)
    assert iv.contains(5)
    assert iv.contains(10)
    assert not iv.contains(11)


def test_interval_unbounded():
    iv = Interval(360, None)
    assert iv.contains(360)
    assert iv.contains(10**9)
    assert not iv.contains(359)


def test_interval_invariants():
    with pytest.raises(ValueError):
        Interval(5, 4)
    with pytest.raises(ValueError):
        Interval(-1, 3)


# ---------------------------------------------------------------------------
# validation

def test_validate_free_variable():
    f = Exists(("x",), And(Atom("Collect", (Var("d"), Var("x"))),
                           Gt(Var("x"), Const(0))))
    diags = validate(f, SIG)
    assert any("free variable d" in d for d in diags)


def test_validate_unguarded_quantifier():
    f = Exists(("x",), Gt(Var("x"), Const(0)))
    diags = validate(f, SIG)
    assert any("unguarded" in d for d in diags)


def test_validate_arity_mismatch():
    f = Atom("Access", (Const(0),))
    diags = validate(f, SIG)
    assert any("arity mismatch" in d for d in diags)


def test_validate_req0_clean():
    req0 = Always(Forall(("d", "v"), Implies(
        Atom("Access", (Var("d"), Var("v"))),
        Once(Exists(("v2",), Atom("Collect", (Var("d"), Var("v2")))),
             Interval(360, None)))))
    assert validate(req0, SIG) == []


def test_validate_negated_guard_rejected():
    f = Exists(("x",), Not(Atom("Access", (Var("x"), Const(0)))))
    assert validate(f, SIG) != []


# ---------------------------------------------------------------------------
# desugaring

def test_desugar_eventually():
    f = desugar(Eventually(Atom("Access", (Const(0), Const(0))),
                           Interval(5, 10)))
    assert isinstance(f, Until)
    assert isinstance(f.left, TrueF)
    assert f.interval == Interval(5, 10)


def test_desugar_once():
    f = desugar(Once(Atom("Access", (Const(0), Const(0))), Interval(1, 2)))
    assert isinstance(f, Since)
    assert isinstance(f.left, TrueF)


def test_desugar_core_identity():
    assert desugar(TrueF()) == TrueF()


def test_desugar_forall_via_negation():
    f = desugar(Forall(("d",), Implies(Atom("Access", (Var("d"), Const(0))),
                                       Gt(Var("d"), Const(0)))))
    assert isinstance(f, Not)
    assert isinstance(f.sub, ExistsGuarded)


def test_desugar_guard_extraction_through_or():
    # the guard atom differs per disjunct: the quantifier distributes
    f = Exists(("x",), Or(Atom("Access", (Var("x"), Const(0))),
                          Atom("Update", (Var("x"), Const(1)))))
    assert free_vars(desugar(f)) == set()


def test_desugar_idempotent_on_corpus():
    for seed in range(40):
        spec = random_spec(seed)
        for _, f in list(spec.requirements) + [("prop", spec.property)]:
            once = desugar(f)
            assert desugar(once) == once


def test_desugar_preserves_semantics():
    # sugared and desugared forms agree on random traces
    rng = random.Random(7)
    checked = 0
    for seed in range(25):
        spec = random_spec(seed)
        formulas = [f for _, f in spec.requirements] + [spec.property]
        for _ in range(4):
            tr = random_trace(rng, spec.signature)
            for f in formulas:
                assert evaluate(tr, f) == evaluate(tr, desugar(f))
                checked += 1
    assert checked >= 50
