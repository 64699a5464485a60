"""Grounding: fresh objects, universal instantiation, incrementality, and
the under-approximation side conditions."""

import pytest

from mfotlsat.core import Signature
from mfotlsat.grounding import (
    Domain, GroundingSession, ground, under_approx,
)
from mfotlsat.smtlib import (
    SolverHandle, Sat, Unsat, default_solver_command, solve,
)
from mfotlsat.translate import (
    FCmp, FExistsObj, FForallObj, FTrue, attr, cmp_, lin_key, lin_sub,
)

SIG = Signature((("Access", 1), ("Update", 1)))


@pytest.fixture(scope="module")
def handle(solver_available):
    h = SolverHandle(default_solver_command(), timeout=30.0)
    yield h
    h.close()


def _exp_f():
    # exists access . forall update . access.arg1 = update.arg1 =>
    #                                 access.time >= update.time + 5
    # (in NNF the implication is a disjunction)
    from mfotlsat.translate import FOr, lin_const, lin_add
    neq = cmp_("!=", lin_sub(lin_key(attr("a", "arg_1")),
                             lin_key(attr("u", "arg_1"))))
    ge = cmp_(">=", lin_sub(lin_key(attr("a", "time")),
                            lin_add(lin_key(attr("u", "time")),
                                    lin_const(5))))
    return FExistsObj("a", "Access",
                      FForallObj("u", "Update", FOr((neq, ge))))


def test_existential_creates_fresh_object():
    s = GroundingSession(SIG)
    before = len(s.objects)
    dom = Domain()
    root = s.ground(_exp_f(), dom)
    created = s.objects[before:]
    assert [o.cls for o in created] == ["Access"]
    assert root.startswith("g")  # activation bool for the site


def test_universal_instantiates_per_domain_object():
    s = GroundingSession(SIG)
    dom = Domain()
    u1 = s.make_domain_object("Update")
    u2 = s.make_domain_object("Update")
    dom.add(u1)
    dom.add(u2)
    s.ground(_exp_f(), dom)
    insts = [c for c in s.clauses if u1.p in c or u2.p in c]
    assert any(u1.p in c for c in insts)
    assert any(u2.p in c for c in insts)


def test_vacuous_universal_empty_domain(handle):
    s = GroundingSession(SIG)
    q = ground(FForallObj("u", "Update", FCmp("=", lin_key(attr("u", "time")))),
               Domain(), SIG, session=s)
    # no instantiation clauses; the query is satisfiable outright
    assert isinstance(solve(q, handle), Sat)


def test_ground_true():
    s = GroundingSession(SIG)
    assert s.ground(FTrue(), Domain()) == "true"
    # only the per-class slack objects exist; the grounding added nothing
    assert len(s.objects) == len(SIG.relations)


def test_incremental_grounding_is_monotone():
    phi = _exp_f()
    s = GroundingSession(SIG)
    dom = Domain()
    dom.add(s.make_domain_object("Update"))
    root1 = s.ground(phi, dom)
    snapshot = list(s.clauses)
    dom.add(s.make_domain_object("Update"))
    root2 = s.ground(phi, dom)
    assert root1 == root2  # same site, same activation symbol
    assert s.clauses[:len(snapshot)] == snapshot  # old clauses untouched
    assert len(s.clauses) > len(snapshot)  # only new instantiations appended


def test_under_approx_empty_class_unsat(handle):
    # the existential witness has no same-class domain object to match:
    # NoNewR forces it absent, contradicting the asserted root
    s = GroundingSession(SIG)
    q = under_approx(_exp_f(), Domain(), SIG, session=s)
    res = solve(q, handle)
    assert isinstance(res, Unsat)


def test_under_approx_with_matching_domain_sat(handle):
    s = GroundingSession(SIG)
    dom = Domain()
    dom.add(s.make_domain_object("Access"))
    q = under_approx(_exp_f(), dom, SIG, session=s)
    assert isinstance(solve(q, handle), Sat)


def test_no_new_r_is_componentwise():
    s = GroundingSession(SIG)
    dom = Domain()
    a = s.make_domain_object("Access")
    dom.add(a)
    s.ground(_exp_f(), dom)
    constraints = s.no_new_r(dom)
    # new Access objects may match the domain object; Update objects
    # (the slack) have no candidate and must stay absent
    assert any("mt" in c for c in constraints)
    joined = " ".join(s.clauses)
    assert f"(= {a.t}" in joined or a.t in joined


def test_start_at_zero_mentions_time_zero():
    s = GroundingSession(SIG)
    s.make_domain_object("Access")
    cond = s.start_at_zero()
    assert cond != "true"
    assert any("(= " in c and " 0)" in c for c in s.clauses)


def test_data_constraints_attach_per_object():
    from mfotlsat.core import DataConstraint, Gt, Not, Var, Const
    dc = DataConstraint("Access", Not(Gt(Var("time"), Const(6))))
    s = GroundingSession(SIG, (dc,))
    o = s.make_domain_object("Access")
    assert any(o.t in c and "6" in c for c in s.clauses)


def test_duplicate_domain_object_rejected():
    s = GroundingSession(SIG)
    dom = Domain()
    o = s.make_domain_object("Access")
    dom.add(o)
    with pytest.raises(ValueError):
        dom.add(o)
