"""SMT client: response parsing, framing, live solver protocol, decoding."""

import pytest

from mfotlsat.grounding import GroundingSession, ObjectVar
from mfotlsat.smtlib import (
    SolverError, SolverHandle, _extract_framed, decode_trace,
    default_solver_command, parse_model, parse_sexpr,
)
from mfotlsat.traces import volume


@pytest.fixture()
def handle(solver_available):
    h = SolverHandle(default_solver_command(), timeout=30.0)
    yield h
    h.close()


# ---------------------------------------------------------------------------
# parsing

def test_parse_sexpr_nested():
    assert parse_sexpr("(a (b c) d)") == ["a", ["b", "c"], "d"]


def test_parse_model_values():
    text = """(
      (define-fun x () Int 3)
      (define-fun y () Int (- 2))
      (define-fun p () Bool true)
      (define-fun q () Bool false)
    )"""
    assert parse_model(text) == {"x": 3, "y": -2, "p": True, "q": False}


def test_extract_framed_skips_chatter():
    buf = b"wasm thread noise\x02sat\x03\nmore noise\x02unsat\x03\n"
    unit, rest = _extract_framed(buf)
    assert unit == b"sat"
    unit, _ = _extract_framed(rest)
    assert unit == b"unsat"


def test_extract_framed_partial():
    unit, rest = _extract_framed(b"noise\x02sa")
    assert unit is None
    assert rest == b"\x02sa"  # keep the open frame, drop the chatter


# ---------------------------------------------------------------------------
# live protocol

def test_check_sat_and_model(handle):
    handle.declare("(declare-const x Int)")
    handle.assert_("(> x 41)")
    assert handle.check() == "sat"
    assert handle.model()["x"] >= 42


def test_assumptions_and_core(handle):
    handle.declare("(declare-const x Int)")
    a = handle.assume("(> x 0)", "t")
    b = handle.assume("(< x 0)", "t")
    c = handle.assume("(= x 5)", "t")
    assert handle.check([a, c]) == "sat"
    assert handle.check([a, b]) == "unsat"
    core = handle.unsat_core()
    assert core <= {a, b}
    assert len(core) == 2


def test_assume_memoizes_labels(handle):
    handle.declare("(declare-const x Int)")
    assert handle.assume("(> x 0)", "t") == handle.assume("(> x 0)", "t")
    assert handle.assume("(> x 0)", "t") != handle.assume("(> x 1)", "t")


def test_push_pop(handle):
    handle.declare("(declare-const x Int)")
    handle.assert_("(> x 0)")
    handle.push()
    handle.assert_("(< x 0)")
    assert handle.check() == "unsat"
    handle.pop()
    assert handle.check() == "sat"


def test_double_declaration_rejected(handle):
    handle.declare("(declare-const x Int)")
    with pytest.raises(SolverError):
        handle.declare("(declare-const x Int)")


def test_arithmetic_contradiction(handle):
    # presence(o) and o.time = 361 and o.time <= 359 is unsatisfiable
    handle.declare("(declare-const o_p Bool)")
    handle.declare("(declare-const o_t Int)")
    handle.assert_("o_p")
    handle.assert_("(= o_t 361)")
    handle.assert_("(<= o_t 359)")
    assert handle.check() == "unsat"


def test_verdict_determinism(solver_available):
    answers = []
    for _ in range(2):
        h = SolverHandle(default_solver_command(), seed=0, timeout=30.0)
        try:
            h.declare("(declare-const x Int)")
            h.declare("(declare-const y Int)")
            h.assert_("(= (+ x y) 10)")
            h.assert_("(> x 3)")
            answers.append(h.check())
        finally:
            h.close()
    assert answers == ["sat", "sat"]


# ---------------------------------------------------------------------------
# trace decoding

def _obj(i, cls, arity=1):
    return ObjectVar(id=f"{cls}#{i}", cls=cls, arity=arity, base=f"ro{i}_{cls}")


def test_decode_trace_groups_by_time():
    a, b, c = _obj(1, "A"), _obj(2, "B"), _obj(3, "A")
    model = {a.p: True, a.t: 0, a.arg(1): 1,
             b.p: True, b.t: 0, b.arg(1): 2,
             c.p: True, c.t: 2, c.arg(1): 3}
    tr = decode_trace(model, [a, b, c])
    assert len(tr) == 2
    assert volume(tr) == 3
    assert tr.time(0) == 0 and tr.time(1) == 2


def test_decode_trace_drops_absent_and_merges_duplicates():
    a, b = _obj(1, "A"), _obj(2, "A")
    model = {a.p: True, a.t: 1, a.arg(1): 7,
             b.p: True, b.t: 1, b.arg(1): 7}
    assert volume(decode_trace(model, [a, b])) == 1
    assert volume(decode_trace({a.p: False, a.t: 0, a.arg(1): 0}, [a])) == 0


def test_emitted_clauses_reparse(dcc_reqs12):
    # everything the grounder emits is well-formed SMT-LIB
    from mfotlsat.core import Not, desugar
    from mfotlsat.grounding import Domain
    from mfotlsat.translate import TranslationSession
    ts = TranslationSession()
    gs = GroundingSession(dcc_reqs12.signature, dcc_reqs12.data_constraints)
    dom = Domain()
    dom.add(gs.make_domain_object("Access"))
    root = gs.ground(ts.translate_top(desugar(Not(dcc_reqs12.property))), dom)
    for text in list(gs.clauses) + [root] + gs.no_new_r(dom) + \
            gs.pos_membership() + [gs.start_at_zero()]:
        if text not in ("true", "false"):
            parse_sexpr(text)
