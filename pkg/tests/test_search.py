"""Search loop: exact minimization, verdict behavior, and safeguards."""

import itertools
import random

import pytest

from mfotlsat import search
from mfotlsat.smtlib import SolverHandle, default_solver_command
from mfotlsat.traces import check_requirements, evaluate, volume
from mfotlsat.core import Not

from gen import MAX_VOLUME, random_spec


@pytest.fixture(scope="module")
def handle(solver_available):
    h = SolverHandle(default_solver_command(), timeout=30.0)
    yield h
    h.close()


# ---------------------------------------------------------------------------
# core-guided minimization vs brute force

def _random_clauses(rng, names):
    """Satisfiable random clause set: each clause has a positive literal."""
    clauses = []
    for _ in range(rng.randint(2, 10)):
        k = rng.randint(1, 3)
        lits = rng.sample(names, k)
        signs = [True] + [rng.random() < 0.5 for _ in range(k - 1)]
        clauses.append(list(zip(lits, signs)))
    return clauses


def _brute_minimum(names, clauses):
    best = None
    for bits in itertools.product([False, True], repeat=len(names)):
        assign = dict(zip(names, bits))
        if all(any(assign[n] == s for n, s in cl) for cl in clauses):
            count = sum(bits)
            best = count if best is None else min(best, count)
    return best


def test_minimize_count_exact(handle):
    rng = random.Random(3)
    for case in range(12):
        n = rng.randint(4, 12)
        names = [f"m{case}_{i}" for i in range(n)]
        for name in names:
            handle.declare(f"(declare-const {name} Bool)")
        clauses = _random_clauses(rng, names)
        act = handle.assume(
            "(and " + " ".join(
                "(or " + " ".join(x if s else f"(not {x})" for x, s in cl) + ")"
                for cl in clauses) + ")",
            f"act{case}_")
        model = search.minimize_count(handle, names, fixed=[act])
        got = sum(bool(model.get(x)) for x in names)
        assert got == _brute_minimum(names, clauses)


def test_minimize_count_asserts_on_hard_unsat(handle):
    handle.declare("(declare-const hx Bool)")
    bad = handle.assume("(and hx (not hx))", "bad")
    with pytest.raises(AssertionError):
        search.minimize_count(handle, ["hx"], fixed=[bad])


# ---------------------------------------------------------------------------
# verdict behavior

def test_sat_volume_consistent():
    for seed in (1, 2, 34):
        v = search.check(random_spec(seed), bound=MAX_VOLUME, timeout=30)
        if isinstance(v, search.Sat):
            assert v.volume == volume(v.trace)


def test_sat_trace_vetted_by_evaluator():
    for seed in (1, 36):
        spec = random_spec(seed)
        v = search.check(spec, bound=MAX_VOLUME, timeout=30)
        if isinstance(v, search.Sat):
            assert check_requirements(
                v.trace, [f for _, f in spec.requirements]) is None
            assert evaluate(v.trace, Not(spec.property))


def test_verdict_monotone_in_bound(dcc_reqs12):
    low = search.check(dcc_reqs12, bound=2, timeout=60)
    assert isinstance(low, search.BoundedUnsat)
    assert low.min_volume_lower_bound == 3
    mid = search.check(dcc_reqs12, bound=3, timeout=60)
    high = search.check(dcc_reqs12, bound=4, timeout=60)
    assert isinstance(mid, search.Sat) and isinstance(high, search.Sat)
    # raising the bound past the lower bound flips to Sat at that volume
    assert mid.volume == high.volume == low.min_volume_lower_bound


def test_iteration_cap_is_inconclusive_not_a_verdict():
    spec = random_spec(1)
    with pytest.raises(search.InconclusiveError):
        search.check(spec, bound=MAX_VOLUME, timeout=30, max_iterations=0)


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        search.check(random_spec(1), bound=1, mode="fastest")


def test_greedy_mode_runs(dcc_min_age):
    v = search.check(dcc_min_age, bound=4, mode=search.GREEDY, timeout=60)
    assert isinstance(v, search.Unsat)


def test_progress_callback_reports_iterations(dcc_reqs12):
    seen = []
    search.check(dcc_reqs12, bound=2, timeout=60, callback=seen.append)
    assert seen
    assert all(info["iteration"] >= 1 for info in seen)
    assert any(info["active_requirements"] for info in seen)
