"""Shared fixtures: solver bootstrap, DCC fixture specs, and the random
cross-validation corpus used by the acceptance criteria.

The corpus is expensive (hundreds of solver-backed searches), so it is
computed once per session and shared between the oracle-equivalence,
lemma, greedy-dominance, and monotonicity criteria.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import pytest

from mfotlsat import oracle, search
from mfotlsat.cli import fixture_path
from mfotlsat.parsing import parse_spec
from mfotlsat.smtlib import ensure_bundled_solver

from gen import MAX_VOLUME, TIME_RANGE, VALUE_RANGE, random_spec

CORPUS_SIZE = 200
CORPUS_TIMEOUT = 30.0

BUDGET = oracle.EnumerationBudget(
    max_volume=MAX_VOLUME, values=VALUE_RANGE, times=TIME_RANGE)


@pytest.fixture(scope="session", autouse=True)
def solver_available():
    """Install the bundled solver once so individual tests never race the
    npm bootstrap."""
    return ensure_bundled_solver()


def load_fixture(name: str):
    return parse_spec(fixture_path(name).read_text(), filename=name)


@pytest.fixture(scope="session")
def dcc_weak():
    return load_fixture("dcc_p1_weak.spec")


@pytest.fixture(scope="session")
def dcc_strong():
    return load_fixture("dcc_p1_strong.spec")


@pytest.fixture(scope="session")
def dcc_reqs12():
    return load_fixture("dcc_p1_reqs12.spec")


@pytest.fixture(scope="session")
def dcc_min_age():
    return load_fixture("dcc_min_age.spec")


# ---------------------------------------------------------------------------
# the random corpus

@dataclass
class CorpusEntry:
    seed: int
    spec: object
    optimal: object          # Verdict or InconclusiveError
    greedy: object
    enum: object
    min_volumes: list = field(default_factory=list)  # per-iteration vol(s_min)


def _run_seed(seed: int) -> CorpusEntry:
    spec = random_spec(seed)
    min_volumes = []

    def callback(info):
        if info["min_volume"] is not None:
            min_volumes.append(info["min_volume"])

    def run(mode):
        try:
            return search.check(spec, bound=MAX_VOLUME, mode=mode,
                                timeout=CORPUS_TIMEOUT,
                                callback=callback if mode == search.OPTIMAL
                                else None)
        except search.InconclusiveError as e:
            return e

    opt = run(search.OPTIMAL)
    gre = run(search.GREEDY)
    enu = oracle.enumerate_check(spec, BUDGET)
    return CorpusEntry(seed=seed, spec=spec, optimal=opt, greedy=gre,
                       enum=enu, min_volumes=min_volumes)


@pytest.fixture(scope="session")
def corpus(solver_available):
    """Optimal/greedy/enumeration verdicts for the whole random corpus.

    Each search owns its own solver process, so seeds run in a small
    thread pool (the Python side mostly waits on solver I/O).
    """
    start = time.monotonic()
    with ThreadPoolExecutor(max_workers=4) as pool:
        entries = list(pool.map(_run_seed, range(CORPUS_SIZE)))
    elapsed = time.monotonic() - start
    return {"entries": entries, "elapsed_s": elapsed}
