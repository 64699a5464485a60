"""Finite timed traces and the reference MFOTL evaluator.

Traces are canonical: strictly increasing natural timestamps, at least one
atom per position.  The evaluator implements strong finite-trace semantics:
an Until needs its witness inside the trace, Next at the last position and
Prev at the first are false.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .core import (
    Add, And, Atom, Const, CORE_NODES, Eq, ExistsGuarded, FalseF, Formula,
    Gt, Next, Not, Prev, Scale, Since, Term, TrueF, Until, Var, desugar,
)


@dataclass(frozen=True)
class GroundAtom:
    rel: str
    args: tuple  # of int

    def __str__(self):
        return f"{self.rel}({','.join(map(str, self.args))})"


@dataclass(frozen=True)
class Trace:
    positions: tuple  # of (timestamp: int, atoms: frozenset[GroundAtom])

    def __post_init__(self):
        last = -1
        for ts, atoms in self.positions:
            if ts <= last:
                raise ValueError("timestamps must be strictly increasing")
            if ts < 0:
                raise ValueError("timestamps must be natural numbers")
            if not atoms:
                raise ValueError("every position needs at least one atom")
            last = ts

    def __len__(self):
        return len(self.positions)

    def time(self, i: int) -> int:
        return self.positions[i][0]

    def atoms(self, i: int) -> frozenset:
        return self.positions[i][1]

    def __str__(self):
        return " ; ".join(
            f"{ts}:{{{','.join(sorted(map(str, atoms)))}}}"
            for ts, atoms in self.positions) or "<empty>"

    def to_json(self) -> str:
        return json.dumps({
            "positions": [
                {"time": ts,
                 "atoms": [{"rel": a.rel, "args": list(a.args)}
                           for a in sorted(atoms, key=lambda a: (a.rel, a.args))]}
                for ts, atoms in self.positions
            ]
        })

    @staticmethod
    def from_json(text: str) -> "Trace":
        doc = json.loads(text)
        return make_trace([
            (p["time"], [(a["rel"], tuple(a["args"])) for a in p["atoms"]])
            for p in doc["positions"]
        ])


def make_trace(positions) -> Trace:
    """Build a Trace from [(time, [(rel, args), ...]), ...]."""
    return Trace(tuple(
        (ts, frozenset(GroundAtom(rel, tuple(args)) for rel, args in atoms))
        for ts, atoms in positions))


EMPTY_TRACE = Trace(())


def volume(trace: Trace) -> int:
    return sum(len(atoms) for _, atoms in trace.positions)


# ---------------------------------------------------------------------------
# Evaluation

def _eval_term(t: Term, val: dict) -> int:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return val[t.name]
    if isinstance(t, Add):
        return _eval_term(t.left, val) + _eval_term(t.right, val)
    if isinstance(t, Scale):
        return t.coeff * _eval_term(t.term, val)
    raise TypeError(f"not a term: {t!r}")


def evaluate(trace: Trace, formula: Formula, val: Optional[dict] = None,
             pos: int = 0) -> bool:
    """Truth of formula at the given position under the valuation.

    Position 0 of the empty trace is admitted (the degenerate start); all
    atoms are false there and temporal witnesses do not exist.
    """
    if val is None:
        val = {}
    n = len(trace)
    if pos < 0 or (pos >= n and not (pos == 0 and n == 0)):
        raise IndexError(f"position {pos} out of range for trace of length {n}")
    if not isinstance(formula, CORE_NODES):
        formula = desugar(formula)
    return _ev(trace, formula, val, pos)


def _ev(tr: Trace, f: Formula, val: dict, i: int) -> bool:
    if not isinstance(f, CORE_NODES):
        f = desugar(f)
    n = len(tr)
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Eq):
        return _eval_term(f.left, val) == _eval_term(f.right, val)
    if isinstance(f, Gt):
        return _eval_term(f.left, val) > _eval_term(f.right, val)
    if isinstance(f, Atom):
        if i >= n:
            return False
        want = GroundAtom(f.rel, tuple(_eval_term(a, val) for a in f.args))
        return want in tr.atoms(i)
    if isinstance(f, Not):
        return not _ev(tr, f.sub, val, i)
    if isinstance(f, And):
        return _ev(tr, f.left, val, i) and _ev(tr, f.right, val, i)
    if isinstance(f, ExistsGuarded):
        if i >= n:
            return False
        for a in tr.atoms(i):
            if a.rel != f.guard.rel or len(a.args) != len(f.guard.args):
                continue
            bound = {}
            ok = True
            for j, t in enumerate(f.guard.args):
                if isinstance(t, Var) and t.name in f.vars:
                    # quantified variable: bind (consistently) from the atom
                    if bound.get(t.name, a.args[j]) != a.args[j]:
                        ok = False
                        break
                    bound[t.name] = a.args[j]
                elif _eval_term(t, val) != a.args[j]:
                    ok = False
                    break
            if ok and len(bound) == len(f.vars):
                ext = dict(val)
                ext.update(bound)
                if _ev(tr, f.body, ext, i):
                    return True
        return False
    if isinstance(f, Until):
        for j in range(i, n):
            d = tr.time(j) - tr.time(i)
            if f.interval.hi is not None and d > f.interval.hi:
                break
            if f.interval.contains(d) and _ev(tr, f.right, val, j):
                if all(_ev(tr, f.left, val, k) for k in range(i, j)):
                    return True
        return False
    if isinstance(f, Since):
        for j in range(min(i, n - 1), -1, -1):
            d = tr.time(i) - tr.time(j)
            if f.interval.hi is not None and d > f.interval.hi:
                break
            if f.interval.contains(d) and _ev(tr, f.right, val, j):
                if all(_ev(tr, f.left, val, k) for k in range(j + 1, i + 1)):
                    return True
        return False
    if isinstance(f, Next):
        if i + 1 >= n:
            return False
        return f.interval.contains(tr.time(i + 1) - tr.time(i)) and \
            _ev(tr, f.sub, val, i + 1)
    if isinstance(f, Prev):
        if i == 0 or n == 0:
            return False
        return f.interval.contains(tr.time(i) - tr.time(i - 1)) and \
            _ev(tr, f.sub, val, i - 1)
    raise TypeError(f"not a core formula: {f!r}")


def check_requirements(trace: Trace, reqs) -> Optional[Formula]:
    """First requirement (declaration order) the trace violates, else None."""
    for psi in reqs:
        if not evaluate(trace, psi, {}, 0):
            return psi
    return None
