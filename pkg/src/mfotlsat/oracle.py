"""Ground-truth baselines: naive full grounding and exhaustive enumeration.

`nbsc` grounds the whole problem over n class-symbolic objects in one shot —
the quantifier-free formula grows as O(n^k) in the quantifier nesting depth k,
which is exactly why the incremental search exists.  `enumerate_check` brute-
forces all canonical traces within an explicit budget; it depends only on the
trace evaluator, making it an independent oracle for the solver-based path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .core import Not, Spec, desugar
from .grounding import (
    GroundedQuery, ObjectVar, _lin_sexpr, sand, simplies, snot, sor,
    template_sexpr,
)
from .search import BoundedUnsat, Sat, Unsat, Verdict
from .smtlib import SolverHandle, default_solver_command, solve
from .smtlib import Sat as SmtSat, Unknown as SmtUnknown, Unsat as SmtUnsat
from .traces import Trace, check_requirements, evaluate, make_trace, volume
from .translate import (
    FAnd, FCmp, FExistsObj, FExistsPos, FFalse, FForallObj, FForallPos, FNot,
    FOr, FTrue, Fol, TranslationSession, fand, lin_key,
)


def nesting_depth(f: Fol) -> int:
    """Maximum quantifier nesting of a translated formula (the k in O(n^k))."""
    if isinstance(f, (FTrue, FFalse, FCmp)):
        return 0
    if isinstance(f, FNot):
        return nesting_depth(f.sub)
    if isinstance(f, (FAnd, FOr)):
        return max((nesting_depth(x) for x in f.items), default=0)
    if isinstance(f, (FExistsObj, FForallObj)):
        return 1 + nesting_depth(f.body)
    if isinstance(f, (FExistsPos, FForallPos)):
        return 1 + nesting_depth(f.body)
    raise TypeError(f"not a FOL formula: {f!r}")


def _has_quant(f: Fol) -> bool:
    return nesting_depth(f) > 0


class _NaiveGrounder:
    """Expand all quantifiers over n class-symbolic objects."""

    def __init__(self, spec: Spec, n: int):
        self.spec = spec
        self.n = n
        self.rels = [name for name, _ in spec.signature.relations]
        self.arities = dict(spec.signature.relations)
        maxar = max(self.arities.values(), default=0)
        self.objects = [
            ObjectVar(id=f"*#{i}", cls="*", arity=maxar, base=f"no{i}")
            for i in range(1, n + 1)]
        self.declarations = []
        self.clauses = []
        self.ground_instances = 0
        self.pos_counter = 0
        for o in self.objects:
            self.declarations.append(f"(declare-const {o.p} Bool)")
            self.declarations.append(f"(declare-const {o.t} Int)")
            self.declarations.append(f"(declare-const {self._cls(o)} Int)")
            for j in range(1, maxar + 1):
                self.declarations.append(f"(declare-const {o.arg(j)} Int)")
            self.clauses.append(f"(>= {o.t} 0)")
            self.clauses.append(
                f"(and (>= {self._cls(o)} 0) (< {self._cls(o)} {len(self.rels)}))")
            for k, rel in enumerate(self.rels):
                symmap = {"time": o.t}
                symmap.update({f"arg_{j}": o.arg(j)
                               for j in range(1, self.arities[rel] + 1)})
                for dc in spec.data_constraints:
                    if dc.cls == rel:
                        self.clauses.append(simplies(
                            sand([o.p, f"(= {self._cls(o)} {k})"]),
                            template_sexpr(dc.template, symmap)))
        if self.objects:
            empty = sand([snot(o.p) for o in self.objects])
            zero = sor([sand([o.p, f"(= {o.t} 0)"]) for o in self.objects])
            self.clauses.append(sor([empty, zero]))

    def _cls(self, o: ObjectVar) -> str:
        return f"{o.base}_c"

    def _is_cls(self, o: ObjectVar, cls: str) -> str:
        return f"(= {self._cls(o)} {self.rels.index(cls)})"

    def emit(self, f: Fol, env: dict) -> str:
        if isinstance(f, FTrue):
            return "true"
        if isinstance(f, FFalse):
            return "false"
        if isinstance(f, FCmp):
            e = _lin_sexpr(f.lin, env)
            if f.op == "!=":
                return f"(not (= {e} 0))"
            ops = {"=": "=", ">": ">", ">=": ">=", "<": "<", "<=": "<="}
            return f"({ops[f.op]} {e} 0)"
        if isinstance(f, FNot):
            return snot(self.emit(f.sub, env))
        if isinstance(f, FAnd):
            return sand([self.emit(x, env) for x in f.items])
        if isinstance(f, FOr):
            return sor([self.emit(x, env) for x in f.items])
        if isinstance(f, (FExistsObj, FForallObj)):
            leaf = not _has_quant(f.body)
            alts = []
            for o in self.objects:
                if leaf:
                    self.ground_instances += 1
                env2 = dict(env)
                env2[f.var] = o
                guard = sand([o.p, self._is_cls(o, f.cls)])
                body = self.emit(f.body, env2)
                if isinstance(f, FExistsObj):
                    alts.append(sand([guard, body]))
                else:
                    alts.append(simplies(guard, body))
            return sor(alts) if isinstance(f, FExistsObj) else sand(alts)
        if isinstance(f, FExistsPos):
            self.pos_counter += 1
            u = f"nps{self.pos_counter}"
            self.declarations.append(f"(declare-const {u} Int)")
            member = sor([sand([o.p, f"(= {u} {o.t})"]) for o in self.objects])
            env2 = dict(env)
            env2[f.sym] = u
            if not _has_quant(f.body):
                self.ground_instances += 1
            return sand([member, self.emit(f.body, env2)])
        if isinstance(f, FForallPos):
            leaf = not _has_quant(f.body)
            insts = []
            for o in self.objects:
                if leaf:
                    self.ground_instances += 1
                env2 = dict(env)
                env2[f.sym] = lin_key(("sym", o.t))
                insts.append(simplies(o.p, self.emit(f.body, env2)))
            return sand(insts)
        raise TypeError(f"not a FOL formula: {f!r}")

    def decode(self, model: dict) -> Trace:
        by_time = {}
        for o in self.objects:
            if not model.get(o.p, False):
                continue
            rel = self.rels[model.get(self._cls(o), 0)]
            args = tuple(model.get(o.arg(j), 0)
                         for j in range(1, self.arities[rel] + 1))
            by_time.setdefault(model.get(o.t, 0), set()).add((rel, args))
        return make_trace(sorted(
            (t, sorted(atoms)) for t, atoms in by_time.items()))


def nbsc(spec: Spec, n: int, solver=None, seed: int = 0,
         timeout: float = 60.0, handle: SolverHandle = None) -> Verdict:
    """One-shot full grounding over n objects (the non-incremental baseline).

    Sat traces are additionally vetted by the trace evaluator; Unsat means no
    counterexample representable with n relational objects.
    """
    ts = TranslationSession()
    conjuncts = [ts.translate_top(desugar(Not(spec.property)))]
    conjuncts += [ts.translate_top(desugar(f)) for _, f in spec.requirements]
    g = _NaiveGrounder(spec, n)
    root = g.emit(fand(conjuncts), {})
    query = GroundedQuery(root=root, clauses=tuple(g.clauses),
                          declarations=tuple(g.declarations),
                          new_objects=(), pos_syms=(), provenance={})
    stats = {"ground_instances": g.ground_instances,
             "nesting": max((nesting_depth(c) for c in conjuncts), default=0),
             "objects": n}
    own = None
    if handle is None:
        handle = own = SolverHandle(default_solver_command(solver),
                                    seed=seed, timeout=timeout)
    try:
        res = solve(query, handle)
    finally:
        if own is not None:
            own.close()
    if isinstance(res, SmtUnknown):
        from .search import InconclusiveError
        raise InconclusiveError(res.reason, stats)
    if isinstance(res, SmtUnsat):
        return Unsat(stats)
    trace = g.decode(res.model)
    if check_requirements(trace, [f for _, f in spec.requirements]) is not None \
            or not evaluate(trace, Not(spec.property)):
        raise AssertionError("naive grounding produced an unsound model")
    return Sat(trace, volume(trace), stats)


# ---------------------------------------------------------------------------
# exhaustive enumeration

@dataclass(frozen=True)
class EnumerationBudget:
    max_volume: int
    values: tuple     # candidate argument values
    times: tuple      # candidate timestamps (naturals, ascending)


def _compositions(total: int, parts: int):
    """Ordered ways to write total as `parts` positive integers."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def estimate_traces(spec: Spec, budget: EnumerationBudget) -> int:
    universe = sum(len(budget.values) ** a
                   for _, a in spec.signature.relations)
    total = 1  # the empty trace
    for m in range(1, budget.max_volume + 1):
        for p in range(1, min(m, len(budget.times)) + 1):
            times = math.comb(len(budget.times), p)
            for comp in _compositions(m, p):
                prod = 1
                for c in comp:
                    prod *= math.comb(universe, c)
                total += times * prod
    return total


def enumerate_traces(spec: Spec, budget: EnumerationBudget):
    """All canonical traces within budget, ascending by volume."""
    universe = []
    for rel, arity in spec.signature.relations:
        for args in itertools.product(budget.values, repeat=arity):
            universe.append((rel, args))
    times = tuple(sorted(set(budget.times)))
    yield make_trace([])
    for m in range(1, budget.max_volume + 1):
        for p in range(1, min(m, len(times)) + 1):
            for ts in itertools.combinations(times, p):
                for comp in _compositions(m, p):
                    pools = [itertools.combinations(universe, c) for c in comp]
                    for chosen in itertools.product(*pools):
                        yield make_trace(list(zip(ts, chosen)))


def enumerate_check(spec: Spec, budget: EnumerationBudget) -> Verdict:
    """Brute-force minimal counterexample search via the trace evaluator.

    Returns Sat with the (volume-) minimal witness, or BoundedUnsat
    reporting that nothing within the budget works.
    """
    est = estimate_traces(spec, budget)
    if est > 10_000_000:
        raise ValueError(
            f"enumeration budget too large (~{est} traces); shrink it")
    # desugar once so the evaluator stays on the fast core-node path
    reqs = [desugar(f) for _, f in spec.requirements]
    neg_prop = desugar(Not(spec.property))
    checked = 0
    for trace in enumerate_traces(spec, budget):
        checked += 1
        if check_requirements(trace, reqs) is None and evaluate(trace, neg_prop):
            return Sat(trace, volume(trace), {"traces_checked": checked})
    return BoundedUnsat(budget.max_volume, budget.max_volume + 1,
                        {"traces_checked": checked})
