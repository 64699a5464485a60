"""Bounded satisfiability search over an incrementally grown object domain.

The loop alternates two solver views of the same constraint store:

* the **over-approximation** — definitional clauses plus the activated
  requirement/property roots; UNSAT here refutes the spec outright;
* the **under-approximation** — the same store plus assumption-guarded
  side conditions forcing every model to decode into a real trace over the
  current domain; SAT here yields a counterexample candidate.

A candidate that violates a not-yet-activated requirement teaches a lesson
(the requirement joins the active set); an under-approximation failure
triggers exact presence-count minimization of the over-approximation, and
the minimal model's fresh objects are promoted into the domain.  Minimal
volumes are monotone across iterations, so exceeding the volume bound
permanently refutes it; the search then continues uncapped, ending in
UNSAT (over-approximation refuted) or bounded-UNSAT (a counterexample
exists, but only above the bound).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import Formula, Not, Spec, desugar
from .grounding import Domain, GroundingSession
from .smtlib import (
    SolverHandle, SolverUnknown, default_solver_command, decode_trace,
)
from .traces import Trace, check_requirements, evaluate, volume
from .translate import TranslationSession


class InconclusiveError(Exception):
    """Solver unknown/timeout or iteration-limit exhaustion."""

    def __init__(self, reason: str, stats: Optional[dict] = None):
        self.reason = reason
        self.stats = stats or {}
        super().__init__(reason)


@dataclass(frozen=True)
class Sat:
    trace: Trace
    volume: int
    stats: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Unsat:
    stats: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class BoundedUnsat:
    bound: int
    min_volume_lower_bound: int
    stats: dict = field(default_factory=dict, compare=False)


Verdict = object  # Sat | Unsat | BoundedUnsat

OPTIMAL = "optimal"
GREEDY = "greedy"


def count_sexpr(indicators) -> str:
    """Number of true indicator terms as a LIA term."""
    if not indicators:
        return "0"
    terms = [f"(ite {x} 1 0)" for x in indicators]
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


def leader_term(obj, earlier) -> str:
    """Indicator that `obj` contributes a distinct atom: present, and no
    object in `earlier` carries the same class, time, and arguments."""
    dups = []
    for q in earlier:
        if q.cls != obj.cls:
            continue
        eqs = [q.p, f"(= {obj.t} {q.t})"]
        eqs += [f"(= {obj.arg(j)} {q.arg(j)})"
                for j in range(1, obj.arity + 1)]
        dups.append(f"(and {' '.join(eqs)})")
    if not dups:
        return obj.p
    dup = dups[0] if len(dups) == 1 else f"(or {' '.join(dups)})"
    return f"(and {obj.p} (not {dup}))"


def atom_leaders(objects) -> list:
    """One indicator per object; their sum is the volume of the decoded
    trace — two present objects with equal class, time, and arguments
    decode to a single atom."""
    return [leader_term(o, objects[:i]) for i, o in enumerate(objects)]


def minimize_count(handle: SolverHandle, indicators, fixed=(),
                   stats: Optional[dict] = None) -> dict:
    """Model of the asserted constraints (plus `fixed` assumption labels)
    with the fewest true indicators; exact minimum.

    Core-guided: all indicators start assumed-off; each UNSAT core relaxes
    its members into a cardinality-counted set whose bound grows by one per
    round, so the first SAT answer is optimal.
    """
    soft = {handle.assume(f"(not {x})", "sft"): x for x in indicators}
    relaxed = []
    k = 0
    while True:
        if stats is not None:
            stats["minimize_rounds"] = stats.get("minimize_rounds", 0) + 1
        assumptions = list(fixed) + [l for l in soft if l not in relaxed]
        crd = None
        if relaxed:
            card = f"(<= {count_sexpr([soft[l] for l in relaxed])} {k})"
            crd = handle.assume(card, "crd")
            assumptions.append(crd)
        try:
            res = handle.check(assumptions)
        except SolverUnknown as e:
            raise InconclusiveError(e.reason, stats or {})
        if res == "unknown":
            raise InconclusiveError("solver answered unknown", stats or {})
        if res == "sat":
            return handle.model()
        core = handle.unsat_core()
        newly = [l for l in soft if l in core and l not in relaxed]
        if not newly and (crd is None or crd not in core):
            raise AssertionError(
                "minimization precondition violated: query unsatisfiable "
                "regardless of the minimized indicators")
        relaxed.extend(newly)
        k += 1


def minimize_presences(handle: SolverHandle, objects, fixed=(),
                       stats: Optional[dict] = None) -> dict:
    """Model with the fewest present objects among `objects` (exact)."""
    return minimize_count(handle, [o.p for o in objects], fixed, stats)


class _Search:
    def __init__(self, spec: Spec, bound: Optional[int], mode: str,
                 handle: SolverHandle, callback=None,
                 max_iterations: int = 10000):
        if mode not in (OPTIMAL, GREEDY):
            raise ValueError(f"unknown search mode {mode!r}")
        self.spec = spec
        self.bound = bound
        self.mode = mode
        self.handle = handle
        self.callback = callback
        self.max_iterations = max_iterations

        ts = TranslationSession()
        self.prop_neg = desugar(Not(spec.property))
        self.prop_fol = ts.translate_top(self.prop_neg)
        self.req_formulas = [desugar(f) for _, f in spec.requirements]
        self.req_names = [name for name, _ in spec.requirements]
        self.req_fols = [ts.translate_top(f) for f in self.req_formulas]
        self.active = []  # indices into requirements, activation order

        self.gs = GroundingSession(spec.signature, spec.data_constraints)
        self.dom = Domain()
        self._asserted_roots = set()
        self._leader_syms = {}  # object id -> defined leader symbol
        self.stats = {
            "iterations": 0, "solver_checks": 0, "lessons": 0,
            "domain_size": 0, "minimize_rounds": 0,
        }
        self._last_min_volume = 0
        self._exceeded = False  # bound refuted; searching on uncapped

    # -- solver plumbing ---------------------------------------------------
    def _sync(self):
        decls, clauses = self.gs.drain()
        for d in decls:
            self.handle.declare(d)
        for c in clauses:
            self.handle.assert_(c)

    def _leaders(self, objects) -> list:
        """Defined leader symbols for `objects` (see atom_leaders).

        Each symbol is declared and defined once; the definition only
        references earlier objects, so it is stable as the object list
        grows.
        """
        all_objs = self.gs.objects
        for i, o in enumerate(all_objs):
            if o.id in self._leader_syms:
                continue
            sym = f"ld{i + 1}"
            self._leader_syms[o.id] = sym
            self.handle.declare(f"(declare-const {sym} Bool)")
            self.handle.assert_(f"(= {sym} {leader_term(o, all_objs[:i])})")
            # running count of distinct atoms, for the volume cap
            step = f"(ite {sym} 1 0)"
            if i:
                step = f"(+ lc{i} {step})"
            self.handle.declare(f"(declare-const lc{i + 1} Int)")
            self.handle.assert_(f"(= lc{i + 1} {step})")
        return [self._leader_syms[o.id] for o in objects]

    def _check(self, assumptions) -> str:
        self.stats["solver_checks"] += 1
        try:
            res = self.handle.check(assumptions)
        except SolverUnknown as e:
            raise InconclusiveError(e.reason, self.stats)
        if res == "unknown":
            raise InconclusiveError("solver answered unknown", self.stats)
        return res

    # -- grounding per iteration ------------------------------------------
    def _ground_active(self):
        roots = [self.gs.ground(self.prop_fol, self.dom, tag="property")]
        for i in self.active:
            roots.append(self.gs.ground(self.req_fols[i], self.dom,
                                        tag=self.req_names[i]))
        self._sync()
        for r in roots:
            if r not in self._asserted_roots:
                self._asserted_roots.add(r)
                self.handle.assert_(r)

    def _iteration_assumptions(self):
        """(base, under) assumption label lists for this iteration.

        `base` is the over-approximation (start-at-zero only, sound
        thanks to the session's slack objects); the under-approximation
        adds the new-object matching constraints and the volume cap.
        """
        zero = self.gs.start_at_zero()
        no_new = [s for s in self.gs.no_new_r(self.dom) if s != "true"]
        self._sync()  # helper symbols minted by the side conditions
        base = [self.handle.assume(zero, "nz")] if zero != "true" else []
        under = list(base)
        under += [self.handle.assume(s, "nu") for s in no_new]
        if self.bound is not None and not self._exceeded and self.gs.objects:
            self._leaders(self.gs.objects)
            card = f"(<= lc{len(self.gs.objects)} {self.bound})"
            under.append(self.handle.assume(card, "nb"))
        return base, under

    def _minimize(self, indicators, fixed) -> dict:
        before = self.stats["minimize_rounds"]
        model = minimize_count(self.handle, indicators, fixed, self.stats)
        self.stats["solver_checks"] += self.stats["minimize_rounds"] - before
        return model

    def _expansion_candidates(self, model, fixed):
        """New objects to promote after an under-approximation failure.

        The minimal over-approximation model usually already mentions fresh
        objects.  When it does not, re-solve with at least one fresh object
        forced present.
        """
        new = self.gs.new_objects(self.dom)
        present = [o for o in new if model.get(o.p, False)]
        # prefer objects carrying distinct atoms; present duplicates can
        # satisfy NoNewR by matching the promoted leader
        promoted = [o for o in present
                    if model.get(self._leader_syms.get(o.id), True)]
        if promoted or present:
            return promoted or present
        if not new:
            # every existential witness is already in the domain; the failure
            # needs an extra trace position, so mint one free object per
            # relation class to carry it
            return [self.gs.make_domain_object(cls)
                    for cls, _ in self.spec.signature.relations]
        force = self.handle.assume(
            f"(or {' '.join(o.p for o in new)})" if len(new) > 1 else new[0].p,
            "nf")
        if self._check(list(fixed) + [force]) != "sat":
            raise InconclusiveError(
                "cannot extend the object domain: no over-approximation "
                "model reaches outside it", self.stats)
        retry = self._minimize(self._leaders(self.gs.objects),
                               list(fixed) + [force])
        promoted = [o for o in new if retry.get(o.p, False)]
        assert promoted, "forced-presence model mentions no fresh object"
        return promoted

    # -- verdict helpers ---------------------------------------------------
    def _decode(self, model: dict) -> Trace:
        return decode_trace(model, self.gs.objects)

    def _soundness_assert(self, trace: Trace):
        if not evaluate(trace, self.prop_neg):
            raise AssertionError(
                "unsound candidate: decoded trace satisfies the property")
        for i in self.active:
            if not evaluate(trace, self.req_formulas[i]):
                raise AssertionError(
                    f"unsound candidate: decoded trace violates active "
                    f"requirement {self.req_names[i]}")

    # -- the loop ----------------------------------------------------------
    def run(self) -> Verdict:
        while self.stats["iterations"] < self.max_iterations:
            self.stats["iterations"] += 1
            self._ground_active()
            base, under = self._iteration_assumptions()

            if self._check(base) == "unsat":
                self.stats["domain_size"] = len(self.dom)
                return Unsat(dict(self.stats))

            if self._check(under) == "sat":
                minimized = (self.gs.new_objects(self.dom)
                             if self.mode == GREEDY else self.gs.objects)
                model = self._minimize(self._leaders(minimized), under)
                trace = self._decode(model)
                self._soundness_assert(trace)
                if check_requirements(trace, self.req_formulas) is None:
                    self.stats["domain_size"] = len(self.dom)
                    if self._exceeded:
                        # genuine counterexample, but over the refuted
                        # bound: report the certified lower bound
                        return BoundedUnsat(self.bound,
                                            self._last_min_volume,
                                            dict(self.stats))
                    return Sat(trace, volume(trace), dict(self.stats))
                idx = next(i for i, f in enumerate(self.req_formulas)
                           if not evaluate(trace, f))
                if idx in self.active:
                    raise AssertionError(
                        f"requirement {self.req_names[idx]} violated while "
                        "already enforced by the under-approximation")
                self.active.append(idx)
                self.stats["lessons"] += 1
                self._report(len(self.dom), None)
                continue

            # under-approximation unsatisfiable: minimize the
            # over-approximation for the volume lower bound, then expand
            # the domain from a model that reaches outside it
            model = self._minimize(self._leaders(self.gs.objects), base)
            v = volume(self._decode(model))
            if v < self._last_min_volume:
                raise AssertionError(
                    f"minimal volume decreased across iterations "
                    f"({self._last_min_volume} -> {v})")
            self._last_min_volume = v
            if self.bound is not None and v > self.bound:
                # the bound is refuted, but further lessons and domain
                # growth can still refute the spec outright, upgrading
                # bounded-UNSAT to full UNSAT; drop the volume cap and
                # keep searching until the over-approximation is UNSAT
                # or a genuine (over-bound) counterexample appears
                self._exceeded = True
                trace = self._decode(model)
                idx = next((i for i, f in enumerate(self.req_formulas)
                            if i not in self.active
                            and not evaluate(trace, f)), None)
                if idx is not None:
                    self.active.append(idx)
                    self.stats["lessons"] += 1
                    self._report(len(self.dom), v)
                    continue
            # second stage: fewest presences among the volume-minimal
            # models, so only forced witnesses remain present and the
            # promotion below stays small and targeted
            cap = self.handle.assume(f"(<= lc{len(self.gs.objects)} {v})",
                                     "nc")
            model = self._minimize([o.p for o in self.gs.objects],
                                   list(base) + [cap])
            promoted = self._expansion_candidates(model, list(base) + [cap])
            for o in promoted:
                self.dom.add(o)
            self._report(len(self.dom), v)
        raise InconclusiveError(
            f"no verdict within {self.max_iterations} iterations", self.stats)

    def _report(self, domain_size: int, min_volume):
        if self.callback is not None:
            self.callback({
                "iteration": self.stats["iterations"],
                "domain_size": domain_size,
                "active_requirements": [self.req_names[i] for i in self.active],
                "min_volume": min_volume,
            })


def check(spec: Spec, bound: Optional[int] = None, mode: str = OPTIMAL,
          solver: Optional[str] = None, seed: int = 0, timeout: float = 60.0,
          callback: Optional[Callable[[dict], None]] = None,
          max_iterations: int = 10000,
          handle: Optional[SolverHandle] = None) -> Verdict:
    """Search for a minimal-volume counterexample to the spec's property.

    `bound=None` means unbounded search (guarded by `max_iterations`).
    Returns Sat / Unsat / BoundedUnsat; solver trouble raises
    InconclusiveError rather than producing a verdict.

    In optimal mode a Sat verdict is certified minimal by continuing the
    same search with the bound lowered to one below the witness volume,
    until that bound is refuted.  The session (domain, lessons, learned
    clauses) carries over, so certification only pays for the delta.
    """
    own = None
    if handle is None:
        handle = own = SolverHandle(default_solver_command(solver), seed=seed,
                                    timeout=timeout)
    try:
        searcher = _Search(spec, bound, mode, handle, callback=callback,
                           max_iterations=max_iterations)
        verdict = searcher.run()
        certify_runs = 0
        while (mode == OPTIMAL and isinstance(verdict, Sat)
               and verdict.volume > 0):
            searcher.bound = verdict.volume - 1
            certify_runs += 1
            probe = searcher.run()
            if isinstance(probe, BoundedUnsat):
                break
            if isinstance(probe, Unsat):
                raise AssertionError(
                    "probe refuted the specification although a "
                    "counterexample is in hand")
            verdict = probe
        if certify_runs:
            verdict = Sat(verdict.trace, verdict.volume,
                          dict(verdict.stats, certify_runs=certify_runs))
        return verdict
    finally:
        if own is not None:
            own.close()
