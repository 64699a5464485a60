"""Core MFOTL data model: intervals, signatures, terms, formulas.

The formula AST has two layers.  The core constructors (TrueF, FalseF, Eq,
Gt, Atom, Not, And, ExistsGuarded, Until, Since, Next, Prev) are what the
translator and evaluator consume.  On top of that sit derived forms
(Or, Implies, Forall, Exists, Eventually, Always, Once) which `desugar`
rewrites away.  Quantified variables must be guarded: each one has to occur
as a direct argument of a positive relational atom in its scope, and
`desugar` extracts that atom into the ExistsGuarded node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


# ---------------------------------------------------------------------------
# Intervals

INF = None  # upper bound +infinity is encoded as None


@dataclass(frozen=True)
class Interval:
    """Closed metric interval [lo, hi]; hi=None means unbounded above."""

    lo: int
    hi: Optional[int] = INF

    def __post_init__(self):
        if self.lo < 0:
            raise ValueError("interval bound must be a natural number")
        if self.hi is not None and self.hi < self.lo:
            raise ValueError(f"empty interval [{self.lo},{self.hi}]")

    def contains(self, d: int) -> bool:
        return self.lo <= d and (self.hi is None or d <= self.hi)

    def __str__(self):
        hi = ")" if self.hi is None else f"{self.hi}]"
        return f"[{self.lo},{hi}"


FULL = Interval(0, INF)


# ---------------------------------------------------------------------------
# Signatures

@dataclass(frozen=True)
class Signature:
    """Relation names with arities plus named integer constants."""

    relations: tuple  # of (name, arity)
    constants: tuple = ()  # of (name, value)

    def __post_init__(self):
        names = [r for r, _ in self.relations]
        if len(set(names)) != len(names):
            raise ValueError("duplicate relation name")
        for r, a in self.relations:
            if a < 1:
                raise ValueError(f"relation {r} must have arity >= 1")

    def arity(self, rel: str) -> Optional[int]:
        for r, a in self.relations:
            if r == rel:
                return a
        return None

    def constant(self, name: str) -> Optional[int]:
        for n, v in self.constants:
            if n == name:
                return v
        return None


# ---------------------------------------------------------------------------
# Terms (linear integer terms)

@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"

    def __str__(self):
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class Scale:
    coeff: int
    term: "Term"

    def __str__(self):
        return f"({self.coeff} * {self.term})"


Term = Union[Const, Var, Add, Scale]


def term_vars(t: Term) -> set:
    if isinstance(t, Const):
        return set()
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Add):
        return term_vars(t.left) | term_vars(t.right)
    if isinstance(t, Scale):
        return term_vars(t.term)
    raise TypeError(f"not a term: {t!r}")


def subst_term(t: Term, env: dict) -> Term:
    """Substitute terms for variable names."""
    if isinstance(t, Const):
        return t
    if isinstance(t, Var):
        return env.get(t.name, t)
    if isinstance(t, Add):
        return Add(subst_term(t.left, env), subst_term(t.right, env))
    if isinstance(t, Scale):
        return Scale(t.coeff, subst_term(t.term, env))
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Formulas

@dataclass(frozen=True)
class TrueF:
    def __str__(self):
        return "TRUE"


@dataclass(frozen=True)
class FalseF:
    def __str__(self):
        return "FALSE"


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term

    def __str__(self):
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class Gt:
    left: Term
    right: Term

    def __str__(self):
        return f"{self.left} > {self.right}"


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple  # of Term

    def __str__(self):
        return f"{self.rel}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class Not:
    sub: "Formula"

    def __str__(self):
        return f"(NOT {self.sub})"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} AND {self.right})"


@dataclass(frozen=True)
class ExistsGuarded:
    """Core quantifier: EXISTS vars bound by one positive guard atom.

    Semantics: some guard-relation atom holds at the current position whose
    argument values extend the valuation at the quantified variables, and the
    body holds under that extension.  The guard atom is *not* repeated in the
    body.
    """

    vars: tuple  # of variable names, each occurring directly in guard.args
    guard: Atom
    body: "Formula"

    def __str__(self):
        vs = ", ".join(self.vars)
        return f"(EXISTS {vs} . ({self.guard} AND {self.body}))"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"
    interval: Interval = FULL

    def __str__(self):
        return f"({self.left} UNTIL{self.interval} {self.right})"


@dataclass(frozen=True)
class Since:
    left: "Formula"
    right: "Formula"
    interval: Interval = FULL

    def __str__(self):
        return f"({self.left} SINCE{self.interval} {self.right})"


@dataclass(frozen=True)
class Next:
    sub: "Formula"
    interval: Interval = FULL

    def __str__(self):
        return f"(NEXT{self.interval} {self.sub})"


@dataclass(frozen=True)
class Prev:
    sub: "Formula"
    interval: Interval = FULL

    def __str__(self):
        return f"(PREV{self.interval} {self.sub})"


# Derived forms, eliminated by desugar.

@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} OR {self.right})"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} -> {self.right})"


@dataclass(frozen=True)
class Exists:
    """Surface quantifier before guard extraction."""

    vars: tuple
    body: "Formula"

    def __str__(self):
        return f"(EXISTS {', '.join(self.vars)} . {self.body})"


@dataclass(frozen=True)
class Forall:
    vars: tuple
    body: "Formula"

    def __str__(self):
        return f"(FORALL {', '.join(self.vars)} . {self.body})"


@dataclass(frozen=True)
class Eventually:
    sub: "Formula"
    interval: Interval = FULL

    def __str__(self):
        return f"(EVENTUALLY{self.interval} {self.sub})"


@dataclass(frozen=True)
class Always:
    sub: "Formula"
    interval: Interval = FULL

    def __str__(self):
        return f"(ALWAYS{self.interval} {self.sub})"


@dataclass(frozen=True)
class Once:
    sub: "Formula"
    interval: Interval = FULL

    def __str__(self):
        return f"(ONCE{self.interval} {self.sub})"


Formula = Union[
    TrueF, FalseF, Eq, Gt, Atom, Not, And, ExistsGuarded,
    Until, Since, Next, Prev,
    Or, Implies, Exists, Forall, Eventually, Always, Once,
]

CORE_NODES = (TrueF, FalseF, Eq, Gt, Atom, Not, And, ExistsGuarded,
              Until, Since, Next, Prev)


# ---------------------------------------------------------------------------
# Data constraints and specs

@dataclass(frozen=True)
class DataConstraint:
    """Per-class template constraining one object's time and arguments.

    The template is a quantifier-free Formula over the reserved variables
    `time` and `arg_1`..`arg_k` (k = arity of the class) and constants.
    """

    cls: str
    template: Formula


@dataclass(frozen=True)
class Spec:
    signature: Signature
    requirements: tuple  # of (name, Formula), order matters
    property: Formula
    property_name: str = "property"
    data_constraints: tuple = ()  # of DataConstraint
    default_bound: Optional[int] = None  # None = unbounded


# ---------------------------------------------------------------------------
# Traversal helpers

def free_vars(f: Formula) -> set:
    if isinstance(f, (TrueF, FalseF)):
        return set()
    if isinstance(f, (Eq, Gt)):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, Atom):
        out = set()
        for a in f.args:
            out |= term_vars(a)
        return out
    if isinstance(f, (Not, Next, Prev, Eventually, Always, Once)):
        return free_vars(f.sub)
    if isinstance(f, (And, Or, Implies, Until, Since)):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, ExistsGuarded):
        return (free_vars(f.guard) | free_vars(f.body)) - set(f.vars)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - set(f.vars)
    raise TypeError(f"not a formula: {f!r}")


def subst(f: Formula, env: dict) -> Formula:
    """Capture-avoiding substitution of terms for free variables.

    Substituted terms must not mention bound variables of f (holds for all
    internal uses, which substitute fresh symbols or ground terms).
    """
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Eq):
        return Eq(subst_term(f.left, env), subst_term(f.right, env))
    if isinstance(f, Gt):
        return Gt(subst_term(f.left, env), subst_term(f.right, env))
    if isinstance(f, Atom):
        return Atom(f.rel, tuple(subst_term(a, env) for a in f.args))
    if isinstance(f, Not):
        return Not(subst(f.sub, env))
    if isinstance(f, And):
        return And(subst(f.left, env), subst(f.right, env))
    if isinstance(f, Or):
        return Or(subst(f.left, env), subst(f.right, env))
    if isinstance(f, Implies):
        return Implies(subst(f.left, env), subst(f.right, env))
    if isinstance(f, (Until, Since)):
        return type(f)(subst(f.left, env), subst(f.right, env), f.interval)
    if isinstance(f, (Next, Prev, Eventually, Always, Once)):
        return type(f)(subst(f.sub, env), f.interval)
    if isinstance(f, ExistsGuarded):
        inner = {k: v for k, v in env.items() if k not in f.vars}
        return ExistsGuarded(f.vars, subst(f.guard, inner), subst(f.body, inner))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in env.items() if k not in f.vars}
        return type(f)(f.vars, subst(f.body, inner))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Guard extraction

class GuardError(Exception):
    def __init__(self, vars, context):
        self.vars = tuple(vars)
        self.context = context
        super().__init__(
            f"unguarded quantified variable(s) {', '.join(self.vars)} in {context}")


def _atom_direct_vars(a: Atom) -> set:
    return {t.name for t in a.args if isinstance(t, Var)}


def _find_guard(f: Formula, want: set):
    """Leftmost positive atom reachable through AND only that mentions a
    wanted variable directly.  Returns (atom, formula-with-it-removed)."""
    if isinstance(f, Atom) and (_atom_direct_vars(f) & want):
        return f, TrueF()
    if isinstance(f, And):
        got = _find_guard(f.left, want)
        if got:
            atom, rest = got
            return atom, f.right if isinstance(rest, TrueF) else And(rest, f.right)
        got = _find_guard(f.right, want)
        if got:
            atom, rest = got
            return atom, And(f.left, rest)
        return None
    return None


def _find_branch_point(f: Formula):
    """Outermost OR / -> reachable through AND, as (left-variant, right-variant)."""
    if isinstance(f, Or):
        return f.left, f.right
    if isinstance(f, Implies):
        return Not(f.left), f.right
    if isinstance(f, And):
        got = _find_branch_point(f.left)
        if got:
            return And(got[0], f.right), And(got[1], f.right)
        got = _find_branch_point(f.right)
        if got:
            return And(f.left, got[0]), And(f.left, got[1])
    return None


def bind_guarded(vars, body: Formula) -> Formula:
    """Turn EXISTS vars . body into ExistsGuarded core nodes.

    Distributes the quantifier over disjunctive structure when the guard
    atom differs between branches.  Raises GuardError when some variable has
    no positive guard atom.
    """
    vars = tuple(v for v in vars if v in free_vars(body))
    if not vars:
        return body
    got = _find_guard(body, set(vars))
    if got:
        guard, rest = got
        covered = tuple(v for v in vars if v in _atom_direct_vars(guard))
        remaining = tuple(v for v in vars if v not in covered)
        return ExistsGuarded(covered, guard, bind_guarded(remaining, rest))
    split = _find_branch_point(body)
    if split is None:
        raise GuardError(vars, body)
    return Or(bind_guarded(vars, split[0]), bind_guarded(vars, split[1]))


# ---------------------------------------------------------------------------
# Desugaring

TOP = TrueF()


def desugar(f: Formula) -> Formula:
    """Rewrite to core constructors only.  Idempotent."""
    if isinstance(f, (TrueF, FalseF, Eq, Gt, Atom)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.sub))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Not(And(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return Not(And(desugar(f.left), Not(desugar(f.right))))
    if isinstance(f, ExistsGuarded):
        return ExistsGuarded(f.vars, f.guard, desugar(f.body))
    if isinstance(f, Exists):
        return desugar(bind_guarded(f.vars, f.body))
    if isinstance(f, Forall):
        if isinstance(f.body, Implies):
            inner = And(f.body.left, Not(f.body.right))
        else:
            inner = Not(f.body)
        return Not(desugar(bind_guarded(f.vars, inner)))
    if isinstance(f, Until):
        return Until(desugar(f.left), desugar(f.right), f.interval)
    if isinstance(f, Since):
        return Since(desugar(f.left), desugar(f.right), f.interval)
    if isinstance(f, Next):
        return Next(desugar(f.sub), f.interval)
    if isinstance(f, Prev):
        return Prev(desugar(f.sub), f.interval)
    if isinstance(f, Eventually):
        return Until(TOP, desugar(f.sub), f.interval)
    if isinstance(f, Always):
        return Not(Until(TOP, Not(desugar(f.sub)), f.interval))
    if isinstance(f, Once):
        return Since(TOP, desugar(f.sub), f.interval)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Validation

def validate(f: Formula, sig: Signature) -> list:
    """Static checks: arity, closedness, guardedness.  Empty list = valid."""
    diags = []

    def atoms_ok(g: Formula):
        if isinstance(g, Atom):
            a = sig.arity(g.rel)
            if a is None:
                diags.append(f"unknown relation {g.rel} in {g}")
            elif a != len(g.args):
                diags.append(
                    f"arity mismatch: {g.rel} declared /{a}, used /{len(g.args)} in {g}")
        elif isinstance(g, (Not, Next, Prev, Eventually, Always, Once)):
            atoms_ok(g.sub)
        elif isinstance(g, (And, Or, Implies, Until, Since)):
            atoms_ok(g.left)
            atoms_ok(g.right)
        elif isinstance(g, ExistsGuarded):
            atoms_ok(g.guard)
            atoms_ok(g.body)
        elif isinstance(g, (Exists, Forall)):
            atoms_ok(g.body)

    atoms_ok(f)
    for v in sorted(free_vars(f)):
        diags.append(f"free variable {v}")
    if not diags:
        try:
            desugar(f)
        except GuardError as e:
            diags.append(f"unguarded quantifier: {e}")
    return diags


def validate_spec(spec: Spec) -> list:
    diags = []
    for name, req in spec.requirements:
        diags += [f"{name}: {d}" for d in validate(req, spec.signature)]
    diags += [f"{spec.property_name}: {d}"
              for d in validate(spec.property, spec.signature)]
    for dc in spec.data_constraints:
        arity = spec.signature.arity(dc.cls)
        if arity is None:
            diags.append(f"data constraint on unknown relation {dc.cls}")
            continue
        allowed = {"time"} | {f"arg_{i}" for i in range(1, arity + 1)}
        bad = free_vars(dc.template) - allowed
        for v in sorted(bad):
            diags.append(f"data constraint on {dc.cls}: unknown attribute {v}")
    return diags
