"""Grounding of translated FOL into quantifier-free SMT-LIB constraints.

Strategy, for a formula in negation normal form:

* every existential object quantifier creates one fresh relational object
  whose presence is asserted at the use site;
* every universal object quantifier is instantiated over the same-class
  objects of the current domain, guarded by their presence;
* existential position symbols become free integer variables paired with an
  `in trace` marker bool; universal position symbols are instantiated over
  the times of all objects in scope, guarded by presence.

Each quantifier site (per enclosing instantiation context) gets an
activation bool `g` and one-directional definitional clauses `g => ...`;
sites occur positively, so the clause set conjoined with the root expression
is equisatisfiable with the real grounding.  Because clauses are memoized
per (site, context, instantiated object), growing the domain only appends
clauses: the constraint set is monotone and the solver can be fed
incrementally.

The under-approximation adds, per fresh object, the requirement to coincide
with a present same-class domain object (NoNewR), plus: every `in trace`
position equals some present object's time, and nonempty models contain a
present object at time 0 (trace normalization).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import (
    And, Atom, DataConstraint, Eq, FalseF, Formula, Gt, Implies, Not, Or,
    Signature, TrueF, Var, Const, Add, Scale,
)
from .translate import (
    FAnd, FCmp, FExistsObj, FExistsPos, FFalse, FForallObj, FForallPos,
    FNot, FOr, FTrue, Fol, Lin, lin_key,
)


@dataclass(frozen=True)
class ObjectVar:
    """A relational object: presence bool, time int, argument ints."""

    id: str       # "<class>#<counter>"
    cls: str
    arity: int
    base: str     # SMT symbol prefix

    @property
    def p(self) -> str:
        return f"{self.base}_p"

    @property
    def t(self) -> str:
        return f"{self.base}_t"

    def arg(self, j: int) -> str:
        return f"{self.base}_a{j}"

    def attr_sym(self, name: str) -> str:
        if name == "time":
            return self.t
        if name.startswith("arg_"):
            return self.arg(int(name[4:]))
        raise KeyError(name)


class Domain:
    """Ordered set of relational objects (the maintained under-approximation
    of the full bounded domain)."""

    def __init__(self):
        self.objects = []
        self.ids = set()
        self._by_class = {}

    def add(self, obj: ObjectVar):
        if obj.id in self.ids:
            raise ValueError(f"duplicate domain object {obj.id}")
        self.objects.append(obj)
        self.ids.add(obj.id)
        self._by_class.setdefault(obj.cls, []).append(obj)

    def by_class(self, cls: str):
        return self._by_class.get(cls, [])

    def __len__(self):
        return len(self.objects)

    def __contains__(self, obj):
        return obj.id in self.ids


@dataclass
class GroundedQuery:
    root: str                 # quantifier-free sexpr to assert
    clauses: tuple            # definitional clause sexprs (root not included)
    declarations: tuple       # (declare-const ...) sexprs
    new_objects: tuple        # ObjectVars outside the domain
    pos_syms: tuple           # existential position symbol names
    provenance: dict          # clause sexpr -> source tag


# ---------------------------------------------------------------------------
# sexpr helpers

def _lin_sexpr(lin: Lin, env: dict) -> str:
    terms = {}
    const = lin.const

    def acc(sym, c):
        terms[sym] = terms.get(sym, 0) + c

    def walk(l: Lin, scale: int):
        nonlocal const
        for key, c in l.terms:
            c *= scale
            if key[0] == "attr":
                obj = env.get(key[1])
                if not isinstance(obj, ObjectVar):
                    raise KeyError(f"unbound object variable {key[1]}")
                acc(obj.attr_sym(key[2]), c)
            elif key[0] == "pos":
                sub = env.get(key[1])
                if isinstance(sub, Lin):
                    const += c * sub.const
                    walk(sub, c)
                elif isinstance(sub, str):
                    acc(sub, c)
                else:
                    raise KeyError(f"unbound position symbol {key[1]}")
            elif key[0] == "sym":
                acc(key[1], c)
            else:
                raise KeyError(f"unknown key {key!r}")

    walk(Lin(0, lin.terms), 1)
    parts = []
    for sym in sorted(terms):
        c = terms[sym]
        if c == 0:
            continue
        if c == 1:
            parts.append(sym)
        else:
            parts.append(f"(* {_int(c)} {sym})")
    if const or not parts:
        parts.append(_int(const))
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def _int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


_OPS = {"=": "=", ">": ">", ">=": ">=", "<": "<", "<=": "<="}


def _cmp_sexpr(op: str, lin: Lin, env: dict) -> str:
    e = _lin_sexpr(lin, env)
    if op == "!=":
        return f"(not (= {e} 0))"
    return f"({_OPS[op]} {e} 0)"


def sand(items) -> str:
    items = [x for x in items if x != "true"]
    if any(x == "false" for x in items):
        return "false"
    if not items:
        return "true"
    if len(items) == 1:
        return items[0]
    return f"(and {' '.join(items)})"


def sor(items) -> str:
    items = [x for x in items if x != "false"]
    if any(x == "true" for x in items):
        return "true"
    if not items:
        return "false"
    if len(items) == 1:
        return items[0]
    return f"(or {' '.join(items)})"


def simplies(a: str, b: str) -> str:
    if a == "true":
        return b
    if b == "true" or a == "false":
        return "true"
    return f"(=> {a} {b})"


def snot(a: str) -> str:
    if a == "true":
        return "false"
    if a == "false":
        return "true"
    return f"(not {a})"


# ---------------------------------------------------------------------------
# position anchoredness

def _pos_anchored(f: Fol, sym: str, scope) -> bool:
    """Does f, wherever its truth is actually demanded, force a present
    object whose time equals the position sym?

    `scope` is the set of object variables whose presence is guarded on
    every path that demands f (enclosing existential witnesses and
    universal instantiation guards).  Anchored positions need no
    membership witness: the body itself supplies the trace atom.
    """
    if isinstance(f, FFalse):
        return True
    if isinstance(f, FCmp):
        if f.op != "=" or f.lin.const != 0 or len(f.lin.terms) != 2:
            return False
        (k1, c1), (k2, c2) = f.lin.terms
        if {c1, c2} != {1, -1}:
            return False
        ka, kp = (k1, k2) if k1[0] == "attr" else (k2, k1)
        return (ka[0] == "attr" and ka[2] == "time" and ka[1] in scope
                and kp == ("pos", sym))
    if isinstance(f, FAnd):
        return any(_pos_anchored(x, sym, scope) for x in f.items)
    if isinstance(f, FOr):
        return all(_pos_anchored(x, sym, scope) for x in f.items)
    if isinstance(f, FExistsObj):
        return _pos_anchored(f.body, sym, scope | {f.var})
    return False


# ---------------------------------------------------------------------------
# data-constraint templates

def template_sexpr(f: Formula, symmap: dict) -> str:
    """Serialize a quantifier-free formula; variables resolve via symmap."""

    def term(t):
        if isinstance(t, Const):
            return _int(t.value)
        if isinstance(t, Var):
            return symmap[t.name]
        if isinstance(t, Add):
            return f"(+ {term(t.left)} {term(t.right)})"
        if isinstance(t, Scale):
            return f"(* {_int(t.coeff)} {term(t.term)})"
        raise TypeError(f"not a term: {t!r}")

    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Eq):
        return f"(= {term(f.left)} {term(f.right)})"
    if isinstance(f, Gt):
        return f"(> {term(f.left)} {term(f.right)})"
    if isinstance(f, Not):
        return snot(template_sexpr(f.sub, symmap))
    if isinstance(f, And):
        return sand([template_sexpr(f.left, symmap),
                     template_sexpr(f.right, symmap)])
    if isinstance(f, Or):
        return sor([template_sexpr(f.left, symmap),
                    template_sexpr(f.right, symmap)])
    if isinstance(f, Implies):
        return simplies(template_sexpr(f.left, symmap),
                        template_sexpr(f.right, symmap))
    raise TypeError(f"data template must be quantifier-free: {f!r}")


# ---------------------------------------------------------------------------
# the grounding session

class GroundingSession:
    """Owns fresh names, the memoized clause store, and the object registry.

    Reusing one session across search iterations makes grounding incremental:
    `drain()` yields only declarations and clauses added since the last call.
    """

    def __init__(self, signature: Signature, data_constraints=()):
        self.signature = signature
        self.data = {}
        for dc in data_constraints:
            self.data.setdefault(dc.cls, []).append(dc.template)
        self.objects = []          # all session ObjectVars, creation order
        self._counter = 0
        self._act_counter = 0
        self._pos_counter = 0
        self.pos_syms = []         # existential position symbols, in order
        self._def_syms = {}        # semantic key -> defined helper bool
        self._def_counter = 0
        self._exists_memo = {}     # (site, ctx) -> ObjectVar
        self._pos_memo = {}        # (site, ctx) -> pos symbol
        self._act_memo = {}        # (site, ctx) -> activation bool
        self._emitted = set()      # clause keys already emitted
        self.clauses = []          # all clause sexprs, emission order
        self.declarations = []     # all declaration sexprs, emission order
        self.provenance = {}
        self._drained_clauses = 0
        self._drained_decls = 0
        self._tag = None
        self._roots = []           # grounded formulas, kept alive (site ids)
        # one permanently unconstrained object per class: quantifier
        # witnesses can end up pinned away from the trace start, so these
        # keep the start-at-zero normalization (and hence volume lower
        # bounds) satisfiable by models that represent only part of a trace
        self.slack_objects = tuple(
            self._new_object(cls) for cls, _ in signature.relations)

    # -- fresh symbols ----------------------------------------------------
    def _new_object(self, cls: str) -> ObjectVar:
        arity = self.signature.arity(cls)
        if arity is None:
            raise ValueError(f"unknown relation class {cls}")
        self._counter += 1
        obj = ObjectVar(id=f"{cls}#{self._counter}", cls=cls, arity=arity,
                        base=f"ro{self._counter}_{cls}")
        self.objects.append(obj)
        self._declare(f"(declare-const {obj.p} Bool)")
        self._declare(f"(declare-const {obj.t} Int)")
        for j in range(1, arity + 1):
            self._declare(f"(declare-const {obj.arg(j)} Int)")
        self._clause(("obj", obj.id, "time"), f"(>= {obj.t} 0)")
        symmap = {"time": obj.t}
        symmap.update({f"arg_{j}": obj.arg(j) for j in range(1, arity + 1)})
        for k, tmpl in enumerate(self.data.get(cls, [])):
            self._clause(("obj", obj.id, "data", k),
                         simplies(obj.p, template_sexpr(tmpl, symmap)))
        return obj

    def _new_act(self) -> str:
        self._act_counter += 1
        g = f"g{self._act_counter}"
        self._declare(f"(declare-const {g} Bool)")
        return g

    def _new_pos(self) -> str:
        self._pos_counter += 1
        ps = f"ps{self._pos_counter}"
        self._declare(f"(declare-const {ps} Int)")
        self._declare(f"(declare-const {ps}_in Bool)")
        self.pos_syms.append(ps)
        return ps

    def _declare(self, d: str):
        self.declarations.append(d)

    def _def_sym(self, key, prefix: str, sexpr: str) -> str:
        """Helper bool defined equal to sexpr, emitted once per key.

        Side conditions rebuilt every iteration (NoNewR, normalization)
        refer to these symbols so their text stays small as the session
        grows."""
        sym = self._def_syms.get(key)
        if sym is None:
            self._def_counter += 1
            sym = f"{prefix}{self._def_counter}"
            self._def_syms[key] = sym
            self._declare(f"(declare-const {sym} Bool)")
            self._clause(("defsym", sym), f"(= {sym} {sexpr})")
        return sym

    def _clause(self, key, sexpr: str):
        if key in self._emitted:
            return
        self._emitted.add(key)
        self.clauses.append(sexpr)
        if self._tag is not None:
            self.provenance[sexpr] = self._tag

    # -- grounding --------------------------------------------------------
    def ground(self, phi: Fol, dom: Domain, tag: Optional[str] = None) -> str:
        """Emit clauses for phi under the domain; return the root expression.

        Re-grounding the same formula after the domain grew emits only the
        new universal instantiations; the returned root is unchanged.
        """
        self._tag = tag
        self._roots.append(phi)  # site identity is id-based; keep trees alive
        try:
            return self._emit(phi, (), {}, dom)
        finally:
            self._tag = None

    def make_domain_object(self, cls: str) -> ObjectVar:
        """Create an object intended to be added to a Domain directly
        (declarations are emitted; attributes stay free)."""
        return self._new_object(cls)

    def _emit(self, f: Fol, ctx, env: dict, dom: Domain) -> str:
        if isinstance(f, FTrue):
            return "true"
        if isinstance(f, FFalse):
            return "false"
        if isinstance(f, FCmp):
            return _cmp_sexpr(f.op, f.lin, env)
        if isinstance(f, FNot):
            if not isinstance(f.sub, (FCmp, FTrue, FFalse)):
                raise ValueError("grounding input must be in NNF")
            return snot(self._emit(f.sub, ctx, env, dom))
        if isinstance(f, FAnd):
            return sand([self._emit(x, ctx, env, dom) for x in f.items])
        if isinstance(f, FOr):
            return sor([self._emit(x, ctx, env, dom) for x in f.items])
        if isinstance(f, FExistsObj):
            key = (id(f), ctx)
            fresh = key not in self._exists_memo
            if fresh:
                self._exists_memo[key] = (self._new_object(f.cls),
                                          self._new_act())
            obj, g = self._exists_memo[key]
            env2 = dict(env)
            env2[f.var] = obj
            body = self._emit(f.body, ctx, env2, dom)
            self._clause(("def", g), simplies(g, sand([obj.p, body])))
            return g
        if isinstance(f, FForallObj):
            key = (id(f), ctx)
            if key not in self._act_memo:
                self._act_memo[key] = self._new_act()
            g = self._act_memo[key]
            for r in dom.by_class(f.cls):
                env2 = dict(env)
                env2[f.var] = r
                body = self._emit(f.body, ctx + ((id(f), r.id),), env2, dom)
                self._clause(("inst", id(f), ctx, r.id),
                             simplies(g, simplies(r.p, body)))
            return g
        if isinstance(f, FExistsPos):
            key = (id(f), ctx)
            fresh = key not in self._pos_memo
            if fresh:
                ps, g = self._new_pos(), self._new_act()
                self._pos_memo[key] = (ps, g)
                if not _pos_anchored(f.body, f.sym, set(env)):
                    # a used position is a real trace position: some object
                    # (a dedicated per-class witness, or anything coinciding
                    # with one) must be present at that time; anchored bodies
                    # already force an object at ps and need no witness
                    wits = [self._new_object(cls)
                            for cls, _ in self.signature.relations]
                    member = sor([sand([w.p, f"(= {ps} {w.t})"])
                                  for w in wits])
                    self._clause(("member", ps),
                                 simplies(f"{ps}_in", member))
            ps, g = self._pos_memo[key]
            env2 = dict(env)
            env2[f.sym] = ps
            body = self._emit(f.body, ctx, env2, dom)
            self._clause(("def", g), simplies(g, sand([f"{ps}_in", body])))
            return g
        if isinstance(f, FForallPos):
            key = (id(f), ctx)
            if key not in self._act_memo:
                self._act_memo[key] = self._new_act()
            g = self._act_memo[key]
            for r in dom.objects:
                env2 = dict(env)
                env2[f.sym] = lin_key(("sym", r.t))
                body = self._emit(f.body, ctx + ((id(f), r.id),), env2, dom)
                self._clause(("inst", id(f), ctx, r.id),
                             simplies(g, simplies(r.p, body)))
            return g
        raise TypeError(f"not a FOL formula: {f!r}")

    # -- incremental draining --------------------------------------------
    def drain(self):
        """Declarations and clauses added since the previous drain."""
        decls = self.declarations[self._drained_decls:]
        clauses = self.clauses[self._drained_clauses:]
        self._drained_decls = len(self.declarations)
        self._drained_clauses = len(self.clauses)
        return decls, clauses

    # -- under-approximation side conditions ------------------------------
    def new_objects(self, dom: Domain):
        return [o for o in self.objects if o.id not in dom.ids]

    def no_new_r(self, dom: Domain):
        """Per fresh object: presence implies coincidence with a present
        same-class domain object.  List of constraint sexprs."""
        out = []
        for n in self.new_objects(dom):
            matches = []
            for r in dom.by_class(n.cls):
                eqs = [r.p, f"(= {n.t} {r.t})"]
                eqs += [f"(= {n.arg(j)} {r.arg(j)})"
                        for j in range(1, n.arity + 1)]
                matches.append(self._def_sym(("match", n.id, r.id), "mt",
                                             sand(eqs)))
            out.append(simplies(n.p, sor(matches)))
        return out

    def pos_membership(self):
        """Every marked-in-trace position equals some present object's time."""
        out = []
        for ps in self.pos_syms:
            alts = [sand([o.p, f"(= {ps} {o.t})"]) for o in self.objects]
            out.append(simplies(f"{ps}_in", sor(alts)))
        return out

    def start_at_zero(self):
        """Nonempty models are normalized to start at time 0."""
        if not self.objects:
            return "true"
        empty = None
        for i, o in enumerate(self.objects):
            step = snot(o.p) if empty is None else sand([empty, snot(o.p)])
            empty = self._def_sym(("absent", i), "ab", step)
        zero = [self._def_sym(("zero", o.id), "zr",
                              sand([o.p, f"(= {o.t} 0)"]))
                for o in self.objects]
        return sor([empty] + zero)


# ---------------------------------------------------------------------------
# one-shot convenience API (used by the oracle and the lemma tests)

def ground(phi: Fol, dom: Domain, signature: Signature,
           data_constraints=(), session: Optional[GroundingSession] = None,
           ) -> GroundedQuery:
    """Over-approximation query for phi under the domain."""
    s = session or GroundingSession(signature, data_constraints)
    root = s.ground(phi, dom)
    return GroundedQuery(
        root=sand([root, s.start_at_zero()]),
        clauses=tuple(s.clauses),
        declarations=tuple(s.declarations),
        new_objects=tuple(s.new_objects(dom)),
        pos_syms=tuple(s.pos_syms),
        provenance=dict(s.provenance))


def under_approx(phi: Fol, dom: Domain, signature: Signature,
                 data_constraints=(), session: Optional[GroundingSession] = None,
                 ) -> GroundedQuery:
    """Over-approximation plus NoNewR and position-membership constraints."""
    s = session or GroundingSession(signature, data_constraints)
    root = s.ground(phi, dom)
    side = s.no_new_r(dom) + s.pos_membership() + [s.start_at_zero()]
    return GroundedQuery(
        root=sand([root] + side),
        clauses=tuple(s.clauses),
        declarations=tuple(s.declarations),
        new_objects=tuple(s.new_objects(dom)),
        pos_syms=tuple(s.pos_syms),
        provenance=dict(s.provenance))
