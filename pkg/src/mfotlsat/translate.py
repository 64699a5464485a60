"""Translation of MFOTL into first-order logic over relational objects.

Every relation occurrence becomes a quantified relational object (class,
presence, time, argument attributes).  Temporal operators quantify over
trace *positions*; those position quantifiers are later resolved by the
grounder to times of present objects, so nothing ranges over unrestricted
integers by the time a query reaches the solver.

The output is normalized to negation normal form: negation only appears on
comparisons (as the complementary operator), so all object and position
quantifiers occur positively.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    Add, And, Atom, Const, Eq, ExistsGuarded, FalseF, Formula, Gt, Interval,
    Next, Not, Prev, Scale, Since, Term, TrueF, Until, Var,
)


# ---------------------------------------------------------------------------
# Linear terms over attribute / position symbols

@dataclass(frozen=True)
class Lin:
    """const + sum(coeff * key); keys are ('attr', obj, name) or ('pos', sym)."""

    const: int = 0
    terms: tuple = ()  # sorted tuple of (key, coeff), coeff != 0

    def __str__(self):
        parts = [str(self.const)] if self.const or not self.terms else []
        for key, c in self.terms:
            k = f"{key[1]}.{key[2]}" if key[0] == "attr" else key[1]
            parts.append(k if c == 1 else f"{c}*{k}")
        return " + ".join(parts)


def lin_const(c: int) -> Lin:
    return Lin(c, ())


def lin_key(key) -> Lin:
    return Lin(0, ((key, 1),))


def lin_add(a: Lin, b: Lin) -> Lin:
    acc = dict(a.terms)
    for k, c in b.terms:
        acc[k] = acc.get(k, 0) + c
        if acc[k] == 0:
            del acc[k]
    return Lin(a.const + b.const, tuple(sorted(acc.items())))


def lin_scale(c: int, a: Lin) -> Lin:
    if c == 0:
        return Lin(0, ())
    return Lin(c * a.const, tuple((k, c * x) for k, x in a.terms))


def lin_sub(a: Lin, b: Lin) -> Lin:
    return lin_add(a, lin_scale(-1, b))


def lin_subst(a: Lin, mapping: dict) -> Lin:
    """Replace keys by Lins (used when instantiating quantifiers)."""
    out = lin_const(a.const)
    for k, c in a.terms:
        out = lin_add(out, lin_scale(c, mapping.get(k, lin_key(k))))
    return out


def attr(obj: str, name: str):
    return ("attr", obj, name)


def poskey(sym: str):
    return ("pos", sym)


# ---------------------------------------------------------------------------
# FOL formulas

@dataclass(frozen=True)
class FTrue:
    pass


@dataclass(frozen=True)
class FFalse:
    pass


@dataclass(frozen=True)
class FCmp:
    """lin <op> 0 with op in {=, !=, >, >=, <, <=}."""

    op: str
    lin: Lin


@dataclass(frozen=True)
class FAnd:
    items: tuple


@dataclass(frozen=True)
class FOr:
    items: tuple


@dataclass(frozen=True)
class FNot:
    sub: "Fol"


@dataclass(frozen=True)
class FExistsObj:
    var: str
    cls: str
    body: "Fol"


@dataclass(frozen=True)
class FForallObj:
    var: str
    cls: str
    body: "Fol"


@dataclass(frozen=True)
class FExistsPos:
    sym: str
    body: "Fol"


@dataclass(frozen=True)
class FForallPos:
    sym: str
    body: "Fol"


Fol = object  # union of the above; duck-typed


def fand(items) -> Fol:
    flat = []
    for f in items:
        if isinstance(f, FTrue):
            continue
        if isinstance(f, FFalse):
            return FFalse()
        if isinstance(f, FAnd):
            flat.extend(f.items)
        else:
            flat.append(f)
    if not flat:
        return FTrue()
    if len(flat) == 1:
        return flat[0]
    return FAnd(tuple(flat))


def for_(items) -> Fol:
    flat = []
    for f in items:
        if isinstance(f, FFalse):
            continue
        if isinstance(f, FTrue):
            return FTrue()
        if isinstance(f, FOr):
            flat.extend(f.items)
        else:
            flat.append(f)
    if not flat:
        return FFalse()
    if len(flat) == 1:
        return flat[0]
    return FOr(tuple(flat))


def cmp_(op: str, lin: Lin) -> Fol:
    if not lin.terms:
        v = lin.const
        truth = {"=": v == 0, "!=": v != 0, ">": v > 0,
                 ">=": v >= 0, "<": v < 0, "<=": v <= 0}[op]
        return FTrue() if truth else FFalse()
    return FCmp(op, lin)


_NEG = {"=": "!=", "!=": "=", ">": "<=", "<=": ">", ">=": "<", "<": ">="}


def nnf(f: Fol, neg: bool = False) -> Fol:
    if isinstance(f, FTrue):
        return FFalse() if neg else f
    if isinstance(f, FFalse):
        return FTrue() if neg else f
    if isinstance(f, FCmp):
        return FCmp(_NEG[f.op], f.lin) if neg else f
    if isinstance(f, FNot):
        return nnf(f.sub, not neg)
    if isinstance(f, FAnd):
        items = tuple(nnf(x, neg) for x in f.items)
        return for_(items) if neg else fand(items)
    if isinstance(f, FOr):
        items = tuple(nnf(x, neg) for x in f.items)
        return fand(items) if neg else for_(items)
    if isinstance(f, FExistsObj):
        body = nnf(f.body, neg)
        return FForallObj(f.var, f.cls, body) if neg else FExistsObj(f.var, f.cls, body)
    if isinstance(f, FForallObj):
        body = nnf(f.body, neg)
        return FExistsObj(f.var, f.cls, body) if neg else FForallObj(f.var, f.cls, body)
    if isinstance(f, FExistsPos):
        body = nnf(f.body, neg)
        return FForallPos(f.sym, body) if neg else FExistsPos(f.sym, body)
    if isinstance(f, FForallPos):
        body = nnf(f.body, neg)
        return FExistsPos(f.sym, body) if neg else FForallPos(f.sym, body)
    raise TypeError(f"not a FOL formula: {f!r}")


# ---------------------------------------------------------------------------
# Translation

class TranslationSession:
    """Owns fresh-symbol counters for object variables and position symbols."""

    def __init__(self):
        self._n = 0

    def fresh_obj(self) -> str:
        self._n += 1
        return f"$o{self._n}"

    def fresh_pos(self) -> str:
        self._n += 1
        return f"$u{self._n}"

    # -- terms ------------------------------------------------------------
    def _lin(self, t: Term, env: dict) -> Lin:
        if isinstance(t, Const):
            return lin_const(t.value)
        if isinstance(t, Var):
            if t.name not in env:
                raise ValueError(f"unbound variable {t.name}")
            return env[t.name]
        if isinstance(t, Add):
            return lin_add(self._lin(t.left, env), self._lin(t.right, env))
        if isinstance(t, Scale):
            return lin_scale(t.coeff, self._lin(t.term, env))
        raise TypeError(f"not a term: {t!r}")

    def _interval(self, delta: Lin, iv: Interval):
        out = [cmp_(">=", lin_sub(delta, lin_const(iv.lo)))]
        if iv.hi is not None:
            out.append(cmp_("<=", lin_sub(delta, lin_const(iv.hi))))
        return out

    def translate(self, phi: Formula, at: Lin, env: Optional[dict] = None) -> Fol:
        if env is None:
            env = {}
        return self._tr(phi, at, env)

    def _tr(self, phi: Formula, at: Lin, env: dict) -> Fol:
        if isinstance(phi, TrueF):
            return FTrue()
        if isinstance(phi, FalseF):
            return FFalse()
        if isinstance(phi, Eq):
            return cmp_("=", lin_sub(self._lin(phi.left, env),
                                     self._lin(phi.right, env)))
        if isinstance(phi, Gt):
            return cmp_(">", lin_sub(self._lin(phi.left, env),
                                     self._lin(phi.right, env)))
        if isinstance(phi, Atom):
            o = self.fresh_obj()
            parts = [cmp_("=", lin_sub(lin_key(attr(o, "time")), at))]
            for j, t in enumerate(phi.args, start=1):
                parts.append(cmp_("=", lin_sub(lin_key(attr(o, f"arg_{j}")),
                                               self._lin(t, env))))
            return FExistsObj(o, phi.rel, fand(parts))
        if isinstance(phi, Not):
            return FNot(self._tr(phi.sub, at, env))
        if isinstance(phi, And):
            return fand([self._tr(phi.left, at, env),
                         self._tr(phi.right, at, env)])
        if isinstance(phi, ExistsGuarded):
            o = self.fresh_obj()
            parts = [cmp_("=", lin_sub(lin_key(attr(o, "time")), at))]
            env2 = dict(env)
            seen = set()
            for j, t in enumerate(phi.guard.args, start=1):
                a = lin_key(attr(o, f"arg_{j}"))
                if isinstance(t, Var) and t.name in phi.vars:
                    if t.name in seen:
                        parts.append(cmp_("=", lin_sub(a, env2[t.name])))
                    else:
                        env2[t.name] = a
                        seen.add(t.name)
                else:
                    parts.append(cmp_("=", lin_sub(a, self._lin(t, env))))
            parts.append(self._tr(phi.body, at, env2))
            return FExistsObj(o, phi.guard.rel, fand(parts))
        if isinstance(phi, Until):
            u = self.fresh_pos()
            ul = lin_key(poskey(u))
            parts = [cmp_(">=", lin_sub(ul, at))]
            parts += self._interval(lin_sub(ul, at), phi.interval)
            parts.append(self._tr(phi.right, ul, env))
            if not isinstance(phi.left, TrueF):
                w = self.fresh_pos()
                wl = lin_key(poskey(w))
                in_range = fand([cmp_(">=", lin_sub(wl, at)),
                                 cmp_(">", lin_sub(ul, wl))])
                parts.append(FForallPos(
                    w, for_([FNot(in_range), self._tr(phi.left, wl, env)])))
            return FExistsPos(u, fand(parts))
        if isinstance(phi, Since):
            u = self.fresh_pos()
            ul = lin_key(poskey(u))
            parts = [cmp_(">=", lin_sub(at, ul))]
            parts += self._interval(lin_sub(at, ul), phi.interval)
            parts.append(self._tr(phi.right, ul, env))
            if not isinstance(phi.left, TrueF):
                w = self.fresh_pos()
                wl = lin_key(poskey(w))
                in_range = fand([cmp_(">", lin_sub(wl, ul)),
                                 cmp_(">=", lin_sub(at, wl))])
                parts.append(FForallPos(
                    w, for_([FNot(in_range), self._tr(phi.left, wl, env)])))
            return FExistsPos(u, fand(parts))
        if isinstance(phi, Next):
            u = self.fresh_pos()
            ul = lin_key(poskey(u))
            w = self.fresh_pos()
            wl = lin_key(poskey(w))
            between = fand([cmp_(">", lin_sub(wl, at)),
                            cmp_(">", lin_sub(ul, wl))])
            parts = [cmp_(">", lin_sub(ul, at))]
            parts += self._interval(lin_sub(ul, at), phi.interval)
            parts.append(self._tr(phi.sub, ul, env))
            parts.append(FForallPos(w, FNot(between)))
            return FExistsPos(u, fand(parts))
        if isinstance(phi, Prev):
            u = self.fresh_pos()
            ul = lin_key(poskey(u))
            w = self.fresh_pos()
            wl = lin_key(poskey(w))
            between = fand([cmp_(">", lin_sub(wl, ul)),
                            cmp_(">", lin_sub(at, wl))])
            parts = [cmp_(">", lin_sub(at, ul))]
            parts += self._interval(lin_sub(at, ul), phi.interval)
            parts.append(self._tr(phi.sub, ul, env))
            parts.append(FForallPos(w, FNot(between)))
            return FExistsPos(u, fand(parts))
        raise TypeError(f"formula not desugared: {phi!r}")

    def translate_top(self, phi: Formula) -> Fol:
        """Translate a closed, desugared formula at the trace start (time 0)."""
        return nnf(self.translate(phi, lin_const(0), {}))


# ---------------------------------------------------------------------------
# Debug printing (stable s-expression syntax)

def fol_sexpr(f: Fol) -> str:
    if isinstance(f, FTrue):
        return "true"
    if isinstance(f, FFalse):
        return "false"
    if isinstance(f, FCmp):
        return f"({f.op} {f.lin} 0)"
    if isinstance(f, FNot):
        return f"(not {fol_sexpr(f.sub)})"
    if isinstance(f, FAnd):
        return "(and " + " ".join(fol_sexpr(x) for x in f.items) + ")"
    if isinstance(f, FOr):
        return "(or " + " ".join(fol_sexpr(x) for x in f.items) + ")"
    if isinstance(f, FExistsObj):
        return f"(exists-obj {f.var} {f.cls} {fol_sexpr(f.body)})"
    if isinstance(f, FForallObj):
        return f"(forall-obj {f.var} {f.cls} {fol_sexpr(f.body)})"
    if isinstance(f, FExistsPos):
        return f"(exists-pos {f.sym} {fol_sexpr(f.body)})"
    if isinstance(f, FForallPos):
        return f"(forall-pos {f.sym} {fol_sexpr(f.body)})"
    raise TypeError(f"not a FOL formula: {f!r}")


def translation_size(f: Fol) -> int:
    """Node count, for the linearity check."""
    if isinstance(f, (FTrue, FFalse, FCmp)):
        return 1
    if isinstance(f, FNot):
        return 1 + translation_size(f.sub)
    if isinstance(f, (FAnd, FOr)):
        return 1 + sum(translation_size(x) for x in f.items)
    return 1 + translation_size(f.body)
