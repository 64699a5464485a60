"""Parser for the textual specification format.

A spec file has named sections::

    signature {
      relation Collect/2;
      const WEEK = 168;
    }
    requirements {
      req0: ALWAYS (FORALL d, v . Access(d,v) -> ONCE[360,) EXISTS v2 . Collect(d,v2));
    }
    property {
      P1: ...;
    }
    data {
      Collect: arg_2 >= 0;
    }
    bound 10;

Formulas use ASCII keywords.  Operator precedence, tightest first:
NOT, unary temporal (NEXT/PREV/EVENTUALLY/ALWAYS/ONCE), AND, OR, ->,
UNTIL/SINCE, quantifiers.  `#` starts a line comment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import core
from .core import (
    Add, Always, And, Atom, Const, DataConstraint, Eq, Eventually, Exists,
    FalseF, Forall, Formula, Gt, Implies, Interval, Next, Not, Once, Or,
    Prev, Scale, Signature, Since, Spec, TrueF, Until, Var, validate,
    validate_spec,
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan, expected=()):
        self.span = span
        self.expected = tuple(expected)
        where = f"{span.file}:{span.line}:{span.column}"
        hint = f" (expected {', '.join(self.expected)})" if expected else ""
        super().__init__(f"{where}: {message}{hint}")


KEYWORDS = {
    "TRUE", "FALSE", "NOT", "AND", "OR", "EXISTS", "FORALL",
    "UNTIL", "SINCE", "NEXT", "PREV", "EVENTUALLY", "ALWAYS", "ONCE",
}

SYMBOLS = ["->", ">=", "<=", "!=", "(", ")", "[", "]", "{", "}",
           ",", ";", ".", ":", "/", "=", ">", "<", "+", "-", "*"]


@dataclass(frozen=True)
class Token:
    kind: str  # 'name', 'int', 'sym', 'kw', 'eof'
    text: str
    span: SourceSpan


def tokenize(text: str, filename: str = "<spec>") -> list:
    toks = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        span = SourceSpan(filename, line, col, 1)
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j],
                              SourceSpan(filename, line, col, j - i)))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "kw" if word in KEYWORDS else "name"
            toks.append(Token(kind, word, SourceSpan(filename, line, col, j - i)))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("sym", sym,
                                  SourceSpan(filename, line, col, len(sym))))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", span)
    toks.append(Token("eof", "", SourceSpan(filename, line, col, 0)))
    return toks


class _Parser:
    def __init__(self, toks, sig: Optional[Signature]):
        self.toks = toks
        self.pos = 0
        self.sig = sig

    # -- token plumbing ---------------------------------------------------
    def peek(self, ahead=0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def at(self, kind, text=None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind, text=None) -> Token:
        if not self.at(kind, text):
            t = self.peek()
            want = text if text is not None else kind
            raise ParseError(f"unexpected {t.text!r}", t.span, expected=[want])
        return self.next()

    def fail(self, message, expected=()):
        raise ParseError(message, self.peek().span, expected)

    # -- formulas ---------------------------------------------------------
    def formula(self) -> Formula:
        return self.quantified()

    def quantified(self) -> Formula:
        if self.at("kw", "EXISTS") or self.at("kw", "FORALL"):
            kw = self.next().text
            names = [self.expect("name").text]
            while self.at("sym", ","):
                self.next()
                names.append(self.expect("name").text)
            self.expect("sym", ".")
            body = self.quantified()
            node = Exists if kw == "EXISTS" else Forall
            return node(tuple(names), body)
        return self.until_chain()

    def until_chain(self) -> Formula:
        f = self.implication()
        while self.at("kw", "UNTIL") or self.at("kw", "SINCE"):
            kw = self.next().text
            iv = self.opt_interval()
            rhs = self.implication()
            node = Until if kw == "UNTIL" else Since
            f = node(f, rhs, iv)
        return f

    def opt_interval(self) -> Interval:
        if not self.at("sym", "["):
            return core.FULL
        self.next()
        lo_tok = self.expect("int")
        self.expect("sym", ",")
        if self.at("sym", ")"):
            self.next()
            hi = None
        else:
            hi_tok = self.expect("int")
            self.expect("sym", "]")
            hi = int(hi_tok.text)
        try:
            return Interval(int(lo_tok.text), hi)
        except ValueError as e:
            raise ParseError(str(e), lo_tok.span)

    def implication(self) -> Formula:
        f = self.disjunction()
        if self.at("sym", "->"):
            self.next()
            return Implies(f, self.implication())
        return f

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.at("kw", "OR"):
            self.next()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.at("kw", "AND"):
            self.next()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        if self.at("kw", "NOT"):
            self.next()
            return Not(self.unary())
        for kw, node in (("NEXT", Next), ("PREV", Prev),
                         ("EVENTUALLY", Eventually), ("ALWAYS", Always),
                         ("ONCE", Once)):
            if self.at("kw", kw):
                self.next()
                iv = self.opt_interval()
                return node(self.unary(), iv)
        return self.primary()

    def primary(self) -> Formula:
        if self.at("kw", "TRUE"):
            self.next()
            return TrueF()
        if self.at("kw", "FALSE"):
            self.next()
            return FalseF()
        if self.at("sym", "("):
            # could be a parenthesized formula or a parenthesized term
            # starting a comparison; try the comparison reading first
            mark = self.pos
            try:
                return self.comparison()
            except ParseError:
                self.pos = mark
            self.next()
            f = self.formula()
            self.expect("sym", ")")
            return f
        if self.at("name"):
            if self.peek(1).kind == "sym" and self.peek(1).text == "(" \
                    and (self.sig is None or
                         self.sig.arity(self.peek().text) is not None):
                return self.atom()
            return self.comparison()
        if self.at("int") or self.at("sym", "-"):
            return self.comparison()
        self.fail("expected formula")

    def atom(self) -> Formula:
        name = self.expect("name").text
        self.expect("sym", "(")
        args = [self.term()]
        while self.at("sym", ","):
            self.next()
            args.append(self.term())
        self.expect("sym", ")")
        return Atom(name, tuple(args))

    def comparison(self) -> Formula:
        lhs = self.term()
        ops = {"=", "!=", ">", "<", ">=", "<="}
        t = self.peek()
        if t.kind != "sym" or t.text not in ops:
            self.fail("expected comparison operator", expected=sorted(ops))
        op = self.next().text
        rhs = self.term()
        if op == "=":
            return Eq(lhs, rhs)
        if op == "!=":
            return Not(Eq(lhs, rhs))
        if op == ">":
            return Gt(lhs, rhs)
        if op == "<":
            return Gt(rhs, lhs)
        if op == ">=":
            return Not(Gt(rhs, lhs))
        return Not(Gt(lhs, rhs))  # <=

    # -- terms ------------------------------------------------------------
    def term(self):
        t = self.mul_term()
        while self.at("sym", "+") or self.at("sym", "-"):
            op = self.next().text
            rhs = self.mul_term()
            t = Add(t, rhs if op == "+" else Scale(-1, rhs))
        return t

    def mul_term(self):
        if self.at("int") and self.peek(1).kind == "sym" \
                and self.peek(1).text == "*":
            coeff = int(self.next().text)
            self.next()
            return Scale(coeff, self.factor())
        return self.factor()

    def factor(self):
        if self.at("sym", "-"):
            self.next()
            return Scale(-1, self.factor())
        if self.at("int"):
            return Const(int(self.next().text))
        if self.at("sym", "("):
            self.next()
            t = self.term()
            self.expect("sym", ")")
            return t
        if self.at("name"):
            name = self.next().text
            if self.sig is not None:
                v = self.sig.constant(name)
                if v is not None:
                    return Const(v)
            return Var(name)
        self.fail("expected term")

    # -- spec file --------------------------------------------------------
    def spec(self) -> Spec:
        signature = None
        requirements = []
        prop = None
        prop_name = "property"
        data = []
        bound = None
        if self.at("eof"):
            self.fail("expected signature declaration",
                      expected=["signature"])
        while not self.at("eof"):
            t = self.expect("name")
            if t.text == "signature":
                signature = self.signature_section()
                self.sig = signature
            elif t.text == "requirements":
                if signature is None:
                    raise ParseError("signature must come first", t.span)
                requirements.extend(self.named_section())
            elif t.text == "property":
                if signature is None:
                    raise ParseError("signature must come first", t.span)
                entries = self.named_section()
                if len(entries) != 1:
                    raise ParseError("property section needs exactly one formula",
                                     t.span)
                prop_name, prop = entries[0]
            elif t.text == "data":
                if signature is None:
                    raise ParseError("signature must come first", t.span)
                data.extend(self.data_section())
            elif t.text == "bound":
                if self.at("name", "unbounded"):
                    self.next()
                    bound = None
                else:
                    bound = int(self.expect("int").text)
                self.expect("sym", ";")
            else:
                raise ParseError(
                    f"unknown section {t.text!r}", t.span,
                    expected=["signature", "requirements", "property",
                              "data", "bound"])
        if signature is None:
            self.fail("expected signature declaration", expected=["signature"])
        if prop is None:
            self.fail("spec has no property section", expected=["property"])
        return Spec(signature=signature,
                    requirements=tuple(requirements),
                    property=prop, property_name=prop_name,
                    data_constraints=tuple(data),
                    default_bound=bound)

    def signature_section(self) -> Signature:
        self.expect("sym", "{")
        relations = []
        constants = []
        while not self.at("sym", "}"):
            t = self.expect("name")
            if t.text == "relation":
                name = self.expect("name").text
                self.expect("sym", "/")
                arity = int(self.expect("int").text)
                relations.append((name, arity))
            elif t.text == "const":
                name = self.expect("name").text
                self.expect("sym", "=")
                neg = False
                if self.at("sym", "-"):
                    self.next()
                    neg = True
                value = int(self.expect("int").text)
                constants.append((name, -value if neg else value))
            else:
                raise ParseError(f"unknown declaration {t.text!r}", t.span,
                                 expected=["relation", "const"])
            self.expect("sym", ";")
        self.next()
        return Signature(tuple(relations), tuple(constants))

    def named_section(self):
        self.expect("sym", "{")
        entries = []
        while not self.at("sym", "}"):
            name = self.expect("name").text
            self.expect("sym", ":")
            f = self.formula()
            self.expect("sym", ";")
            entries.append((name, f))
        self.next()
        return entries

    def data_section(self):
        self.expect("sym", "{")
        entries = []
        while not self.at("sym", "}"):
            cls = self.expect("name").text
            self.expect("sym", ":")
            f = self.formula()
            self.expect("sym", ";")
            entries.append(DataConstraint(cls, f))
        self.next()
        return entries


def parse_formula(text: str, sig: Signature, filename: str = "<formula>") -> Formula:
    p = _Parser(tokenize(text, filename), sig)
    f = p.formula()
    p.expect("eof")
    return f


def parse_spec(text: str, filename: str = "<spec>") -> Spec:
    p = _Parser(tokenize(text, filename), None)
    spec = p.spec()
    diags = validate_spec(spec)
    if diags:
        raise ParseError("; ".join(diags),
                         SourceSpan(filename, 1, 1, 0))
    return spec


def pretty_print(f: Formula) -> str:
    """Concrete syntax; parse_formula(pretty_print(f)) == f for parsed ASTs."""
    return str(f)
