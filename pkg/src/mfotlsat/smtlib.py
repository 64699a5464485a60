"""Process-based SMT solver client (SMT-LIB 2.6 over stdin/stdout).

Queries are quantifier-free linear integer arithmetic plus booleans.  The
client keeps a persistent solver process, tracks the assertion stack, uses
`check-sat-assuming` with positive label booleans (so unsat cores are plain
label sets), and parses models from `get-model`.

Solver discovery order: explicit command, the MFOTLSAT_SOLVER environment
variable, `z3` or `cvc5` on PATH, then the bundled Node.js z3 wrapper.
"""

from __future__ import annotations

import os
import select
import shlex
import shutil
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .grounding import GroundedQuery
from .traces import Trace, make_trace


class SolverError(Exception):
    pass


class SolverUnknown(Exception):
    """Timeout or solver-reported unknown; never mapped to a verdict."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class Sat:
    model: dict


@dataclass(frozen=True)
class Unsat:
    core: frozenset


@dataclass(frozen=True)
class Unknown:
    reason: str


# ---------------------------------------------------------------------------
# s-expression parsing (solver responses)

def parse_sexpr(text: str):
    toks = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def rd():
        nonlocal pos
        t = toks[pos]
        pos += 1
        if t == "(":
            out = []
            while toks[pos] != ")":
                out.append(rd())
            pos += 1
            return out
        return t

    out = rd()
    if pos != len(toks):
        raise SolverError(f"trailing tokens in solver response: {text!r}")
    return out


def _model_value(v):
    if v == "true":
        return True
    if v == "false":
        return False
    if isinstance(v, list) and len(v) == 2 and v[0] == "-":
        return -int(v[1])
    return int(v)


def parse_model(text: str) -> dict:
    node = parse_sexpr(text)
    if node and node[0] == "model":  # older response shape
        node = node[1:]
    out = {}
    for entry in node:
        if isinstance(entry, list) and entry and entry[0] == "define-fun":
            name, params, _sort, value = entry[1], entry[2], entry[3], entry[4]
            if params == []:
                out[name] = _model_value(value)
    return out


# ---------------------------------------------------------------------------
# solver discovery

def wrapper_dir() -> Path:
    return Path(__file__).parent / "solverwrap"


def ensure_bundled_solver() -> list:
    d = wrapper_dir()
    node = shutil.which("node")
    if node is None:
        raise SolverError(
            "no SMT solver found: install z3/cvc5 or Node.js for the bundled solver")
    if not (d / "node_modules" / "z3-solver").exists():
        proc = subprocess.run(
            ["npm", "install", "--no-audit", "--no-fund"], cwd=d,
            capture_output=True, text=True)
        if proc.returncode != 0:
            raise SolverError(
                f"npm install for the bundled solver failed:\n{proc.stderr}")
    return [node, str(d / "smtlib_z3.mjs")]


def default_solver_command(explicit: Optional[str] = None) -> list:
    if explicit:
        return shlex.split(explicit)
    env = os.environ.get("MFOTLSAT_SOLVER")
    if env:
        return shlex.split(env)
    z3 = shutil.which("z3")
    if z3:
        return [z3, "-in"]
    cvc5 = shutil.which("cvc5")
    if cvc5:
        return [cvc5, "--incremental", "--produce-models",
                "--produce-unsat-cores"]
    return ensure_bundled_solver()


# ---------------------------------------------------------------------------
# the solver handle

class SolverHandle:
    def __init__(self, command: list, seed: int = 0, timeout: float = 60.0):
        self.command = list(command)
        self.seed = seed
        self.timeout = timeout
        self.stack_depth = 0
        self.declared = set()
        self._label_counter = 0
        self._assume_memo = {}
        self._buf = b""
        # the bundled wrapper frames responses in STX/ETX so stray prints
        # from the wasm runtime's threads can be discarded
        self._framed = bool(command) and str(command[-1]).endswith("smtlib_z3.mjs")
        self.proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL)
        self._prelude()

    # -- low-level protocol ----------------------------------------------
    def _write(self, line: str):
        if self.proc.poll() is not None:
            raise SolverError("solver process died")
        self.proc.stdin.write((line + "\n").encode())
        self.proc.stdin.flush()

    def _read_unit(self, deadline: float) -> str:
        extract = _extract_framed if self._framed else _extract_unit
        while True:
            unit, rest = extract(self._buf)
            if unit is not None:
                self._buf = rest
                return unit.decode()
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise SolverUnknown("client-side timeout waiting for solver")
            fd = self.proc.stdout.fileno()
            ready, _, _ = select.select([fd], [], [], min(remaining, 1.0))
            if not ready:
                continue
            data = os.read(fd, 1 << 16)
            if not data:
                raise SolverError("solver closed its output stream")
            self._buf += data

    def _cmd(self, line: str, tolerate_error: bool = False) -> str:
        self._write(line)
        resp = self._read_unit(time.monotonic() + self.timeout + 5.0)
        if resp.startswith("(error"):
            if tolerate_error:
                return resp
            raise SolverError(f"solver error for {line!r}: {resp}")
        return resp

    def _prelude(self):
        ms = int(self.timeout * 1000)
        self._cmd("(set-option :print-success true)")
        self._cmd("(set-option :produce-models true)")
        self._cmd("(set-option :produce-unsat-cores true)")
        if self._framed:
            # the wasm build parses all commands as one cumulative stream,
            # and an erroring command corrupts that stream; send only
            # options z3 accepts
            self._cmd(f"(set-option :smt.random_seed {self.seed})")
            self._cmd(f"(set-option :sat.random_seed {self.seed})")
            self._cmd(f"(set-option :timeout {ms})")
            return
        # solver-specific options may be unsupported; ignore complaints
        self._cmd(f"(set-option :smt.random_seed {self.seed})", tolerate_error=True)
        self._cmd(f"(set-option :sat.random_seed {self.seed})", tolerate_error=True)
        self._cmd(f"(set-option :seed {self.seed})", tolerate_error=True)
        self._cmd(f"(set-option :timeout {ms})", tolerate_error=True)
        self._cmd(f"(set-option :tlimit-per {ms})", tolerate_error=True)

    # -- public API -------------------------------------------------------
    def declare(self, sexpr: str):
        name = sexpr.split()[1]
        if name in self.declared:
            raise SolverError(f"symbol {name} declared twice")
        self.declared.add(name)
        self._expect_success(sexpr)

    def assert_(self, sexpr: str):
        self._expect_success(f"(assert {sexpr})")

    def assume(self, sexpr: str, prefix: str = "lbl") -> str:
        """Assumption label implying the constraint; returns the label
        (to pass into check) — its truth is only forced when assumed.
        Repeating the same constraint reuses the existing label."""
        key = (prefix, sexpr)
        name = self._assume_memo.get(key)
        if name is not None:
            return name
        self._label_counter += 1
        name = f"{prefix}{self._label_counter}"
        self.declare(f"(declare-const {name} Bool)")
        self.assert_(f"(=> {name} {sexpr})")
        self._assume_memo[key] = name
        return name

    def _expect_success(self, line: str):
        resp = self._cmd(line)
        if resp != "success":
            raise SolverError(f"protocol desync: {line!r} answered {resp!r}")

    def push(self):
        self._expect_success("(push 1)")
        self.stack_depth += 1

    def pop(self):
        if self.stack_depth == 0:
            raise SolverError("pop on empty assertion stack")
        self._expect_success("(pop 1)")
        self.stack_depth -= 1

    def check(self, assumptions=()) -> str:
        if assumptions:
            self._write(f"(check-sat-assuming ({' '.join(assumptions)}))")
        else:
            self._write("(check-sat)")
        resp = self._read_unit(time.monotonic() + self.timeout + 5.0)
        if resp not in ("sat", "unsat", "unknown"):
            raise SolverError(f"unexpected check-sat answer: {resp!r}")
        return resp

    def model(self) -> dict:
        return parse_model(self._cmd("(get-model)"))

    def unsat_core(self) -> frozenset:
        node = parse_sexpr(self._cmd("(get-unsat-core)"))
        return frozenset(x for x in node if isinstance(x, str))

    def reset(self):
        self._expect_success("(reset)")
        self.stack_depth = 0
        self.declared = set()
        self._label_counter = 0
        self._assume_memo = {}
        self._prelude()

    def alive(self) -> bool:
        return self.proc.poll() is None

    def close(self):
        try:
            if self.alive():
                self._write("(exit)")
                self.proc.wait(timeout=5)
        except Exception:
            self.proc.kill()
        finally:
            if self.proc.stdin:
                self.proc.stdin.close()
            if self.proc.stdout:
                self.proc.stdout.close()


def _extract_framed(buf: bytes):
    """First STX..ETX frame; bytes outside frames are solver chatter."""
    start = buf.find(b"\x02")
    if start < 0:
        return None, b""  # nothing but chatter so far
    end = buf.find(b"\x03", start)
    if end < 0:
        return None, buf[start:]
    return buf[start + 1 : end].strip(), buf[end + 1 :]


def _extract_unit(buf: bytes):
    """First complete response unit (atom line or balanced s-expr)."""
    i = 0
    n = len(buf)
    while i < n and buf[i] in b" \t\r\n":
        i += 1
    if i == n:
        return None, buf
    if buf[i : i + 1] == b"(":
        depth = 0
        in_str = False
        for j in range(i, n):
            c = buf[j : j + 1]
            if in_str:
                if c == b'"':
                    in_str = False
                continue
            if c == b'"':
                in_str = True
            elif c == b"(":
                depth += 1
            elif c == b")":
                depth -= 1
                if depth == 0:
                    return buf[i : j + 1], buf[j + 1 :]
        return None, buf
    # atom: complete once a whitespace terminator is present
    for j in range(i, n):
        if buf[j] in b" \t\r\n":
            return buf[i:j], buf[j:]
    return None, buf


# ---------------------------------------------------------------------------
# process reuse

_POOL: dict = {}


def pooled_solver(command: list, seed: int = 0, timeout: float = 60.0,
                  fresh: bool = False) -> SolverHandle:
    """One persistent process per solver command, reset between uses.

    Callers own the handle until the next pooled_solver call with the same
    command; searches are single-threaded, so this is a plain cache.
    """
    key = tuple(command)
    h = _POOL.get(key)
    if h is not None and h.alive() and not fresh:
        h.seed = seed
        h.timeout = timeout
        try:
            h.reset()
            return h
        except (SolverError, SolverUnknown):
            h.close()
    h = SolverHandle(command, seed=seed, timeout=timeout)
    _POOL[key] = h
    return h


# ---------------------------------------------------------------------------
# one-shot solving and trace decoding

def solve(query: GroundedQuery, handle: SolverHandle,
          assumptions=()) -> "Sat | Unsat | Unknown":
    """Assert a grounded query on a fresh stack frame and check it.

    `assumptions` are (label, constraint-sexpr) pairs; labels go into
    check-sat-assuming so they can show up in unsat cores.
    """
    # declarations go below the push so they survive the pop (the declared-
    # name tracking in the handle is not stack-aware)
    for d in query.declarations:
        name = d.split()[1]
        if name not in handle.declared:
            handle.declare(d)
    for label, _ in assumptions:
        if label not in handle.declared:
            handle.declare(f"(declare-const {label} Bool)")
    handle.push()
    try:
        for c in query.clauses:
            handle.assert_(c)
        handle.assert_(query.root)
        labels = []
        for label, sexpr in assumptions:
            handle.assert_(f"(=> {label} {sexpr})")
            labels.append(label)
        try:
            res = handle.check(labels)
        except SolverUnknown as e:
            return Unknown(e.reason)
        if res == "sat":
            return Sat(handle.model())
        if res == "unsat":
            return Unsat(handle.unsat_core() if labels else frozenset())
        return Unknown("solver answered unknown")
    finally:
        handle.pop()


def decode_trace(model: dict, objects) -> Trace:
    """Present objects grouped by time into a canonical trace."""
    by_time: dict = {}
    for o in objects:
        if not model.get(o.p, False):
            continue
        t = model.get(o.t, 0)
        args = tuple(model.get(o.arg(j), 0) for j in range(1, o.arity + 1))
        by_time.setdefault(t, set()).add((o.cls, args))
    return make_trace(sorted(
        (t, sorted(atoms)) for t, atoms in by_time.items()))
