"""Minimal SMT-LIB v2 REPL over the package's MILP engine.

Run as ``python -m atomc._smtlib_server``.  Reads commands from stdin and
answers on stdout, covering the fragment this package emits (QF_LIA with
booleans): declare-const, assert, push/pop, check-sat, check-sat-assuming,
get-value, reset, exit.  It exists so the SMT-LIB pipe backend has a working
peer on hosts without an external SMT solver; any conforming solver can take
its place.
"""

from __future__ import annotations

import sys

from .errors import BackendError
from .smt import (AND, EQ, LE, GE, LT, GT, NE, IMP, NOT, OR, BoolVar, Cmp,
                  IntVar, LinExpr, Lit, MilpBackend, lin)

_BIG = 1 << 20  # default Int domain until bound asserts arrive


def _tokenize(stream) -> "iterator of str":
    buf = ""
    depth = 0
    while True:
        ch = stream.read(1)
        if ch == "":
            return
        buf += ch
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                yield buf.strip()
                buf = ""
        elif depth == 0:
            buf = ""  # stray bytes between commands


def _parse(text: str):
    toks = text.replace("(", " ( ").replace(")", " ) ").split()

    def walk(pos: int):
        if toks[pos] == "(":
            items = []
            pos += 1
            while toks[pos] != ")":
                node, pos = walk(pos)
                items.append(node)
            return items, pos + 1
        return toks[pos], pos + 1

    tree, _ = walk(0)
    return tree


class Session:
    def __init__(self):
        self.reset()

    def reset(self):
        self.backend = MilpBackend()
        self.vars: dict[str, IntVar | BoolVar] = {}
        self.timeout_ms: int | None = None

    # -- term translation

    def _lin(self, node) -> LinExpr:
        if isinstance(node, str):
            if node.lstrip("-").isdigit():
                return lin(int(node))
            v = self.vars[node]
            return lin(v)
        head = node[0]
        if head == "+":
            out = lin(0)
            for item in node[1:]:
                out = out + self._lin(item)
            return out
        if head == "-":
            if len(node) == 2:
                return lin(0) - self._lin(node[1])
            out = self._lin(node[1])
            for item in node[2:]:
                out = out - self._lin(item)
            return out
        if head == "*":
            a, b = node[1], node[2]
            if isinstance(a, str) and a.lstrip("-").isdigit():
                scale, expr = int(a), self._lin(b)
            elif isinstance(b, str) and b.lstrip("-").isdigit():
                scale, expr = int(b), self._lin(a)
            else:
                raise BackendError("only constant multiplication supported")
            return LinExpr(tuple((scale * k, v) for k, v in expr.terms),
                           scale * expr.const)
        if head == "ite":
            cond = self._formula(node[1])
            if isinstance(cond, Lit) and node[2] == "1" and node[3] == "0":
                if cond.neg:
                    return lin(1) - lin(cond.var)
                return lin(cond.var)
            raise BackendError("only (ite <bool> 1 0) supported in arithmetic")
        raise BackendError(f"unsupported arithmetic head {head!r}")

    def _formula(self, node):
        if isinstance(node, str):
            if node == "true":
                return EQ(lin(0), 0)
            if node == "false":
                return EQ(lin(0), 1)
            v = self.vars[node]
            if not isinstance(v, BoolVar):
                raise BackendError(f"{node} is not Bool")
            return Lit(v)
        head = node[0]
        if head == "and":
            return AND(*(self._formula(i) for i in node[1:]))
        if head == "or":
            return OR(*(self._formula(i) for i in node[1:]))
        if head == "not":
            inner = self._formula(node[1])
            if isinstance(inner, Lit):
                return Lit(inner.var, not inner.neg)
            return NOT(inner)
        if head == "=>":
            return IMP(self._formula(node[1]), self._formula(node[2]))
        ops = {"<=": LE, "<": LT, ">=": GE, ">": GT}
        if head in ops:
            return ops[head](self._lin(node[1]), self._lin(node[2]))
        if head == "=":
            lhs, rhs = node[1], node[2]
            # boolean equality shows up only against true/false in our traffic
            if rhs in ("true", "false") or lhs in ("true", "false"):
                flip = (rhs == "false") or (lhs == "false")
                target = lhs if rhs in ("true", "false") else rhs
                f = self._formula(target)
                if isinstance(f, Lit) and flip:
                    return Lit(f.var, not f.neg)
                return NOT(f) if flip else f
            return EQ(self._lin(lhs), self._lin(rhs))
        if head == "distinct":
            return NE(self._lin(node[1]), self._lin(node[2]))
        raise BackendError(f"unsupported formula head {head!r}")

    # -- commands

    def handle(self, cmd) -> str | None:
        head = cmd[0]
        if head in ("set-option", "set-logic", "set-info"):
            if head == "set-option" and len(cmd) == 3 and cmd[1] == ":timeout":
                self.timeout_ms = int(cmd[2])
            return None
        if head == "declare-const":
            name, sort = cmd[1], cmd[2]
            if sort == "Int":
                self.vars[name] = self.backend.int_var(name, -_BIG, _BIG)
            elif sort == "Bool":
                self.vars[name] = self.backend.bool_var(name)
            else:
                raise BackendError(f"unsupported sort {sort}")
            return None
        if head == "declare-fun" and cmd[2] == []:
            return self.handle(["declare-const", cmd[1], cmd[3]])
        if head == "assert":
            self.backend.add(self._formula(cmd[1]))
            return None
        if head == "push":
            for _ in range(int(cmd[1]) if len(cmd) > 1 else 1):
                self.backend.push()
            return None
        if head == "pop":
            for _ in range(int(cmd[1]) if len(cmd) > 1 else 1):
                self.backend.pop()
            return None
        if head in ("check-sat", "check-sat-assuming"):
            assumptions = []
            if head == "check-sat-assuming" and len(cmd) > 1:
                for item in cmd[1]:
                    f = self._formula(item)
                    if not isinstance(f, Lit):
                        raise BackendError("assumptions must be literals")
                    assumptions.append(f)
            timeout = self.timeout_ms / 1000.0 if self.timeout_ms else None
            return self.backend.check(assumptions, timeout=timeout)
        if head == "get-value":
            model = self.backend.model()
            parts = []
            for name in cmd[1]:
                val = model[name]
                if isinstance(self.vars[name], BoolVar):
                    txt = "true" if val else "false"
                else:
                    txt = str(val) if val >= 0 else f"(- {-val})"
                parts.append(f"({name} {txt})")
            return "(" + " ".join(parts) + ")"
        if head == "reset":
            self.reset()
            return None
        if head == "exit":
            raise SystemExit(0)
        raise BackendError(f"unsupported command {head!r}")


def main() -> int:
    session = Session()
    out = sys.stdout
    for text in _tokenize(sys.stdin):
        try:
            reply = session.handle(_parse(text))
        except SystemExit:
            return 0
        except BackendError as exc:
            out.write(f'(error "{exc}")\n')
            out.flush()
            continue
        if reply is not None:
            out.write(reply + "\n")
            out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
