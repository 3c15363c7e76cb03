"""Solver backends behind one push/pop/assume/check/model interface.

Constraints are built as small formula trees over bounded integer and boolean
variables.  Two interchangeable backends consume them:

* MilpBackend -- in-process; compiles formulas to exact big-M integer-linear
  rows and solves each check with scipy's HiGHS MILP engine.  Supports a
  native maximization objective.
* PipeBackend -- emits SMT-LIB v2 text over a process pipe and speaks
  check-sat-assuming / get-value with any conforming solver.  By default it
  talks to this package's bundled SMT-LIB server subprocess (same engine),
  so the textual protocol is exercised end to end; point it at an external
  solver with "pipe:CMD".

All integer variables are finite-domain, negation of comparisons stays exact
(integer arithmetic), and both backends are deterministic for identical call
sequences.
"""

from __future__ import annotations

import shlex
import subprocess
import sys
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import BackendError

# ---------------------------------------------------------------------------
# variables and linear expressions


@dataclass(frozen=True)
class IntVar:
    name: str
    lo: int
    hi: int


@dataclass(frozen=True)
class BoolVar:
    name: str


Var = Union[IntVar, BoolVar]


@dataclass(frozen=True)
class LinExpr:
    """Integer linear expression; boolean variables contribute as 0/1."""

    terms: tuple[tuple[int, Var], ...]
    const: int = 0

    def __add__(self, other: "LinExpr | Var | int") -> "LinExpr":
        other = lin(other)
        return LinExpr(self.terms + other.terms, self.const + other.const)

    def __sub__(self, other: "LinExpr | Var | int") -> "LinExpr":
        other = lin(other)
        neg = tuple((-k, v) for k, v in other.terms)
        return LinExpr(self.terms + neg, self.const - other.const)

    def bounds(self) -> tuple[int, int]:
        lo = hi = self.const
        for k, v in self.terms:
            vlo, vhi = (0, 1) if isinstance(v, BoolVar) else (v.lo, v.hi)
            lo += k * (vlo if k > 0 else vhi)
            hi += k * (vhi if k > 0 else vlo)
        return lo, hi


def lin(x: LinExpr | Var | int) -> LinExpr:
    if isinstance(x, LinExpr):
        return x
    if isinstance(x, (IntVar, BoolVar)):
        return LinExpr(((1, x),))
    return LinExpr((), int(x))


def scaled(k: int, x: Var) -> LinExpr:
    return LinExpr(((int(k), x),))


def total(xs: Iterable[Var]) -> LinExpr:
    return LinExpr(tuple((1, x) for x in xs))


# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class Cmp:
    """expr op k with op in {"<=", "=="}."""

    op: str
    expr: LinExpr
    k: int


@dataclass(frozen=True)
class Lit:
    var: BoolVar
    neg: bool = False


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: object


@dataclass(frozen=True)
class Implies:
    if_: object
    then: object


Formula = Union[Cmp, Lit, And, Or, Not, Implies]


def LE(a, b) -> Cmp:
    e = lin(a) - lin(b)
    return Cmp("<=", LinExpr(e.terms), -e.const)


def LT(a, b) -> Cmp:
    return LE(lin(a) + 1, b)


def GE(a, b) -> Cmp:
    return LE(b, a)


def GT(a, b) -> Cmp:
    return LT(b, a)


def EQ(a, b) -> Cmp:
    e = lin(a) - lin(b)
    return Cmp("==", LinExpr(e.terms), -e.const)


def NE(a, b) -> Or:
    return Or((LT(a, b), GT(a, b)))


def AND(*items) -> And:
    return And(tuple(items))


def OR(*items) -> Or:
    return Or(tuple(items))


def NOT(f) -> Not:
    return Not(f)


def IMP(if_, then) -> Implies:
    return Implies(if_, then)


def pos(v: BoolVar) -> Lit:
    return Lit(v, False)


def neg(v: BoolVar) -> Lit:
    return Lit(v, True)


# ---------------------------------------------------------------------------
# normalization to clauses of leaves (Lit | Cmp); exact for integer atoms


def _negate(f):
    if isinstance(f, Lit):
        return Lit(f.var, not f.neg)
    if isinstance(f, Cmp):
        if f.op == "<=":
            e = lin(0) - f.expr
            return Cmp("<=", LinExpr(e.terms), -f.k - 1)
        return Or((Cmp("<=", f.expr, f.k - 1),
                   _negate(Cmp("<=", f.expr, f.k))))
    if isinstance(f, Not):
        return f.item
    if isinstance(f, And):
        return Or(tuple(Not(i) for i in f.items))
    if isinstance(f, Or):
        return And(tuple(Not(i) for i in f.items))
    if isinstance(f, Implies):
        return And((f.if_, Not(f.then)))
    if isinstance(f, BoolVar):
        return Lit(f, True)
    raise BackendError(f"cannot negate {f!r}")


def _nnf(f):
    if isinstance(f, BoolVar):
        return Lit(f)
    if isinstance(f, (Lit, Cmp)):
        return f
    if isinstance(f, Not):
        return _nnf(_negate(_nnf(f.item)))
    if isinstance(f, Implies):
        return _nnf(Or((Not(f.if_), f.then)))
    if isinstance(f, And):
        return And(tuple(_nnf(i) for i in f.items))
    if isinstance(f, Or):
        return Or(tuple(_nnf(i) for i in f.items))
    raise BackendError(f"unsupported formula node {f!r}")


def _split_eq(f):
    # equality is conjunctive; expand so clause distribution stays exact
    if isinstance(f, Cmp) and f.op == "==":
        e = lin(0) - f.expr
        return And((Cmp("<=", f.expr, f.k),
                    Cmp("<=", LinExpr(e.terms), -f.k)))
    return f


def to_clauses(f) -> list[list[Union[Lit, Cmp]]]:
    """CNF over Lit/Cmp leaves.  Or-of-And distributes (kept shallow by
    construction); top-level equalities become two rows."""
    f = _nnf(f)

    def expand(node) -> list[list]:
        node = _split_eq(node)
        if isinstance(node, (Lit, Cmp)):
            return [[node]]
        if isinstance(node, And):
            out: list[list] = []
            for i in node.items:
                out.extend(expand(i))
            return out
        if isinstance(node, Or):
            branches = [expand(i) for i in node.items]
            clauses: list[list] = [[]]
            for branch in branches:
                if len(branch) == 1:
                    clauses = [c + branch[0] for c in clauses]
                else:
                    clauses = [c + bc for c in clauses for bc in branch]
            return clauses
        raise BackendError(f"unsupported node {node!r}")

    return expand(f)


# ---------------------------------------------------------------------------
# in-process MILP backend (scipy / HiGHS)


class _Frame:
    def __init__(self, n_vars: int, n_rows: int):
        self.n_vars = n_vars
        self.n_rows = n_rows
        self.reified: list[tuple] = []
        self.bounds_saved: dict[str, tuple[int, int]] = {}


class MilpBackend:
    """Exact big-M integer-linear compilation solved by scipy's HiGHS."""

    supports_maximize = True

    def __init__(self):
        self.reset()

    def reset(self) -> None:
        self._names: dict[str, int] = {}
        self._vars: list[Var] = []
        self._lo: list[int] = []
        self._hi: list[int] = []
        self._rows: list[tuple[dict[int, float], float, float]] = []
        self._reify: dict[tuple, BoolVar] = {}
        self._frames: list[_Frame] = []
        self._model: dict[str, int] | None = None

    # -- variables

    def _register(self, v: Var, lo: int, hi: int) -> None:
        if v.name in self._names:
            raise BackendError(f"duplicate variable {v.name}")
        self._names[v.name] = len(self._vars)
        self._vars.append(v)
        self._lo.append(lo)
        self._hi.append(hi)

    def int_var(self, name: str, lo: int, hi: int) -> IntVar:
        if lo > hi:
            raise BackendError(f"empty domain for {name}: [{lo}, {hi}]")
        v = IntVar(name, lo, hi)
        self._register(v, lo, hi)
        return v

    def bool_var(self, name: str) -> BoolVar:
        v = BoolVar(name)
        self._register(v, 0, 1)
        return v

    # -- constraint stack

    def push(self) -> None:
        self._frames.append(_Frame(len(self._vars), len(self._rows)))

    def pop(self) -> None:
        if not self._frames:
            raise BackendError("pop without matching push")
        fr = self._frames.pop()
        for v in self._vars[fr.n_vars:]:
            del self._names[v.name]
        del self._vars[fr.n_vars:]
        del self._lo[fr.n_vars:]
        del self._hi[fr.n_vars:]
        del self._rows[fr.n_rows:]
        for key in fr.reified:
            self._reify.pop(key, None)
        for name, (lo, hi) in fr.bounds_saved.items():
            if name in self._names:
                idx = self._names[name]
                self._lo[idx], self._hi[idx] = lo, hi

    def _add_row(self, coeffs: dict[int, float], lo: float, hi: float) -> None:
        self._rows.append((coeffs, lo, hi))

    def _expr_coeffs(self, e: LinExpr) -> dict[int, float]:
        coeffs: dict[int, float] = {}
        for k, v in e.terms:
            idx = self._names[v.name]
            coeffs[idx] = coeffs.get(idx, 0.0) + float(k)
        return {i: c for i, c in coeffs.items() if c != 0.0}

    def _try_absorb_bound(self, cmp: Cmp) -> bool:
        # single-variable rows tighten the domain instead of adding a row
        if len(cmp.expr.terms) != 1:
            return False
        k, v = cmp.expr.terms[0]
        if k not in (1, -1):
            return False
        rhs = cmp.k - cmp.expr.const
        idx = self._names[v.name]
        if self._frames:
            fr = self._frames[-1]
            if v.name not in fr.bounds_saved and idx < fr.n_vars:
                fr.bounds_saved[v.name] = (self._lo[idx], self._hi[idx])
        if k == 1:
            self._hi[idx] = min(self._hi[idx], rhs)
        else:
            self._lo[idx] = max(self._lo[idx], -rhs)
        return True

    def _reified(self, cmp: Cmp) -> Lit:
        """Fresh p with p <-> (terms <= rhs), two-sided big-M; hash-consed."""
        rhs = cmp.k - cmp.expr.const
        key = (tuple(sorted((k, v.name) for k, v in cmp.expr.terms)), rhs)
        hit = self._reify.get(key)
        if hit is not None:
            return Lit(hit)
        p = self.bool_var(f"__r{len(self._reify)}")
        self._reify[key] = p
        if self._frames:
            self._frames[-1].reified.append(key)
        e = LinExpr(cmp.expr.terms)
        lo, hi = e.bounds()
        pidx = self._names[p.name]
        coeffs = self._expr_coeffs(e)
        # p = 1  =>  e <= rhs:            e + (hi - rhs) p <= hi
        if hi > rhs:
            row = dict(coeffs)
            row[pidx] = row.get(pidx, 0.0) + float(hi - rhs)
            self._add_row(row, -np.inf, float(hi))
        elif hi <= rhs:
            pass  # comparison always true; p=1 side vacuous
        # p = 0  =>  e >= rhs + 1:        e + (rhs + 1 - lo) p >= rhs + 1
        if lo <= rhs:
            row = dict(coeffs)
            row[pidx] = row.get(pidx, 0.0) + float(rhs + 1 - lo)
            self._add_row(row, float(rhs + 1), np.inf)
        # lo > rhs: comparison always false; p=0 side vacuous, but p must be 0
        if lo > rhs:
            self._hi[pidx] = 0
        if hi <= rhs:
            self._lo[pidx] = 1
        return Lit(p)

    def add(self, f: Formula) -> None:
        for clause in to_clauses(f):
            self._compile_clause(clause)

    def _fix_lit(self, l: Lit) -> None:
        idx = self._names[l.var.name]
        if self._frames:
            fr = self._frames[-1]
            if l.var.name not in fr.bounds_saved and idx < fr.n_vars:
                fr.bounds_saved[l.var.name] = (self._lo[idx], self._hi[idx])
        if l.neg:
            self._hi[idx] = min(self._hi[idx], 0)
        else:
            self._lo[idx] = max(self._lo[idx], 1)

    def _compile_clause(self, clause: list[Union[Lit, Cmp]]) -> None:
        lits = [c for c in clause if isinstance(c, Lit)]
        cmps = [c for c in clause if isinstance(c, Cmp)]
        # comparisons decided by the variable domains leave the clause
        live: list[Cmp] = []
        for cmp in cmps:
            rhs = cmp.k - cmp.expr.const
            lo, hi = LinExpr(cmp.expr.terms).bounds()
            if hi <= rhs:
                return  # always true: clause satisfied
            if lo > rhs:
                continue  # always false: drop from the clause
            live.append(cmp)
        cmps = live
        if not lits and not cmps:
            self._add_row({}, 1.0, np.inf)  # empty clause: unsatisfiable
            return
        if len(lits) == 1 and not cmps:
            self._fix_lit(lits[0])
            return
        if len(cmps) == 1 and not lits:
            cmp = cmps[0]
            if self._try_absorb_bound(cmp):
                return
            coeffs = self._expr_coeffs(cmp.expr)
            self._add_row(coeffs, -np.inf, float(cmp.k - cmp.expr.const))
            return
        if len(cmps) > 1:
            lits = lits + [self._reified(c) for c in cmps]
            cmps = []
        if cmps:
            # exactly one comparison guarded by literals: when every literal
            # is false the comparison must hold
            cmp = cmps[0]
            rhs = cmp.k - cmp.expr.const
            e = LinExpr(cmp.expr.terms)
            lo, hi = e.bounds()
            coeffs = self._expr_coeffs(e)
            m = float(hi - rhs)
            ub = float(rhs)
            for l in lits:
                idx = self._names[l.var.name]
                if l.neg:
                    coeffs[idx] = coeffs.get(idx, 0.0) + m
                    ub += m
                else:
                    coeffs[idx] = coeffs.get(idx, 0.0) - m
            self._add_row(coeffs, -np.inf, ub)
            return
        self._bool_clause(lits)

    def _bool_clause(self, lits: list[Lit]) -> None:
        coeffs: dict[int, float] = {}
        rhs = 1.0
        for l in lits:
            idx = self._names[l.var.name]
            if l.neg:
                coeffs[idx] = coeffs.get(idx, 0.0) - 1.0
                rhs -= 1.0
            else:
                coeffs[idx] = coeffs.get(idx, 0.0) + 1.0
        self._add_row(coeffs, rhs, np.inf)

    # -- solving

    def check(self, assumptions: Sequence[Lit] = (),
              maximize: LinExpr | None = None,
              timeout: float | None = None) -> str:
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import csc_matrix

        n = len(self._vars)
        if n == 0:
            self._model = {}
            return "sat"
        lo = np.array(self._lo, dtype=float)
        hi = np.array(self._hi, dtype=float)
        for a in assumptions:
            idx = self._names[a.var.name]
            val = 0.0 if a.neg else 1.0
            lo[idx] = max(lo[idx], val)
            hi[idx] = min(hi[idx], val)
        if np.any(lo > hi):  # bound absorption or assumptions emptied a domain
            self._model = None
            return "unsat"
        c = np.zeros(n)
        if maximize is not None:
            for k, v in maximize.terms:
                c[self._names[v.name]] -= float(k)
        options: dict = {"presolve": True}
        if timeout is not None:
            options["time_limit"] = max(timeout, 0.01)
        kwargs = {}
        if self._rows:
            rows, cols, data = [], [], []
            rlo, rhi = [], []
            for i, (coeffs, l, h) in enumerate(self._rows):
                for j, coef in coeffs.items():
                    rows.append(i)
                    cols.append(j)
                    data.append(coef)
                rlo.append(l)
                rhi.append(h)
            a_mat = csc_matrix((data, (rows, cols)),
                               shape=(len(self._rows), n))
            kwargs["constraints"] = LinearConstraint(
                a_mat, np.array(rlo), np.array(rhi))
        res = milp(c=c, integrality=np.ones(n), bounds=Bounds(lo, hi),
                   options=options, **kwargs)
        if res.status == 0:
            xs = np.rint(res.x).astype(int)
            self._model = {v.name: int(xs[i]) for i, v in enumerate(self._vars)}
            return "sat"
        self._model = None
        if res.status == 2:
            return "unsat"
        if res.status == 1:
            return "unknown"
        raise BackendError(f"solver failure: status={res.status} {res.message}")

    def model(self) -> dict[str, int]:
        if self._model is None:
            raise BackendError("no model available (last check was not sat)")
        return dict(self._model)


# ---------------------------------------------------------------------------
# SMT-LIB v2 emission over a process pipe


def _sexpr_lin(e: LinExpr) -> str:
    parts: list[str] = []
    for k, v in e.terms:
        atom = v.name if isinstance(v, IntVar) else f"(ite {v.name} 1 0)"
        if k == 1:
            parts.append(atom)
        elif k == -1:
            parts.append(f"(- {atom})")
        else:
            parts.append(f"(* {_int(k)} {atom})")
    if e.const != 0 or not parts:
        parts.append(_int(e.const))
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def _int(k: int) -> str:
    return str(k) if k >= 0 else f"(- {-k})"


def _sexpr(f) -> str:
    if isinstance(f, BoolVar):
        return f.name
    if isinstance(f, Lit):
        return f"(not {f.var.name})" if f.neg else f.var.name
    if isinstance(f, Cmp):
        op = "<=" if f.op == "<=" else "="
        return f"({op} {_sexpr_lin(f.expr)} {_int(f.k)})"
    if isinstance(f, And):
        return "(and " + " ".join(_sexpr(i) for i in f.items) + ")" \
            if f.items else "true"
    if isinstance(f, Or):
        return "(or " + " ".join(_sexpr(i) for i in f.items) + ")" \
            if f.items else "false"
    if isinstance(f, Not):
        return f"(not {_sexpr(f.item)})"
    if isinstance(f, Implies):
        return f"(=> {_sexpr(f.if_)} {_sexpr(f.then)})"
    raise BackendError(f"cannot emit {f!r}")


class PipeBackend:
    """Drives an SMT-LIB v2 solver process over stdin/stdout."""

    supports_maximize = False

    def __init__(self, cmd: Sequence[str] | None = None):
        self._cmd = list(cmd) if cmd else [
            sys.executable, "-m", "atomc._smtlib_server"]
        self._proc: subprocess.Popen | None = None
        self._declared: list[Var] = []
        self._model: dict[str, int] | None = None
        self._start()

    def _start(self) -> None:
        self._proc = subprocess.Popen(
            self._cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True, bufsize=1)
        self._send("(set-option :print-success false)")
        self._send("(set-logic QF_LIA)")

    def _send(self, line: str) -> None:
        assert self._proc is not None and self._proc.stdin is not None
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except BrokenPipeError as exc:
            raise BackendError(f"solver process died: {exc}") from None

    def _read_sexpr(self) -> str:
        assert self._proc is not None and self._proc.stdout is not None
        buf = ""
        depth = 0
        while True:
            ch = self._proc.stdout.read(1)
            if ch == "":
                raise BackendError("solver process closed its output")
            buf += ch
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    return buf.strip()
            elif ch == "\n" and depth == 0 and buf.strip():
                return buf.strip()

    def reset(self) -> None:
        self._send("(reset)")
        self._send("(set-option :print-success false)")
        self._send("(set-logic QF_LIA)")
        self._declared = []
        self._model = None

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._send("(exit)")
            except BackendError:
                pass
            self._proc.wait(timeout=5)
            self._proc = None

    def int_var(self, name: str, lo: int, hi: int) -> IntVar:
        v = IntVar(name, lo, hi)
        self._declared.append(v)
        self._send(f"(declare-const {name} Int)")
        self._send(f"(assert (<= {_int(lo)} {name}))")
        self._send(f"(assert (<= {name} {_int(hi)}))")
        return v

    def bool_var(self, name: str) -> BoolVar:
        v = BoolVar(name)
        self._declared.append(v)
        self._send(f"(declare-const {name} Bool)")
        return v

    def add(self, f: Formula) -> None:
        self._send(f"(assert {_sexpr(f)})")

    def push(self) -> None:
        self._send("(push 1)")

    def pop(self) -> None:
        self._send("(pop 1)")

    def check(self, assumptions: Sequence[Lit] = (),
              maximize: LinExpr | None = None,
              timeout: float | None = None) -> str:
        if timeout is not None:
            ms = max(int(timeout * 1000), 1)
            self._send(f"(set-option :timeout {ms})")
        lits = " ".join(_sexpr(a) for a in assumptions)
        self._send(f"(check-sat-assuming ({lits}))")
        answer = self._read_sexpr()
        if answer not in ("sat", "unsat", "unknown"):
            raise BackendError(f"unexpected check-sat answer {answer!r}")
        if answer == "sat":
            self._fetch_model()
        else:
            self._model = None
        return answer

    def _fetch_model(self) -> None:
        if not self._declared:
            self._model = {}
            return
        names = " ".join(v.name for v in self._declared)
        self._send(f"(get-value ({names}))")
        reply = self._read_sexpr()
        self._model = _parse_values(reply)

    def model(self) -> dict[str, int]:
        if self._model is None:
            raise BackendError("no model available (last check was not sat)")
        return dict(self._model)


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_values(reply: str) -> dict[str, int]:
    toks = _tokenize(reply)

    def parse(pos: int):
        if toks[pos] == "(":
            items = []
            pos += 1
            while toks[pos] != ")":
                item, pos = parse(pos)
                items.append(item)
            return items, pos + 1
        return toks[pos], pos + 1

    tree, _ = parse(0)
    out: dict[str, int] = {}
    for pair in tree:
        name, value = pair[0], pair[1]
        if value == "true":
            out[name] = 1
        elif value == "false":
            out[name] = 0
        elif isinstance(value, list):  # (- k)
            out[name] = -int(value[1])
        else:
            out[name] = int(value)
    return out


def make_backend(spec: str):
    """Backend factory: "milp", "pipe", or "pipe:<command line>"."""
    if spec == "milp":
        return MilpBackend()
    if spec == "pipe":
        return PipeBackend()
    if spec.startswith("pipe:"):
        return PipeBackend(shlex.split(spec[len("pipe:"):]))
    raise BackendError(f"unknown solver backend {spec!r}")
