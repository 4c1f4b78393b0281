"""Exact symbolic algebra over even and odd (anticommuting) coordinates.

A value is an element of C^inf(even coordinates) (x) Lambda(odd coordinates),
stored as a map from strictly sorted blocks of odd symbols to scalar
coefficients.  Scalars are exact rational functions (sympy expressions) over a
set of atoms: named parameters, even coordinates, opaque derivative stacks
like h''(t), and exp/sin/cos applied to even arguments.  Distinct atoms are
algebraically independent, so scalar-level zero testing is exact; identities
that hold only through trig relations fall back to numeric sampling.

Products obey the sign rule a*b = (-1)^(|a||b|) b*a for homogeneous factors,
squares of odd symbols vanish, and exp atoms merge under multiplication
(exp(u)*exp(v) -> exp(u+v)).  Square roots of parameters are supported as
fresh symbols with a registered side relation s^2 = rhs; scalar arithmetic
reduces modulo registered relations by univariate remainder in s.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import sympy as sp

from .errors import (
    ParityError,
    ParseError,
    RelationError,
    SamplingError,
    SuperGeomError,
)

EVEN = 0
ODD = 1

_TRIG_KINDS = ("sin", "cos")


@dataclass(frozen=True)
class Atom:
    """One scalar-level symbol: what it is and how it differentiates."""

    kind: str  # "coord" | "param" | "func" | "exp" | "sin" | "cos"
    display: str
    func_name: str = ""
    order: int = 0
    arg_name: str = ""  # coordinate a func atom is applied to
    arg: object = None  # sympy expr argument of exp/sin/cos


class Context:
    """Registry of coordinates, parameters, opaque atoms, and side relations.

    All expressions belonging to one computation share a context; the context
    fixes the global order of odd symbols (registration order) and owns the
    canonicalization cache.  Contexts are cheap; build one per task.
    """

    def __init__(self):
        self._atoms: dict[sp.Symbol, Atom] = {}
        self._symbols: dict[str, sp.Symbol] = {}
        self._coords: dict[str, int] = {}
        self._odd_index: dict[str, int] = {}
        self._odd_names: list[str] = []
        self._params: dict[str, sp.Symbol] = {}
        self._functions: set[str] = set()
        self._exp_syms: set[sp.Symbol] = set()
        self._relations: list[tuple[sp.Symbol, sp.Expr]] = []
        self._relation_map: dict[sp.Symbol, sp.Expr] = {}
        self._canon_cache: dict = {}
        self.charts: dict[str, object] = {}

    # ------------------------------------------------------------------
    # registration
    # ------------------------------------------------------------------
    def add_coordinate(self, name: str, parity: int) -> None:
        if name in self._coords:
            raise SuperGeomError(f"coordinate {name!r} registered twice")
        if name in self._params or name in self._functions:
            raise SuperGeomError(f"name {name!r} already used")
        self._coords[name] = parity
        if parity == ODD:
            self._odd_index[name] = len(self._odd_names)
            self._odd_names.append(name)
        else:
            s = sp.Symbol(name)
            self._symbols[name] = s
            self._atoms[s] = Atom(kind="coord", display=name)

    def coordinate_parity(self, name: str) -> int:
        try:
            return self._coords[name]
        except KeyError:
            raise SuperGeomError(f"unknown coordinate {name!r}") from None

    def has_coordinate(self, name: str) -> bool:
        return name in self._coords

    def odd_index(self, name: str) -> int:
        return self._odd_index[name]

    def odd_name(self, index: int) -> str:
        return self._odd_names[index]

    def coordinate_symbol(self, name: str) -> sp.Symbol:
        if self._coords.get(name) != EVEN:
            raise SuperGeomError(f"{name!r} is not an even coordinate")
        return self._symbols[name]

    def parameter(self, name: str) -> sp.Symbol:
        s = self._params.get(name)
        if s is not None:
            return s
        if name in self._coords or name in self._functions:
            raise SuperGeomError(f"name {name!r} already used")
        s = sp.Symbol(name)
        self._params[name] = s
        self._symbols[name] = s
        self._atoms[s] = Atom(kind="param", display=name)
        return s

    def has_parameter(self, name: str) -> bool:
        return name in self._params

    def function_symbol(self, fname: str, order: int, arg_name: str) -> sp.Symbol:
        if self._coords.get(arg_name) != EVEN:
            raise SuperGeomError(
                f"function argument {arg_name!r} must be an even coordinate"
            )
        if fname in self._coords or fname in self._params:
            raise SuperGeomError(f"{fname!r} cannot be applied as a function")
        display = f"{fname}{'' if not order else chr(39) * order}({arg_name})"
        s = self._symbols.get(display)
        if s is None:
            s = sp.Symbol(display)
            self._symbols[display] = s
            self._atoms[s] = Atom(
                kind="func",
                display=display,
                func_name=fname,
                order=order,
                arg_name=arg_name,
            )
            self._functions.add(fname)
        return s

    def exp_symbol(self, exponent) -> sp.Expr:
        u = self.canon(sp.sympify(exponent))
        if u == 0:
            return sp.S.One
        display = f"exp({scalar_to_str(self, u)})"
        s = self._symbols.get(display)
        if s is None:
            s = sp.Symbol(display)
            self._symbols[display] = s
            self._atoms[s] = Atom(kind="exp", display=display, arg=u)
            self._exp_syms.add(s)
        return s

    def trig_symbol(self, kind: str, argument) -> sp.Expr:
        if kind not in _TRIG_KINDS:
            raise SuperGeomError(f"unknown trig kind {kind!r}")
        u = self.canon(sp.sympify(argument))
        if u == 0:
            return sp.S.Zero if kind == "sin" else sp.S.One
        display = f"{kind}({scalar_to_str(self, u)})"
        s = self._symbols.get(display)
        if s is None:
            s = sp.Symbol(display)
            self._symbols[display] = s
            self._atoms[s] = Atom(kind=kind, display=display, arg=u)
        return s

    def add_relation(self, name: str, rhs) -> sp.Symbol:
        """Register name^2 = rhs; rhs must not involve name and must admit a
        real root (a provably negative constant rhs is rejected)."""
        s = self.parameter(name)
        rhs = self.canon(sp.sympify(rhs))
        if rhs.has(s):
            raise RelationError(f"relation for {name!r} refers to itself")
        if rhs.is_Rational and rhs < 0:
            raise RelationError(
                f"side relation {name}^2 = {rhs} has no real solution"
            )
        if s in self._relation_map:
            raise RelationError(f"relation for {name!r} registered twice")
        self._relations.append((s, rhs))
        self._relation_map[s] = rhs
        self._canon_cache.clear()
        return s

    # ------------------------------------------------------------------
    # scalar canonical form
    # ------------------------------------------------------------------
    def canon(self, c) -> sp.Expr:
        c = sp.sympify(c)
        hit = self._canon_cache.get(c)
        if hit is not None:
            return hit
        out = self._canon_uncached(c)
        self._canon_cache[c] = out
        self._canon_cache[out] = out
        return out

    def _canon_uncached(self, c: sp.Expr) -> sp.Expr:
        if c.is_Rational:
            return c
        if c.atoms(sp.Float):
            raise SuperGeomError("floating point constants are not exact")
        c = sp.cancel(c)
        num, den = c.as_numer_denom()
        n2 = self._merge_exp(num)
        d2 = self._merge_exp(den)
        if n2 is not num or d2 is not den:
            c = sp.cancel(n2 / d2)
        if self._relations and c.free_symbols & set(self._relation_map):
            c = self._reduce_relations(c)
        return c

    def _merge_exp(self, p: sp.Expr) -> sp.Expr:
        gens = sorted(p.free_symbols & self._exp_syms, key=sp.default_sort_key)
        if not gens:
            return p
        try:
            poly = sp.Poly(p, *gens)
        except sp.PolynomialError:
            return p
        needs = any(sum(m) > 1 for m, _ in poly.terms())
        if not needs:
            return p
        out = sp.S.Zero
        for monom, coeff in poly.terms():
            total = sum(monom)
            if total == 0:
                out += coeff
            elif total == 1:
                k = monom.index(1)
                out += coeff * gens[k]
            else:
                u = sp.S.Zero
                for k, g in zip(monom, gens):
                    if k:
                        u += k * self._atoms[g].arg
                out += coeff * self.exp_symbol(u)
        return sp.expand(out)

    def _reduce_relations(self, c: sp.Expr) -> sp.Expr:
        for s, rhs in self._relations:
            if not c.has(s):
                continue
            num, den = c.as_numer_denom()
            num = _poly_mod_square(num, s, rhs)
            den = _poly_mod_square(den, s, rhs)
            if den.has(s):
                a = den.coeff(s, 0)
                b = den.coeff(s, 1)
                num = _poly_mod_square(sp.expand(num * (a - b * s)), s, rhs)
                den = sp.expand(a * a - b * b * rhs)
            c = sp.cancel(num / den)
        return c

    # ------------------------------------------------------------------
    # scalar differentiation
    # ------------------------------------------------------------------
    def diff_scalar(self, c: sp.Expr, coord_name: str) -> sp.Expr:
        if self.coordinate_parity(coord_name) != EVEN:
            raise SuperGeomError("scalar derivative requires an even coordinate")
        out = sp.S.Zero
        for s in c.free_symbols:
            d = self._atom_derivative(s, coord_name)
            if d != 0:
                out += sp.diff(c, s) * d
        return self.canon(out)

    def _atom_derivative(self, s: sp.Symbol, x: str) -> sp.Expr:
        atom = self._atoms.get(s)
        if atom is None:
            raise SuperGeomError(f"unregistered symbol {s}")
        if atom.kind == "coord":
            return sp.S.One if atom.display == x else sp.S.Zero
        if atom.kind == "param":
            return sp.S.Zero
        if atom.kind == "func":
            if atom.arg_name != x:
                return sp.S.Zero
            return self.function_symbol(atom.func_name, atom.order + 1, x)
        du = self.diff_scalar(atom.arg, x)
        if du == 0:
            return sp.S.Zero
        if atom.kind == "exp":
            return du * s
        if atom.kind == "sin":
            return du * self.trig_symbol("cos", atom.arg)
        return -du * self.trig_symbol("sin", atom.arg)


def _poly_mod_square(p: sp.Expr, s: sp.Symbol, rhs: sp.Expr) -> sp.Expr:
    if not p.has(s):
        return p
    poly = sp.Poly(p, s)
    out = sp.S.Zero
    for (k,), coeff in poly.terms():
        out += coeff * s ** (k % 2) * rhs ** (k // 2)
    return sp.expand(out)


# ----------------------------------------------------------------------
# graded expressions
# ----------------------------------------------------------------------


def _merge_odd(a: tuple, b: tuple):
    """Merge two sorted odd blocks; return (sign, key) with sign 0 on overlap."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    out = []
    i = j = inv = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            return 0, None
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            inv += len(a) - i
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return (1 if inv % 2 == 0 else -1), tuple(out)


class GradedExpr:
    """Canonical element of the graded function algebra of a Context."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms: dict):
        self.ctx = ctx
        self.terms = terms

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_terms(cls, ctx: Context, raw: dict) -> "GradedExpr":
        terms = {}
        for key, c in raw.items():
            c = ctx.canon(c)
            if c != 0:
                terms[key] = c
        return cls(ctx, terms)

    @classmethod
    def scalar(cls, ctx: Context, c) -> "GradedExpr":
        return cls.from_terms(ctx, {(): sp.sympify(c)})

    @classmethod
    def zero(cls, ctx: Context) -> "GradedExpr":
        return cls(ctx, {})

    @classmethod
    def one(cls, ctx: Context) -> "GradedExpr":
        return cls(ctx, {(): sp.S.One})

    @classmethod
    def coordinate(cls, ctx: Context, name: str) -> "GradedExpr":
        parity = ctx.coordinate_parity(name)
        if parity == ODD:
            return cls(ctx, {(ctx.odd_index(name),): sp.S.One})
        return cls(ctx, {(): ctx.coordinate_symbol(name)})

    # -- structure ------------------------------------------------------
    @property
    def is_sym_zero(self) -> bool:
        return not self.terms

    def even_scalar(self) -> sp.Expr:
        """Coefficient of the empty odd block."""
        return self.terms.get((), sp.S.Zero)

    def pure_scalar(self) -> sp.Expr:
        """The whole value as a scalar; raises if any odd block is present."""
        if any(self.terms) and any(k for k in self.terms):
            raise ParityError("expression is not a pure scalar")
        return self.even_scalar()

    def parity(self):
        """EVEN/ODD for homogeneous values (zero counts as even), else None."""
        ps = {len(k) & 1 for k in self.terms}
        if not ps:
            return EVEN
        if len(ps) == 1:
            return ps.pop()
        return None

    def is_homogeneous(self, parity: int) -> bool:
        return all(len(k) & 1 == parity for k in self.terms)

    def parity_parts(self):
        """Split into (even part, odd part)."""
        ev = {k: c for k, c in self.terms.items() if len(k) % 2 == 0}
        od = {k: c for k, c in self.terms.items() if len(k) % 2 == 1}
        return GradedExpr(self.ctx, ev), GradedExpr(self.ctx, od)

    def parity_flip(self, p: int) -> "GradedExpr":
        """Multiply each monomial m by (-1)^(p*|m|)."""
        if p % 2 == 0 or not self.terms:
            return self
        return GradedExpr(
            self.ctx,
            {k: (-c if len(k) & 1 else c) for k, c in self.terms.items()},
        )

    # -- ring operations -------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, GradedExpr):
            if other.ctx is not self.ctx:
                raise SuperGeomError("mixing expressions from different contexts")
            return other
        if isinstance(other, (int, Fraction, sp.Expr)):
            return GradedExpr.scalar(self.ctx, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self.terms)
        for k, c in other.terms.items():
            if k in out:
                out[k] = out[k] + c
            else:
                out[k] = c
        return GradedExpr.from_terms(self.ctx, out)

    __radd__ = __add__

    def __neg__(self):
        return GradedExpr(self.ctx, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                sign, key = _merge_odd(ka, kb)
                if sign == 0:
                    continue
                prod = ca * cb if sign > 0 else -(ca * cb)
                if key in out:
                    out[key] = out[key] + prod
                else:
                    out[key] = prod
        return GradedExpr.from_terms(self.ctx, out)

    def __rmul__(self, other):
        # scalars are even, hence central
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self

    def inverse(self) -> "GradedExpr":
        """Multiplicative inverse; requires an even value with nonzero scalar
        part (the nilpotent remainder is inverted by a finite series)."""
        if any(len(k) & 1 for k in self.terms):
            raise ParityError("division by an expression with nonzero odd part")
        body = self.terms.get((), sp.S.Zero)
        if body == 0:
            raise ParityError("division by an expression with no scalar part")
        inv_body = self.ctx.canon(sp.S.One / body)
        rest = {k: c for k, c in self.terms.items() if k}
        if not rest:
            return GradedExpr(self.ctx, {(): inv_body})
        u = GradedExpr(self.ctx, rest) * inv_body
        acc = GradedExpr.one(self.ctx)
        term = GradedExpr.one(self.ctx)
        for _ in range(len(self.ctx._odd_names) + 1):
            term = -(term * u)
            if term.is_sym_zero:
                break
            acc = acc + term
        return acc * inv_body

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out = GradedExpr.one(self.ctx)
        for _ in range(n):
            out = out * self
        return out

    # -- calculus ---------------------------------------------------------
    def derive(self, coord_name: str) -> "GradedExpr":
        """Left partial derivative along a coordinate of either parity."""
        ctx = self.ctx
        parity = ctx.coordinate_parity(coord_name)
        out: dict = {}
        if parity == EVEN:
            for k, c in self.terms.items():
                d = ctx.diff_scalar(c, coord_name)
                if d != 0:
                    out[k] = out.get(k, sp.S.Zero) + d
        else:
            idx = ctx.odd_index(coord_name)
            for k, c in self.terms.items():
                if idx not in k:
                    continue
                pos = k.index(idx)
                nk = k[:pos] + k[pos + 1 :]
                out[nk] = out.get(nk, sp.S.Zero) + (-c if pos & 1 else c)
        return GradedExpr.from_terms(ctx, out)

    def substitute(self, bindings: dict) -> "GradedExpr":
        """Simultaneous substitution for parameters and opaque functions.

        Binding a function name replaces every derivative stack of it by the
        corresponding derivative of the replacement.  Replacements must be
        even; exp/sin/cos arguments are rebuilt when they mention a bound
        symbol.
        """
        ctx = self.ctx
        env: dict = {}
        for name, val in bindings.items():
            if isinstance(val, GradedExpr):
                g = val
                if g.ctx is not ctx:
                    raise SuperGeomError("binding from a different context")
            else:
                g = GradedExpr.scalar(ctx, val)
            if not g.is_homogeneous(EVEN):
                raise ParityError(f"binding for {name!r} must be even")
            if name in ctx._params:
                env[ctx._params[name]] = g
            elif name in ctx._functions:
                env[("func", name)] = g
            else:
                raise SuperGeomError(f"unknown binding target {name!r}")
        memo: dict = {}
        out = GradedExpr.zero(ctx)
        for key, c in self.terms.items():
            val = _eval_scalar(ctx, c, env, memo)
            out = out + val * GradedExpr(ctx, {key: sp.S.One})
        return out

    # -- comparisons / display ---------------------------------------------
    def equals(self, other) -> bool:
        other = self._coerce(other)
        return other is not None and self.terms == other.terms

    def __eq__(self, other):
        if isinstance(other, (GradedExpr, int, Fraction, sp.Expr)):
            o = self._coerce(other)
            return o is not None and self.terms == o.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for key in sorted(self.terms, key=lambda k: (len(k), k)):
            c = self.terms[key]
            if not key:
                parts.append(scalar_to_str(self.ctx, c))
                continue
            odd = "*".join(self.ctx.odd_name(i) for i in key)
            if c == 1:
                parts.append(odd)
            elif c == -1:
                parts.append("-" + odd)
            else:
                cs = scalar_to_str(self.ctx, c)
                if c.is_Add:
                    cs = f"({cs})"
                parts.append(f"{cs}*{odd}")
        text = parts[0]
        for p in parts[1:]:
            if p.startswith("-"):
                text += " - " + p[1:]
            else:
                text += " + " + p
        return text

    def __repr__(self):
        return f"GradedExpr({self})"


def _eval_scalar(ctx: Context, c: sp.Expr, env: dict, memo: dict) -> GradedExpr:
    if c.is_Rational:
        return GradedExpr.scalar(ctx, c)
    if c.is_Symbol:
        return _eval_atom(ctx, c, env, memo)
    if c.is_Add:
        out = GradedExpr.zero(ctx)
        for a in c.args:
            out = out + _eval_scalar(ctx, a, env, memo)
        return out
    if c.is_Mul:
        out = GradedExpr.one(ctx)
        for a in c.args:
            out = out * _eval_scalar(ctx, a, env, memo)
        return out
    if c.is_Pow and c.exp.is_Integer:
        return _eval_scalar(ctx, c.base, env, memo) ** int(c.exp)
    raise SuperGeomError(f"cannot substitute through {c}")


def _eval_atom(ctx: Context, s: sp.Symbol, env: dict, memo: dict) -> GradedExpr:
    hit = memo.get(s)
    if hit is not None:
        return hit
    atom = ctx._atoms.get(s)
    if atom is None:
        raise SuperGeomError(f"unregistered symbol {s}")
    out = None
    if atom.kind in ("coord", "param"):
        out = env.get(s) or GradedExpr(ctx, {(): s})
    elif atom.kind == "func":
        base = env.get(("func", atom.func_name))
        if base is None:
            out = GradedExpr(ctx, {(): s})
        else:
            out = base
            for _ in range(atom.order):
                out = out.derive(atom.arg_name)
    else:
        arg = _eval_scalar(ctx, atom.arg, env, memo)
        if arg.terms and any(k for k in arg.terms):
            raise ParityError(f"argument of {atom.kind} must stay scalar")
        new_arg = arg.even_scalar()
        if new_arg == atom.arg:
            out = GradedExpr(ctx, {(): s})
        elif atom.kind == "exp":
            out = GradedExpr.from_terms(ctx, {(): ctx.exp_symbol(new_arg)})
        else:
            out = GradedExpr.from_terms(ctx, {(): ctx.trig_symbol(atom.kind, new_arg)})
    memo[s] = out
    return out


# ----------------------------------------------------------------------
# numeric sampling and zero testing
# ----------------------------------------------------------------------


class ZeroResult(NamedTuple):
    zero: bool
    certainty: str  # "symbolic" | "numeric"
    max_abs: float


class _Retry(Exception):
    pass


class Sampler:
    """Seeded numeric evaluator.

    Coordinates, parameters, and opaque function atoms get independent
    pseudo-random values; exp/sin/cos atoms and side-relation symbols are
    derived.  Points hitting a pole or an infeasible relation are redrawn,
    up to a fixed number of attempts.
    """

    MAX_ATTEMPTS = 32

    def __init__(self, ctx: Context, seed: int = 0, samples: int = 8,
                 tolerance: float = 1e-9, positive: bool = False):
        self.ctx = ctx
        self.samples = samples
        self.tolerance = tolerance
        self.positive = positive
        self._rng = random.Random(seed)

    def _draw(self) -> float:
        v = self._rng.uniform(0.25, 2.0)
        if not self.positive and self._rng.random() < 0.5:
            v = -v
        return v

    def _atom_value(self, point: dict, s: sp.Symbol) -> float:
        if s in point:
            return point[s]
        atom = self.ctx._atoms.get(s)
        if atom is None:
            raise SamplingError(f"unregistered symbol {s}")
        if atom.kind in ("coord", "param", "func"):
            rhs = self.ctx._relation_map.get(s)
            if rhs is None:
                val = self._draw()
            else:
                v = self._eval_point(point, rhs)
                if v <= 1e-12:
                    raise _Retry()
                val = math.sqrt(v)
        elif atom.kind == "exp":
            u = self._eval_point(point, atom.arg)
            if u > 60.0:
                raise _Retry()
            val = math.exp(u)
        elif atom.kind == "sin":
            val = math.sin(self._eval_point(point, atom.arg))
        else:
            val = math.cos(self._eval_point(point, atom.arg))
        point[s] = val
        return val

    def _eval_point(self, point: dict, c: sp.Expr) -> float:
        for s in c.free_symbols:
            self._atom_value(point, s)
        try:
            v = float(c.xreplace({s: sp.Float(point[s]) for s in c.free_symbols}))
        except (TypeError, ZeroDivisionError, OverflowError):
            raise _Retry() from None
        if not math.isfinite(v) or abs(v) > 1e12:
            raise _Retry()
        return v

    def eval_scalar(self, c: sp.Expr) -> list[float]:
        """Values of a scalar at each sample point."""
        return [vals[0] for vals in self._iter_points([c])]

    def eval_graded(self, e: GradedExpr) -> list[list[float]]:
        """Componentwise values of every odd-block coefficient per point."""
        coeffs = [e.terms[k] for k in sorted(e.terms, key=lambda k: (len(k), k))]
        if not coeffs:
            return [[0.0]] * self.samples
        return self._iter_points(coeffs)

    def _iter_points(self, coeffs: list[sp.Expr]) -> list[list[float]]:
        out = []
        for _ in range(self.samples):
            for _attempt in range(self.MAX_ATTEMPTS):
                point: dict = {}
                try:
                    out.append([self._eval_point(point, c) for c in coeffs])
                    break
                except _Retry:
                    continue
            else:
                raise SamplingError(
                    "could not find an admissible sample point "
                    f"after {self.MAX_ATTEMPTS} attempts"
                )
        return out


def is_zero(e: GradedExpr, sampler: Sampler | None = None) -> ZeroResult:
    """Exact zero test on canonical form, else seeded numeric sampling."""
    if e.is_sym_zero:
        return ZeroResult(True, "symbolic", 0.0)
    if sampler is None:
        sampler = Sampler(e.ctx)
    worst = 0.0
    for vals in sampler.eval_graded(e):
        worst = max(worst, max(abs(v) for v in vals))
    return ZeroResult(worst < sampler.tolerance, "numeric", worst)


# ----------------------------------------------------------------------
# printing
# ----------------------------------------------------------------------


def scalar_to_str(ctx: Context, c: sp.Expr) -> str:
    num, den = sp.fraction(c)
    ns = _sum_str(num)
    if den == 1:
        return ns
    if num.is_Add:
        ns = f"({ns})"
    ds = _sum_str(den)
    if not (den.is_Symbol or (den.is_Integer and den > 0)):
        ds = f"({ds})"
    return f"{ns}/{ds}"


def _sum_str(p: sp.Expr) -> str:
    terms = p.as_ordered_terms()
    out = _term_str(terms[0])
    for t in terms[1:]:
        s = _term_str(t)
        if s.startswith("-"):
            out += " - " + s[1:]
        else:
            out += " + " + s
    return out


def _term_str(t: sp.Expr) -> str:
    if t.is_Rational:
        return str(t) if t.q == 1 else f"{t.p}/{t.q}"
    if t.is_Symbol:
        return t.name
    if t.is_Pow:
        return _pow_str(t)
    if t.is_Mul:
        coeff, rest = t.as_coeff_Mul()
        factors = rest.as_ordered_factors() if rest.is_Mul else [rest]
        parts = [_factor_str(f) for f in factors]
        body = "*".join(parts)
        if coeff == 1:
            return body
        if coeff == -1:
            return "-" + body
        cs = str(coeff) if coeff.q == 1 else f"{coeff.p}/{coeff.q}"
        return f"{cs}*{body}"
    raise SuperGeomError(f"cannot print {t!r}")


def _factor_str(f: sp.Expr) -> str:
    if f.is_Symbol:
        return f.name
    if f.is_Pow:
        return _pow_str(f)
    if f.is_Add:
        return f"({_sum_str(f)})"
    if f.is_Rational:
        return f"({f.p}/{f.q})" if f.q != 1 else str(f)
    raise SuperGeomError(f"cannot print factor {f!r}")


def _pow_str(f: sp.Expr) -> str:
    base, e = f.base, f.exp
    if not e.is_Integer or e < 2:
        raise SuperGeomError(f"cannot print power {f!r}")
    bs = base.name if base.is_Symbol else f"({_sum_str(base)})"
    return f"{bs}^{int(e)}"


# ----------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------

_TOKEN_RE = re.compile(r"(\d+)|([A-Za-z_][A-Za-z_0-9]*)('*)|([-+*/^()])|(\S)")


class _Token(NamedTuple):
    kind: str
    value: str
    primes: int
    pos: int


def _tokenize(text: str) -> list[_Token]:
    toks = []
    for m in _TOKEN_RE.finditer(text):
        pos = m.start()
        if m.group(1) is not None:
            toks.append(_Token("int", m.group(1), 0, pos))
        elif m.group(2) is not None:
            toks.append(_Token("ident", m.group(2), len(m.group(3)), pos))
        elif m.group(4) is not None:
            toks.append(_Token("op", m.group(4), 0, pos))
        else:
            raise ParseError(f"unexpected character {m.group(5)!r}", pos)
    return toks


class _Parser:
    def __init__(self, text: str, chart, allow_new_params: bool):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.chart = chart
        self.ctx: Context = chart.ctx
        self.allow_new_params = allow_new_params

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of input", len(self.text))
        self.i += 1
        return t

    def expect_op(self, op: str):
        t = self.take()
        if t.kind != "op" or t.value != op:
            raise ParseError(f"expected {op!r}", t.pos)
        return t

    def at_op(self, *ops) -> bool:
        t = self.peek()
        return t is not None and t.kind == "op" and t.value in ops

    # expr := ["+"|"-"] term (("+"|"-") term)*
    def expr(self) -> GradedExpr:
        negate = False
        if self.at_op("+", "-"):
            negate = self.take().value == "-"
        out = self.term()
        if negate:
            out = -out
        while self.at_op("+", "-"):
            op = self.take().value
            rhs = self.term()
            out = out - rhs if op == "-" else out + rhs
        return out

    # term := factor (("*"|"/") factor)*
    def term(self) -> GradedExpr:
        out = self.factor()
        while self.at_op("*", "/"):
            op = self.take().value
            rhs = self.factor()
            if op == "*":
                out = out * rhs
            else:
                try:
                    out = out / rhs
                except ParityError as exc:
                    raise ParseError(str(exc)) from None
        return out

    # factor := base ("^" integer)?
    def factor(self) -> GradedExpr:
        base, odd_name = self.base()
        if not self.at_op("^"):
            return base
        self.take()
        sign = 1
        if self.at_op("-"):
            self.take()
            sign = -1
        t = self.take()
        if t.kind != "int":
            raise ParseError("expected integer exponent", t.pos)
        n = sign * int(t.value)
        if odd_name is not None and abs(n) >= 2:
            raise ParseError(
                f"odd symbol {odd_name!r} raised to power {n}", t.pos
            )
        try:
            return base ** n
        except ParityError as exc:
            raise ParseError(str(exc), t.pos) from None

    # base := rational | ident | ident "'"* "(" ident ")"
    #       | ("exp"|"sin"|"cos") "(" expr ")" | "(" expr ")"
    def base(self):
        t = self.take()
        if t.kind == "int":
            return GradedExpr.scalar(self.ctx, sp.Integer(int(t.value))), None
        if t.kind == "op" and t.value == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner, None
        if t.kind != "ident":
            raise ParseError(f"unexpected token {t.value!r}", t.pos)
        name, primes = t.value, t.primes
        if name in ("exp", "sin", "cos") and primes == 0 and self.at_op("("):
            self.take()
            arg = self.expr()
            self.expect_op(")")
            if not arg.is_homogeneous(EVEN) or any(k for k in arg.terms):
                raise ParseError(f"argument of {name} must be even", t.pos)
            u = arg.even_scalar()
            if name == "exp":
                return GradedExpr.from_terms(self.ctx, {(): self.ctx.exp_symbol(u)}), None
            return GradedExpr.from_terms(self.ctx, {(): self.ctx.trig_symbol(name, u)}), None
        if self.at_op("("):
            self.take()
            at = self.take()
            if at.kind != "ident" or at.primes:
                raise ParseError("function argument must be a coordinate", at.pos)
            self.expect_op(")")
            if not self.chart.has_coordinate(at.value):
                raise ParseError(f"unknown coordinate {at.value!r}", at.pos)
            if self.ctx.coordinate_parity(at.value) != EVEN:
                raise ParseError(
                    f"function argument {at.value!r} must be even", at.pos
                )
            try:
                s = self.ctx.function_symbol(name, primes, at.value)
            except SuperGeomError as exc:
                raise ParseError(str(exc), t.pos) from None
            return GradedExpr(self.ctx, {(): s}), None
        if primes:
            raise ParseError("derivative mark requires an argument list", t.pos)
        if self.chart.has_coordinate(name):
            g = GradedExpr.coordinate(self.ctx, name)
            odd = name if self.ctx.coordinate_parity(name) == ODD else None
            return g, odd
        if self.ctx.has_parameter(name):
            return GradedExpr(self.ctx, {(): self.ctx.parameter(name)}), None
        if self.allow_new_params:
            return GradedExpr(self.ctx, {(): self.ctx.parameter(name)}), None
        raise ParseError(f"unknown symbol {name!r}", t.pos)


def parse(text: str, chart, *, allow_new_params: bool = False) -> GradedExpr:
    """Parse an expression against a chart's coordinates and the parameter
    table; the result is canonical and parse(str(e)) == e."""
    p = _Parser(text, chart, allow_new_params)
    out = p.expr()
    t = p.peek()
    if t is not None:
        raise ParseError(f"trailing input {t.value!r}", t.pos)
    return out
