"""Exact branch-and-bound certification of radial inequalities on r >= 2M.

Expressions are sympy rational functions of ``r`` (optionally one parameter)
with ``Abs`` of linear terms.  Everything is evaluated in exact rational
arithmetic, so an enclosure is never rounded.

Certification of ``e >= 0`` (or ``e > 0``) proceeds piecewise:

* the domain is split where an ``Abs`` argument vanishes and at the tail
  radius ``R``; the tail ``r >= R`` is mapped to ``u = M/r`` in ``(0, M/R]``,
  where a Laurent expression in r becomes a quotient of polynomials in u;
* on each piece ``e = N/D`` is factored over the rationals.  Linear factors
  depending only on the radial variable give the exact zeros (saturation
  points) and poles, whose signs are known in closed form;
* the remaining factor must have a strict constant sign on each closed
  sub-piece.  That is proved by bisection with centred-form enclosures.  For
  a parametric family a box whose partial derivative in the parameter has a
  certified sign is reduced to the worst parameter endpoint.

A verdict is ``certified``, ``failed`` (with a witness box on which the
enclosure of e violates the inequality, or a point where exact evaluation
does) or ``inconclusive-at-depth``.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import sympy as sp

Q = Fraction
r_sym = sp.Symbol("r", positive=True)
u_sym = sp.Symbol("u", positive=True)

DEFAULT_TAIL = 1000
DEFAULT_DEPTH = 60


# ---------------------------------------------------------------------------
# rational intervals


class Interval:
    """Closed interval with exact rational endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = Q(lo)
        hi = lo if hi is None else Q(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo, self.hi = lo, hi

    def __repr__(self):
        return f"Interval({self.lo}, {self.hi})"

    def __eq__(self, other):
        return isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    @staticmethod
    def _lift(x) -> "Interval":
        return x if isinstance(x, Interval) else Interval(x)

    def __add__(self, o):
        o = self._lift(o)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        o = self._lift(o)
        p = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(p), max(p))

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError(f"division by an interval containing 0: {self}")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, o):
        return self * self._lift(o).reciprocal()

    def __rtruediv__(self, o):
        return self._lift(o) * self.reciprocal()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("integer exponents only")
        if n < 0:
            return (self**-n).reciprocal()
        if n == 0:
            return Interval(1)
        a, b = self.lo**n, self.hi**n
        if n % 2 == 0 and self.lo < 0 < self.hi:
            return Interval(0, max(a, b))
        return Interval(min(a, b), max(a, b))

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0, max(-self.lo, self.hi))

    def sqrt(self, bits: int = 64) -> "Interval":
        """Outward-rounded square root (dyadic endpoints with ``bits`` fractional bits)."""
        if self.lo < 0:
            raise ValueError("sqrt of an interval reaching below 0")
        s = 4**bits
        lo = math.isqrt(math.floor(self.lo * s))
        hi_sq = math.ceil(self.hi * s)
        hi = math.isqrt(hi_sq)
        if hi * hi < hi_sq:
            hi += 1
        return Interval(Q(lo, 2**bits), Q(hi, 2**bits))

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= Q(x) <= self.hi


def _to_q(x) -> Fraction:
    x = sp.sympify(x)
    if not isinstance(x, sp.Rational):
        raise TypeError(f"{x} is not rational")
    return Q(int(x.p), int(x.q))


def eval_interval(expr, box) -> Interval:
    """Natural interval extension of a sympy expression.

    ``box`` maps symbols to intervals (a bare interval is taken to be the
    range of ``r``).  Supports +, *, integer and half-integer powers, Abs.
    """
    if isinstance(box, Interval):
        box = {r_sym: box}
    expr = sp.sympify(expr)

    def ev(e) -> Interval:
        if e.is_Rational:
            return Interval(_to_q(e))
        if e.is_Symbol:
            return box[e]
        if e.is_Add:
            out = Interval(0)
            for a in e.args:
                out = out + ev(a)
            return out
        if e.is_Mul:
            out = Interval(1)
            for a in e.args:
                out = out * ev(a)
            return out
        if e.is_Pow:
            base, ex = e.args
            if ex.is_Integer:
                return ev(base) ** int(ex)
            if ex.is_Rational and ex.q == 2:
                root = ev(base).sqrt()
                return root ** int(ex.p)
        if isinstance(e, sp.Abs):
            return abs(ev(e.args[0]))
        raise TypeError(f"unsupported node {e.func.__name__} in {e}")

    return ev(expr)


# ---------------------------------------------------------------------------
# exact polynomials as {exponent tuple: Fraction}

Poly = Dict[Tuple[int, ...], Fraction]


def _poly(expr, gens) -> Poly:
    p = sp.Poly(sp.expand(expr), *gens)
    return {m: _to_q(c) for m, c in p.terms()}


def _peval(p: Poly, point: Sequence[Fraction]) -> Fraction:
    total = Q(0)
    for mono, c in p.items():
        term = c
        for x, e in zip(point, mono):
            if e:
                term *= x**e
        total += term
    return total


def _shift(p: Poly, centre: Sequence[Fraction]) -> Poly:
    """Coefficients of p(centre + y) in powers of y."""
    out: Poly = {}
    for mono, c in p.items():
        parts = [[(k, math.comb(e, k) * x ** (e - k)) for k in range(e + 1)] for e, x in zip(mono, centre)]
        terms = [((), c)]
        for part in parts:
            terms = [(m + (k,), v * w) for m, v in terms for k, w in part]
        for m, v in terms:
            if v:
                out[m] = out.get(m, Q(0)) + v
    return out


def enclose(p: Poly, box: Sequence[Interval]) -> Interval:
    """Centred-form enclosure of a polynomial over a box (exact)."""
    centre = [b.mid for b in box]
    half = [b.width / 2 for b in box]
    lo = hi = Q(0)
    for mono, c in _shift(p, centre).items():
        if not any(mono):
            lo += c
            hi += c
            continue
        mag = abs(c)
        symmetric = False
        for e, w in zip(mono, half):
            mag *= w**e
            symmetric |= e % 2 == 1
        if symmetric:
            lo -= mag
            hi += mag
        elif c > 0:
            hi += mag
        else:
            lo -= mag
    return Interval(lo, hi)


def _deriv(p: Poly, var: int) -> Poly:
    out: Poly = {}
    for mono, c in p.items():
        e = mono[var]
        if e:
            m = list(mono)
            m[var] -= 1
            out[tuple(m)] = out.get(tuple(m), Q(0)) + c * e
    return out


def _restrict(p: Poly, var: int, value: Fraction) -> Poly:
    """Substitute variable ``var`` (keeps the tuple length, exponent set to 0)."""
    out: Poly = {}
    for mono, c in p.items():
        m = list(mono)
        e = m[var]
        m[var] = 0
        out[tuple(m)] = out.get(tuple(m), Q(0)) + c * value**e
    return {m: c for m, c in out.items() if c}


# ---------------------------------------------------------------------------
# statements and reports


@dataclass(frozen=True)
class Inequality:
    """``expr >= 0`` (or ``> 0`` when ``strict``) for r in the domain.

    ``param`` is an optional ``(symbol, lo, hi)`` family parameter.  The
    domain starts at ``r_min`` (included unless strict) and is unbounded.
    """

    id: str
    description: str
    expr: sp.Expr
    strict: bool = False
    param: Optional[Tuple[sp.Symbol, Fraction, Fraction]] = None
    r_min: Fraction = Q(2)
    include_r_min: bool = True


@dataclass
class CertificateReport:
    id: str
    description: str
    domain: str
    verdict: str
    margin_lo: Optional[Fraction]
    margin_hi: Optional[Fraction]
    saturation: List[str] = field(default_factory=list)
    subdivisions: int = 0
    wall_time: float = 0.0
    witness: Optional[Tuple[str, ...]] = None
    note: str = ""

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("margin_lo", "margin_hi"):
            v = getattr(self, key)
            d[key] = None if v is None else float(v)
            d[key + "_exact"] = None if v is None else str(v)
        d["margin-lo"] = d.pop("margin_lo")
        d["margin-hi"] = d.pop("margin_hi")
        return d

    def text(self) -> str:
        def fmt(x):
            return "n/a" if x is None else f"{float(x):.6g}"

        sat = ",".join(self.saturation) or "-"
        line = (
            f"{self.id:<22} {self.verdict:<22} margin=[{fmt(self.margin_lo)}, {fmt(self.margin_hi)}] "
            f"saturation={sat} subdivisions={self.subdivisions} time={self.wall_time:.2f}s"
        )
        if self.witness:
            line += f" witness={list(self.witness)}"
        return line


class _Failure(Exception):
    def __init__(self, witness, value=None):
        super().__init__(str(witness))
        self.witness = witness
        self.value = value


class _Inconclusive(Exception):
    pass


# ---------------------------------------------------------------------------
# core


@dataclass
class _Piece:
    """One piece of the domain in variable ``var`` (r or u = 1/r)."""

    var: sp.Symbol
    lo: Fraction
    hi: Fraction
    lo_incl: bool
    hi_incl: bool
    num: sp.Expr
    den: sp.Expr
    to_r: Callable[[Fraction], Optional[Fraction]]


@dataclass
class _Stats:
    leaves: int = 0
    margin_lo: Optional[Fraction] = None
    margin_hi: Optional[Fraction] = None
    saturation: set = field(default_factory=set)

    def lower(self, v: Fraction):
        self.margin_lo = v if self.margin_lo is None else min(self.margin_lo, v)

    def upper(self, v: Fraction):
        self.margin_hi = v if self.margin_hi is None else min(self.margin_hi, v)


def _linear_roots(expr, var, gens):
    """Split ``expr`` into (constant sign, rational roots in ``var`` with multiplicity, remaining factor)."""
    content, factors = sp.factor_list(sp.expand(expr), *gens)
    roots: List[Tuple[Fraction, int]] = []
    rest = sp.Integer(1) * content
    for fac, mult in factors:
        if fac.free_symbols <= {var} and sp.degree(fac, var) == 1:
            a, b = sp.Poly(fac, var).all_coeffs()
            roots.append((_to_q(-b / a), mult))
            # keep the orientation (x - rho) and fold the leading sign into rest
            rest *= a**mult
        else:
            rest *= fac**mult
    return roots, rest


def _abs_breakpoints(expr) -> List[Fraction]:
    pts = []
    for a in expr.atoms(sp.Abs):
        arg = a.args[0]
        if arg.free_symbols != {r_sym} or sp.degree(arg, r_sym) != 1:
            raise TypeError(f"Abs of non-linear argument {arg}")
        pts.append(_to_q(sp.solve(arg, r_sym)[0]))
    return sorted(set(pts))


def _remove_abs(expr, point: Fraction):
    """Replace each Abs by +-(argument) with the sign it has at ``point``."""
    reps = {}
    for a in expr.atoms(sp.Abs):
        v = a.args[0].subs(r_sym, sp.Rational(point.numerator, point.denominator))
        reps[a] = a.args[0] if v >= 0 else -a.args[0]
    return expr.xreplace(reps)


def _pieces(ineq: Inequality, tail: Fraction) -> List[_Piece]:
    cuts = [c for c in _abs_breakpoints(ineq.expr) if c > ineq.r_min]
    cuts = sorted(set(cuts + ([tail] if tail > ineq.r_min else [])))
    edges = [ineq.r_min] + cuts
    gens = [r_sym] + ([ineq.param[0]] if ineq.param else [])
    pieces = []
    for i, lo in enumerate(edges):
        hi = edges[i + 1] if i + 1 < len(edges) else None
        sample = lo + 1 if hi is None else (lo + hi) / 2
        e = sp.together(_remove_abs(ineq.expr, sample))
        num, den = sp.fraction(e)
        lo_incl = ineq.include_r_min and not ineq.strict if i == 0 else True
        if hi is not None:
            pieces.append(_Piece(r_sym, lo, hi, lo_incl, True, sp.expand(num), sp.expand(den), lambda x: x))
        else:
            # r = 1/u: multiply numerator and denominator by u^k
            k = max(sp.degree(num, r_sym), sp.degree(den, r_sym))
            tnum = sp.expand(sp.expand(num.subs(r_sym, 1 / u_sym)) * u_sym**k)
            tden = sp.expand(sp.expand(den.subs(r_sym, 1 / u_sym)) * u_sym**k)
            pieces.append(
                _Piece(u_sym, Q(0), 1 / lo, False, lo_incl, tnum, tden, lambda x: None if x == 0 else 1 / x)
            )
    del gens
    return pieces


def tail_form(ineq: Inequality, tail=DEFAULT_TAIL) -> Tuple[sp.Expr, sp.Expr]:
    """(numerator, denominator) of the expression in ``u = 1/r`` on ``r >= tail``."""
    last = _pieces(ineq, Q(tail))[-1]
    return last.num, last.den


class _Certifier:
    def __init__(self, ineq: Inequality, depth: int, stats: _Stats):
        self.ineq = ineq
        self.depth = depth
        self.stats = stats
        self.param = ineq.param

    # exact value of e at a point of a piece
    def _value(self, num: Poly, den: Poly, point) -> Optional[Fraction]:
        d = _peval(den, point)
        return None if d == 0 else _peval(num, point) / d

    def run_piece(self, pc: _Piece):
        gens = [pc.var] + ([self.param[0]] if self.param else [])
        self.gens = gens
        self.num_p = _poly(pc.num, gens)
        self.den_p = _poly(pc.den, gens)
        self.piece = pc
        self._region(self.num_p, self.den_p, pc.num, pc.den, pc.lo, pc.hi, pc.lo_incl, pc.hi_incl, self.depth, top=True)

    def _param_box(self) -> List[Interval]:
        return [Interval(self.param[1], self.param[2])] if self.param else []

    def _record_point(self, x: Fraction, check: bool = True):
        """Exact check at a radial point (all parameter corners and centre)."""
        pars = [[]] if not self.param else [[self.param[1]], [self.param[2]], [(self.param[1] + self.param[2]) / 2]]
        for p in pars:
            v = self._value(self.num_p, self.den_p, [x] + p)
            if v is None:
                continue
            self.stats.upper(v)
            if check and v < 0 or (v == 0 and self.ineq.strict):
                raise _Failure((str(x),) + tuple(str(t) for t in p), v)

    def _region(self, num_p, den_p, num, den, lo, hi, lo_incl, hi_incl, depth, top=False):
        """Certify sign(num/den) >= 0 (> 0 where strict) on the radial range, all parameters."""
        var = self.gens[0]
        zeros, num_rest = _linear_roots(num, var, self.gens)
        poles, den_rest = _linear_roots(den, var, self.gens)
        for rho, _ in poles:
            if lo < rho < hi or (rho == lo and lo_incl) or (rho == hi and hi_incl):
                raise _Failure((str(rho),), None)
        inner = sorted({rho for rho, _ in zeros if lo < rho < hi})
        edges = [lo] + inner + [hi]
        for rho, _ in zeros:
            if lo < rho < hi or (rho == lo and lo_incl) or (rho == hi and hi_incl):
                if self.ineq.strict:
                    raise _Failure((str(rho),), Q(0))
                if top:
                    r_val = self.piece.to_r(rho)
                    self.stats.saturation.add("inf" if r_val is None else r_val)
                self.stats.upper(Q(0))
        rest = sp.expand(num_rest * den_rest)
        rest_p = _poly(rest, self.gens)
        for a, b in zip(edges[:-1], edges[1:]):
            mid = (a + b) / 2
            lin = 1
            for rho, mult in zeros + poles:
                if mult % 2 and mid < rho:
                    lin = -lin
            self._bisect(rest_p, lin, [Interval(a, b)] + self._param_box(), depth,
                         open_ends=(a == lo and not lo_incl, b == hi and not hi_incl),
                         num_p=num_p, den_p=den_p)
            if top:
                for x in (a, b):
                    # excluded ends only contribute limits to the margin
                    self._record_point(x, check=(x != lo or lo_incl) and (x != hi or hi_incl))
                self._record_point(mid)

    def _bisect(self, rest_p: Poly, sign: int, box: List[Interval], depth: int, open_ends, num_p, den_p):
        """Prove sign * rest > 0 on the box (radial ends in ``open_ends`` excluded)."""
        stack = [(box, 0)]
        target = {m: c * sign for m, c in rest_p.items()}
        while stack:
            b, level = stack.pop()
            enc = enclose(target, b)
            if enc.lo > 0:
                self._leaf(b, num_p, den_p)
                continue
            centre = [x.mid for x in b]
            if _peval(target, centre) <= 0:
                v = self._value(num_p, den_p, centre)
                raise _Failure(tuple(f"[{x.lo}, {x.hi}]" for x in b), v)
            if enc.hi < 0:
                raise _Failure(tuple(f"[{x.lo}, {x.hi}]" for x in b), None)
            if self.param and self._monotone_reduce(target, b, open_ends, num_p, den_p, level):
                continue
            if level >= depth:
                raise _Inconclusive(f"depth {depth} reached on box {b}")
            # bisect the widest coordinate relative to the starting box
            k = max(range(len(b)), key=lambda i: b[i].width / box[i].width if box[i].width else 0)
            m = b[k].mid
            left, right = list(b), list(b)
            left[k] = Interval(b[k].lo, m)
            right[k] = Interval(m, b[k].hi)
            stack.append((right, level + 1))
            stack.append((left, level + 1))

    def _monotone_reduce(self, target, b, open_ends, num_p, den_p, level) -> bool:
        dp = enclose(_deriv(target, 1), b)
        if dp.lo >= 0:
            worst = b[1].lo
        elif dp.hi <= 0:
            worst = b[1].hi
        else:
            return False
        reduced = _restrict(target, 1, worst)
        x = self.gens[0]
        expr = sum(sp.Rational(c.numerator, c.denominator) * x ** m[0] for m, c in reduced.items())
        lo_incl = not (open_ends[0] and b[0].lo == self.piece.lo)
        hi_incl = not (open_ends[1] and b[0].hi == self.piece.hi)
        sub = _Certifier(
            Inequality(self.ineq.id, "", expr, strict=True), self.depth - level, _Stats()
        )
        sub.gens = [x]
        sub.piece = self.piece
        sub.num_p, sub.den_p = _poly(expr, [x]), {(0,): Q(1)}
        try:
            sub._region(sub.num_p, sub.den_p, expr, sp.Integer(1), b[0].lo, b[0].hi, lo_incl, hi_incl, sub.depth)
        except _Failure:
            return False
        self.stats.leaves += sub.stats.leaves
        self.stats.lower(Q(0))
        return True

    def _leaf(self, b: List[Interval], num_p, den_p):
        self.stats.leaves += 1
        n = enclose(num_p, b)
        d = enclose(den_p, b)
        if d.lo > 0 or d.hi < 0:
            e = n / d
            self.stats.lower(max(e.lo, Q(0)))
        else:
            self.stats.lower(Q(0))


def certify(
    ineq: Inequality,
    tail: Fraction = Q(DEFAULT_TAIL),
    depth: int = DEFAULT_DEPTH,
) -> CertificateReport:
    start = time.perf_counter()
    stats = _Stats()
    dom = ("(" if not ineq.include_r_min or ineq.strict else "[") + f"{ineq.r_min}M, inf)"
    if ineq.param:
        dom += f" x {ineq.param[0]} in [{ineq.param[1]}, {ineq.param[2]}]"
    verdict, witness, note = "certified", None, ""
    try:
        for pc in _pieces(ineq, Q(tail)):
            _Certifier(ineq, depth, stats).run_piece(pc)
    except _Failure as exc:
        verdict = "failed"
        witness = exc.witness
        if exc.value is not None:
            stats.upper(exc.value)
            stats.lower(min(exc.value, stats.margin_lo if stats.margin_lo is not None else exc.value))
    except _Inconclusive as exc:
        verdict, note = "inconclusive-at-depth", str(exc)
    sat = sorted(stats.saturation, key=lambda v: (v == "inf", v if v != "inf" else 0))
    lo = stats.margin_lo
    if verdict == "certified":
        lo = Q(0) if sat else lo
        hi = Q(0) if sat else stats.margin_hi
    else:
        # a witness only bounds the infimum from above
        hi = stats.margin_hi
        lo = None
    if lo is not None and hi is not None and lo > hi:
        lo = hi
    return CertificateReport(
        id=ineq.id,
        description=ineq.description,
        domain=dom,
        verdict=verdict,
        margin_lo=lo,
        margin_hi=hi,
        saturation=[str(s) for s in sat],
        subdivisions=stats.leaves,
        wall_time=time.perf_counter() - start,
        witness=witness,
        note=note,
    )


def exact_value(ineq: Inequality, r, param=None) -> Fraction:
    subs = {r_sym: sp.Rational(Q(r).numerator, Q(r).denominator)}
    if ineq.param:
        p = Q(param)
        subs[ineq.param[0]] = sp.Rational(p.numerator, p.denominator)
    return _to_q(ineq.expr.subs(subs))


# ---------------------------------------------------------------------------
# corpus (M = 1; every expression is homogeneous, so M scales out)

M = sp.Integer(1)
_r = r_sym
c2 = sp.Symbol("c2", real=True)
c1abs = sp.Symbol("c1abs", nonnegative=True)


def morawetz_A_expr():
    return (_r - 3 * M) * (_r - 2 * M) / (2 * _r**2)


def morawetz_q_expr():
    return 9 * M**2 * (_r - 2 * M) * (2 * _r - 3 * M) / (4 * _r**5)


def morawetz_g_expr(c=sp.Rational(5, 6)):
    return c * 3 * M * (_r - 3 * M) ** 2 * (_r - 2 * M) / (4 * _r**5)


def bigdivp_triple():
    """E1 coefficients (b0, b1, b2) of the divergence after extracting g."""
    b0 = (_r - 3 * M) ** 2 * (14 * M**2 - 7 * M * _r + 4 * _r**2) / (16 * _r**5)
    b1 = M * (90 * M**3 - 105 * M**2 * _r + 28 * M * _r**2 + _r**3) / (4 * _r**5)
    b2 = (_r - 3 * M) ** 2 * (10 * M**2 - 5 * M * _r + 4 * _r**2) / (16 * _r**5)
    return b0, b1, b2


def general_triple(f, q, g=0):
    """E1 coefficients for A = f(r) d_r and radial q, with g(|beta_T|^2 + |beta_Z|^2) extracted."""
    df = sp.diff(f, _r)
    b0 = g / 2 + q + f * (_r - M) / (2 * _r * (_r - 2 * M)) - df / 2
    b1 = -2 * g - 2 * M * f / ((_r - 2 * M) * _r) + df
    b2 = -g / 2 + f * (_r - 3 * M) / (2 * (_r - 2 * M) * _r)
    return tuple(sp.cancel(x) for x in (b0, b1, b2))


def e1_conditions(b0, b1, b2) -> Dict[str, sp.Expr]:
    """Expressions that are >= 0 exactly when the E1 form with these coefficients is PSD."""
    return {
        "b1": b1,
        "b2": b2,
        "b2-b0": b2 - b0,
        "b0+b2": b0 + b2,
        "b0+b1-b2": b0 + b1 - b2,
    }


def two_fifths_expr():
    return sp.Rational(9, 8) * M**2 * _r**-4 * (6 * M**2 - 13 * M * _r + 6 * _r**2 + sp.Abs(_r - 3 * M) * (3 * _r - 5 * M))


def timelike_expr(coeff_xi, coeff_A):
    """Norm of coeff_xi * d_t + coeff_A * A, scaled by r^3 / (r - 2M) (> 0 iff timelike)."""
    f = 1 - 2 * M / _r
    A = morawetz_A_expr()
    norm = coeff_xi**2 * f - coeff_A**2 * A**2 / f
    return sp.expand(sp.cancel(norm * _r**3 / (_r - 2 * M)))


def corpus() -> List[Inequality]:
    items: List[Inequality] = []
    b = bigdivp_triple()
    for name, e in e1_conditions(*b).items():
        items.append(Inequality(f"a.bigdivP.{name}", f"E1 condition {name} >= 0 for the divergence triple", sp.cancel(e)))
    pre = general_triple(morawetz_A_expr(), morawetz_q_expr())
    for name, e in e1_conditions(*pre).items():
        items.append(Inequality(f"a.full.{name}", f"E1 condition {name} >= 0 before extracting g", sp.cancel(e)))

    f, g, q = morawetz_A_expr(), morawetz_g_expr(), morawetz_q_expr()
    df = sp.diff(f, _r)
    k = M * f / ((_r - 2 * M) * _r)
    gq = {
        "g>=0": g,
        "g<=df/2-Mf": df / 2 - k - g,
        "g<=f(r-3M)": f * (_r - 3 * M) / ((_r - 2 * M) * _r) - g,
        "q>=g+Mf-df/2": q - (g + k - df / 2),
        "q>=-f/r+df/2": q - (-f / _r + df / 2),
        "q<=-g-Mf+df/2": -g - k + df / 2 - q,
        "q>=0": q,
    }
    for name, e in gq.items():
        items.append(Inequality(f"b.{name}", "coefficient constraint on (A, g, q)", sp.cancel(e)))

    items.append(Inequality("c.two-fifths", "(9/8)M^2 r^-4 (6M^2-13Mr+6r^2+|r-3M|(3r-5M)) <= 2/5",
                            sp.Rational(2, 5) - two_fifths_expr(), strict=True))
    items.append(Inequality("d.one-hundredth", "5r^3-84Mr^2+423M^2r-540M^3 >= r^3/25",
                            5 * _r**3 - 84 * M * _r**2 + 423 * M**2 * _r - 540 * M**3 - _r**3 / 25))
    items.append(Inequality("e.timelike", "xi + c2 A future timelike for |c2| <= 2",
                            timelike_expr(1, c2), strict=True, param=(c2, Q(-2), Q(2))))
    items.append(Inequality("f.positivity", "(1 - 2|c1|/5) xi + c1 A future causal for |c1| <= 10/9",
                            timelike_expr(1 - sp.Rational(2, 5) * c1abs, c1abs), strict=True,
                            param=(c1abs, Q(0), Q(10, 9))))
    return items


# timelike also needs a positive time component; for (f) that is 1 - 2|c1|/5 >= 5/9
FUTURE_POINTING = Inequality("f.future", "1 - 2|c1|/5 > 0 for |c1| <= 10/9",
                             1 - sp.Rational(2, 5) * c1abs + 0 * _r, strict=True, param=(c1abs, Q(0), Q(10, 9)))


def false_two_fifths() -> Inequality:
    """Deliberately false variant (bound 1/3) used to exercise the failure path."""
    return Inequality("c.false-one-third", "same expression <= 1/3 (false)",
                      sp.Rational(1, 3) - two_fifths_expr(), strict=True)


def _certify_by_id(args):
    ident, tail, depth = args
    items = {it.id: it for it in corpus() + [FUTURE_POINTING]}
    return certify(items[ident], Q(tail), depth)


def certify_corpus(tail=DEFAULT_TAIL, depth=DEFAULT_DEPTH, workers: int = 1) -> List[CertificateReport]:
    ids = [it.id for it in corpus()] + [FUTURE_POINTING.id]
    jobs = [(i, Q(tail), depth) for i in ids]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_certify_by_id, jobs))
    else:
        reports = [_certify_by_id(j) for j in jobs]
    return sorted(reports, key=lambda rep: rep.id)


def reports_json(reports: Sequence[CertificateReport]) -> str:
    return json.dumps([rep.as_dict() for rep in reports], indent=2, sort_keys=True)
