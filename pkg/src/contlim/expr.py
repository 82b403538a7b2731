"""Core expression algebra: sums of terms with exact coefficients.

A Term is an ordered product of Dirac atoms, an ordered product of
matrix-word atoms, a multiset of commutative scalar atoms and a multiset
of denominator atoms.  Expr is a merged sum of terms.  All values are
immutable; every operation is a pure function.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .atoms import (Bracket, Chiral, Eps, Eta, Gamma, Gamma5, Inner, MatSym,
                    RegFactor, Scalar, Slashed)
from .context import Context
from .scalars import ONE, QI


class MalformedExpression(Exception):
    pass


class TracedOpenIndex(Exception):
    pass


def _sorted_atoms(atoms: Iterable) -> Tuple:
    return tuple(sorted(atoms, key=lambda a: a.key()))


class Term:
    """An ordered product of atoms; hashable with a cached canonical key."""

    __slots__ = ("dirac", "mats", "scal", "den", "tag", "_key", "_hash")

    def __init__(self, dirac: Tuple = (), mats: Tuple = (), scal: Tuple = (),
                 den: Tuple = (), tag: Optional[str] = None):
        self.dirac = dirac
        self.mats = mats
        self.scal = scal
        self.den = den
        self.tag = tag
        self._key = (tuple(a.key() for a in dirac),
                     tuple(a.key() for a in mats),
                     tuple(a.key() for a in scal),
                     tuple(a.key() for a in den),
                     tag or "")
        self._hash = hash(self._key)

    def key(self):
        return self._key

    def __hash__(self):
        return self._hash

    def __eq__(self, o):
        return isinstance(o, Term) and self._hash == o._hash and \
            self._key == o._key

    def __str__(self):
        parts = [str(a) for a in self.dirac] + [str(a) for a in self.mats] + \
                [str(a) for a in self.scal]
        s = " ".join(parts) if parts else "1"
        if self.den:
            s += " / (" + " ".join(str(a) for a in self.den) + ")"
        if self.tag:
            s += f" #[{self.tag}]"
        return s


def _cancel(scal: List, den: List) -> Tuple[Tuple, Tuple]:
    """Cancel atoms appearing in both numerator and denominator."""
    den = list(den)
    out = []
    for a in scal:
        try:
            den.remove(a)
        except ValueError:
            out.append(a)
    return _sorted_atoms(out), _sorted_atoms(den)


class Expr:
    """A finite sum of terms with QI coefficients, keyed by canonical term."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Dict[Term, QI]] = None):
        self._terms: Dict[Term, QI] = {}
        if terms:
            for t, c in terms.items():
                if not c.is_zero():
                    self._terms[t] = c

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero() -> "Expr":
        return Expr()

    @staticmethod
    def one() -> "Expr":
        return Expr({Term(): ONE})

    @staticmethod
    def const(c) -> "Expr":
        if not isinstance(c, QI):
            c = QI.of(c)
        return Expr({Term(): c})

    @staticmethod
    def term(coeff, dirac=(), mats=(), scal=(), den=(), tag=None) -> "Expr":
        if not isinstance(coeff, QI):
            coeff = QI.of(coeff)
        scal, den = _cancel(list(scal), list(den))
        return Expr({Term(tuple(dirac), tuple(mats), scal, den, tag): coeff})

    @staticmethod
    def atoms(*atoms, coeff=1) -> "Expr":
        dirac, mats, scal = [], [], []
        for a in atoms:
            if isinstance(a, (Chiral, Gamma5, Gamma, Slashed)):
                dirac.append(a)
            elif isinstance(a, MatSym):
                mats.append(a)
            else:
                scal.append(a)
        return Expr.term(1, dirac, mats, scal).scale(coeff)

    # -- inspection -----------------------------------------------------------

    def items(self):
        return sorted(self._terms.items(), key=lambda kv: kv[0].key())

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coeff_of(self, t: Term) -> QI:
        return self._terms.get(t, QI())

    def single(self) -> Tuple[Term, QI]:
        if len(self._terms) != 1:
            raise ValueError(f"expected a single term, got {len(self._terms)}")
        return next(iter(self._terms.items()))

    # -- ring operations ------------------------------------------------------

    def __add__(self, o: "Expr") -> "Expr":
        if not self._terms:
            return o
        if not o._terms:
            return self
        out = dict(self._terms)
        for t, c in o._terms.items():
            s = out.get(t)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(t, None)
            else:
                out[t] = s
        e = Expr()
        e._terms = out
        return e

    def __sub__(self, o: "Expr") -> "Expr":
        return self + o.scale(-1)

    def __neg__(self) -> "Expr":
        return self.scale(-1)

    def scale(self, c) -> "Expr":
        if not isinstance(c, QI):
            c = QI.of(c)
        if c.is_zero():
            return Expr.zero()
        e = Expr()
        e._terms = {t: cc * c for t, cc in self._terms.items()}
        return e

    def __mul__(self, o: "Expr") -> "Expr":
        out: Dict[Term, QI] = {}
        for t1, c1 in self._terms.items():
            for t2, c2 in o._terms.items():
                tag = t1.tag or t2.tag
                scal, den = _cancel(list(t1.scal + t2.scal),
                                    list(t1.den + t2.den))
                t = Term(t1.dirac + t2.dirac, t1.mats + t2.mats, scal, den, tag)
                c = c1 * c2
                s = out.get(t)
                s = c if s is None else s + c
                if s.is_zero():
                    out.pop(t, None)
                else:
                    out[t] = s
        e = Expr()
        e._terms = out
        return e

    def divide_by(self, o: "Expr") -> "Expr":
        """Divide by a single-term expression with scalar content only."""
        t, c = o.single()
        if t.dirac or t.mats:
            raise ValueError("can only divide by scalar-valued terms")
        out = Expr.zero()
        for t1, c1 in self._terms.items():
            out = out + Expr.term(c1 / c, t1.dirac, t1.mats,
                                  t1.scal + t.den, t1.den + t.scal, t1.tag)
        return out

    def conj_scalars(self) -> "Expr":
        """Complex conjugation for scalar-valued expressions."""
        out = Expr.zero()
        for t, c in self._terms.items():
            if t.dirac or t.mats:
                raise ValueError("conj_scalars applies to scalar-valued expressions")
            scal = tuple(a.conjugate() for a in t.scal)
            den = tuple(a.conjugate() for a in t.den)
            out = out + Expr.term(c.conj(), (), (), scal, den, t.tag)
        return out

    def retag(self, tag: Optional[str]) -> "Expr":
        return Expr({Term(t.dirac, t.mats, t.scal, t.den, tag): c
                     for t, c in self._terms.items()})

    def strip_tags(self) -> "Expr":
        out = Expr.zero()
        for t, c in self._terms.items():
            out = out + Expr({Term(t.dirac, t.mats, t.scal, t.den, None): c})
        return out

    def split_by_tag(self) -> Tuple["Expr", "Expr"]:
        """(untagged part, tagged remainder part)."""
        main, rem = Expr.zero(), Expr.zero()
        for t, c in self._terms.items():
            if t.tag:
                rem = rem + Expr({t: c})
            else:
                main = main + Expr({t: c})
        return main, rem

    def map_terms(self, f) -> "Expr":
        """Apply f(term, coeff) -> Expr to every term and sum."""
        out = Expr.zero()
        for t, c in self._terms.items():
            out = out + f(t, c)
        return out

    def __eq__(self, o) -> bool:
        return isinstance(o, Expr) and self._terms == o._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __str__(self):
        if not self._terms:
            return "0"
        return " + ".join(f"{c} {t}" for t, c in self.items())

    __repr__ = __str__


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, QI):
        return Expr.const(x)
    return Expr.const(QI.of(x))


# ---------------------------------------------------------------- index check


def _index_census(t: Term) -> Dict[str, int]:
    counts: Dict[str, int] = {}

    def bump(idx):
        counts[idx] = counts.get(idx, 0) + 1

    for a in t.dirac:
        if isinstance(a, Gamma):
            bump(a.index)
    for a in itertools.chain(t.scal, t.den):
        if isinstance(a, Eta):
            bump(a.i)
            bump(a.j)
        elif isinstance(a, Inner):
            for name, _ in (a.a, a.b):
                if name.startswith("e[") and name.endswith("]"):
                    bump(name[2:-1])
        elif isinstance(a, Eps):
            for name, _ in a.slots:
                if name.startswith("e[") and name.endswith("]"):
                    bump(name[2:-1])
    return counts


def check_indices(e: Expr) -> None:
    """Tensor indices must be free (1 occurrence) or contracted (2)."""
    for t, _ in e.items():
        for idx, n in _index_census(t).items():
            if n > 2:
                raise MalformedExpression(
                    f"index {idx!r} appears {n} times in term {t}")


def _resolve_eta_term(t: Term, c: QI) -> Tuple[Term, QI]:
    """Contract eta factors carrying a dummy index into gammas/inner slots."""
    while True:
        census = _index_census(t)
        hit = False
        for k, a in enumerate(t.scal):
            if not isinstance(a, Eta):
                continue
            if a.i == a.j and census.get(a.i, 0) == 2:
                c = c * QI.of(4)
                t = Term(t.dirac, t.mats,
                         _sorted_atoms(t.scal[:k] + t.scal[k + 1:]), t.den, t.tag)
                hit = True
                break
            for dummy, other in ((a.i, a.j), (a.j, a.i)):
                if census.get(dummy, 0) != 2 or dummy == other:
                    continue
                dirac = list(t.dirac)
                scal = list(t.scal[:k] + t.scal[k + 1:])
                done = False
                for m, d in enumerate(dirac):
                    if isinstance(d, Gamma) and d.index == dummy:
                        dirac[m] = Gamma(other)
                        done = True
                        break
                if not done:
                    for m, s in enumerate(scal):
                        if isinstance(s, Eta) and dummy in (s.i, s.j):
                            scal[m] = Eta.of(other, s.j if s.i == dummy else s.i)
                            done = True
                            break
                        if isinstance(s, Inner) and f"e[{dummy}]" in (s.a[0], s.b[0]):
                            sa, sb = s.a, s.b
                            if sa[0] == f"e[{dummy}]":
                                sa = (f"e[{other}]", sa[1])
                            else:
                                sb = (f"e[{other}]", sb[1])
                            scal[m] = Inner.of(sa[0], sa[1], sb[0], sb[1])
                            done = True
                            break
                if done:
                    t = Term(tuple(dirac), t.mats, _sorted_atoms(scal), t.den, t.tag)
                    hit = True
                break
            if hit:
                break
        if not hit:
            return t, c


# --------------------------------------------------------------- normal order


def _push_chirals(word: List) -> Tuple[bool, List]:
    """Move chiral projectors to the front (handedness flips through each
    vector factor) and merge.  Returns (False, []) on chiral cancellation."""
    chir: Optional[Chiral] = None
    rest: List = []
    for a in word:
        if isinstance(a, Chiral):
            cur = a if len(rest) % 2 == 0 else a.other
            if chir is None:
                chir = cur
            elif chir.hand != cur.hand:
                return False, []
        else:
            rest.append(a)
    return True, ([chir] if chir is not None else []) + rest


def _first_identical_pair(word: List) -> Optional[Tuple[int, int]]:
    for i, a in enumerate(word):
        if not isinstance(a, (Slashed, Gamma)):
            continue
        for j in range(i + 1, len(word)):
            if word[j] == a:
                return i, j
    return None


_FUEL = 100000


def normal_order(e: Expr, ctx: Optional[Context] = None) -> Expr:
    """Canonical form: chiral projector first, gamma5 eliminated in favor of
    chiral projectors, repeated slashed vectors contracted through the
    anticommutation relations with the context metric table, commutative
    factors sorted, equal terms merged."""
    ctx = ctx or Context()
    check_indices(e)
    out: Dict[Term, QI] = {}
    for t0, c0 in e.items():
        stack = [(c0, t0)]
        fuel = _FUEL
        while stack:
            fuel -= 1
            if fuel < 0:
                raise MalformedExpression("normal_order failed to terminate")
            c, t = stack.pop()
            word = list(t.dirac)
            k = next((i for i, a in enumerate(word) if isinstance(a, Gamma5)), None)
            if k is not None:
                for hand, sign in (("R", 1), ("L", -1)):
                    w = word[:k] + [Chiral(hand)] + word[k + 1:]
                    stack.append((c * QI.of(sign), Term(tuple(w), t.mats, t.scal,
                                                        t.den, t.tag)))
                continue
            ok, word = _push_chirals(word)
            if not ok:
                continue
            pair = _first_identical_pair(word)
            if pair is None:
                tt, cc = _resolve_eta_term(Term(tuple(word), t.mats,
                                                _sorted_atoms(t.scal), t.den,
                                                t.tag), c)
                key, den = _cancel(list(tt.scal), list(tt.den))
                tt = Term(tt.dirac, tt.mats, key, den, tt.tag)
                s = out.get(tt, QI()) + cc
                if s.is_zero():
                    out.pop(tt, None)
                else:
                    out[tt] = s
                continue
            i, j = pair
            if j == i + 1:
                val = as_expr(ctx.pair(word[i], word[j]))
                rest = tuple(word[:i] + word[j + 1:])
                prod = val * Expr({Term(rest, t.mats, t.scal, t.den, t.tag): c})
                stack.extend((cc, tt) for tt, cc in prod._terms.items())
                continue
            # move the right partner leftward: ...a b... = 2<a,b> (drop) - ...b a...
            val = as_expr(ctx.pair(word[j - 1], word[j])).scale(2)
            dropped = tuple(word[:j - 1] + word[j + 1:])
            prod = val * Expr({Term(dropped, t.mats, t.scal, t.den, t.tag): c})
            stack.extend((cc, tt) for tt, cc in prod._terms.items())
            swapped = tuple(word[:j - 1] + [word[j], word[j - 1]] + word[j + 1:])
            stack.append((-c, Term(swapped, t.mats, t.scal, t.den, t.tag)))
    return Expr(out)


# -------------------------------------------------------------------- adjoint


def adjoint(e: Expr, xi_flip: bool = False) -> Expr:
    """Spin adjoint: reverses atom order, conjugates coefficients and scalar
    atoms, toggles conjugation flags on regularization factors and non-real
    slashed vectors, swaps chiral handedness (chi_L* = chi_R), negates
    gamma5, swaps acute/grave accents on matrix words.

    With xi_flip=True, slashed xi-class vectors additionally flip sign
    (the y - x = -(x - y) convention for callers tracking the sign of xi
    explicitly instead of through conjugate factors)."""
    out = Expr.zero()
    for t, c in e.items():
        coeff = c.conj()
        dirac = []
        for a in reversed(t.dirac):
            if isinstance(a, Chiral):
                dirac.append(a.other)
            elif isinstance(a, Gamma5):
                coeff = -coeff
                dirac.append(a)
            elif isinstance(a, Gamma):
                dirac.append(a)
            else:
                if xi_flip and a.name in ("xi", "xicheck"):
                    coeff = -coeff
                dirac.append(a.adjoint())
        mats = tuple(a.adjoint() for a in reversed(t.mats))
        scal = tuple(a.conjugate() for a in t.scal)
        den = tuple(a.conjugate() for a in t.den)
        out = out + Expr.term(coeff, dirac, mats, scal, den, t.tag)
    return out


# --------------------------------------------------------------------- traces


def _pair_cache(ctx: Context):
    cache = getattr(ctx, "_pair_cache", None)
    if cache is None:
        cache = {}
        setattr(ctx, "_pair_cache", cache)
    return cache


def _pair_value(ctx: Context, a, b) -> Expr:
    cache = _pair_cache(ctx)
    key = (a, b)
    v = cache.get(key)
    if v is None:
        v = as_expr(ctx.pair(a, b))
        cache[key] = v
        cache[(b, a)] = v
    return v


def _trace_even(vecs: List, ctx: Context) -> Expr:
    """Tr(v1/ ... v2n/) = 4 * sum over perfect matchings of signed products
    of inner products, pruning matchings with a vanishing pair."""
    if not vecs:
        return Expr.const(4)
    if len(vecs) % 2 == 1:
        return Expr.zero()

    def rec(idx: Tuple[int, ...]) -> Expr:
        if not idx:
            return Expr.one()
        out = Expr.zero()
        a = idx[0]
        for k in range(1, len(idx)):
            pv = _pair_value(ctx, vecs[a], vecs[idx[k]])
            if pv.is_zero():
                continue
            sub = rec(idx[1:k] + idx[k + 1:])
            if sub.is_zero():
                continue
            contrib = pv * sub
            out = out + (contrib if k % 2 == 1 else -contrib)
        return out

    return rec(tuple(range(len(vecs)))).scale(4)


def _vec_slot(v) -> Tuple[str, bool]:
    if isinstance(v, Gamma):
        return (f"e[{v.index}]", False)
    name = "xi" if v.name in ("xi", "xicheck") else v.name
    return (name, v.conj)


def _trace_g5(vecs: List, ctx: Context) -> Expr:
    """Tr(gamma5 v1/ ... v2n/): vanishes below four vectors; for four
    Tr(gamma5 a/ b/ c/ d/) = -4i eps(a,b,c,d); beyond four, choose the four
    epsilon slots and Wick-pair the rest, with the global permutation
    sign."""
    n = len(vecs)
    if n < 4 or n % 2 == 1:
        return Expr.zero()
    out = Expr.zero()
    for quad in itertools.combinations(range(n), 4):
        esign, eps = Eps.of([_vec_slot(vecs[q]) for q in quad])
        if eps is None:
            continue
        rest = tuple(i for i in range(n) if i not in quad)
        wick = _signed_wick(rest, vecs, ctx)
        if wick.is_zero():
            continue
        order = list(rest) + list(quad)
        sign = 1
        for i in range(len(order)):
            for j in range(i + 1, len(order)):
                if order[i] > order[j]:
                    sign = -sign
        out = out + wick * Expr.atoms(eps).scale(QI.of(0, -4 * sign * esign))
    return out


def _signed_wick(idx: Tuple[int, ...], vecs: List, ctx: Context) -> Expr:
    """Sum over perfect matchings of idx (relative order) of signed pair
    products."""
    if not idx:
        return Expr.one()
    out = Expr.zero()
    a = idx[0]
    for k in range(1, len(idx)):
        pv = _pair_value(ctx, vecs[a], vecs[idx[k]])
        if pv.is_zero():
            continue
        sub = _signed_wick(idx[1:k] + idx[k + 1:], vecs, ctx)
        if sub.is_zero():
            continue
        contrib = pv * sub
        out = out + (contrib if k % 2 == 1 else -contrib)
    return out


def _chiral_front(t: Term, c: QI) -> List[Tuple[QI, Term]]:
    """Eliminate gamma5 and push chiral projectors to the front, without
    applying any contraction identities."""
    stack = [(c, list(t.dirac))]
    done: List[Tuple[QI, Term]] = []
    while stack:
        coeff, word = stack.pop()
        k = next((i for i, a in enumerate(word) if isinstance(a, Gamma5)), None)
        if k is not None:
            stack.append((coeff, word[:k] + [Chiral("R")] + word[k + 1:]))
            stack.append((-coeff, word[:k] + [Chiral("L")] + word[k + 1:]))
            continue
        ok, word = _push_chirals(word)
        if not ok:
            continue
        done.append((coeff, Term(tuple(word), t.mats, t.scal, t.den, t.tag)))
    return done


def dirac_trace(e: Expr, ctx: Optional[Context] = None) -> Expr:
    """Spinor trace.  Epsilon contributions from odd gamma5 content are kept
    symbolically unless the context sets drop_eps (they are then routed to
    an 'eps' tagged remainder)."""
    ctx = ctx or Context()
    check_indices(e)
    out: Dict[Term, QI] = {}

    def acc(expr: Expr):
        for t, c in expr._terms.items():
            s = out.get(t, QI()) + c
            if s.is_zero():
                out.pop(t, None)
            else:
                out[t] = s

    for t0, c0 in e.items():
        for c, t in _chiral_front(t0, c0):
            word = list(t.dirac)
            chir = None
            if word and isinstance(word[0], Chiral):
                chir = word[0]
                word = word[1:]
            if len(word) % 2 == 1:
                continue
            even = _trace_even(word, ctx)
            if chir is None:
                tr = even
            else:
                g5 = _trace_g5(word, ctx)
                sign = QI.of(-1) if chir.hand == "L" else QI.of(1)
                tr = even.scale(QI.of(1) / QI.of(2)) + g5.scale(sign / QI.of(2))
            if tr.is_zero():
                continue
            acc(tr * Expr({Term((), t.mats, t.scal, t.den, t.tag): c}))
    res = Expr(out)
    if ctx.drop_eps:
        kept = Expr.zero()
        for t, c in res.items():
            if any(isinstance(a, Eps) for a in t.scal):
                kept = kept + Expr({Term(t.dirac, t.mats, t.scal, t.den,
                                         "eps"): c})
            else:
                kept = kept + Expr({t: c})
        res = kept
    for t, _ in res.items():
        for idx, cnt in _index_census(t).items():
            if cnt > 2:
                raise TracedOpenIndex(f"index {idx} over-contracted in trace")
    return normal_order(res, ctx)


# ------------------------------------------------------------------ sectorial


def sectorial_project(e: Expr, gen_dim: int = 3) -> Expr:
    """Sectorial projection: sums over generation indices.

    Each term's matrix word gets accent marks (a single letter becomes
    hatted, longer words get acute/grave end marks); terms carrying no
    matrix letters and no high-energy regularization tag pick up the
    trivial generation trace gen_dim."""
    out = Expr.zero()
    for t, c in e.items():
        unaccented = [a for a in t.mats if a.accent is None]
        if not t.mats:
            he = any(isinstance(a, RegFactor) and a.ctag in ("R", "L")
                     for a in t.scal)
            factor = 1 if he else gen_dim
            out = out + Expr({t: c * QI.of(factor)})
            continue
        if len(unaccented) != len(t.mats):
            # already projected: leave untouched
            out = out + Expr({t: c})
            continue
        letters = list(t.mats)
        if len(letters) == 1:
            mats = (MatSym(letters[0].base, "hat", letters[0].conj,
                           letters[0].herm),)
        else:
            first = MatSym(letters[0].base, "acute", letters[0].conj,
                           letters[0].herm)
            last = MatSym(letters[-1].base, "grave", letters[-1].conj,
                          letters[-1].herm)
            mats = (first,) + tuple(letters[1:-1]) + (last,)
        out = out + Expr({Term(t.dirac, mats, t.scal, t.den, t.tag): c})
    return out
