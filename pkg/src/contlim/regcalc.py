"""The regularization-factor calculus.

Contraction of z factors against matching T factors, the mass-expansion
replacement rules, the iota representation of regularized kernels, weak
evaluation of simple fractions (degree and logarithm bookkeeping), and
canonicalization modulo the integration-by-parts relations generated by
the derivation nabla T^(n) = T^(n-1) with Leibniz and quotient rules.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .atoms import RegFactor, Scalar, Slashed
from .expr import Expr, Term, _sorted_atoms
from .scalars import QI


class StuckContraction(Exception):
    pass


TAU = Scalar("tau_reg")
DELTA = Scalar("delta")
M = Scalar("m")
PI = Scalar("pi")


def _delta_inv2(count: int = 1) -> Expr:
    return Expr.term(1, den=[DELTA] * (2 * count))


# ------------------------------------------------------------------- contract


def contract(e: Expr, strict: bool = False) -> Expr:
    """Apply the contraction rules z^(n)_[p] T^(n)_[p] ->
    -4 (n T^(n+1)_[p] + T^(n+2)_{p}), with a factor 1/delta^2 on the
    curly-bracket term for chiral-tagged factors.  Conjugate pairs mirror.
    z factors without a matching T factor are left in place, tagged
    'stuck-contraction' (or raise with strict=True)."""
    out = Expr.zero()
    for t, c in e.items():
        done = Expr({t: c})
        while True:
            tt, cc = done.single() if len(done) == 1 else (None, None)
            if tt is None:
                # multiple terms: recurse
                done = contract(done, strict=strict)
                break
            zs = [a for a in tt.scal if isinstance(a, RegFactor) and a.kind == "z"]
            if not zs:
                break
            z = zs[0]
            partner = None
            for a in tt.scal:
                if isinstance(a, RegFactor) and a.kind in ("T", "L") and \
                        (a.n, a.bracket, a.p, a.ctag, a.conj) == \
                        (z.n, z.bracket, z.p, z.ctag, z.conj):
                    partner = a
                    break
            if partner is None:
                if strict:
                    raise StuckContraction(f"no matching factor for {z} in {tt}")
                done = Expr({Term(tt.dirac, tt.mats, tt.scal, tt.den,
                                  tt.tag or "stuck-contraction"): cc})
                break
            scal = list(tt.scal)
            scal.remove(z)
            scal.remove(partner)
            base = Expr({Term(tt.dirac, tt.mats, _sorted_atoms(scal), tt.den,
                              tt.tag): cc})
            t_up1 = replace(partner, kind=partner.kind, n=partner.n + 1)
            t_up2 = RegFactor("T", partner.n + 2, "{", partner.p, partner.ctag,
                              partner.conj)
            piece = Expr.atoms(t_up1).scale(QI.of(-4 * partner.n))
            curly = Expr.atoms(t_up2).scale(QI.of(-4))
            if partner.ctag in ("R", "L"):
                curly = curly * _delta_inv2()
            done = base * (piece + curly)
            if len(done) > 1:
                done = contract(done, strict=strict)
                break
        out = out + done
    return out


# ---------------------------------------------------------------- mass expand


def mass_expand(e: Expr, delta_order: int = 1) -> Expr:
    """Replacement rules regularizing a light-cone expansion:

    m^p T^(n)        -> m^p T^(n)_[p]
    tau_reg T^(n)    -> tau_reg sum_k 1/(k! delta^(2k)) T^(k+n)_[R,2n]

    truncated at delta_order in 1/delta^2.  A bare factor is one with
    p=None (no mass subscript yet)."""
    if delta_order < 0:
        raise ValueError("truncation order must be >= 0")
    out = Expr.zero()
    for t, c in e.items():
        bare = [a for a in t.scal if isinstance(a, RegFactor) and a.p is None]
        if not bare:
            out = out + Expr({t: c})
            continue
        if len(bare) > 1:
            raise ValueError(f"more than one bare factor in term {t}")
        f = bare[0]
        scal = list(t.scal)
        scal.remove(f)
        rest = Expr({Term(t.dirac, t.mats, _sorted_atoms(scal), t.den, t.tag): c})
        if any(isinstance(a, Scalar) and a.name == "tau_reg" for a in t.scal):
            series = Expr.zero()
            for k in range(delta_order + 1):
                fac = QI.of(Fraction(1, 1)) / QI.of(
                    int(__import__("math").factorial(k)))
                term = Expr.atoms(RegFactor("T", f.n + k, "[", 2 * f.n, "R",
                                            f.conj)).scale(fac)
                if k:
                    term = term * _delta_inv2(k)
                series = series + term
            out = out + rest * series
        else:
            p = sum(1 for a in t.scal if isinstance(a, Scalar) and a.name == "m")
            out = out + rest * Expr.atoms(replace(f, p=p))
    return out


def vacuum_he_series(n_order: int, hand_conj: bool = False,
                     base: Optional[RegFactor] = None) -> Expr:
    """The high-energy replacement of the leading factor:
    T^(-1)_[c,0] -> sum_n 1/(n! delta^(2n)) T^(-1+n)_[c,2n], truncated."""
    base = base or RegFactor("T", -1, "[", 0, "R", hand_conj)
    out = Expr.zero()
    for n in range(n_order + 1):
        fac = QI.of(1) / QI.of(int(__import__("math").factorial(n)))
        term = Expr.atoms(RegFactor(base.kind, base.n + n, "[", 2 * n,
                                    base.ctag, base.conj)).scale(fac)
        if n:
            term = term * _delta_inv2(n)
        out = out + term
    return out


# ----------------------------------------------------------------- L factors


def expand_L(e: Expr) -> Expr:
    """L^(n)_[p] = T^(n)_[p] + (tau_reg/3) T^(n)_[R,p], everywhere."""
    out = Expr.zero()
    for t, c in e.items():
        ls = [a for a in t.scal if isinstance(a, RegFactor) and a.kind == "L"]
        if not ls:
            if any(isinstance(a, RegFactor) and a.kind == "L" for a in t.den):
                raise ValueError("cannot expand L factors in a denominator")
            out = out + Expr({t: c})
            continue
        f = ls[0]
        scal = list(t.scal)
        scal.remove(f)
        rest = Expr({Term(t.dirac, t.mats, _sorted_atoms(scal), t.den, t.tag): c})
        tpart = Expr.atoms(replace(f, kind="T"))
        rpart = Expr.atoms(replace(f, kind="T", ctag="R"), TAU).scale(
            QI.of(Fraction(1, 3)))
        out = out + expand_L(rest * (tpart + rpart))
    return out


def collect_L(e: Expr) -> Expr:
    """Inverse of expand_L where possible: pairs
    3 T^(n)_[p] + tau_reg T^(n)_[R,p] (with matching companions) are
    recombined into 3 L^(n)_[p]."""
    terms = dict(e.items())
    changed = True
    while changed:
        changed = False
        for t, c in list(terms.items()):
            tau_here = [a for a in t.scal if isinstance(a, Scalar) and
                        a.name == "tau_reg"]
            rfac = [a for a in t.scal if isinstance(a, RegFactor) and
                    a.ctag == "R" and a.kind == "T"]
            if not tau_here or not rfac:
                continue
            f = rfac[0]
            plain = replace(f, ctag=None)
            scal_partner = list(t.scal)
            scal_partner.remove(f)
            scal_partner.remove(tau_here[0])
            partner = Term(t.dirac, t.mats,
                           _sorted_atoms(scal_partner + [plain]), t.den, t.tag)
            if partner not in terms:
                continue
            cp = terms[partner]
            # need cp = 3 c to combine into 3 L
            if cp != c * QI.of(3):
                continue
            scal_l = list(scal_partner) + [replace(f, kind="L", ctag=None)]
            lterm = Term(t.dirac, t.mats, _sorted_atoms(scal_l), t.den, t.tag)
            del terms[t]
            del terms[partner]
            terms[lterm] = terms.get(lterm, QI()) + c * QI.of(3)
            if terms[lterm].is_zero():
                del terms[lterm]
            changed = True
            break
    return Expr(terms)


# ------------------------------------------------------------------ iota form


def to_iota_form(e: Expr) -> Expr:
    """Rewrite a regularized kernel into the iota representation: every
    slashed xi becomes the real lightlike xicheck, and each xi T^(k)_[...]
    pairing acquires the correction
    -2 iota^(k)_[p] (k T^(k+1)_[...] + T^(k+2)_{...}) relative to the
    (i/2) xi T^(k) normalization, with 1/delta^2 on the curly term for
    chiral-tagged factors.  Terms without a slashed xi pass through."""
    out = Expr.zero()
    for t, c in e.items():
        xs = [a for a in t.dirac if isinstance(a, Slashed) and a.name == "xi"]
        if not xs:
            out = out + Expr({t: c})
            continue
        if len(xs) > 1:
            raise ValueError("iota form expects kernels linear in slashed xi")
        x = xs[0]
        tfac = [a for a in t.scal if isinstance(a, RegFactor) and
                a.kind in ("T", "L") and a.conj == x.conj]
        if len(tfac) != 1:
            raise ValueError(f"cannot associate a unique factor with {x} in {t}")
        f = tfac[0]
        k = f.n
        dirac_checked = tuple(Slashed("xicheck", real=True, conj=False)
                              if a is x else a for a in t.dirac)
        out = out + Expr({Term(dirac_checked, t.mats, t.scal, t.den, t.tag): c})
        iota = Slashed("iota", n=k, bracket="[", p=f.p, conj=x.conj)
        dirac_iota = tuple(iota if a is x else a for a in t.dirac)
        scal = list(t.scal)
        scal.remove(f)
        base = Expr({Term(dirac_iota, t.mats, _sorted_atoms(scal), t.den,
                          t.tag): c * QI.of(-2)})
        up1 = Expr.atoms(replace(f, n=k + 1)).scale(QI.of(k))
        up2 = Expr.atoms(RegFactor("T", k + 2, "{", f.p, f.ctag, f.conj))
        if f.ctag in ("R", "L"):
            up2 = up2 * _delta_inv2()
        out = out + base * (up1 + up2)
    return out


# ------------------------------------------------------------ degree / logpow


COMPOSITE_DEGREES = {"lam_diff": 3, "conj(lam_diff)": 3}


def _atom_degree(a) -> Optional[int]:
    if isinstance(a, RegFactor):
        return a.degree
    if isinstance(a, Scalar) and a.name in COMPOSITE_DEGREES:
        return COMPOSITE_DEGREES[a.name]
    return None


def reg_degree(t: Term) -> Optional[int]:
    """Light-cone degree of a term's regularization-factor content
    (composite denominators like the eigenvalue gap count through their
    registered degree), or None if the term carries no factors."""
    degs = [_atom_degree(a) for a in t.scal]
    dens = [_atom_degree(a) for a in t.den]
    degs = [d for d in degs if d is not None]
    dens = [d for d in dens if d is not None]
    if not degs and not dens:
        return None
    return sum(degs) - sum(dens)


def log_power(t: Term) -> int:
    return sum(1 for a in itertools.chain(t.scal, t.den)
               if isinstance(a, RegFactor) and a.has_log)


def truncate_degree(e: Expr, min_degree: int,
                    drop_plain_curly: bool = True) -> Tuple[Expr, Expr]:
    """Split off terms below the working degree, and (by default) terms with
    untagged curly-bracket factors (the ordinary-shear terms, assumed small);
    returns (kept, remainder)."""
    kept, rem = Expr.zero(), Expr.zero()
    for t, c in e.items():
        d = reg_degree(t)
        if d is not None and d < min_degree:
            rem = rem + Expr({Term(t.dirac, t.mats, t.scal, t.den,
                                   f"deg<{min_degree}"): c})
            continue
        if drop_plain_curly and any(
                isinstance(a, RegFactor) and a.bracket == "{" and
                a.ctag not in ("R", "L") for a in itertools.chain(t.scal, t.den)):
            rem = rem + Expr({Term(t.dirac, t.mats, t.scal, t.den,
                                   "small-shear"): c})
            continue
        kept = kept + Expr({t: c})
    return kept, rem


# -------------------------------------------------------------- weak values


@dataclass(frozen=True)
class WeakValue:
    """Weak evaluation of a simple fraction on the light cone: a
    regularization-parameter symbol keyed by the canonical form, the degree
    L and the logarithm power k."""

    creg_key: str
    degree: int
    logpow: int


def weak_evaluate(e: Expr, canonicalize: bool = True) -> WeakValue:
    """Weak evaluation of a single simple fraction (one term, regularization
    factors only)."""
    if e.is_zero():
        return WeakValue("0", 0, 0)
    if canonicalize:
        e, _ = ibp_normalize(e)
    terms = e.items()
    t0 = terms[0][0]
    d = reg_degree(t0)
    d = 0 if d is None else d
    for t, _ in terms:
        if (reg_degree(t) or 0) != d:
            raise ValueError("mixed degrees under a single weak evaluation")
    k = max(log_power(t) for t, _ in terms)
    return WeakValue(str(e), d, k)


# ------------------------------------------------------- IBP canonicalization


def _reg_parts(t: Term) -> Tuple[Tuple[RegFactor, ...], Tuple[RegFactor, ...],
                                 Term]:
    num = tuple(a for a in t.scal if isinstance(a, RegFactor))
    den = tuple(a for a in t.den if isinstance(a, RegFactor))
    rest = Term(t.dirac, t.mats,
                tuple(a for a in t.scal if not isinstance(a, RegFactor)),
                tuple(a for a in t.den if not isinstance(a, RegFactor)), t.tag)
    return num, den, rest


@dataclass(frozen=True)
class Frac:
    """A monomial of regularization factors: numerator and denominator
    multisets, canonically sorted."""

    num: Tuple[RegFactor, ...]
    den: Tuple[RegFactor, ...]

    @staticmethod
    def of(num: Sequence[RegFactor], den: Sequence[RegFactor]) -> "Frac":
        return Frac(_sorted_atoms(num), _sorted_atoms(den))

    @property
    def degree(self) -> int:
        return sum(a.degree for a in self.num) - sum(a.degree for a in self.den)

    def __str__(self):
        s = " ".join(str(a) for a in self.num) or "1"
        if self.den:
            s += " / " + " ".join(str(a) for a in self.den)
        return s


def nabla(f: Frac) -> List[Tuple[Fraction, Frac]]:
    """The derivation nabla T^(n) = T^(n-1) extended by Leibniz and quotient
    rules, applied to a fraction monomial; returns (coeff, monomial) pairs."""
    out: List[Tuple[Fraction, Frac]] = []
    for i, a in enumerate(f.num):
        lowered = replace(a, n=a.n - 1)
        out.append((Fraction(1), Frac.of(f.num[:i] + (lowered,) +
                                         f.num[i + 1:], f.den)))
    for i, a in enumerate(f.den):
        lowered = replace(a, n=a.n - 1)
        out.append((Fraction(-1), Frac.of(f.num + (lowered,),
                                          f.den + (a,))))
    merged: Dict[Frac, Fraction] = {}
    for c, m in out:
        merged[m] = merged.get(m, Fraction(0)) + c
    return [(c, m) for m, c in merged.items() if c != 0]


def _slot_class(f: Frac):
    num = tuple(sorted((a.kind, a.bracket, a.p if a.p is not None else 999,
                        a.ctag or "", a.conj) for a in f.num))
    den = tuple(sorted((a.kind, a.bracket, a.p if a.p is not None else 999,
                        a.ctag or "", a.conj) for a in f.den))
    return num, den


def _enumerate_fracs(slot_class, degree: int, nmin: int, nmax: int) -> List[Frac]:
    num_slots, den_slots = slot_class
    out = set()
    numranges = [range(nmin, nmax + 1)] * len(num_slots)
    denranges = [range(nmin, nmax + 1)] * len(den_slots)
    for nn in itertools.product(*numranges):
        for dd in itertools.product(*denranges):
            num = tuple(RegFactor(k, n, b, None if p == 999 else p, c or None, j)
                        for n, (k, b, p, c, j) in zip(nn, num_slots))
            den = tuple(RegFactor(k, n, b, None if p == 999 else p, c or None, j)
                        for n, (k, b, p, c, j) in zip(dd, den_slots))
            fr = Frac.of(num, den)
            if fr.degree == degree:
                out.add(fr)
    return sorted(out, key=lambda f: str(f))


class IBPBasis:
    """Row-reduced basis of integration-by-parts relations among fraction
    monomials of a fixed degree, closed over the quotient-rule extensions up
    to a denominator-count bound."""

    def __init__(self, seed_classes, degree: int, nmin: int = -2, nmax: int = 4,
                 max_num: int = 5, max_den: int = 2):
        self.degree = degree
        classes = set(seed_classes)
        frontier = list(seed_classes)
        while frontier:
            num_slots, den_slots = frontier.pop()
            if len(den_slots) >= max_den or len(num_slots) >= max_num:
                continue
            for d in set(den_slots):
                ext = (tuple(sorted(num_slots + (d,))),
                       tuple(sorted(den_slots + (d,))))
                if ext not in classes:
                    classes.add(ext)
                    frontier.append(ext)
        self.monomials: List[Frac] = []
        for cl in sorted(classes):
            self.monomials.extend(_enumerate_fracs(cl, degree, nmin, nmax))
        self.monomials = sorted(set(self.monomials), key=lambda f: str(f))
        self.index = {m: i for i, m in enumerate(self.monomials)}
        rows: List[List[Fraction]] = []
        self.generators: List[Frac] = []
        gen_classes = set(classes)
        for cl in sorted(gen_classes):
            for g in _enumerate_fracs(cl, degree - 1, nmin, nmax):
                img = nabla(g)
                if any(m not in self.index for _, m in img):
                    continue
                row = [Fraction(0)] * len(self.monomials)
                for c, m in img:
                    row[self.index[m]] += c
                if any(row):
                    rows.append(row)
                    self.generators.append(g)
        self.rows, self.pivots, self.row_gens = self._rref(rows)

    def _rref(self, rows):
        """Row reduction over Q, tracking which nabla generators combine
        into each reduced row."""
        n = len(self.monomials)
        combos = [{i: Fraction(1)} for i in range(len(rows))]
        rows = [list(r) for r in rows]
        pivots = []
        rank = 0
        for col in range(n):
            piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0),
                       None)
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            combos[rank], combos[piv] = combos[piv], combos[rank]
            inv = Fraction(1) / rows[rank][col]
            rows[rank] = [x * inv for x in rows[rank]]
            combos[rank] = {k: v * inv for k, v in combos[rank].items()}
            for r in range(len(rows)):
                if r != rank and rows[r][col] != 0:
                    fac = rows[r][col]
                    rows[r] = [x - fac * y for x, y in zip(rows[r], rows[rank])]
                    for k, v in combos[rank].items():
                        combos[r][k] = combos[r].get(k, Fraction(0)) - fac * v
            pivots.append(col)
            rank += 1
        return rows[:rank], pivots, combos[:rank]

    def reduce(self, vec: Dict[Frac, QI]):
        """Reduce a monomial combination modulo the relation span; returns
        (reduced vector, certificate as list of (QI coeff, generator Frac))."""
        v = [vec.get(m, QI()) for m in self.monomials]
        used: Dict[int, QI] = {}
        for row, piv, gens in zip(self.rows, self.pivots, self.row_gens):
            c = v[piv]
            if c.is_zero():
                continue
            for j, x in enumerate(row):
                if x != 0:
                    v[j] = v[j] - c * QI.of(x)
            for g, w in gens.items():
                used[g] = used.get(g, QI()) + c * QI.of(w)
        red = {m: c for m, c in zip(self.monomials, v) if not c.is_zero()}
        cert = [(c, self.generators[g]) for g, c in used.items()
                if not c.is_zero()]
        return red, cert


@lru_cache(maxsize=128)
def _basis_for(classes_key, degree, nmin, nmax, max_num, max_den) -> IBPBasis:
    return IBPBasis(list(classes_key), degree, nmin, nmax, max_num, max_den)


class NotNormalized(Exception):
    """A fraction exceeded the configured factor-count bounds."""


def ibp_normalize(e: Expr, nmin: int = -2, nmax: int = 4, max_num: int = 5,
                  max_den: int = 2) -> Tuple[Expr, List]:
    """Canonical representative of an expression modulo the span of all
    nabla(simple fraction) = 0 relations, degree by degree; companion
    (non-regularization) content groups terms into independent sectors.
    Returns (canonical expr, certificate list)."""
    groups: Dict[Tuple, Dict[Frac, QI]] = {}
    rests: Dict[Tuple, Term] = {}
    for t, c in e.items():
        num, den, rest = _reg_parts(t)
        if len(num) > max_num or len(den) > max_den:
            raise NotNormalized(f"term exceeds factor-count bounds: {t}")
        fr = Frac.of(num, den)
        key = (rest.key(), fr.degree if (num or den) else None)
        groups.setdefault(key, {})
        groups[key][fr] = groups[key].get(fr, QI()) + c
        rests[key] = rest
    out = Expr.zero()
    certificate = []
    for key, vec in sorted(groups.items(), key=lambda kv: kv[0]):
        rest = rests[key]
        degree = key[1]
        if degree is None:
            for fr, c in vec.items():
                out = out + Expr({rest: c})
            continue
        classes = tuple(sorted({_slot_class(fr) for fr in vec}))
        basis = _basis_for(classes, degree, nmin, nmax, max_num, max_den)
        red, cert = basis.reduce(vec)
        certificate.extend(cert)
        for fr, c in red.items():
            out = out + Expr({Term(rest.dirac, rest.mats,
                                   _sorted_atoms(rest.scal + fr.num),
                                   _sorted_atoms(rest.den + fr.den),
                                   rest.tag): c})
    return out, certificate


def ibp_equal(a: Expr, b: Expr, **kw) -> bool:
    na, _ = ibp_normalize(a, **kw)
    nb, _ = ibp_normalize(b, **kw)
    return na == nb
