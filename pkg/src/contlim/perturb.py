"""Closed-chain eigenvalue perturbation theory and EL-coefficient extraction.

Works in the iota representation with an isospin-trivial vacuum: the
isospin/generation structure of perturbations rides along as ordered
matrix-word letters, so the extracted EL matrices K_L, K_R come out as
word-valued expressions directly comparable with the golden catalog.

First order:   dlam = Tr(F_{cs} dA)
Second order:  dlam = sum_{c'} Tr(F_{cs} dA F_{(-s)} dA) / (lam_s - lam_{-s}),
               valid when F_+ dA F_+ = 0 = F_- dA F_- on the degenerate
               subspaces (checked).

The packaging of the degree-four shifts into K_c follows
  K_c = [B(c,-) lam_+ + B(c,-)^dagger lam_-] / (6 conj T^(0)_[0]),
the polynomial form of dividing the weighted shift of |lambda_{nc-}| by
|lambda_-| and multiplying by 27 T^(0) T^(-1) conj T^(-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .atoms import (Bracket, Chiral, Inner, MatSym, RegFactor, Scalar,
                    Slashed)
from .context import Context, iota_context
from .expr import Expr, Term, adjoint, dirac_trace, normal_order, _sorted_atoms
from .regcalc import mass_expand
from .scalars import QI

GEN = 3

XC = Slashed("xicheck", real=True)
IOTA = Slashed("iota", n=-1, bracket="[", p=0)
IOTA_C = Slashed("iota", n=-1, bracket="[", p=0, conj=True)

T_M1 = RegFactor("T", -1, "[", 0)
T_0 = RegFactor("T", 0, "[", 0)


def lam_plus() -> Expr:
    return Expr.atoms(T_0, T_M1.conjugate()).scale(GEN * GEN)


def lam_minus() -> Expr:
    return Expr.atoms(T_M1, T_0.conjugate()).scale(GEN * GEN)


def vacuum_kernel(mass_order: int = 2) -> Expr:
    """Iota-form vacuum kernel (sector-independent symbols): the leading
    lightlike and iota terms plus the odd and even mass terms."""
    out = Expr.atoms(XC, T_M1).scale(QI.of(0, Fraction(GEN, 2))) + \
        Expr.atoms(IOTA, T_0).scale(QI.of(0, GEN))
    m = Scalar("m")
    if mass_order >= 1:
        out = out + Expr.atoms(MatSym("Y", "hat"), m, RegFactor("T", 0, "[", 1))
    if mass_order >= 2:
        out = out + Expr.atoms(MatSym("Y", "acute"), MatSym("Y", "grave"),
                               m, m, XC,
                               RegFactor("T", 0, "[", 2)).scale(QI.of(0, Fraction(1, 2)))
    return out


def spectral_projector(hand: Optional[str], sign: str) -> Expr:
    """F_{c+} = chi_c (1/2) iota/ xicheck/ ; F_{c-} = chi_c (1/2) xicheck/
    conj-iota/ ; hand=None sums the chiralities."""
    if sign == "+":
        core = Expr.atoms(IOTA, XC).scale(QI.of(Fraction(1, 2)))
    else:
        core = Expr.atoms(XC, IOTA_C).scale(QI.of(Fraction(1, 2)))
    if hand is None:
        return core
    return Expr.atoms(Chiral(hand)) * core


class DegeneracyHypothesisError(Exception):
    """The second-order formula needs F_s dA F_s = 0 on the degenerate
    subspaces."""


@dataclass
class PolyDenRegistry:
    """Registry of composite (multi-term) denominators, keyed by a stable
    name; entries are scalar-valued expressions."""

    entries: Dict[str, Expr] = field(default_factory=dict)

    def register(self, name: str, e: Expr) -> Scalar:
        self.entries[name] = e
        return Scalar(name, real=False)


DENOMS = PolyDenRegistry()
LAM_DIFF = DENOMS.register(
    "lam_diff",
    Expr.atoms(T_0, T_M1.conjugate()) - Expr.atoms(T_M1, T_0.conjugate()))
DENOMS.entries["conj(lam_diff)"] = Expr.zero() - DENOMS.entries["lam_diff"]
# lam_diff is anti-Hermitian: conj(lam_+ - lam_-) = lam_- - lam_+.


def conj_scalar_words(e: Expr) -> Expr:
    """Conjugation of a scalar-in-Dirac expression: words daggered in
    place, scalar atoms conjugated, composite denominators mapped through
    their registered conjugates."""
    out = Expr.zero()
    for t, c in e.items():
        if t.dirac:
            raise ValueError("not scalar in the Dirac sector")
        mats = tuple(a.adjoint() for a in reversed(t.mats))
        scal = list(a.conjugate() for a in t.scal)
        den = []
        coeff = c.conj()
        for a in t.den:
            if isinstance(a, Scalar) and a.name == "lam_diff":
                den.append(a)  # conj(lam_diff) = -lam_diff
                coeff = -coeff
            else:
                den.append(a.conjugate())
        out = out + Expr.term(coeff, (), mats, scal, den, t.tag)
    return out


def _drop_higher_iota(e: Expr) -> Expr:
    """Terms whose inner products or epsilon contractions involve two or
    more iota slots are of higher order and get routed to a tagged
    remainder."""
    out = Expr.zero()
    for t, c in e.items():
        n_iota = 0
        for a in t.scal:
            if isinstance(a, Inner):
                n_iota += sum(1 for nm, _ in (a.a, a.b) if nm == "iota")
            from .atoms import Eps
            if isinstance(a, Eps):
                n_iota += sum(1 for nm, _ in a.slots if nm == "iota")
        if n_iota >= 2:
            out = out + Expr({Term(t.dirac, t.mats, t.scal, t.den,
                                   "higher-order-iota"): c})
        else:
            out = out + Expr({t: c})
    return out


def chain_perturbation(dP: Expr, mass_order: int = 2,
                       ctx: Optional[Context] = None) -> Expr:
    """dA = dP P0(y,x) + P0(x,y) dP(y,x) plus the vacuum's own sub-leading
    chain terms (the odd/even mass terms): everything in the chain at one
    degree below the leading order and linear in the perturbation."""
    ctx = ctx or iota_context()
    P0 = vacuum_kernel(mass_order)
    lead = Expr.atoms(XC, T_M1).scale(QI.of(0, Fraction(GEN, 2))) + \
        Expr.atoms(IOTA, T_0).scale(QI.of(0, GEN))
    dA = dP * adjoint(P0) + P0 * adjoint(dP) + \
        (P0 * adjoint(P0) - lead * adjoint(lead))
    return normal_order(dA, ctx)


def _source_count(t: Term) -> int:
    return sum(1 for a in t.mats if not a.base.startswith("Y"))


def _m_count(t: Term) -> int:
    return sum(1 for a in t.scal if isinstance(a, Scalar) and a.name == "m")


def check_degeneracy(dA_terms, ctx: Context, max_m: int = 2,
                     max_sources: int = 1) -> None:
    """The second-order formula is valid when the perturbation does not mix
    the two chiralities inside a degenerate eigenspace: the would-be
    singular traces Tr(F_{cs} dA F_{c's} dA) with c != c' must vanish
    within the working window."""
    for sign in ("+", "-"):
        FL = spectral_projector("L", sign)
        FR = spectral_projector("R", sign)
        bad = Expr.zero()
        for t1, c1 in dA_terms:
            for t2, c2 in dA_terms:
                if _m_count(t1) + _m_count(t2) > max_m:
                    continue
                if _source_count(t1) + _source_count(t2) > max_sources:
                    continue
                prod = FL * Expr({t1: c1}) * FR * Expr({t2: c2})
                bad = bad + dirac_trace(prod, ctx)
        bad = _drop_higher_iota(bad).split_by_tag()[0]
        if not bad.is_zero():
            raise DegeneracyHypothesisError(
                f"degenerate mixing at s={sign}: {bad}")


def eigenvalue_shifts(dP: Expr, mass_order: int = 2, second_order: bool = True,
                      ctx: Optional[Context] = None,
                      max_m: int = 2, max_sources: int = 1,
                      target_degree: int = 2) -> Dict[Tuple[str, str], Expr]:
    """Word-valued shifts B(c,s) with dlam_{ncs} = Tr_{C2}(I_n B(c,s)):
    first order Tr(F_{cs} dA), second order
    sum_{c'} Tr(F_{cs} dA F_{c'(-s)} dA)/(lam_s - lam_{-s}).

    Contributions outside the working window (mass power > max_m, more
    than max_sources interaction letters, or a regularization degree other
    than target_degree) are routed to tagged remainders."""
    from .regcalc import reg_degree
    ctx = ctx or iota_context()
    dA = chain_perturbation(dP, mass_order, ctx)
    dA_terms = [(t, c) for t, c in dA.items()
                if _m_count(t) <= max_m and _source_count(t) <= max_sources]
    check_degeneracy(dA_terms, ctx, max_m, max_sources)
    lamdiff = {"+": Expr.term(GEN * GEN, scal=(LAM_DIFF,)),
               "-": Expr.term(-GEN * GEN, scal=(LAM_DIFF,))}
    out: Dict[Tuple[str, str], Expr] = {}
    for hand in ("L", "R"):
        for sign in ("+", "-"):
            F = spectral_projector(hand, sign)
            first = dirac_trace(F * dA, ctx)
            total = _window(first, max_m, max_sources, target_degree)
            if second_order:
                osign = "-" if sign == "+" else "+"
                Fo = spectral_projector(None, osign)
                quad = Expr.zero()
                for t1, c1 in dA_terms:
                    for t2, c2 in dA_terms:
                        if _m_count(t1) + _m_count(t2) > max_m:
                            continue
                        if _source_count(t1) + _source_count(t2) > max_sources:
                            continue
                        d1 = reg_degree(t1) or 0
                        d2 = reg_degree(t2) or 0
                        if d1 + d2 != target_degree + 3:
                            continue
                        quad = quad + dirac_trace(
                            F * Expr({t1: c1}) * Fo * Expr({t2: c2}), ctx)
                total = total + _window(quad.divide_by(lamdiff[sign]),
                                        max_m, max_sources, target_degree)
            out[(hand, sign)] = _drop_higher_iota(total)
    return out


def _window(e: Expr, max_m: int, max_sources: int,
            target_degree: int) -> Expr:
    from .regcalc import reg_degree
    out = Expr.zero()
    for t, c in e.items():
        if t.tag:
            out = out + Expr({t: c})
            continue
        tag = None
        if _m_count(t) > max_m:
            tag = "higher-mass-order"
        elif _source_count(t) > max_sources:
            tag = "higher-source-order"
        elif (reg_degree(t) or 0) != target_degree:
            tag = f"deg!={target_degree}"
        out = out + Expr({Term(t.dirac, t.mats, t.scal, t.den, tag): c})
    return out


def symmetrize(e: Expr) -> Expr:
    """Half the sum of a coefficient kernel and its image under the kernel
    symmetry Q(x,y)* = Q(y,x) (argument swap composed with the pointwise
    adjoint): coefficients conjugate, matrix words reverse and dagger,
    xi-linear contractions flip sign, regularization factors and iota
    markers are invariant under the double conjugation."""
    from .atoms import Eps
    image = Expr.zero()
    for t, c in e.items():
        if t.dirac:
            raise ValueError("symmetrize applies to scalar coefficients")
        coeff = c.conj()
        mats = tuple(a.adjoint() for a in reversed(t.mats))
        scal = []
        for a in t.scal:
            if isinstance(a, Inner):
                if "xi" in (a.a[0], a.b[0]):
                    coeff = -coeff
                scal.append(a)
            elif isinstance(a, Eps):
                n_xi = sum(1 for nm, _ in a.slots if nm == "xi")
                if n_xi % 2 == 1:
                    coeff = -coeff
                scal.append(a)
            else:
                scal.append(a)
        image = image + Expr.term(coeff, (), mats, tuple(scal), t.den, t.tag)
    return (e + image).scale(QI.of(Fraction(1, 2)))


def _lamdiff_monomials():
    plus = _sorted_atoms((T_0, T_M1.conjugate()))
    minus = _sorted_atoms((T_M1, T_0.conjugate()))
    return [(QI.of(1), plus), (QI.of(-1), minus)]


def collapse_lamdiff(e: Expr) -> Expr:
    """Cancel the composite eigenvalue-gap denominator where the combined
    numerator of a term group is exactly divisible by it.

    Terms sharing everything except their regularization monomials and the
    power of the composite denominator are brought over the common
    denominator; the resulting polynomial is divided by the gap polynomial
    (monomial division); on exact division the quotient replaces the
    group."""
    groups: Dict[Tuple, Dict] = {}
    passthrough = Expr.zero()
    for t, c in e.items():
        n_ld = sum(1 for a in t.den if isinstance(a, Scalar) and
                   a.name == "lam_diff")
        regs = tuple(a for a in t.scal if isinstance(a, RegFactor))
        rest_scal = tuple(a for a in t.scal if not isinstance(a, RegFactor))
        rest_den = tuple(a for a in t.den if not (isinstance(a, Scalar) and
                                                  a.name == "lam_diff") and
                         not isinstance(a, RegFactor))
        reg_den = tuple(a for a in t.den if isinstance(a, RegFactor))
        key = (t.dirac, t.mats, rest_scal, rest_den, t.tag)
        groups.setdefault(key, {"max_ld": 0, "terms": []})
        groups[key]["max_ld"] = max(groups[key]["max_ld"], n_ld)
        groups[key]["terms"].append((c, regs, reg_den, n_ld))
    ld = _lamdiff_monomials()
    out = Expr.zero()
    for key, data in groups.items():
        dirac, mats, rest_scal, rest_den, tag = key
        mx = data["max_ld"]
        if mx == 0:
            for c, regs, reg_den, _ in data["terms"]:
                out = out + Expr.term(c, dirac, mats, rest_scal + regs,
                                      rest_den + reg_den, tag)
            continue
        # bring every term over the union of the regularization
        # denominators and the maximal power of the gap polynomial
        union_den: List = []
        for _, _, rd, _ in data["terms"]:
            for a in set(rd):
                need = rd.count(a) - union_den.count(a)
                union_den.extend([a] * max(0, need))
        poly: Dict[Tuple, QI] = {}
        for c, regs, reg_den, n_ld in data["terms"]:
            extra_den = list(union_den)
            for a in reg_den:
                extra_den.remove(a)
            factors = [(c, list(regs) + extra_den)]
            for _ in range(mx - n_ld):
                factors = [(cc * lc, fs + list(lm))
                           for cc, fs in factors for lc, lm in ld]
            for cc, fs in factors:
                mkey = _sorted_atoms(fs)
                poly[mkey] = poly.get(mkey, QI()) + cc
        poly = {k: v for k, v in poly.items() if not v.is_zero()}
        for p, part in _divide_power(poly, ld, mx):
            for mkey, c in part.items():
                den = rest_den + tuple(union_den) + tuple([LAM_DIFF] * p)
                out = out + Expr.term(c, dirac, mats, rest_scal + mkey, den,
                                      tag)
    return out


def _divide_poly(poly: Dict[Tuple, QI], ld):
    """Multivariate division of a monomial polynomial by the gap
    polynomial: returns (quotient, remainder) with
    poly = quotient * ld + remainder."""
    def order_key(m):
        return (len(m), tuple(a.key() for a in m))
    lead = max((m for _, m in ld), key=order_key)
    lead_c = [c for c, m in ld if m == lead][0]
    quot: Dict[Tuple, QI] = {}
    rem: Dict[Tuple, QI] = {}
    work = dict(poly)
    fuel = 16 * (len(work) + 4)
    while work:
        fuel -= 1
        if fuel < 0:
            # give up: dump everything left into the remainder
            for k, v in work.items():
                rem[k] = rem.get(k, QI()) + v
            break
        m = max(work, key=order_key)
        c = work.pop(m)
        mm = list(m)
        ok = True
        for a in lead:
            if a in mm:
                mm.remove(a)
            else:
                ok = False
                break
        if not ok:
            rem[m] = rem.get(m, QI()) + c
            continue
        q = _sorted_atoms(mm)
        qc = c / lead_c
        quot[q] = quot.get(q, QI()) + qc
        for lc, lm in ld:
            if lm == lead:
                continue
            nk = _sorted_atoms(list(q) + list(lm))
            nv = work.get(nk, QI()) - qc * lc
            if nv.is_zero():
                work.pop(nk, None)
            else:
                work[nk] = nv
    return ({k: v for k, v in quot.items() if not v.is_zero()},
            {k: v for k, v in rem.items() if not v.is_zero()})


def _divide_power(poly: Dict[Tuple, QI], ld, power: int):
    """poly / ld^power -> list of (residual power, monomial dict)."""
    if power == 0:
        return [(0, poly)]
    quot, rem = _divide_poly(poly, ld)
    out = [(power, rem)] if rem else []
    for p, d in _divide_power(quot, ld, power - 1):
        out.append((p, d))
    return out


def extract_K(dP: Expr, mass_order: int = 2, second_order: bool = True,
              ctx: Optional[Context] = None,
              symmetrized: bool = False) -> Dict[str, Expr]:
    """The word-valued EL matrices K_L, K_R of the degree-four analysis,
    packaged through

        K_c = [B(c,-) lam_+ + B(c,-)^dagger lam_-] / (6 conj T^(0)_[0]),

    the polynomial form of dividing the shift of |lambda_{nc-}| by
    |lambda_-| and multiplying by 27 T^(0) T^(-1) conj T^(-1)."""
    ctx = ctx or iota_context()
    shifts = eigenvalue_shifts(dP, mass_order, second_order, ctx)
    denom = Expr.atoms(T_0.conjugate()).scale(6)
    out = {}
    for hand in ("L", "R"):
        B = shifts[(hand, "-")]
        K = (B * lam_plus() + conj_scalar_words(B) * lam_minus()).divide_by(denom)
        K = _window(K, 2, 1, 4)
        if symmetrized:
            main, rem = K.split_by_tag()
            K = symmetrize(main) + rem
        out[hand] = collapse_lamdiff(normal_order(K, ctx))
    return out
