"""Built-in catalog of the phase-free light-cone contributions to the
kernel that feed the degree-four analysis: the bosonic current terms, the
mass terms (with nested-line-integral weights kept as opaque brackets),
and the particle sources (Dirac current and energy-momentum).

All entries are given at the pre-projection level with unaccented matrix
letters; the pipeline applies the sectorial projection, regularizes in the
iota representation (xi -> xicheck, mass powers into factor subscripts)
and evaluates the bracket weights in the Taylor expansion at the origin.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional

from .atoms import Bracket, Chiral, Inner, MatSym, RegFactor, Scalar, Slashed
from .expr import Expr, Term, normal_order, sectorial_project
from .scalars import QI

PI = Scalar("pi")

# relative channel normalizations of the perturbation sources, fixed once
# against the printed current/mass catalog; the bosonic-current channel
# carries no such freedom and anchors the overall scale.  The over-
# determination (every word group of the display must come out right from
# these two constants) cross-checks the calibration.
PARTICLE_WEIGHT = Fraction(1, 3)
MASS_WEIGHT = Fraction(1, 3)


def _vec(channel: str) -> Slashed:
    return Slashed(channel, real=True)


def _xi_dot(channel: str) -> Inner:
    return Inner.of(channel, False, "xi", False)


def _letters(*bases: str):
    return tuple(MatSym(b) for b in bases)


def bosonic_entries(hand: str) -> Expr:
    """The ten phase-free contributions for one handedness (the other is
    the L<->R mirror)."""
    o = hand
    p = "R" if hand == "L" else "L"  # opposite
    j, Ao, Ap = f"j{o}", f"A_{o}", f"A_{p}"
    jv, Aov, Apv = f"j{o}", f"A{o}", f"A{p}"
    chi = Chiral(o)
    xc = Slashed("xicheck", real=True)
    m = Scalar("m")
    e = Expr.zero()
    # current terms
    e += Expr.term(QI.of(Fraction(-1, 2)), dirac=(chi, xc),
                   mats=_letters(j), scal=(_xi_dot(jv), Bracket(0, 0, 1),
                                           RegFactor("T", 0, "[", 0)))
    e += Expr.term(QI.of(-1), dirac=(chi, _vec(jv)),
                   mats=_letters(j), scal=(Bracket(0, 2, 0),
                                           RegFactor("T", 1, "[", 0)))
    # odd mass terms
    w = QI.of(MASS_WEIGHT)
    e += Expr.term(QI.of(0, -1) * w, dirac=(chi,),
                   mats=_letters("Y", Ap), scal=(m, _xi_dot(Apv),
                                                 Bracket(0, 0, 0),
                                                 RegFactor("T", 0, "[", 1)))
    e += Expr.term(QI.of(0, Fraction(1, 2)) * w, dirac=(chi, xc, _vec(Apv)),
                   mats=_letters("Y", Ap), scal=(m, Bracket(0, 0, 0),
                                                 RegFactor("T", 0, "[", 1)))
    e += Expr.term(QI.of(0, Fraction(-1, 2)) * w, dirac=(chi, xc, _vec(Aov)),
                   mats=_letters(Ao, "Y"), scal=(m, Bracket(0, 0, 0),
                                                 RegFactor("T", 0, "[", 1)))
    e += Expr.term(QI.of(0, 1) * w, dirac=(chi,),
                   mats=_letters("Y", Ap), scal=(m, Scalar("divA"),
                                                 Bracket(0, 1, 0),
                                                 RegFactor("T", 1, "[", 1)))
    e += Expr.term(QI.of(0, -1) * w, dirac=(chi,),
                   mats=_letters(Ao, "Y"), scal=(m, Scalar("divA"),
                                                 Bracket(0, 1, 0),
                                                 RegFactor("T", 1, "[", 1)))
    # even mass terms
    e += Expr.term(QI.of(Fraction(1, 2)) * w, dirac=(chi, xc),
                   mats=_letters("Y", "Y", Ao),
                   scal=(m, m, _xi_dot(Aov), Bracket(1, 0, 0),
                         RegFactor("T", 0, "[", 2)))
    e += Expr.term(QI.of(Fraction(1, 2)) * w, dirac=(chi, xc),
                   mats=_letters(Ao, "Y", "Y"),
                   scal=(m, m, _xi_dot(Aov), Bracket(0, 1, 0),
                         RegFactor("T", 0, "[", 2)))
    e += Expr.term(QI.of(1) * w, dirac=(chi, _vec(Aov)),
                   mats=_letters("Y", "Y", Ao),
                   scal=(m, m, Bracket(1, 0, 0), RegFactor("T", 1, "[", 2)))
    e += Expr.term(QI.of(-1) * w, dirac=(chi, _vec(Apv)),
                   mats=_letters("Y", Ap, "Y"),
                   scal=(m, m, Bracket(0, 0, 0), RegFactor("T", 1, "[", 2)))
    e += Expr.term(QI.of(1) * w, dirac=(chi, _vec(Aov)),
                   mats=_letters(Ao, "Y", "Y"),
                   scal=(m, m, Bracket(0, 1, 0), RegFactor("T", 1, "[", 2)))
    return e


def dirac_current_source() -> Expr:
    """-(1/8 pi) sum_c chi_c (sectorially projected Dirac current, slashed),
    weighted by the particle normalization."""
    e = Expr.zero()
    for hand in ("L", "R"):
        e += Expr.term(QI.of(-PARTICLE_WEIGHT * Fraction(1, 8)),
                       dirac=(Chiral(hand), _vec(f"J{hand}")),
                       mats=(MatSym(f"J_{hand}", "hat"),), den=(PI,))
    return e


def energy_momentum_source() -> Expr:
    """+(i/8 pi) sum_c chi_c gamma_k xi_l (sectorially projected
    energy-momentum tensor), the next order of the particle expansion at
    the origin.  The vector slot T{c} stands for the contraction
    T-hat^{kl}_c xi_l, so <T{c}, xi> = T-hat^{kl} xi_k xi_l."""
    e = Expr.zero()
    for hand in ("L", "R"):
        e += Expr.term(QI.of(0, PARTICLE_WEIGHT * Fraction(1, 8)),
                       dirac=(Chiral(hand), _vec(f"T{hand}")),
                       mats=(MatSym(f"T_{hand}", "hat"),), den=(PI,))
    return e


def phase_insertions(mass_order: int = 2) -> Expr:
    """Linear-in-potential dressing of the vacuum kernel by the ordered
    exponentials of the gauge phases: each chirality's kernel is left
    multiplied by -i (line average of the contracted potential), which
    after sectorial projection attaches a hatted/accented potential letter
    to every vacuum term."""
    from fractions import Fraction as F
    xc = Slashed("xicheck", real=True)
    iota = Slashed("iota", n=-1, bracket="[", p=0)
    m = Scalar("m")
    e = Expr.zero()
    for hand in ("L", "R"):
        A = f"A_{hand}"
        Av = f"A{hand}"
        chi = Chiral(hand)
        dress = (QI.of(0, -1), (_xi_dot(Av), Bracket(0, 0, 0)))
        cdr, sdr = dress
        # leading lightlike and iota terms
        e += Expr.term(cdr * QI.of(0, F(3, 2)), dirac=(chi, xc),
                       mats=_letters(A), scal=sdr + (RegFactor("T", -1, "[", 0),))
        e += Expr.term(cdr * QI.of(0, 3), dirac=(chi, iota),
                       mats=_letters(A), scal=sdr + (RegFactor("T", 0, "[", 0),))
        if mass_order >= 1:
            e += Expr.term(cdr, dirac=(chi,),
                           mats=_letters(A, "Y"),
                           scal=sdr + (m, RegFactor("T", 0, "[", 1)))
        if mass_order >= 2:
            e += Expr.term(cdr * QI.of(0, F(1, 2)), dirac=(chi, xc),
                           mats=_letters(A, "Y", "Y"),
                           scal=sdr + (m, m, RegFactor("T", 0, "[", 2)))
    return e


def brackets_at_origin(e: Expr) -> Expr:
    """Evaluate every nested-line-integral weight in the lowest Taylor
    order at the origin."""
    out = Expr.zero()
    for t, c in e.items():
        scal = []
        for a in t.scal:
            if isinstance(a, Bracket):
                c = c * QI.of(a.value_at_origin())
            else:
                scal.append(a)
        out = out + Expr.term(c, t.dirac, t.mats, scal, t.den, t.tag)
    return out


def currents_input(include_particles: bool = True, mass_order: int = 2,
                   at_origin: bool = True) -> Expr:
    """The full projected perturbation kernel for the current/mass
    analysis: the phase-free light-cone contributions, the gauge-phase
    dressing of the vacuum, and the particle sources."""
    dP = sectorial_project(bosonic_entries("L") + bosonic_entries("R"))
    if include_particles:
        dP = dP + dirac_current_source()
    if at_origin:
        dP = brackets_at_origin(dP)
    return dP
