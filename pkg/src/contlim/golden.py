"""Golden catalog: the printed coefficient fractions of the degree-four
analysis (K1..K8, K16..K18) and the full current/mass display they enter,
as word-valued expressions directly comparable with the engine output.
Each entry records its anchor in the source text.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict

from .atoms import Inner, MatSym, RegFactor, Scalar
from .expr import Expr
from .perturb import LAM_DIFF
from .scalars import QI

PI = Scalar("pi")
TAU = Scalar("tau_reg")
DELTA = Scalar("delta")

T_M1 = RegFactor("T", -1, "[", 0)
T_0 = RegFactor("T", 0, "[", 0)
T_P1 = RegFactor("T", 1, "[", 0)
T_0_1 = RegFactor("T", 0, "[", 1)
T_0_2 = RegFactor("T", 0, "[", 2)
T_P1_2 = RegFactor("T", 1, "[", 2)
T_P1_R = RegFactor("T", 1, "[", 0, "R")
L_0 = RegFactor("L", 0, "[", 0)


def _c(f: RegFactor) -> RegFactor:
    return f.conjugate()


def _frac(coeff, num, den=()) -> Expr:
    return Expr.term(coeff, scal=tuple(num), den=tuple(den))


def _minus_cc(coeff, num, den=()) -> Expr:
    """coeff * [product(num) - c.c.] / product(den): the conjugate flips
    every factor of the bracket but not the denominator."""
    plus = _frac(coeff, num, den)
    cc = _frac(coeff, tuple(f.conjugate() for f in num), den)
    return plus - cc


def _plus_cc(coeff, num, den=()) -> Expr:
    plus = _frac(coeff, num, den)
    cc = _frac(coeff, tuple(f.conjugate() for f in num), den)
    return plus + cc


def K(idx: int) -> Expr:
    """The simple fractions of the current and mass terms (weakly evaluated
    on the light cone); K8 equals K1 with the -c.c. replaced by +c.c."""
    cT0 = _c(T_0)
    if idx == 1:
        return _minus_cc(QI.of(Fraction(-3, 16)), (T_M1, T_0, _c(T_M1)),
                         (PI, cT0))
    if idx == 2:
        return _minus_cc(QI.of(Fraction(3, 4)), (T_0, T_0, _c(T_M1), cT0),
                         (cT0,))
    if idx == 3:
        return _minus_cc(QI.of(Fraction(3, 2)), (T_M1, T_P1, _c(T_M1), cT0),
                         (cT0,))
    if idx == 4:
        return _minus_cc(QI.of(Fraction(1, 4)), (T_0, T_0_2, _c(T_M1), cT0),
                         (cT0,))
    if idx == 5:
        return _minus_cc(QI.of(Fraction(1, 4)), (T_M1, T_P1_2, _c(T_M1), cT0),
                         (cT0,))
    if idx == 6:
        x2 = _square(_frac(1, (T_0_1, _c(T_M1))) - _frac(1, (T_M1, _c(T_0_1))))
        pref = _frac(QI.of(Fraction(1, 12)), (T_0, cT0), (cT0, LAM_DIFF))
        return pref * x2
    if idx == 7:
        x2 = _square(_frac(1, (T_0_1, cT0)) - _frac(1, (T_0, _c(T_0_1))))
        pref = _frac(QI.of(Fraction(1, 12)), (T_M1, _c(T_M1)), (cT0, LAM_DIFF))
        return pref * x2
    if idx == 8:
        return _plus_cc(QI.of(Fraction(3, 16)), (T_M1, T_0, _c(T_M1)),
                        (PI, cT0))
    if idx == 16:
        pref = _frac(QI.of(Fraction(27, 32)), (T_M1, _c(T_M1)), (cT0,))
        inner = _frac(1, (T_P1_R, _c(L_0))) + _frac(1, (L_0, _c(T_P1_R)))
        return pref * inner
    raise KeyError(idx)


def _square(e: Expr) -> Expr:
    return e * e


def K17() -> Expr:
    """-K16 (1 - L^(0)_[0]/T^(0)_[0])."""
    one_minus = Expr.one() - _frac(1, (L_0,), (T_0,))
    return (Expr.zero() - K(16)) * one_minus


def K18() -> Expr:
    """(1/2) K8 (1 - L^(0)_[0]/T^(0)_[0])."""
    one_minus = Expr.one() - _frac(1, (L_0,), (T_0,))
    return K(8).scale(QI.of(Fraction(1, 2))) * one_minus


def kappa_parts() -> Dict[str, Expr]:
    """The gravitational coupling as an exact quotient:
    kappa = (delta^2/tau_reg) K17/K18 = numerator/denominator with
    numerator = delta^2 K17 and denominator = tau_reg K18."""
    d2 = Expr.term(1, scal=(DELTA, DELTA))
    tau = Expr.term(1, scal=(TAU,))
    return {"numerator": d2 * K17(), "denominator": tau * K18()}


def _w(*letters) -> tuple:
    """Matrix word letters: 'A^L' acute-A_L, 'Y`' grave-Y, 'Y^' hat, plain
    'Y' unaccented."""
    out = []
    for s in letters:
        accent = None
        if s.endswith("'"):
            accent, s = "acute", s[:-1]
        elif s.endswith("`"):
            accent, s = "grave", s[:-1]
        elif s.endswith("^"):
            accent, s = "hat", s[:-1]
        out.append(MatSym(s, accent))
    return tuple(out)


def _dot(vec: str) -> Inner:
    return Inner.of(vec, False, "xi", False)


def _word_term(coeff, letters, vec, fraction: Expr, m2: bool = True) -> Expr:
    m = Scalar("m")
    scal = (_dot(vec),) + ((m, m) if m2 else ())
    return Expr.term(coeff, mats=letters, scal=scal) * fraction


def script_J_groups(hand: str) -> Dict[str, Expr]:
    """i xi_k J^k_{hand} split into its named term groups (K_c in the EL
    analysis equals the summed matrix)."""
    o, p = (("L", "R") if hand == "L" else ("R", "L"))
    Ao, Ap = f"A_{o}", f"A_{p}"
    i_ = QI.i()
    g: Dict[str, Expr] = {}
    g["J-term"] = Expr.term(i_, mats=(MatSym(f"J_{p}", "hat"),),
                            scal=(_dot(f"J{p}"),)) * K(1)
    g["jo-term"] = Expr.term(i_, mats=(MatSym(f"j{o}", "hat"),),
                             scal=(_dot(f"j{o}"),)) * K(2)
    g["jp-term"] = Expr.term(i_, mats=(MatSym(f"j{p}", "hat"),),
                             scal=(_dot(f"j{p}"),)) * K(3)
    g["mterm1"] = (_word_term(i_ * QI.of(-3), _w(f"{Ao}'", "Y", "Y`"),
                              f"A{o}", K(4)) +
                   _word_term(i_ * QI.of(-3), _w("Y'", "Y", f"{Ao}`"),
                              f"A{o}", K(4)))
    g["mterm2"] = (_word_term(i_, _w(f"{Ao}^", "Y'", "Y`"), f"A{o}", K(4)) +
                   _word_term(i_, _w("Y'", "Y`", f"{Ao}^"), f"A{o}", K(4)))
    g["mterm3"] = (_word_term(i_ * QI.of(-3), _w(f"{Ap}'", "Y", "Y`"),
                              f"A{p}", K(5)) +
                   _word_term(i_ * QI.of(6), _w("Y'", Ao, "Y`"), f"A{o}",
                              K(5)) +
                   _word_term(i_ * QI.of(-3), _w("Y'", "Y", f"{Ap}`"),
                              f"A{p}", K(5)))
    g["mterm4"] = (_word_term(i_ * QI.of(-6), _w(f"{Ao}'", "Y`", "Y^"),
                              f"A{o}", K(6)) +
                   _word_term(i_ * QI.of(-6), _w("Y^", "Y'", f"{Ao}`"),
                              f"A{o}", K(6)))
    g["mterm5"] = (_word_term(i_ * QI.of(6), _w("Y^", f"{Ao}'", "Y`"),
                              f"A{o}", K(7)) +
                   _word_term(i_ * QI.of(6), _w("Y'", f"{Ao}`", "Y^"),
                              f"A{o}", K(7)))
    g["mterm6"] = (_word_term(i_, _w(f"{Ao}^", "Y^", "Y^"), f"A{o}", K(6)) +
                   _word_term(i_ * QI.of(2), _w("Y^", f"{Ap}^", "Y^"),
                              f"A{p}", K(6)) +
                   _word_term(i_, _w("Y^", "Y^", f"{Ao}^"), f"A{o}", K(6)))
    g["mterm7"] = (_word_term(i_ * QI.of(-1), _w(f"{Ap}^", "Y^", "Y^"),
                              f"A{p}", K(7)) +
                   _word_term(i_ * QI.of(-2), _w("Y^", f"{Ao}^", "Y^"),
                              f"A{o}", K(7)) +
                   _word_term(i_ * QI.of(-1), _w("Y^", "Y^", f"{Ap}^"),
                              f"A{p}", K(7)))
    return g


HAT_GROUPS = ("mterm2", "mterm6", "mterm7")


def script_J(hand: str, sector: str = "all") -> Expr:
    """The full current/mass display (sector 'all'), its ab-initio derivable
    part ('phase-free': every word carrying the potential inside the
    accented generation word), or the gauge-phase completion ('hat': the
    groups whose potential letter is sectorially hatted on its own)."""
    g = script_J_groups(hand)
    e = Expr.zero()
    for name, part in g.items():
        if sector == "all" or \
                (sector == "hat") == (name in HAT_GROUPS):
            e = e + part
    return e


def script_T(hand: str) -> Expr:
    """The energy-momentum contribution: T-hat^{kl}_{opp} xi_k xi_l K8."""
    p = "R" if hand == "L" else "L"
    return Expr.term(1, mats=(MatSym(f"T_{p}", "hat"),),
                     scal=(_dot(f"T{p}"),)) * K(8)


GROUP_LABELS = ("J-term", "jo-term", "jp-term", "mterm1", "mterm2", "mterm3",
                "mterm4", "mterm5", "mterm6", "mterm7")
