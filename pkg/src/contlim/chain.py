"""Fermionic-projector ansaetze, closed chains and their spectral data.

Kernels are represented as 2x2 isospin matrices of spinor-valued Expr
(sector index n in {1,2}: 1 = neutrino-like with the right-handed
high-energy states, 2 = charged-like).  The eight eigenvalues lambda_{ncs}
are produced by contracting the slashed-xi pair of each chain against the
matching z factors (s = + contracts the unconjugated factor, s = - the
conjugated one).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .atoms import Chiral, MatSym, RegFactor, Scalar, Slashed
from .context import Context, standard_context
from .expr import Expr, Term, adjoint, normal_order, _sorted_atoms
from .regcalc import (TAU, collect_L, contract, truncate_degree,
                      vacuum_he_series, _delta_inv2)
from .scalars import QI


class UnsupportedAnsatz(Exception):
    pass


@dataclass
class ProjectorConfig:
    generations: int = 3
    tau_reg: bool = True        # include the right-handed high-energy states
    he_order: int = 1           # truncation order of their series in 1/delta^2
    mass_order: int = 0         # powers of m kept in the kernel (0, 1 or 2)
    phases: bool = False        # dress with gauge phase factors
    naive_chiral: bool = False  # purely left-handed neutrino regularization
    case: str = "ii"            # spectral-projector case 'i' or 'ii'

    def __post_init__(self):
        if self.case not in ("i", "ii"):
            raise ValueError("case must be 'i' or 'ii'")


XI = Slashed("xi", -1, "[", 0)
T_LEAD = RegFactor("T", -1, "[", 0)


def _mass_terms(sector: int, g: int, order: int) -> Expr:
    """m Y-hat T^(0)_[1] + (i/2) m^2 Y'Y` xi T^(0)_[2] for one sector
    (sector 1 letters use the tilde-mass symbol base)."""
    base = "Yt" if sector == 1 else "Y"
    out = Expr.zero()
    m = Scalar("m")
    if order >= 1:
        out = out + Expr.atoms(MatSym(base, "hat"), m,
                               RegFactor("T", 0, "[", 1))
    if order >= 2:
        out = out + Expr.atoms(MatSym(base, "acute"), MatSym(base, "grave"),
                               m, m, Slashed("xi", 0, "[", 2),
                               RegFactor("T", 0, "[", 2)).scale(QI.of(0, Fraction(1, 2)))
    return out


def build_projector(cfg: ProjectorConfig) -> List[List[Expr]]:
    """The regularized vacuum kernel P(x,y) as a 2x2 isospin matrix of
    spinor expressions, to the configured mass and high-energy orders,
    optionally dressed with gauge phases."""
    g = cfg.generations
    lead = Expr.atoms(XI, T_LEAD).scale(QI.of(0, Fraction(g, 2)))
    charged = lead + _mass_terms(2, g, cfg.mass_order)
    if cfg.naive_chiral:
        neutrino = Expr.atoms(Chiral("L")) * lead
    else:
        neutrino = lead + _mass_terms(1, g, cfg.mass_order)
        if cfg.tau_reg:
            he = Expr.zero()
            for n in range(cfg.he_order + 1):
                fac = QI.of(Fraction(1, 1)) / QI.of(
                    int(__import__("math").factorial(n)))
                piece = Expr.atoms(Slashed("xi", -1 + n, "[", 2 * n, "R"),
                                   RegFactor("T", -1 + n, "[", 2 * n, "R"),
                                   TAU).scale(fac * QI.of(0, Fraction(1, 2)))
                if n:
                    piece = piece * _delta_inv2(n)
                he = he + piece
            neutrino = neutrino + Expr.atoms(Chiral("R")) * he
    zero = Expr.zero()
    P = [[neutrino, zero], [zero, charged]]
    if cfg.phases:
        P = _dress_with_phases(P, cfg)
    return P


def _phase(name: str) -> Expr:
    return Expr.atoms(Scalar(name, real=False))


def _dress_with_phases(P: List[List[Expr]], cfg: ProjectorConfig) -> List[List[Expr]]:
    """Multiply the left-handed component by the sector-projected U(2)
    phase matrix (off-diagonals carrying the mixing mean c) and the
    right-handed component by the diagonal U(1) phases."""
    UL = [[_phase("U_L^11"), _phase("U_L^12") * _phase("c").conj_scalars()],
          [_phase("U_L^21") * _phase("c"), _phase("U_L^22")]]
    VR = [_phase("V_R^N"), _phase("V_R^C")]
    chiL, chiR = Expr.atoms(Chiral("L")), Expr.atoms(Chiral("R"))
    out = [[Expr.zero(), Expr.zero()], [Expr.zero(), Expr.zero()]]
    for i in range(2):
        for j in range(2):
            left = chiL * UL[i][j] * P[j][j]
            out[i][j] = out[i][j] + left
        out[i][i] = out[i][i] + chiR * VR[i] * P[i][i]
    return out


def kernel_adjoint(P: List[List[Expr]]) -> List[List[Expr]]:
    """P(y,x) = P(x,y)^* entrywise (matrix adjoint: transpose + spin
    adjoint)."""
    return [[adjoint(P[j][i]) for j in range(2)] for i in range(2)]


def closed_chain(P: List[List[Expr]], ctx: Optional[Context] = None,
                 min_degree: Optional[int] = None) -> List[List[Expr]]:
    """A(x,y) = P(x,y) P(y,x), normal ordered; optionally truncated at the
    working degree (dropped terms stay in tagged remainders)."""
    ctx = ctx or standard_context()
    Q = kernel_adjoint(P)
    A = [[Expr.zero(), Expr.zero()], [Expr.zero(), Expr.zero()]]
    for i in range(2):
        for j in range(2):
            acc = Expr.zero()
            for k in range(2):
                acc = acc + P[i][k] * Q[k][j]
            acc = normal_order(acc, ctx)
            if min_degree is not None:
                acc, rem = truncate_degree(acc, min_degree)
                acc = acc + rem
            A[i][j] = acc
    return A


# ------------------------------------------------------------- spectral data


@dataclass
class SpectralData:
    """Eigenvalues lambda_{ncs} (n in 1..2, c in L/R, s in +/-), the isospin
    projectors I_n, symbolic phase factors nu_{nc}, and the chain they came
    from."""

    eigenvalues: Dict[Tuple[int, str, str], Expr]
    nu: Dict[Tuple[int, str], Expr] = field(default_factory=dict)
    case: str = "ii"

    def pair_check(self) -> bool:
        """Conjugate pairing lambda_{nR+-} = conj(lambda_{nL-+})."""
        for n in (1, 2):
            for s, so in (("+", "-"), ("-", "+")):
                a = self.eigenvalues.get((n, "R", s), Expr.zero())
                b = self.eigenvalues.get((n, "L", so), Expr.zero())
                if a.strip_tags() != _conj_expr(b.strip_tags()):
                    return False
        return True


def _conj_expr(e: Expr) -> Expr:
    """Complex conjugation of a scalar-valued expression (matrix words get
    daggered in place)."""
    out = Expr.zero()
    for t, c in e.items():
        if t.dirac:
            raise ValueError("conjugation of a non-scalar expression")
        mats = tuple(a.adjoint() for a in reversed(t.mats))
        scal = tuple(a.conjugate() for a in t.scal)
        den = tuple(a.conjugate() for a in t.den)
        out = out + Expr.term(c.conj(), (), mats, scal, den, t.tag)
    return out


def _eigen_of_sector(a_nn: Expr, hand: str, sign: str,
                     min_degree: int) -> Expr:
    """Project the (n,n) chain entry on handedness `hand` and contract the
    slashed pair into the s=sign eigenvalue."""
    out = Expr.zero()
    for t, c in a_nn.items():
        word = list(t.dirac)
        chir = None
        if word and isinstance(word[0], Chiral):
            chir = word[0].hand
            word = word[1:]
        if chir is not None and chir != hand:
            continue
        if len(word) != 2 or not all(isinstance(a, Slashed) and a.name == "xi"
                                     for a in word):
            if not word:
                # scalar term: contributes to both eigenvalues unchanged
                out = out + Expr({Term((), t.mats, t.scal, t.den, t.tag): c})
                continue
            raise UnsupportedAnsatz(f"chain term not of xi xi-bar form: {t}")
        unconj = next((a for a in word if not a.conj), None)
        conj = next((a for a in word if a.conj), None)
        if unconj is None or conj is None:
            raise UnsupportedAnsatz(f"need one xi and one conjugate xi: {t}")
        target = unconj if sign == "+" else conj
        z = RegFactor("z", target.n, target.bracket or "[", target.p,
                      target.ctag, target.conj)
        out = out + Expr({Term((), t.mats, _sorted_atoms(t.scal + (z,)),
                               t.den, t.tag): c})
    out = contract(out)
    kept, rem = truncate_degree(out, min_degree)
    return collect_L(kept) + rem


def spectral_decompose(A: List[List[Expr]], cfg: ProjectorConfig,
                       min_degree: int = 2) -> SpectralData:
    """Eigenvalues of a sector-diagonal closed chain.

    Each diagonal entry must be a linear combination of (chiral) xi xi-bar
    terms; the two eigenvalues arise by contracting the slashed pair with
    the z factor of the unconjugated (s=+) or conjugated (s=-) factors.
    Phase scalars stay attached, giving the nu_{nc} lambda_s factorization.
    """
    if not A[0][1].is_zero() or not A[1][0].is_zero():
        raise UnsupportedAnsatz("chain is not sector-diagonal")
    eig: Dict[Tuple[int, str, str], Expr] = {}
    for n in (1, 2):
        for hand in ("L", "R"):
            for sign in ("+", "-"):
                eig[(n, hand, sign)] = _eigen_of_sector(
                    A[n - 1][n - 1], hand, sign, min_degree)
    nu: Dict[Tuple[int, str], Expr] = {}
    if cfg.phases and cfg.case == "ii":
        nu[(1, "L")] = _phase("U_L^11") * _phase("V_R^N")
        nu[(2, "L")] = _phase("U_L^22") * _phase("V_R^C")
        nu[(1, "R")] = _conj_expr(nu[(1, "L")])
        nu[(2, "R")] = _conj_expr(nu[(2, "L")])
    return SpectralData(eig, nu, cfg.case)


def vacuum_lambda_plus(g: int = 3) -> Expr:
    """9 T^(0)_[0] conj(T^(-1)_[0]) (leading charged-sector eigenvalue)."""
    return Expr.atoms(RegFactor("T", 0, "[", 0),
                      RegFactor("T", -1, "[", 0, conj=True)).scale(QI.of(g * g))
