"""Atom types for the noncommutative expression algebra.

Three sectors that mutually commute:
  * Dirac atoms (chiral projectors, gamma matrices, slashed vectors) --
    noncommutative among themselves;
  * matrix-word atoms (isospin/generation symbols, possibly accent-marked
    by sectorial projection) -- noncommutative among themselves;
  * commutative scalar atoms (regularization factors, macroscopic scalars,
    inner products, epsilon/metric contractions, line-integral weights).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from math import factorial
from typing import Optional, Tuple

# ---------------------------------------------------------------- Dirac atoms


@dataclass(frozen=True)
class Chiral:
    hand: str  # 'L' or 'R'

    def __post_init__(self):
        if self.hand not in ("L", "R"):
            raise ValueError(f"bad handedness {self.hand!r}")

    @property
    def other(self) -> "Chiral":
        return Chiral("R" if self.hand == "L" else "L")

    def key(self):
        k = getattr(self, "_k", None)
        if k is None:
            k = ("chiral", self.hand)
            object.__setattr__(self, "_k", k)
        return k

    def __str__(self):
        return f"chi_{self.hand}"


@dataclass(frozen=True)
class Gamma5:
    def key(self):
        return ("gamma5",)

    def __str__(self):
        return "gamma5"


@dataclass(frozen=True)
class Gamma:
    """A gamma matrix carrying an abstract tensor index."""

    index: str

    def key(self):
        return ("gamma", self.index)

    def __str__(self):
        return f"gamma^{self.index}"


@dataclass(frozen=True)
class Slashed:
    """A slashed vector.  Decorations (n, bracket, p, ctag) mark the
    regularized light-cone vectors; `real` marks vectors fixed under the
    spin adjoint."""

    name: str
    n: Optional[int] = None
    bracket: Optional[str] = None  # '[' or '{'
    p: Optional[int] = None
    ctag: Optional[str] = None
    conj: bool = False
    real: bool = False

    def adjoint(self) -> "Slashed":
        if self.real:
            return self
        return replace(self, conj=not self.conj)

    @property
    def contract_class(self):
        """Atoms of equal contract class annihilate pairwise in a word."""
        if self.name == "xi":
            return ("xi",)  # all decorated/conjugated xi factors contract
        return (self.name, self.conj)

    def key(self):
        k = getattr(self, "_k", None)
        if k is None:
            k = ("slashed", self.name, self.n if self.n is not None else 99,
                 self.bracket or "", self.p if self.p is not None else 99,
                 self.ctag or "", self.conj)
            object.__setattr__(self, "_k", k)
        return k

    def __str__(self):
        dec = ""
        if self.n is not None:
            sub = ",".join(s for s in (self.ctag, None if self.p is None else str(self.p)) if s is not None)
            dec = f"^({self.n})_{self.bracket or '['}{sub}{']' if (self.bracket or '[') == '[' else '}'}"
        s = f"{self.name}{dec}/"
        return f"conj({s})" if self.conj else s


DIRAC_ATOMS = (Chiral, Gamma5, Gamma, Slashed)

# ----------------------------------------------------------- matrix-word atoms


@dataclass(frozen=True)
class MatSym:
    """One letter of an isospin/generation matrix word.

    `accent` is None before sectorial projection; 'hat', 'acute' or 'grave'
    after.  Hermitian base symbols are fixed under the adjoint."""

    base: str
    accent: Optional[str] = None
    conj: bool = False
    herm: bool = True

    def adjoint(self) -> "MatSym":
        acc = {"acute": "grave", "grave": "acute"}.get(self.accent, self.accent)
        conj = self.conj if self.herm else not self.conj
        return MatSym(self.base, acc, conj, self.herm)

    def key(self):
        k = getattr(self, "_k", None)
        if k is None:
            k = ("mat", self.base, self.accent or "", self.conj)
            object.__setattr__(self, "_k", k)
        return k

    def __str__(self):
        mark = {"hat": "^", "acute": "'", "grave": "`", None: ""}[self.accent]
        s = f"{mark}{self.base}"
        return f"conj({s})" if self.conj else s


# ------------------------------------------------------------- scalar atoms


@dataclass(frozen=True)
class RegFactor:
    """A regularization factor T^(n)_[p], L^(n)_[p], curly-bracket T^(n)_{p},
    or a contraction factor z^(n)_[p]."""

    kind: str  # 'T', 'L' or 'z'
    n: int
    bracket: str = "["  # '[' or '{'
    p: Optional[int] = 0  # None: bare factor, mass expansion not yet applied
    ctag: Optional[str] = None  # 'R', 'L' (high-energy class) or other tag
    conj: bool = False

    def __post_init__(self):
        if self.kind not in ("T", "L", "z"):
            raise ValueError(f"bad factor kind {self.kind!r}")
        if self.bracket not in ("[", "{"):
            raise ValueError(f"bad bracket {self.bracket!r}")

    @property
    def degree(self) -> int:
        """Light-cone degree: deg T^(n) = deg L^(n) = 1 - n.

        The contraction factor z^(n) has degree -1 independently of n;
        this is the unique assignment consistent with z^(n) T^(n) ->
        -4(n T^(n+1) + ...)."""
        if self.kind == "z":
            return -1
        return 1 - self.n

    @property
    def has_log(self) -> bool:
        """Whether the factor carries a logarithmic pole on the light cone.
        Factors with a high-energy chiral tag never do."""
        if self.kind == "z" or self.ctag in ("R", "L"):
            return False
        return self.n >= 1

    def conjugate(self) -> "RegFactor":
        return replace(self, conj=not self.conj)

    def key(self):
        k = getattr(self, "_k", None)
        if k is None:
            k = ("reg", self.kind, self.n, self.bracket,
                 self.p if self.p is not None else 999, self.ctag or "",
                 self.conj)
            object.__setattr__(self, "_k", k)
        return k

    def __str__(self):
        sub = ",".join(s for s in (self.ctag, None if self.p is None else str(self.p)) if s is not None)
        close = "]" if self.bracket == "[" else "}"
        s = f"{self.kind}^({self.n})_{self.bracket}{sub}{close}"
        return f"conj({s})" if self.conj else s


@dataclass(frozen=True)
class Scalar:
    """A named macroscopic scalar symbol (tau_reg, delta, m, pi, c_reg
    keys, opaque remainders, ...)."""

    name: str
    conj: bool = False
    real: bool = True

    def conjugate(self) -> "Scalar":
        if self.real:
            return self
        return replace(self, conj=not self.conj)

    def key(self):
        k = getattr(self, "_k", None)
        if k is None:
            k = ("scal", self.name, self.conj)
            object.__setattr__(self, "_k", k)
        return k

    def __str__(self):
        return f"conj({self.name})" if self.conj else self.name


@dataclass(frozen=True)
class Inner:
    """Symbolic inner product <u,v> of two vector identities.

    Each slot is a (name, conj) pair; the metric is symmetric so slots are
    stored sorted."""

    a: Tuple[str, bool]
    b: Tuple[str, bool]

    @staticmethod
    def of(a_name: str, a_conj: bool, b_name: str, b_conj: bool) -> "Inner":
        # only the iota directions are genuinely complex; every other vector
        # identity is real (xi-class vectors are real up to higher orders)
        if a_name != "iota":
            a_conj = False
        if b_name != "iota":
            b_conj = False
        x, y = sorted([(a_name, a_conj), (b_name, b_conj)])
        return Inner(x, y)

    def conjugate(self) -> "Inner":
        return Inner.of(self.a[0], not self.a[1], self.b[0], not self.b[1])

    def key(self):
        k = getattr(self, "_k", None)
        if k is None:
            k = ("inner", self.a, self.b)
            object.__setattr__(self, "_k", k)
        return k

    def __str__(self):
        def s(t):
            return f"conj({t[0]})" if t[1] else t[0]
        return f"<{s(self.a)},{s(self.b)}>"


@dataclass(frozen=True)
class Eta:
    """Minkowski metric component eta^{ij} with abstract indices."""

    i: str
    j: str

    @staticmethod
    def of(i: str, j: str) -> "Eta":
        x, y = sorted([i, j])
        return Eta(x, y)

    def conjugate(self) -> "Eta":
        return self

    def key(self):
        return ("eta", self.i, self.j)

    def __str__(self):
        return f"eta^{{{self.i},{self.j}}}"


@dataclass(frozen=True)
class Eps:
    """Totally antisymmetric epsilon contraction of four vector/index slots.
    Construction canonicalizes slot order; the sign is returned separately."""

    slots: Tuple[Tuple[str, bool], ...]

    @staticmethod
    def of(slots) -> Tuple[int, Optional["Eps"]]:
        slots = [(n, c if n == "iota" else False) for n, c in slots]
        if len(slots) != 4:
            raise ValueError("epsilon needs exactly four slots")
        if len(set(slots)) != 4:
            return 0, None
        perm = sorted(range(4), key=lambda k: slots[k])
        sign = 1
        seen = [False] * 4
        for start in range(4):
            if seen[start]:
                continue
            length, k = 0, start
            while not seen[k]:
                seen[k] = True
                k = perm[k]
                length += 1
            if length % 2 == 0:
                sign = -sign
        return sign, Eps(tuple(sorted(slots)))

    def conjugate(self) -> "Eps":
        return self

    def key(self):
        return ("eps", self.slots)

    def __str__(self):
        return "eps(" + ",".join(f"conj({n})" if c else n for n, c in self.slots) + ")"


@dataclass(frozen=True)
class Bracket:
    """An opaque nested-line-integral weight [l, r | w].

    The adjoint (kernel argument swap) exchanges l and r.  In a Taylor
    expansion at the origin the weight evaluates to the rational
    (l+w)! (r+w)! / (l+r+2w+1)!."""

    l: int
    r: int
    w: int

    def adjoint(self) -> "Bracket":
        return Bracket(self.r, self.l, self.w)

    def conjugate(self) -> "Bracket":
        return self.adjoint()

    def value_at_origin(self) -> Fraction:
        return Fraction(factorial(self.l + self.w) * factorial(self.r + self.w),
                        factorial(self.l + self.r + 2 * self.w + 1))

    def key(self):
        return ("bracket", self.l, self.r, self.w)

    def __str__(self):
        return f"[{self.l},{self.r}|{self.w}]"


SCALAR_ATOMS = (RegFactor, Scalar, Inner, Eta, Eps, Bracket)
