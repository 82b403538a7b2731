"""Evaluation contexts: metric tables for slashed-vector contractions and
rewrite policy flags.

The contraction value of a pair of slashed vectors is context dependent:
the light-cone calculus pairs the regularized xi factors into z factors,
while the iota representation declares <xicheck,xicheck> = 0,
<xicheck, iota> = 1 and drops every contraction of iota with anything
else.  Plain macroscopic vectors contract into symbolic inner products
unless the caller supplies a table entry.
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple, Union

from .atoms import Gamma, Inner, RegFactor, Slashed
from .scalars import QI

PairKey = Tuple[Tuple[str, bool], Tuple[str, bool]]


def _norm_vec_name(a: Slashed) -> str:
    # decorated xi factors all stand for the same macroscopic direction
    return "xi" if a.name in ("xi", "xicheck") else a.name


class Context:
    """Rewrite context: metric table plus policy flags.

    table entries map sorted ((name, conj), (name, conj)) pairs to Expr
    values; names 'xi' and 'xicheck' have built-in rules and 'iota'
    contracts to zero against everything except 'xicheck'.
    """

    def __init__(self, table: Optional[Dict] = None, iota_rules: bool = False,
                 drop_eps: bool = False, gen_dim: int = 3):
        self.table: Dict[PairKey, object] = {}
        self.iota_rules = iota_rules
        self.drop_eps = drop_eps
        self.gen_dim = gen_dim
        if table:
            for (a, b), v in table.items():
                self.set_pair(a, b, v)

    def set_pair(self, a: Union[str, Tuple[str, bool]], b, value) -> None:
        if isinstance(a, str):
            a = (a, False)
        if isinstance(b, str):
            b = (b, False)
        x, y = sorted([a, b])
        self.table[(x, y)] = value

    # -- pair valuation -----------------------------------------------------

    def pair(self, a, b):
        """Expr value of <a,b> for two Dirac vector atoms.  Import-cycle
        avoidance: returns objects convertible by expr.as_expr."""
        from .expr import Expr  # local import

        if isinstance(a, Gamma) and isinstance(b, Gamma):
            if a.index == b.index:  # contracted pair: eta^i_i = 4
                return QI.of(4)
            from .atoms import Eta
            return Expr.atoms(Eta.of(a.index, b.index))
        if isinstance(a, Gamma) or isinstance(b, Gamma):
            g, v = (a, b) if isinstance(a, Gamma) else (b, a)
            return Expr.atoms(Inner.of(f"e[{g.index}]", False, _norm_vec_name(v), v.conj))

        akey = (a.name if a.name != "xicheck" else "xicheck", a.conj)
        bkey = (b.name if b.name != "xicheck" else "xicheck", b.conj)
        x, y = sorted([akey, bkey])
        if (x, y) in self.table:
            return self.table[(x, y)]

        names = {a.name, b.name}
        if names == {"xi"}:
            # (xi^(n)_[p])^j (xi^(n')_[p'])_j = (z^(n)_[p] + z^(n')_[p'])/2
            za = RegFactor("z", a.n, a.bracket or "[", a.p, a.ctag, a.conj)
            zb = RegFactor("z", b.n, b.bracket or "[", b.p, b.ctag, b.conj)
            return Expr.atoms(za).scale(QI.of(1, 0) / QI.of(2)) + \
                Expr.atoms(zb).scale(QI.of(1) / QI.of(2))
        if self.iota_rules:
            if names == {"xicheck"}:
                return Expr.zero()
            if "iota" in names:
                if names == {"xicheck", "iota"}:
                    return Expr.one()
                return Expr.zero()  # iota against iota or macroscopic: higher order
        # fall back to a symbolic inner product
        return Expr.atoms(Inner.of(_norm_vec_name(a), a.conj, _norm_vec_name(b), b.conj))


def standard_context(**kw) -> Context:
    """Contraction-rule calculus: xi pairs produce z factors."""
    return Context(iota_rules=False, **kw)


def iota_context(**kw) -> Context:
    """Iota-representation calculus: <xicheck,iota>=1, everything else with
    iota or between two xichecks contracts to zero."""
    return Context(iota_rules=True, **kw)
