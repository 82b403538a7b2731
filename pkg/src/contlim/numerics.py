"""Explicit 4x4 gamma-matrix evaluation of symbolic expressions.

Used as the brute-force oracle in tests: a symbolic identity holds iff it
holds as 4x4 complex matrices under random numeric assignments of the
vectors and scalar symbols.  Dirac representation, signature (+,-,-,-).
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from .atoms import (Bracket, Chiral, Eps, Eta, Gamma, Gamma5, Inner,
                    RegFactor, Scalar, Slashed)
from .expr import Expr

ETA = np.diag([1.0, -1.0, -1.0, -1.0])

_G0 = np.diag([1, 1, -1, -1]).astype(complex)
_S = [np.array([[0, 1], [1, 0]], complex),
      np.array([[0, -1j], [1j, 0]], complex),
      np.array([[1, 0], [0, -1]], complex)]
_Z2 = np.zeros((2, 2), complex)
GAMMA = [_G0] + [np.block([[_Z2, s], [-s, _Z2]]) for s in _S]
GAMMA5 = np.block([[_Z2, np.eye(2)], [np.eye(2), _Z2]])
CHI = {"L": (np.eye(4) - GAMMA5) / 2, "R": (np.eye(4) + GAMMA5) / 2}
ID4 = np.eye(4, dtype=complex)


def slash(v) -> np.ndarray:
    v = np.asarray(v, complex)
    return sum(ETA[j, j] * v[j] * GAMMA[j] for j in range(4))


def minkowski(u, v) -> complex:
    u, v = np.asarray(u, complex), np.asarray(v, complex)
    return complex(sum(ETA[j, j] * u[j] * v[j] for j in range(4)))


def eps_contract(a, b, c, d) -> complex:
    # convention fixed by Tr(gamma5 a/ b/ c/ d/) = -4i eps(a,b,c,d)
    m = np.stack([np.asarray(x, complex) for x in (a, b, c, d)])
    return complex(-np.linalg.det(m))


def spin_adjoint(m: np.ndarray) -> np.ndarray:
    return _G0 @ m.conj().T @ _G0


class Assignment:
    """Numeric values for the symbols of an expression.

    vectors: name -> length-4 complex array (xi and xicheck share 'xi'
    unless separately assigned); scalars: name -> complex;
    regfactors: (kind, n, bracket, p, ctag) -> complex.
    """

    def __init__(self, vectors: Optional[Dict] = None,
                 scalars: Optional[Dict] = None,
                 regfactors: Optional[Dict] = None,
                 index_map: Optional[Dict[str, int]] = None):
        self.vectors = dict(vectors or {})
        self.scalars = dict(scalars or {})
        self.regfactors = dict(regfactors or {})
        self.index_map = dict(index_map or {})

    def vector(self, name: str, conj: bool) -> np.ndarray:
        if name.startswith("e[") and name.endswith("]"):
            # contravariant basis vector: <e[i], v> = v^i
            idx = self.index_map[name[2:-1]]
            v = np.zeros(4, complex)
            v[idx] = ETA[idx, idx]
            return v
        if name not in self.vectors:
            if name == "xicheck" and "xi" in self.vectors:
                v = np.asarray(self.vectors["xi"], complex)
            elif name == "xi" and "xicheck" in self.vectors:
                v = np.asarray(self.vectors["xicheck"], complex)
            else:
                raise KeyError(f"no vector assignment for {name!r}")
        else:
            v = np.asarray(self.vectors[name], complex)
        return v.conj() if conj else v

    def scalar(self, a) -> complex:
        if isinstance(a, Scalar):
            v = complex(self.scalars[a.name])
            return v.conjugate() if a.conj else v
        if isinstance(a, RegFactor):
            key = (a.kind, a.n, a.bracket, a.p, a.ctag)
            if key not in self.regfactors:
                raise KeyError(f"no value for regularization factor {a}")
            v = complex(self.regfactors[key])
            return v.conjugate() if a.conj else v
        if isinstance(a, Inner):
            return minkowski(self.vector(*a.a), self.vector(*a.b))
        if isinstance(a, Eta):
            i, j = self.index_map[a.i], self.index_map[a.j]
            return complex(ETA[i, j])
        if isinstance(a, Eps):
            return eps_contract(*(self.vector(n, c) for n, c in a.slots))
        if isinstance(a, Bracket):
            return float(a.value_at_origin())
        raise TypeError(f"cannot evaluate atom {a!r}")


def eval_expr(e: Expr, asg: Assignment) -> np.ndarray:
    """Evaluate to a 4x4 complex matrix (scalar results times identity)."""
    total = np.zeros((4, 4), complex)
    for t, c in e.items():
        if t.mats:
            raise ValueError("numeric oracle does not evaluate matrix words")
        m = ID4.copy()
        for a in t.dirac:
            if isinstance(a, Chiral):
                m = m @ CHI[a.hand]
            elif isinstance(a, Gamma5):
                m = m @ GAMMA5
            elif isinstance(a, Gamma):
                m = m @ GAMMA[self_index(asg, a.index)]
            else:
                m = m @ slash(asg.vector(a.name, a.conj))
        z = complex(c)
        for a in t.scal:
            z *= asg.scalar(a)
        for a in t.den:
            z /= asg.scalar(a)
        total += z * m
    return total


def self_index(asg: Assignment, index: str) -> int:
    return asg.index_map[index]


def eval_scalar(e: Expr, asg: Assignment) -> complex:
    m = eval_expr(e, asg)
    if not np.allclose(m, m[0, 0] * ID4, atol=1e-10 * max(1.0, abs(m[0, 0]))):
        raise ValueError("expression did not evaluate to a scalar")
    return complex(m[0, 0])
