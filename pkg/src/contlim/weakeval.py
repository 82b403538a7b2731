"""Numeric weak-evaluation functionals for fraction expressions.

A regularization model assigns to every factor class (bracket, mass index,
chiral tag) a random trigonometric polynomial on the circle,
    T^(0) -> f(s) = sum_j a_j exp(i k_j s),
and to T^(n) the function with nabla T^(n) = T^(n-1) under nabla = d/ds,
i.e. T^(n) = sum_j a_j (i k_j)^(-n) exp(i k_j s).  Conjugate factors take
the pointwise complex conjugate.  The functional

    W(F) = (1/2 pi) integral_0^{2 pi} F(s) ds

then annihilates every total derivative, so any two expressions equal
modulo the integration-by-parts relations have equal W for every draw.
This provides an independent numeric equality oracle for weakly evaluated
fraction identities (sound for rejecting, statistically powerful for
accepting over several draws).
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from .atoms import Bracket, Inner, RegFactor, Scalar
from .expr import Expr

N_SAMPLES = 256


class RegModel:
    """One random draw of regularization functions on the circle."""

    def __init__(self, rng: Optional[np.random.Generator] = None,
                 n_modes: int = 3, scalars: Optional[Dict[str, complex]] = None,
                 denominators: Optional[Dict[str, Expr]] = None):
        self.rng = rng or np.random.default_rng()
        self.n_modes = n_modes
        self._classes: Dict = {}
        self.s = np.linspace(0.0, 2 * np.pi, N_SAMPLES, endpoint=False)
        self.scalars = {"pi": np.pi, "m": 0.7, "tau_reg": 0.3, "delta": 0.5}
        if scalars:
            self.scalars.update(scalars)
        self.denominators = dict(denominators or {})

    def _class_modes(self, f: RegFactor):
        key = (f.bracket, f.p, f.ctag)
        if key not in self._classes:
            mags = self.rng.choice(np.arange(1, 8), size=self.n_modes + 1,
                                   replace=False).astype(int)
            ks = mags * self.rng.choice([-1, 1], size=self.n_modes + 1)
            amps = (self.rng.normal(size=len(ks)) +
                    1j * self.rng.normal(size=len(ks))) * 0.15
            # one dominant mode keeps denominator functions away from zero
            amps[0] = 1.0 + 0.15 * (self.rng.normal() + 1j * self.rng.normal())
            self._classes[key] = (ks, amps)
        return self._classes[key]

    def factor_values(self, f: RegFactor) -> np.ndarray:
        if f.kind == "L":
            t = RegFactor("T", f.n, f.bracket, f.p, None, False)
            tr = RegFactor("T", f.n, f.bracket, f.p, "R", False)
            vals = self.factor_values(t) + \
                (self.scalars["tau_reg"] / 3.0) * self.factor_values(tr)
            return np.conj(vals) if f.conj else vals
        if f.kind == "z":
            raise ValueError("z factors must be contracted before evaluation")
        ks, amps = self._class_modes(f)
        vals = np.zeros_like(self.s, dtype=complex)
        for k, a in zip(ks, amps):
            lam = 1j * int(k)
            vals += a * lam ** (-f.n) * np.exp(lam * self.s)
        return np.conj(vals) if f.conj else vals

    def scalar_values(self, a: Scalar) -> np.ndarray:
        if a.name in self.scalars:
            v = complex(self.scalars[a.name])
            return np.full_like(self.s, np.conj(v) if a.conj else v,
                                dtype=complex)
        base = a.name[5:-1] if a.name.startswith("conj(") else a.name
        if base in self.denominators:
            vals = self.term_values(self.denominators[base])
            return np.conj(vals) if a.name.startswith("conj(") or a.conj \
                else vals
        raise KeyError(f"no value for scalar {a.name!r}")

    def term_values(self, e: Expr) -> np.ndarray:
        total = np.zeros_like(self.s, dtype=complex)
        for t, c in e.items():
            if t.dirac or t.mats:
                raise ValueError("weak evaluation applies to scalar content")
            vals = np.full_like(self.s, complex(c), dtype=complex)
            for a in t.scal:
                vals = vals * self._atom_values(a)
            for a in t.den:
                vals = vals / self._atom_values(a)
            total += vals
        return total

    def _atom_values(self, a) -> np.ndarray:
        if isinstance(a, RegFactor):
            return self.factor_values(a)
        if isinstance(a, Scalar):
            return self.scalar_values(a)
        if isinstance(a, Bracket):
            return np.full_like(self.s, float(a.value_at_origin()),
                                dtype=complex)
        if isinstance(a, Inner):
            key = ("inner", a.a, a.b)
            if key not in self._classes:
                self._classes[key] = complex(self.rng.normal(),
                                             self.rng.normal())
            return np.full_like(self.s, self._classes[key], dtype=complex)
        raise ValueError(f"cannot weakly evaluate atom {a!r}")

    def weak_value(self, e: Expr) -> complex:
        return complex(np.mean(self.term_values(e)))


def weak_equal(a: Expr, b: Expr, draws: int = 5, tol: float = 1e-9,
               seed: int = 0, denominators: Optional[Dict[str, Expr]] = None,
               scalars: Optional[Dict[str, complex]] = None) -> bool:
    """Numeric weak-evaluation equality over several random regularization
    draws (equality modulo the integration-by-parts relations)."""
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        model = RegModel(rng, denominators=denominators, scalars=scalars)
        wa, wb = model.weak_value(a), model.weak_value(b)
        scale = max(1.0, abs(wa), abs(wb))
        if abs(wa - wb) > tol * scale:
            return False
    return True
