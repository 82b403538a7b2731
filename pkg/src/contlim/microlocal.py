"""Numerical solver for the homogeneous chiral transformation constraints.

Per momentum the transformation reduces to 2x6 matrices L[k], R[k] subject
to linear conditions (vanishing sectorial projection and Hermiticity of
the mass-weighted sandwiches) and quadratic conditions
(L L* = c0, L m^2 Y^2 L* = target).  After eliminating columns 3 and 6 the
two Gram forms on the remaining four parameters per row are simultaneously
diagonalized; the diagonal case has closed-form solutions with explicit
feasibility inequalities, and the general case is solved by a damped
Newton iteration with continuation in the off-diagonal target component.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import eigh


class DegenerateParametrization(Exception):
    pass


@dataclass
class MicrolocalProblem:
    neutrino_masses: Tuple[float, float, float]
    charged_masses: Tuple[float, float, float]
    omega: float = 1.0
    v_left: Tuple[float, float] = (0.0, 0.0)   # contracted v.k per channel
    v_right: Tuple[float, float] = (0.0, 0.0)
    x_left: float = 0.0                        # off-diagonal (sigma^1) target
    x_right: float = 0.0
    c0: float = 1.0
    c2: float = 0.0

    def __post_init__(self):
        if any(m < 0 for m in self.neutrino_masses):
            raise ValueError("neutrino masses must be nonnegative")
        if any(m <= 0 for m in self.charged_masses):
            raise ValueError("charged masses must be positive")

    def masses6(self) -> np.ndarray:
        return np.array(list(self.neutrino_masses) +
                        list(self.charged_masses), float)

    def target(self, hand: str) -> Tuple[float, float, float]:
        """(t, x, z) of the Pauli decomposition of the mass-weighted
        quadratic condition for one chirality."""
        v = self.v_left if hand == "L" else self.v_right
        x = self.x_left if hand == "L" else self.x_right
        t = self.c2 + 0.25 * self.omega * (v[0] + v[1])
        z = 0.25 * self.omega * (v[0] - v[1])
        return t, x, z


@dataclass
class Feasibility:
    feasible: bool
    violated: Optional[str] = None
    min_c2: Optional[float] = None


@dataclass
class MicrolocalSolution:
    L: np.ndarray                      # 2x6 complex
    R: np.ndarray
    mu: np.ndarray                     # mu_1..mu_4
    basis: np.ndarray                  # 4x4, columns e_1..e_4 (reduced space)
    psi: Dict[str, np.ndarray]         # per hand: 2x4 coefficients
    residuals: Dict[str, float] = field(default_factory=dict)
    newton_iterations: int = 0


def mu_pair(masses) -> Tuple[float, float]:
    """The two Gram eigenvalues of one generation triple:
    (m1^2+m2^2+m3^2 -/+ sqrt(m1^4+m2^4+m3^4 - m1^2 m2^2 - m2^2 m3^2
    - m1^2 m3^2)) / 3."""
    a, b, c = (float(m) ** 2 for m in masses)
    s = a + b + c
    rad = a * a + b * b + c * c - a * b - b * c - a * c
    root = np.sqrt(max(rad, 0.0))
    return (s - root) / 3.0, (s + root) / 3.0


def compute_mu(neutrino_masses, charged_masses) -> Tuple[float, float, float, float]:
    """mu_1 <= mu_2 from the neutrino triple, mu_3 <= mu_4 from the charged
    triple."""
    if any(m < 0 for m in list(neutrino_masses) + list(charged_masses)):
        raise ValueError("masses must be nonnegative")
    m1, m2 = mu_pair(neutrino_masses)
    m3, m4 = mu_pair(charged_masses)
    return m1, m2, m3, m4


def _sector_grams(masses) -> Tuple[np.ndarray, np.ndarray]:
    m1, m2, m3 = (float(m) for m in masses)
    S0 = np.array([[2.0, 1.0], [1.0, 2.0]])
    S2 = np.array([[m1 ** 2 + m3 ** 2, m3 ** 2],
                   [m3 ** 2, m2 ** 2 + m3 ** 2]])
    return S0, S2


def build_gram(neutrino_masses, charged_masses):
    """The two Gram forms on the four free parameters per row (after the
    column elimination), the <.,.>_0-orthonormal eigenbasis of S0^-1 S2
    with real components and isospin-block structure, and the eigenvalues
    (equal to compute_mu)."""
    S0 = np.zeros((4, 4))
    S2 = np.zeros((4, 4))
    for k, masses in ((0, neutrino_masses), (1, charged_masses)):
        s0, s2 = _sector_grams(masses)
        S0[2 * k:2 * k + 2, 2 * k:2 * k + 2] = s0
        S2[2 * k:2 * k + 2, 2 * k:2 * k + 2] = s2
    if np.linalg.cond(S0) > 1e12:
        raise DegenerateParametrization("singular parameter metric")
    basis = np.zeros((4, 4))
    mu = np.zeros(4)
    for k, masses in ((0, neutrino_masses), (1, charged_masses)):
        s0, s2 = _sector_grams(masses)
        vals, vecs = eigh(s2, s0)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        for j in range(2):
            basis[2 * k:2 * k + 2, 2 * k + j] = vecs[:, j].real
        mu[2 * k:2 * k + 2] = vals
    return S0, S2, basis, mu


def _coords_to_rows(psi: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Reduced coordinates (2x4 over the eigenbasis) -> full 2x6 matrix via
    the column relations l_{a3} = -l_{a1}-l_{a2}, l_{a6} = -l_{a4}-l_{a5}."""
    red = psi @ basis.T  # 2x4 in (l1, l2, l4, l5)
    L = np.zeros((2, 6), complex)
    L[:, 0], L[:, 1] = red[:, 0], red[:, 1]
    L[:, 2] = -red[:, 0] - red[:, 1]
    L[:, 3], L[:, 4] = red[:, 2], red[:, 3]
    L[:, 5] = -red[:, 2] - red[:, 3]
    return L


def _sandwich(L: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """M^a_i = sum over the generations of sector i of L_{ac} weight_c."""
    M = np.zeros((2, 2), complex)
    M[:, 0] = L[:, :3] @ weights[:3]
    M[:, 1] = L[:, 3:] @ weights[3:]
    return M


def _offdiag_maps(masses6: np.ndarray, basis: np.ndarray):
    """Linear solve expressing the row-1 down-components (psi_1^3, psi_1^4)
    through the row-2 up-components, from the Hermiticity of the mass and
    mass-cubed sandwiches."""
    w1 = masses6.copy()
    w3 = masses6 ** 3
    # contracted weights in the reduced coordinates (l3 = -l1-l2 etc.)
    def reduced_w(w):
        return np.array([w[0] - w[2], w[1] - w[2], w[3] - w[5], w[4] - w[5]])
    r1, r3 = reduced_w(w1), reduced_w(w3)
    # basis columns: e1,e2 have only up-components (0:2), e3,e4 down (2:4)
    A = np.array([[r1[2:] @ basis[2:, 2], r1[2:] @ basis[2:, 3]],
                  [r3[2:] @ basis[2:, 2], r3[2:] @ basis[2:, 3]]])
    B = np.array([[r1[:2] @ basis[:2, 0], r1[:2] @ basis[:2, 1]],
                  [r3[:2] @ basis[:2, 0], r3[:2] @ basis[:2, 1]]])
    if abs(np.linalg.det(A)) < 1e-14 * max(1.0, np.abs(A).max() ** 2):
        raise DegenerateParametrization("mass sandwiches do not determine "
                                        "the off-diagonal components")
    return np.linalg.solve(A, B)  # (psi1^3, psi1^4) = map @ (psi2^1, psi2^2)


def solve_diagonal(mu, c0: float, t: float, z: float):
    """Closed-form squared coefficients for isospin-diagonal targets:
    (a_1^1)^2 = (-t-z+c0 mu2)/(mu2-mu1),  (a_1^2)^2 = (t+z-c0 mu1)/(mu2-mu1),
    (a_2^3)^2 = (-t+z+c0 mu4)/(mu4-mu3),  (a_2^4)^2 = (t-z-c0 mu3)/(mu4-mu3).
    Returns the squares, or a Feasibility report naming the violated
    inequality."""
    mu1, mu2, mu3, mu4 = (float(m) for m in mu)
    scale = max(abs(mu2), abs(mu4), 1.0)
    if abs(mu2 - mu1) <= 1e-9 * scale or abs(mu4 - mu3) <= 1e-9 * scale:
        raise DegenerateParametrization("degenerate Gram eigenvalue pair")
    sq = ((-t - z + c0 * mu2) / (mu2 - mu1),
          (t + z - c0 * mu1) / (mu2 - mu1),
          (-t + z + c0 * mu4) / (mu4 - mu3),
          (t - z - c0 * mu3) / (mu4 - mu3))
    tol = 1e-12 * max(1.0, abs(c0) * scale)
    if sq[0] < -tol or sq[1] < -tol:
        return Feasibility(False, f"c0 mu1 <= t+z <= c0 mu2 fails: "
                                  f"t+z={t + z}, range=[{c0 * mu1}, {c0 * mu2}]")
    if sq[2] < -tol or sq[3] < -tol:
        return Feasibility(False, f"c0 mu3 <= t-z <= c0 mu4 fails: "
                                  f"t-z={t - z}, range=[{c0 * mu3}, {c0 * mu4}]")
    return tuple(max(s, 0.0) for s in sq)


def _residual_vector(x6: np.ndarray, mu: np.ndarray, offmap: np.ndarray,
                     c0: float, t: float, xod: float, z: float) -> np.ndarray:
    a11, a12, a21, a22, a23, a24 = x6
    psi1 = np.array([a11, a12, *(offmap @ np.array([a21, a22]))])
    psi2 = np.array([a21, a22, a23, a24])
    return np.array([
        psi1 @ psi1 - c0,
        psi2 @ psi2 - c0,
        psi1 @ psi2,
        (mu * psi1) @ psi1 - (t + z),
        (mu * psi2) @ psi2 - (t - z),
        (mu * psi1) @ psi2 - xod,
    ])


class NewtonFailure(Exception):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


def _newton(x0, fun, tol=1e-12, max_iter=100):
    x = np.array(x0, float)
    for it in range(max_iter):
        f = fun(x)
        nrm = np.linalg.norm(f)
        if nrm < tol:
            return x, it
        J = np.zeros((len(f), len(x)))
        h = 1e-7
        for j in range(len(x)):
            xp = x.copy()
            xp[j] += h
            J[:, j] = (fun(xp) - f) / h
        try:
            step = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(J, f, rcond=None)
        lam = 1.0
        for _ in range(30):
            xn = x - lam * step
            if np.linalg.norm(fun(xn)) < nrm:
                x = xn
                break
            lam *= 0.5
        else:
            raise NewtonFailure("line search stalled", nrm)
    raise NewtonFailure("no convergence", np.linalg.norm(fun(x)))


def feasibility(problem: MicrolocalProblem, escalate_c2: bool = True) -> Feasibility:
    """Whether targets can be met, escalating the additive constant by
    doubling (up to 2^10 times its scale) before giving up."""
    mu = compute_mu(problem.neutrino_masses, problem.charged_masses)
    mu1, mu2, mu3, mu4 = mu
    scale = max(abs(v) for v in mu) or 1.0
    if mu1 > mu4 + 1e-15 * scale:
        return Feasibility(False, "mu_1 <= mu_4 violated")
    if mu3 > mu2 + 1e-15 * scale:
        return Feasibility(False, "mu_3 <= mu_2 violated")
    for hand in ("L", "R"):
        t, _, z = problem.target(hand)
        lo = max(problem.c0 * mu1 - z, problem.c0 * mu3 + z)
        hi = min(problem.c0 * mu2 - z, problem.c0 * mu4 + z)
        if lo > hi:
            return Feasibility(False, f"no admissible t for hand {hand}: "
                                      "2z outside [c0(mu1-mu4), c0(mu2-mu3)]")
        if not (lo <= t <= hi):
            if not escalate_c2:
                return Feasibility(False, f"t out of range for hand {hand}")
            # c2 shifts t additively; find the smallest needed shift and
            # escalate by doubling up to 2^10 times the natural scale
            need = lo - t if t < lo else hi - t
            base = max(abs(problem.c2), abs(problem.c0) * scale)
            if abs(need) > (2 ** 10) * base:
                return Feasibility(False,
                                   f"required c2 shift exceeds escalation "
                                   f"bound for hand {hand}")
            return Feasibility(True, None, problem.c2 + need)
    return Feasibility(True, None, problem.c2)


def solve_general(problem: MicrolocalProblem, continuation_steps: int = 10,
                  tol: float = 1e-12) -> MicrolocalSolution:
    """Damped Newton from the diagonal closed form, with continuation in
    the off-diagonal target component."""
    feas = feasibility(problem, escalate_c2=False)
    if not feas.feasible:
        raise InfeasibleProblem(feas)
    masses6 = problem.masses6()
    _, _, basis, mu = build_gram(problem.neutrino_masses,
                                 problem.charged_masses)
    offmap = _offdiag_maps(masses6, basis)
    out_psi: Dict[str, np.ndarray] = {}
    out_LR: Dict[str, np.ndarray] = {}
    iters = 0
    for hand in ("L", "R"):
        t, xod, z = problem.target(hand)
        sq = solve_diagonal(mu, problem.c0, t, z)
        if isinstance(sq, Feasibility):
            raise InfeasibleProblem(sq)
        x = np.array([np.sqrt(sq[0]), np.sqrt(sq[1]), 0.0, 0.0,
                      np.sqrt(sq[2]), np.sqrt(sq[3])])
        for step in range(1, continuation_steps + 1):
            xt = xod * step / continuation_steps
            x, it = _newton(x, lambda v: _residual_vector(
                v, mu, offmap, problem.c0, t, xt, z), tol=tol)
            iters += it
        psi1 = np.array([x[0], x[1], *(offmap @ x[2:4])])
        psi2 = x[2:]
        psi = np.vstack([psi1, psi2])
        out_psi[hand] = psi
        out_LR[hand] = _coords_to_rows(psi, basis)
    sol = MicrolocalSolution(out_LR["L"], out_LR["R"], mu, basis, out_psi,
                             newton_iterations=iters)
    sol.residuals = verify_constraints(sol, problem)
    return sol


class InfeasibleProblem(Exception):
    def __init__(self, report: Feasibility):
        super().__init__(report.violated or "infeasible")
        self.report = report


def verify_constraints(sol: MicrolocalSolution,
                       problem: MicrolocalProblem) -> Dict[str, float]:
    """Residual norms of every constraint family, assembled from the raw
    2x6 matrices and explicit diagonal mass matrices (independent of the
    solver path)."""
    masses6 = problem.masses6()
    out: Dict[str, float] = {}
    for hand, L in (("L", sol.L), ("R", sol.R)):
        t, xod, z = problem.target(hand)
        target = np.array([[t + z, xod], [xod, t - z]], complex)
        sect = np.abs(L[:, :3].sum(axis=1)).max() + \
            np.abs(L[:, 3:].sum(axis=1)).max()
        M1 = _sandwich(L, masses6)
        M3 = _sandwich(L, masses6 ** 3)
        gram0 = L @ L.conj().T
        gram2 = (L * masses6 ** 2) @ L.conj().T
        out[f"{hand}:sectorial"] = float(sect)
        out[f"{hand}:mass-sandwich"] = float(np.abs(M1 - M1.conj().T).max())
        out[f"{hand}:mass3-sandwich"] = float(np.abs(M3 - M3.conj().T).max())
        out[f"{hand}:gram0"] = float(
            np.abs(gram0 - problem.c0 * np.eye(2)).max())
        out[f"{hand}:gram2"] = float(np.abs(gram2 - target).max())
    return out


class SingularLog(Exception):
    pass


def log_expectation(sol: MicrolocalSolution, problem: MicrolocalProblem,
                    zero_tol: float = 0.0) -> Dict[str, np.ndarray]:
    """The 2x2 expectation values L (m^2 Y^2 log(m Y)) L* and the
    right-handed analog, by direct assembly."""
    masses6 = problem.masses6()
    out = {}
    for hand, L in (("L", sol.L), ("R", sol.R)):
        w = np.zeros(6)
        for i, m in enumerate(masses6):
            if m <= zero_tol:
                if np.abs(L[:, i]).max() > 1e-13:
                    raise SingularLog(f"zero mass in channel {i} with "
                                      "nonzero coupling weight")
                w[i] = 0.0
            else:
                w[i] = m ** 2 * np.log(m)
        out[hand] = (L * w) @ L.conj().T
    return out


def scan_feasibility(problem: MicrolocalProblem, m3_values) -> List[Dict]:
    """Sweep the largest neutrino mass over a grid; one report per value."""
    rows = []
    for m3 in m3_values:
        nm = (problem.neutrino_masses[0], problem.neutrino_masses[1],
              float(m3))
        p = MicrolocalProblem(nm, problem.charged_masses, problem.omega,
                              problem.v_left, problem.v_right,
                              problem.x_left, problem.x_right,
                              problem.c0, problem.c2)
        f = feasibility(p)
        rows.append({"m3": float(m3), "feasible": f.feasible,
                     "violated": f.violated or "",
                     "min_c2": "" if f.min_c2 is None else f.min_c2})
    return rows
