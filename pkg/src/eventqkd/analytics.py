"""Closed-form predictions and the count-level inequality checks.

Quantum predictions for the singlet and product states, the analytic limits of
the event-by-event model (no time-tag selection at d = 0, and the W -> 0 window
for PP with d = 4 and DP with d = 2), and the fidelity laws used by the BB84
runs.  Everything here is pure.

Wigner-parameter settings follow the sweep convention
``phi_A1 = phi_B1 = 0``, ``phi_A2 = -theta``, ``phi_B2 = +theta``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .polarizer import PolarizerModel

PI = np.pi


def qm_singlet_ppp(alpha, beta):
    return 0.5 * np.sin(np.asarray(alpha) - np.asarray(beta)) ** 2


def qm_wigner_singlet(theta):
    theta = np.asarray(theta)
    return np.sin(theta) ** 2 - 0.5 * np.sin(2.0 * theta) ** 2


def qm_product_probabilities(psi_a, psi_b, phi_a, phi_b):
    pa = np.cos(np.asarray(psi_a) - phi_a) ** 2
    pb = np.cos(np.asarray(psi_b) - phi_b) ** 2
    return pa, pb, pa * pb


def qm_wigner_product(psi_a, psi_b, theta):
    """(S, S') for the product state with photons at ``psi_a`` and ``psi_b``."""
    c2 = lambda x: np.cos(x) ** 2  # noqa: E731
    s = (c2(psi_a) * c2(psi_b - theta)
         + c2(psi_a + theta) * c2(psi_b)
         - c2(psi_a + theta) * c2(psi_b - theta))
    extra = np.sin(psi_a) ** 2 * np.sin(psi_b) ** 2
    return s, s + extra


def classical_pp_d0(alpha, beta):
    """PP model without time-tag selection.

    Returns the joint table ``P[x1, x2]`` indexed ``{(+1, +1): ..., ...}`` and
    ``P_++``.
    """
    c = np.cos(2.0 * (alpha - beta))
    table = {(x1, x2): (2.0 - x1 * x2 * c) / 8.0 for x1 in (1, -1) for x2 in (1, -1)}
    return table, table[(1, 1)]


def classical_pp_d0_wigner(theta):
    """S(theta) of the PP model without selection: the three P_++ terms of
    ``classical_pp_d0`` combined, (2 - 2 cos 2theta + cos 4theta) / 8 >= 1/16."""
    theta = np.asarray(theta)
    return (2.0 - 2.0 * np.cos(2.0 * theta) + np.cos(4.0 * theta)) / 8.0


def classical_pp_d0_wigner_as_stated(theta):
    """(2 - cos 2theta + cos 4theta) / 8, the commonly quoted form.

    It drops a factor 2 on the cos 2theta term and so disagrees with
    ``classical_pp_d0_wigner`` (and with the simulation) except where
    cos 2theta = 0.  Kept for comparison only.
    """
    theta = np.asarray(theta)
    return (2.0 - np.cos(2.0 * theta) + np.cos(4.0 * theta)) / 8.0


def classical_dp_d0_ppp(alpha, beta):
    delta = np.mod(np.abs(np.asarray(alpha) - np.asarray(beta)), PI)
    return 0.5 - np.abs(delta / PI - 0.5)


def classical_dp_d0_wigner(theta):
    theta = np.asarray(theta)
    p = classical_dp_d0_ppp
    return p(0.0, theta) + p(-theta, 0.0) - p(-theta, theta)


def quantum_limit_ppp(alpha, beta):
    """W -> 0 limit of P_++ for PP with d = 4 and DP with d = 2."""
    return 0.5 * np.sin(np.asarray(alpha) - np.asarray(beta)) ** 2


def bb84_fidelity_theory(tilt):
    return np.cos(np.asarray(tilt)) ** 2


def eve_fidelity_theory(psi_a):
    return 1.0 - 0.5 * np.sin(2.0 * np.asarray(psi_a)) ** 2


def window_limit_probability(model, d: float, alpha: float, beta: float,
                             x1: int = 1, x2: int = 1) -> float:
    """P(x1, x2 | alpha, beta) in the W -> 0 limit, by numerical quadrature.

    The source emits polarizations ``xi`` and ``xi + pi/2``; each pair is
    weighted by ``max(|sin 2(xi - alpha)|, |sin 2(xi - beta)|)**-d``.  The
    integrand has period pi in ``xi``.  Settings differing by a multiple of
    pi/2 make the weight non-integrable and are rejected.
    """
    model = PolarizerModel.parse(model)
    delta = np.mod(alpha - beta, PI / 2)
    if min(delta, PI / 2 - delta) < 1e-9 and d >= 1:
        raise ValueError("weight is not integrable when alpha - beta is a multiple of pi/2")

    def weight(xi):
        m = max(abs(np.sin(2 * (xi - alpha))), abs(np.sin(2 * (xi - beta))))
        return m ** (-d)

    if model is PolarizerModel.PP:
        def joint(xi):
            return 0.25 * (1 + x1 * np.cos(2 * (alpha - xi))) * (1 - x2 * np.cos(2 * (beta - xi)))
    else:
        def joint(xi):
            a = x1 * np.cos(2 * (alpha - xi)) > 0
            b = -x2 * np.cos(2 * (beta - xi)) > 0
            return float(a and b)

    # kinks and jumps: zeros of sin 2(.) and cos 2(.) at both settings, and the
    # crossings of the two |sin| curves
    pts = []
    for c in (alpha, beta):
        pts += [c + j * PI / 4 for j in range(-8, 9)]
    pts += [(alpha + beta) / 2 + j * PI / 4 for j in range(-8, 9)]
    pts = sorted({float(np.mod(p, PI)) for p in pts} | {0.0, PI})
    num = den = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo < 1e-14:
            continue
        num += integrate.quad(lambda x: joint(x) * weight(x), lo, hi, limit=200,
                              epsabs=1e-13, epsrel=1e-12)[0]
        den += integrate.quad(weight, lo, hi, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
    return num / den


@dataclass(frozen=True)
class QuadrupleDataset:
    """Counterfactual +-1 outcomes of every event under all four settings."""

    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(x, dtype=np.int64).reshape(-1) for x in (self.a1, self.a2, self.b1, self.b2)]
        if len({a.size for a in arrs}) != 1:
            raise ValueError("all four outcome arrays must have the same length")
        for a in arrs:
            if not np.all(np.abs(a) == 1):
                raise ValueError("outcomes must be +1 or -1")
        for name, a in zip(("a1", "a2", "b1", "b2"), arrs):
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return int(self.a1.size)

    @classmethod
    def from_rows(cls, rows) -> QuadrupleDataset:
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, 4)
        return cls(rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3])


def count_pp(a, b) -> int:
    """N_++ as the sum over events of (1 + a)(1 + b)/4, in exact integers."""
    return int(np.sum((1 + a) * (1 + b)) // 4)


def count_mm(a, b) -> int:
    return int(np.sum((1 - a) * (1 - b)) // 4)


def check_wigner_counts(q: QuadrupleDataset) -> tuple[int, bool]:
    if not np.array_equal(q.a1, -q.b1):
        raise ValueError("Wigner count check requires a1 == -b1 for every event")
    lhs = count_pp(q.a1, q.b2) + count_pp(q.a2, q.b1) - count_pp(q.a2, q.b2)
    return lhs, lhs >= 0


def check_modified_wigner_counts(q: QuadrupleDataset) -> tuple[int, bool]:
    lhs = (count_pp(q.a1, q.b2) + count_pp(q.a2, q.b1)
           + count_mm(q.a1, q.b1) - count_pp(q.a2, q.b2))
    return lhs, lhs >= 0


def modified_wigner_event_term(a1, a2, b1, b2):
    """2 + b2 (a1 - a2) + b1 (a1 + a2); four times one event's share of the
    modified Wigner count combination."""
    return 2 + b2 * (a1 - a2) + b1 * (a1 + a2)


def product_fidelity(psi_a, psi_b):
    """Key agreement for a product-state pair measured at (0, 0), Bob inverted."""
    ca, cb = np.cos(psi_a) ** 2, np.cos(psi_b) ** 2
    return ca * (1 - cb) + (1 - ca) * cb


def bb84_fidelity_dp_sign_rule(tilt: float) -> float:
    """Sifted-key fidelity of DP-BB84 at a given tilt, by enumerating the four
    basis-matched cases of the encoding table."""
    correct = 0
    for idx in range(4):
        phi_a = idx * PI / 4
        phi_b = (idx % 2) * PI / 4 + tilt
        channel = 0 if np.cos(2 * (phi_a - phi_b)) >= -1e-12 else 1
        correct += channel == idx // 2
    return correct / 4


def _regime(model, d):
    model = PolarizerModel.parse(model)
    if d == 0:
        return f"{model.value}-d0"
    if (model, d) in ((PolarizerModel.PP, 4), (PolarizerModel.DP, 2)):
        return "quantum"
    return "quadrature"


def ppp_theory(model, d: float, alpha: float, beta: float) -> tuple[float, str]:
    """Predicted P_++ of the windowed model (W -> 0 limit for d > 0) and the
    name of the expression used."""
    regime = _regime(model, d)
    if regime == "pp-d0":
        return float(classical_pp_d0(alpha, beta)[1]), "(2-cos2(a-b))/8"
    if regime == "dp-d0":
        return float(classical_dp_d0_ppp(alpha, beta)), "1/2-||a-b|/pi-1/2|"
    if regime == "quantum":
        return float(quantum_limit_ppp(alpha, beta)), "sin^2(a-b)/2"
    delta = np.mod(alpha - beta, PI / 2)
    if min(delta, PI / 2 - delta) < 1e-9:
        # aligned or crossed settings: perfect (anti)correlation in the limit
        ppp = 0.0 if np.cos(2 * (alpha - beta)) > 0 else 0.5
        return ppp, "quadrature-limit"
    return window_limit_probability(model, d, alpha, beta), "quadrature-limit"


def wigner_theory(model, d: float, theta: float) -> tuple[float, str]:
    p = lambda a, b: ppp_theory(model, d, a, b)  # noqa: E731
    (s1, label), (s2, _), (s3, _) = p(0.0, theta), p(-theta, 0.0), p(-theta, theta)
    return s1 + s2 - s3, label
