from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventqkd import analytics as an

deg = math.radians
angle = st.floats(-math.pi, math.pi, allow_nan=False)
SIGNS = (1, -1)


def grid_average(f, n=200_000):
    """Midpoint average of f(xi) over one period [0, pi)."""
    xi = (np.arange(n) + 0.5) * math.pi / n
    return float(np.mean(f(xi)))


def pp_d0_oracle(alpha, beta, x1=1, x2=1):
    # source photons at xi and xi + 90 deg, independent Malus draws
    def f(xi):
        p1 = np.cos(xi - alpha) ** 2 if x1 == 1 else np.sin(xi - alpha) ** 2
        p2 = np.cos(xi + math.pi / 2 - beta) ** 2 if x2 == 1 else np.sin(xi + math.pi / 2 - beta) ** 2
        return p1 * p2
    return grid_average(f)


def dp_d0_oracle(alpha, beta):
    def f(xi):
        return (np.cos(2 * (xi - alpha)) > 0) & (np.cos(2 * (xi + math.pi / 2 - beta)) > 0)
    return grid_average(f)


class TestQuantum:
    @pytest.mark.parametrize("a, b, p", [(0, 0, 0.0), (0, 90, 0.5), (0, 30, 0.125)])
    def test_singlet_ppp(self, a, b, p):
        assert an.qm_singlet_ppp(deg(a), deg(b)) == pytest.approx(p, abs=1e-15)

    @pytest.mark.parametrize("theta, s", [(30, -0.125), (0, 0.0), (90, 1.0)])
    def test_wigner(self, theta, s):
        assert an.qm_wigner_singlet(deg(theta)) == pytest.approx(s, abs=1e-15)

    def test_wigner_from_ppp(self):
        for th in np.linspace(0, math.pi / 2, 19):
            p = an.qm_singlet_ppp
            assert an.qm_wigner_singlet(th) == pytest.approx(p(0, th) + p(-th, 0) - p(-th, th), abs=1e-14)

    def test_product_probabilities(self):
        assert an.qm_product_probabilities(0.3, 1.2, 0.3, 1.2) == pytest.approx((1, 1, 1))
        pa, _, _ = an.qm_product_probabilities(deg(45), 0, 0, 0)
        assert pa == pytest.approx(0.5)
        assert an.qm_product_probabilities(deg(45), deg(135), 0, 0)[2] == pytest.approx(0.25)

    def test_product_wigner(self):
        s, sp = an.qm_wigner_product(deg(45), deg(135), deg(30))
        assert sp - s == pytest.approx(0.25)
        assert s == pytest.approx(0.0625) and sp == pytest.approx(0.3125)

    @given(angle, angle)
    def test_product_wigner_psi_a_zero(self, psi_b, theta):
        s, sp = an.qm_wigner_product(0.0, psi_b, theta)
        assert s == pytest.approx(sp, abs=1e-15)

    @given(angle, angle)
    def test_quantum_limit_is_singlet(self, a, b):
        assert an.quantum_limit_ppp(a, b) == an.qm_singlet_ppp(a, b)


class TestClassical:
    @pytest.mark.parametrize("a, b", [(0, 0), (0, 30), (10, 75), (0, 90), (-40, 100)])
    def test_pp_d0_table_vs_oracle(self, a, b):
        table, ppp = an.classical_pp_d0(deg(a), deg(b))
        for (x1, x2), v in table.items():
            assert v == pytest.approx(pp_d0_oracle(deg(a), deg(b), x1, x2), abs=1e-9)
        assert sum(table.values()) == pytest.approx(1.0)

    def test_pp_d0_values(self):
        assert an.classical_pp_d0(0, 0)[1] == pytest.approx(1 / 8)
        assert an.classical_pp_d0(0, deg(90))[1] == pytest.approx(3 / 8)
        assert an.classical_pp_d0_wigner(deg(30)) == pytest.approx(1 / 16)
        assert an.classical_pp_d0_wigner_as_stated(deg(30)) == pytest.approx(1 / 8)

    @given(st.floats(-math.pi, math.pi))
    def test_pp_d0_wigner_is_ppp_combination(self, theta):
        p = lambda a, b: an.classical_pp_d0(a, b)[1]  # noqa: E731
        combo = p(0.0, theta) + p(-theta, 0.0) - p(-theta, theta)
        assert an.classical_pp_d0_wigner(theta) == pytest.approx(combo, abs=1e-14)

    def test_as_stated_form_differs(self):
        # equal only where cos 2theta = 0
        assert an.classical_pp_d0_wigner_as_stated(deg(45)) == pytest.approx(an.classical_pp_d0_wigner(deg(45)))
        assert an.classical_pp_d0_wigner_as_stated(0.0) - an.classical_pp_d0_wigner(0.0) == pytest.approx(1 / 8)

    @given(st.floats(-2 * math.pi, 2 * math.pi))
    def test_pp_d0_never_violates(self, theta):
        assert an.classical_pp_d0_wigner(theta) >= -1e-15

    @pytest.mark.parametrize("a, b", [(0, 0), (0, 90), (0, 45), (0, 30), (20, 140), (0, 180), (0, 165)])
    def test_dp_d0_vs_oracle(self, a, b):
        assert an.classical_dp_d0_ppp(deg(a), deg(b)) == pytest.approx(dp_d0_oracle(deg(a), deg(b)), abs=1e-5)

    def test_dp_d0_values(self):
        assert an.classical_dp_d0_ppp(0, 0) == pytest.approx(0)
        assert an.classical_dp_d0_ppp(0, deg(90)) == pytest.approx(0.5)
        assert an.classical_dp_d0_ppp(0, deg(45)) == pytest.approx(0.25)


class TestWindowLimit:
    @pytest.mark.parametrize("theta", [10, 30, 50, 70, 120])
    def test_dp_d2_quantum(self, theta):
        got = an.window_limit_probability("dp", 2, 0.0, deg(theta))
        assert got == pytest.approx(0.5 * math.sin(deg(theta)) ** 2, abs=1e-6)

    @pytest.mark.parametrize("theta", [15, 30, 50, 80])
    def test_pp_d4_quantum(self, theta):
        got = an.window_limit_probability("pp", 4, 0.0, deg(theta))
        assert got == pytest.approx(0.5 * math.sin(deg(theta)) ** 2, abs=1e-6)

    def test_d0_reduces_to_classical(self):
        a, b = 0.2, 1.1
        assert an.window_limit_probability("pp", 0, a, b) == pytest.approx(an.classical_pp_d0(a, b)[1], abs=1e-9)
        assert an.window_limit_probability("dp", 0, a, b) == pytest.approx(an.classical_dp_d0_ppp(a, b), abs=1e-9)

    def test_outcomes_normalised(self):
        tot = sum(an.window_limit_probability("pp", 4, 0.1, 0.9, x1, x2) for x1 in SIGNS for x2 in SIGNS)
        assert tot == pytest.approx(1.0, abs=1e-9)

    def test_dp_d4_stronger_than_quantum(self):
        s, _ = an.wigner_theory("dp", 4, deg(30))
        assert s < an.qm_wigner_singlet(deg(30))

    def test_rejects_aligned(self):
        with pytest.raises(ValueError):
            an.window_limit_probability("dp", 2, 0.0, deg(90))


class TestTheorySelection:
    def test_labels(self):
        assert an.ppp_theory("pp", 0, 0, 1)[1] == "(2-cos2(a-b))/8"
        assert an.ppp_theory("dp", 0, 0, 1)[1] == "1/2-||a-b|/pi-1/2|"
        assert an.ppp_theory("dp", 2, 0, 1)[1] == "sin^2(a-b)/2"
        assert an.ppp_theory("pp", 4, 0, 1)[1] == "sin^2(a-b)/2"
        assert an.ppp_theory("dp", 4, 0, 1)[1] == "quadrature-limit"

    def test_singular_settings(self):
        assert an.ppp_theory("dp", 4, 0.0, 0.0)[0] == 0.0
        assert an.ppp_theory("dp", 4, 0.0, deg(90))[0] == 0.5

    @pytest.mark.parametrize("model, d, expected", [
        ("dp", 2, -0.125), ("pp", 4, -0.125), ("pp", 0, 0.0625), ("dp", 0, 0.0),
    ])
    def test_wigner_at_30(self, model, d, expected):
        assert an.wigner_theory(model, d, deg(30))[0] == pytest.approx(expected, abs=1e-9)


class TestFidelity:
    @pytest.mark.parametrize("tilt, f", [(0, 1), (45, 0.5), (30, 0.75)])
    def test_bb84_pp(self, tilt, f):
        assert an.bb84_fidelity_theory(deg(tilt)) == pytest.approx(f)

    @pytest.mark.parametrize("psi, f", [(0, 1), (45, 0.5), (22.5, 0.75)])
    def test_eve(self, psi, f):
        assert an.eve_fidelity_theory(deg(psi)) == pytest.approx(f)

    @given(angle)
    def test_product_fidelity_perpendicular(self, psi):
        assert an.product_fidelity(psi, psi + math.pi / 2) == pytest.approx(an.eve_fidelity_theory(psi), abs=1e-12)

    def test_dp_sign_rule(self):
        got = [an.bb84_fidelity_dp_sign_rule(deg(t)) for t in (0, 20, 40, 44.9, 45, 50, 80)]
        assert got == [1, 1, 1, 1, 0.5, 0, 0]


# -- inequality count checks -------------------------------------------------

ALL_N1 = list(itertools.product(SIGNS, repeat=4))
ANTICORRELATED_N1 = [q for q in ALL_N1 if q[0] == -q[2]]


def random_dataset(rng, anticorrelated):
    n = int(rng.integers(0, 65))
    a1, a2, b1, b2 = (rng.choice(SIGNS, size=n) for _ in range(4))
    if anticorrelated:
        b1 = -a1
    return an.QuadrupleDataset(a1, a2, b1, b2)


class TestCounts:
    def test_count_pp_mm(self):
        a = np.array([1, 1, -1, -1])
        b = np.array([1, -1, 1, -1])
        assert an.count_pp(a, b) == 1 and an.count_mm(a, b) == 1

    def test_hand_wigner(self):
        lhs, ok = an.check_wigner_counts(an.QuadrupleDataset.from_rows([(1, 1, -1, 1)]))
        assert (lhs, ok) == (0, True)

    def test_all_minus_except_anticorrelated_b1(self):
        lhs, ok = an.check_wigner_counts(an.QuadrupleDataset.from_rows([(-1, -1, 1, -1)] * 5))
        assert (lhs, ok) == (0, True)

    def test_wigner_rejects_non_anticorrelated(self):
        with pytest.raises(ValueError):
            an.check_wigner_counts(an.QuadrupleDataset.from_rows([(-1, -1, -1, -1)]))

    def test_hand_modified(self):
        assert an.check_modified_wigner_counts(an.QuadrupleDataset.from_rows([(1, 1, 1, 1)])) == (1, True)

    def test_empty(self):
        q = an.QuadrupleDataset([], [], [], [])
        assert q.n == 0
        assert an.check_modified_wigner_counts(q) == (0, True)

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            an.QuadrupleDataset([1, 0], [1, 1], [1, 1], [1, 1])
        with pytest.raises(ValueError):
            an.QuadrupleDataset([1], [1, 1], [1, 1], [1, 1])

    @pytest.mark.parametrize("q", ANTICORRELATED_N1)
    def test_wigner_exhaustive(self, q):
        lhs, ok = an.check_wigner_counts(an.QuadrupleDataset.from_rows([q]))
        assert ok and lhs >= 0 and isinstance(lhs, int)

    @pytest.mark.parametrize("q", ALL_N1)
    def test_modified_exhaustive(self, q):
        lhs, ok = an.check_modified_wigner_counts(an.QuadrupleDataset.from_rows([q]))
        assert ok and lhs >= 0

    @pytest.mark.parametrize("q", ALL_N1)
    def test_event_term(self, q):
        term = an.modified_wigner_event_term(*q)
        assert term >= 0
        # four times the per-event count combination
        lhs, _ = an.check_modified_wigner_counts(an.QuadrupleDataset.from_rows([q]))
        assert term == 4 * lhs

    def test_random_datasets(self):
        rng = np.random.default_rng(2024)
        for _ in range(2000):
            assert an.check_modified_wigner_counts(random_dataset(rng, False))[1]
            assert an.check_wigner_counts(random_dataset(rng, True))[1]

    @given(st.lists(st.tuples(*[st.sampled_from(SIGNS)] * 4), max_size=64))
    @settings(max_examples=300)
    def test_additivity(self, rows):
        # the count combination is a sum of per-event terms
        q = an.QuadrupleDataset.from_rows(rows) if rows else an.QuadrupleDataset([], [], [], [])
        lhs, _ = an.check_modified_wigner_counts(q)
        assert 4 * lhs == sum(an.modified_wigner_event_term(*r) for r in rows)
