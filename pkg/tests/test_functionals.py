import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from entropy_lab.functionals import (
    bc_entropy_power,
    dilate,
    e_p_moment,
    entropy_power,
    entropy_power_from_sm,
    fisher_information,
    fisher_information_forms,
    moment,
    q_exp,
    q_functional,
    q_log,
    renyi_entropy,
    renyi_entropy_power,
    s_pq_scalar,
    second_order_functional,
    shannon_entropy,
    shannon_entropy_power,
    sharma_mittal_direct,
    sharma_mittal_entropy,
    snapshot,
    tsallis_entropy,
)
from entropy_lab.grid import DomainError, GridDensity, LimitBranchError, Orders
from entropy_lab.profiles import gaussian, line_nodes, uniform

from conftest import random_density

SQRT_PI = math.sqrt(math.pi)


def phi(x, s2=1.0):
    return np.exp(-(x**2) / (2 * s2)) / math.sqrt(2 * math.pi * s2)


def quad(f, lo=-12.0, hi=12.0):
    return integrate.quad(f, lo, hi, limit=400, epsabs=1e-14, epsrel=1e-13)[0]


class TestDeformedLogExp:
    @pytest.mark.parametrize("q", [0.3, 1.0, 2.0, 3.5])
    def test_log_of_one(self, q):
        assert q_log(1.0, q) == 0.0

    def test_log_value(self):
        assert q_log(4.0, 0.5) == pytest.approx(2.0, rel=1e-15)

    def test_log_limit_branch(self):
        assert q_log(math.e, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_log_continuous_at_one(self):
        assert q_log(3.0, 1 + 1e-7) == pytest.approx(math.log(3.0), rel=1e-6)

    @pytest.mark.parametrize("s", [0.0, -2.0])
    def test_log_domain(self, s):
        with pytest.raises(DomainError):
            q_log(s, 2.0)

    @pytest.mark.parametrize("q", [0.3, 1.0, 2.0])
    def test_exp_of_zero(self, q):
        assert q_exp(0.0, q) == 1.0

    def test_exp_truncated(self):
        assert q_exp(-3.0, 0.5) == 0.0

    @given(s=st.floats(1e-3, 1e3), q=st.floats(0.05, 4.0))
    def test_inverse(self, s, q):
        # stay away from the truncation edge 1 + (1-q) q_log(s) = s**(1-q) -> 0
        assume(s ** (1 - q) > 1e-4)
        assert q_exp(q_log(s, q), q) == pytest.approx(s, rel=1e-9)


class TestMoments:
    @pytest.mark.parametrize("p", [0.5, 2.0, 3.7])
    def test_unit_uniform(self, p):
        e, m = e_p_moment(uniform(0, 1, 1025), p)
        assert m == pytest.approx(1.0, rel=1e-12)
        assert e == pytest.approx(1 / (p - 1), rel=1e-12)

    def test_uniform_on_two(self):
        e, m = e_p_moment(uniform(0, 2, 1025), 2.0)
        assert m == pytest.approx(0.5, rel=1e-12)
        assert e == pytest.approx(0.5, rel=1e-12)

    def test_gaussian_second_moment(self, std_gaussian):
        assert moment(std_gaussian, 2.0) == pytest.approx(1 / (2 * SQRT_PI), rel=1e-10)

    def test_energy_limit_branch(self, std_gaussian):
        with pytest.raises(LimitBranchError):
            e_p_moment(std_gaussian, 1.0 + 1e-12)


class TestEntropies:
    @pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
    def test_uniform_renyi(self, p):
        assert renyi_entropy(uniform(0, 1, 1025), p) == pytest.approx(0.0, abs=1e-12)
        assert renyi_entropy(uniform(0, 3, 1537), p) == pytest.approx(math.log(3), rel=1e-12)

    def test_gaussian_renyi_two(self, std_gaussian):
        assert renyi_entropy(std_gaussian, 2.0) == pytest.approx(math.log(2 * SQRT_PI), rel=1e-10)

    def test_gaussian_shannon(self, std_gaussian):
        assert shannon_entropy(std_gaussian) == pytest.approx(0.5 * math.log(2 * math.pi * math.e), rel=1e-10)

    @pytest.mark.parametrize("p,q", [(2, 3), (0.7, 0.5), (1, 2), (3, 1)])
    def test_sharma_mittal_zero_on_unit_uniform(self, p, q):
        assert sharma_mittal_entropy(uniform(0, 1, 1025), Orders(p, q)) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("p", [0.7, 2.0, 3.0])
    def test_diagonal_is_tsallis(self, bimodal, p):
        m = moment(bimodal, p)
        assert sharma_mittal_entropy(bimodal, Orders(p, p)) == pytest.approx((m - 1) / (1 - p), rel=1e-12)
        assert tsallis_entropy(bimodal, p) == pytest.approx((m - 1) / (1 - p), rel=1e-12)

    def test_two_routes_agree(self, std_gaussian):
        o = Orders(2.0, 3.0)
        assert sharma_mittal_entropy(std_gaussian, o) == pytest.approx(sharma_mittal_direct(std_gaussian, o), rel=1e-12)

    def test_q_one_gives_renyi(self, bimodal):
        assert sharma_mittal_entropy(bimodal, Orders(2.0, 1.0)) == renyi_entropy(bimodal, 2.0)

    def test_both_one_gives_shannon(self, bimodal):
        assert sharma_mittal_entropy(bimodal, Orders(1.0, 1.0)) == shannon_entropy(bimodal)

    @pytest.mark.parametrize("p", [2.0, 0.7])
    def test_limit_chain_in_q(self, bimodal, p):
        r = renyi_entropy(bimodal, p)
        gaps = [abs(sharma_mittal_entropy(bimodal, Orders(p, 1 + s * e)) - r) for e in (1e-3, 1e-6) for s in (1, -1)]
        assert max(gaps[2:]) < 1e-5
        assert max(gaps[2:]) < min(gaps[:2])

    def test_limit_chain_in_p(self, bimodal):
        h = shannon_entropy(bimodal)
        gaps = [abs(renyi_entropy(bimodal, 1 + e) - h) for e in (1e-3, 1e-5, 1e-7)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-6


class TestEntropyPowers:
    @pytest.mark.parametrize("p,q,d", [(2, 3, 1), (0.6, 0.5, 1), (1, 1, 1)])
    def test_unit_uniform(self, p, q, d):
        assert entropy_power(uniform(0, 1, 1025), Orders(p, q, d)) == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_b2(self, std_gaussian):
        assert entropy_power(std_gaussian, Orders(2, 1)) == pytest.approx(4 * math.pi, rel=1e-9)
        assert bc_entropy_power(std_gaussian, 2) == pytest.approx(4 * math.pi, rel=1e-9)

    def test_gaussian_shannon_power(self, std_gaussian):
        assert entropy_power(std_gaussian, Orders(1, 1)) == pytest.approx(2 * math.pi * math.e, rel=1e-9)
        assert shannon_entropy_power(std_gaussian) == pytest.approx(2 * math.pi * math.e, rel=1e-9)

    def test_variant_relations(self, bimodal):
        for p in (0.7, 1.5, 3.0):
            assert entropy_power(bimodal, Orders(p, p)) == renyi_entropy_power(bimodal, p)
            assert entropy_power(bimodal, Orders(p, 1)) == pytest.approx(bc_entropy_power(bimodal, p), rel=1e-14)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.55, 3.5), q=st.floats(0.2, 3.5))
    def test_two_power_routes_agree(self, seed, p, q):
        u = random_density(np.random.default_rng(seed), n=512)
        o = Orders(p, q)
        assert entropy_power_from_sm(u, o) == pytest.approx(entropy_power(u, o), rel=1e-12)

    @pytest.mark.parametrize("lam", [0.5, 2.0, 5.0])
    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_homogeneity(self, std_gaussian, lam, p):
        assert bc_entropy_power(dilate(std_gaussian, lam), p) == pytest.approx(
            lam**-2 * bc_entropy_power(std_gaussian, p), rel=1e-12
        )


class TestFisherInformation:
    def test_gaussian_p1(self, std_gaussian):
        assert fisher_information(std_gaussian, 1.0) == pytest.approx(1.0, abs=1e-4)

    def test_gaussian_sigma2(self):
        u = gaussian(4.0, L=20.0, n=2048)
        assert fisher_information(u, 1.0) == pytest.approx(0.25, abs=1e-4)

    def test_gaussian_p2_against_quadrature(self, std_gaussian):
        ref = quad(lambda x: 4 * x**2 * phi(x) ** 3)
        assert ref == pytest.approx(2 / (3 * math.sqrt(3) * math.pi), rel=1e-12)
        assert fisher_information(std_gaussian, 2.0) == pytest.approx(ref, abs=1e-4)

    def test_forms_agree(self, bimodal):
        a, b = fisher_information_forms(bimodal, 2.0)
        assert a == pytest.approx(b, rel=1e-3)

    def test_rejects_small_p(self, std_gaussian):
        with pytest.raises(DomainError):
            fisher_information(std_gaussian, 0.5)

    def test_rejects_coarse_grid(self):
        x = line_nodes(4.0, 9)
        with pytest.raises(DomainError):
            fisher_information(GridDensity(x, np.exp(-(x**2))), 1.0)


class TestSecondOrder:
    def test_gaussian_p1(self, std_gaussian):
        assert second_order_functional(std_gaussian, 1.0) == pytest.approx(2.0, abs=1e-4)

    @pytest.mark.parametrize("s2", [0.5, 2.0])
    def test_gaussian_scaling(self, s2):
        u = gaussian(s2, L=10 * math.sqrt(s2), n=2048)
        assert second_order_functional(u, 1.0) == pytest.approx(2 / s2**2, rel=1e-4)

    def test_gaussian_p2_against_quadrature(self, std_gaussian):
        # f = 2 u, f'' = 2 u (x^2 - 1), J_2 = 4 int u^2 f''^2
        ref = quad(lambda x: 16 * phi(x) ** 4 * (x**2 - 1) ** 2)
        assert second_order_functional(std_gaussian, 2.0) == pytest.approx(ref, rel=1e-4)

    def test_absent_on_thin_support(self):
        x = line_nodes(1.0, 101)
        v = np.where(np.abs(x) < 0.05, 1.0, 0.0)
        assert second_order_functional(GridDensity(x, v), 2.0) is None

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.55, 3.5))
    def test_key_inequality_and_positivity(self, seed, p):
        u = random_density(np.random.default_rng(seed))
        i = fisher_information(u, p)
        j = second_order_functional(u, p)
        m = moment(u, p)
        assert m > 0 and i >= 0 and j >= 0
        jm = j * m
        assert jm - 2 * p * i**2 >= -1e-8 * max(1.0, jm)


class TestQFunctional:
    def test_gaussian_term_by_term(self, fine_gaussian):
        o = Orders(2.0, 2.0)
        m2 = quad(lambda x: phi(x) ** 2)
        i2 = quad(lambda x: 4 * x**2 * phi(x) ** 3)
        r2 = -math.log(m2)
        ref = math.exp(o.sigma_q * r2) * m2 ** ((2 * 2 - 2 - 1) / (1 - 2)) * i2
        assert q_functional(fine_gaussian, o) == pytest.approx(ref, rel=1e-4)

    def test_identity_dilation(self, std_gaussian):
        o = Orders(2.0, 3.0)
        assert q_functional(dilate(std_gaussian, 1.0), o) == q_functional(std_gaussian, o)

    @pytest.mark.parametrize("lam", [0.5, 2.0, 5.0])
    @pytest.mark.parametrize("p,q", [(2, 3), (1.5, 1), (0.8, 0.5), (1, 1)])
    def test_dilation_invariant(self, fine_gaussian, lam, p, q):
        o = Orders(p, q)
        assert q_functional(dilate(fine_gaussian, lam), o) == pytest.approx(q_functional(fine_gaussian, o), rel=1e-6)

    def test_snapshot_matches_q_functional(self, bimodal):
        o = Orders(2.0, 3.0)
        assert snapshot(bimodal, o).Q_pq == pytest.approx(q_functional(bimodal, o), rel=1e-13)


class TestDilate:
    def test_identity(self, bimodal):
        d = dilate(bimodal, 1.0)
        assert np.array_equal(d.values, bimodal.values)
        assert np.array_equal(d.nodes, bimodal.nodes)

    @given(lam=st.floats(0.05, 20.0))
    def test_mass(self, bimodal, lam):
        assert dilate(bimodal, lam).mass == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("lam", [0.3, 2.0, 7.0])
    @pytest.mark.parametrize("p", [0.7, 1.0, 2.0])
    def test_renyi_shift(self, lam, p):
        for u in (uniform(0, 2, 513), gaussian(1.0, L=10, n=1024)):
            assert renyi_entropy(dilate(u, lam), p) == pytest.approx(renyi_entropy(u, p) - math.log(lam), abs=1e-12)

    def test_rejects_nonpositive(self, bimodal):
        with pytest.raises(DomainError):
            dilate(bimodal, 0.0)


class TestScalarS:
    def test_unit(self):
        assert s_pq_scalar(1.0, Orders(2, 2)) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            s_pq_scalar(-1.0, Orders(2, 2))

    @given(a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3), p=st.floats(1.05, 4.0), dq=st.floats(-1.0, 3.0))
    def test_nondecreasing_for_p_above_one(self, a, b, p, dq):
        o = Orders(p, max(0.05, p + dq))
        lo, hi = sorted((a, b))
        assert s_pq_scalar(hi, o) >= s_pq_scalar(lo, o) - 1e-12 * (1 + abs(s_pq_scalar(lo, o)))

    def test_nondecreasing_grid(self):
        z = np.linspace(0.01, 10, 2000)
        assert np.all(np.diff(s_pq_scalar(z, Orders(2, 2))) >= 0)

    def test_midpoint_convex(self):
        rng = np.random.default_rng(7)
        a, b = rng.uniform(0.1, 10, (2, 1000))
        o = Orders(2, 3)
        mid = s_pq_scalar((a + b) / 2, o)
        assert np.all(mid <= (s_pq_scalar(a, o) + s_pq_scalar(b, o)) / 2 + 1e-12)

    @given(a=st.floats(0.1, 10), b=st.floats(0.1, 10), p=st.floats(1.05, 3.0), dq=st.floats(0.0, 2.0))
    def test_convex_when_q_at_least_p(self, a, b, p, dq):
        o = Orders(p, p + dq)
        mid = s_pq_scalar((a + b) / 2, o)
        avg = (s_pq_scalar(a, o) + s_pq_scalar(b, o)) / 2
        assert mid <= avg + 1e-10 * (1 + abs(avg))


class TestRefinement:
    """Halving h changes stencil functionals by O(h^2)."""

    @pytest.mark.parametrize("name", ["I", "J"])
    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_second_order(self, name, p):
        f = fisher_information if name == "I" else second_order_functional
        vals = [f(gaussian(1.0, L=10.0, n=n), p) for n in (513, 1025, 2049)]
        d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
        # at p = 1 the Gaussian stencils are exact or fourth order
        assert d2 <= d1 / 3.5 + 1e-12

    @pytest.mark.parametrize("p", [0.7, 2.0])
    def test_quadrature_functionals(self, bimodal, p):
        vals = [renyi_entropy(gaussian(1.0, L=10.0, n=n), p) for n in (257, 513, 1025)]
        assert abs(vals[2] - vals[1]) <= abs(vals[1] - vals[0]) / 3.5 + 1e-13
