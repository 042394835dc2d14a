import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cafe import encodings as enc
from cafe.errors import BudgetExceeded
from cafe.model import ModelSpec, encode_cafe, init_model
from cafe.spectrum import (SparseChebPoly, SparseTrigPoly, band_energy_fraction, canonical,
                           cheb_power_orders, cheb_product_index_set, compute_ntk, dft,
                           empirical_spectrum_dft, enumerate_cafe_frequencies,
                           expand_cafe_symbolically, format_freqs, full_pairwise_reconstruction,
                           symbolic_cheb_multiply, symbolic_trig_multiply, union_form, as_freq_list)
from cafe.tensor import Tensor


def brute_force_set(base, N):
    """Every signed sum over every choice of N base frequencies, one at a time."""
    out = set()
    for ks in itertools.product(range(len(base)), repeat=N):
        for signs in itertools.product((-1, 0, 1), repeat=N):
            v = tuple(sum(s * base[k][d] for s, k in zip(signs, ks)) for d in range(len(base[0])))
            out.add(canonical(v))
    return out


def cafe_model(freqs, N, D_h=4, seed=0, D=1):
    basis = enc.explicit_basis(np.asarray(freqs, dtype=float).reshape(len(freqs), D))
    return init_model(ModelSpec(encoder="cafe", D=D, M=len(freqs), J=0, N=N, D_h=D_h, seed=seed), basis)


class TestEnumeration:
    def test_single_base(self):
        assert enumerate_cafe_frequencies([1], 2).frequencies == {(0,), (1,), (2,)}

    def test_two_bases(self):
        assert format_freqs(enumerate_cafe_frequencies([1, 2], 2).frequencies) == "{0,1,2,3,4}"

    def test_n_one(self):
        # the all-bias product always contributes frequency 0
        s = enumerate_cafe_frequencies([3, 5], 1)
        assert s.frequencies == {(0,), (3,), (5,)}
        assert union_form([(3,), (5,)], 1, include_dc=False) == {(3,), (5,)}

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            enumerate_cafe_frequencies(list(range(1, 40)), 4, budget=1000)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=3), st.integers(1, 3))
    def test_forms_agree_and_match_brute_force(self, base, N):
        s = enumerate_cafe_frequencies(base, N)
        assert s.signed_form == s.union_form
        assert s.frequencies == brute_force_set([(b,) for b in base], N)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=3),
           st.integers(1, 3))
    def test_two_dimensional(self, base, N):
        s = enumerate_cafe_frequencies(np.array(base, dtype=float), N)
        assert s.frequencies == brute_force_set(base, N)

    def test_non_integer_rejected(self):
        with pytest.raises(ValueError):
            as_freq_list([1.5])


class TestChebOrders:
    def test_single(self):
        assert cheb_power_orders({1}, 2).orders == {0, 2}

    def test_pair(self):
        assert cheb_power_orders({1, 3}, 2).orders == {0, 2, 4, 6}

    @given(st.sets(st.integers(0, 10), min_size=1, max_size=4))
    def test_base_case(self, J):
        assert cheb_power_orders(J, 1).orders == J

    @settings(max_examples=50)
    @given(st.sets(st.integers(0, 8), min_size=1, max_size=4), st.integers(1, 4))
    def test_within_bound(self, J, k):
        r = cheb_power_orders(J, k)
        assert r.orders <= r.bound

    @settings(max_examples=30, deadline=None)
    @given(st.sets(st.integers(0, 6), min_size=1, max_size=3), st.integers(1, 3))
    def test_power_support_matches_recursion(self, J, k):
        # the k-th power of a generic series on J lands on S_k
        g = np.random.default_rng(len(J) * 10 + k)
        p = SparseChebPoly({j: g.uniform(0.5, 1.5) for j in J})
        acc = p
        for _ in range(k - 1):
            acc = acc * p
        assert acc.support <= cheb_power_orders(J, k).orders


class TestChebMultiply:
    def test_t2_t3(self):
        assert symbolic_cheb_multiply(SparseChebPoly({2: 1.0}), SparseChebPoly({3: 1.0})).coeffs == {5: 0.5, 1: 0.5}

    def test_t0_t0(self):
        assert (SparseChebPoly({0: 1.0}) * SparseChebPoly({0: 1.0})).coeffs == {0: 1.0}

    def test_x_squared(self):
        assert (SparseChebPoly({1: 1.0}) * SparseChebPoly({1: 1.0})).coeffs == {2: 0.5, 0: 0.5}

    @settings(max_examples=50)
    @given(st.dictionaries(st.integers(0, 12), st.floats(-2, 2).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=4),
           st.dictionaries(st.integers(0, 12), st.floats(-2, 2).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=4))
    def test_support_and_values(self, a, b):
        p, q = SparseChebPoly(a), SparseChebPoly(b)
        r = p * q
        assert r.support <= cheb_product_index_set(p.support, q.support)
        x = np.linspace(-1, 1, 200)
        np.testing.assert_allclose(r(x), p(x) * q(x), atol=1e-10)


class TestTrigMultiply:
    def test_sin_squared(self):
        p = SparseTrigPoly.sin_term(1)
        r = p * p
        assert r.terms == {(0,): (0.0, 0.5), (2,): (0.0, -0.5)}

    def test_sin_cos(self):
        r = SparseTrigPoly.sin_term(3) * SparseTrigPoly.cos_term(1)
        assert r.terms == {(4,): (0.5, 0.0), (2,): (0.5, 0.0)}

    def test_negative_frequency_canonicalised(self):
        r = SparseTrigPoly.sin_term(1) * SparseTrigPoly.cos_term(3)
        # sin(-2t) = -sin(2t)
        assert r.terms == {(4,): (0.5, 0.0), (2,): (-0.5, 0.0)}

    @pytest.mark.parametrize("seed", range(10))
    def test_random_three_term(self, seed):
        g = np.random.default_rng(seed)

        def rand_poly():
            return SparseTrigPoly(1, {(int(w),): (g.normal(), g.normal()) for w in g.integers(0, 6, 3)})

        p, q = rand_poly(), rand_poly()
        x = np.linspace(0, 1, 200)
        np.testing.assert_allclose((p * q)(x), p(x) * q(x), atol=1e-10)

    def test_two_dimensional(self):
        p = SparseTrigPoly(2, {(1, 2): (0.3, -0.2), (0, 1): (1.0, 0.5)})
        q = SparseTrigPoly(2, {(2, -1): (0.7, 0.1)})
        x = np.random.default_rng(0).uniform(-1, 1, (50, 2))
        np.testing.assert_allclose(symbolic_trig_multiply(p, q)(x), p(x) * q(x), atol=1e-12)


class TestSymbolicExpansion:
    def test_double_angle(self):
        m = cafe_model([1], 2, D_h=1)
        m.stack[0][0].data = np.array([[1.0, 0.0]])
        m.stack[1][0].data = np.array([[0.0, 1.0]])
        for _, b in m.stack:
            b.data = np.zeros(1)
        (p,) = expand_cafe_symbolically(m)
        assert p.terms == {(2,): (0.5, 0.0)}

    def test_bias_only(self):
        m = cafe_model([1, 2], 2, D_h=2)
        for w, b in m.stack:
            w.data[:] = 0
            b.data[:] = 1
        for p in expand_cafe_symbolically(m):
            assert p.terms == {(0,): (0.0, 1.0)}

    @pytest.mark.parametrize("seed", range(5))
    def test_random_weights_match_numeric(self, seed):
        m = cafe_model([1, 2], 2, D_h=4, seed=seed)
        polys = expand_cafe_symbolically(m)
        x = np.linspace(-1, 1, 200)[:, None]
        psi = m.psi(Tensor(m.features(x).values)).data
        for j, p in enumerate(polys):
            assert p.support <= {(0,), (1,), (2,), (3,), (4,)}
            np.testing.assert_allclose(p(x), psi[:, j], atol=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_full_pairwise_reconstruction(self, seed):
        m = cafe_model([1, 3, 4], 2, D_h=3, seed=seed)
        x = np.linspace(-1, 1, 97)[:, None]
        psi = encode_cafe(x, m)
        for j in range(3):
            np.testing.assert_allclose(full_pairwise_reconstruction(m, j, x), psi[:, j], atol=1e-10)

    def test_rejects_chebyshev_models(self):
        m = init_model(ModelSpec(encoder="cafeplus", D=1, M=2, J=2, N=2, D_h=2))
        with pytest.raises(ValueError):
            expand_cafe_symbolically(m)


class TestEmpiricalDft:
    def test_dft_matches_numpy(self):
        x = np.random.default_rng(0).normal(size=64)
        np.testing.assert_allclose(dft(x), np.fft.rfft(x), atol=1e-10)

    def test_zero_weights_only_dc(self):
        m = cafe_model([1, 2], 2)
        for w, _ in m.stack:
            w.data[:] = 0
        assert empirical_spectrum_dft(m, 64).union <= {0}

    def test_identity_like_n1(self):
        m = cafe_model([1, 2], 1, D_h=4)
        m.stack[0][0].data = np.eye(4)
        m.stack[0][1].data = np.zeros(4)
        assert empirical_spectrum_dft(m, 64).union <= {1, 2}

    def test_random_models_contained(self):
        for seed in range(100):
            m = cafe_model([1, 2], 2, seed=seed)
            assert empirical_spectrum_dft(m, 64).union <= {0, 1, 2, 3, 4}

    def test_aliasing_guard(self):
        with pytest.raises(ValueError):
            empirical_spectrum_dft(cafe_model([5], 3), 30)


def test_band_energy_fraction():
    n = 128
    x = np.arange(n) / n
    low, high = band_energy_fraction(np.sin(2 * np.pi * 3 * x) + 0.1 * np.sin(2 * np.pi * 40 * x), 10)
    assert low == pytest.approx(1 / 1.01) and high == pytest.approx(0.01 / 1.01)


class TestNtk:
    def test_linear_model(self):
        m = init_model(ModelSpec(encoder="rff", D=1, M=1, J=0, N=0, L_mlp=0))
        # feed x itself through the sine slot: f(x) = w x + 0 * v + b
        m.features = lambda x, mask="none": enc.FeatureVector(
            np.column_stack([np.ravel(x), np.zeros(np.size(x))]), (("ff", 0, 2),))
        K = compute_ntk(m, np.array([[1.0], [2.0]])).K
        # gradients are (x, 0, 1), so K = x x' + 1
        np.testing.assert_allclose(K - 1.0, [[1, 2], [2, 4]])

    @pytest.mark.parametrize("encoder", ["cafe", "rff", "cafeplus"])
    def test_symmetric_psd(self, encoder):
        J = 3 if encoder == "cafeplus" else 0
        N = 0 if encoder == "rff" else 2
        m = init_model(ModelSpec(encoder=encoder, D=1, M=4, J=J, N=N, D_h=8, scale=3.0))
        ntk = compute_ntk(m, np.linspace(-1, 1, 32)[:, None])
        assert ntk.is_symmetric(1e-10)
        assert ntk.is_psd(1e-8)

    def test_budget(self):
        m = init_model(ModelSpec())
        with pytest.raises(BudgetExceeded):
            compute_ntk(m, np.zeros((4, 2)))
