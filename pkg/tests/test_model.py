import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cafe import encodings as enc
from cafe import tensor as T
from cafe.errors import ConfigError
from cafe.model import (CafeModel, FeatureMask, ModelSpec, closed_form_params, count_params,
                        depth_for_budget, encode_cafe, init_model, model_forward,
                        pairwise_expansion_coeffs, stack_param_count)


def set_stack(model, weights, biases):
    for (w, b), wv, bv in zip(model.stack, weights, biases):
        w.data = np.asarray(wv, dtype=float)
        b.data = np.asarray(bv, dtype=float)


class TestInit:
    def test_param_count_example(self):
        # F = 2M + D J = 4 with M = 2, D = 1, J = 0
        spec = ModelSpec(encoder="cafe", D=1, M=2, J=0, N=2, D_h=3, L_mlp=1)
        assert count_params(init_model(spec)) == 46
        assert closed_form_params(4, 3, 2, 1, 1) == 46

    def test_no_mlp_example(self):
        spec = ModelSpec(encoder="cafe", D=1, M=1, J=0, N=1, D_h=2, L_mlp=0)
        assert count_params(init_model(spec)) == 9

    def test_deterministic(self):
        a, b = init_model(ModelSpec(seed=4)), init_model(ModelSpec(seed=4))
        for p, q in zip(a.parameters(), b.parameters()):
            assert p.data.tobytes() == q.data.tobytes()

    def test_init_ranges(self):
        m = init_model(ModelSpec())
        lim = 1 / np.sqrt(m.F)
        for w, b in m.stack:
            assert np.all(np.abs(w.data) <= lim)
            assert np.all((b.data >= 0.9) & (b.data <= 1.1))
        for w, b in m.mlp:
            assert np.all(np.abs(w.data) <= 1 / np.sqrt(w.shape[1]))
            assert np.all(b.data == 0)

    def test_n_zero_rejected_for_cafe(self):
        with pytest.raises(ConfigError):
            init_model(ModelSpec(encoder="cafe", J=0, N=0))

    def test_chebyshev_needs_j(self):
        with pytest.raises(ConfigError):
            ModelSpec(encoder="chebyshev", J=0, N=0).validate()

    @settings(max_examples=50)
    @given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 5), st.integers(1, 3),
           st.integers(1, 8), st.integers(0, 3), st.integers(1, 3))
    def test_count_formula(self, D, M, J, N, D_h, L, out):
        encoder = "cafeplus" if J else "cafe"
        m = init_model(ModelSpec(encoder=encoder, D=D, M=M, J=J, N=N, D_h=D_h, L_mlp=L, out_dim=out))
        assert m.F == 2 * M + D * J
        assert count_params(m) == closed_form_params(m.F, D_h, N, L, out)

    def test_doubling_width(self):
        small, big = stack_param_count(80, 32, 3), stack_param_count(80, 64, 3)
        assert small == 3 * (80 * 32 + 32) and big == 3 * (80 * 64 + 64)
        assert big == 2 * small

    def test_depth_for_budget(self):
        spec = ModelSpec(encoder="rff", M=40, J=0, N=0)
        assert depth_for_budget(spec, 19777) == 4


class TestEncodeCafe:
    def test_identity_reduction(self):
        basis = enc.sample_rff(3, 2, 2.0, 1)
        m = init_model(ModelSpec(encoder="cafe", D=2, M=3, J=0, N=1, D_h=6), basis)
        set_stack(m, [np.eye(6)], [np.zeros(6)])
        x = np.array([[0.2, -0.7], [0.5, 0.1]])
        np.testing.assert_array_equal(encode_cafe(x, m), enc.fourier_encode(x, basis).values)

    def _double_angle(self):
        basis = enc.explicit_basis([[1.0]])
        m = init_model(ModelSpec(encoder="cafe", D=1, M=1, J=0, N=2, D_h=1), basis)
        set_stack(m, [[[1.0, 0.0]], [[0.0, 1.0]]], [[0.0], [0.0]])
        return m

    def test_double_angle(self):
        m = self._double_angle()
        x = np.linspace(-1, 1, 101)[:, None]
        theta = 2 * np.pi * x[:, 0]
        np.testing.assert_allclose(encode_cafe(x, m)[:, 0], 0.5 * np.sin(2 * theta), atol=1e-15)

    def test_double_angle_pi_over_three(self):
        m = self._double_angle()
        x = np.array([1.0 / 6.0])  # theta = 2 pi x = pi / 3
        assert encode_cafe(x, m)[0] == pytest.approx(0.43301270189, abs=1e-10)

    def test_layer_permutation(self):
        m = init_model(ModelSpec(N=3, D_h=8, M=4, J=3, seed=2))
        x = np.random.default_rng(0).uniform(-1, 1, (5, 2))
        ref = encode_cafe(x, m)
        m.stack = m.stack[::-1]
        np.testing.assert_allclose(encode_cafe(x, m), ref, rtol=0, atol=1e-15)

    def test_n_one_is_affine(self):
        m = init_model(ModelSpec(N=1, D_h=5, M=3, J=2))
        x = np.array([[0.3, 0.4]])
        phi = m.features(x).values
        w, b = m.stack[0]
        np.testing.assert_allclose(encode_cafe(x, m), phi @ w.data.T + b.data, rtol=1e-15)


class TestForward:
    def test_zero_output_weights(self):
        m = init_model(ModelSpec(M=4, J=3, D_h=8))
        w, b = m.mlp[-1]
        w.data = np.zeros_like(w.data)
        b.data = np.array([0.75])
        out = model_forward(np.random.default_rng(1).uniform(-1, 1, (6, 2)), m).data
        np.testing.assert_array_equal(out, 0.75)

    def test_mask_none_bitwise(self):
        m = init_model(ModelSpec(M=4, J=3, D_h=8))
        x = np.random.default_rng(1).uniform(-1, 1, (6, 2))
        a = model_forward(x, m, FeatureMask.NONE).data
        b = m.forward_features(m.features(x).values).data
        assert a.tobytes() == b.tobytes()

    def test_masked_block_contributes_nothing(self):
        m = init_model(ModelSpec(M=4, J=3, D_h=8, N=1))
        x = np.random.default_rng(2).uniform(-1, 1, (4, 2))
        fv = m.features(x)
        lo, hi = fv.block("cf")
        w, b = m.stack[0]
        only_ff = fv.values[:, :lo] @ w.data[:, :lo].T + b.data
        np.testing.assert_allclose(encode_cafe(x, m, FeatureMask.FF_ONLY), only_ff, rtol=1e-14)
        lo, hi = fv.block("ff")
        only_cf = fv.values[:, hi:] @ w.data[:, hi:].T + b.data
        np.testing.assert_allclose(encode_cafe(x, m, "cf_only"), only_cf, rtol=1e-14)

    def test_end_to_end_gradients_small_model(self):
        spec = ModelSpec(encoder="cafeplus", D=1, M=3, J=2, N=2, D_h=8, L_mlp=1, seed=9)
        m = init_model(spec)
        assert count_params(m) == 225
        x = np.linspace(-0.9, 0.9, 7)[:, None]
        y = np.sin(3 * x)
        phi = m.features(x).values
        grads = T.grads_for(m.parameters(), T.mse_loss(m.forward_features(phi), y))
        probe = m.copy()

        def loss(arrays):
            probe.set_parameters(arrays)
            return T.mse_loss(probe.forward_features(phi), y).item()

        fd = T.finite_diff_grad(loss, [p.data for p in m.parameters()], h=1e-5)
        for g, n in zip(grads, fd):
            assert T.relative_error(g, n, floor=1e-4) < 1e-6


class TestPairwise:
    def _model(self, seed=0):
        basis = enc.explicit_basis([[1.0], [3.0], [4.0]])
        return init_model(ModelSpec(encoder="cafe", D=1, M=3, J=0, N=2, D_h=4, seed=seed), basis)

    def test_sine_sine(self):
        m = self._model()
        M = 3
        for w, _ in m.stack:
            w.data[:] = 0
        m.stack[0][0].data[0, 1] = 1.0  # sine of frequency index 1
        m.stack[1][0].data[0, 2] = 1.0  # sine of frequency index 2
        pe = pairwise_expansion_coeffs(m, 0, 1, 2)
        assert pe.coeffs == (1.0, 0.0, 0.0, 0.0)
        ti, tm = np.meshgrid(np.linspace(0, 7, 40), np.linspace(-3, 3, 40))
        np.testing.assert_allclose(pe.reconstruct(ti, tm), np.sin(ti) * np.sin(tm), atol=1e-12)
        np.testing.assert_allclose(pe.reconstruct(ti, tm), 0.5 * (np.cos(ti - tm) - np.cos(ti + tm)), atol=1e-12)
        assert m.stack[0][0].data[0, M + 1] == 0

    def test_zero_weights(self):
        m = self._model()
        for w, _ in m.stack:
            w.data[:] = 0
        pe = pairwise_expansion_coeffs(m, 2, 0, 1)
        assert pe.coeffs == (0.0, 0.0, 0.0, 0.0)
        assert np.all(pe.reconstruct(np.linspace(0, 1, 5), np.linspace(1, 2, 5)) == 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_weights(self, seed):
        m = self._model(seed)
        g = np.random.default_rng(seed)
        ti, tm = g.uniform(-10, 10, 100), g.uniform(-10, 10, 100)
        for j in range(4):
            for i in range(3):
                for k in range(3):
                    pe = pairwise_expansion_coeffs(m, j, i, k)
                    np.testing.assert_allclose(pe.reconstruct(ti, tm), pe.direct(ti, tm), atol=1e-12)

    def test_requires_two_layers(self):
        m = init_model(ModelSpec(encoder="cafe", D=1, M=2, J=0, N=3, D_h=2))
        with pytest.raises(ValueError):
            pairwise_expansion_coeffs(m, 0, 0, 1)


def test_copy_is_independent():
    m = init_model(ModelSpec(M=2, J=2, D_h=4))
    c = m.copy()
    c.parameters()[0].data[0, 0] += 1.0
    assert m.parameters()[0].data[0, 0] != c.parameters()[0].data[0, 0]
    assert isinstance(c, CafeModel)
