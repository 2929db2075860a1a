import numpy as np
import pytest

from vqnhe.classical_models import PostProcessor, mlp_param_count, one_qubit_r


class TestEvaluate:
    def test_identity(self):
        f = PostProcessor.identity(3)
        assert f.evaluate("010") == 1.0
        assert np.all(f.evaluate_all() == 1.0)

    def test_zero_weight_mlp_is_one(self):
        f = PostProcessor.bounded_mlp(3)
        assert np.allclose(f.evaluate_all(), 1.0)

    def test_complex_table_lookup(self):
        r = 0.3
        f = PostProcessor.complex_table(1, [1 - r, 1 + r])
        assert f.evaluate("0") == 1 - r
        assert f.evaluate("1") == 1 + r

    def test_length_check(self):
        with pytest.raises(ValueError):
            PostProcessor.identity(3).evaluate("01")

    def test_param_count_check(self):
        with pytest.raises(ValueError):
            PostProcessor("bounded_mlp", 3, np.zeros(5))

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        f = PostProcessor.bounded_mlp(4, rng.normal(0, 1, mlp_param_count(4)))
        assert np.array_equal(f.evaluate_all(), f.evaluate_all())


class TestRange:
    @pytest.mark.parametrize("n", [1, 2, 4, 6])
    def test_bounded_output(self, n):
        rng = np.random.default_rng(n)
        lo, hi = np.exp(-1), np.exp(1)
        for _ in range(10_000):
            f = PostProcessor.bounded_mlp(n, rng.normal(0, 3.0, mlp_param_count(n)))
            vals = f.evaluate_all()
            assert np.all(vals >= lo - 1e-12) and np.all(vals <= hi + 1e-12)

    def test_extremes_reachable(self):
        # saturating the output tanh pins the range ends
        n = 2
        p = np.zeros(mlp_param_count(n))
        p[-1] = 50.0
        assert PostProcessor.bounded_mlp(n, p).evaluate_all()[0] == \
            pytest.approx(np.e, rel=1e-9)


class TestGradients:
    @pytest.mark.parametrize("variant", ["bounded_mlp", "complex_table"])
    def test_backprop_matches_finite_differences(self, variant):
        rng = np.random.default_rng(7)
        n = 3
        if variant == "bounded_mlp":
            f = PostProcessor.bounded_mlp(n, rng.normal(0, 0.8, mlp_param_count(n)))
        else:
            f = PostProcessor.complex_table(
                n, rng.normal(1, 0.3, 2 ** n) + 1j * rng.normal(0, 0.3, 2 ** n))
        # random real objective E = Re sum w(s) f(s) + quadratic term
        w = rng.normal(0, 1, 2 ** n) + 1j * rng.normal(0, 1, 2 ** n)
        q = rng.normal(0, 1, 2 ** n)

        def objective(params):
            vals = f.with_params(params).evaluate_all()
            return float(np.real(np.sum(w * vals)) + np.sum(q * np.abs(vals) ** 2))

        # Wirtinger half-derivative of the objective
        vals = f.evaluate_all()
        g = 0.5 * w + q * np.conj(vals)
        grad = f.backprop_all(g)
        eps = 1e-6
        for k in rng.choice(f.param_count, 10, replace=False):
            pp, pm = f.params.copy(), f.params.copy()
            pp[k] += eps
            pm[k] -= eps
            fd = (objective(pp) - objective(pm)) / (2 * eps)
            assert fd == pytest.approx(grad[k], abs=2e-5 * max(1, abs(fd)))


class TestOneQubitR:
    def test_identity_zero(self):
        assert one_qubit_r(PostProcessor.identity(1)) == 0.0

    def test_algebraic_identity(self):
        r = 0.42
        f = PostProcessor.complex_table(1, [1 - r, 1 + r])
        assert one_qubit_r(f) == pytest.approx(r, abs=1e-14)

    def test_extreme_mlp_value(self):
        # f(0) = 1/e, f(1) = e gives (e - 1/e)/(e + 1/e)
        f = PostProcessor.complex_table(1, [np.exp(-1), np.exp(1)])
        expected = (np.e - 1 / np.e) / (np.e + 1 / np.e)
        assert one_qubit_r(f) == pytest.approx(expected, abs=1e-12)
        assert one_qubit_r(f) == pytest.approx(0.76159, abs=1e-5)

    def test_rejects_complex_values(self):
        with pytest.raises(ValueError):
            one_qubit_r(PostProcessor.complex_table(1, [1.0, 1.0 + 0.5j]))

    def test_rejects_wrong_size(self):
        with pytest.raises(ValueError):
            one_qubit_r(PostProcessor.identity(2))


class TestCheckpoint:
    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        f = PostProcessor.bounded_mlp(4, rng.normal(0, 1, mlp_param_count(4)))
        path = tmp_path / "ckpt.npz"
        f.save(path, extra={"theta": rng.normal(0, 1, 9), "tau": rng.normal(0, 1, 4)})
        g, extra = PostProcessor.load(path)
        assert g.variant == f.variant and g.n == f.n
        assert np.array_equal(g.params, f.params)
        assert set(extra) == {"theta", "tau"}
        assert extra["theta"].dtype == np.float64
