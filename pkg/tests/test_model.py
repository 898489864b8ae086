"""Feature banks, model forward passes, baselines, checkpoints."""

import math

import numpy as np
import pytest

from rflaf.basis import ActivationGrid, build_grid
from rflaf.model import (
    BaselineRfModel,
    FeatureBank,
    RflafModel,
    baseline_forward,
    baseline_forward_batch,
    feature_matrix,
    forward,
    forward_batch,
    load_model,
    sample_features,
    save_model,
    single_basis_forward,
)
from rflaf.optim import predict_batch


def _random_model(rng, dim=3, m=5, n_basis=4, width=0.5):
    bank = sample_features(dim, m, seed=int(rng.integers(2**31)))
    grid = build_grid(-2.0, 2.0, n_basis, width)
    a = rng.standard_normal(n_basis)
    v = rng.standard_normal(m)
    return RflafModel(bank=bank, grid=grid, a=a, v=v)


class TestSampleFeatures:
    def test_shape_and_determinism(self):
        bank = sample_features(2, 1000, seed=0)
        again = sample_features(2, 1000, seed=0)
        assert bank.weights.shape == (1000, 2)
        assert np.array_equal(bank.weights, again.weights)

    def test_single_draw(self):
        bank = sample_features(1, 1, seed=4)
        assert bank.weights.shape == (1, 1)

    def test_gaussian_moments(self):
        bank = sample_features(2, 100_000, seed=1)
        means = bank.weights.mean(axis=0)
        assert np.all(np.abs(means) <= 0.02)
        variances = bank.weights.var(axis=0)
        assert np.all(np.abs(variances - 1.0) <= 0.2)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            sample_features(0, 5, seed=0)
        with pytest.raises(ValueError):
            sample_features(2, 0, seed=0)


class TestFeatureMatrix:
    def test_row_of_ones_at_matching_center(self):
        # grid [-2, 2] with 4 cells has a center exactly at 0 only if we
        # build it so; use [-1, 1] with 2 cells: centers {0, 1}
        grid = build_grid(-1.0, 1.0, 2, 0.3)
        bank = sample_features(3, 7, seed=2)
        b = feature_matrix(grid, bank, np.zeros(3))
        assert np.all(b[0] == 1.0)
        assert b.shape == (2, 7)

    def test_one_by_one_composition(self):
        grid = ActivationGrid(0.0, 1.0, 1, np.array([0.6]), 0.2)
        bank = sample_features(2, 1, seed=3)
        x = np.array([0.3, -0.8])
        z = float(bank.weights[0] @ x)
        want = math.exp(-((z - 0.6) ** 2) / (2 * 0.2**2))
        got = feature_matrix(grid, bank, x)
        assert got.shape == (1, 1)
        assert got[0, 0] == pytest.approx(want, rel=1e-14)

    def test_matches_double_loop(self):
        rng = np.random.default_rng(11)
        grid = build_grid(-2.0, 2.0, 5, 0.4)
        bank = sample_features(3, 6, seed=12)
        x = rng.standard_normal(3)
        b = feature_matrix(grid, bank, x)
        for k in range(5):
            for m in range(6):
                z = float(bank.weights[m] @ x)
                want = math.exp(-((z - grid.centers[k]) ** 2) / (2 * 0.4**2))
                assert b[k, m] == pytest.approx(want, rel=1e-14)
        assert np.all(b > 0.0) and np.all(b <= 1.0)

    def test_dimension_mismatch(self):
        grid = build_grid(-1.0, 1.0, 2, 0.3)
        bank = sample_features(3, 4, seed=0)
        with pytest.raises(ValueError):
            feature_matrix(grid, bank, np.zeros(2))


class TestForward:
    def test_zero_weights(self):
        rng = np.random.default_rng(20)
        model = _random_model(rng)
        zeroed = RflafModel(bank=model.bank, grid=model.grid, a=np.zeros_like(model.a), v=model.v)
        assert forward(zeroed, np.ones(3)) == 0.0

    def test_single_unit_model(self):
        grid = ActivationGrid(0.0, 1.0, 1, np.array([0.5]), 0.25)
        bank = sample_features(2, 1, seed=5)
        model = RflafModel(bank=bank, grid=grid, a=np.array([1.0]), v=np.array([1.0]))
        x = np.array([0.1, 0.9])
        z = float(bank.weights[0] @ x)
        assert forward(model, x) == pytest.approx(math.exp(-((z - 0.5) ** 2) / (2 * 0.25**2)), rel=1e-14)

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            n_basis = int(rng.integers(1, 9))
            m = int(rng.integers(1, 9))
            d = int(rng.integers(1, 5))
            bank = sample_features(d, m, seed=int(rng.integers(2**31)))
            grid = build_grid(-2.0, 2.0, max(2, n_basis), 0.5)
            a = rng.standard_normal(grid.n_basis)
            v = rng.standard_normal(m)
            model = RflafModel(bank=bank, grid=grid, a=a, v=v)
            x = rng.standard_normal(d)
            total = 0.0
            for mm in range(m):
                z = float(bank.weights[mm] @ x)
                for k in range(grid.n_basis):
                    total += a[k] * math.exp(-((z - grid.centers[k]) ** 2) / (2 * 0.5**2)) * v[mm]
            total /= m
            assert forward(model, x) == pytest.approx(total, rel=1e-12, abs=1e-12)

    def test_bilinear_in_a_and_v(self):
        rng = np.random.default_rng(22)
        model = _random_model(rng)
        x = rng.standard_normal(3)
        alpha, beta = 1.7, -0.4
        a2 = rng.standard_normal(model.grid.n_basis)
        v2 = rng.standard_normal(model.bank.n_features)
        lhs_a = forward(
            RflafModel(bank=model.bank, grid=model.grid, a=alpha * model.a + beta * a2, v=model.v), x
        )
        rhs_a = alpha * forward(model, x) + beta * forward(
            RflafModel(bank=model.bank, grid=model.grid, a=a2, v=model.v), x
        )
        assert lhs_a == pytest.approx(rhs_a, rel=1e-12, abs=1e-12)
        lhs_v = forward(
            RflafModel(bank=model.bank, grid=model.grid, a=model.a, v=alpha * model.v + beta * v2), x
        )
        rhs_v = alpha * forward(model, x) + beta * forward(
            RflafModel(bank=model.bank, grid=model.grid, a=model.a, v=v2), x
        )
        assert lhs_v == pytest.approx(rhs_v, rel=1e-12, abs=1e-12)

    def test_bounded_by_factor_norms(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            model = _random_model(rng, dim=int(rng.integers(1, 5)), m=int(rng.integers(1, 9)), n_basis=int(rng.integers(2, 9)))
            x = rng.standard_normal(model.bank.dim) * rng.uniform(0.2, 3.0)
            bound = math.sqrt(model.grid.n_basis / model.bank.n_features)
            bound *= np.linalg.norm(model.a) * np.linalg.norm(model.v)
            assert abs(forward(model, x)) <= bound + 1e-12

    def test_one_hot_reduces_to_single_basis_model(self):
        rng = np.random.default_rng(24)
        model = _random_model(rng, n_basis=6)
        for k in (0, 2, 5):
            a = np.zeros(6)
            a[k] = 1.0
            hot = RflafModel(bank=model.bank, grid=model.grid, a=a, v=model.v)
            x = rng.standard_normal(3)
            assert forward(hot, x) == pytest.approx(
                single_basis_forward(model.grid, model.bank, model.v, k, x), rel=1e-13
            )


class TestForwardBatch:
    def test_empty(self):
        rng = np.random.default_rng(30)
        model = _random_model(rng)
        out = forward_batch(model, np.empty((0, 3)))
        assert out.shape == (0,)

    def test_single_row(self):
        rng = np.random.default_rng(31)
        model = _random_model(rng)
        x = rng.standard_normal(3)
        assert forward_batch(model, x[None, :])[0] == forward(model, x)

    def test_bit_identical_to_scalar_loop(self):
        rng = np.random.default_rng(32)
        model = _random_model(rng)
        X = rng.standard_normal((100, 3))
        batch = forward_batch(model, X)
        loop = np.array([forward(model, row) for row in X])
        assert np.array_equal(batch, loop)

    def test_predict_batch_agrees(self):
        rng = np.random.default_rng(33)
        model = _random_model(rng, dim=2, m=11, n_basis=7)
        X = rng.standard_normal((57, 2))
        fused = predict_batch(model, X)
        exact = forward_batch(model, X)
        assert np.allclose(fused, exact, rtol=1e-12, atol=1e-12)


class TestBaselines:
    def test_relu_dead_inputs(self):
        bank = FeatureBank(weights=np.array([[1.0], [2.0]]), dim=1, n_features=2, seed=0)
        model = BaselineRfModel(bank=bank, activation_kind="relu", v=np.ones(2))
        assert baseline_forward(model, np.array([-1.0])) == 0.0

    def test_tanh_zero_weights(self):
        bank = sample_features(2, 8, seed=6)
        model = BaselineRfModel(bank=bank, activation_kind="tanh", v=np.zeros(8))
        assert baseline_forward(model, np.ones(2)) == 0.0

    def test_rbf2_peak(self):
        bank = FeatureBank(weights=np.array([[1.5]]), dim=1, n_features=1, seed=0)
        model = BaselineRfModel(bank=bank, activation_kind="rbf2", v=np.array([1.0]))
        assert baseline_forward(model, np.array([1.0])) == 1.0

    def test_rbf1_matches_formula(self):
        bank = FeatureBank(weights=np.array([[2.0], [-1.0]]), dim=1, n_features=2, seed=0)
        model = BaselineRfModel(bank=bank, activation_kind="rbf1", v=np.array([1.0, 3.0]))
        x = np.array([0.4])
        want = (math.exp(-0.8**2 / 0.5) * 1.0 + math.exp(-0.4**2 / 0.5) * 3.0) / 2.0
        assert baseline_forward(model, x) == pytest.approx(want, rel=1e-14)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(40)
        bank = sample_features(3, 12, seed=7)
        model = BaselineRfModel(bank=bank, activation_kind="tanh", v=rng.standard_normal(12))
        X = rng.standard_normal((9, 3))
        batch = baseline_forward_batch(model, X)
        for i in range(9):
            assert batch[i] == pytest.approx(baseline_forward(model, X[i]), rel=1e-14)

    def test_unknown_activation(self):
        bank = sample_features(2, 4, seed=8)
        with pytest.raises(ValueError):
            BaselineRfModel(bank=bank, activation_kind="gelu", v=np.zeros(4))


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(50)
        model = _random_model(rng, dim=2, m=9, n_basis=6)
        path = tmp_path / "model.npz"
        save_model(model, path)
        loaded = load_model(path)
        assert np.array_equal(loaded.a, model.a)
        assert np.array_equal(loaded.v, model.v)
        assert np.array_equal(loaded.bank.weights, model.bank.weights)
        X = rng.standard_normal((20, 2))
        assert np.array_equal(forward_batch(loaded, X), forward_batch(model, X))

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "junk.npz"
        path.write_bytes(b"not an npz file")
        with pytest.raises((ValueError, OSError)):
            load_model(path)

    def test_load_rejects_missing_fields(self, tmp_path):
        path = tmp_path / "short.npz"
        np.savez(path, format_version=np.int64(1), dim=np.int64(2))
        with pytest.raises(ValueError):
            load_model(path)


class TestValidation:
    def test_model_shape_checks(self):
        bank = sample_features(2, 3, seed=9)
        grid = build_grid(-1.0, 1.0, 4, 0.2)
        with pytest.raises(ValueError):
            RflafModel(bank=bank, grid=grid, a=np.zeros(5), v=np.zeros(3))
        with pytest.raises(ValueError):
            RflafModel(bank=bank, grid=grid, a=np.zeros(4), v=np.zeros(2))
        with pytest.raises(ValueError):
            RflafModel(bank=bank, grid=grid, a=np.array([np.nan] * 4), v=np.zeros(3))

    def test_bank_shape_check(self):
        with pytest.raises(ValueError):
            FeatureBank(weights=np.zeros((3, 2)), dim=2, n_features=4, seed=0)
