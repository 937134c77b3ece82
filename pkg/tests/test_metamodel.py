import json

import numpy as np
import pytest

from quantgen import (
    Dataset,
    InventoryBasis,
    fit_hermite,
    fit_linear,
    generate,
    ks_statistic,
    load_model,
    reference_synthetic,
    save_model,
)
from quantgen.errors import ParameterError, ShapeError
from quantgen.metamodel import default_m, model_from_dict, model_to_dict
from quantgen.simulate import family, gen_synthetic

X_STAR = (4.0, -1.0, 3.0)


class TestFitCounts:
    def test_reference_grid_counts(self, normal_model_10k):
        assert normal_model_10k.fit_meta.regressions == 32
        assert normal_model_10k.fit_meta.gradients == 14
        assert normal_model_10k.coeffs.levels.size == 32

    def test_linear_baseline_counts(self, normal_data_10k):
        model = fit_linear(normal_data_10k, m=100)
        assert model.fit_meta.regressions == 99
        assert model.grads.empty

    def test_default_m(self):
        assert default_m(10_000) == 100
        assert default_m(3) == 2

    def test_grid_levels_equal_coeff_levels(self, normal_model_10k):
        assert np.array_equal(normal_model_10k.grid.levels, normal_model_10k.coeffs.levels)
        central = normal_model_10k.grid.central_levels
        assert np.array_equal(normal_model_10k.grads.levels, central)


class TestNoiseFree:
    def test_coefficient_rows_recover_truth(self):
        rng = np.random.default_rng(31)
        X = np.column_stack([np.ones(400), rng.uniform(0, 5, 400), rng.uniform(-1, 1, 400)])
        beta0 = np.array([1.0, 0.5, -2.0])
        model = fit_hermite(Dataset(X, X @ beta0), m=20)
        assert np.allclose(model.coeffs.betas, beta0[None, :], atol=1e-6)

    def test_linear_variant_exact_generator(self):
        rng = np.random.default_rng(32)
        X = np.column_stack([np.ones(300), rng.uniform(0, 5, 300)])
        beta0 = np.array([2.0, 1.5])
        model = fit_linear(Dataset(X, X @ beta0), m=25)
        sample = generate(model, (2.0,), k=500, seed=5)
        assert np.allclose(sample, 2.0 + 1.5 * 2.0, atol=1e-6)


class TestGenerate:
    def test_k_zero(self, small_model):
        assert generate(small_model, X_STAR, 0, seed=1).size == 0

    def test_negative_k(self, small_model):
        with pytest.raises(ParameterError):
            generate(small_model, X_STAR, -1, seed=1)

    def test_determinism(self, small_model):
        a = generate(small_model, X_STAR, 1000, seed=9)
        b = generate(small_model, X_STAR, 1000, seed=9)
        assert np.array_equal(a, b)
        c = generate(small_model, X_STAR, 1000, seed=10)
        assert not np.array_equal(a, c)

    def test_dimension_mismatch(self, small_model):
        with pytest.raises(ShapeError) as err:
            generate(small_model, (1.0, 2.0), 10, seed=0)
        assert "3" in str(err.value)

    def test_m_two_constant_generator(self):
        data = gen_synthetic(family("normal"), 500, seed=3)
        model = fit_linear(data, m=2)
        x = model.expand(X_STAR)
        level_value = float(model.coeffs.betas[0] @ x)
        sample = generate(model, X_STAR, 200, seed=4)
        assert np.allclose(sample, level_value, atol=1e-12)

    def test_normal_family_ks_against_analytic_law(self, normal_model_10k):
        # mu(x*) = 8.5, sigma(x*) = 1.35 at x* = (1, 4, -1, 3)
        sample = generate(normal_model_10k, X_STAR, 100_000, seed=21)
        ref = reference_synthetic(family("normal"), X_STAR, 100_000, seed=22)
        assert ks_statistic(sample, ref) <= 0.02
        assert abs(np.mean(sample) - 8.5) < 0.05
        assert abs(np.std(sample) - 1.35) < 0.05

    def test_linear_baseline_comparable_ks_at_dense_grid(self, normal_data_10k):
        # at m = 100 the dense-grid baseline reaches the same accuracy ballpark
        model = fit_linear(normal_data_10k, m=100)
        sample = generate(model, X_STAR, 100_000, seed=23)
        ref = reference_synthetic(family("normal"), X_STAR, 100_000, seed=24)
        assert ks_statistic(sample, ref) <= 0.02


class TestTimings:
    def test_stage_accounting(self, normal_model_10k):
        t = normal_model_10k.fit_meta.timings
        parts = t["regression"] + t["gradient"] + t["assembly"]
        assert abs(t["total"] - parts) <= 0.05 * t["total"] + 1e-3
        assert t["regression"] >= 0.5 * t["total"]


class TestSerialization:
    def test_roundtrip_generation_identical(self, small_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(small_model, str(path))
        loaded = load_model(str(path))
        a = generate(small_model, X_STAR, 5000, seed=77)
        b = generate(loaded, X_STAR, 5000, seed=77)
        assert np.array_equal(a, b)

    def test_file_is_versioned_json(self, small_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(small_model, str(path))
        doc = json.loads(path.read_text())
        assert doc["format"] == "quantgen-model"
        assert doc["version"] == 1
        assert doc["variant"] == "hermite"
        assert len(doc["coefficients"]["levels"]) == small_model.coeffs.levels.size

    def test_version_mismatch_rejected(self, small_model):
        doc = model_to_dict(small_model)
        doc["version"] = 99
        from quantgen.errors import ModelFormatError

        with pytest.raises(ModelFormatError):
            model_from_dict(doc)

    def test_foreign_json_rejected(self):
        from quantgen.errors import ModelFormatError

        with pytest.raises(ModelFormatError):
            model_from_dict({"hello": "world"})

    def test_inventory_basis_roundtrip(self, tmp_path):
        from quantgen.simulate import inventory_dataset

        data = inventory_dataset(400, seed=6)
        model = fit_hermite(data, m=10, basis=InventoryBasis())
        path = tmp_path / "inv.json"
        save_model(model, str(path))
        loaded = load_model(str(path))
        a = generate(model, (320.0, 420.0, 330.0), 300, seed=1)
        b = generate(loaded, (320.0, 420.0, 330.0), 300, seed=1)
        assert np.array_equal(a, b)
