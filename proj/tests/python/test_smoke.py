import math

import numpy as np
import pytest

import madopt


@pytest.fixture(scope="module")
def plant():
    rows, _ = madopt.generate(800, 3)
    return madopt.Plant(rows, max_epochs=300)


def test_generate_shapes():
    rows, names = madopt.generate(50, 1)
    assert rows.shape == (50, 12)
    assert names == madopt.variable_names()
    assert "Power" in names


def test_confidence_interval_linear():
    lo, hi, width = madopt.confidence_interval([float(i) for i in range(1, 1001)])
    assert lo == pytest.approx(25.975)
    assert hi == pytest.approx(975.025)
    assert width == pytest.approx(hi - lo)


def test_mahalanobis_at_mean_is_zero():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(500, 4))
    d = madopt.mahalanobis(X, X.mean(axis=0, keepdims=True))
    assert d[0] == pytest.approx(0.0, abs=1e-12)


def test_shapley_linear_is_exact_and_efficient():
    rng = np.random.default_rng(1)
    bg = rng.normal(size=(40, 3))
    coef = np.array([2.0, -1.0, 0.0])
    x = np.array([1.0, 2.0, 3.0])
    phi, se, base = madopt.shapley_linear(coef, bg, x, 100, 5)
    expected = coef * (x - bg.mean(axis=0))
    np.testing.assert_allclose(phi, expected, atol=1e-12)
    assert phi[2] == 0.0
    assert phi.sum() + base == pytest.approx(coef @ x)
    assert np.all(se == 0.0)


def test_plant_pipeline(plant):
    m = plant.metrics()
    assert set(m) == {"Power", "TE", "THR"}
    assert all(math.isfinite(v["rmse"]) for v in m.values())

    sol = plant.optimize(330.0, mode="madopt", tau=3.0, n_starts=4)
    assert "feasible" in sol
    x = np.array([sol["solution"]["x_eng"][n] for n in plant.input_names()])
    if sol["feasible"]:
        assert plant.distance(x) <= 3.0 + 1e-6

    mc = plant.monte_carlo(x, rounds=3, n_samples=100)
    assert len(mc["round_seeds"]) == 3
    assert mc["summary"]["Power"]["rounds_mean_within_half_width"] == 3


def test_invalid_tau_raises(plant):
    with pytest.raises(madopt.MadoptError):
        plant.optimize(330.0, tau=-1.0)
