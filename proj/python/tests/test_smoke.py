import math

import pytest

import cilab

BETA = [0.6, 0.25, 0.15]
UNIFORM = [1 / 3, 1 / 3, 1 - 2 / 3]


def test_hand_fixture():
    model = cilab.FactorModel.from_weights(BETA)
    assert cilab.expected_rewards(model, UNIFORM, "binary", "exact") == pytest.approx([1.0, 0.5, 0.5], abs=1e-12)
    assert cilab.expected_rewards(model, UNIFORM, "market", "exact") == pytest.approx([1.75, 0.625, 0.625], abs=1e-12)
    assert cilab.collective_accuracy(model, UNIFORM, "exact") == pytest.approx(0.75, abs=1e-12)


def test_sampled_model_is_sorted_and_normalised():
    model = cilab.FactorModel.sample(50, 3)
    beta = model.beta
    assert len(model) == 50
    assert math.isclose(sum(beta), 1.0, abs_tol=1e-12)
    assert beta == sorted(beta, reverse=True)


def test_minority_stationary_at_beta():
    model = cilab.FactorModel.sample(200, 1)
    assert cilab.stationarity_check(model, "minority", model.beta) < 1e-6
    assert cilab.collective_accuracy(model, model.beta) >= 1 - 1e-9


def test_mc_matches_exact():
    model = cilab.FactorModel.from_weights(BETA)
    est = cilab.mc_expected_rewards(model, UNIFORM, "market", 200000, seed=5)
    for (mean, se), ref in zip(est, [1.75, 0.625, 0.625]):
        assert abs(mean - ref) <= 4 * se


def test_integrate_binary_concentrates():
    model = cilab.FactorModel.sample(20, 2)
    traj = cilab.integrate(model, "binary")
    assert traj["states"][-1][0] > 0.99
    assert traj["diversity"][-1] < 0.05
    assert len(traj["times"]) == len(traj["accuracy"])


def test_bad_input_raises():
    model = cilab.FactorModel.from_weights(BETA)
    with pytest.raises(ValueError):
        cilab.expected_rewards(model, [0.5, 0.5], "binary")
    with pytest.raises(ValueError):
        cilab.expected_rewards(model, UNIFORM, "lottery")


def test_version_string():
    assert cilab.__version__
