import math

import numpy as np
import pytest

from robustpois.model import HyperParams, ModelParams, ObservationSet, forward_means
from robustpois.sim import (
    REFERENCE_A,
    REFERENCE_A0,
    CorruptionSpec,
    TrueModel,
    derive_seed,
    inject_missing,
    inject_outliers,
    make_rng,
    poisson_sample,
    run_experiment,
    run_single,
    simulate,
    simulate_with_means,
)


def test_poisson_zero_mean():
    rng = make_rng(0)
    assert all(poisson_sample(0.0, rng) == 0 for _ in range(100))


@pytest.mark.parametrize("mean", [-1.0, math.inf, math.nan])
def test_poisson_rejects(mean):
    with pytest.raises(ValueError):
        poisson_sample(mean, make_rng(0))


@pytest.mark.parametrize("mean", [3.0, 25.0])
def test_poisson_moments(mean):
    rng = make_rng(42)
    n = 100_000
    x = np.array([poisson_sample(mean, rng) for _ in range(n)], dtype=float)
    assert abs(x.mean() - mean) <= 4 * math.sqrt(mean / n)
    # var of the sample variance for Poisson: (mean + 2 mean^2) / n
    assert abs(x.var(ddof=1) - mean) <= 4 * math.sqrt((mean + 2 * mean**2) / n)
    assert np.all(x == np.round(x)) and np.all(x >= 0)


def test_simulate_constant_mean():
    y = simulate(TrueModel(ModelParams(math.log(4.0)), 100_000, 3))
    assert abs(y.mean() - 3.0) <= 4 * math.sqrt(3.0 / y.size)


def test_simulate_reproducible_and_integer():
    m = TrueModel(ModelParams(REFERENCE_A0, REFERENCE_A), 500, 11)
    a, b = simulate(m), simulate(m)
    np.testing.assert_array_equal(a, b)
    assert np.all(a >= 0) and np.all(a == np.round(a))
    assert not np.array_equal(a, simulate(TrueModel(m.params, 500, 12)))


@pytest.mark.parametrize(
    "params", [ModelParams(REFERENCE_A0, REFERENCE_A), ModelParams(0.4, [0.3, -0.2], [0.5, 0.1])]
)
def test_simulated_means_reproduced_exactly(params):
    y, u = simulate_with_means(TrueModel(params, 800, 5))
    np.testing.assert_array_equal(forward_means(params, y), u)


def test_simulate_order_check():
    m = TrueModel(ModelParams(0.0, [0.1]), 5)
    with pytest.raises(ValueError):
        simulate(m, p=2)
    assert simulate(m, p=1, q=0).size == 5


def test_true_model_validation():
    with pytest.raises(ValueError):
        TrueModel(ModelParams(0.0), 0)


@pytest.mark.parametrize(
    "kw",
    [
        {"observed_fraction": 0.0},
        {"observed_fraction": 1.1},
        {"contamination_fraction": 1.0},
        {"contamination_fraction": -0.1},
        {"outlier_value": -1.0},
    ],
)
def test_corruption_validation(kw):
    with pytest.raises(ValueError):
        CorruptionSpec(**kw)


def test_missing_full():
    y = np.arange(10.0)
    obs = inject_missing(y, CorruptionSpec(1.0), make_rng(0))
    assert obs.mask.all()
    np.testing.assert_array_equal(obs.values, y)


def test_missing_half():
    y = np.arange(1000.0)
    obs = inject_missing(y, CorruptionSpec(0.5), make_rng(1))
    assert obs.mask.sum() == 500
    np.testing.assert_array_equal(obs.values, y[obs.mask])
    observed, missing = set(np.flatnonzero(obs.mask)), set(np.flatnonzero(~obs.mask))
    assert observed.isdisjoint(missing) and observed | missing == set(range(1000))


def test_missing_rounds_half_up():
    obs = inject_missing(np.zeros(10), CorruptionSpec(0.25), make_rng(2))
    assert obs.mask.sum() == 3


def test_outliers_none():
    obs = ObservationSet.from_series(np.arange(5.0))
    out, idx = inject_outliers(obs, CorruptionSpec(), make_rng(0))
    assert out == obs and idx.size == 0


def test_outliers_count_and_value():
    y = np.zeros(2000)
    obs = inject_missing(y, CorruptionSpec(0.5, 0.05), make_rng(3))
    out, idx = inject_outliers(obs, CorruptionSpec(0.5, 0.05), make_rng(4))
    assert idx.size == 50 == np.unique(idx).size
    assert np.all(obs.mask[idx])
    np.testing.assert_array_equal(out.full()[idx], 20.0)
    assert np.sum(out.values == 20.0) == 50
    assert np.all(np.diff(idx) > 0)


def test_seed_derivation():
    assert derive_seed(7, 3, 0) == derive_seed(7, 3, 0)
    seeds = {derive_seed(7, i, k) for i in range(50) for k in range(2)}
    assert len(seeds) == 100
    assert 0 <= derive_seed(2**64 - 1, 5) < 2**64
    a = make_rng(5, 1).integers(0, 2**62, 4)
    np.testing.assert_array_equal(a, make_rng(5, 1).integers(0, 2**62, 4))


HYPER = HyperParams(2, 0, lam=5.0, mu=5.0, tau=1e-5, tau_y=1e-2)
MODEL = TrueModel(ModelParams(1.0, [0.3, -0.2]), 200, 21)
SPEC = CorruptionSpec(0.8, 0.02, seed=22)


def test_run_single_is_independent_of_other_runs():
    a = run_single(3, MODEL, SPEC, HYPER)
    summary = run_experiment(MODEL, SPEC, HYPER, M=4)
    np.testing.assert_array_equal(summary.estimates[3], a.estimate)
    assert summary.iterations[3] == a.iterations


def test_single_run_summary():
    s = run_experiment(MODEL, SPEC, HYPER, M=1)
    stats = s.stats()
    assert list(stats) == ["a0", "a1", "a2"]
    for name, col in zip(s.names, s.estimates[0]):
        st = stats[name]
        assert st["min"] == st["q1"] == st["median"] == st["q3"] == st["max"] == col
    assert stats["a1"]["true"] == 0.3


def test_summary_order_and_errors():
    s = run_experiment(MODEL, SPEC, HYPER, M=5, init="mean")
    for st in s.stats().values():
        assert st["min"] <= st["q1"] <= st["median"] <= st["q3"] <= st["max"]
    np.testing.assert_allclose(s.abs_errors(), np.abs(s.estimates - s.truth))
    np.testing.assert_allclose(s.run_errors(), np.linalg.norm(s.estimates - s.truth, axis=1))
    assert s.M == 5 and s.ok.all() and not s.failures


def test_parallel_matches_serial():
    a = run_experiment(MODEL, SPEC, HYPER, M=3, workers=1)
    b = run_experiment(MODEL, SPEC, HYPER, M=3, workers=2)
    np.testing.assert_array_equal(a.estimates, b.estimates)
    np.testing.assert_array_equal(a.iterations, b.iterations)
    np.testing.assert_array_equal(a.objectives, b.objectives)


def test_failed_runs_recorded():
    bad = HyperParams(2, 0, lam=5.0, mu=5.0, tau=1.0, max_iters=50)
    s = run_experiment(MODEL, SPEC, bad, M=2, solver="palm")
    assert set(s.failures) == {0, 1}
    assert s.failures[0].split(":")[0] in {"DivergenceError", "NumericalRangeError"}
    assert np.all(np.isnan(s.estimates))
    assert s.stats()["a0"] is None


def test_overparameterised_truth_padding():
    s = run_experiment(MODEL, SPEC, HyperParams(4, 1, lam=5.0, mu=5.0, tau=1e-5, max_iters=3), M=1)
    np.testing.assert_array_equal(s.truth, [1.0, 0.3, -0.2, 0.0, 0.0, 0.0])
    assert s.names == ["a0", "a1", "a2", "a3", "a4", "b1"]


def test_experiment_rejects_zero_runs():
    with pytest.raises(ValueError):
        run_experiment(MODEL, SPEC, HYPER, M=0)
