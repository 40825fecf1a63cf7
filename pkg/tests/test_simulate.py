import numpy as np
import pytest

from noclick.detection import EfficiencyGrid, model_noclick
from noclick.simulate import (NoClickDataset, NoiseSpec, exact_dataset, noclick_probs_for,
                              perturb_dataset, simulate_dataset)
from noclick.states import PhotonDistribution, SourceModel

GRID = EfficiencyGrid([0.2, 0.5, 0.8])
TWO_LEVEL = PhotonDistribution(np.array([0.7, 0.3]))


def test_seeded_determinism():
    model = SourceModel.displaced_thermal(30.0, 256.0)
    a = simulate_dataset(model, GRID, 10**6, seed=11)
    b = simulate_dataset(model, GRID, 10**6, seed=11)
    assert np.array_equal(a.no_clicks, b.no_clicks)
    assert not np.array_equal(a.no_clicks, simulate_dataset(model, GRID, 10**6, seed=12).no_clicks)


def test_vacuum_never_clicks():
    data = simulate_dataset(SourceModel.coherent(0.0), GRID, 1000, seed=0)
    assert np.array_equal(data.no_clicks, data.trials)
    assert np.array_equal(data.freqs, [1.0, 1.0, 1.0])


def test_binomial_concentration():
    grid = EfficiencyGrid([0.5, 0.9])
    n = 10**7
    bound = 3 * np.sqrt(0.85 * 0.15 / n)
    hits = [abs(simulate_dataset(TWO_LEVEL, grid, n, seed=s).freqs[0] - 0.85) <= bound
            for s in range(300)]
    assert np.mean(hits) >= 0.99


@pytest.mark.parametrize("trials,width", [(10**4, 0.05), (10**6, 0.005)])
def test_law_of_large_numbers(trials, width):
    model = SourceModel.multimode(2.0, [1.0, 4.0])
    data = simulate_dataset(model, GRID, trials, seed=3)
    # 5-sigma envelope, sigma <= 0.5/sqrt(trials)
    assert np.max(np.abs(data.freqs - model_noclick(model, GRID.etas))) <= width * 0.5


def test_points_use_independent_streams():
    # a point's counts do not depend on the other points of the grid
    model = SourceModel.thermal(2.0)
    a = simulate_dataset(model, EfficiencyGrid([0.1, 0.4]), 5000, seed=9)
    b = simulate_dataset(model, EfficiencyGrid([0.1, 0.7]), 5000, seed=9)
    assert a.no_clicks[0] == b.no_clicks[0]


def test_exact_dataset_uses_closed_form():
    model = SourceModel.displaced_thermal(30.0, 256.0)
    data = exact_dataset(model, GRID)
    assert data.is_exact and data.trials is None
    assert np.array_equal(data.freqs, model_noclick(model, GRID.etas))


def test_probs_for_distribution():
    assert np.allclose(noclick_probs_for(TWO_LEVEL, GRID), [0.94, 0.85, 0.76], atol=1e-15)
    with pytest.raises(TypeError):
        noclick_probs_for("laser", GRID)


def test_zero_noise_is_identity():
    data = simulate_dataset(TWO_LEVEL, GRID, 1000, seed=1)
    assert perturb_dataset(data, NoiseSpec()) is data


def test_systematic_bias_scales_and_clamps():
    data = NoClickDataset(GRID, np.array([0.5, 0.995, 0.2]))
    out = perturb_dataset(data, NoiseSpec(systematic_bias=0.01))
    assert np.allclose(out.freqs, [0.505, 1.0, 0.202], rtol=0, atol=1e-15)


def test_random_jitter_variance():
    data = NoClickDataset(EfficiencyGrid(np.linspace(0.01, 0.99, 100)), np.full(100, 0.5))
    rel = np.concatenate([perturb_dataset(data, NoiseSpec(random_rel_amp=0.01, seed=s)).freqs / 0.5 - 1
                          for s in range(100)])
    assert rel.size == 10**4
    assert np.std(rel) == pytest.approx(0.01 / np.sqrt(3), rel=0.03)
    assert np.max(np.abs(rel)) <= 0.01


def test_counts_rescaled_consistently():
    data = NoClickDataset.from_counts(GRID, 1000, [900, 500, 100])
    out = perturb_dataset(data, NoiseSpec(systematic_bias=0.1))
    assert np.array_equal(out.no_clicks, [990, 550, 110])
    assert np.array_equal(out.freqs, out.no_clicks / out.trials)


@pytest.mark.parametrize("kwargs", [
    dict(freqs=[0.5, 0.5]),
    dict(freqs=[0.5, 1.2, 0.1]),
    dict(freqs=[0.5, 0.5, 0.5], trials=[10, 10, 10]),
    dict(freqs=[0.5, 0.5, 0.5], trials=[10, 10, 10], no_clicks=[5, 5, 11]),
    dict(freqs=[0.5, 0.5, 0.6], trials=[10, 10, 10], no_clicks=[5, 5, 5]),
])
def test_invalid_datasets(kwargs):
    with pytest.raises(ValueError):
        NoClickDataset(GRID, **kwargs)


def test_noise_amplitude_nonnegative():
    with pytest.raises(ValueError):
        NoiseSpec(random_rel_amp=-0.1)


def test_trials_positive():
    with pytest.raises(ValueError):
        simulate_dataset(TWO_LEVEL, GRID, 0, seed=0)
