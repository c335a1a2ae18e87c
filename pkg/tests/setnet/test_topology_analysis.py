import numpy as np
import pytest
from scipy import special, stats

from setnet.analysis.connectivity import ConnectivityMap, visible_connectivity_map
from setnet.analysis.powerlaw import (
    fit_power_law,
    null_hypothesis_p_value,
    null_hypothesis_test,
    power_law_report,
    sample_discrete_power_law,
    select_d_min,
)
from setnet.errors import ShapeMismatchError, UndefinedFitError
from setnet.sparse.topology import (
    EvolutionConfig,
    SparseWeights,
    WeightInitSpec,
    init_erdos_renyi,
)


def _barabasi_albert_degrees(n_nodes: int, m: int, rng) -> np.ndarray:
    degrees = np.zeros(n_nodes, dtype=np.int64)
    # every link end is listed once, uniform draws from it are degree-proportional
    targets = list(range(m))
    ends = []
    for new in range(m, n_nodes):
        chosen = set()
        while len(chosen) < m:
            chosen.add(ends[rng.integers(len(ends))] if ends else targets[len(chosen)])
        for t in chosen:
            degrees[t] += 1
            degrees[new] += 1
            ends.extend([t, new])
    return degrees


def test_sampler_matches_pmf():
    gamma, d_min = 2.5, 2
    samples = sample_discrete_power_law(gamma, d_min, 200_000, rng=0)
    assert samples.min() >= d_min
    norm = special.zeta(gamma, d_min)
    for d in (2, 3, 5, 10):
        expected = d**-gamma / norm
        assert np.mean(samples == d) == pytest.approx(expected, rel=0.05), d


def test_sampler_beyond_table():
    samples = sample_discrete_power_law(1.5, 1, 20_000, rng=1, table_max=50)
    assert samples.max() > 51
    assert np.all(samples >= 1)
    with pytest.raises(ValueError):
        sample_discrete_power_law(1.0, 1, 10)


@pytest.mark.parametrize("seed", range(5))
def test_fit_recovers_gamma(seed):
    degrees = sample_discrete_power_law(2.5, 2, 10_000, rng=seed)
    gamma_hat = fit_power_law(degrees, d_min=2)
    print(f"seed={seed} gamma_hat={gamma_hat:.4f}")
    assert 2.4 <= gamma_hat <= 2.6


def test_fit_approximate_at_larger_d_min():
    degrees = sample_discrete_power_law(2.5, 6, 20_000, rng=3)
    assert fit_power_law(degrees, 6, method="approximate") == pytest.approx(2.5, abs=0.1)
    with pytest.raises(ValueError):
        fit_power_law(degrees, 6, method="bogus")


def test_fit_barabasi_albert():
    degrees = _barabasi_albert_degrees(5000, 3, np.random.default_rng(0))
    gamma_hat = fit_power_law(degrees, d_min=3)
    assert 2.0 < gamma_hat < 3.0


def test_fit_is_scale_consistent():
    degrees = sample_discrete_power_law(2.2, 2, 3000, rng=5)
    once = fit_power_law(degrees, 2)
    twice = fit_power_law(np.concatenate([degrees, degrees]), 2)
    assert twice == pytest.approx(once, rel=1e-9)


@pytest.mark.parametrize(
    "degrees",
    [
        pytest.param(np.full(100, 7), id="all_equal"),
        pytest.param(np.ones(100, dtype=int), id="empty_tail"),
        pytest.param(np.array([1] * 50 + list(range(2, 11))), id="short_tail"),
    ],
)
def test_fit_undefined(degrees):
    with pytest.raises(UndefinedFitError):
        fit_power_law(degrees, d_min=2)


def test_select_d_min():
    degrees = sample_discrete_power_law(2.5, 1, 5000, rng=2)
    d_min = select_d_min(degrees)
    assert 1 <= d_min <= degrees.max() // 4
    assert 2.3 <= fit_power_law(degrees, d_min) <= 2.7
    with pytest.raises(UndefinedFitError):
        select_d_min(np.full(50, 8))


def test_p_value_preconditions():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        null_hypothesis_p_value(rng.poisson(20, 29), rng=rng, n_trials=1000)
    with pytest.raises(ValueError):
        null_hypothesis_p_value(rng.poisson(20, 100), 99, rng, n_trials=1000)
    with pytest.raises(UndefinedFitError):
        null_hypothesis_p_value(np.full(100, 20), rng=rng, n_trials=1000)


def test_p_value_calibrated_under_null():
    rng = np.random.default_rng(2024)
    p_values = np.array(
        [
            null_hypothesis_p_value(rng.binomial(1000, 0.02, 1000), 1000, rng, n_trials=1000)
            for _ in range(200)
        ]
    )
    ks = stats.kstest(p_values, "uniform").statistic
    assert np.all((p_values >= 0) & (p_values <= 1))
    assert ks < 0.1
    assert np.mean(p_values > 0.05) >= 0.9


def test_p_value_power():
    rng = np.random.default_rng(7)
    p_values = [
        null_hypothesis_p_value(
            sample_discrete_power_law(2.3, 1, 1000, rng), 200, rng, n_trials=100_000
        )
        for _ in range(20)
    ]
    assert np.mean(np.array(p_values) < 0.05) >= 0.95


def test_p_value_decreases_with_mixing():
    rng = np.random.default_rng(11)
    pure, mixed = [], []
    for _ in range(15):
        er = rng.binomial(1000, 0.02, 1000)
        pure.append(null_hypothesis_p_value(er, 200, rng, n_trials=1000))
        pl = sample_discrete_power_law(2.3, 1, 500, rng)
        mix = np.concatenate([er[:500], pl])
        mixed.append(null_hypothesis_p_value(mix, 200, rng, n_trials=100_000))
    assert np.median(pure) > np.median(mixed)


def test_binomial_null_on_er_layer():
    p_values = []
    for seed in range(5):
        w = init_erdos_renyi(1000, 1000, EvolutionConfig(epsilon=20), WeightInitSpec(), rng=seed)
        degrees = np.diff(w.matrix.indptr)
        p_values.append(null_hypothesis_p_value(degrees, 300, rng=seed, n_trials=1000))
    assert sum(p > 0.05 for p in p_values) >= 3


def test_binomial_null_rejects_impossible_degrees():
    rng = np.random.default_rng(0)
    degrees = np.concatenate([rng.binomial(50, 0.3, 100), [60]])
    p_value, statistic, _ = null_hypothesis_test(degrees, 100, rng, n_trials=50)
    assert p_value == 0.0
    assert statistic == np.inf


def test_null_needs_the_number_of_partners():
    degrees = np.random.default_rng(5).binomial(1000, 0.02, 500)
    with pytest.raises(TypeError):
        null_hypothesis_p_value(degrees, 100, 0)  # pylint: disable=missing-kwoa
    # the binomial null of a 1000-partner layer differs from its Poisson limit
    _, _, binomial_p = null_hypothesis_test(degrees, 100, 0, n_trials=1000)
    _, _, poisson_mean = null_hypothesis_test(degrees, 100, 0, n_trials=None)
    assert 0 < binomial_p < 1
    assert binomial_p * 1000 == pytest.approx(poisson_mean, rel=0.05)

def test_p_value_deterministic_per_seed():
    degrees = np.random.default_rng(3).poisson(15, 400)
    first = null_hypothesis_p_value(degrees, 500, rng=9, n_trials=1000)
    assert first == null_hypothesis_p_value(degrees, 500, rng=9, n_trials=1000)


def test_power_law_report():
    degrees = sample_discrete_power_law(2.5, 2, 2000, rng=4)
    report = power_law_report(degrees, d_min=2, n_monte_carlo=100, rng=0, n_trials=100_000)
    assert report.gamma_hat > 1
    assert 0 <= report.p_value <= 1
    assert report.n_tail == 2000
    assert report.histogram.sum() == 2000
    assert set(report.to_dict()) == {"gamma_hat", "d_min", "p_value", "n_tail", "statistic"}
    no_test = power_law_report(degrees, d_min=None, with_p_value=False)
    assert np.isnan(no_test.p_value)
    with pytest.raises(ValueError, match="n_trials"):
        power_law_report(degrees, d_min=2, n_monte_carlo=100, rng=0)


def test_connectivity_fully_connected():
    w = SparseWeights.fully_connected(np.ones((4, 3)))
    cmap = visible_connectivity_map(w, 2, 2)
    np.testing.assert_array_equal(cmap.grid, np.full((2, 2), 3))
    assert cmap.shape == (2, 2)
    assert cmap.total_degree == w.nnz
    with pytest.raises(ShapeMismatchError):
        visible_connectivity_map(w, 3, 2)


@pytest.mark.parametrize("seed", range(10))
def test_connectivity_conserves_degree(seed):
    w = init_erdos_renyi(784, 100, EvolutionConfig(epsilon=5), WeightInitSpec(), rng=seed)
    assert visible_connectivity_map(w, 28, 28).total_degree == w.nnz


def test_connectivity_export(tmp_path):
    cmap = ConnectivityMap(np.array([[0, 5], [10, 20]]))
    text_file = cmap.write_text(tmp_path / "maps" / "cmap.txt")
    assert text_file.read_text(encoding="utf-8") == "0 5\n10 20\n"
    np.testing.assert_array_equal(ConnectivityMap.read_text(text_file).grid, cmap.grid)

    raw = cmap.write_pgm(tmp_path / "cmap.pgm").read_bytes()
    header = b"P5\n2 2\n255\n"
    assert raw.startswith(header)
    assert list(raw[len(header) :]) == [0, 64, 128, 255]
    assert not np.any(ConnectivityMap(np.full((3, 3), 4)).to_gray8())


def test_connectivity_region_means():
    grid = np.ones((28, 28), dtype=int)
    grid[7:21, 7:21] = 5
    center, border = ConnectivityMap(grid).region_means(14, 4)
    assert center == 5.0
    assert border == 1.0
    with pytest.raises(ShapeMismatchError):
        ConnectivityMap(grid).region_means(30, 4)
