import itertools

import numpy as np
import pytest
from scipy.special import expit, logsumexp

from setnet.analysis.connectivity import visible_connectivity_map
from setnet.data.dataset import Dataset
from setnet.data.loaders import load_idx
from setnet.data.synthetic import make_synthetic
from setnet.data.transforms import binarize, train_test_split
from setnet.errors import ConfigValidationError, DataFormatError, ModelTooLargeError
from setnet.iotools import read_csv_dicts
from setnet.paths import get_data_dir
from setnet.rbm import (
    AisConfig,
    RbmModel,
    RbmTrainConfig,
    RbmTrainer,
    ais_log_z,
    base_rate_biases,
    build_rbm,
    cd_gradient,
    cd_k_update,
    exact_log_z,
    free_energy,
    load_rbm_checkpoint,
    reconstruction_error,
    sample_hidden,
    sample_visible,
    save_rbm_checkpoint,
    train_set_rbm,
)
from setnet.rbm import test_log_prob as log_prob
from setnet.rbm.config import piecewise_betas
from setnet.rbm.training import RbmVelocity, train_rbm_epoch
from setnet.sparse.topology import EvolutionConfig, SparseWeights, WeightInitSpec

LN2 = np.log(2.0)


def _zero_rbm(n_v: int, n_h: int) -> RbmModel:
    w = SparseWeights.fully_connected(np.zeros((n_v, n_h)))
    return RbmModel(w, np.zeros(n_v), np.zeros(n_h))


def _random_rbm(n_v: int, n_h: int, seed: int, scale: float = 1.0, density: float = 1.0):
    rng = np.random.default_rng(seed)
    w = rng.normal(0, scale, size=(n_v, n_h)) * (rng.random((n_v, n_h)) < density)
    return RbmModel(
        SparseWeights.from_dense(w), rng.normal(0, scale, n_v), rng.normal(0, scale, n_h)
    )


def _states(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=n)))


def _joint_log_weights(rbm: RbmModel):
    """Unnormalized log P(v, h) over all visible (rows) and hidden (columns) states."""
    vs, hs = _states(rbm.n_visible), _states(rbm.n_hidden)
    w = rbm.weights.to_dense()
    logits = (vs @ rbm.visible_bias)[:, None] + (hs @ rbm.hidden_bias)[None, :] + vs @ w @ hs.T
    return vs, hs, logits


def test_sample_hidden_zero_model():
    probs, samples = sample_hidden(_zero_rbm(5, 4), np.ones(5), rng=0)
    np.testing.assert_array_equal(probs, 0.5)
    assert set(np.unique(samples)) <= {0.0, 1.0}


def test_conditionals_single_link():
    rbm = RbmModel(SparseWeights.from_links(2, 2, [0], [0], [1.3]), np.zeros(2), np.zeros(2))
    probs, _ = sample_hidden(rbm, np.array([1.0, 0.0]), rng=0)
    np.testing.assert_allclose(probs, [expit(1.3), 0.5])
    probs, _ = sample_visible(rbm, np.array([1.0, 0.0]), rng=0)
    np.testing.assert_allclose(probs, [expit(1.3), 0.5])
    probs, _ = sample_visible(_zero_rbm(3, 2), np.ones(2), rng=0)
    np.testing.assert_array_equal(probs, 0.5)


@pytest.mark.parametrize("seed", range(200))
def test_conditionals_match_dense_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    n_v, n_h = (int(n) for n in rng.integers(1, 30, size=2))
    rbm = _random_rbm(n_v, n_h, seed, density=float(rng.uniform(0.1, 1.0)))
    v = (rng.random((10, n_v)) < 0.5).astype(float)
    h = (rng.random((10, n_h)) < 0.5).astype(float)
    w = rbm.weights.to_dense()
    ph, _ = sample_hidden(rbm, v, rng)
    pv, _ = sample_visible(rbm, h, rng)
    np.testing.assert_allclose(ph, expit(rbm.hidden_bias + v @ w), rtol=0, atol=1e-12)
    np.testing.assert_allclose(pv, expit(rbm.visible_bias + h @ w.T), rtol=0, atol=1e-12)


def test_cd_positive_phase_of_zero_model():
    stats = cd_gradient(_zero_rbm(4, 3), np.ones((7, 4)), cd_steps=1, rng=0)
    np.testing.assert_allclose(stats.positive_weights, 0.5)
    np.testing.assert_allclose(stats.positive_hidden, 0.5)
    np.testing.assert_array_equal(stats.positive_visible, 1.0)


def test_long_chain_cd_matches_exact_gradient():
    rbm = _random_rbm(3, 2, seed=7, scale=0.5)
    rows = np.array([[1, 1, 0], [1, 0, 0], [1, 1, 1], [0, 1, 0]], dtype=float)
    batch = np.repeat(rows, 5000, axis=0)
    stats = cd_gradient(rbm, batch, cd_steps=1000, rng=0)
    cd = np.concatenate([stats.weight_gradient, stats.visible_gradient, stats.hidden_gradient])

    vs, hs, logits = _joint_log_weights(rbm)
    p = np.exp(logits - logsumexp(logits))
    model_vh = vs.T @ p @ hs
    ph_data = expit(rbm.hidden_bias + rows @ rbm.weights.to_dense())
    data_vh = rows.T @ ph_data / rows.shape[0]
    w = rbm.weights
    exact = np.concatenate(
        [
            (data_vh - model_vh)[w.in_index, w.out_index],
            rows.mean(axis=0) - p.sum(axis=1) @ vs,
            ph_data.mean(axis=0) - p.sum(axis=0) @ hs,
        ]
    )
    cosine = cd @ exact / np.linalg.norm(cd) / np.linalg.norm(exact)
    assert cosine > 0.99


def test_cd_update_is_deterministic():
    data = (np.random.default_rng(0).random((40, 6)) < 0.3).astype(float)
    cfg = RbmTrainConfig(cd_steps=3, learning_rate=0.05)
    results = []
    for _ in range(2):
        rbm = _random_rbm(6, 5, seed=1, scale=0.1)
        velocity = RbmVelocity.zeros(rbm)
        rng = np.random.default_rng(42)
        for start in range(0, 40, 10):
            cd_k_update(rbm, data[start : start + 10], cfg, velocity, rng)
        results.append(rbm)
    a, b = results
    np.testing.assert_array_equal(a.weights.values, b.weights.values)
    np.testing.assert_array_equal(a.visible_bias, b.visible_bias)
    np.testing.assert_array_equal(a.hidden_bias, b.hidden_bias)


def test_cd_update_momentum_and_decay():
    rbm = _zero_rbm(2, 1)
    rbm.weights.values[:] = [1.0, -1.0]
    cfg = RbmTrainConfig(learning_rate=0.1, momentum=0.5, weight_decay=0.5)
    velocity = RbmVelocity.zeros(rbm)
    velocity.weights[:] = [0.2, 0.2]
    batch = np.array([[1.0, 0.0]])
    stats = cd_k_update(rbm, batch, cfg, velocity, rng=0)
    expected_v = 0.5 * 0.2 + 0.1 * (stats.weight_gradient - 0.5 * np.array([1.0, -1.0]))
    np.testing.assert_allclose(velocity.weights, expected_v)
    np.testing.assert_allclose(rbm.weights.values, np.array([1.0, -1.0]) + expected_v)


def test_free_energy_zero_model():
    assert free_energy(_zero_rbm(6, 4), np.ones(6)) == pytest.approx(-4 * LN2, abs=1e-12)


def test_free_energy_matches_enumeration():
    rbm = _random_rbm(4, 3, seed=3)
    vs, _, logits = _joint_log_weights(rbm)
    log_z = logsumexp(logits)
    marginal = logsumexp(logits, axis=1) - log_z
    np.testing.assert_allclose(-free_energy(rbm, vs) - log_z, marginal, rtol=0, atol=1e-10)


def test_free_energy_decreases_with_visible_bias():
    rbm = _random_rbm(4, 3, seed=4)
    v = np.array([1.0, 0.0, 1.0, 1.0])
    before = free_energy(rbm, v)
    rbm.visible_bias[0] += 0.5
    assert free_energy(rbm, v) < before


def test_exact_log_z_zero_model():
    assert exact_log_z(_zero_rbm(5, 4)) == pytest.approx(9 * LN2, abs=1e-12)
    assert 9 * LN2 == pytest.approx(6.2383, abs=1e-4)


@pytest.mark.parametrize("seed", range(3))
def test_exact_log_z_sides_and_enumeration(seed):
    rbm = _random_rbm(6, 5, seed)
    full = logsumexp(_joint_log_weights(rbm)[2])
    assert exact_log_z(rbm, "visible") == pytest.approx(full, abs=1e-10)
    assert exact_log_z(rbm, "hidden") == pytest.approx(full, abs=1e-10)
    assert exact_log_z(rbm) == pytest.approx(full, abs=1e-10)


def test_exact_log_z_block_enumeration():
    rbm = _random_rbm(16, 3, seed=5, scale=0.3, density=0.5)
    small_side = exact_log_z(rbm, "hidden")
    assert exact_log_z(rbm, "visible") == pytest.approx(small_side, abs=1e-9)


def test_exact_log_z_too_large():
    rbm = build_rbm(30, 21, "fixprob", EvolutionConfig(epsilon=2), rng=0)
    with pytest.raises(ModelTooLargeError):
        exact_log_z(rbm)
    with pytest.raises(ModelTooLargeError):
        exact_log_z(_zero_rbm(4, 21), "hidden")


def test_ais_base_rate_target():
    base = np.array([-1.0, 0.5, 2.0, 0.0, -0.3])
    rbm = RbmModel(SparseWeights.fully_connected(np.zeros((5, 4))), base, np.zeros(4))
    cfg = AisConfig(num_betas=50, num_chains=20, base_rate_biases=base)
    estimate, stderr = ais_log_z(rbm, cfg, rng=0)
    assert estimate == pytest.approx(exact_log_z(rbm), abs=1e-10)
    assert stderr < 1e-10


def test_ais_random_model():
    rbm = _random_rbm(5, 4, seed=11)
    estimate, stderr = ais_log_z(rbm, AisConfig(num_betas=1000, num_chains=100), rng=0)
    assert abs(estimate - exact_log_z(rbm)) <= 0.1
    assert stderr < 0.1


def _ais_errors(num_betas: int, n_models: int = 20):
    errors, stderrs = [], []
    for seed in range(n_models):
        rbm = _random_rbm(5, 4, seed=200 + seed)
        cfg = AisConfig(num_betas=num_betas, num_chains=100, base_rate_biases=rbm.visible_bias)
        estimate, stderr = ais_log_z(rbm, cfg, rng=seed)
        errors.append(estimate - exact_log_z(rbm))
        stderrs.append(stderr)
    return np.array(errors), np.array(stderrs)


def test_ais_unbiased_over_models():
    errors, stderrs = _ais_errors(1000)
    combined = np.sqrt(np.sum(stderrs**2)) / errors.size
    assert abs(errors.mean()) <= 2 * combined + 0.005


def test_ais_more_betas_do_not_hurt():
    err_short, _ = _ais_errors(100)
    err_long, _ = _ais_errors(200)
    assert np.abs(err_long).mean() <= np.abs(err_short).mean() + 0.01


def test_ais_schedule():
    betas = piecewise_betas([(0.5, 2), (1.0, 4)])
    np.testing.assert_allclose(betas, [0, 0.25, 0.5, 0.625, 0.75, 0.875, 1.0])
    assert AisConfig(schedule=[[0.5, 500], [0.9, 4000], [1.0, 10000]]).betas().size == 14501
    with pytest.raises(ValueError):
        AisConfig(schedule=[[0.5, 10], [0.4, 10], [1.0, 10]])
    with pytest.raises(ValueError):
        AisConfig(num_betas=1)


def test_log_prob_zero_model():
    rbm = _zero_rbm(7, 3)
    data = (np.random.default_rng(0).random((20, 7)) < 0.5).astype(float)
    assert log_prob(rbm, data, exact_log_z(rbm)) == pytest.approx(-7 * LN2, abs=1e-12)


def test_log_prob_matches_enumeration():
    rbm = _random_rbm(4, 3, seed=9)
    vs, _, logits = _joint_log_weights(rbm)
    marginal = logsumexp(logits, axis=1) - logsumexp(logits)
    data = vs[[0, 3, 3, 7, 15]]
    expected = marginal[[0, 3, 3, 7, 15]].mean()
    assert log_prob(rbm, data, exact_log_z(rbm)) == pytest.approx(expected, abs=1e-10)


def test_base_rate_biases():
    data = np.array([[1, 0], [1, 0], [1, 1], [0, 0]], dtype=float)
    np.testing.assert_allclose(base_rate_biases(data), np.log([4 / 2, 2 / 4]))
    assert np.all(np.isfinite(base_rate_biases(np.zeros((3, 2)))))


def test_reconstruction_error_bounds():
    rbm = _zero_rbm(4, 2)
    data = np.ones((3, 4))
    assert reconstruction_error(rbm, data, rng=0) == pytest.approx(4 * 0.25)


def _prototype_split(seed: int):
    data = make_synthetic("prototype-mixture", {"n_samples": 2500}, rng=seed)
    return train_test_split(data, 500, rng=seed)


def test_fixprob_rbm_keeps_topology():
    train, test = _prototype_split(0)
    cfg = RbmTrainConfig(epochs=3, batch_size=50, evolution=EvolutionConfig(epsilon=3))
    trainer = RbmTrainer.create(20, 12, "fixprob", cfg, train, test)
    before = trainer.rbm.weights.flat_positions.copy()
    trainer.run()
    np.testing.assert_array_equal(before, trainer.rbm.weights.flat_positions)


def test_set_rbm_keeps_nnz_until_the_final_prune():
    train, test = _prototype_split(1)
    cfg = RbmTrainConfig(epochs=4, batch_size=50, evolution=EvolutionConfig(epsilon=3))
    rbm = build_rbm(20, 12, "set", cfg.evolution, cfg.init, rng=0)
    before = rbm.weights.flat_positions.copy()
    history = train_set_rbm(rbm, train, cfg, rng=3, test_set=test)
    assert len(history) == 5
    assert {m.nnz for m in history[:-1]} == {before.size}
    # per-sign floor(zeta * count) removals, nothing regrown
    n_removed = before.size - history[-1].nnz
    assert int(0.3 * before.size) - 1 <= n_removed <= int(0.3 * before.size)
    assert rbm.weights.nnz == history[-1].nnz
    assert not np.array_equal(before, rbm.weights.flat_positions)
    assert [m.epoch for m in history if not np.isnan(m.test_log_prob)] == [0, 4]


def test_final_epoch_prunes_without_regrowing():
    train, _ = _prototype_split(4)
    train = Dataset(np.tile(train.features, (1, 2)))
    cfg = RbmTrainConfig(epochs=2, batch_size=50, evolution=EvolutionConfig(epsilon=3))
    rbm = build_rbm(40, 30, "set", cfg.evolution, cfg.init, rng=4)
    nnz = [rbm.weights.nnz]
    rng = np.random.default_rng(4)
    velocity = RbmVelocity.zeros(rbm)
    for epoch in (1, 2):
        train_rbm_epoch(rbm, train, cfg, rng, velocity, final_epoch=epoch == 2)
        nnz.append(rbm.weights.nnz)
        assert velocity.weights.shape == (rbm.weights.nnz,)
    assert nnz[1] == nnz[0]
    assert nnz[2] < nnz[1]


def test_fixprob_rbm_ignores_the_final_epoch():
    train, _ = _prototype_split(5)
    cfg = RbmTrainConfig(epochs=1, batch_size=50, evolution=EvolutionConfig(epsilon=3))
    rbm = build_rbm(20, 12, "fixprob", cfg.evolution, cfg.init, rng=5)
    before = rbm.weights.flat_positions.copy()
    train_rbm_epoch(rbm, train, cfg, rng=5, final_epoch=True)
    np.testing.assert_array_equal(before, rbm.weights.flat_positions)


def test_default_init_is_uniform_fan_in():
    cfg = RbmTrainConfig()
    assert cfg.init == WeightInitSpec()
    rbm = build_rbm(100, 50, "set", cfg.evolution, cfg.init, rng=0)
    assert np.abs(rbm.weights.values).max() <= 1 / np.sqrt(100)
    assert np.abs(rbm.weights.values).max() > 0.5 / np.sqrt(100)

def test_rbm_rejects_non_binary_data():
    data = Dataset(np.full((10, 4), 0.5))
    with pytest.raises(DataFormatError):
        RbmTrainer.create(4, 3, "set", RbmTrainConfig(epochs=1), data).run()


def _scored(history):
    scored = [m for m in history if not np.isnan(m.test_log_prob)]
    assert [m.epoch for m in scored] == [0, 50, 100]
    assert all(m.log_z_stderr == 0.0 for m in scored)
    return scored


@pytest.mark.slow
def test_desk_prototype_mixture_log_prob_improves():
    gains = []
    for seed in range(3):
        train, test = _prototype_split(seed)
        cfg = RbmTrainConfig(epochs=100, batch_size=10, eval_every=50, seed=seed)
        scored = _scored(RbmTrainer.create(20, 16, "set", cfg, train, test).run())
        gains.append(scored[-1].test_log_prob - scored[0].test_log_prob)
    assert np.mean(gains) >= 5.0


@pytest.mark.slow
def test_desk_sparse_set_rbm_not_worse_than_fixprob():
    # epsilon=3 keeps a 20x16 layer at about a third of its links, so evolution has room to
    # move them
    final = {"set": [], "fixprob": []}
    for seed in range(3):
        train, test = _prototype_split(seed)
        cfg = RbmTrainConfig(
            epochs=100,
            batch_size=10,
            eval_every=50,
            seed=seed,
            evolution=EvolutionConfig(epsilon=3, zeta=0.3),
        )
        for mode in final:
            trainer = RbmTrainer.create(20, 16, mode, cfg, train, test)
            scored = _scored(trainer.run())
            assert trainer.rbm.weights.nnz < 0.5 * 20 * 16
            final[mode].append(scored[-1].test_log_prob)
    assert np.mean(final["set"]) >= np.mean(final["fixprob"])


def test_trainer_artifacts_and_checkpoint(tmp_path):
    train, test = _prototype_split(2)
    cfg = RbmTrainConfig(
        epochs=2,
        batch_size=50,
        eval_every=1,
        log_z_method="ais",
        ais={"num_betas": 100, "num_chains": 20},
        snapshot_every=1,
        evolution=EvolutionConfig(epsilon=3),
    )
    trainer = RbmTrainer.create(20, 12, "set", cfg, train, test, tmp_path)
    trainer.run()
    rows = read_csv_dicts(tmp_path / "metrics.csv")
    assert [int(r["epoch"]) for r in rows] == [0, 1, 2]
    assert all(float(r["log_z_stderr"]) >= 0 for r in rows)
    assert (tmp_path / "snapshots" / "epoch_0002" / "weights.txt").is_file()
    assert (tmp_path / "summary.yaml").is_file()
    # the caller's config is not modified, the trainer keeps its own base rates
    assert cfg.ais.base_rate_biases is None
    assert trainer.config.ais.base_rate_biases.shape == (20,)

    loaded, meta = load_rbm_checkpoint(tmp_path / "checkpoint")
    assert meta["epoch"] == 2
    np.testing.assert_array_equal(loaded.weights.values, trainer.rbm.weights.values)
    np.testing.assert_array_equal(loaded.visible_bias, trainer.rbm.visible_bias)
    np.testing.assert_array_equal(free_energy(loaded, test), free_energy(trainer.rbm, test))


def test_checkpoint_roundtrip(tmp_path):
    rbm = _random_rbm(6, 4, seed=0, density=0.5)
    save_rbm_checkpoint(rbm, tmp_path / "ckpt")
    loaded, meta = load_rbm_checkpoint(tmp_path / "ckpt")
    assert meta == {}
    np.testing.assert_array_equal(loaded.weights.to_dense(), rbm.weights.to_dense())
    np.testing.assert_array_equal(loaded.hidden_bias, rbm.hidden_bias)
    (tmp_path / "ckpt" / "hidden_bias.txt").unlink()
    with pytest.raises(DataFormatError):
        load_rbm_checkpoint(tmp_path / "ckpt")


def test_rbm_config_from_dict():
    cfg = RbmTrainConfig.from_dict(
        {"cd_steps": 3, "evolution": {"epsilon": 11}, "ais": {"num_betas": 500}}
    )
    assert cfg.cd_steps == 3
    assert cfg.ais.num_betas == 500
    assert cfg.evolution.zeta == 0.3
    assert cfg.eval_epochs() == list(range(0, 5001, 50))
    with pytest.raises(ConfigValidationError):
        RbmTrainConfig.from_dict({"cd_steps": 0})
    with pytest.raises(ConfigValidationError):
        RbmTrainConfig.from_dict({"log_z_method": "guess"})
    with pytest.raises(ConfigValidationError):
        RbmTrainConfig.from_dict({"ais": {"chains": 10}})


@pytest.mark.slow
def test_mnist_set_rbm_connects_the_image_center():
    base = get_data_dir() / "mnist"
    files = []
    for name in ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"):
        gz = base / f"{name}.gz"
        files.append(gz if gz.is_file() else base / name)
    if not all(f.is_file() for f in files):
        pytest.skip(f"MNIST not found in {base}")
    train = binarize(load_idx(*files, use_cache=True), 0.5)
    cfg = RbmTrainConfig(
        epochs=200,
        batch_size=100,
        evolution=EvolutionConfig(epsilon=11, zeta=0.3),
        eval_every=0,
        log_z_method="ais",
        ais={"num_betas": 100, "num_chains": 20},
    )
    trainer = RbmTrainer.create(784, 500, "set", cfg, train)
    trainer.run()
    center, border = visible_connectivity_map(trainer.rbm.weights, 28, 28).region_means(14, 4)
    assert center >= 2 * border
