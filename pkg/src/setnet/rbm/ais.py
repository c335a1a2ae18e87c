"""
Annealed importance sampling of log Z.

The chains start with exact samples of a base-rate model A (no weights, visible biases a_A,
zero hidden biases) and move along the geometric path of parameters

    W_beta = beta W,  a_beta = (1 - beta) a_A + beta a,  b_beta = beta b

with one Gibbs sweep per inverse temperature. With p*_beta the unnormalized visible marginal,

    log w = sum_k log p*_beta_k(v_k-1) - log p*_beta_k-1(v_k-1)
    log Z = log Z_A + log mean(w),  log Z_A = sum_i softplus(a_A_i) + n_hidden log 2

Chains are processed in blocks with one generator each, so the result depends only on the
seed and the number of chains.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy.special import expit, logsumexp

from setnet.errors import ShapeMismatchError
from setnet.rbm.config import AisConfig
from setnet.rbm.model import RbmModel, bernoulli, softplus
from setnet.typext import SeedOrRng, spawn_rngs

CHAINS_PER_BLOCK = 100
# warn when the estimate is this uncertain
LARGE_STDERR = 1.0


def base_log_z(base_biases: np.ndarray, n_hidden: int) -> float:
    return float(softplus(base_biases).sum() + n_hidden * np.log(2.0))


def _ais_block(
    rbm: RbmModel,
    base_biases: np.ndarray,
    betas: np.ndarray,
    n_chains: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """log importance weights of n_chains chains."""
    w_t = rbm.weights.matrix.T.tocsr()
    w = rbm.weights.matrix
    a, b = rbm.visible_bias, rbm.hidden_bias

    def log_p_star(v: np.ndarray, wv: np.ndarray, beta: float) -> np.ndarray:
        visible = v @ ((1.0 - beta) * base_biases + beta * a)
        return visible + softplus(beta * (wv + b)).sum(axis=1)

    v = bernoulli(np.broadcast_to(expit(base_biases), (n_chains, base_biases.size)), rng)
    log_w = np.zeros(n_chains)
    for k in range(1, betas.size):
        wv = np.ascontiguousarray((w_t @ v.T).T)
        log_w += log_p_star(v, wv, betas[k]) - log_p_star(v, wv, betas[k - 1])
        if k == betas.size - 1:
            break
        beta = betas[k]
        h = bernoulli(expit(beta * (wv + b)), rng)
        wh = np.ascontiguousarray((w @ h.T).T)
        v = bernoulli(expit((1.0 - beta) * base_biases + beta * (wh + a)), rng)
    return log_w


def ais_log_z(
    rbm: RbmModel, config: Optional[AisConfig] = None, rng: SeedOrRng = None
) -> Tuple[float, float]:
    """
    Returns:
        the estimate of log Z and its standard error over chains (delta method on the mean
        importance weight, 0 for a single chain)
    """
    config = AisConfig() if config is None else config
    base = config.base_rate_biases
    base = np.zeros(rbm.n_visible) if base is None else base
    if base.shape != (rbm.n_visible,):
        raise ShapeMismatchError(
            f"{base.size} base-rate biases for {rbm.n_visible} visible units"
        )
    betas = config.betas()
    n_blocks = -(-config.num_chains // CHAINS_PER_BLOCK)
    rngs = spawn_rngs(config.seed if rng is None else rng, n_blocks)
    log_w = np.concatenate(
        [
            _ais_block(
                rbm,
                base,
                betas,
                min(CHAINS_PER_BLOCK, config.num_chains - i * CHAINS_PER_BLOCK),
                block_rng,
            )
            for i, block_rng in enumerate(rngs)
        ]
    )
    n = log_w.size
    log_mean_w = float(logsumexp(log_w) - np.log(n))
    estimate = base_log_z(base, rbm.n_hidden) + log_mean_w
    stderr = 0.0
    if n > 1:
        ratios = np.exp(log_w - log_w.max())
        stderr = float(np.std(ratios, ddof=1) / np.sqrt(n) / ratios.mean())
    log_fn = logger.warning if stderr > LARGE_STDERR else logger.debug
    log_fn(
        f"AIS log Z = {estimate:.4f} +- {stderr:.4f} ({betas.size} betas, {n} chains, "
        f"{rbm.n_visible}x{rbm.n_hidden} model)"
    )
    return estimate, stderr
