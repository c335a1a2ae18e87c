"""
Power-law fits of degree sequences and the likelihood-ratio test against a binomial null.

The null hypothesis is that the degrees above d_min follow a (truncated) binomial law, which
is what an Erdos-Renyi layer produces. The statistic is the log-likelihood ratio of the best
discrete power law over the best truncated binomial. Its null distribution is estimated by
parametric Monte-Carlo resampling from the fitted binomial, and the p-value is the fraction of
resampled statistics at least as large as the observed one. Small p-values mean the degrees
look more like a power law than an ER layer would.

Both fits only need sufficient statistics of the tail (count, sum of degrees, sum of log
degrees), which makes it possible to fit all Monte-Carlo replicates at once.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from attrs import define, field
from loguru import logger
from scipy import special, stats

from setnet.consts import FitMethod
from setnet.errors import UndefinedFitError
from setnet.typext import SeedOrRng, ensure_rng, spawn_rngs

GAMMA_MIN = 1.01
GAMMA_MAX = 6.0
GAMMA_STEP = 0.001
MIN_TAIL = 10
MIN_DEGREES = 30
MIN_MONTE_CARLO = 100
DEFAULT_MONTE_CARLO = 1000
# replicates x tail values per Monte-Carlo block
MC_BLOCK_ELEMENTS = 2_000_000
SAMPLER_TABLE_MAX = 100_000
BISECTION_STEPS = 60


@define
class PowerLawReport:
    """
    Args:
        gamma_hat: fitted exponent, nan if the fit is undefined
        d_min: lower degree cutoff used
        p_value: Monte-Carlo p-value of the binomial null, nan if not computed
        n_tail: number of degrees >= d_min
        statistic: observed log-likelihood ratio (power law minus binomial)
        histogram: counts[d] = number of neurons with degree d
    """

    gamma_hat: float
    d_min: int
    p_value: float
    n_tail: int
    statistic: float = float("nan")
    histogram: np.ndarray = field(factory=lambda: np.zeros(0, dtype=np.int64), repr=False)

    def to_dict(self) -> dict:
        return {
            "gamma_hat": self.gamma_hat,
            "d_min": self.d_min,
            "p_value": self.p_value,
            "n_tail": self.n_tail,
            "statistic": self.statistic,
        }


def _tail(degrees, d_min: int) -> np.ndarray:
    degrees = np.asarray(degrees)
    if degrees.size and not np.all(degrees == np.round(degrees)):
        raise ValueError("degrees must be integers")
    if d_min < 1:
        raise ValueError(f"d_min must be >= 1 but is {d_min}")
    degrees = degrees.astype(np.int64).ravel()
    return degrees[degrees >= d_min]


def _check_tail(tail: np.ndarray, d_min: int) -> None:
    if tail.size < MIN_TAIL:
        raise UndefinedFitError(
            f"Power-law fit needs >= {MIN_TAIL} degrees >= d_min={d_min}, got {tail.size}"
        )
    if np.all(tail == tail[0]):
        raise UndefinedFitError(f"All {tail.size} degrees in the tail equal {tail[0]}")


@lru_cache(maxsize=64)
def _gamma_grid(d_min: int) -> Tuple[np.ndarray, np.ndarray]:
    gammas = np.arange(GAMMA_MIN, GAMMA_MAX + GAMMA_STEP / 2, GAMMA_STEP)
    return gammas, np.log(special.zeta(gammas, d_min))


def _discrete_mle(
    n: np.ndarray, sum_log: np.ndarray, d_min: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Maximize -gamma * sum_log - n * log zeta(gamma, d_min) for every row at once.

    Grid search followed by a parabolic step through the best grid point and its neighbours.
    Returns (gamma_hat, max log-likelihood) per row.
    """
    gammas, log_z = _gamma_grid(d_min)
    n = np.atleast_1d(n).astype(np.float64)[:, None]
    sum_log = np.atleast_1d(sum_log).astype(np.float64)[:, None]
    ll = -gammas[None, :] * sum_log - n * log_z[None, :]
    best = np.argmax(ll, axis=1)
    rows = np.arange(ll.shape[0])
    inner = np.clip(best, 1, gammas.size - 2)
    y0, y1, y2 = ll[rows, inner - 1], ll[rows, inner], ll[rows, inner + 1]
    denom = y0 - 2 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(denom < 0, 0.5 * (y0 - y2) / denom, 0.0)
    shift = np.where(best == inner, np.clip(shift, -1, 1), 0.0)
    gamma_hat = gammas[best] + shift * GAMMA_STEP
    ll_hat = -gamma_hat * sum_log[:, 0] - n[:, 0] * np.log(special.zeta(gamma_hat, d_min))
    return gamma_hat, ll_hat


def fit_power_law(degrees, d_min: int = 2, method: str = FitMethod.DISCRETE) -> float:
    """
    Fit P(d) ~ d^-gamma to the degrees >= d_min.

    Args:
        degrees: integer degrees
        d_min: lower cutoff
        method: "discrete" maximizes the exact discrete likelihood with normalization
            zeta(gamma, d_min), "approximate" uses the closed form
            1 + n / sum(log(d / (d_min - 0.5)))

    Raises:
        UndefinedFitError: fewer than 10 tail degrees, or all tail degrees equal
    """
    FitMethod.check(method, "fit method")
    tail = _tail(degrees, d_min)
    _check_tail(tail, d_min)
    if method == FitMethod.APPROXIMATE:
        return float(1.0 + tail.size / np.sum(np.log(tail / (d_min - 0.5))))
    gamma_hat, _ = _discrete_mle(np.array([tail.size]), np.array([np.log(tail).sum()]), d_min)
    return float(gamma_hat[0])


def power_law_ccdf(gamma: float, d: np.ndarray, d_min: int) -> np.ndarray:
    """P(D >= d) for the discrete power law starting at d_min."""
    return special.zeta(gamma, np.asarray(d, dtype=np.float64)) / special.zeta(gamma, d_min)


def ks_distance(degrees, gamma: float, d_min: int) -> float:
    """Kolmogorov-Smirnov distance between the empirical tail CDF and the fitted power law."""
    tail = np.sort(_tail(degrees, d_min))
    values, counts = np.unique(tail, return_counts=True)
    emp_cdf = np.cumsum(counts) / tail.size
    model_cdf = 1.0 - power_law_ccdf(gamma, values + 1, d_min)
    emp_before = np.concatenate([[0.0], emp_cdf[:-1]])
    model_before = 1.0 - power_law_ccdf(gamma, values, d_min)
    return float(
        max(np.max(np.abs(emp_cdf - model_cdf)), np.max(np.abs(emp_before - model_before)))
    )


def select_d_min(degrees, d_min_max: Optional[int] = None) -> int:
    """
    The d_min in [1, max(degrees) / 4] whose power-law fit has the smallest KS distance.

    Raises:
        UndefinedFitError: no candidate leaves a fittable tail
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    if d_min_max is None:
        d_min_max = max(1, int(degrees.max()) // 4) if degrees.size else 1
    best, best_ks = None, np.inf
    for d_min in range(1, d_min_max + 1):
        try:
            gamma = fit_power_law(degrees, d_min)
        except UndefinedFitError:
            continue
        ks = ks_distance(degrees, gamma, d_min)
        if ks < best_ks:
            best, best_ks = d_min, ks
    if best is None:
        raise UndefinedFitError(f"No d_min in [1, {d_min_max}] leaves a fittable tail")
    logger.debug(f"Selected d_min={best} with KS distance {best_ks:.4f}")
    return best


def _bisect_increasing(fn, target: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Solve fn(x) = target elementwise for an increasing fn on [lo, hi]."""
    lo = np.full(target.shape, lo, dtype=np.float64)
    hi = np.full(target.shape, hi, dtype=np.float64)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        below = fn(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _truncated_binomial_mean(p: np.ndarray, n_trials: int, d_min: int) -> np.ndarray:
    below = np.arange(d_min)
    pmf_below = stats.binom.pmf(below[None, :], n_trials, p[:, None])
    mass_above = np.clip(1.0 - pmf_below.sum(axis=1), 1e-300, None)
    return (n_trials * p - (pmf_below * below[None, :]).sum(axis=1)) / mass_above


def _truncated_poisson_mean(lam: np.ndarray, d_min: int) -> np.ndarray:
    below = np.arange(d_min)
    pmf_below = stats.poisson.pmf(below[None, :], lam[:, None])
    mass_above = np.clip(1.0 - pmf_below.sum(axis=1), 1e-300, None)
    return (lam - (pmf_below * below[None, :]).sum(axis=1)) / mass_above


@define
class _TailStats:
    n: np.ndarray
    sum_d: np.ndarray
    sum_log_d: np.ndarray
    # sum of log(d!) for the Poisson likelihood or sum of log C(N, d) for the binomial one
    sum_log_comb: np.ndarray
    max_d: np.ndarray

    @classmethod
    def from_matrix(cls, tails: np.ndarray, n_trials: Optional[int]) -> _TailStats:
        tails = np.atleast_2d(tails)
        d = tails.astype(np.float64)
        if n_trials is None:
            log_comb = -special.gammaln(d + 1)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                log_comb = (
                    special.gammaln(n_trials + 1)
                    - special.gammaln(d + 1)
                    - special.gammaln(np.clip(n_trials - d + 1, 1, None))
                )
        return cls(
            n=np.full(tails.shape[0], tails.shape[1], dtype=np.float64),
            sum_d=d.sum(axis=1),
            sum_log_d=np.log(d).sum(axis=1),
            sum_log_comb=log_comb.sum(axis=1),
            max_d=tails.max(axis=1),
        )


def _fit_null(
    st: _TailStats, n_trials: Optional[int], d_min: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Truncated binomial (or Poisson) MLE per row. Returns (parameter, log-likelihood)."""
    mean = st.sum_d / st.n
    if n_trials is None:
        lam = _bisect_increasing(
            lambda x: _truncated_poisson_mean(x, d_min), mean, 1e-9, float(mean.max()) + 1.0
        )
        log_mass = stats.poisson.logsf(d_min - 1, lam)
        ll = st.sum_log_comb + st.sum_d * np.log(lam) - st.n * lam - st.n * log_mass
        return lam, ll
    target = np.minimum(mean, n_trials)
    p = _bisect_increasing(
        lambda x: _truncated_binomial_mean(x, n_trials, d_min), target, 1e-12, 1 - 1e-12
    )
    log_mass = stats.binom.logsf(d_min - 1, n_trials, p)
    ll = (
        st.sum_log_comb
        + st.sum_d * np.log(p)
        + (st.n * n_trials - st.sum_d) * np.log1p(-p)
        - st.n * log_mass
    )
    # a degree above n_trials is impossible under the binomial
    ll = np.where(st.max_d > n_trials, -np.inf, ll)
    return p, ll


def _llr_statistic(st: _TailStats, n_trials: Optional[int], d_min: int):
    _, ll_pl = _discrete_mle(st.n, st.sum_log_d, d_min)
    null_param, ll_null = _fit_null(st, n_trials, d_min)
    return ll_pl - ll_null, null_param


def _sample_truncated_null(
    param: float, n_trials: Optional[int], d_min: int, shape: Tuple[int, int], rng
) -> np.ndarray:
    out = np.empty(shape, dtype=np.int64)
    todo = np.ones(shape, dtype=bool)
    while np.any(todo):
        k = int(todo.sum())
        if n_trials is None:
            draw = rng.poisson(param, size=k)
        else:
            draw = rng.binomial(n_trials, param, size=k)
        out[todo] = draw
        todo[todo] = draw < d_min
    return out


def null_hypothesis_test(
    degrees,
    n_monte_carlo: int = DEFAULT_MONTE_CARLO,
    rng: SeedOrRng = None,
    d_min: int = 2,
    *,
    n_trials: Optional[int],
) -> Tuple[float, float, float]:
    """
    One-tailed Monte-Carlo likelihood-ratio test of the binomial null against a power law.

    Args:
        degrees: integer degrees of the neurons of one side of a layer
        n_monte_carlo: number of resampled degree sets
        rng: generator or seed
        d_min: lower cutoff for both fits
        n_trials: number of possible partners per neuron, the binomial null of an
            Erdos-Renyi layer. None explicitly selects the Poisson limit.

    Returns:
        (p_value, observed statistic, fitted null parameter)

    Raises:
        UndefinedFitError: degenerate tail
    """
    degrees = np.asarray(degrees)
    if degrees.size < MIN_DEGREES:
        raise ValueError(f"Test needs >= {MIN_DEGREES} degrees, got {degrees.size}")
    if n_monte_carlo < MIN_MONTE_CARLO:
        raise ValueError(f"n_monte_carlo must be >= {MIN_MONTE_CARLO} but is {n_monte_carlo}")
    tail = _tail(degrees, d_min)
    _check_tail(tail, d_min)
    rng = ensure_rng(rng)

    observed, null_param = _llr_statistic(_TailStats.from_matrix(tail, n_trials), n_trials, d_min)
    observed, null_param = float(observed[0]), float(null_param[0])
    if not np.isfinite(observed):
        # the degrees are impossible under the null
        return 0.0, observed, null_param

    # one generator per block so the result does not depend on the order blocks are processed in
    block = max(1, MC_BLOCK_ELEMENTS // tail.size)
    starts = range(0, n_monte_carlo, block)
    n_exceed = 0
    for start, block_rng in zip(starts, spawn_rngs(rng, len(starts))):
        n_rep = min(block, n_monte_carlo - start)
        resampled = _sample_truncated_null(
            null_param, n_trials, d_min, (n_rep, tail.size), block_rng
        )
        st = _TailStats.from_matrix(resampled, n_trials)
        stat, _ = _llr_statistic(st, n_trials, d_min)
        # a resample where the power-law fit is undefined carries no power-law evidence
        degenerate = np.all(resampled == resampled[:, :1], axis=1)
        stat = np.where(degenerate, -np.inf, stat)
        n_exceed += int(np.sum(stat >= observed))
    p_value = n_exceed / n_monte_carlo
    logger.debug(
        f"LLR test: n_tail={tail.size} statistic={observed:.3f} null={null_param:.5g} "
        f"p={p_value:.4f}"
    )
    return p_value, observed, null_param


def null_hypothesis_p_value(
    degrees,
    n_monte_carlo: int = DEFAULT_MONTE_CARLO,
    rng: SeedOrRng = None,
    d_min: int = 2,
    *,
    n_trials: Optional[int],
) -> float:
    """p-value of null_hypothesis_test, below 0.05 means the ER null is rejected."""
    return null_hypothesis_test(degrees, n_monte_carlo, rng, d_min, n_trials=n_trials)[0]


def power_law_report(
    degrees,
    d_min: Optional[int] = 2,
    n_monte_carlo: int = DEFAULT_MONTE_CARLO,
    rng: SeedOrRng = None,
    n_trials: Optional[int] = None,
    with_p_value: bool = True,
    method: str = FitMethod.DISCRETE,
) -> PowerLawReport:
    """
    Fit, test and histogram in one go. d_min=None selects it with select_d_min.
    The p-value needs n_trials, see null_hypothesis_test.

    Raises:
        UndefinedFitError: degenerate tail
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    if with_p_value and n_trials is None:
        raise ValueError("n_trials is required for the p-value of the binomial null")
    if d_min is None:
        d_min = select_d_min(degrees)
    gamma_hat = fit_power_law(degrees, d_min, method)
    n_tail = int(np.sum(degrees >= d_min))
    p_value, statistic = float("nan"), float("nan")
    if with_p_value:
        p_value, statistic, _ = null_hypothesis_test(
            degrees, n_monte_carlo, rng, d_min, n_trials=n_trials
        )
    return PowerLawReport(
        gamma_hat, int(d_min), p_value, n_tail, statistic, np.bincount(degrees)
    )


@lru_cache(maxsize=16)
def _ccdf_table(gamma: float, d_min: int, d_max: int) -> np.ndarray:
    return power_law_ccdf(gamma, np.arange(d_min, d_max + 2), d_min)


def sample_discrete_power_law(
    gamma: float,
    d_min: int,
    size: int,
    rng: SeedOrRng = None,
    table_max: int = SAMPLER_TABLE_MAX,
) -> np.ndarray:
    """
    Exact inverse-CDF sampling of P(d) = d^-gamma / zeta(gamma, d_min), d >= d_min.

    Values up to table_max come from a tabulated CCDF. The remaining mass (tiny for
    gamma > 2) uses the continuous approximation above table_max.
    """
    if gamma <= 1:
        raise ValueError(f"gamma must be > 1 but is {gamma}")
    rng = ensure_rng(rng)
    ccdf = _ccdf_table(float(gamma), int(d_min), int(table_max))
    u = rng.random(size)
    # d = largest value with P(D >= d) >= u; ccdf is decreasing so search the reversed array
    idx = ccdf.size - np.searchsorted(ccdf[::-1], u, side="left")
    out = d_min + idx - 1
    beyond = u < ccdf[-1]
    if np.any(beyond):
        frac = u[beyond] / ccdf[-1]
        start = table_max + 0.5
        out[beyond] = np.floor(start * frac ** (-1.0 / (gamma - 1.0)) + 0.5).astype(np.int64)
    return out.astype(np.int64)
