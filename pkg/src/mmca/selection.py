"""Choosing the penalty: a null-calibrated threshold for the rank, then CV for shrinkage.

Rank selection simulates data from the fitted no-interaction model and
records, for each replicate, the top singular value of ``J Z`` at the
no-interaction solution. Half of its ``(1 - alpha)`` quantile is the
smallest ``lam`` for which a zero interaction is a fixed point of the
majorization update, so it plays the role of a noise edge. The scale of
that statistic is learned from the simulation itself; no separate noise
level is estimated.

Shrinkage at the selected rank is then picked by K-fold cross-validation
over individual (observation, variable) cells.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._blocks import block_expand, block_reduce
from .dataset import category_margins, simulate_multinomial
from .exceptions import DegenerateCategoryError, FoldError
from .model import FitConfig, fit, log_proba_cells

logger = logging.getLogger(__name__)

MAX_FOLD_RETRIES = 10


def _map(func, items, threads):
    """Ordered map, optionally on a thread pool; output order never depends on `threads`."""
    items = list(items)
    if threads is not None and threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _child_seed(seed, *index):
    return int(np.random.SeedSequence([int(seed), *map(int, index)]).generate_state(1, np.uint64)[0])


def null_main_effects(G):
    """Block-centered log of observed category proportions.

    This is the maximum likelihood estimate of ``mu`` when there is no
    interaction.

    Raises
    ------
    DegenerateCategoryError
        A category is never observed.
    """
    counts = category_margins(G)
    if np.any(counts == 0):
        raise DegenerateCategoryError(
            f"categories with zero count at columns {np.flatnonzero(counts == 0).tolist()}"
        )
    logp = np.log(counts / G.mask.sum(axis=0))
    means = block_reduce(np.add, logp, G.blocks) / np.asarray(G.blocks)
    return logp - block_expand(means, G.blocks)


def null_statistic(G):
    """Top singular value of ``J Z`` at the no-interaction fit of `G`.

    At that fit every row of ``Pi`` is the vector of observed category
    proportions, so ``J Z = 2 J (G - W * Pi)``. Proportions are used
    directly, which keeps the statistic defined when a simulated sample
    misses a category.
    """
    observed = G.mask.sum(axis=0)
    props = np.divide(category_margins(G), observed, out=np.zeros(G.K), where=observed > 0)
    R = 2.0 * (G.values - G.mask * props[None, :])
    R -= R.mean(axis=0)
    return float(np.linalg.svd(R, compute_uv=False)[0])


def default_alpha(G):
    """``1 / sqrt(log(max(n, K - J)))``, capped at 1."""
    m = max(G.n, G.K - G.J)
    return min(1.0, 1.0 / math.sqrt(math.log(m))) if m > math.e else 1.0


@dataclass(frozen=True)
class QutConfig:
    replicates: int = 1000
    seed: int = 0
    alpha_override: float = None
    threads: int = None
    epsilon: float = 1e-8
    max_iter: int = 5000

    def __post_init__(self):
        if self.replicates < 100:
            raise ValueError("replicates must be >= 100")
        if self.alpha_override is not None and not 0 < self.alpha_override < 1:
            raise ValueError("alpha_override must lie in (0, 1)")


@dataclass(frozen=True)
class QutResult:
    lambda_qut: float
    estimated_rank: int
    null_singular_values: np.ndarray
    alpha_used: float
    seed: int = 0
    fit: object = field(default=None, compare=False, repr=False)


def null_sample(G, replicates, seed, threads=None):
    """Null statistics of `replicates` datasets drawn from the no-interaction fit of `G`.

    Replicate ``r`` uses a stream keyed by ``(seed, r)`` and keeps the
    missing-cell pattern of `G`.
    """
    mu = null_main_effects(G)
    zeros = np.zeros((G.n, G.K))
    mask = None if G.fully_observed else G.mask

    def one(r):
        G_null = simulate_multinomial(mu, zeros, G.blocks, _child_seed(seed, r), mask=mask)
        return null_statistic(G_null)

    return np.array(_map(one, range(replicates), threads))


def qut_lambda(G, config=QutConfig()):
    """Null-calibrated threshold and the rank it selects.

    ``lambda_qut`` is half the ``(1 - alpha)`` quantile of the null sample;
    the estimated rank is the number of nonzero singular values of the
    full-rank penalized fit at that threshold.
    """
    sample = null_sample(G, config.replicates, config.seed, config.threads)
    alpha = default_alpha(G) if config.alpha_override is None else config.alpha_override
    lam = 0.5 * float(np.quantile(sample, 1.0 - alpha))
    result = fit(G, FitConfig(p=G.max_rank, lam=lam, epsilon=config.epsilon, max_iter=config.max_iter))
    return QutResult(
        lambda_qut=lam,
        estimated_rank=result.effective_rank,
        null_singular_values=sample,
        alpha_used=alpha,
        seed=config.seed,
        fit=result,
    )


def cv_folds(n_cells, k, seed):
    """Random partition of ``range(n_cells)`` into `k` folds whose sizes differ by at most one."""
    if k < 2:
        raise FoldError("at least 2 folds are required")
    if k > n_cells:
        raise FoldError(f"{k} folds requested for {n_cells} cells")
    perm = np.random.default_rng(seed).permutation(n_cells)
    return [np.sort(f) for f in np.array_split(perm, k)]


@dataclass(frozen=True)
class CvResult:
    lambda_grid: np.ndarray
    mean_heldout_deviance: np.ndarray
    seed: int
    lambda_star: float
    rank: int
    folds: int
    fold_seed: int = None


def _fold_ok(G, cells):
    counts = category_margins(G.with_missing(cells))
    return bool(np.all(counts[category_margins(G) > 0] > 0))


def _make_folds(G, cells, k, seed):
    for attempt in range(MAX_FOLD_RETRIES + 1):
        fold_seed = seed if attempt == 0 else _child_seed(seed, attempt)
        folds = cv_folds(len(cells), k, fold_seed)
        if all(_fold_ok(G, [cells[c] for c in f]) for f in folds):
            return folds, fold_seed
        logger.warning("fold assignment empties a category; resampling (attempt %d)", attempt + 1)
    raise FoldError(f"no valid fold assignment after {MAX_FOLD_RETRIES} retries")


def heldout_deviance(params, cells, G):
    """``-sum g log pi`` over held-out `cells`, scored against the full data `G`."""
    if not cells:
        return 0.0
    total = 0.0
    offsets = G.block_offsets
    for (i, j), logp in zip(cells, log_proba_cells(params, cells)):
        k = int(np.argmax(G.values[i, offsets[j]:offsets[j] + G.blocks[j]]))
        total -= float(logp[k])
    return total


def cross_validate(G, p, lambda_grid, k=5, seed=0, threads=None, epsilon=1e-8, max_iter=5000):
    """Cell-wise K-fold cross-validation of the penalty at fixed rank `p`.

    Each fold masks its cells, fits every ``lam`` on the grid (largest
    first, each fit warm-started from the previous one) and scores the
    held-out cells. The reported curve is the held-out deviance per cell,
    pooled over folds.

    Returns
    -------
    CvResult
        ``lambda_star`` is the grid value with the smallest curve value,
        the smallest such value on ties.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("lambda_grid must be a nonempty 1-D sequence")
    if np.any(np.diff(grid) <= 0) or np.any(grid < 0):
        raise ValueError("lambda_grid must be nonnegative and strictly increasing")
    obs = G.observed
    cells = [(int(i), int(j)) for i, j in zip(*np.nonzero(obs))]
    folds, fold_seed = _make_folds(G, cells, k, seed)

    def run_fold(fold):
        held = [cells[c] for c in fold]
        G_train = G.with_missing(held)
        scores = np.empty(grid.size)
        warm = None
        for idx in range(grid.size - 1, -1, -1):
            cfg = FitConfig(p=p, lam=float(grid[idx]), epsilon=epsilon, max_iter=max_iter)
            res = fit(G_train, cfg, init_params=warm)
            warm = res.params
            scores[idx] = heldout_deviance(res.params, held, G)
        return scores

    per_fold = np.array(_map(run_fold, folds, threads))
    curve = per_fold.sum(axis=0) / max(len(cells), 1)
    return CvResult(
        lambda_grid=grid,
        mean_heldout_deviance=curve,
        seed=seed,
        lambda_star=float(grid[int(np.argmin(curve))]),
        rank=p,
        folds=k,
        fold_seed=fold_seed,
    )
