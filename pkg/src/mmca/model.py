"""Multinomial MCA: a low-rank softmax model for categorical data.

The probability that observation ``i`` picks category ``k`` of variable
``j`` is the blockwise softmax of

    theta = 1 mu' + U diag(d) V'

and the parameters minimize the deviance plus ``lam * sum(d)``. Fitting
uses majorization: every deviance term is bounded by a quadratic with
curvature 1/2 (the largest eigenvalue of ``Diag(pi) - pi pi'``), so each
update solves a least-squares problem in closed form and the penalized
deviance can never increase.

Notes
-----
The quadratic bound is ``(1/4)||theta - z||^2``. Minimizing
``(1/4)(phi - d)^2 + lam * d`` over ``d >= 0`` gives ``max(0, phi - 2 lam)``,
which is the threshold used in :func:`mm_step`.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._blocks import (
    as_blocks,
    block_log_softmax,
    block_reduce,
    block_slices,
    block_softmax,
    check_width,
)
from .dataset import category_margins
from .exceptions import DegenerateCategoryError, NumericalError, RankError, ShapeError
from .linalg import block_center, constrained_svd

INIT_METHODS = ("margins", "log-margins")
SCALINGS = ("interaction", "symmetric")


@dataclass(frozen=True)
class ModelParams:
    """Parameters ``(mu, U, d, V)`` of a fitted or candidate model.

    Identification constraints: ``mu`` sums to zero within each block,
    ``U`` has orthonormal centered columns, ``V`` has orthonormal columns
    summing to zero within each block, and ``d`` is nonnegative and
    nonincreasing.
    """

    mu: np.ndarray
    U: np.ndarray
    d: np.ndarray
    V: np.ndarray
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", as_blocks(self.blocks))
        for name in ("mu", "U", "d", "V"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        K = sum(self.blocks)
        p = self.d.size
        if self.mu.shape != (K,) or self.V.shape != (K, p) or self.U.ndim != 2 or self.U.shape[1] != p:
            raise ShapeError(
                f"inconsistent parameter shapes mu={self.mu.shape} U={self.U.shape} "
                f"d={self.d.shape} V={self.V.shape} for K={K}"
            )

    @property
    def n(self):
        return self.U.shape[0]

    @property
    def n_components(self):
        return self.d.size

    @property
    def effective_rank(self):
        return int(np.count_nonzero(self.d > 0))

    def constraint_violations(self):
        """Largest absolute violation of each identification constraint."""
        p = self.n_components
        eye = np.eye(p)

        def worst(a):
            return float(np.max(np.abs(a))) if np.size(a) else 0.0

        return {
            "mu_block_sums": worst(block_reduce(np.add, self.mu, self.blocks)),
            "U_centered": worst(self.U.sum(axis=0)),
            "U_orthonormal": worst(self.U.T @ self.U - eye),
            "V_orthonormal": worst(self.V.T @ self.V - eye),
            "V_block_sums": worst(block_reduce(np.add, self.V.T, self.blocks)),
            "d_nonnegative": worst(np.minimum(self.d, 0.0)),
            "d_nonincreasing": worst(np.maximum(np.diff(self.d), 0.0)),
        }

    def satisfies_constraints(self, tol=1e-8):
        return all(v <= tol for v in self.constraint_violations().values())


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit`.

    ``lam`` multiplies the sum of singular values in the objective.
    """

    p: int
    lam: float = 0.0
    epsilon: float = 1e-8
    max_iter: int = 5000
    init: str = "margins"

    def __post_init__(self):
        if self.p < 0:
            raise RankError("p must be nonnegative")
        if not self.lam >= 0:
            raise ValueError("lam must be >= 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.init not in INIT_METHODS:
            raise ValueError(f"init must be one of {INIT_METHODS}")


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    deviance_trace: np.ndarray
    converged: bool
    iterations: int
    lam: float = 0.0
    config: FitConfig = field(default=None, compare=False)

    @property
    def effective_rank(self):
        return self.params.effective_rank

    @property
    def penalized_deviance(self):
        return float(self.deviance_trace[-1])


@dataclass(frozen=True)
class BiplotCoords:
    X: np.ndarray
    A: np.ndarray
    scaling: str


def linear_predictor(params):
    """``Theta = 1 mu' + U diag(d) V'``, shape (n, K)."""
    return params.mu[None, :] + (params.U * params.d) @ params.V.T


def softmax_probs(theta, blocks):
    """Blockwise softmax of `theta`, stabilized by subtracting each block maximum."""
    theta = np.asarray(theta, dtype=float)
    blocks = as_blocks(blocks)
    check_width(theta, blocks)
    return block_softmax(theta, blocks)


def deviance(G, Pi):
    """``-sum g log pi`` over the observed cells of `G`."""
    Pi = np.asarray(Pi, dtype=float)
    if Pi.shape != G.values.shape:
        raise ShapeError("probability matrix does not match G")
    hit = G.values > 0
    return float(-np.sum(np.log(Pi[hit])))


def deviance_from_theta(G, theta):
    """Deviance evaluated through log-softmax; finite for any finite `theta`."""
    logp = block_log_softmax(np.asarray(theta, dtype=float), G.blocks)
    return float(-np.sum(G.values * logp))


def penalized_deviance(G, params, lam):
    return deviance_from_theta(G, linear_predictor(params)) + lam * float(np.sum(params.d))


def block_deviance(theta, g):
    """``f_ij(theta) = -sum_k g_k log softmax(theta)_k`` for one block."""
    theta = np.asarray(theta, dtype=float)
    m = theta.max()
    lse = m + math.log(np.exp(theta - m).sum())
    return float(-np.dot(g, theta - lse))


def deviance_gradient_block(g_ij, pi_ij):
    """Gradient of the block deviance: ``pi - g`` (zero for a missing block).

    The general form ``sum(g) * pi - g`` reduces to ``pi - g`` when the
    block is observed.
    """
    g_ij = np.asarray(g_ij, dtype=float)
    pi_ij = np.asarray(pi_ij, dtype=float)
    return g_ij.sum() * pi_ij - g_ij


def majorizer_value(theta, theta0, g, pi0):
    """Quadratic upper bound of the block deviance, touching it at `theta0`."""
    theta = np.asarray(theta, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    g = np.asarray(g, dtype=float)
    pi0 = np.asarray(pi0, dtype=float)
    step = theta - theta0
    hit = g > 0
    f0 = float(-np.dot(g[hit], np.log(pi0[hit])))
    return f0 + float(step @ deviance_gradient_block(g, pi0)) + 0.25 * float(step @ step)


def hessian_block(pi_ij):
    """``Diag(pi) - pi pi'``, the Hessian of an observed block deviance."""
    pi_ij = np.asarray(pi_ij, dtype=float)
    return np.diag(pi_ij) - np.outer(pi_ij, pi_ij)


def build_working_matrix(G, params, Pi=None):
    """Working matrix ``Z = [Theta + 2(G - W * Pi)] J_c`` of one majorization step.

    Missing cells have ``g = w = 0``, so there ``Z`` equals the current
    ``theta``; this is the extra bound that turns the weighted problem into
    an unweighted one.
    """
    theta = linear_predictor(params)
    if Pi is None:
        Pi = block_softmax(theta, G.blocks)
    return block_center(theta + 2.0 * (G.values - G.mask * Pi), G.blocks)


def soft_threshold(phi, t):
    """``max(0, phi - t)``."""
    return np.maximum(0.0, np.asarray(phi, dtype=float) - t)


def _check_rank(G, p):
    if not 0 <= p <= G.max_rank:
        raise RankError(f"p must lie in 0..{G.max_rank} (min(n - 1, K - J)), got {p}")


def mm_step(G, params, lam):
    """One majorization update of all parameters.

    ``mu`` becomes the column means of ``Z``; ``U`` and ``V`` are the
    leading singular vectors of ``J Z`` and ``d`` their soft-thresholded
    singular values (threshold ``2 * lam``).
    """
    p = params.n_components
    Z = build_working_matrix(G, params)
    mu = Z.mean(axis=0)
    svd = constrained_svd(Z, G.blocks)
    d = soft_threshold(svd.phi[:p], 2.0 * lam)
    return ModelParams(mu, svd.P[:, :p], d, svd.Q[:, :p], G.blocks)


def margin_main_effects(G):
    """Block-centered column means of ``G``, the literal starting ``mu``."""
    return block_center(category_margins(G)[None, :] / G.n, G.blocks)[0]


def log_margin_main_effects(G):
    """Block-centered log of observed category proportions (no-interaction MLE).

    Raises
    ------
    DegenerateCategoryError
        Some category is never observed.
    """
    counts = category_margins(G)
    if np.any(counts == 0):
        raise DegenerateCategoryError(
            f"categories with zero count at columns {np.flatnonzero(counts == 0).tolist()}"
        )
    observed = G.mask.sum(axis=0)
    return block_center(np.log(counts / observed)[None, :], G.blocks)[0]


def initial_params(G, p, lam, init="margins"):
    """Starting values: ``mu`` from the margins and ``U, V, d`` from the SVD of ``JGJ_c``."""
    _check_rank(G, p)
    svd = constrained_svd(G.values, G.blocks)
    U, V = svd.P[:, :p], svd.Q[:, :p]
    if init == "margins":
        return ModelParams(margin_main_effects(G), U, soft_threshold(svd.phi[:p], 2.0 * lam), V, G.blocks)
    if init == "log-margins":
        return ModelParams(log_margin_main_effects(G), U, np.zeros(p), V, G.blocks)
    raise ValueError(f"init must be one of {INIT_METHODS}")


def fit(G, config, init_params=None, callback=None):
    """Minimize the penalized deviance by majorization.

    Iterates :func:`mm_step` until the relative decrease
    ``(L_prev - L) / L`` drops below ``config.epsilon``, the deviance hits
    exactly zero, or ``config.max_iter`` steps have run.

    Parameters
    ----------
    G : IndicatorMatrix
        Data; masked cells are treated as missing.
    config : FitConfig
    init_params : ModelParams, optional
        Warm start; must have ``config.p`` components.
    callback : callable, optional
        Called as ``callback(t, params, L)`` after every step.

    Returns
    -------
    FitResult
        ``converged`` is False when `max_iter` was reached.

    Raises
    ------
    NumericalError
        The objective became non-finite.
    """
    _check_rank(G, config.p)
    if init_params is None:
        params = initial_params(G, config.p, config.lam, config.init)
    else:
        if init_params.n_components != config.p or init_params.n != G.n:
            raise ShapeError("warm start does not match the data or requested rank")
        params = init_params
    lam = float(config.lam)
    L = penalized_deviance(G, params, lam)
    if not math.isfinite(L):
        raise NumericalError("initial penalized deviance is not finite")
    trace = [L]
    converged = L == 0.0
    t = 0
    while not converged and t < config.max_iter:
        t += 1
        params = mm_step(G, params, lam)
        L_prev, L = L, penalized_deviance(G, params, lam)
        if not math.isfinite(L):
            raise NumericalError(f"penalized deviance became non-finite at iteration {t}")
        trace.append(L)
        if callback is not None:
            callback(t, params, L)
        converged = L == 0.0 or (L_prev - L) / L < config.epsilon
    return FitResult(
        params=params,
        deviance_trace=np.array(trace),
        converged=bool(converged),
        iterations=t,
        lam=lam,
        config=config,
    )


def predict_proba(params, cells):
    """Softmax probabilities of the requested (i, j) cells.

    Returns
    -------
    list of ndarray
        One probability vector of length ``K_j`` per cell.
    """
    slices = block_slices(params.blocks)
    out = []
    for i, j in cells:
        if not (0 <= i < params.n and 0 <= j < len(slices)):
            raise ShapeError(f"cell ({i}, {j}) outside a {params.n} x {len(slices)} table")
        sl = slices[j]
        theta = params.mu[sl] + (params.U[i] * params.d) @ params.V[sl].T
        e = np.exp(theta - theta.max())
        out.append(e / e.sum())
    return out


def log_proba_cells(params, cells):
    """Log-probabilities of the requested cells (same layout as :func:`predict_proba`)."""
    slices = block_slices(params.blocks)
    out = []
    for i, j in cells:
        sl = slices[j]
        theta = params.mu[sl] + (params.U[i] * params.d) @ params.V[sl].T
        m = theta.max()
        out.append(theta - m - math.log(np.exp(theta - m).sum()))
    return out


def biplot_coords(params, scaling="interaction"):
    """Row and category coordinates for a biplot.

    ``interaction``: ``X = sqrt(n) U`` and ``A = V D / sqrt(n)``, so that
    ``XA' = UDV'``. ``symmetric``: ``X = sqrt(n) U D^{1/4}`` and
    ``A = V D^{1/4} / sqrt(n)``.
    """
    rn = math.sqrt(params.n)
    if scaling == "interaction":
        return BiplotCoords(rn * params.U, params.V * params.d / rn, scaling)
    if scaling == "symmetric":
        q = params.d ** 0.25
        return BiplotCoords(rn * params.U * q, params.V * q / rn, scaling)
    raise ValueError(f"scaling must be one of {SCALINGS}")


def centroid_bias(G, Pi, X):
    """``Diag(1'G)^-1 (G - W * Pi)' X``: observed minus probability-weighted category centroids.

    Raises
    ------
    DegenerateCategoryError
        A category with zero observed count.
    """
    counts = category_margins(G)
    if np.any(counts == 0):
        raise DegenerateCategoryError("centroid bias needs every category observed")
    resid = G.values - G.mask * np.asarray(Pi, dtype=float)
    return (resid.T @ np.asarray(X, dtype=float)) / counts[:, None]


def scaled_category_coordinates(G, A):
    """``K Diag(1'G)^-1 A``; compared with :func:`centroid_bias` as a diagnostic only."""
    counts = category_margins(G)
    return G.K * np.asarray(A, dtype=float) / counts[:, None]

