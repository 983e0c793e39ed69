"""Classical multiple correspondence analysis.

MCA is the generalized SVD of the triplet ``(JG, J^-1 D_c^-1/2, n^-1 I)``
where ``D_c`` holds the category proportions. It serves as the baseline the
multinomial model is compared against; its fitted values ``G_hat`` sum to
one within each variable block but may be negative.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import category_margins
from .exceptions import DegenerateCategoryError, MissingValueError, RankError
from .linalg import row_center, weighted_gsvd


@dataclass(frozen=True)
class McaResult:
    """Truncated MCA solution.

    Attributes
    ----------
    U_tilde : ndarray, shape (n, p)
        Left vectors with ``U~' (I/n) U~ = I``.
    singular_values : ndarray, shape (p,)
        ``Lambda^{1/2}``, nonincreasing.
    V_tilde : ndarray, shape (K, p)
        Right vectors with ``V~' C V~ = I`` for the column weights ``C``.
    X, A : ndarray
        Row and category coordinates, ``U~ Lambda^{1/4}`` and ``V~ Lambda^{1/4}``.
    mu : ndarray, shape (K,)
        Category proportions (column means of ``G``).
    col_weights : ndarray, shape (K,)
        Diagonal of ``J^-1 D_c^-1/2``.
    """

    U_tilde: np.ndarray
    singular_values: np.ndarray
    V_tilde: np.ndarray
    X: np.ndarray
    A: np.ndarray
    mu: np.ndarray
    col_weights: np.ndarray
    blocks: tuple

    @property
    def n_components(self):
        return self.singular_values.size


def fit_mca(G, p):
    """Fit MCA with `p` components to a fully observed indicator matrix.

    Raises
    ------
    MissingValueError
        `G` has masked cells.
    DegenerateCategoryError
        A category is never chosen (its column weight would be infinite).
    RankError
        `p` outside ``1..min(n - 1, K - J)``.
    """
    if not G.fully_observed:
        raise MissingValueError("MCA requires fully observed data")
    counts = category_margins(G)
    if np.any(counts == 0):
        empty = np.flatnonzero(counts == 0).tolist()
        raise DegenerateCategoryError(f"categories with zero count at columns {empty}")
    if not 1 <= p <= G.max_rank:
        raise RankError(f"p must lie in 1..{G.max_rank}, got {p}")

    n = G.n
    proportions = counts / n
    col_weights = 1.0 / (G.J * np.sqrt(proportions))
    svd = weighted_gsvd(row_center(G.values), 1.0 / n, col_weights)
    U_tilde = svd.P[:, :p]
    V_tilde = svd.Q[:, :p]
    sv = svd.phi[:p]
    root = np.sqrt(sv)
    return McaResult(
        U_tilde=U_tilde,
        singular_values=sv,
        V_tilde=V_tilde,
        X=U_tilde * root,
        A=V_tilde * root,
        mu=proportions,
        col_weights=col_weights,
        blocks=G.blocks,
    )


def reconstruct(result, n_components=None):
    """Fitted values ``g_hat_ijk = mu_jk + x_i' a_jk`` using the first `n_components`."""
    k = result.n_components if n_components is None else n_components
    if not 0 <= k <= result.n_components:
        raise RankError(f"n_components must lie in 0..{result.n_components}")
    return result.mu[None, :] + result.X[:, :k] @ result.A[:, :k].T


def mca_loss(G, result, n_components=None):
    """Weighted squared distance between ``JG`` and ``XA'`` in the triplet metric."""
    k = result.n_components if n_components is None else n_components
    T = row_center(G.values) - result.X[:, :k] @ result.A[:, :k].T
    return float(np.sum(T * T * result.col_weights[None, :]) / G.n)
