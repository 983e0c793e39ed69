"""Dense linear algebra used by the solvers.

All singular vectors follow one sign convention: within each left singular
vector the entry of largest magnitude is positive (first index on ties),
and the paired right vector is flipped along with it.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._blocks import as_blocks, block_expand, block_offsets, block_reduce, check_width
from .exceptions import NumericalError, WeightError

RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SvdResult:
    """``M = P diag(phi) Q'`` with nonincreasing ``phi``."""

    P: np.ndarray
    phi: np.ndarray
    Q: np.ndarray

    @property
    def rank(self):
        return int(np.count_nonzero(self.phi))

    def reconstruct(self, k=None):
        k = self.phi.size if k is None else k
        return (self.P[:, :k] * self.phi[:k]) @ self.Q[:, :k].T


def _fix_signs(P, Q):
    if P.size == 0:
        return P, Q
    idx = np.argmax(np.abs(P), axis=0)
    signs = np.sign(P[idx, np.arange(P.shape[1])])
    signs[signs == 0] = 1.0
    return P * signs, Q * signs


def _truncate_small(phi):
    phi = np.array(phi, dtype=float)
    if phi.size and phi[0] > 0:
        phi[phi < RANK_RTOL * phi[0]] = 0.0
    return phi


def thin_svd(M):
    """Thin SVD with the deterministic sign convention.

    Singular values below ``1e-12 * phi[0]`` are set to exactly zero.

    Raises
    ------
    NumericalError
        Non-finite input or LAPACK failure.
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise NumericalError("SVD input contains non-finite entries")
    if M.size == 0:
        r = min(M.shape)
        return SvdResult(np.zeros((M.shape[0], r)), np.zeros(r), np.zeros((M.shape[1], r)))
    try:
        P, phi, Qt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    P, Q = _fix_signs(P, Qt.T)
    return SvdResult(P, _truncate_small(phi), Q)


def row_center(M):
    """``J M`` with ``J = I - 11'/n``: subtract column means."""
    M = np.asarray(M, dtype=float)
    return M - M.mean(axis=0)


def block_center(M, blocks):
    """``M J_c``: subtract, within each row, the mean of every column block."""
    M = np.asarray(M, dtype=float)
    blocks = as_blocks(blocks)
    check_width(M, blocks)
    means = block_reduce(np.add, M, blocks) / np.asarray(blocks)
    return M - block_expand(means, blocks)


def weighted_gsvd(M, row_weights, col_weights):
    """Generalized SVD of the triplet (M, column weights, row weights).

    Returns ``SvdResult(P=U~, phi, Q=V~)`` with ``M = U~ diag(phi) V~'``,
    ``U~' diag(row_weights) U~ = I`` and ``V~' diag(col_weights) V~ = I``.
    Weights are given as diagonals (1-D) or scalars.
    """
    M = np.asarray(M, dtype=float)
    r = np.broadcast_to(np.asarray(row_weights, dtype=float), (M.shape[0],))
    c = np.broadcast_to(np.asarray(col_weights, dtype=float), (M.shape[1],))
    if np.any(~(r > 0)) or np.any(~(c > 0)):
        raise WeightError("weights must be strictly positive")
    sr, sc = np.sqrt(r), np.sqrt(c)
    core = thin_svd(sr[:, None] * M * sc[None, :])
    return SvdResult(core.P / sr[:, None], core.phi, core.Q / sc[:, None])


def _householder_ones(m):
    """Vector v with (I - 2vv'/v'v) 1 = -sqrt(m) e_1."""
    v = np.ones(m)
    v[0] += np.sqrt(m)
    return v


def _reflect_rows(A, v):
    return A - np.outer(v, (2.0 / (v @ v)) * (v @ A))


@lru_cache(maxsize=64)
def _block_centered_basis(blocks):
    """Orthonormal basis (K, K - J) of vectors summing to zero within every block."""
    K = sum(blocks)
    basis = np.zeros((K, K - len(blocks)))
    col = 0
    for o, b in zip(block_offsets(blocks), blocks):
        v = _householder_ones(b)
        H = np.eye(b) - np.outer(v, (2.0 / (v @ v)) * v)
        basis[o:o + b, col:col + b - 1] = H[:, 1:]
        col += b - 1
    basis.setflags(write=False)
    return basis


def constrained_svd(M, blocks):
    """SVD of ``J M J_c`` whose singular vectors all satisfy the constraints.

    Every left vector is orthogonal to ``1`` and every right vector sums to
    zero within each block, including the vectors paired with zero singular
    values. The decomposition runs in orthonormal bases of those two
    subspaces (built from Householder reflections), so it returns exactly
    ``min(n - 1, K - J)`` triplets.
    """
    M = np.asarray(M, dtype=float)
    blocks = as_blocks(blocks)
    check_width(M, blocks)
    n = M.shape[0]
    vr = _householder_ones(n)
    basis = _block_centered_basis(blocks)
    core = thin_svd(_reflect_rows(M @ basis, vr)[1:])
    P = np.zeros((n, core.phi.size))
    P[1:] = core.P
    P, Q = _fix_signs(_reflect_rows(P, vr), basis @ core.Q)
    return SvdResult(P, core.phi, Q)
