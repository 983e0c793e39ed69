import numpy as np
import pytest

from mmca.dataset import CategoricalDataset, build_indicator, simulate_multinomial
from mmca.exceptions import DegenerateCategoryError, MissingValueError, RankError
from mmca.linalg import block_center, row_center, weighted_gsvd
from mmca.mca import fit_mca, mca_loss, reconstruct


def _random_G(seed, n=40, blocks=(3, 4, 2, 3)):
    K = sum(blocks)
    theta = 2 * np.random.default_rng(seed).standard_normal((n, K))
    return simulate_multinomial(np.zeros(K), theta, blocks, seed=seed)


def test_example_two_components(example_G):
    res = fit_mca(example_G, 2)
    assert res.X.shape == (10, 2) and res.A.shape == (8, 2)
    assert np.all(np.diff(res.singular_values) <= 0)
    np.testing.assert_allclose(res.X.sum(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(res.U_tilde.T @ res.U_tilde / 10, np.eye(2), atol=1e-12)
    C = res.col_weights
    np.testing.assert_allclose(res.V_tilde.T @ (C[:, None] * res.V_tilde), np.eye(2), atol=1e-12)


def test_example_matches_direct_triplet(example_G):
    # Oracle: the triplet assembled by hand from the printed matrix.
    G = example_G.values.astype(float)
    Dc = G.mean(axis=0)
    direct = weighted_gsvd(G - Dc, 1 / 10, 1 / (3 * np.sqrt(Dc)))
    res = fit_mca(example_G, 2)
    np.testing.assert_allclose(res.singular_values, direct.phi[:2], rtol=1e-12)


def test_example_fitted_values_can_be_negative(example_G):
    G_hat = reconstruct(fit_mca(example_G, 2))
    assert G_hat.min() < 0


def test_fitted_block_row_sums_are_one(example_G):
    res = fit_mca(example_G, 2)
    G_hat = reconstruct(res)
    for o, b in zip(example_G.block_offsets, example_G.blocks):
        np.testing.assert_allclose(G_hat[:, o:o + b].sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(G_hat.sum(axis=1), example_G.J, atol=1e-12)
    # Category coordinates sum to zero within each block.
    np.testing.assert_allclose(block_center(res.A.T, example_G.blocks), res.A.T, atol=1e-12)


def test_full_rank_reconstructs_indicator():
    G = _random_G(1)
    res = fit_mca(G, G.max_rank)
    np.testing.assert_allclose(res.X @ res.A.T, row_center(G.values), atol=1e-8)
    np.testing.assert_allclose(reconstruct(res), G.values, atol=1e-8)
    assert mca_loss(G, res) < 1e-12


def test_zero_components_gives_proportions(example_G):
    res = fit_mca(example_G, 2)
    G_hat = reconstruct(res, 0)
    np.testing.assert_allclose(G_hat, np.tile(example_G.values.mean(axis=0), (10, 1)))


def test_loss_nonincreasing_in_rank():
    G = _random_G(2)
    res = fit_mca(G, G.max_rank)
    losses = [mca_loss(G, res, k) for k in range(G.max_rank + 1)]
    assert np.all(np.diff(losses) <= 1e-12)
    # Eckart-Young: the loss drop at step k is the squared singular value.
    np.testing.assert_allclose(-np.diff(losses), res.singular_values ** 2, rtol=1e-8, atol=1e-12)


def test_identical_rows_raise():
    data = CategoricalDataset(["a", "b"], [["x", "y"], ["u", "v"]], [[0, 1]] * 5)
    with pytest.raises(DegenerateCategoryError):
        fit_mca(build_indicator(data), 1)


def test_constant_centered_matrix_has_zero_singular_values():
    # The centered indicator of identical rows is zero whatever the weights.
    svd = weighted_gsvd(np.zeros((5, 4)), 1 / 5, [1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(svd.phi, 0.0)


def test_missing_raises(example_G):
    with pytest.raises(MissingValueError):
        fit_mca(example_G.with_missing([(0, 0)]), 1)


@pytest.mark.parametrize("p", [0, 6])
def test_rank_bounds(example_G, p):
    # max_rank = min(9, 8 - 3) = 5
    with pytest.raises(RankError):
        fit_mca(example_G, p)
