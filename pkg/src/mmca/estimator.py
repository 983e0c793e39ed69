"""scikit-learn style estimators wrapping the functional API.

``MMCA`` and ``MCA`` take a 2-D table of category labels (array or
DataFrame). ``None``, NaN and the optional ``missing_values`` label mark
missing cells; only ``MMCA`` accepts them.
"""

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._blocks import block_log_softmax, block_slices, block_softmax
from ._validation import check_categorical, encode_fit, encode_with_categories, feature_names
from .dataset import build_indicator
from .mca import fit_mca, reconstruct
from .model import FitConfig, biplot_coords, fit, linear_predictor


class MMCA(TransformerMixin, BaseEstimator):
    """Multinomial multiple correspondence analysis.

    Parameters
    ----------
    n_components : int, default=2
        Rank of the interaction.
    lam : float, default=0.0
        Weight of the sum of singular values in the objective.
    epsilon : float, default=1e-8
        Relative decrease of the objective below which fitting stops.
    max_iter : int, default=5000
    init : {"margins", "log-margins"}, default="margins"
    scaling : {"interaction", "symmetric"}, default="interaction"
        Biplot scaling of the row and category coordinates.
    missing_values : object, default=None
        Extra label to treat as missing.

    Attributes
    ----------
    result_ : FitResult
    params_ : ModelParams
    dataset_ : CategoricalDataset
        Encoded training table (holds ``categories``).
    row_coordinates_, category_coordinates_ : ndarray
    effective_rank_ : int
    n_iter_ : int
    """

    def __init__(self, n_components=2, lam=0.0, epsilon=1e-8, max_iter=5000,
                 init="margins", scaling="interaction", missing_values=None):
        self.n_components = n_components
        self.lam = lam
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.init = init
        self.scaling = scaling
        self.missing_values = missing_values

    def fit(self, X, y=None):
        X = check_categorical(self, X, reset=True)
        self.dataset_ = encode_fit(X, feature_names(self, X.shape[1]), self.missing_values)
        G = build_indicator(self.dataset_)
        config = FitConfig(p=self.n_components, lam=self.lam, epsilon=self.epsilon,
                           max_iter=self.max_iter, init=self.init)
        self.result_ = fit(G, config)
        self.params_ = self.result_.params
        self.n_iter_ = self.result_.iterations
        self.effective_rank_ = self.result_.effective_rank
        coords = biplot_coords(self.params_, self.scaling)
        self.row_coordinates_ = coords.X
        self.category_coordinates_ = coords.A
        return self

    @property
    def categories_(self):
        check_is_fitted(self)
        return [list(c) for c in self.dataset_.categories]

    def fit_transform(self, X, y=None):
        return self.fit(X).row_coordinates_

    def _project(self, G, tol=1e-10, max_iter=1000):
        """Row scores ``u`` for new rows with ``mu, d, V`` held fixed.

        Each row minimizes its deviance plus ``lam * sum_s d_s u_s^2``; over
        rows with orthonormal ``U`` that penalty sums to ``lam * sum(d)``, so
        training rows map back onto their fitted scores. Each pass minimizes
        the quadratic bound used in fitting, so the objective of every row
        is nonincreasing.
        """
        p = self.params_
        active = p.d > 0
        u = np.zeros((G.n, p.n_components))
        for _ in range(max_iter):
            theta = p.mu + (u * p.d) @ p.V.T
            Z = theta + 2.0 * (G.values - G.mask * block_softmax(theta, G.blocks))
            u_new = np.zeros_like(u)
            u_new[:, active] = ((Z - p.mu) @ p.V[:, active]) / (p.d[active] + 2.0 * self.lam)
            done = np.max(np.abs(u_new - u), initial=0.0) < tol
            u = u_new
            if done:
                break
        return u

    def _theta(self, X):
        check_is_fitted(self)
        X = check_categorical(self, X, reset=False)
        G = build_indicator(encode_with_categories(X, self.dataset_, self.missing_values))
        u = self._project(G)
        return G, self.params_.mu + (u * self.params_.d) @ self.params_.V.T, u

    def transform(self, X):
        """Row coordinates of new rows, in the fitted biplot scaling."""
        _, _, u = self._theta(X)
        n = self.params_.n
        if self.scaling == "symmetric":
            return math.sqrt(n) * u * self.params_.d ** 0.25
        return math.sqrt(n) * u

    def predict_proba(self, X):
        """Category probabilities, shape (n_samples, K), blockwise stochastic."""
        _, theta, _ = self._theta(X)
        return block_softmax(theta, self.params_.blocks)

    def predict(self, X):
        """Most probable label of every variable, also for missing cells."""
        probs = self.predict_proba(X)
        out = np.empty((probs.shape[0], len(self.params_.blocks)), dtype=object)
        for j, sl in enumerate(block_slices(self.params_.blocks)):
            labels = np.array(self.dataset_.categories[j], dtype=object)
            out[:, j] = labels[np.argmax(probs[:, sl], axis=1)]
        return out

    def score(self, X, y=None):
        """Mean log-likelihood per observed cell (higher is better)."""
        G, theta, _ = self._theta(X)
        n_obs = int(G.observed.sum())
        ll = float(np.sum(G.values * block_log_softmax(theta, G.blocks)))
        return ll / n_obs if n_obs else 0.0

    def fitted_probabilities(self):
        """``Pi`` of the training data under the fitted parameters."""
        check_is_fitted(self)
        return block_softmax(linear_predictor(self.params_), self.params_.blocks)


class MCA(TransformerMixin, BaseEstimator):
    """Classical multiple correspondence analysis (complete data only).

    Attributes
    ----------
    result_ : McaResult
    singular_values_ : ndarray
    row_coordinates_, category_coordinates_ : ndarray
    """

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_categorical(self, X, reset=True)
        self.dataset_ = encode_fit(X, feature_names(self, X.shape[1]), None)
        self.indicator_ = build_indicator(self.dataset_)
        self.result_ = fit_mca(self.indicator_, self.n_components)
        self.singular_values_ = self.result_.singular_values
        self.row_coordinates_ = self.result_.X
        self.category_coordinates_ = self.result_.A
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).row_coordinates_

    def transform(self, X):
        """Row coordinates through the transition formula ``X = J G C V~ Lambda^{-1/4}``.

        Rows are centered with the training category proportions.
        """
        check_is_fitted(self)
        X = check_categorical(self, X, reset=False)
        G = build_indicator(encode_with_categories(X, self.dataset_, None))
        res = self.result_
        scale = np.zeros_like(res.singular_values)
        nz = res.singular_values > 0
        scale[nz] = res.singular_values[nz] ** -0.5
        return ((G.values - res.mu) * res.col_weights) @ res.V_tilde * scale

    def reconstruct(self):
        """Fitted indicator values ``G_hat`` of the training data."""
        check_is_fitted(self)
        return reconstruct(self.result_)

