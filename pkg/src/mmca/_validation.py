"""Input checks for the estimator classes."""

import math

import numpy as np
from sklearn.utils.validation import validate_data

from .dataset import MISSING, CategoricalDataset


def is_missing_factory(missing_values):
    def is_missing(value):
        if value is None:
            return True
        if isinstance(value, float) and math.isnan(value):
            return True
        return missing_values is not None and value == missing_values

    return is_missing


def check_categorical(estimator, X, reset):
    """Validate `X` as a 2-D table of labels; returns an object ndarray.

    Sets ``n_features_in_`` / ``feature_names_in_`` when `reset` is True and
    checks them otherwise.
    """
    X = validate_data(estimator, X, dtype=object, ensure_all_finite=False, reset=reset)
    return np.asarray(X, dtype=object)


def feature_names(estimator, n_features):
    names = getattr(estimator, "feature_names_in_", None)
    if names is None:
        return [f"x{j}" for j in range(n_features)]
    return [str(n) for n in names]


def encode_fit(X, names, missing_values):
    return CategoricalDataset.from_columns(list(X.T), names, is_missing_factory(missing_values))


def encode_with_categories(X, dataset, missing_values):
    """Code `X` against the categories seen during fit; unknown labels raise ValueError."""
    is_missing = is_missing_factory(missing_values)
    codes = np.full(X.shape, MISSING, dtype=np.int64)
    for j, labels in enumerate(dataset.categories):
        lookup = {label: k for k, label in enumerate(labels)}
        for i, value in enumerate(X[:, j]):
            if is_missing(value):
                continue
            try:
                codes[i, j] = lookup[value]
            except KeyError:
                raise ValueError(
                    f"unknown category {value!r} for variable {dataset.names[j]!r}"
                ) from None
    return CategoricalDataset(dataset.names, dataset.categories, codes)
