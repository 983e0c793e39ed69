"""Multinomial multiple correspondence analysis.

A low-rank multinomial-logit model for tables of categorical variables,
fitted by majorization with a nuclear-norm penalty, plus classical MCA,
penalty selection, and biplot export.
"""

from .dataset import (
    MISSING,
    CategoricalDataset,
    IndicatorMatrix,
    build_indicator,
    category_margins,
    parse_csv,
    read_csv,
    simulate_multinomial,
)
from .estimator import MCA, MMCA
from .exceptions import (
    DegenerateCategoryError,
    DegenerateVariableError,
    FoldError,
    MissingValueError,
    MMCAError,
    NumericalError,
    ParseError,
    RankError,
    ShapeError,
    WeightError,
)
from .mca import McaResult, fit_mca, reconstruct
from .model import (
    BiplotCoords,
    FitConfig,
    FitResult,
    ModelParams,
    biplot_coords,
    fit,
    linear_predictor,
    penalized_deviance,
    predict_proba,
    softmax_probs,
)
from .selection import CvResult, QutConfig, QutResult, cross_validate, qut_lambda

__version__ = "0.1.0"
