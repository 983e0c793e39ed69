"""Exception hierarchy shared by all modules."""


class MMCAError(Exception):
    """Base class for every error raised by this package."""


class ParseError(MMCAError, ValueError):
    """Malformed CSV input (ragged rows, missing header)."""


class DegenerateVariableError(MMCAError, ValueError):
    """A variable has fewer than two observed categories."""


class DegenerateCategoryError(MMCAError, ValueError):
    """A category column has zero observed count where a positive one is needed."""


class ShapeError(MMCAError, ValueError):
    """Array dimensions disagree with the declared block structure."""


class WeightError(MMCAError, ValueError):
    """Non-positive weight passed to a weighted decomposition."""


class RankError(MMCAError, ValueError):
    """Requested number of components is outside the admissible range."""


class NumericalError(MMCAError, ArithmeticError):
    """Non-finite values or a failed factorization."""


class FoldError(MMCAError, ValueError):
    """Cross-validation folds cannot be formed."""


class MissingValueError(MMCAError, ValueError):
    """Missing cells passed to a method that needs complete data."""
