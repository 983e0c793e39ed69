"""Categorical tables, their super indicator coding, and simulation.

Categories are enumerated per variable in order of first appearance, so
labels stay stable when a file is re-read. A missing cell is coded as a
block of zeros both in the indicator values and in the observation mask.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from ._blocks import as_blocks, block_offsets, block_reduce, block_slices, block_softmax, check_width
from .exceptions import DegenerateVariableError, NumericalError, ParseError, ShapeError

MISSING = -1


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CategoricalDataset:
    """A table of ``n`` observations on ``J`` categorical variables.

    Attributes
    ----------
    names : tuple of str
        Variable names, in column order.
    categories : tuple of tuple of str
        Category labels of each variable, in first-appearance order.
    codes : ndarray of int, shape (n, J)
        Category index of every cell, or ``MISSING``.
    """

    names: tuple
    categories: tuple
    codes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "categories", tuple(tuple(c) for c in self.categories))
        object.__setattr__(self, "codes", _frozen(self.codes, np.int64))
        if self.codes.ndim != 2 or self.codes.shape[1] != len(self.names):
            raise ShapeError("codes must be an (n, J) array matching the variable names")
        if len(self.categories) != len(self.names):
            raise ShapeError("one category list per variable is required")
        for name, labels, col in zip(self.names, self.categories, self.codes.T):
            if len(set(labels)) != len(labels):
                raise ParseError(f"duplicate category labels in variable {name!r}")
            if len(labels) < 2:
                raise DegenerateVariableError(
                    f"variable {name!r} has {len(labels)} category; at least 2 are required"
                )
            if np.any((col < MISSING) | (col >= len(labels))):
                raise ShapeError(f"category index out of range in variable {name!r}")

    @property
    def n(self):
        return self.codes.shape[0]

    @property
    def blocks(self):
        return tuple(len(c) for c in self.categories)

    @classmethod
    def from_columns(cls, columns, names, is_missing):
        """Encode raw label columns, enumerating categories by first appearance."""
        categories, codes = [], []
        for name, column in zip(names, columns):
            lookup = {}
            col_codes = []
            for value in column:
                if is_missing(value):
                    col_codes.append(MISSING)
                else:
                    col_codes.append(lookup.setdefault(value, len(lookup)))
            if len(lookup) < 2:
                raise DegenerateVariableError(
                    f"variable {name!r} has {len(lookup)} distinct observed categories"
                )
            categories.append(tuple(lookup))
            codes.append(col_codes)
        n = len(codes[0]) if codes else 0
        return cls(names, categories, np.array(codes, dtype=np.int64).reshape(len(names), n).T)


def parse_csv(text, na_token="NA"):
    """Parse comma-separated text (or a text stream) with a header row.

    Cells equal to `na_token` (after stripping whitespace) become missing.
    Blank lines are skipped.

    Raises
    ------
    ParseError
        Empty input or rows whose length differs from the header.
    DegenerateVariableError
        A column with fewer than two distinct observed values.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    rows = [row for row in csv.reader(stream) if row]
    if not rows:
        raise ParseError("empty input: a header row is required")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(
                f"line {lineno}: expected {len(header)} fields, found {len(row)}"
            )
    columns = [[row[j].strip() for row in body] for j in range(len(header))]
    return CategoricalDataset.from_columns(columns, header, lambda v: v == na_token)


def read_csv(path, na_token="NA"):
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_csv(fh, na_token=na_token)


def write_csv(data, stream, na_token="NA"):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(data.names)
    for row in data.codes:
        writer.writerow(
            [na_token if c == MISSING else data.categories[j][c] for j, c in enumerate(row)]
        )


@dataclass(frozen=True)
class IndicatorMatrix:
    """Super indicator coding ``G`` of a categorical table with its mask ``W``.

    ``values`` and ``mask`` are (n, K) arrays of 0/1; ``blocks`` holds the
    number of categories of each variable.
    """

    values: np.ndarray
    mask: np.ndarray
    blocks: tuple

    def __post_init__(self):
        blocks = as_blocks(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        values = _frozen(self.values, np.float64)
        mask = _frozen(self.mask, np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        if values.ndim != 2 or values.shape != mask.shape:
            raise ShapeError("values and mask must be (n, K) arrays of equal shape")
        check_width(values, blocks)
        if not (np.isin(values, (0.0, 1.0)).all() and np.isin(mask, (0.0, 1.0)).all()):
            raise ShapeError("indicator values and mask must be 0/1")
        row_sums = block_reduce(np.add, values, blocks)
        mask_sums = block_reduce(np.add, mask, blocks)
        observed = mask_sums == np.asarray(blocks)
        if not np.all(observed | (mask_sums == 0)):
            raise ShapeError("mask must be constant within each variable block")
        if not (np.all(row_sums[observed] == 1) and np.all(row_sums[~observed] == 0)):
            raise ShapeError("each observed block needs exactly one 1; missing blocks none")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def K(self):
        return self.values.shape[1]

    @property
    def J(self):
        return len(self.blocks)

    @property
    def block_offsets(self):
        return block_offsets(self.blocks)

    @property
    def observed(self):
        """Boolean (n, J) array: True where cell (i, j) is observed."""
        return self.mask[:, self.block_offsets] == 1

    @property
    def max_rank(self):
        """Largest admissible number of interaction components, min(n-1, K-J)."""
        return max(0, min(self.n - 1, self.K - self.J))

    @property
    def fully_observed(self):
        return bool(self.mask.all())

    def with_missing(self, cells):
        """Copy with the given (i, j) cells masked out."""
        values = np.array(self.values)
        mask = np.array(self.mask)
        slices = block_slices(self.blocks)
        for i, j in cells:
            values[i, slices[j]] = 0.0
            mask[i, slices[j]] = 0.0
        return IndicatorMatrix(values, mask, self.blocks)


def build_indicator(data):
    """Super indicator matrix and observation mask of a :class:`CategoricalDataset`."""
    blocks = data.blocks
    offsets = block_offsets(blocks)
    n = data.n
    values = np.zeros((n, sum(blocks)))
    mask = np.zeros((n, sum(blocks)))
    for j, (off, size) in enumerate(zip(offsets, blocks)):
        col = data.codes[:, j]
        seen = col != MISSING
        values[np.flatnonzero(seen), off + col[seen]] = 1.0
        mask[seen, off:off + size] = 1.0
    return IndicatorMatrix(values, mask, blocks)


def decode_indicator(G):
    """Category codes (n, J) of an indicator matrix; missing blocks give ``MISSING``."""
    codes = np.full((G.n, G.J), MISSING, dtype=np.int64)
    for j, sl in enumerate(block_slices(G.blocks)):
        block = G.values[:, sl]
        hit = block.sum(axis=1) == 1
        codes[hit, j] = np.argmax(block[hit], axis=1)
    return codes


def category_margins(G):
    """Observed count of every category, ``1'G``."""
    return G.values.sum(axis=0)


def export_indicator_csv(G, stream):
    """Dense 0/1 dump of ``G`` for debugging; missing blocks are written as NA."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([f"v{j + 1}_{k + 1}" for j, b in enumerate(G.blocks) for k in range(b)])
    for g, w in zip(G.values, G.mask):
        writer.writerow([int(x) if m else "NA" for x, m in zip(g, w)])


def _philox(seed):
    if int(seed) < 0:
        raise ValueError("seed must be a non-negative integer")
    return np.random.Generator(np.random.Philox(key=int(seed)))


def simulate_multinomial(mu, interaction, blocks, seed, mask=None):
    """Draw one category per cell from the blockwise softmax of ``mu + interaction``.

    Draws use inverse-CDF sampling on uniforms from a counter-based
    (Philox) stream keyed by `seed`; cell (i, j) always consumes the
    ``i * J + j``-th uniform, so the result does not depend on how the
    work is scheduled.

    Parameters
    ----------
    mu : array_like, shape (K,)
    interaction : array_like, shape (n, K)
        Zero for the no-interaction model.
    blocks : sequence of int
    seed : int
    mask : array_like, optional
        (n, K) 0/1 mask; masked cells are returned as missing.

    Returns
    -------
    IndicatorMatrix
    """
    blocks = as_blocks(blocks)
    theta = np.asarray(mu, dtype=float)[None, :] + np.asarray(interaction, dtype=float)
    check_width(theta, blocks)
    if not np.all(np.isfinite(theta)):
        raise NumericalError("non-finite linear predictor in simulation")
    n = theta.shape[0]
    probs = block_softmax(theta, blocks)
    u = _philox(seed).random((n, len(blocks)))
    values = np.zeros_like(theta)
    for j, sl in enumerate(block_slices(blocks)):
        cdf = np.cumsum(probs[:, sl], axis=1)
        k = np.minimum((u[:, [j]] >= cdf).sum(axis=1), blocks[j] - 1)
        values[np.arange(n), sl.start + k] = 1.0
    if mask is None:
        return IndicatorMatrix(values, np.ones_like(values), blocks)
    mask = np.asarray(mask, dtype=float)
    return IndicatorMatrix(values * mask, mask, blocks)


def planted_interaction(n, blocks, singular_values, seed):
    """Random rank-r interaction ``U diag(d) V'`` obeying the identification constraints.

    ``U`` (n, r) has orthonormal, centered columns and ``V`` (K, r) has
    orthonormal columns that sum to zero within every block.

    Returns
    -------
    U, d, V : ndarray
    """
    blocks = as_blocks(blocks)
    d = np.sort(np.asarray(singular_values, dtype=float))[::-1]
    r = d.size
    K = sum(blocks)
    if r > min(n - 1, K - len(blocks)):
        raise ShapeError(f"rank {r} exceeds min(n - 1, K - J)")
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, r))
    U -= U.mean(axis=0)
    V = rng.standard_normal((K, r))
    for sl in block_slices(blocks):
        V[sl] -= V[sl].mean(axis=0)
    U = np.linalg.qr(U)[0]
    V = np.linalg.qr(V)[0]
    return U, d, V
