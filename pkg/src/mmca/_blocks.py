"""Column-block helpers for matrices laid out as [block_1 | ... | block_J]."""

from functools import lru_cache

import numpy as np

from .exceptions import ShapeError


def as_blocks(blocks):
    blocks = tuple(int(b) for b in blocks)
    if not blocks or min(blocks) < 1:
        raise ShapeError(f"invalid block structure {blocks!r}")
    return blocks


def block_offsets(blocks):
    """Start column of each block."""
    return _offsets(tuple(blocks))


@lru_cache(maxsize=256)
def _offsets(blocks):
    out = np.concatenate(([0], np.cumsum(blocks)[:-1])).astype(np.intp)
    out.setflags(write=False)
    return out


def block_slices(blocks):
    offsets = block_offsets(blocks)
    return [slice(int(o), int(o) + int(b)) for o, b in zip(offsets, blocks)]


def check_width(M, blocks):
    if M.shape[-1] != sum(blocks):
        raise ShapeError(
            f"matrix has {M.shape[-1]} columns but blocks {blocks} sum to {sum(blocks)}"
        )


def block_reduce(ufunc, M, blocks):
    """Apply ``ufunc.reduceat`` over column blocks; returns shape (..., J)."""
    return ufunc.reduceat(M, block_offsets(blocks), axis=-1)


def block_expand(R, blocks):
    """Inverse of :func:`block_reduce`: repeat each block value across its columns."""
    return np.repeat(R, blocks, axis=-1)


def block_logsumexp(theta, blocks):
    m = block_reduce(np.maximum, theta, blocks)
    s = block_reduce(np.add, np.exp(theta - block_expand(m, blocks)), blocks)
    return m + np.log(s)


def block_log_softmax(theta, blocks):
    return theta - block_expand(block_logsumexp(theta, blocks), blocks)


def block_softmax(theta, blocks):
    m = block_expand(block_reduce(np.maximum, theta, blocks), blocks)
    e = np.exp(theta - m)
    return e / block_expand(block_reduce(np.add, e, blocks), blocks)
