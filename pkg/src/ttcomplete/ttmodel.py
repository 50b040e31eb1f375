"""Tensor-train model: core storage, entry evaluation, and parameter packing.

An order-N tensor is represented by N three-way cores; core n has shape
(r_{n-1}, I_n, r_n) with boundary ranks r_0 = r_N = 1. The entry at
multi-index (i_1, ..., i_N) is the product of the N lateral slices
core_n[:, i_n, :], a chain of r_{n-1} x r_n matrices collapsing to a scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DenseTensor, TensorShape, check_multi_index
from .errors import CapacityError, ShapeError

# Default ceiling for materializing a full tensor from its cores.
DEFAULT_FULL_LIMIT = 2**24


@dataclass(frozen=True)
class TTRank:
    """Rank chain r_0..r_N bounding the core slice dimensions."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        object.__setattr__(self, "ranks", ranks)
        if len(ranks) < 2:
            raise ShapeError("a rank chain needs at least two entries")
        for r in ranks:
            if r < 1:
                raise ShapeError(f"rank chain {ranks} contains non-positive rank {r}")
        if ranks[0] != 1 or ranks[-1] != 1:
            raise ShapeError(f"boundary ranks must be 1, got r_0={ranks[0]}, r_N={ranks[-1]}")

    @property
    def order(self) -> int:
        return len(self.ranks) - 1


@dataclass(frozen=True)
class TTCores:
    """The optimization variable: one three-way core per tensor mode."""

    cores: tuple[np.ndarray, ...]
    shape: TensorShape
    rank: TTRank

    def __post_init__(self):
        cores = tuple(np.asarray(c, dtype=np.float64) for c in self.cores)
        object.__setattr__(self, "cores", cores)
        if self.rank.order != self.shape.order or len(cores) != self.shape.order:
            raise ShapeError(
                f"shape {self.shape} (order {self.shape.order}) needs {self.shape.order} cores "
                f"and a rank chain of length {self.shape.order + 1}"
            )
        for n, core in enumerate(cores):
            want = (self.rank.ranks[n], self.shape.sizes[n], self.rank.ranks[n + 1])
            if core.shape != want:
                raise ShapeError(f"core {n + 1} has shape {core.shape}, expected {want}")

    @property
    def param_count(self) -> int:
        return sum(c.size for c in self.cores)


def cap_ranks(shape: TensorShape, ranks: Sequence[int]) -> TTRank:
    """Clip a requested rank chain to what the shape can support.

    Rank r_n can never usefully exceed min(I_1*...*I_n, I_{n+1}*...*I_N).
    """
    ranks = [int(r) for r in ranks]
    if len(ranks) != shape.order + 1:
        raise ShapeError(f"rank chain length {len(ranks)} does not fit order-{shape.order} shape {shape}")
    capped = []
    for n, r in enumerate(ranks):
        left = math.prod(shape.sizes[:n]) if n > 0 else 1
        right = math.prod(shape.sizes[n:]) if n < shape.order else 1
        capped.append(min(r, left, right))
    return TTRank(tuple(capped))


def uniform_ranks(shape: TensorShape, interior: int) -> TTRank:
    """Rank chain (1, r, ..., r, 1) capped by the shape."""
    return cap_ranks(shape, (1,) + (int(interior),) * (shape.order - 1) + (1,))


def random_init(shape: TensorShape, rank: TTRank, seed: int, scale: float = 1.0) -> TTCores:
    """Draw cores with i.i.d. Gaussian entries of mean 0 and std ``scale``."""
    if scale < 0:
        raise ValueError(f"scale must be non-negative, got {scale}")
    if rank.order != shape.order:
        raise ShapeError(
            f"rank chain of length {len(rank.ranks)} does not fit order-{shape.order} shape {shape}"
        )
    rng = np.random.default_rng(seed)
    cores = []
    for n in range(shape.order):
        dims = (rank.ranks[n], shape.sizes[n], rank.ranks[n + 1])
        cores.append(scale * rng.standard_normal(dims))
    return TTCores(tuple(cores), shape, rank)


def tt_entry(cores: TTCores, idx: Sequence[int]) -> float:
    """Evaluate one tensor entry as the chained product of selected slices.

    The product is accumulated left to right as a running row vector, so one
    entry costs O(sum r_{n-1} r_n) instead of materializing N matrices.
    """
    coords = check_multi_index(cores.shape, idx)
    row = cores.cores[0][:, coords[0] - 1, :]
    for n in range(1, len(coords)):
        row = row @ cores.cores[n][:, coords[n] - 1, :]
    return float(row[0, 0])


def tt_full(cores: TTCores, limit: int = DEFAULT_FULL_LIMIT) -> DenseTensor:
    """Materialize the full tensor represented by the cores.

    Refuses shapes with more than ``limit`` entries.
    """
    count = cores.shape.element_count
    if count > limit:
        raise CapacityError(f"shape {cores.shape} has {count} entries, over the limit of {limit}")
    # Left-to-right sweep: after mode n the rows of `left` enumerate the
    # column-major prefix indices (i_1, ..., i_n) and columns span r_n.
    left = np.ones((1, 1))
    for n, core in enumerate(cores.cores):
        grown = np.tensordot(left, core, axes=(1, 0))
        left = grown.reshape((left.shape[0] * cores.shape.sizes[n], core.shape[2]), order="F")
    return DenseTensor(cores.shape, left[:, 0])


def flatten_params(cores: TTCores) -> np.ndarray:
    """Pack all cores into one flat vector, core 1..N, each column-major."""
    return np.concatenate([c.ravel(order="F") for c in cores.cores])


def unflatten_params(template: TTCores, flat: np.ndarray) -> TTCores:
    """Rebuild cores shaped like ``template`` from a flat parameter vector."""
    flat = np.asarray(flat, dtype=np.float64).ravel()
    if flat.size != template.param_count:
        raise ShapeError(f"parameter vector has {flat.size} entries, expected {template.param_count}")
    cores = []
    offset = 0
    for c in template.cores:
        block = flat[offset : offset + c.size]
        cores.append(block.reshape(c.shape, order="F"))
        offset += c.size
    return TTCores(tuple(cores), template.shape, template.rank)
