"""Sparse completion objective and gradient over tensor-train cores.

Given M observed entries y_m at multi-indices (i_1^m, ..., i_N^m) and a TT
model with prediction x_m (the chained slice product at that index), the loss
is

    f(cores) = 1/2 * sum_m (y_m - x_m)^2

and the gradient of the slice core_n[:, j, :] collects contributions from
exactly the observations whose n-th index equals j:

    df/dslice(n, j) = sum_{m: i_n^m = j} (x_m - y_m) * P_n[m]^T S_n[m]^T

where P_n[m] is the left partial product of slices 1..n-1 (a 1 x r_{n-1} row)
and S_n[m] the right partial product of slices n+1..N (an r_n x 1 column).
One prefix sweep and one suffix sweep per evaluation produce every P_n and
S_n, so a fused objective+gradient call costs O(M * sum r_{n-1} r_n).

Evaluation is deterministic: observations are reduced in a canonical order
(ascending column-major cell offset), so permuting the stored entries changes
no output bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import TensorShape
from .errors import BoundsError, ShapeError
from .ttmodel import TTCores


@dataclass(eq=False)
class SparseObservations:
    """M observed entries of a partially known tensor.

    ``indices`` is an (M, N) int array of 1-based multi-indices, ``values``
    the matching float array. Treated as immutable after construction;
    derived lookup structures are cached lazily.
    """

    shape: TensorShape
    indices: np.ndarray
    values: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, init=False)

    def __post_init__(self):
        indices = np.atleast_2d(np.asarray(self.indices, dtype=np.int64))
        values = np.asarray(self.values, dtype=np.float64).ravel()
        self.indices = indices
        self.values = values
        if indices.ndim != 2 or indices.shape[1] != self.shape.order:
            raise ShapeError(
                f"index array of shape {indices.shape} does not match order-{self.shape.order} "
                f"shape {self.shape}"
            )
        if indices.shape[0] != values.size:
            raise ShapeError(f"{indices.shape[0]} indices but {values.size} values")
        if values.size < 1:
            raise ShapeError("at least one observation is required")
        for n, size in enumerate(self.shape.sizes):
            col = indices[:, n]
            bad = np.nonzero((col < 1) | (col > size))[0]
            if bad.size:
                raise BoundsError(
                    f"observation {bad[0] + 1}: coordinate {col[bad[0]]} out of range "
                    f"[1, {size}] in mode {n + 1}"
                )

    @property
    def count(self) -> int:
        return self.values.size

    def linear_indices(self) -> np.ndarray:
        """0-based column-major cell offsets, one per observation."""
        if "lin" not in self._cache:
            self._cache["lin"] = np.ravel_multi_index(
                tuple((self.indices - 1).T), self.shape.sizes, order="F"
            )
        return self._cache["lin"]

    def has_duplicates(self) -> bool:
        lin = self.linear_indices()
        return np.unique(lin).size != lin.size

    def _canonical(self):
        """Observations reordered by ascending cell offset, plus mode groups."""
        if "canonical" not in self._cache:
            order = np.argsort(self.linear_indices(), kind="stable")
            idx0 = np.ascontiguousarray(self.indices[order] - 1)
            vals = self.values[order]
            groups = [_group_by_mode(idx0[:, n]) for n in range(self.shape.order)]
            self._cache["canonical"] = (idx0, vals, groups)
        return self._cache["canonical"]


def _group_by_mode(idx_col: np.ndarray):
    """Sort observation rows by one mode's index and mark the segments.

    Returns (perm, labels, bounds): applying ``perm`` groups equal indices
    into contiguous runs; run t spans bounds[t]:bounds[t+1] and carries the
    0-based slice index labels[t].
    """
    perm = np.argsort(idx_col, kind="stable")
    sorted_idx = idx_col[perm]
    labels, starts = np.unique(sorted_idx, return_index=True)
    bounds = np.append(starts, idx_col.size)
    return perm, labels, bounds


def _apply_left(prefix: np.ndarray, core: np.ndarray, group) -> np.ndarray:
    """Advance per-observation prefix rows through one core's slices."""
    perm, labels, bounds = group
    gathered = prefix[perm]
    out = np.empty((prefix.shape[0], core.shape[2]))
    for t, j in enumerate(labels):
        s, e = bounds[t], bounds[t + 1]
        out[s:e] = gathered[s:e] @ core[:, j, :]
    result = np.empty_like(out)
    result[perm] = out
    return result


def _apply_right(suffix: np.ndarray, core: np.ndarray, group) -> np.ndarray:
    """Advance per-observation suffix columns (stored as rows) through one core."""
    perm, labels, bounds = group
    gathered = suffix[perm]
    out = np.empty((suffix.shape[0], core.shape[0]))
    for t, j in enumerate(labels):
        s, e = bounds[t], bounds[t + 1]
        out[s:e] = gathered[s:e] @ core[:, j, :].T
    result = np.empty_like(out)
    result[perm] = out
    return result


def _prefix_sweep(cores: Sequence[np.ndarray], groups, m: int, keep_all: bool):
    """Left-to-right sweep. Returns (prefix list P_1..P_N or None, predictions)."""
    prefix = np.ones((m, 1))
    prefixes = [prefix] if keep_all else None
    for n, core in enumerate(cores):
        prefix = _apply_left(prefix, core, groups[n])
        if keep_all and n < len(cores) - 1:
            prefixes.append(prefix)
    return prefixes, prefix[:, 0]


def _suffix_sweep(cores: Sequence[np.ndarray], groups, m: int):
    """Right-to-left sweep producing S_1..S_N (each stored as (M, r_n) rows)."""
    n_modes = len(cores)
    suffixes = [None] * n_modes
    suffix = np.ones((m, 1))
    suffixes[n_modes - 1] = suffix
    for n in range(n_modes - 1, 0, -1):
        suffix = _apply_right(suffix, cores[n], groups[n])
        suffixes[n - 1] = suffix
    return suffixes


@dataclass(frozen=True)
class ResidualWorkspace:
    """Per-observation intermediates of one model evaluation.

    ``prefixes[n-1]`` holds the left products before mode n (M, r_{n-1});
    ``suffixes[n-1]`` the right products after mode n (M, r_n); both border
    sweeps are all-ones (empty products). Rows align with the observation
    order the workspace was built from.
    """

    predictions: np.ndarray
    prefixes: list
    suffixes: list


def residual_workspace(cores: TTCores, obs: SparseObservations) -> ResidualWorkspace:
    """Build the prefix/suffix workspace in the stored observation order."""
    _check_compatible(cores, obs)
    idx0 = obs.indices - 1
    groups = [_group_by_mode(idx0[:, n]) for n in range(obs.shape.order)]
    prefixes, x = _prefix_sweep(cores.cores, groups, obs.count, keep_all=True)
    suffixes = _suffix_sweep(cores.cores, groups, obs.count)
    return ResidualWorkspace(x, prefixes, suffixes)


def _check_compatible(cores: TTCores, obs: SparseObservations):
    if cores.shape.sizes != obs.shape.sizes:
        raise ShapeError(f"cores describe shape {cores.shape}, observations shape {obs.shape}")


def objective(cores: TTCores, obs: SparseObservations) -> float:
    """Half the squared residual over the observed entries."""
    _check_compatible(cores, obs)
    _, vals, groups = obs._canonical()
    _, x = _prefix_sweep(cores.cores, groups, obs.count, keep_all=False)
    resid = x - vals
    return 0.5 * float(np.dot(resid, resid))


def objective_and_gradient(cores: TTCores, obs: SparseObservations) -> tuple[float, np.ndarray]:
    """Fused evaluation: objective plus the flattened core gradients.

    The gradient layout matches :func:`ttcomplete.ttmodel.flatten_params`.
    Slices untouched by every observation keep an exactly zero gradient.
    """
    _check_compatible(cores, obs)
    _, vals, groups = obs._canonical()
    m = obs.count
    prefixes, x = _prefix_sweep(cores.cores, groups, m, keep_all=True)
    suffixes = _suffix_sweep(cores.cores, groups, m)
    resid = x - vals
    f = 0.5 * float(np.dot(resid, resid))

    parts = []
    for n, core in enumerate(cores.cores):
        perm, labels, bounds = groups[n]
        grad = np.zeros_like(core)
        pg = prefixes[n][perm]
        sg = suffixes[n][perm]
        rg = resid[perm]
        for t, j in enumerate(labels):
            s, e = bounds[t], bounds[t + 1]
            grad[:, j, :] = (pg[s:e] * rg[s:e, None]).T @ sg[s:e]
        parts.append(grad.ravel(order="F"))
    return f, np.concatenate(parts)


def gradient(cores: TTCores, obs: SparseObservations) -> np.ndarray:
    """Flattened gradient of the objective with respect to every core entry."""
    return objective_and_gradient(cores, obs)[1]


def reconstruct(cores: TTCores, at) -> np.ndarray:
    """Model predictions at the requested multi-indices, in the given order."""
    at = np.atleast_2d(np.asarray(at, dtype=np.int64))
    if at.shape[1] != cores.shape.order:
        raise BoundsError(
            f"indices of width {at.shape[1]} do not match order-{cores.shape.order} shape"
        )
    for n, size in enumerate(cores.shape.sizes):
        col = at[:, n]
        bad = np.nonzero((col < 1) | (col > size))[0]
        if bad.size:
            raise BoundsError(
                f"request {bad[0] + 1}: coordinate {col[bad[0]]} out of range [1, {size}] "
                f"in mode {n + 1}"
            )
    idx0 = at - 1
    groups = [_group_by_mode(idx0[:, n]) for n in range(cores.shape.order)]
    _, x = _prefix_sweep(cores.cores, groups, at.shape[0], keep_all=False)
    return x
