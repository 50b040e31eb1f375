"""Reconstruction quality measures."""

from __future__ import annotations

import math

import numpy as np

from .core import DenseTensor
from .errors import ShapeError

PEAK_VALUE = 255.0


def rse(est: DenseTensor, truth: DenseTensor) -> float:
    """Relative error ||est - truth||_F / ||truth||_F over the full tensor."""
    if est.shape.sizes != truth.shape.sizes:
        raise ShapeError(f"shape mismatch {est.shape} vs {truth.shape}")
    denom = float(np.linalg.norm(truth.values))
    if denom == 0.0:
        raise ValueError("reference tensor has zero norm")
    return float(np.linalg.norm(est.values - truth.values)) / denom


def psnr(est: DenseTensor, truth: DenseTensor) -> float:
    """Peak signal-to-noise ratio in dB against an 8-bit peak of 255.

    The mean squared error runs over all pixels and channels jointly; an
    exact match reports +inf.
    """
    if est.shape.sizes != truth.shape.sizes:
        raise ShapeError(f"shape mismatch {est.shape} vs {truth.shape}")
    diff = est.values - truth.values
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK_VALUE * PEAK_VALUE / mse)
