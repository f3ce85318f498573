"""Reference loss functions for attention-mask supervision (no training code)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError

EPS = 1e-7


@dataclass(frozen=True)
class LossParams:
    theta: float = 0.68
    gamma: float = 2.0
    lam: float = 0.01

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ParameterError("theta must lie in (0, 1)")
        if self.gamma < 0 or self.lam < 0:
            raise ParameterError("gamma and lambda must be non-negative")


def focal_loss(p, y, params: LossParams = LossParams()):
    """Class-weighted focal loss; ``p`` is clamped to [EPS, 1 - EPS]."""
    p = np.clip(np.asarray(p, dtype=np.float64), EPS, 1 - EPS)
    y = np.asarray(y, dtype=np.float64)
    th, g = params.theta, params.gamma
    out = -th * (1 - p) ** g * y * np.log(p) - (1 - th) * p ** g * (1 - y) * np.log1p(-p)
    return float(out) if out.ndim == 0 else out


def attention_mask_loss(m1, m1_topo, m2, m2_topo) -> float:
    """Sum (not mean) of squared differences, over both mask dimensions."""
    total = 0.0
    for a, b in ((m1, m1_topo), (m2, m2_topo)):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise ShapeError(f"attention map shape {a.shape} != mask shape {b.shape}")
        total += float(np.sum((a - b) ** 2))
    return total


def total_loss(focal: float, mask: float, lam: float = LossParams.lam) -> float:
    return focal + lam * mask
