"""Standard scaling with explicit, serializable parameters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StandardScaler:
    """Per-feature mean/std scaler.

    Constant features are excluded from scaling: their ``scale_`` entry is
    fixed at 1 and ``active`` is False, so transform maps them to exactly 0
    deviation and inverse_transform restores them bit-exactly.
    """

    mean_: np.ndarray
    scale_: np.ndarray
    active: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "StandardScaler":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        active = std > 0.0
        scale = np.where(active, std, 1.0)
        return cls(mean_=mean, scale_=scale, active=active)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean_) / self.scale_

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.scale_ + self.mean_

    def to_dict(self) -> dict:
        return {
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
            "active": self.active.astype(bool).tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "StandardScaler":
        return cls(
            mean_=np.asarray(payload["mean"], dtype=float),
            scale_=np.asarray(payload["scale"], dtype=float),
            active=np.asarray(payload["active"], dtype=bool),
        )
