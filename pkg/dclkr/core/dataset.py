"""Party datasets and their CSV form."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from dclkr.core.errors import ConfigError


@dataclass
class PartyDataset:
    """Inputs X (n x d) and labels y (n,) held by one party, or a pooled sample."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        self.X = X
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.shape[0] != self.y.shape[0]:
            raise ConfigError(f"{self.X.shape[0]} inputs but {self.y.shape[0]} labels")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, idx) -> "PartyDataset":
        return PartyDataset(self.X[idx], self.y[idx])

    @staticmethod
    def concat(parts: list["PartyDataset"]) -> "PartyDataset":
        if not parts:
            raise ConfigError("Cannot concatenate zero datasets")
        return PartyDataset(np.vstack([p.X for p in parts]), np.concatenate([p.y for p in parts]))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.X, columns=[f"x_{j + 1}" for j in range(self.dim)])
        frame["y"] = self.y
        return frame

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, lineterminator="\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "PartyDataset":
        frame = pd.read_csv(path, float_precision="round_trip")
        if "y" not in frame.columns:
            raise ConfigError(f"{path}: missing 'y' column")
        x_cols = [c for c in frame.columns if c.startswith("x_")]
        if not x_cols:
            raise ConfigError(f"{path}: no x_* columns")
        x_cols.sort(key=lambda c: int(c.split("_", 1)[1]))
        return cls(frame[x_cols].to_numpy(dtype=np.float64), frame["y"].to_numpy(dtype=np.float64))
