"""Field-size estimation from a subset of observed places (German tank problem)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError, TieError

__all__ = ["PopulationEstimate", "sample_max", "german_tank_umvue"]


@dataclass(frozen=True)
class PopulationEstimate:
    n_hat: float
    c: int
    d_max: int

    @property
    def scale(self) -> float:
        """``n_hat + 1``, i.e. ``(1 + 1/c) * d_max``."""
        return self.d_max * (self.c + 1) / self.c

    @property
    def n_ceil(self) -> int:
        """Smallest integer >= n_hat, computed in exact integer arithmetic."""
        return -(-(self.d_max * (self.c + 1) - self.c) // self.c)


def _as_places(sample: Sequence[int]) -> np.ndarray:
    arr = np.asarray(sample)
    if arr.ndim != 1:
        raise DomainError("places must be a one-dimensional sequence")
    if arr.size == 0:
        raise InsufficientDataError("place sample is empty")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise DomainError("places must be integers")
    elif arr.dtype.kind not in "iu":
        raise DomainError(f"places must be integers, got dtype {arr.dtype}")
    arr = arr.astype(np.int64)
    if np.any(arr < 1):
        raise DomainError("places must be >= 1")
    return arr


def sample_max(sample: Sequence[int]) -> int:
    return int(_as_places(sample).max())


def german_tank_umvue(sample: Sequence[int]) -> PopulationEstimate:
    """Minimum-variance unbiased estimate of n from a without-replacement
    sample of {1, ..., n}: ``(1 + 1/c) * max - 1``.

    The estimate is left real-valued; callers round when they need an
    integer bound.
    """
    arr = _as_places(sample)
    if np.unique(arr).size != arr.size:
        raise TieError("places must be unique (no ties)")
    c = int(arr.size)
    d = int(arr.max())
    # single rounding: exact whenever the estimate is an integer
    return PopulationEstimate(n_hat=(d * (c + 1) - c) / c, c=c, d_max=d)
