"""Synthetic relay races with independent lognormal leg times."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, ValidationError
from .rng import open_uniforms, substream
from .stats import LognormalParams, norm_ppf_array

__all__ = [
    "SimConfig",
    "RaceTable",
    "rank_final_times",
    "simulate_race",
    "paper_like_config",
    "PAPER_LIKE_TEAMS",
    "PAPER_LIKE_LEG_MULTIPLIERS",
    "PAPER_LIKE_BASE_MINUTES",
    "PAPER_LIKE_SIGMA",
]

PAPER_LIKE_TEAMS = 1653
PAPER_LIKE_LEG_MULTIPLIERS = (1.0, 1.1, 1.0, 1.1, 1.0, 1.2, 1.3)
# puts the median 4-leg changeover near 445 minutes
PAPER_LIKE_BASE_MINUTES = 105.0
PAPER_LIKE_SIGMA = 0.17


@dataclass(frozen=True)
class SimConfig:
    n: int
    m: int
    leg_params: tuple[LognormalParams, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "leg_params", tuple(self.leg_params))
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"need at least 2 teams, got n={self.n}")
        if int(self.m) != self.m or self.m < 1:
            raise ConfigError(f"need at least 1 leg, got m={self.m}")
        if len(self.leg_params) != self.m:
            raise ConfigError(f"expected {self.m} leg parameter pairs, got {len(self.leg_params)}")
        if any(p.sigma <= 0 for p in self.leg_params):
            raise ConfigError("every leg sigma must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @classmethod
    def from_lists(cls, n: int, mus: Sequence[float], sigmas: Sequence[float], seed: int = 0) -> "SimConfig":
        if len(mus) != len(sigmas):
            raise ConfigError("mu and sigma lists have different lengths")
        try:
            params = tuple(LognormalParams(float(mu), float(s)) for mu, s in zip(mus, sigmas))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return cls(n=n, m=len(params), leg_params=params, seed=seed)


@dataclass(frozen=True, eq=False)
class RaceTable:
    """Leg times, changeover times and final places for n teams and m legs.

    ``changeover_times`` is always the row-wise cumulative sum of
    ``leg_times``; it is derived at construction and never taken from input.
    Leg and changeover indices are 0-based in the arrays; leg ``l`` in the
    1-based sense lives in column ``l - 1``.
    """

    leg_times: np.ndarray
    places: np.ndarray
    team_ids: np.ndarray | None = None

    def __post_init__(self):
        legs = np.array(self.leg_times, dtype=np.float64)
        if legs.ndim != 2 or legs.shape[0] == 0 or legs.shape[1] == 0:
            raise ValidationError(f"leg_times must be a non-empty n x m matrix, got shape {legs.shape}")
        n = legs.shape[0]
        if not np.all(np.isfinite(legs) & (legs > 0)):
            raise ValidationError("leg times must be finite and > 0")
        places = np.asarray(self.places)
        if places.shape != (n,):
            raise ValidationError(f"expected {n} places, got shape {places.shape}")
        places = places.astype(np.int64)
        if np.unique(places).size != n:
            raise ValidationError("duplicate places")
        if places.min() != 1 or places.max() != n:
            raise ValidationError(f"places must be a permutation of 1..{n}")
        ids = np.arange(1, n + 1) if self.team_ids is None else np.asarray(self.team_ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValidationError(f"expected {n} team ids, got shape {ids.shape}")

        chg = np.cumsum(legs, axis=1)
        final_by_place = chg[np.argsort(places), -1]
        # slack absorbs 9-significant-digit serialization of near-ties
        if np.any(np.diff(final_by_place) < -1e-8 * final_by_place[-1]):
            raise ValidationError("places are not ordered by final time")

        for name, arr in (("leg_times", legs), ("places", places), ("team_ids", ids)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        chg.setflags(write=False)
        object.__setattr__(self, "changeover_times", chg)

    @classmethod
    def from_leg_times(cls, leg_times, team_ids=None) -> "RaceTable":
        legs = np.asarray(leg_times, dtype=np.float64)
        if legs.ndim != 2 or legs.shape[0] == 0:
            raise ValidationError(f"leg_times must be a non-empty n x m matrix, got shape {legs.shape}")
        places = rank_final_times(np.cumsum(legs, axis=1)[:, -1])
        return cls(legs, places, team_ids)

    @property
    def n(self) -> int:
        return self.leg_times.shape[0]

    @property
    def m(self) -> int:
        return self.leg_times.shape[1]

    def changeover(self, leg: int) -> np.ndarray:
        """Changeover times after 1-based leg ``leg``."""
        if not 1 <= leg <= self.m:
            raise ValidationError(f"leg must be in 1..{self.m}, got {leg}")
        return self.changeover_times[:, leg - 1]

    def __eq__(self, other):
        if not isinstance(other, RaceTable):
            return NotImplemented
        return (
            np.array_equal(self.leg_times, other.leg_times)
            and np.array_equal(self.places, other.places)
            and np.array_equal(self.team_ids, other.team_ids)
        )


def rank_final_times(final_times) -> np.ndarray:
    """1-based places; equal times are ranked by row index (stable)."""
    t = np.asarray(final_times, dtype=np.float64)
    if t.ndim != 1 or t.size == 0:
        raise ValidationError("need a non-empty vector of final times")
    order = np.argsort(t, kind="stable")
    places = np.empty(t.size, dtype=np.int64)
    places[order] = np.arange(1, t.size + 1)
    return places


def simulate_race(config: SimConfig) -> RaceTable:
    """Draw one race.

    Team ``t`` reads ``m`` open-interval uniforms from its own substream
    ``(seed, "simulation", t)`` and maps them through the normal quantile, so
    a team's leg times do not depend on how many teams are simulated.
    """
    m = config.m
    u = np.empty((config.n, m))
    for t in range(config.n):
        u[t] = open_uniforms(substream(config.seed, "simulation", t), m)
    z = norm_ppf_array(u)
    mu = np.array([p.mu for p in config.leg_params])
    sigma = np.array([p.sigma for p in config.leg_params])
    return RaceTable.from_leg_times(np.exp(mu + sigma * z))


def paper_like_config(seed: int = 0) -> SimConfig:
    """1653 teams, 7 legs of 105 min x (1.0, 1.1, 1.0, 1.1, 1.0, 1.2, 1.3), sigma 0.17."""
    mus = [math.log(PAPER_LIKE_BASE_MINUTES * k) for k in PAPER_LIKE_LEG_MULTIPLIERS]
    return SimConfig.from_lists(PAPER_LIKE_TEAMS, mus, [PAPER_LIKE_SIGMA] * len(mus), seed)
