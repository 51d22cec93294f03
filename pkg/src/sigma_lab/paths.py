"""Uniform time grids and exact Brownian path sampling.

Sampling contract
-----------------
All randomness flows through counter-based Philox streams.  The stream
for one path is a pure function of ``(master_seed, path_index)``:

    key     = master_seed << 64 | path_index        (128-bit Philox key)
    counter = substream << 128                      (256-bit start counter)

so streams never overlap (each substream owns a 2**128 block of the
counter space) and any path can be regenerated in isolation, bit for
bit, on any worker.  Substream indices are fixed constants:

    0  primary construction driver
    1  density driver
    2  secondary member of an independent pair

Brownian increments are exact Gaussian draws scaled by sqrt(step); there
is no discretization error in the increments themselves, only in the
path functionals evaluated on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "TimeGrid",
    "Path",
    "SeedSpec",
    "SUBSTREAM_PRIMARY",
    "SUBSTREAM_DENSITY",
    "SUBSTREAM_SECONDARY",
    "make_grid",
    "make_stream",
    "bm_increments",
    "sample_bm",
    "sample_independent_pair",
]

SUBSTREAM_PRIMARY = 0
SUBSTREAM_DENSITY = 1
SUBSTREAM_SECONDARY = 2

_MASK64 = (1 << 64) - 1
_REL_TOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0, step, 2*step, ..., horizon with n_steps intervals."""

    step: float
    horizon: float
    n_steps: int

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.step

    def index_of(self, t: float) -> int:
        """Grid index of time t (must lie on the grid up to rounding)."""
        k = int(round(t / self.step))
        if k < 0 or k > self.n_steps or abs(k * self.step - t) > _REL_TOL * max(1.0, self.horizon):
            raise ConfigurationError(f"time {t!r} is not a grid point of {self!r}")
        return k


@dataclass(frozen=True, eq=False)
class Path:
    """One scalar path sampled on a uniform grid (n_steps + 1 values).

    Compared by identity; compare ``values`` arrays explicitly when
    content equality is meant.
    """

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.shape[0] != self.grid.n_steps + 1:
            raise ConfigurationError(
                f"path needs {self.grid.n_steps + 1} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("path values must be finite")


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus the index of one path in the ensemble."""

    master_seed: int
    path_index: int = 0

    def __post_init__(self) -> None:
        if not (0 <= int(self.master_seed) <= _MASK64):
            raise ConfigurationError("master_seed must fit in 64 unsigned bits")
        if int(self.path_index) < 0:
            raise ConfigurationError("path_index must be non-negative")


def make_grid(horizon: float, step: float) -> TimeGrid:
    """Build a uniform grid; horizon must be an exact multiple of step.

    Raises
    ------
    ConfigurationError
        If step or horizon is non-positive, or horizon/step is not an
        integer within relative tolerance 1e-9.
    """
    if step <= 0.0 or horizon <= 0.0:
        raise ConfigurationError("step and horizon must be positive")
    n = int(round(horizon / step))
    if n < 1 or abs(n * step - horizon) > _REL_TOL * max(1.0, abs(horizon)):
        raise ConfigurationError(
            f"horizon {horizon!r} is not an integer multiple of step {step!r}"
        )
    return TimeGrid(step=float(step), horizon=float(horizon), n_steps=n)


def make_stream(seed: SeedSpec, substream: int = SUBSTREAM_PRIMARY) -> np.random.Generator:
    """Counter-based generator for one (path, substream) pair."""
    key = ((int(seed.master_seed) & _MASK64) << 64) | (int(seed.path_index) & _MASK64)
    counter = int(substream) << 128
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def bm_increments(seed: SeedSpec, n_steps: int, step: float, substream: int) -> np.ndarray:
    """Exact N(0, step) increments for one path; the single source used by
    both the per-path samplers and the ensemble engine (bit-identical)."""
    gen = make_stream(seed, substream)
    return gen.standard_normal(n_steps) * np.sqrt(step)


def sample_bm(grid: TimeGrid, start: float, seed: SeedSpec) -> Path:
    """Brownian path on the grid: values[0] = start, exact Gaussian increments.

    Deterministic: the same (grid, start, seed) always yields bit-identical
    values, independent of call order or process.
    """
    incs = bm_increments(seed, grid.n_steps, grid.step, SUBSTREAM_PRIMARY)
    values = np.empty(grid.n_steps + 1)
    values[0] = start
    np.cumsum(incs, out=values[1:])
    values[1:] += start
    return Path(grid=grid, values=values)


def sample_independent_pair(
    grid: TimeGrid, starts: tuple[float, float], seed: SeedSpec
) -> tuple[Path, Path]:
    """Two Brownian paths with independent increment streams.

    The first path equals sample_bm(grid, starts[0], seed); the second
    draws from the disjoint secondary substream of the same seed.
    """
    first = sample_bm(grid, starts[0], seed)
    incs = bm_increments(seed, grid.n_steps, grid.step, SUBSTREAM_SECONDARY)
    values = np.empty(grid.n_steps + 1)
    values[0] = starts[1]
    np.cumsum(incs, out=values[1:])
    values[1:] += starts[1]
    return first, Path(grid=grid, values=values)
