"""Density martingales, their zero sets, and ensemble reweighting.

A signed reference measure is represented through the path of its
density martingale D relative to the driving probability measure.  Three
closed-form models are provided:

``ConstantOne``
    D = 1: the classical probability case, empty zero set.
``StoppedBM``
    D is a Brownian motion started at ``start > 0`` and frozen at
    ``stop_time``.  D may cross zero before the freeze, so the measure
    with terminal density D is genuinely signed.
``ErfSign``
    D_t = 2*Phi((W_t + offset)/sqrt(terminal_time - t)) - 1 before
    ``terminal_time`` and sign(W_terminal + offset) afterwards, with W
    the model's own Brownian driver.  D is a bounded martingale whose
    terminal absolute value is 1 on every path, and D vanishes exactly
    where W crosses the level -offset.

Zero sets are detected on the grid by sign changes: the interval
(t_k, t_{k+1}) carries a zero when D_k * D_{k+1} <= 0 with the two
values not both zero, and the zero is booked at the right endpoint
k + 1.  The convention sup(empty) = 0 applies throughout: with no
crossing, the last zero time and every last-zero-before-t time is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import ConfigurationError, ContractError, DegenerateMeasureError
from .paths import Path, SeedSpec, TimeGrid, bm_increments, SUBSTREAM_DENSITY

__all__ = [
    "ConstantOne",
    "StoppedBM",
    "ErfSign",
    "DensityModel",
    "ZeroSetInfo",
    "EnsembleWeights",
    "density_path",
    "density_driver_path",
    "zero_set",
    "zero_set_from_level_series",
    "ensemble_weights",
    "qp_martingale",
]


@dataclass(frozen=True)
class ConstantOne:
    """D = 1 for all t: recovers the driving probability measure."""


@dataclass(frozen=True)
class StoppedBM:
    """D = Brownian motion from ``start`` frozen at ``stop_time``."""

    start: float
    stop_time: float

    def __post_init__(self) -> None:
        if self.start <= 0.0:
            raise ConfigurationError("StoppedBM start must be positive")
        if self.stop_time <= 0.0:
            raise ConfigurationError("StoppedBM stop_time must be positive")


@dataclass(frozen=True)
class ErfSign:
    """Gaussian-CDF martingale closing at sign(W_terminal + offset)."""

    offset: float
    terminal_time: float

    def __post_init__(self) -> None:
        if self.offset <= 0.0:
            raise ConfigurationError("ErfSign offset must be positive")
        if self.terminal_time <= 0.0:
            raise ConfigurationError("ErfSign terminal_time must be positive")


DensityModel = ConstantOne | StoppedBM | ErfSign


@dataclass(frozen=True, eq=False)
class ZeroSetInfo:
    """Grid geometry of the density zero set for one path.

    Attributes
    ----------
    crossing_intervals:
        Pairs (k, k+1) of grid indices bracketing a sign change.
    h_indices:
        Sorted grid indices carrying a detected zero (right endpoints).
    gbar / gbar_index:
        Last zero time on the grid (0 when the zero set is empty).
    gamma_index:
        For each grid index j, the index of the last zero at or before
        j (0 when there is none).
    gbar_before_index:
        Same with strict inequality: last zero before j.
    excursion_start_indices:
        Left endpoints of the maximal zero-free runs: the zero opening
        each run, or 0 for the initial run.
    """

    grid: TimeGrid
    crossing_intervals: tuple[tuple[int, int], ...]
    h_indices: np.ndarray = field(repr=False)
    gbar_index: int
    gamma_index: np.ndarray = field(repr=False)
    gbar_before_index: np.ndarray = field(repr=False)
    excursion_start_indices: np.ndarray = field(repr=False)

    @property
    def gbar(self) -> float:
        return self.gbar_index * self.grid.step

    @property
    def gamma(self) -> np.ndarray:
        """Last-zero-at-or-before times, one per grid point."""
        return self.gamma_index * self.grid.step

    @property
    def gbar_before(self) -> np.ndarray:
        """Last-zero-strictly-before times, one per grid point."""
        return self.gbar_before_index * self.grid.step

    @property
    def excursion_starts(self) -> np.ndarray:
        return self.excursion_start_indices * self.grid.step

    def gamma_at(self, t: float) -> float:
        return float(self.gamma[self.grid.index_of(t)])


@dataclass(frozen=True, eq=False)
class EnsembleWeights:
    """Reweighting of an ensemble by terminal density values.

    ``raw`` is |D_terminal| per path, ``normalizer`` its ensemble mean,
    ``pprime_weight`` = raw / normalizer (mean 1 by construction), and
    ``q_weight`` the signed terminal values themselves.
    """

    raw: np.ndarray = field(repr=False)
    normalizer: float
    pprime_weight: np.ndarray = field(repr=False)
    q_weight: np.ndarray = field(repr=False)


def _require_horizon(model: DensityModel, grid: TimeGrid) -> int:
    """Validate the grid against the model's intrinsic time; return the
    grid index of that intrinsic time (n_steps for ConstantOne)."""
    if isinstance(model, ConstantOne):
        return grid.n_steps
    intrinsic = model.stop_time if isinstance(model, StoppedBM) else model.terminal_time
    if grid.horizon < intrinsic - 1e-12:
        raise ConfigurationError(
            f"grid horizon {grid.horizon} is shorter than the model time {intrinsic}"
        )
    return grid.index_of(min(intrinsic, grid.horizon))


def density_values(model: DensityModel, driver: np.ndarray | None, grid: TimeGrid) -> np.ndarray:
    """Density path values from the model's driver values (None for ConstantOne)."""
    stop = _require_horizon(model, grid)
    if isinstance(model, ConstantOne):
        return np.ones(grid.n_steps + 1)
    if driver is None:
        raise ContractError("density model needs a driver path")
    if isinstance(model, StoppedBM):
        values = driver.astype(np.float64, copy=True)
        values[stop:] = values[stop]
        return values
    # ErfSign: smooth CDF transform before the terminal time, then the sign.
    times = grid.times
    values = np.empty(grid.n_steps + 1)
    shifted = driver[:stop] + model.offset
    values[:stop] = 2.0 * norm.cdf(shifted / np.sqrt(model.terminal_time - times[:stop])) - 1.0
    values[stop:] = np.where(driver[stop] + model.offset >= 0.0, 1.0, -1.0)
    return values


def density_driver_path(model: DensityModel, seed: SeedSpec, grid: TimeGrid) -> Path | None:
    """The model's own driver path (density substream); None for ConstantOne.

    For StoppedBM the driver is the unfrozen Brownian path from `start`;
    for ErfSign it is the Brownian path from 0 feeding the CDF transform.
    """
    if isinstance(model, ConstantOne):
        return None
    _require_horizon(model, grid)
    start = model.start if isinstance(model, StoppedBM) else 0.0
    incs = bm_increments(seed, grid.n_steps, grid.step, SUBSTREAM_DENSITY)
    values = np.empty(grid.n_steps + 1)
    values[0] = start
    np.cumsum(incs, out=values[1:])
    values[1:] += start
    return Path(grid=grid, values=values)


def density_path(model: DensityModel, seed: SeedSpec, grid: TimeGrid) -> Path:
    """Sample the density path for one seed on the grid."""
    driver = density_driver_path(model, seed, grid)
    values = density_values(model, None if driver is None else driver.values, grid)
    return Path(grid=grid, values=values)


def zero_set_from_level_series(series: np.ndarray, grid: TimeGrid, last_index: int | None = None) -> ZeroSetInfo:
    """Zero-set geometry of a series crossing level 0 on the grid.

    ``last_index`` restricts detection to intervals ending at or before
    that index (used when the series is frozen afterwards).
    """
    series = np.asarray(series, dtype=np.float64)
    n = grid.n_steps
    if series.shape[0] != n + 1:
        raise ContractError("level series length does not match the grid")
    left, right = series[:-1], series[1:]
    change = (left * right <= 0.0) & ~((left == 0.0) & (right == 0.0))
    if last_index is not None:
        change[last_index:] = False
    ks = np.nonzero(change)[0]
    h_indices = ks + 1
    crossing_intervals = tuple((int(k), int(k) + 1) for k in ks)

    idx = np.arange(n + 1)
    in_h = np.zeros(n + 1, dtype=bool)
    in_h[h_indices] = True
    gamma_index = np.maximum.accumulate(np.where(in_h, idx, 0))
    gbar_before_index = np.empty(n + 1, dtype=gamma_index.dtype)
    gbar_before_index[0] = 0
    gbar_before_index[1:] = gamma_index[:-1]
    gbar_index = int(gamma_index[-1])

    # One anchor per maximal run: the distinct last-zero values.
    excursion_start_indices = np.unique(gamma_index).astype(np.int64)

    return ZeroSetInfo(
        grid=grid,
        crossing_intervals=crossing_intervals,
        h_indices=h_indices.astype(np.int64),
        gbar_index=gbar_index,
        gamma_index=gamma_index.astype(np.int64),
        gbar_before_index=gbar_before_index.astype(np.int64),
        excursion_start_indices=excursion_start_indices,
    )


def zero_set(D: Path, model: DensityModel, driver: Path | None = None) -> ZeroSetInfo:
    """Detect the density zero set by grid sign changes.

    For ErfSign, when the driver path is supplied the crossings are
    detected directly on W through the level -offset, which avoids any
    CDF round-off near zero; without a driver the detection falls back
    to sign changes of D itself (the CDF transform is strictly monotone
    in W, so the two detections agree wherever the CDF is resolvable).
    """
    grid = D.grid
    if isinstance(model, ErfSign):
        stop = grid.index_of(min(model.terminal_time, grid.horizon))
        if driver is not None:
            return zero_set_from_level_series(driver.values + model.offset, grid, last_index=stop)
        return zero_set_from_level_series(D.values, grid, last_index=stop)
    if isinstance(model, StoppedBM):
        stop = grid.index_of(min(model.stop_time, grid.horizon))
        return zero_set_from_level_series(D.values, grid, last_index=stop)
    return zero_set_from_level_series(D.values, grid)


def ensemble_weights(terminal_values: np.ndarray) -> EnsembleWeights:
    """Build the three weight systems from terminal density values.

    Raises
    ------
    DegenerateMeasureError
        If every terminal value is zero (the normalized absolute
        measure does not exist).
    """
    terminal = np.asarray(terminal_values, dtype=np.float64)
    if terminal.ndim != 1 or terminal.size == 0:
        raise ContractError("terminal_values must be a non-empty 1-d array")
    raw = np.abs(terminal)
    normalizer = float(np.mean(raw))
    if normalizer == 0.0:
        raise DegenerateMeasureError("all terminal density values are zero")
    return EnsembleWeights(
        raw=raw,
        normalizer=normalizer,
        pprime_weight=raw / normalizer,
        q_weight=terminal.copy(),
    )


def qp_martingale(kind: str, driver: Path) -> Path:
    """Reference processes whose product with D is a martingale.

    ``independent_bm`` returns the driver itself; ``exponential``
    returns exp(W_t - t/2), the positive martingale tending to zero.
    Both rely on the driver being independent of the density driver,
    which the substream layout guarantees.
    """
    if kind == "independent_bm":
        return driver
    if kind == "exponential":
        values = np.exp(driver.values - 0.5 * driver.grid.times)
        return Path(grid=driver.grid, values=values)
    raise ConfigurationError(f"unknown martingale kind {kind!r}")
