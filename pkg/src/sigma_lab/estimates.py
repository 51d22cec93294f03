"""Weighted Monte Carlo estimates and the analytic target machinery.

Estimation linked to a signed reference measure happens through path
weights: terminal-density weights for signed expectations, their
normalized absolute values for expectations under the absolute
measure, and unit weights for the driving measure.  Everything here
consumes per-path feature arrays and such weights; nothing here
simulates.

The boundary specifications carry the closed-form pieces of the
first-passage and accumulated-growth laws: a positive boundary
function of the running maximum, the integral of its reciprocal, and
the derived distribution functions.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError

__all__ = [
    "McEstimate",
    "weighted_mean",
    "effective_sample_size",
    "FlatnessReport",
    "flatness_test",
    "KsReport",
    "ks_test",
    "TargetCheck",
    "mean_check",
    "exact_check",
    "count_check",
    "ratio_check",
    "BoundarySpec",
    "ConstantBoundary",
    "ExponentialBoundary",
    "TableBoundary",
    "GrowthLaw",
]


@dataclass(frozen=True)
class McEstimate:
    """A weighted sample mean with its standard error."""

    value: float
    stderr: float
    n: int

    @property
    def ci_lo(self) -> float:
        return self.value - 1.96 * self.stderr

    @property
    def ci_hi(self) -> float:
        return self.value + 1.96 * self.stderr


def weighted_mean(values: np.ndarray, weights: np.ndarray | None = None) -> McEstimate:
    """Mean of weight * value over paths, with its standard error.

    The weights are taken as given (not renormalized): terminal-density
    weights estimate the signed expectation, normalized absolute
    weights the absolute-measure expectation, None the plain one.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise ContractError("need a 1-d sample of size at least 2")
    prod = v if weights is None else v * np.asarray(weights, dtype=np.float64)
    n = prod.size
    return McEstimate(
        value=float(np.mean(prod)),
        stderr=float(np.std(prod, ddof=1) / np.sqrt(n)),
        n=n,
    )


def effective_sample_size(weights: np.ndarray) -> float:
    """Kish effective size (sum w)^2 / sum w^2 of a weighted sample."""
    w = np.asarray(weights, dtype=np.float64)
    denom = float(np.sum(w * w))
    if denom == 0.0:
        raise ContractError("all weights vanish")
    return float(np.sum(w)) ** 2 / denom


@dataclass(frozen=True)
class FlatnessReport:
    """Pairwise comparison of weighted means across checkpoints."""

    times: tuple[float, ...]
    means: tuple[McEstimate, ...]
    max_z: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_z < self.threshold


def flatness_test(
    samples: np.ndarray,
    weights: np.ndarray | None,
    times: Sequence[float],
    threshold: float = 4.0,
) -> FlatnessReport:
    """Test that weighted means agree across checkpoints.

    ``samples`` has one row per checkpoint.  Every pair of rows is
    compared by |difference| / combined stderr; the report passes when
    the largest such ratio stays below the threshold.  With common
    random numbers across rows this is conservative.
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != len(times):
        raise ContractError("need one row of samples per checkpoint")
    means = tuple(weighted_mean(row, weights) for row in s)
    max_z = 0.0
    for i in range(len(means)):
        for j in range(i + 1, len(means)):
            se = float(np.hypot(means[i].stderr, means[j].stderr))
            if se == 0.0:
                if means[i].value != means[j].value:
                    max_z = float("inf")
                continue
            max_z = max(max_z, abs(means[i].value - means[j].value) / se)
    return FlatnessReport(times=tuple(float(t) for t in times), means=means, max_z=max_z, threshold=threshold)


@dataclass(frozen=True)
class KsReport:
    """Weighted one-sample Kolmogorov-Smirnov comparison."""

    statistic: float
    n_effective: float
    critical: float

    @property
    def passed(self) -> bool:
        return self.statistic <= self.critical


def ks_test(
    samples: np.ndarray,
    weights: np.ndarray | None,
    cdf: Callable[[np.ndarray], np.ndarray],
    scale: float = 1.63,
    extra_allowance: float = 0.0,
) -> KsReport:
    """Sup distance between the weighted empirical cdf and a target cdf.

    The critical value is scale / sqrt(effective sample size) plus a
    caller-supplied allowance for discretization bias.  Weights must
    be nonnegative (the empirical cdf must be monotone).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ContractError("need a 1-d sample of size at least 2")
    if weights is None:
        w = np.ones_like(x)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0.0):
            raise ContractError("ks_test needs nonnegative weights")
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    total = float(np.sum(ws))
    if total <= 0.0:
        raise ContractError("weights sum to zero")
    after = np.cumsum(ws) / total
    before = after - ws / total
    target = np.asarray(cdf(xs), dtype=np.float64)
    stat = float(max(np.max(np.abs(after - target)), np.max(np.abs(before - target))))
    n_eff = effective_sample_size(ws)
    return KsReport(statistic=stat, n_effective=n_eff, critical=scale / float(np.sqrt(n_eff)) + extra_allowance)


@dataclass(frozen=True)
class TargetCheck:
    """One verdict against a frozen target, with its error budget.

    The tolerance splits into a statistical part (a multiple of the
    standard error), a grid allowance for discretization bias, and a
    truncation allowance for finite-horizon effects; each component is
    kept on the record.
    """

    name: str
    kind: str
    target: float | None
    estimate: float
    stderr: float | None
    z: float | None
    stat_tolerance: float
    grid_allowance: float
    truncation_allowance: float
    passed: bool
    detail: str
    extras: dict[str, float] = field(default_factory=dict)

    @property
    def tolerance(self) -> float:
        return self.stat_tolerance + self.grid_allowance + self.truncation_allowance


def mean_check(
    name: str,
    target: float,
    values: np.ndarray,
    weights: np.ndarray | None = None,
    stat_scale: float = 3.0,
    grid_allowance: float = 0.0,
    truncation_allowance: float = 0.0,
) -> TargetCheck:
    """Weighted mean against a target within stat_scale standard errors
    plus the stated allowances."""
    est = weighted_mean(values, weights)
    gap = abs(est.value - target)
    stat_tol = stat_scale * est.stderr
    if est.stderr > 0.0:
        z = gap / est.stderr
    else:
        z = float("inf") if gap > 0.0 else 0.0
    tol = stat_tol + grid_allowance + truncation_allowance
    return TargetCheck(
        name=name,
        kind="mean",
        target=target,
        estimate=est.value,
        stderr=est.stderr,
        z=float(z),
        stat_tolerance=stat_tol,
        grid_allowance=grid_allowance,
        truncation_allowance=truncation_allowance,
        passed=gap <= tol,
        detail=f"|{est.value:.6g} - {target:.6g}| = {gap:.3g} vs {tol:.3g}",
    )


def exact_check(name: str, magnitude: float, tolerance: float = 0.0) -> TargetCheck:
    """A pathwise magnitude that must not exceed a (possibly zero) tolerance."""
    m = float(magnitude)
    return TargetCheck(
        name=name,
        kind="exact",
        target=0.0,
        estimate=m,
        stderr=None,
        z=None,
        stat_tolerance=tolerance,
        grid_allowance=0.0,
        truncation_allowance=0.0,
        passed=m <= tolerance,
        detail=f"magnitude {m:.3e} vs tolerance {tolerance:.3e}",
    )


def count_check(name: str, bad_count: int, detail: str = "") -> TargetCheck:
    """A violation counter that must be exactly zero."""
    return TargetCheck(
        name=name,
        kind="count",
        target=0.0,
        estimate=float(bad_count),
        stderr=None,
        z=None,
        stat_tolerance=0.0,
        grid_allowance=0.0,
        truncation_allowance=0.0,
        passed=bad_count == 0,
        detail=detail or f"{bad_count} violations",
    )


def ratio_check(
    name: str,
    coarse_error: float,
    fine_error: float,
    min_ratio: float,
    floor: float = 1e-12,
) -> TargetCheck:
    """Error halving between grids: coarse / fine must reach min_ratio.

    When both errors sit below the floor the quantity is exact to
    rounding and the ratio criterion is met trivially.
    """
    if coarse_error < floor and fine_error < floor:
        return TargetCheck(
            name=name,
            kind="ratio",
            target=min_ratio,
            estimate=float("inf"),
            stderr=None,
            z=None,
            stat_tolerance=0.0,
            grid_allowance=0.0,
            truncation_allowance=0.0,
            passed=True,
            detail=f"both errors below {floor:.1e}; exact to rounding",
            extras={"coarse_error": coarse_error, "fine_error": fine_error},
        )
    ratio = coarse_error / fine_error if fine_error > 0.0 else float("inf")
    return TargetCheck(
        name=name,
        kind="ratio",
        target=min_ratio,
        estimate=float(ratio),
        stderr=None,
        z=None,
        stat_tolerance=0.0,
        grid_allowance=0.0,
        truncation_allowance=0.0,
        passed=ratio >= min_ratio,
        detail=f"error ratio {ratio:.3f} vs required {min_ratio:.3f}",
        extras={"coarse_error": coarse_error, "fine_error": fine_error},
    )


class BoundarySpec:
    """Positive boundary as a function of the running maximum.

    Subclasses provide the pointwise value and the integral of the
    reciprocal from 0; the distribution pieces of the passage laws
    derive from those.
    """

    def phi_of(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def integral_to(self, u: float) -> float:
        """Integral of 1/phi over [0, u]."""
        raise NotImplementedError

    def integral_total(self) -> float:
        """Integral of 1/phi over [0, infinity); may be inf."""
        raise NotImplementedError

    # Distribution pieces.  With I the reciprocal integral, the chance
    # that the running maximum ever exceeds u is 1 - exp(-I(u)); the
    # level-u variants replace the total integral by I(u), and
    # conditioning on having reached x replaces I(.) by I(.) - I(x).

    def crossing_probability(self, u: float) -> float:
        return 1.0 - float(np.exp(-self.integral_to(u)))

    def full_crossing_probability(self) -> float:
        total = self.integral_total()
        return 1.0 if np.isinf(total) else 1.0 - float(np.exp(-total))

    def _integral_at(self, x: np.ndarray) -> np.ndarray:
        return np.vectorize(self.integral_to, otypes=[np.float64])(np.asarray(x, dtype=np.float64))

    def F_of(self, x: np.ndarray) -> np.ndarray:
        """Improper law of the all-time maximum: 1 - exp(-(I(inf) - I(x))).

        Defined only when the total reciprocal integral is finite; with
        an infinite one the maximum is unbounded and there is nothing
        to evaluate.
        """
        total = self.integral_total()
        if np.isinf(total):
            raise ConfigurationError(
                "total reciprocal integral is infinite; the all-time law degenerates"
            )
        return 1.0 - np.exp(-(total - self._integral_at(x)))

    def f_of(self, x: np.ndarray) -> np.ndarray:
        """Density companion of F_of: -(1 - F)(x) / phi(x) with sign kept."""
        x = np.asarray(x, dtype=np.float64)
        return -(1.0 - self.F_of(x)) / self.phi_of(x)

    def Fu_of(self, x: np.ndarray, u: float) -> np.ndarray:
        """Law of the maximum truncated at level u: 1 - exp(-(I(u) - I(x)))."""
        return 1.0 - np.exp(-(self.integral_to(u) - self._integral_at(x)))

    def fu_of(self, x: np.ndarray, u: float) -> np.ndarray:
        """Density companion of Fu_of."""
        x = np.asarray(x, dtype=np.float64)
        return -(1.0 - self.Fu_of(x, u)) / self.phi_of(x)


@dataclass(frozen=True)
class ConstantBoundary(BoundarySpec):
    level: float = 1.0

    def __post_init__(self) -> None:
        if self.level <= 0.0:
            raise ConfigurationError("boundary level must be positive")

    def phi_of(self, s: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(s, dtype=np.float64), self.level)

    def integral_to(self, u: float) -> float:
        if u < 0.0:
            raise ConfigurationError("integral endpoint must be nonnegative")
        return u / self.level

    def integral_total(self) -> float:
        return float("inf")


@dataclass(frozen=True)
class ExponentialBoundary(BoundarySpec):
    """phi(s) = scale * exp(s): finite total reciprocal integral 1/scale."""

    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0.0:
            raise ConfigurationError("boundary scale must be positive")

    def phi_of(self, s: np.ndarray) -> np.ndarray:
        return self.scale * np.exp(np.asarray(s, dtype=np.float64))

    def integral_to(self, u: float) -> float:
        if u < 0.0:
            raise ConfigurationError("integral endpoint must be nonnegative")
        return float(-np.expm1(-u)) / self.scale

    def integral_total(self) -> float:
        return 1.0 / self.scale


@dataclass(frozen=True)
class TableBoundary(BoundarySpec):
    """Piecewise-constant boundary given as (start, value) segments.

    Starts must begin at 0 and increase; values may be inf (the
    reciprocal then contributes nothing, so the total reciprocal
    integral can be finite).
    """

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.segments or self.segments[0][0] != 0.0:
            raise ConfigurationError("segments must start at 0")
        starts = [s for s, _ in self.segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigurationError("segment starts must increase")
        if any(v <= 0.0 for _, v in self.segments):
            raise ConfigurationError("boundary values must be positive")

    def phi_of(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        starts = np.array([a for a, _ in self.segments])
        values = np.array([v for _, v in self.segments])
        idx = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(values) - 1)
        return values[idx]

    def integral_to(self, u: float) -> float:
        if u < 0.0:
            raise ConfigurationError("integral endpoint must be nonnegative")
        total = 0.0
        for i, (a, v) in enumerate(self.segments):
            b = self.segments[i + 1][0] if i + 1 < len(self.segments) else float("inf")
            span = min(u, b) - a
            if span <= 0.0:
                break
            if np.isfinite(v):
                total += span / v
        return total

    def integral_total(self) -> float:
        total = 0.0
        for i, (a, v) in enumerate(self.segments):
            b = self.segments[i + 1][0] if i + 1 < len(self.segments) else float("inf")
            if not np.isfinite(v):
                continue
            span = b - a
            if np.isinf(span):
                return float("inf")
            total += span / v
        return total


@dataclass(frozen=True)
class GrowthLaw:
    """Intensity and survival function for the accumulated-growth law."""

    rate: Callable[[np.ndarray], np.ndarray]
    survival: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def constant(cls, rate: float) -> "GrowthLaw":
        if rate <= 0.0:
            raise ConfigurationError("rate must be positive")
        return cls(
            rate=lambda x: np.full_like(np.asarray(x, dtype=np.float64), rate),
            survival=lambda x: np.exp(-rate * np.asarray(x, dtype=np.float64)),
        )

    def cdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.where(x < 0.0, 0.0, 1.0 - np.asarray(self.survival(np.maximum(x, 0.0)), dtype=np.float64))
