"""Registry of Monte Carlo experiments behind the command line tool.

Each experiment simulates an ensemble in fixed 256-path chunks (a few
use smaller chunks to bound memory), reduces it to named checks with
explicit statistical, grid, and truncation allowances, and optionally
emits survival-curve points.  Reductions run on the concatenated
arrays in path-index order, so for a fixed seed the resulting report
bytes do not depend on the worker count.

Scale defaults come in two suites: ``fast`` for smoke runs and
``full`` for the reproduction runs.  A handful of experiments pin
their own scales (convergence ladders, pathwise algebra) because
their criteria are stated at fixed sizes.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
from collections.abc import Callable
from dataclasses import dataclass, replace
from time import perf_counter

import numpy as np
from scipy.stats import norm

from .balayage import (
    Constant,
    LinearCombination,
    LocalTimeAt,
    NetChange,
    PathFunctional,
    Product,
    QuadraticVariation,
    RunningIntegralAgainst,
    RunningSup,
    ito_residual,
    rho,
    shift,
    tanaka_residual,
)
from .density import (
    ConstantOne,
    DensityModel,
    ErfSign,
    StoppedBM,
    density_driver_path,
    density_path,
    ensemble_weights,
    zero_set,
    zero_set_from_level_series,
)
from .ensemble import (
    cumsum_paths,
    density_matrix,
    driver_matrix,
    increments_matrix,
    run_chunked,
    zero_geometry,
)
from .errors import ConfigurationError
from .estimates import (
    BoundarySpec,
    ConstantBoundary,
    FlatnessReport,
    GrowthLaw,
    KsReport,
    TableBoundary,
    TargetCheck,
    count_check,
    exact_check,
    flatness_test,
    ks_test,
    mean_check,
    ratio_check,
    weighted_mean,
)
from .paths import (
    SUBSTREAM_DENSITY,
    SUBSTREAM_PRIMARY,
    SUBSTREAM_SECONDARY,
    Path,
    SeedSpec,
    TimeGrid,
    make_grid,
    sample_bm,
    sample_independent_pair,
)
from .sigma_classes import (
    abs_martingale,
    assemble,
    drawdown,
    lifted_reflected,
    pm_combination,
    product,
    scaled_by_f,
    verify_membership,
)

__all__ = [
    "DEFAULT_SEED",
    "ExperimentConfig",
    "RunSettings",
    "ReportRow",
    "CurveSeries",
    "ExperimentRun",
    "EXPERIMENTS",
    "experiment_names",
    "paper_anchor",
    "resolve_settings",
    "run_experiment",
    "run_suite",
    "config_digest",
    "report_rows",
]

DEFAULT_SEED = 20260822

_ERF = ErfSign(offset=1.0, terminal_time=1.0)
_SBM = StoppedBM(start=1.0, stop_time=1.0)
_D0_ERF = float(2.0 * norm.cdf(1.0) - 1.0)
_P_HIT = float(2.0 * (1.0 - norm.cdf(1.0)))
_EULER = float(1.0 - np.exp(-1.0))


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    """User-facing run request; None fields fall back to registry defaults."""

    experiment: str
    n_paths: int | None = None
    step: float | None = None
    horizon: float | None = None
    master_seed: int = DEFAULT_SEED
    checkpoints: tuple[float, ...] | None = None
    policy: str = "drop"
    workers: int = 1


@dataclass(frozen=True)
class RunSettings:
    """Fully resolved scales for one experiment run."""

    name: str
    n_paths: int
    step: float
    horizon: float | None
    master_seed: int
    checkpoints: tuple[float, ...] | None
    policy: str
    workers: int


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    paper_anchor: str
    check: str
    kind: str
    target: float | None
    estimate: float
    stderr: float | None
    z: float | None
    stat_tolerance: float
    grid_allowance: float
    truncation_allowance: float
    tolerance: float
    passed: bool
    seed: int
    config_hash: str
    detail: str


@dataclass(frozen=True)
class CurveSeries:
    """Plot data for one survival/level curve."""

    name: str
    xs: tuple[float, ...]
    targets: tuple[float, ...]
    estimates: tuple[float, ...]
    ci_lo: tuple[float, ...]
    ci_hi: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentRun:
    name: str
    paper_anchor: str
    settings: RunSettings
    checks: tuple[TargetCheck, ...]
    curves: tuple[CurveSeries, ...]
    seconds: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def config_digest(st: RunSettings) -> str:
    """Stable hash of everything that determines the numbers.

    The worker count is deliberately excluded: results are bitwise
    identical across worker counts and the reports must be too.
    """
    payload = {
        "experiment": st.name,
        "n_paths": st.n_paths,
        "step": st.step,
        "horizon": st.horizon,
        "seed": st.master_seed,
        "checkpoints": list(st.checkpoints) if st.checkpoints is not None else None,
        "policy": st.policy,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def report_rows(run: ExperimentRun) -> list[ReportRow]:
    digest = config_digest(run.settings)
    rows = []
    for c in run.checks:
        rows.append(
            ReportRow(
                experiment=run.name,
                paper_anchor=run.paper_anchor,
                check=c.name,
                kind=c.kind,
                target=c.target,
                estimate=c.estimate,
                stderr=c.stderr,
                z=c.z,
                stat_tolerance=c.stat_tolerance,
                grid_allowance=c.grid_allowance,
                truncation_allowance=c.truncation_allowance,
                tolerance=c.tolerance,
                passed=c.passed,
                seed=run.settings.master_seed,
                config_hash=digest,
                detail=c.detail,
            )
        )
    return rows


# ---------------------------------------------------------------- helpers

def _first_true(mask: np.ndarray) -> np.ndarray:
    """Per-row index of the first True, or -1."""
    hit = mask.any(axis=1)
    idx = mask.argmax(axis=1)
    return np.where(hit, idx, -1)


def _gather(matrix: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return np.take_along_axis(matrix, cols[:, None], axis=1)[:, 0]


def _kernel_matrix(x: np.ndarray, step: float, b: float) -> np.ndarray:
    """Unrestarted occupation-kernel local time at 0, row by row."""
    out = np.zeros_like(x)
    np.cumsum((np.abs(x[:, :-1]) < b).astype(np.float64), axis=1, out=out[:, 1:])
    out[:, 1:] *= step / (2.0 * b)
    return out


def _primary(seed: int, start: int, count: int, grid: TimeGrid) -> np.ndarray:
    incs = increments_matrix(seed, start, count, grid.n_steps, grid.step, SUBSTREAM_PRIMARY)
    return cumsum_paths(incs)


@dataclass(frozen=True)
class _DensityBlock:
    terminal: np.ndarray
    gbar: np.ndarray
    gamma: np.ndarray | None


def _density_block(
    model: DensityModel,
    seed: int,
    start: int,
    count: int,
    step: float,
    with_gamma: bool = False,
) -> _DensityBlock:
    """Terminal weights and zero geometry on the model's own span.

    The indices live on any grid with the same step, because the
    model is constant past its intrinsic time.
    """
    if isinstance(model, ConstantOne):
        z = np.zeros(count, dtype=np.int64)
        gamma = np.zeros((count, 1), dtype=np.int64) if with_gamma else None
        return _DensityBlock(terminal=np.ones(count), gbar=z, gamma=gamma)
    intrinsic = model.stop_time if isinstance(model, StoppedBM) else model.terminal_time
    sgrid = make_grid(intrinsic, step)
    driver = driver_matrix(model, seed, start, count, sgrid)
    dens = density_matrix(model, driver, sgrid)
    if isinstance(model, StoppedBM):
        level = dens
    else:
        level = driver + model.offset
    zg = zero_geometry(level, last_index=sgrid.n_steps)
    return _DensityBlock(
        terminal=dens[:, -1].copy(),
        gbar=zg.gbar_idx,
        gamma=zg.gamma_idx if with_gamma else None,
    )


def _extend_gamma(gamma: np.ndarray, gbar: np.ndarray, n_cols: int) -> np.ndarray:
    """Pad per-path gamma indices out to n_cols; past the last zero the
    anchor stays at the last zero."""
    have = gamma.shape[1]
    if have >= n_cols:
        return gamma[:, :n_cols]
    pad = np.repeat(gbar[:, None], n_cols - have, axis=1)
    return np.concatenate([gamma, pad], axis=1)


def _flatness_check(name: str, rep: FlatnessReport, label: str) -> TargetCheck:
    means = ", ".join(f"{m.value:.5g}" for m in rep.means)
    return TargetCheck(
        name=name,
        kind="flatness",
        target=None,
        estimate=rep.max_z,
        stderr=None,
        z=rep.max_z,
        stat_tolerance=rep.threshold,
        grid_allowance=0.0,
        truncation_allowance=0.0,
        passed=rep.passed,
        detail=f"{label} means [{means}], max pairwise z = {rep.max_z:.3f}",
    )


def _control_check(name: str, rep: FlatnessReport) -> TargetCheck:
    return TargetCheck(
        name=name,
        kind="control",
        target=None,
        estimate=rep.max_z,
        stderr=None,
        z=rep.max_z,
        stat_tolerance=rep.threshold,
        grid_allowance=0.0,
        truncation_allowance=0.0,
        passed=rep.max_z >= rep.threshold,
        detail=f"drifted control must fail flatness: z = {rep.max_z:.3f} vs {rep.threshold}",
    )


def _ks_check(name: str, rep: KsReport, extra: float) -> TargetCheck:
    return TargetCheck(
        name=name,
        kind="ks",
        target=0.0,
        estimate=rep.statistic,
        stderr=None,
        z=None,
        stat_tolerance=rep.critical - extra,
        grid_allowance=extra,
        truncation_allowance=0.0,
        passed=rep.passed,
        detail=f"ks {rep.statistic:.4f} vs {rep.critical:.4f} (n_eff {rep.n_effective:.0f})",
    )


def _curve(name, xs, targets, estimates) -> CurveSeries:
    return CurveSeries(
        name=name,
        xs=tuple(float(v) for v in xs),
        targets=tuple(float(v) for v in targets),
        estimates=tuple(e.value for e in estimates),
        ci_lo=tuple(e.ci_lo for e in estimates),
        ci_hi=tuple(e.ci_hi for e in estimates),
    )


def _sup_deficit(level_log, span):
    """Shortfall of the finite-span barrier probability against the
    all-time law e^{-b} for the drift -1/2 Brownian exponent; exact via
    the reflection formula.  Vectorizes over either argument."""
    b = np.asarray(level_log, dtype=np.float64)
    t = np.asarray(span, dtype=np.float64)
    rt = np.sqrt(t)
    finite = 1.0 - norm.cdf((b + 0.5 * t) / rt) + np.exp(-b) * norm.cdf((0.5 * t - b) / rt)
    return np.where(b > 0.0, np.maximum(np.exp(-b) - finite, 0.0), 0.0)


# ---------------------------------------------------------------- t1 suite

_F_ORDER = ("one", "below-1", "cap-1")


def _f_eval(kind: str, a: np.ndarray) -> np.ndarray:
    if kind == "one":
        return np.ones_like(a)
    if kind == "below-1":
        return (a < 1.0).astype(np.float64)
    return np.minimum(a, 1.0)


def _f_primitive(kind: str, a: np.ndarray) -> np.ndarray:
    if kind == "one":
        return a.copy()
    if kind == "below-1":
        return np.minimum(a, 1.0)
    return np.where(a < 1.0, 0.5 * a * a, a - 0.5)


@dataclass(frozen=True)
class _T1Params:
    seed: int
    step: float
    horizon: float
    checkpoints: tuple[float, ...]
    model: DensityModel
    drift: float = 0.0


def _t1_chunk(p: _T1Params, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    if p.drift != 0.0:
        w = w + p.drift * grid.times[None, :]
    cols = np.array([grid.index_of(t) for t in p.checkpoints])
    s = np.maximum.accumulate(w, axis=1)
    b = float(np.sqrt(p.step))
    variants = {
        "drawdown": (s - w, s),
        "abs": (np.abs(w), _kernel_matrix(w, p.step, b)),
    }
    block = _density_block(p.model, p.seed, start, count, p.step)
    out: dict[str, np.ndarray] = {"q": block.terminal}
    for cons, (x, a) in variants.items():
        xc = x[:, cols]
        ac = a[:, cols]
        for kind in _F_ORDER:
            out[f"{cons}|{kind}"] = _f_primitive(kind, ac) - _f_eval(kind, ac) * xc
    return out


def _model_label(model: DensityModel) -> str:
    if isinstance(model, ConstantOne):
        return "constant-one"
    if isinstance(model, StoppedBM):
        return "stopped-bm"
    return "erf-sign"


def _run_t1(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 1.0
    cps = st.checkpoints if st.checkpoints is not None else (0.25, 0.5, 0.75, 1.0)
    checks: list[TargetCheck] = []
    for model in (ConstantOne(), _SBM):
        p = _T1Params(st.master_seed, st.step, horizon, cps, model)
        feats = run_chunked(st.n_paths, functools.partial(_t1_chunk, p), workers=st.workers)
        q = feats["q"]
        for cons in ("drawdown", "abs"):
            for kind in _F_ORDER:
                rep = flatness_test(feats[f"{cons}|{kind}"].T, q, cps)
                checks.append(
                    _flatness_check(f"{_model_label(model)}-{cons}-f-{kind}", rep, "q-weighted")
                )
    control = _T1Params(st.master_seed, st.step, horizon, cps, ConstantOne(), drift=0.3)
    n_ctrl = min(st.n_paths, 20000)
    feats = run_chunked(n_ctrl, functools.partial(_t1_chunk, control), workers=st.workers)
    rep = flatness_test(feats["drawdown|one"].T, feats["q"], cps)
    checks.append(_control_check("drifted-control-fails", rep))
    return checks, []


# ---------------------------------------------------------------- r1 restart martingale

@dataclass(frozen=True)
class _R1Params:
    seed: int
    step: float
    horizon: float
    cdf_time: float
    offsets: tuple[float, ...]
    model: DensityModel


def _r1_chunk(p: _R1Params, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    t = grid.times
    u = norm.cdf((0.5 - w) / np.sqrt(p.cdf_time - t)[None, :])
    block = _density_block(p.model, p.seed, start, count, p.step)
    gbar = block.gbar
    ug = _gather(u, gbar)
    offs = np.array([round(s / p.step) for s in p.offsets], dtype=np.int64)
    vals = np.empty((count, offs.size))
    keep = np.ones(count, dtype=bool)
    for k, d in enumerate(offs):
        cols = gbar + d
        over = cols > grid.n_steps
        if over.any():
            keep &= ~over
            cols = np.minimum(cols, grid.n_steps)
        vals[:, k] = _gather(u, cols) - ug
    bound = max(float(np.max(u - 1.0)), float(np.max(-u)), 0.0)
    return {
        "v": vals[keep],
        "bound": np.full(count, bound),
        "pprime_raw": block.terminal[keep],
        "kept": keep.astype(np.float64),
    }


def _run_r1(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 2.0
    offsets = st.checkpoints if st.checkpoints is not None else (0.2, 0.45, 0.7, 0.95)
    if st.policy == "extend":
        # make sure every restart window fits on the simulated grid
        horizon = max(horizon, 1.0 + max(offsets) + st.step)
        horizon = round(horizon / st.step) * st.step
    p = _R1Params(st.master_seed, st.step, horizon, cdf_time=horizon + 1.0, offsets=offsets, model=_ERF)
    feats = run_chunked(st.n_paths, functools.partial(_r1_chunk, p), workers=st.workers)
    pprime = ensemble_weights(feats["pprime_raw"]).pprime_weight
    rep = flatness_test(feats["v"].T, pprime, offsets)
    dropped = int(st.n_paths - feats["v"].shape[0])
    checks = [
        _flatness_check("restart-increments-flat", rep, f"P'-weighted ({dropped} dropped)"),
        exact_check("bounded-in-unit-interval", float(np.max(feats["bound"]))),
    ]
    return checks, []


# ---------------------------------------------------------------- sigma-s characterization

@dataclass(frozen=True)
class _SigSParams:
    seed: int
    step: float
    horizon: float
    checkpoints: tuple[float, ...]
    model: DensityModel


def _sigs_chunk(p: _SigSParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    block = _density_block(p.model, p.seed, start, count, p.step, with_gamma=True)
    gamma = _extend_gamma(block.gamma, block.gbar, grid.n_steps + 1)
    wg = np.take_along_axis(w, gamma, axis=1)
    x = np.abs(w - wg)
    b = float(np.sqrt(p.step))
    pref = np.zeros_like(x)
    np.cumsum((x[:, :-1] < b).astype(np.float64), axis=1, out=pref[:, 1:])
    pref *= p.step / (2.0 * b)
    a = pref - np.take_along_axis(pref, gamma, axis=1)
    cols = np.array([grid.index_of(t) for t in p.checkpoints])
    xc, ac = x[:, cols], a[:, cols]
    out: dict[str, np.ndarray] = {"q": block.terminal}
    for kind in _F_ORDER:
        out[kind] = _f_primitive(kind, ac) - _f_eval(kind, ac) * xc
    out["null_mag"] = np.abs(_gather(x, block.gbar)) + np.abs(_gather(a, block.gbar))
    return out


def _run_sigma_s(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 2.0
    cps = st.checkpoints if st.checkpoints is not None else (0.5, 1.0, 1.5, 2.0)
    p = _SigSParams(st.master_seed, st.step, horizon, cps, _ERF)
    feats = run_chunked(st.n_paths, functools.partial(_sigs_chunk, p), workers=st.workers)
    checks = []
    for kind in _F_ORDER:
        rep = flatness_test(feats[kind].T, feats["q"], cps)
        checks.append(_flatness_check(f"restarted-reflected-f-{kind}", rep, "q-weighted"))
    checks.append(exact_check("null-at-last-zero", float(np.max(feats["null_mag"]))))
    return checks, []


# ---------------------------------------------------------------- rho algebra

@dataclass(frozen=True)
class _RhoParams:
    seed: int
    step: float
    horizon: float
    model: DensityModel


def _rho_pairs() -> tuple[tuple[PathFunctional, PathFunctional], ...]:
    return (
        (RunningSup(), QuadraticVariation()),
        (NetChange(), RunningIntegralAgainst(lambda v: v)),
        (Constant(2.0), LocalTimeAt(0.0)),
    )


def _rho_chunk(p: _RhoParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    lin_bad = np.zeros(count)
    pos_bad = np.zeros(count)
    prod_bad = np.zeros(count)
    defn_bad = np.zeros(count)
    for i in range(count):
        seed = SeedSpec(master_seed=p.seed, path_index=start + i)
        w = sample_bm(grid, 0.0, seed)
        driver = density_driver_path(p.model, seed, grid)
        dens = density_path(p.model, seed, grid)
        zs = zero_set(dens, p.model, driver)
        shifted = shift(w, zs)
        g = zs.gbar_index
        for v1, v2 in _rho_pairs():
            u1 = rho(v1, w, zs).values
            u2 = rho(v2, w, zs).values
            combo = rho(LinearCombination((2.0, -1.0), (v1, v2)), w, zs).values
            if not np.array_equal(combo, 2.0 * u1 - u2):
                lin_bad[i] += 1.0
            prod = rho(Product((v1, v2)), w, zs).values
            if not np.array_equal(prod, u1 * u2):
                prod_bad[i] += 1.0
            # entry for entry past the restart point; at the point itself
            # the lift books 0 whenever the point is a detected zero
            direct = v1.evaluate(shifted.values, p.step)
            tail_ok = np.array_equal(u1[g + 1 :], direct[1:])
            head_ok = u1[g] == (0.0 if g > 0 else direct[0])
            if not (tail_ok and head_ok):
                defn_bad[i] += 1.0
        for v in (QuadraticVariation(), LocalTimeAt(0.0)):
            if float(np.min(rho(v, w, zs).values)) < 0.0:
                pos_bad[i] += 1.0
    return {"lin": lin_bad, "pos": pos_bad, "prod": prod_bad, "defn": defn_bad}


def _run_rho(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 2.0
    p = _RhoParams(st.master_seed, st.step, horizon, _ERF)
    feats = run_chunked(st.n_paths, functools.partial(_rho_chunk, p), workers=st.workers)
    n = st.n_paths
    checks = [
        count_check("linearity-bitwise", int(feats["lin"].sum()), f"0 of {3 * n} pair evaluations differ"),
        count_check("product-rule-bitwise", int(feats["prod"].sum()), f"0 of {3 * n} pair evaluations differ"),
        count_check("positivity", int(feats["pos"].sum()), f"0 of {2 * n} nonnegative lifts go negative"),
        count_check("defining-property-exact", int(feats["defn"].sum()), f"restart values equal shifted values on {3 * n} evaluations"),
    ]
    return checks, []


# ---------------------------------------------------------------- q bracket

@dataclass(frozen=True)
class _QBracketParams:
    seed: int
    step: float
    horizon: float
    offsets: tuple[float, ...]
    model: DensityModel


def _qbracket_chunk(p: _QBracketParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    block = _density_block(p.model, p.seed, start, count, p.step)
    gbar = block.gbar
    pref = np.zeros_like(w)
    np.cumsum(np.diff(w, axis=1) ** 2, axis=1, out=pref[:, 1:])
    wg = _gather(w, gbar)
    qg = _gather(pref, gbar)
    offs = np.array([round(s / p.step) for s in p.offsets], dtype=np.int64)
    vals = np.empty((count, offs.size))
    brack_min = np.full(count, np.inf)
    for k, d in enumerate(offs):
        cols = gbar + d
        beta = _gather(w, cols) - wg
        brack = _gather(pref, cols) - qg
        brack_min = np.minimum(brack_min, brack)
        vals[:, k] = beta * beta - brack
    return {"v": vals, "brack_min": brack_min, "q": block.terminal}


def _run_qbracket(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 2.0
    offs = st.checkpoints if st.checkpoints is not None else (0.25, 0.5, 0.75, 1.0)
    p = _QBracketParams(st.master_seed, st.step, horizon, offs, _ERF)
    feats = run_chunked(st.n_paths, functools.partial(_qbracket_chunk, p), workers=st.workers)
    rep = flatness_test(feats["v"].T, feats["q"], offs)
    worst = float(np.min(feats["brack_min"]))
    checks = [
        _flatness_check("squared-restart-minus-bracket-flat", rep, "q-weighted"),
        exact_check("bracket-increments-nonnegative", max(0.0, -worst)),
    ]
    return checks, []


# ---------------------------------------------------------------- tanaka / ito ladders

_LADDER = (4, 2, 1)


@dataclass(frozen=True)
class _LadderParams:
    seed: int
    step: float
    horizon: float
    model: DensityModel
    form: str
    level: float = 0.0


def _restarted_on(values: np.ndarray, grid: TimeGrid, zs) -> Path:
    # signed restarted driver; level 0 is crossed transversally, which is
    # what the local-time identities are about
    return Path(grid=grid, values=values - values[zs.gamma_index])


def _ladder_paths(p: _LadderParams, index: int):
    """Fine path plus its zero set, subsampled onto each ladder rung."""
    fine = make_grid(p.horizon, p.step)
    seed = SeedSpec(master_seed=p.seed, path_index=index)
    w = sample_bm(fine, 0.0, seed)
    driver = density_driver_path(p.model, seed, fine)
    out = []
    for factor in _LADDER:
        grid = make_grid(p.horizon, p.step * factor)
        values = w.values[::factor]
        level_series = driver.values[::factor] + p.model.offset
        zs = zero_set_from_level_series(level_series, grid, last_index=grid.index_of(p.model.terminal_time))
        out.append((grid, values, zs))
    return out


def _tanaka_chunk(p: _LadderParams, start: int, count: int) -> dict[str, np.ndarray]:
    sups = {f: np.empty(count) for f in _LADDER}
    tri_bad = np.zeros(count)
    for i in range(count):
        rungs = _ladder_paths(p, start + i)
        for factor, (grid, values, zs) in zip(_LADDER, rungs):
            x = _restarted_on(values, grid, zs)
            res = tanaka_residual(x, p.level, zs, form=p.form)
            sups[factor][i] = float(np.max(np.abs(res.residual.values)))
            if factor == 1 and p.form == "abs":
                rp = tanaka_residual(x, p.level, zs, form="plus").residual.values
                rm = tanaka_residual(x, p.level, zs, form="minus").residual.values
                gap = np.abs(res.residual.values) - (np.abs(rp) + np.abs(rm))
                if float(np.max(gap)) > 1e-12:
                    tri_bad[i] = 1.0
    return {"sup4": sups[4], "sup2": sups[2], "sup1": sups[1], "tri_bad": tri_bad}


def _ito_chunk(p: _LadderParams, start: int, count: int) -> dict[str, np.ndarray]:
    F, dF, d2F = _ITO_FORMS[p.form]
    sups = {f: np.empty(count) for f in _LADDER}
    for i in range(count):
        rungs = _ladder_paths(p, start + i)
        for factor, (grid, values, zs) in zip(_LADDER, rungs):
            x = _restarted_on(values, grid, zs)
            res = ito_residual(F, dF, d2F, x, zs)
            sups[factor][i] = float(np.max(np.abs(res.values)))
    return {"sup4": sups[4], "sup2": sups[2], "sup1": sups[1]}


_ITO_FORMS = {
    "linear": (lambda x: x.copy(), lambda x: np.ones_like(x), lambda x: np.zeros_like(x)),
    "square": (lambda x: x * x, lambda x: 2.0 * x, lambda x: np.full_like(x, 2.0)),
    "cosine": (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
}


def _ladder_rows(name: str, feats: dict[str, np.ndarray], st: RunSettings) -> list[TargetCheck]:
    med = {f: float(np.median(feats[f"sup{f}"])) for f in _LADDER}
    s = st.step
    return [
        ratio_check(f"{name}-halving-{4 * s:g}-to-{2 * s:g}", med[4], med[2], 1.2),
        ratio_check(f"{name}-halving-{2 * s:g}-to-{s:g}", med[2], med[1], 1.2),
    ]


def _constant_path_residual(st: RunSettings, form: str, ito_form: str | None) -> float:
    grid = make_grid(1.0, st.step)
    flat = Path(grid=grid, values=np.full(grid.n_steps + 1, 0.5))
    zs = zero_set_from_level_series(np.ones(grid.n_steps + 1), grid)
    if ito_form is None:
        res = tanaka_residual(flat, 0.0, zs, form=form).residual.values
    else:
        F, dF, d2F = _ITO_FORMS[ito_form]
        res = ito_residual(F, dF, d2F, flat, zs).values
    return float(np.max(np.abs(res)))


def _make_tanaka_runner(form: str):
    def _run(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
        p = _LadderParams(st.master_seed, st.step, st.horizon if st.horizon is not None else 1.0, _ERF, form)
        feats = run_chunked(st.n_paths, functools.partial(_tanaka_chunk, p), workers=st.workers)
        checks = _ladder_rows(f"{form}-residual", feats, st)
        checks.append(exact_check("constant-path-residual", _constant_path_residual(st, form, None)))
        if form == "abs":
            checks.append(
                count_check(
                    "abs-bounded-by-parts",
                    int(feats["tri_bad"].sum()),
                    f"|abs residual| <= |plus| + |minus| pathwise on {st.n_paths} paths",
                )
            )
        return checks, []

    return _run


def _run_ito(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    checks: list[TargetCheck] = []
    horizon = st.horizon if st.horizon is not None else 1.0
    for form in ("linear", "square", "cosine"):
        p = _LadderParams(st.master_seed, st.step, horizon, _ERF, form)
        feats = run_chunked(st.n_paths, functools.partial(_ito_chunk, p), workers=st.workers)
        checks.extend(_ladder_rows(f"{form}", feats, st))
        checks.append(exact_check(f"{form}-constant-path-residual", _constant_path_residual(st, "abs", form)))
    return checks, []


# ---------------------------------------------------------------- doob maximal

@dataclass(frozen=True)
class _DoobParams:
    seed: int
    step: float
    horizon: float
    levels: tuple[float, ...]
    model: DensityModel


def _doob_chunk(p: _DoobParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    z = w - 0.5 * grid.times[None, :]
    block = _density_block(p.model, p.seed, start, count, p.step)
    gbar = block.gbar
    col = np.arange(grid.n_steps + 1)
    pre = col[None, :] < gbar[:, None]
    out: dict[str, np.ndarray] = {
        "zg": _gather(z, gbar),
        "gbar_t": gbar.astype(np.float64) * p.step,
        "q": block.terminal,
    }
    for a in p.levels:
        b = float(np.log(a))
        zm = np.where(pre, b - 50.0, z)
        crossed = (zm >= b).any(axis=1)
        arr = -2.0 * (b - zm[:, :-1]) * (b - zm[:, 1:]) / p.step
        e = np.minimum(np.exp(np.minimum(arr, 0.0)), 1.0 - 1e-16)
        smooth = -np.expm1(np.sum(np.log1p(-e), axis=1))
        out[f"freq|{a:g}"] = np.where(crossed, 1.0, smooth)
    return out


def _run_doob(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    h1 = st.horizon if st.horizon is not None else 8.0
    curve_levels = (1.25, 1.5, 2.0, 3.0, 4.0)
    p1 = _DoobParams(st.master_seed, st.step, h1, curve_levels, ConstantOne())
    feats = run_chunked(st.n_paths, functools.partial(_doob_chunk, p1), workers=st.workers, chunk_size=64)
    checks: list[TargetCheck] = []
    ests = []
    for a in curve_levels:
        est = weighted_mean(feats[f"freq|{a:g}"])
        ests.append(est)
        if a in (1.5, 2.0, 3.0):
            deficit = float(_sup_deficit(np.log(a), h1))
            grid_allow = 0.02 - deficit if a == 2.0 else 0.004
            checks.append(
                mean_check(
                    f"constant-one-sup-exceeds-{a:g}",
                    1.0 / a,
                    feats[f"freq|{a:g}"],
                    grid_allowance=round(grid_allow, 6),
                    truncation_allowance=round(deficit, 6),
                )
            )
    curve = _curve("constant-one-levels", curve_levels, [1.0 / a for a in curve_levels], ests)

    h2 = 2.5 * h1
    p2 = _DoobParams(st.master_seed, st.step, h2, (2.0,), _ERF)
    feats2 = run_chunked(st.n_paths, functools.partial(_doob_chunk, p2), workers=st.workers, chunk_size=64)
    pprime = ensemble_weights(feats2["q"]).pprime_weight
    freq = weighted_mean(feats2[f"freq|{2.0:g}"], pprime)
    xg = np.exp(feats2["zg"])
    mean_side = weighted_mean(np.minimum(xg / 2.0, 1.0), pprime)
    combined = float(np.hypot(freq.stderr, mean_side.stderr))
    gap = abs(freq.value - mean_side.value)
    spans = h2 - feats2["gbar_t"]
    blog = np.log(2.0 / np.minimum(xg, 2.0))
    resid = float(np.mean(_sup_deficit(blog, spans)))
    checks.append(
        TargetCheck(
            name="erf-sign-two-sided-at-2",
            kind="mean",
            target=mean_side.value,
            estimate=freq.value,
            stderr=combined,
            z=gap / combined if combined > 0.0 else 0.0,
            stat_tolerance=3.0 * combined,
            grid_allowance=0.0,
            truncation_allowance=0.0,
            passed=gap <= 3.0 * combined,
            detail=(
                f"frequency {freq.value:.5f} vs restart mean {mean_side.value:.5f}"
                f" (combined se {combined:.5f}, residual horizon deficit {resid:.5f})"
            ),
        )
    )
    return checks, [curve]


# ---------------------------------------------------------------- passage laws

@dataclass(frozen=True)
class _PassageParams:
    seed: int
    step: float
    horizon: float
    boundary: BoundarySpec


def _passage_chunk(p: _PassageParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    x = np.abs(w)
    b = float(np.sqrt(p.step))
    a = _kernel_matrix(x, p.step, b)
    viol = x > p.boundary.phi_of(a)
    v = _first_true(viol)
    rows = np.arange(count)
    aprev = np.where(v > 0, a[rows, np.maximum(v - 1, 0)], np.where(v == 0, 0.0, np.inf))
    return {"hit": (v >= 0).astype(np.float64), "aprev": aprev, "aterm": a[:, -1]}


def _passage_rows(
    feats: dict[str, np.ndarray],
    boundary: BoundarySpec,
    u: float | None,
    name: str,
    weights: np.ndarray | None,
    grid_allow: float,
    trunc_allow: float,
) -> tuple[TargetCheck, CurveSeries]:
    hit = feats["hit"] > 0.0
    aprev = feats["aprev"]
    if u is None:
        event = hit.astype(np.float64)
        target = boundary.full_crossing_probability()
    else:
        event = (hit & (aprev <= u)).astype(np.float64)
        target = boundary.crossing_probability(u)
    check = mean_check(
        name, target, event, weights, grid_allowance=grid_allow, truncation_allowance=trunc_allow
    )
    xs = (0.2, 0.4, 0.6, 0.8, 1.0)
    ests = [weighted_mean((hit & (aprev <= g)).astype(np.float64), weights) for g in xs]
    curve = _curve("crossing-by-level", xs, [boundary.crossing_probability(g) for g in xs], ests)
    return check, curve


def _make_passage_runner(boundary: BoundarySpec, u: float | None, default_horizon: float, trunc: float):
    def _run(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
        horizon = st.horizon if st.horizon is not None else default_horizon
        p = _PassageParams(st.master_seed, st.step, horizon, boundary)
        feats = run_chunked(st.n_paths, functools.partial(_passage_chunk, p), workers=st.workers)
        label = "crossing-before-growth-1" if u is not None else "crossing-over-full-span"
        check, curve = _passage_rows(feats, boundary, u, label, None, 0.012, trunc)
        undecided = float(np.mean((feats["hit"] == 0.0) & (feats["aterm"] <= (u if u is not None else boundary_cap(boundary)))))
        check = replace(check, detail=check.detail + f"; undecided fraction {undecided:.4f}")
        return [check], [curve]

    return _run


def boundary_cap(boundary: BoundarySpec) -> float:
    """Largest growth level at which the boundary is still finite."""
    if isinstance(boundary, TableBoundary):
        for s, v in boundary.segments:
            if not np.isfinite(v):
                return s
    return float("inf")


@dataclass(frozen=True)
class _S32Params:
    seed: int
    step: float
    horizon: float
    span: float
    model: DensityModel


def _s32_chunk(p: _S32Params, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    b = float(np.sqrt(p.step))
    rows = np.arange(count)

    n6 = grid.index_of(p.span)
    xc = np.abs(w[:, : n6 + 1])
    ac = _kernel_matrix(xc, p.step, b)
    vc = _first_true(xc > 1.0)
    aprev_c = np.where(vc > 0, ac[rows, np.maximum(vc - 1, 0)], np.where(vc == 0, 0.0, np.inf))

    block = _density_block(p.model, p.seed, start, count, p.step)
    gbar = block.gbar
    xs = np.abs(w - _gather(w, gbar)[:, None])
    pref = np.zeros_like(xs)
    np.cumsum((xs[:, :-1] < b).astype(np.float64), axis=1, out=pref[:, 1:])
    pref *= p.step / (2.0 * b)
    a_sh = pref - _gather(pref, gbar)[:, None]
    col = np.arange(grid.n_steps + 1)
    ve = _first_true((xs > 1.0) & (col[None, :] >= gbar[:, None]))
    aprev_e = np.where(ve > 0, a_sh[rows, np.maximum(ve - 1, 0)], np.inf)
    return {
        "hit_c": (vc >= 0).astype(np.float64),
        "aprev_c": aprev_c,
        "hit_e": (ve >= 0).astype(np.float64),
        "aprev_e": aprev_e,
        "pprime_raw": block.terminal,
    }


def _run_s32(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    span = 6.0
    horizon = st.horizon if st.horizon is not None else span + 1.0
    p = _S32Params(st.master_seed, st.step, horizon, span, _ERF)
    feats = run_chunked(st.n_paths, functools.partial(_s32_chunk, p), workers=st.workers)
    ev_e = ((feats["hit_e"] > 0.0) & (feats["aprev_e"] <= 1.0)).astype(np.float64)
    ev_c = ((feats["hit_c"] > 0.0) & (feats["aprev_c"] <= 1.0)).astype(np.float64)
    pprime = ensemble_weights(feats["pprime_raw"]).pprime_weight
    checks = [
        mean_check(
            "restarted-crossing-before-growth-1",
            _EULER,
            ev_e,
            pprime,
            grid_allowance=0.012,
            truncation_allowance=0.008,
        ),
        mean_check(
            "paired-driver-crossing",
            _EULER,
            ev_c,
            grid_allowance=0.012,
            truncation_allowance=0.008,
        ),
    ]
    e_est = weighted_mean(ev_e, pprime)
    c_est = weighted_mean(ev_c)
    combined = float(np.hypot(e_est.stderr, c_est.stderr))
    gap = abs(e_est.value - c_est.value)
    checks.append(
        TargetCheck(
            name="common-numbers-agreement",
            kind="mean",
            target=c_est.value,
            estimate=e_est.value,
            stderr=combined,
            z=gap / combined if combined > 0.0 else 0.0,
            stat_tolerance=2.0 * combined,
            grid_allowance=0.0,
            truncation_allowance=0.0,
            passed=gap <= 2.0 * combined,
            detail=f"restarted {e_est.value:.5f} vs driver {c_est.value:.5f}, combined se {combined:.5f}",
        )
    )
    xs = (0.2, 0.4, 0.6, 0.8, 1.0)
    bnd = ConstantBoundary(1.0)
    ests = [
        weighted_mean(((feats["hit_e"] > 0.0) & (feats["aprev_e"] <= g)).astype(np.float64), pprime)
        for g in xs
    ]
    curve = _curve("restarted-crossing-by-level", xs, [bnd.crossing_probability(g) for g in xs], ests)
    return checks, [curve]


# ---------------------------------------------------------------- terminal growth law

@dataclass(frozen=True)
class _AinfParams:
    seed: int
    step: float
    horizon: float
    stop_level: float
    model: DensityModel


def _ainf_chunk(p: _AinfParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    block = _density_block(p.model, p.seed, start, count, p.step)
    gbar = block.gbar
    xs = np.abs(w - _gather(w, gbar)[:, None])
    col = np.arange(grid.n_steps + 1)
    after = col[None, :] >= gbar[:, None]
    reach = _first_true((xs >= p.stop_level) & after)
    b = float(np.sqrt(p.step))
    left = col[:-1]
    live = after[:, :-1] & ((reach < 0)[:, None] | (left[None, :] < reach[:, None]))
    hits = (xs[:, :-1] < b) & live
    aterm = hits.sum(axis=1) * (p.step / (2.0 * b))
    return {
        "aterm": aterm,
        "reached": (reach >= 0).astype(np.float64),
        "q": block.terminal,
    }


def _run_ainf(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    law = GrowthLaw.constant(1.0)
    checks: list[TargetCheck] = []
    curves: list[CurveSeries] = []
    xs = tuple(0.25 * k for k in range(13))
    for model, extra_span in ((ConstantOne(), 0.0), (_ERF, 1.0)):
        horizon = (st.horizon if st.horizon is not None else 6.0) + extra_span
        p = _AinfParams(st.master_seed, st.step, horizon, 1.0, model)
        feats = run_chunked(st.n_paths, functools.partial(_ainf_chunk, p), workers=st.workers)
        label = _model_label(model)
        pprime = ensemble_weights(feats["q"]).pprime_weight
        rep = ks_test(feats["aterm"], pprime, law.cdf, extra_allowance=0.03)
        checks.append(_ks_check(f"{label}-terminal-law-ks", rep, 0.03))
        checks.append(
            mean_check(
                f"{label}-survival-at-1",
                float(np.exp(-1.0)),
                (feats["aterm"] > 1.0).astype(np.float64),
                pprime,
                grid_allowance=0.015,
                truncation_allowance=0.005,
            )
        )
        checks.append(
            count_check(
                f"{label}-survival-at-0-exact",
                int(np.count_nonzero(feats["aterm"] <= 0.0)),
                "terminal local time is strictly positive on every path",
            )
        )
        ests = [weighted_mean((feats["aterm"] > g).astype(np.float64), pprime) for g in xs]
        curves.append(_curve(f"{label}-survival", xs, [float(np.exp(-g)) for g in xs], ests))
    return checks, curves


# ---------------------------------------------------------------- levy corollaries

@dataclass(frozen=True)
class _LevyParams:
    seed: int
    step: float
    horizon: float
    x_low: float | None


def _levy_chunk(p: _LevyParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    s = np.maximum.accumulate(w, axis=1)
    dd = s - w
    rows = np.arange(count)
    viol = dd > 1.0
    if p.x_low is not None:
        tx = _first_true(s > p.x_low)
        col = np.arange(grid.n_steps + 1)
        viol = viol & (col[None, :] >= tx[:, None]) & (tx >= 0)[:, None]
    v = _first_true(viol)
    sprev = np.where(v > 0, s[rows, np.maximum(v - 1, 0)], np.inf)
    out = {"has_viol": (v >= 0).astype(np.float64), "sprev": sprev}
    if p.x_low is not None:
        out["x_unreached"] = (tx < 0).astype(np.float64)
    # terminal weights for every density model off the shared density stream
    sgrid = make_grid(1.0, p.step)
    incs = increments_matrix(p.seed, start, count, sgrid.n_steps, p.step, SUBSTREAM_DENSITY)
    erf_driver = cumsum_paths(incs)
    out["q_erf"] = density_matrix(_ERF, erf_driver, sgrid)[:, -1].copy()
    sbm_driver = cumsum_paths(incs, 1.0)
    out["q_sbm"] = density_matrix(_SBM, sbm_driver, sgrid)[:, -1].copy()
    return out


def _hold_values(feats: dict[str, np.ndarray], u: float) -> np.ndarray:
    return ((feats["has_viol"] == 0.0) | (feats["sprev"] > u)).astype(np.float64)


def _run_levy5(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 8.0
    p = _LevyParams(st.master_seed, st.step, horizon, None)
    feats = run_chunked(st.n_paths, functools.partial(_levy_chunk, p), workers=st.workers, chunk_size=128)
    hold = _hold_values(feats, 1.0)
    checks = [
        mean_check(
            "constant-one-hold",
            float(np.exp(-1.0)),
            hold,
            grid_allowance=0.014,
            truncation_allowance=0.006,
        ),
        mean_check(
            "erf-sign-hold",
            _D0_ERF * float(np.exp(-1.0)),
            hold,
            feats["q_erf"],
            grid_allowance=0.014,
            truncation_allowance=0.006,
        ),
        mean_check("q-mean-of-one-constant-one", 1.0, np.ones_like(hold)),
        mean_check("q-mean-of-one-erf-sign", _D0_ERF, np.ones_like(hold), feats["q_erf"]),
        mean_check("q-mean-of-one-stopped-bm", 1.0, np.ones_like(hold), feats["q_sbm"]),
    ]
    xs = (0.2, 0.4, 0.6, 0.8, 1.0)
    plain = [weighted_mean(_hold_values(feats, g)) for g in xs]
    signed = [weighted_mean(_hold_values(feats, g), feats["q_erf"]) for g in xs]
    curves = [
        _curve("constant-one-hold", xs, [float(np.exp(-g)) for g in xs], plain),
        _curve("erf-sign-hold", xs, [_D0_ERF * float(np.exp(-g)) for g in xs], signed),
    ]
    return checks, curves


def _run_levy6(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 12.0
    x_low = 0.05
    p = _LevyParams(st.master_seed, st.step, horizon, x_low)
    feats = run_chunked(st.n_paths, functools.partial(_levy_chunk, p), workers=st.workers, chunk_size=128)
    hold = _hold_values(feats, 1.0)
    factor = float(np.exp(-(1.0 - x_low)))
    unreached = float(np.mean(feats["x_unreached"]))
    # Crossing detection is biased twice here: the running sup is understated
    # between samples and so is the excursion depth, and the window opener
    # fires late for the same reason.  All three push the hold frequency up
    # by an amount that scales like the square root of the step (measured
    # 0.030 at step 1e-3, 0.042 at 2e-3), so the slack follows that scale.
    # The undecided mass at this horizon is a width-1 tube confinement event
    # with probability below 1e-6 and gets no slack of its own.
    slack = 1.2 * math.sqrt(st.step)
    base = mean_check(
        "constant-one-windowed-hold",
        factor,
        hold,
        grid_allowance=slack,
    )
    checks = [
        replace(base, detail=base.detail + f"; lower level unreached on fraction {unreached:.4f}"),
        mean_check(
            "erf-sign-windowed-hold",
            _D0_ERF * factor,
            hold,
            feats["q_erf"],
            grid_allowance=slack,
        ),
    ]
    return checks, []


# ---------------------------------------------------------------- products / scaling

@dataclass(frozen=True)
class _ProductsParams:
    seed: int
    step: float
    horizon: float
    checkpoints: tuple[float, ...]
    model: DensityModel


def _products_chunk(p: _ProductsParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w1 = _primary(p.seed, start, count, grid)
    incs2 = increments_matrix(p.seed, start, count, grid.n_steps, p.step, SUBSTREAM_SECONDARY)
    w2 = cumsum_paths(incs2)
    s1 = np.maximum.accumulate(w1, axis=1)
    s2 = np.maximum.accumulate(w2, axis=1)
    x1, a1 = s1 - w1, s1
    x2, a2 = s2 - w2, s2
    incr = x1[:, :-1] * np.diff(a2, axis=1) + x2[:, :-1] * np.diff(a1, axis=1)
    ap = np.zeros_like(x1)
    np.cumsum(incr, axis=1, out=ap[:, 1:])
    n = x1 * x2 - ap
    cols = np.array([grid.index_of(t) for t in p.checkpoints])
    block = _density_block(p.model, p.seed, start, count, p.step)
    return {"n": n[:, cols], "q": block.terminal}


def _membership_sample(build, n_paths: int, seed: int, step: float, horizon: float) -> int:
    grid = make_grid(horizon, step)
    bad = 0
    for i in range(n_paths):
        d = build(grid, SeedSpec(master_seed=seed, path_index=i))
        if not verify_membership(d).passed:
            bad += 1
    return bad


def _build_product(grid: TimeGrid, seed: SeedSpec):
    w1, w2 = sample_independent_pair(grid, (0.0, 0.0), seed)
    return product([drawdown(w1), drawdown(w2)])


def _double(a: np.ndarray) -> np.ndarray:
    return 2.0 * a


def _square(a: np.ndarray) -> np.ndarray:
    return a * a


def _build_scaled(grid: TimeGrid, seed: SeedSpec):
    w = sample_bm(grid, 0.0, seed)
    return scaled_by_f(drawdown(w), _double, _square)


def _run_products(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 1.0
    cps = st.checkpoints if st.checkpoints is not None else (0.25, 0.5, 0.75, 1.0)
    p = _ProductsParams(st.master_seed, st.step, horizon, cps, _SBM)
    feats = run_chunked(st.n_paths, functools.partial(_products_chunk, p), workers=st.workers)
    rep = flatness_test(feats["n"].T, feats["q"], cps)
    bad = _membership_sample(_build_product, 40, st.master_seed, st.step, horizon)
    checks = [
        _flatness_check("product-martingale-part-flat", rep, "q-weighted"),
        count_check("product-membership-sample", bad, "40 pathwise product decompositions verify"),
    ]
    return checks, []


@dataclass(frozen=True)
class _ScaledParams:
    seed: int
    step: float
    horizon: float
    checkpoints: tuple[float, ...]
    model: DensityModel


def _scaled_chunk(p: _ScaledParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    w = _primary(p.seed, start, count, grid)
    s = np.maximum.accumulate(w, axis=1)
    n = 2.0 * s * (s - w) - s * s
    cols = np.array([grid.index_of(t) for t in p.checkpoints])
    block = _density_block(p.model, p.seed, start, count, p.step)
    return {"n": n[:, cols], "q": block.terminal}


def _run_scaled(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 1.0
    cps = st.checkpoints if st.checkpoints is not None else (0.25, 0.5, 0.75, 1.0)
    p = _ScaledParams(st.master_seed, st.step, horizon, cps, _SBM)
    feats = run_chunked(st.n_paths, functools.partial(_scaled_chunk, p), workers=st.workers)
    rep = flatness_test(feats["n"].T, feats["q"], cps)
    bad = _membership_sample(_build_scaled, 40, st.master_seed, st.step, horizon)
    checks = [
        _flatness_check("rescaled-martingale-part-flat", rep, "q-weighted"),
        count_check("rescaled-membership-sample", bad, "40 pathwise rescaled decompositions verify"),
    ]
    return checks, []


# ---------------------------------------------------------------- membership suite

_VARIANTS = (
    "drawdown",
    "abs-martingale",
    "pm-combination",
    "lifted",
    "lifted-stopped",
    "product",
    "scaled",
)
_SHIFTED_VARIANTS = ("drawdown", "lifted", "lifted-stopped", "product", "scaled")


@dataclass(frozen=True)
class _MembershipParams:
    seed: int
    step: float
    horizon: float
    model: DensityModel


def _membership_chunk(p: _MembershipParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.horizon, p.step)
    fine = make_grid(p.horizon, p.step / 2.0)
    stress_tol = 0.6 * float(np.sqrt(2.0 * p.step))
    out: dict[str, np.ndarray] = {}
    for key in _VARIANTS:
        out[f"fail|{key}"] = np.zeros(count)
        out[f"supratio|{key}"] = np.zeros(count)
    out["shifted_fail"] = np.zeros(count)
    out["corrupt_pass"] = np.zeros(count)
    for rung in ("c", "m", "f"):
        out[f"viol_{rung}"] = np.zeros(count)
        out[f"tot_{rung}"] = np.zeros(count)
    times = grid.times
    for i in range(count):
        seed = SeedSpec(master_seed=p.seed, path_index=start + i)
        w, w2 = sample_independent_pair(grid, (0.0, 0.0), seed)
        driver = density_driver_path(p.model, seed, grid)
        dens = density_path(p.model, seed, grid)
        zs = zero_set(dens, p.model, driver)
        members = {
            "drawdown": drawdown(w),
            "abs-martingale": abs_martingale(w, zs),
            "pm-combination": pm_combination(w, 2.0, 0.5, zs),
            "lifted": lifted_reflected(w, zs),
            "lifted-stopped": lifted_reflected(w, zs, stop_level=1.0),
            "product": product([drawdown(w), drawdown(w2)]),
            "scaled": scaled_by_f(drawdown(w), _double, _square),
        }
        for key, d in members.items():
            rep = verify_membership(d)
            if not rep.passed:
                out[f"fail|{key}"][i] = 1.0
            if rep.support is not None:
                out[f"supratio|{key}"][i] = rep.support.ratio
            for c in rep.checks:
                if c.name == "shifted_classical" and not c.passed and key in _SHIFTED_VARIANTS:
                    out["shifted_fail"][i] += 1.0
        base = members["drawdown"]
        bad = assemble(
            base.x,
            Path(grid=grid, values=base.a.values + 0.5 * times),
            class_tag=base.class_tag,
            zero_set=base.zero_set,
            support_scale=base.support_scale,
        )
        if verify_membership(bad).passed:
            out["corrupt_pass"][i] = 1.0
        # fixed-tolerance support mass on a common-randomness step ladder
        wf = sample_bm(fine, 0.0, seed)
        for rung, factor in (("c", 4), ("m", 2), ("f", 1)):
            g = make_grid(p.horizon, p.step / 2.0 * factor)
            d = abs_martingale(Path(grid=g, values=wf.values[::factor]))
            rep = verify_membership(d, support_tolerance=stress_tol)
            out[f"viol_{rung}"][i] = rep.support.violation_mass
            out[f"tot_{rung}"][i] = rep.support.total_mass
    return out


def _run_membership(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    horizon = st.horizon if st.horizon is not None else 1.0
    p = _MembershipParams(st.master_seed, st.step, horizon, _ERF)
    feats = run_chunked(st.n_paths, functools.partial(_membership_chunk, p), workers=st.workers)
    checks: list[TargetCheck] = []
    for key in _VARIANTS:
        checks.append(
            count_check(
                f"{key}-passes",
                int(feats[f"fail|{key}"].sum()),
                f"{st.n_paths} pathwise checks at default tolerances",
            )
        )
    worst = max(float(np.max(feats[f"supratio|{key}"])) for key in _VARIANTS)
    checks.append(exact_check("support-ratio-at-defaults", worst, tolerance=0.05))
    checks.append(
        count_check(
            "shifted-membership-passes",
            int(feats["shifted_fail"].sum()),
            "shifted triples re-verify as classical members",
        )
    )
    checks.append(
        count_check(
            "corrupted-growth-fails",
            int(feats["corrupt_pass"].sum()),
            "a ramp added to A must break the support condition",
        )
    )
    ratios = {}
    for rung in ("c", "m", "f"):
        tot = float(feats[f"tot_{rung}"].sum())
        ratios[rung] = float(feats[f"viol_{rung}"].sum()) / tot if tot > 0.0 else 0.0
    s = st.step
    checks.append(
        ratio_check(f"stressed-ratio-halves-{2 * s:g}-to-{s:g}", ratios["c"], ratios["m"], 2.0)
    )
    checks.append(
        ratio_check(f"stressed-ratio-halves-{s:g}-to-{s / 2:g}", ratios["m"], ratios["f"], 2.0)
    )
    return checks, []


# ---------------------------------------------------------------- zero geometry

@dataclass(frozen=True)
class _GeomParams:
    seed: int
    step: float
    model: DensityModel


def _geom_chunk(p: _GeomParams, start: int, count: int) -> dict[str, np.ndarray]:
    grid = make_grid(p.model.stop_time, p.step)
    driver = driver_matrix(p.model, p.seed, start, count, grid)
    dens = density_matrix(p.model, driver, grid)
    zg = zero_geometry(dens, last_index=grid.n_steps)
    gbar = zg.gbar_idx
    col = np.arange(grid.n_steps + 1)
    after = col[None, :] >= gbar[:, None]
    return {
        "haszero": (gbar > 0).astype(np.float64),
        "gamma_moves": ((zg.gamma_idx != gbar[:, None]) & after).any(axis=1).astype(np.float64),
        "origin_in_h": zg.in_h[:, 0].astype(np.float64),
    }


def _run_geometry(st: RunSettings) -> tuple[list[TargetCheck], list[CurveSeries]]:
    p = _GeomParams(st.master_seed, st.step, _SBM)
    feats = run_chunked(st.n_paths, functools.partial(_geom_chunk, p), workers=st.workers)
    checks = [
        mean_check("last-zero-positive", _P_HIT, feats["haszero"], grid_allowance=0.01),
        count_check(
            "anchor-fixed-after-last-zero",
            int(feats["gamma_moves"].sum()),
            "the restart anchor equals the last zero from the last zero on, every path",
        ),
        count_check("origin-never-a-zero", int(feats["origin_in_h"].sum())),
    ]
    return checks, []


# ---------------------------------------------------------------- registry

@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    anchor: str
    runner: Callable[[RunSettings], tuple[list[TargetCheck], list[CurveSeries]]]
    fast: tuple[int, float]
    full: tuple[int, float]


_FAST = (20000, 2e-3)
_FULL = (100000, 1e-3)
_LADDER_SCALE = (100, 1e-3)

EXPERIMENTS: dict[str, ExperimentSpec] = {}


def _register(name: str, anchor: str, runner, fast=_FAST, full=_FULL) -> None:
    EXPERIMENTS[name] = ExperimentSpec(name=name, anchor=anchor, runner=runner, fast=fast, full=full)


_register(
    "t1-characterization",
    "martingale characterization of the base zero-set class",
    _run_t1,
)
_register(
    "r1-ui-martingale",
    "uniformly integrable restart martingale for bounded class members",
    _run_r1,
)
_register(
    "sigma-s-characterization",
    "martingale characterization of the restarted class",
    _run_sigma_s,
)
_register(
    "rho-algebra",
    "linearity, positivity, and product rules of the restart operator",
    _run_rho,
    fast=(1000, 2e-3),
    full=(1000, 2e-3),
)
_register(
    "q-bracket",
    "quadratic bracket of the restarted driver",
    _run_qbracket,
)
_register(
    "tanaka-abs",
    "signed local-time identity for the absolute value",
    _make_tanaka_runner("abs"),
    fast=_LADDER_SCALE,
    full=_LADDER_SCALE,
)
_register(
    "tanaka-plus",
    "signed local-time identity for the positive part",
    _make_tanaka_runner("plus"),
    fast=_LADDER_SCALE,
    full=_LADDER_SCALE,
)
_register(
    "tanaka-minus",
    "signed local-time identity for the negative part",
    _make_tanaka_runner("minus"),
    fast=_LADDER_SCALE,
    full=_LADDER_SCALE,
)
_register(
    "ito",
    "second-order expansion along restarted paths",
    _run_ito,
    fast=_LADDER_SCALE,
    full=_LADDER_SCALE,
)
_register(
    "doob-maximal",
    "maximal identity for the supremum after the last zero",
    _run_doob,
)
_register(
    "passage-eq2",
    "boundary-crossing law stopped at a growth level, stepped boundary",
    _make_passage_runner(TableBoundary(((0.0, 1.0), (0.5, 2.0))), 1.0, 6.0, 0.008),
)
_register(
    "passage-eq3",
    "boundary-crossing law over the full span, finite total integral",
    _make_passage_runner(TableBoundary(((0.0, 1.0), (1.0, float("inf")))), None, 6.0, 0.004),
)
_register(
    "passage-eq4",
    "probability-case crossing law with a unit boundary",
    _make_passage_runner(ConstantBoundary(1.0), 1.0, 6.0, 0.008),
)
_register(
    "passage-s32",
    "signed crossing law for the restarted reflected driver",
    _run_s32,
)
_register(
    "a-infinity",
    "terminal growth law of the stopped reflected construction",
    _run_ainf,
)
_register(
    "levy-eq5",
    "drawdown confinement law under the signed weight",
    _run_levy5,
)
_register(
    "levy-eq6",
    "drawdown confinement law between supremum levels",
    _run_levy6,
)
_register(
    "products",
    "closure of the zero-set class under products",
    _run_products,
)
_register(
    "scaled-f",
    "closure of the zero-set class under growth rescaling",
    _run_scaled,
)
_register(
    "membership",
    "pathwise membership checks for every construction",
    _run_membership,
    fast=(300, 1e-3),
    full=(300, 1e-3),
)
_register(
    "zero-geometry",
    "geometry of the terminal-density zero set",
    _run_geometry,
    fast=(20000, 1e-3),
    full=(100000, 2.5e-4),
)


def experiment_names() -> list[str]:
    return sorted(EXPERIMENTS)


def paper_anchor(name: str) -> str:
    return EXPERIMENTS[name].anchor


def resolve_settings(cfg: ExperimentConfig, suite: str | None = None) -> RunSettings:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigurationError(f"unknown experiment {cfg.experiment!r}")
    if suite not in (None, "fast", "full"):
        raise ConfigurationError(f"unknown suite {suite!r}")
    spec = EXPERIMENTS[cfg.experiment]
    scale = spec.full if suite == "full" else spec.fast
    n_paths = cfg.n_paths if cfg.n_paths is not None else scale[0]
    step = cfg.step if cfg.step is not None else scale[1]
    if n_paths <= 0:
        raise ConfigurationError("n_paths must be positive")
    if step <= 0.0:
        raise ConfigurationError("step must be positive")
    if cfg.horizon is not None and cfg.horizon <= 0.0:
        raise ConfigurationError("horizon must be positive")
    if cfg.policy not in ("drop", "extend"):
        raise ConfigurationError(f"policy must be drop or extend, not {cfg.policy!r}")
    if cfg.workers < 1:
        raise ConfigurationError("workers must be at least 1")
    return RunSettings(
        name=cfg.experiment,
        n_paths=int(n_paths),
        step=float(step),
        horizon=cfg.horizon,
        master_seed=int(cfg.master_seed),
        checkpoints=cfg.checkpoints,
        policy=cfg.policy,
        workers=int(cfg.workers),
    )


def run_experiment(cfg: ExperimentConfig, suite: str | None = None) -> ExperimentRun:
    st = resolve_settings(cfg, suite)
    spec = EXPERIMENTS[st.name]
    started = perf_counter()
    checks, curves = spec.runner(st)
    seconds = perf_counter() - started
    return ExperimentRun(
        name=st.name,
        paper_anchor=spec.anchor,
        settings=st,
        checks=tuple(checks),
        curves=tuple(curves),
        seconds=seconds,
    )


def run_suite(
    suite: str,
    master_seed: int = DEFAULT_SEED,
    workers: int = 1,
    names: list[str] | None = None,
) -> list[ExperimentRun]:
    if suite not in ("fast", "full"):
        raise ConfigurationError(f"unknown suite {suite!r}")
    chosen = experiment_names() if names is None else names
    runs = []
    for name in chosen:
        cfg = ExperimentConfig(experiment=name, master_seed=master_seed, workers=workers)
        runs.append(run_experiment(cfg, suite))
    return runs
