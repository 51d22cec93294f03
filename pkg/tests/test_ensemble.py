"""Vectorized engine against the per-path reference implementations."""

import numpy as np
import pytest

from sigma_lab import (
    ConfigurationError,
    ErfSign,
    SeedSpec,
    StoppedBM,
    density_driver_path,
    density_path,
    make_grid,
    q_bracket,
    sample_bm,
    zero_set,
)
from sigma_lab.ensemble import (
    chunk_ranges,
    cumsum_paths,
    density_matrix,
    driver_matrix,
    first_reach_index,
    gathered_prefix_matrix,
    increments_matrix,
    run_chunked,
    subsample_paths,
    zero_geometry,
)

SEED = 20260822


def test_chunk_ranges_cover_exactly():
    assert chunk_ranges(10, 4) == [(0, 4), (4, 4), (8, 2)]
    assert chunk_ranges(4, 4) == [(0, 4)]
    with pytest.raises(ConfigurationError):
        chunk_ranges(0)


def test_rows_match_per_path_sampling_bitwise():
    grid = make_grid(horizon=1.0, step=0.01)
    rows = increments_matrix(SEED, start_index=5, count=4, n_steps=grid.n_steps, step=grid.step)
    values = cumsum_paths(rows, start=0.25)
    for i in range(4):
        ref = sample_bm(grid, 0.25, SeedSpec(SEED, 5 + i))
        assert np.array_equal(values[i], ref.values)


def test_density_matrix_matches_per_path_models():
    grid = make_grid(horizon=2.0, step=0.01)
    for model in (StoppedBM(start=1.0, stop_time=1.0), ErfSign(offset=1.0, terminal_time=2.0)):
        rows = driver_matrix(model, SEED, 0, 6, grid)
        D = density_matrix(model, rows, grid)
        for i in range(6):
            seed = SeedSpec(SEED, i)
            ref_driver = density_driver_path(model, seed, grid)
            ref_density = density_path(model, seed, grid)
            assert np.array_equal(rows[i], ref_driver.values)
            assert np.array_equal(D[i], ref_density.values)


def test_zero_geometry_matches_per_path_detection():
    grid = make_grid(horizon=2.0, step=0.01)
    model = StoppedBM(start=0.5, stop_time=2.0)
    rows = driver_matrix(model, SEED + 1, 0, 40, grid)
    D = density_matrix(model, rows, grid)
    geo = zero_geometry(D, last_index=grid.index_of(2.0))
    for i in range(40):
        ref = zero_set(density_path(model, SeedSpec(SEED + 1, i), grid), model)
        assert np.array_equal(np.nonzero(geo.in_h[i])[0], ref.h_indices)
        assert np.array_equal(geo.gamma_idx[i], ref.gamma_index)
        assert geo.gbar_idx[i] == ref.gbar_index


def test_gathered_prefix_matches_q_bracket():
    grid = make_grid(horizon=2.0, step=0.01)
    model = StoppedBM(start=0.3, stop_time=2.0)
    rows = driver_matrix(model, SEED + 2, 0, 20, grid)
    D = density_matrix(model, rows, grid)
    geo = zero_geometry(D, last_index=grid.index_of(2.0))
    W = cumsum_paths(increments_matrix(SEED + 2, 0, 20, grid.n_steps, grid.step))
    got = gathered_prefix_matrix(np.diff(W, axis=1) ** 2, geo.gamma_idx)
    for i in range(20):
        ref = q_bracket(
            sample_bm(grid, 0.0, SeedSpec(SEED + 2, i)),
            zero_set(density_path(model, SeedSpec(SEED + 2, i), grid), model),
        )
        assert np.array_equal(got[i], ref.values)


def test_run_chunked_is_chunking_invariant():
    def fn(start, count):
        idx = np.arange(start, start + count, dtype=np.float64)
        return {"idx": idx, "sq": idx**2}

    a = run_chunked(1000, fn, chunk_size=256)
    b = run_chunked(1000, fn, chunk_size=77)
    assert np.array_equal(a["idx"], b["idx"])
    assert np.array_equal(a["sq"], b["sq"])
    assert a["idx"].shape == (1000,)


def test_subsample_is_exact_grid_coarsening():
    grid = make_grid(horizon=1.0, step=0.01)
    W = cumsum_paths(increments_matrix(SEED, 0, 3, grid.n_steps, grid.step))
    coarse = subsample_paths(W, 4)
    assert coarse.shape == (3, 26)
    assert np.array_equal(coarse[:, 1], W[:, 4])
    with pytest.raises(ConfigurationError):
        subsample_paths(W, 3)


def test_first_reach_index():
    values = np.array([[0.0, 0.5, 1.2, 0.3], [0.0, 0.1, 0.2, 0.3]])
    idx = first_reach_index(values, 1.0)
    assert list(idx) == [2, -1]
