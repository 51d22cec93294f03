"""Step-halving of the signed local-time identity residual.

One driver path is sampled on the finest grid and subsampled onto two
coarser ones, so all three rungs see the same randomness.  The sup
residual of the absolute-value identity shrinks as the step halves; a
constant path gives a residual of exactly zero.
"""

import numpy as np

from sigma_lab import (
    Path,
    SeedSpec,
    make_grid,
    sample_bm,
    tanaka_residual,
    zero_set_from_level_series,
)

SEED = SeedSpec(master_seed=20260822, path_index=3)


def main() -> None:
    fine = make_grid(1.0, 1e-3)
    w = sample_bm(fine, 0.0, SEED)
    print("sup |residual| of the abs identity, same path, three steps:")
    for factor in (4, 2, 1):
        grid = make_grid(1.0, 1e-3 * factor)
        values = w.values[::factor]
        zs = zero_set_from_level_series(np.ones(grid.n_steps + 1), grid)
        res = tanaka_residual(Path(grid=grid, values=values), 0.0, zs, form="abs")
        sup = float(np.max(np.abs(res.residual.values)))
        print(f"  step {grid.step:.0e}: {sup:.5f}")

    flat_grid = make_grid(1.0, 2e-3)
    flat = Path(grid=flat_grid, values=np.full(flat_grid.n_steps + 1, 0.5))
    zs = zero_set_from_level_series(np.ones(flat_grid.n_steps + 1), flat_grid)
    res = tanaka_residual(flat, 0.0, zs, form="abs")
    sup = float(np.max(np.abs(res.residual.values)))
    print(f"constant path residual: {sup} (exactly zero)")


if __name__ == "__main__":
    main()
