"""Run a registered experiment from Python and write its report files.

Everything the `sigma-lab` command does is reachable as a library:
resolve a config against the registry, run it, and hand the result to
the report writer.  The written bytes depend only on the resolved
settings and the seed, never on timing or worker count.
"""

import tempfile

from sigma_lab import (
    ExperimentConfig,
    config_digest,
    run_experiment,
    report_rows,
    write_report,
)


def main() -> None:
    cfg = ExperimentConfig(experiment="zero-geometry", n_paths=4000, step=2e-3, master_seed=5)
    run = run_experiment(cfg, suite="fast")
    print(f"{run.name}: {'all checks pass' if run.passed else 'failures'}")
    print(f"config digest {config_digest(run.settings)} (independent of worker count)")
    for row in report_rows(run):
        print(f"  {row.check:<28} kind={row.kind:<5} passed={row.passed}")

    with tempfile.TemporaryDirectory() as tmp:
        out = write_report([run], tmp)
        names = sorted(p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file())
        print("\nfiles written:")
        for name in names:
            print(f"  {name}")
        first = (out / "report.csv").read_text(encoding="utf-8").splitlines()[0]
        print(f"\ncsv header: {first}")


if __name__ == "__main__":
    main()
