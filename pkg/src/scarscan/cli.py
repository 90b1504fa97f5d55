"""Command-line interface: one thin subcommand per pipeline stage.

Every option mirrors a config-file key (flags override the file), every
output artifact embeds the effective configuration including the seed, and
exit codes are 0 (success), 1 (usage error), 2 (runtime failure).
"""

import json
import sys
from pathlib import Path

import click
import numpy as np

from scarscan import dynamics, idest, metric, sampling
from scarscan.config import RunConfig, config_header_lines, read_config_file
from scarscan.detect import run_pipeline, write_boxplot_csv, write_report_csv, write_report_json
from scarscan.hilbert import enumerate_basis, violating_pairs
from scarscan.mds import StressMDS, Embedding, write_embedding
from scarscan.sampling import read_shots_csv


def _build_config(config_path, **overrides):
    values = read_config_file(config_path) if config_path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig.from_dict(values)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def _echo_seed(config):
    click.echo(f"seed = {config.seed}", err=True)


_shared = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="Key-value config file; flags override its entries."),
    click.option("--length", "-L", type=int, default=None, help="Chain length."),
    click.option("--pbc/--obc", "periodic", default=None, help="Boundary conditions (default periodic)."),
    click.option("--rabi", type=float, default=None, help="Rabi frequency (energy unit)."),
    click.option("--t-start", type=float, default=None, help="Start of the time grid (exclusive)."),
    click.option("--t-end", type=float, default=None, help="End of the time grid (inclusive)."),
    click.option("--timesteps", "-T", type=int, default=None, help="Number of measurement times."),
    click.option("--shots", "-S", type=int, default=None, help="Shots per timestep."),
    click.option("--error-rate", type=float, default=None, help="Per-site readout flip probability."),
    click.option("--scale-min", type=int, default=None, help="Smallest outer radius scanned."),
    click.option("--scale-max", type=int, default=None, help="Largest outer radius scanned (0 = chain length)."),
    click.option("--plateau-window", type=int, default=None, help="Minimum plateau length (scales)."),
    click.option("--plateau-tol", type=float, default=None, help="Maximum spread within a plateau."),
    click.option("--bootstrap", type=int, default=None, help="Bootstrap resamples for confidence bands (0 = off)."),
    click.option("--seed", type=int, default=None, help="RNG seed; omitted -> random, recorded in outputs."),
    click.option("--jobs", type=int, default=None, help="Worker threads for per-state sweeps."),
]


def shared_options(fn):
    for option in reversed(_shared):
        fn = option(fn)
    return fn


def _config_from(kwargs):
    periodic = kwargs.pop("periodic")
    if periodic is not None:
        kwargs["boundary"] = "pbc" if periodic else "obc"
    return _build_config(kwargs.pop("config_path"), **kwargs)


def _initial_state(basis, text):
    try:
        return dynamics.basis_state(basis, text)
    except (KeyError, ValueError) as exc:
        pairs = violating_pairs(text, periodic=basis.periodic) if set(text) <= {"0", "1"} else []
        if pairs:
            sites = ", ".join(f"({i}, {j})" for i, j in pairs)
            raise click.ClickException(
                f"initial state {text} violates the blockade at adjacent site pairs {sites}"
            ) from exc
        raise click.ClickException(f"invalid initial state: {exc}") from exc


@click.group()
def cli():
    """Simulate PXP quenches and detect scar initial states."""


@cli.command()
@shared_options
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Basis text file, one bitstring per line (most-significant site "
                   "first); written to stdout when omitted.")
def basis(output, **kwargs):
    """Enumerate the blockade-constrained basis."""
    config = _config_from(kwargs)
    b = enumerate_basis(config.length, periodic=config.periodic)
    if output is None:
        for s in b.strings():
            click.echo(s)
    else:
        b.write_text(output)
        click.echo(f"wrote {b.size} states to {output}")


@cli.command()
@shared_options
@click.option("--initial", required=True, help="Initial product state, e.g. 0101010101.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True,
              help="Observable CSV: (t, domain_wall_density, fidelity) per timestep.")
@click.option("--dump-states", type=click.Path(dir_okay=False), default=None,
              help="Optional binary snapshot dump (little-endian float64 re/im pairs).")
def evolve(initial, output, dump_states, **kwargs):
    """Quench from a product state and record observables."""
    config = _config_from(kwargs)
    b = enumerate_basis(config.length, periodic=config.periodic)
    state = _initial_state(b, initial)
    eig = dynamics.diagonalize(dynamics.build_pxp(b, rabi=config.rabi))
    trajectory = dynamics.evolve(eig, state, config.times())
    first = state
    with open(output, "w", encoding="ascii") as fh:
        for line in config_header_lines(config):
            fh.write(f"# {line}\n")
        fh.write("t,domain_wall_density,fidelity\n")
        for snap in trajectory.states:
            fh.write(
                f"{snap.time!r},{dynamics.domain_wall_density(snap)!r},"
                f"{dynamics.fidelity(first, snap)!r}\n"
            )
    if dump_states:
        dynamics.write_state_dump(trajectory, dump_states)
    click.echo(f"wrote {len(trajectory.states)} timesteps to {output}")


@cli.command()
@shared_options
@click.option("--initial", required=True, help="Initial product state, e.g. 0101010101.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True,
              help="Shot CSV: (initial_state, t_index, t, bitstring).")
def sample(initial, output, **kwargs):
    """Sample projective measurements from an evolved quench."""
    config = _config_from(kwargs)
    _echo_seed(config)
    b = enumerate_basis(config.length, periodic=config.periodic)
    state = _initial_state(b, initial)
    eig = dynamics.diagonalize(dynamics.build_pxp(b, rabi=config.rabi))
    trajectory = dynamics.evolve(eig, state, config.times())
    shots = sampling.sample_trajectory(
        trajectory, shots=config.shots, error_rate=config.error_rate, seed=config.seed
    )
    sampling.write_shots_csv(shots, output, header_lines=config_header_lines(config))
    click.echo(f"wrote {config.shots * config.timesteps} records to {output}")


@cli.command("pem-matrix")
@shared_options
@click.option("--initial", required=True, help="Initial product state.")
@click.option("--kind", type=click.Choice(["pem", "hs"]), default="pem", show_default=True,
              help="Distance between snapshots: earth mover's or Hilbert-Schmidt.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True,
              help="Distance matrix CSV (square, labelled header row).")
@click.option("--binary-output", type=click.Path(dir_okay=False), default=None,
              help="Optional compact binary copy of the matrix.")
def pem_matrix(initial, kind, output, binary_output, **kwargs):
    """Pairwise snapshot distances for one quench trajectory."""
    config = _config_from(kwargs)
    b = enumerate_basis(config.length, periodic=config.periodic)
    state = _initial_state(b, initial)
    eig = dynamics.diagonalize(dynamics.build_pxp(b, rabi=config.rabi))
    trajectory = dynamics.evolve(eig, state, config.times())
    matrix = metric.trajectory_distance_matrix(trajectory, kind=kind, n_jobs=config.jobs)
    matrix.to_csv(output, header_lines=config_header_lines(config))
    if binary_output:
        matrix.to_binary(binary_output)
    click.echo(f"wrote {len(matrix.labels)}x{len(matrix.labels)} {kind} matrix to {output}")


@cli.command()
@shared_options
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Distance matrix CSV produced by pem-matrix.")
@click.option("--dimensions", type=int, default=2, show_default=True, help="Embedding dimension.")
@click.option("--init", type=click.Choice(["classical", "random"]), default="classical",
              show_default=True, help="Deterministic spectral start or seeded random restarts.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True,
              help="Embedding CSV (t, x1, x2, ...).")
@click.option("--summary", type=click.Path(dir_okay=False), default=None,
              help="Optional JSON summary (stress, iterations, spread).")
def mds(matrix_path, dimensions, init, output, summary, **kwargs):
    """Embed a distance matrix by stress majorization."""
    config = _config_from(kwargs)
    matrix = metric.DistanceMatrix.from_csv(matrix_path)
    model = StressMDS(n_components=dimensions, init=init, random_state=config.seed)
    model.fit(matrix.values)
    embedding = Embedding(
        coords=model.embedding_,
        stress=model.stress_,
        iterations=model.n_iter_,
        converged=model.converged_,
        stress_history=model.stress_history_,
    )
    write_embedding(embedding, matrix.labels, output, summary, header_lines=config_header_lines(config))
    click.echo(f"stress {model.stress_:.6g} after {model.n_iter_} iterations -> {output}")


@cli.command("id-scan")
@shared_options
@click.option("--shots-file", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Shot CSV produced by the sample subcommand.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True,
              help="Scan CSV: (t1, t2, d_hat, degenerate, ci_low, ci_high).")
@click.option("--summary", type=click.Path(dir_okay=False), default=None,
              help="Optional JSON summary with the plateau decision.")
def id_scan(shots_file, output, summary, **kwargs):
    """Estimate the intrinsic dimension of a shot file across scales."""
    config = _config_from(kwargs)
    initial, length, _, records = read_shots_csv(shots_file)
    pooled = np.concatenate(records)
    shifts = np.arange(length, dtype=np.int64)
    bits = ((pooled[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    scan = idest.scan_scales(
        bits,
        radii=list(range(config.scale_min, min(config.scale_max, length) + 1)),
        plateau_window=config.plateau_window,
        plateau_tol=config.plateau_tol,
        n_bootstrap=config.bootstrap,
        random_state=config.seed,
    )
    idest.write_scan_csv(scan, output, header_lines=config_header_lines(config))
    if summary:
        idest.write_scan_json(scan, summary, extra={"initial_state": format(initial, f"0{length}b")})
    click.echo(f"d_hat = {scan.dimension:.4f} (plateaued: {scan.plateaued}) -> {output}")


@cli.command()
@shared_options
@click.option("--output-dir", "-o", type=click.Path(file_okay=False), required=True,
              help="Directory for report.json, report.csv and boxplot.csv.")
def detect(output_dir, **kwargs):
    """Sweep all initial states and flag scar candidates."""
    config = _config_from(kwargs)
    _echo_seed(config)
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise click.ClickException(f"output directory is not writable: {exc}") from exc
    report = run_pipeline(config)
    header = config_header_lines(config)
    write_report_json(report, out / "report.json")
    write_report_csv(report, out / "report.csv", header_lines=header)
    write_boxplot_csv(report, out / "boxplot.csv", header_lines=header)
    click.echo(f"scar candidates: {report.scar_candidates}")
    if report.failures:
        click.echo(f"{len(report.failures)} state(s) failed; see report.json", err=True)
    click.echo(json.dumps({"output_dir": str(out), "n_states": len(report.dimensions)}))


def main(argv=None):
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 2
    except Exception as exc:  # runtime failure contract: message to stderr, exit 2
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
