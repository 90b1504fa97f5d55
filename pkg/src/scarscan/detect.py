"""End-to-end scar detection: sweep all initial states, flag low-ID outliers.

For every blockade-valid initial product state the pipeline evolves the
quench, pools the sampled bitstrings of all timesteps, estimates their
intrinsic dimension, and finally marks the initial states whose dimension
falls below the lower boxplot whisker as scar candidates.
"""

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from scarscan import idest
from scarscan.dynamics import basis_state, build_pxp, diagonalize, evolve
from scarscan.hilbert import enumerate_basis, format_bits
from scarscan.sampling import sample_trajectory


@dataclass(frozen=True, eq=False)
class BoxplotSummary:
    """Quartiles, whiskers and fliers under the 1.5 IQR rule.

    Quartiles interpolate linearly between closest order statistics.
    Whiskers clamp to the most extreme data points within 1.5 IQR of the
    box; fliers carry their labels so outliers stay identifiable.
    """

    q1: float
    median: float
    q3: float
    iqr: float
    whisker_low: float
    whisker_high: float
    fliers: list  # (label, value) outside the whiskers


@dataclass(frozen=True, eq=False)
class DetectionReport:
    config: dict
    dimensions: list   # per-state dicts, ordered by basis index
    boxplot: BoxplotSummary
    scar_candidates: list
    weak_candidates: list
    failures: list     # (label, message)
    elapsed_seconds: float


def boxplot_summary(labelled_values):
    """Boxplot statistics of (label, value) pairs."""
    labelled_values = list(labelled_values)
    if len(labelled_values) < 4:
        raise ValueError(f"boxplot needs at least 4 values, got {len(labelled_values)}")
    values = np.array([v for _, v in labelled_values], dtype=float)
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    low_fence = q1 - 1.5 * iqr
    high_fence = q3 + 1.5 * iqr
    inside = values[(values >= low_fence) & (values <= high_fence)]
    whisker_low = float(inside.min())
    whisker_high = float(inside.max())
    fliers = [(label, float(v)) for label, v in labelled_values if v < low_fence or v > high_fence]
    return BoxplotSummary(
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        iqr=float(iqr),
        whisker_low=whisker_low,
        whisker_high=whisker_high,
        fliers=fliers,
    )


def flag_scars(summary):
    """Labels of low fliers only; high outliers are never scar candidates."""
    return [label for label, value in summary.fliers if value < summary.whisker_low]


def _scan_state(eig, encoding, times, config):
    initial = basis_state(eig.basis, int(encoding))
    trajectory = evolve(eig, initial, times)
    samples = sample_trajectory(
        trajectory, shots=config.shots, error_rate=config.error_rate, seed=config.seed
    )
    return idest.scan_scales(
        samples.bit_matrix(),
        radii=config.scale_range(),
        plateau_window=config.plateau_window,
        plateau_tol=config.plateau_tol,
        n_bootstrap=config.bootstrap,
        random_state=np.random.SeedSequence(entropy=config.seed, spawn_key=(int(encoding), 1 << 20)),
    )


def run_pipeline(config, initial_states=None):
    """Run the full detection sweep and summarize it.

    ``initial_states`` restricts the sweep (encodings or bitstring texts);
    by default every basis state is quenched. Per-state failures (for
    example fully degenerate scans at tiny sample sizes) are recorded in the
    report instead of aborting the sweep. Deterministic given the seed.
    """
    started = time.perf_counter()
    basis = enumerate_basis(config.length, periodic=config.periodic)
    eig = diagonalize(build_pxp(basis, rabi=config.rabi))
    times = config.times()
    if initial_states is None:
        encodings = [int(s) for s in basis.states]
    else:
        encodings = [basis.states[basis.index_of(s)] for s in initial_states]

    def work(encoding):
        label = format_bits(encoding, config.length)
        try:
            scan = _scan_state(eig, encoding, times, config)
        except Exception as exc:  # a 123-state sweep must not die on one state
            return {"initial_state": label, "failed": True, "message": f"{type(exc).__name__}: {exc}"}
        entry = {
            "initial_state": label,
            "failed": False,
            "d_hat": scan.dimension,
            "plateaued": scan.plateaued,
        }
        cis = [e.ci for e in scan.estimates if e.ci is not None]
        if cis:
            entry["ci_low"] = min(c[0] for c in cis)
            entry["ci_high"] = max(c[1] for c in cis)
        return entry

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(work, encodings))
    else:
        rows = [work(e) for e in encodings]

    usable = [(r["initial_state"], r["d_hat"]) for r in rows if not r["failed"]]
    failures = [(r["initial_state"], r["message"]) for r in rows if r["failed"]]
    boxplot = boxplot_summary(usable) if len(usable) >= 4 else None
    candidates = flag_scars(boxplot) if boxplot is not None else []
    weak = []
    if usable:
        # bottom decile, minus the flagged scars: states worth inspecting that
        # sit at the bottom of the band without being fliers
        values = np.array([v for _, v in usable])
        cut = np.percentile(values, 10.0)
        weak = [lab for lab, v in usable if v <= cut and lab not in candidates]
    return DetectionReport(
        config=config.to_dict(),
        dimensions=rows,
        boxplot=boxplot,
        scar_candidates=candidates,
        weak_candidates=weak,
        failures=failures,
        elapsed_seconds=time.perf_counter() - started,
    )


def report_to_dict(report):
    box = None
    if report.boxplot is not None:
        box = {
            "q1": report.boxplot.q1,
            "median": report.boxplot.median,
            "q3": report.boxplot.q3,
            "iqr": report.boxplot.iqr,
            "whisker_low": report.boxplot.whisker_low,
            "whisker_high": report.boxplot.whisker_high,
            "fliers": [[label, value] for label, value in report.boxplot.fliers],
        }
    return {
        "config": report.config,
        "dimensions": report.dimensions,
        "boxplot": box,
        "scar_candidates": report.scar_candidates,
        "weak_candidates": report.weak_candidates,
        "failures": [[label, message] for label, message in report.failures],
        "runtime": {"elapsed_seconds": report.elapsed_seconds},
    }


def write_report_json(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(report, path, header_lines=()):
    """Per-state CSV of (initial_state, d_hat, flagged) plus failure rows."""
    flagged = set(report.scar_candidates)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["initial_state", "d_hat", "flagged", "failed"])
        for row in report.dimensions:
            if row["failed"]:
                writer.writerow([row["initial_state"], "", 0, 1])
            else:
                writer.writerow(
                    [row["initial_state"], repr(float(row["d_hat"])), int(row["initial_state"] in flagged), 0]
                )


def write_boxplot_csv(report, path, header_lines=()):
    """Plot-ready boxplot data for external rendering tools."""
    box = report.boxplot
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["statistic", "value", "label"])
        if box is None:
            return
        for name in ("q1", "median", "q3", "whisker_low", "whisker_high"):
            writer.writerow([name, repr(float(getattr(box, name))), ""])
        for label, value in box.fliers:
            writer.writerow(["flier", repr(float(value)), label])
