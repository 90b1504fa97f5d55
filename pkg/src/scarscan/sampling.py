"""Projective measurements of evolved states and the readout-error channel.

Shots are drawn from the Born distribution over the constrained basis by
inverse-CDF lookup on cached cumulative weights. Readout errors flip each
site independently and symmetrically, so corrupted records may leave the
blockade-valid set. RNG streams are split per (initial state, timestep) so
results do not depend on evaluation order.
"""

import csv
from dataclasses import dataclass

import numpy as np

from scarscan._validation import check_error_rate
from scarscan.hilbert import _coerce, format_bits, parse_bits


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Per-timestep multisets of measured bitstrings for one quench."""

    initial: int
    length: int
    times: np.ndarray
    shots: int
    error_rate: float
    seed: int
    records: list  # one int64 array of encodings per timestep

    def pooled(self):
        """All records of all timesteps as a single encoding array."""
        return np.concatenate(self.records) if self.records else np.empty(0, dtype=np.int64)

    def bit_matrix(self):
        """Pooled records as an (n_records, length) 0/1 matrix."""
        shifts = np.arange(self.length, dtype=np.int64)
        return ((self.pooled()[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def sample_bitstrings(state, shots, rng):
    """Draw i.i.d. computational-basis shots from a normalized state.

    Returns integer encodings. Uses inverse-CDF search on the cumulative
    Born weights, so a shot costs O(log D).
    """
    shots = int(shots)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = state.probabilities()
    cumulative = np.cumsum(probs)
    cumulative[-1] = 1.0
    draws = rng.random(shots)
    idx = np.searchsorted(cumulative, draws, side="right")
    return state.basis.states[idx]


def apply_readout_error(bits, error_rate, rng, length=None):
    """Flip each site independently with the given probability.

    Accepts a single bitstring (text or integer plus ``length``) or an
    integer array; returns the same kind. The output may violate the
    blockade constraint.
    """
    error_rate = check_error_rate(error_rate)
    if isinstance(bits, np.ndarray):
        if length is None:
            raise ValueError("length is required for encoded arrays")
        if error_rate == 0.0:
            return bits.copy()
        flips = rng.random((bits.size, length)) < error_rate
        masks = (flips.astype(np.int64) << np.arange(length, dtype=np.int64)[None, :]).sum(axis=1)
        return bits ^ masks
    as_text = isinstance(bits, str)
    value, length = _coerce(bits, length)
    if error_rate > 0.0:
        flips = rng.random(length) < error_rate
        mask = int((flips.astype(np.int64) << np.arange(length, dtype=np.int64)).sum())
        value ^= mask
    return format_bits(value, length) if as_text else value


def _stream(seed, initial, timestep):
    key = (int(initial) & 0xFFFFFFFF, int(timestep))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def sample_trajectory(trajectory, shots, error_rate=0.0, seed=0):
    """Measure every snapshot of a quench trajectory.

    Each timestep gets exactly ``shots`` records, drawn from its own RNG
    stream keyed by (initial state, timestep index) and then passed through
    the readout channel.
    """
    error_rate = check_error_rate(error_rate)
    length = trajectory.basis.length
    records = []
    for k, state in enumerate(trajectory.states):
        rng = _stream(seed, trajectory.initial, k)
        vals = sample_bitstrings(state, shots, rng)
        if error_rate > 0.0:
            vals = apply_readout_error(vals, error_rate, rng, length=length)
        records.append(vals)
    return SampleSet(
        initial=trajectory.initial,
        length=length,
        times=np.asarray(trajectory.times, dtype=float),
        shots=int(shots),
        error_rate=error_rate,
        seed=int(seed),
        records=records,
    )


def write_shots_csv(samples, path, header_lines=()):
    """Shot interchange CSV with columns (initial_state, t_index, t, bitstring)."""
    label = format_bits(samples.initial, samples.length)
    with open(path, "w", newline="", encoding="ascii") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["initial_state", "t_index", "t", "bitstring"])
        for k, vals in enumerate(samples.records):
            t = repr(float(samples.times[k]))
            for v in vals:
                writer.writerow([label, k, t, format_bits(int(v), samples.length)])


def read_shots_csv(path):
    """Read a shot CSV back into (initial encoding, length, times, records)."""
    times = {}
    records = {}
    initial = None
    length = None
    with open(path, newline="", encoding="ascii") as fh:
        rows = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(rows)
        if header[:4] != ["initial_state", "t_index", "t", "bitstring"]:
            raise ValueError(f"unrecognized shot file header: {header}")
        for label, t_index, t, bitstring in rows:
            value, length = parse_bits(bitstring)
            initial, _ = parse_bits(label)
            k = int(t_index)
            times[k] = float(t)
            records.setdefault(k, []).append(value)
    if initial is None:
        raise ValueError(f"no shot records in {path}")
    keys = sorted(records)
    return (
        initial,
        length,
        np.array([times[k] for k in keys]),
        [np.array(records[k], dtype=np.int64) for k in keys],
    )
