"""PXP Hamiltonian, exact diagonalization, quench evolution and observables.

The Hamiltonian flips a site only when both of its neighbours are in the
ground state; on the constrained basis this reduces to coupling every pair
of valid configurations that differ at exactly one site. Time is measured
in units of the inverse Rabi frequency.
"""

import csv
from dataclasses import dataclass

import numpy as np

from scarscan.hilbert import ConstrainedBasis, _coerce, format_bits


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    basis: ConstrainedBasis
    matrix: np.ndarray
    rabi: float = 1.0


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    basis: ConstrainedBasis
    energies: np.ndarray  # ascending
    vectors: np.ndarray   # orthonormal columns


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    basis: ConstrainedBasis
    time: float = 0.0

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self):
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()


@dataclass(frozen=True, eq=False)
class QuenchTrajectory:
    initial: int
    basis: ConstrainedBasis
    times: np.ndarray
    states: list

    def amplitudes(self):
        """(basis size, n_times) complex array of snapshot amplitudes."""
        return np.column_stack([s.amplitudes for s in self.states])


def build_pxp(basis, rabi=1.0):
    """Dense PXP Hamiltonian on the constrained basis.

    Entry (i, j) equals the Rabi frequency iff configurations i and j differ
    at exactly one site; validity of both configurations already implies the
    flipped site has both neighbours in the ground state.
    """
    states = basis.states
    dim = basis.size
    matrix = np.zeros((dim, dim))
    for site in range(basis.length):
        flipped = states ^ (1 << site)
        pos = np.searchsorted(states, flipped)
        pos_clipped = np.minimum(pos, dim - 1)
        hit = states[pos_clipped] == flipped
        rows = np.nonzero(hit)[0]
        matrix[rows, pos_clipped[hit]] = rabi
    return Hamiltonian(basis=basis, matrix=matrix, rabi=float(rabi))


def diagonalize(hamiltonian, residual_tol=1e-10):
    """Full eigendecomposition with residual and orthogonality checks."""
    h = hamiltonian.matrix
    if np.abs(h - h.T).max(initial=0.0) > 1e-12:
        raise ValueError("Hamiltonian matrix is not symmetric")
    energies, vectors = np.linalg.eigh(h)
    scale = max(np.abs(energies).max(initial=0.0), 1.0)
    residual = np.abs(h @ vectors - vectors * energies[None, :]).max()
    if residual > residual_tol * scale:
        raise RuntimeError(f"eigendecomposition residual {residual:.3e} exceeds tolerance")
    ortho = np.abs(vectors.T @ vectors - np.eye(len(energies))).max()
    if ortho > residual_tol:
        raise RuntimeError(f"eigenvectors not orthonormal (deviation {ortho:.3e})")
    return EigenDecomposition(basis=hamiltonian.basis, energies=energies, vectors=vectors)


def basis_state(basis, bits, time=0.0):
    """Product (computational-basis) state as a StateVector."""
    amplitudes = np.zeros(basis.size, dtype=complex)
    amplitudes[basis.index_of(bits)] = 1.0
    return StateVector(amplitudes=amplitudes, basis=basis, time=time)


def evolve(eig, initial, times):
    """Evolve an initial state to each requested time via the eigenbasis.

    Snapshot k is ``sum_i c_i exp(-i E_i t_k) phi_i`` with
    ``c_i = <phi_i|initial>``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or (len(times) > 1 and np.any(np.diff(times) <= 0)):
        raise ValueError("times must be a strictly increasing 1-D sequence")
    amps = np.asarray(initial.amplitudes, dtype=complex)
    if abs(np.linalg.norm(amps) - 1.0) > 1e-9:
        raise ValueError("initial state is not normalized")
    coeffs = eig.vectors.T @ amps
    phases = np.exp(-1j * np.outer(eig.energies, times))
    snapshots = eig.vectors @ (phases * coeffs[:, None])
    states = [
        StateVector(amplitudes=np.ascontiguousarray(snapshots[:, k]), basis=eig.basis, time=float(t))
        for k, t in enumerate(times)
    ]
    nz = np.nonzero(np.abs(amps) == 1.0)[0]
    initial_enc = int(eig.basis.states[nz[0]]) if len(nz) == 1 else -1
    return QuenchTrajectory(initial=initial_enc, basis=eig.basis, times=times, states=states)


def _wall_count(value, length, periodic):
    """Number of domain walls in one configuration.

    A wall is a pair of neighbouring sites in the same state; under open
    boundaries a ground-state atom at either edge also counts as a wall.
    """
    count = 0
    pairs = length if periodic else length - 1
    for i in range(pairs):
        a = (value >> i) & 1
        b = (value >> ((i + 1) % length)) & 1
        count += a == b
    if not periodic:
        count += 1 - (value & 1)
        count += 1 - ((value >> (length - 1)) & 1)
    return count


def domain_wall_density(state, length=None, periodic=True):
    """Density of domain walls, averaged over the chain.

    Accepts a bitstring (text or integer plus ``length``) or a StateVector,
    in which case the Born-probability-weighted average over basis
    configurations is returned. Under periodic boundaries the density lies
    in [0, 1]; the open-boundary edge rule can push it up to (L+1)/L.
    """
    if isinstance(state, StateVector):
        basis = state.basis
        counts = np.array(
            [_wall_count(int(s), basis.length, basis.periodic) for s in basis.states],
            dtype=float,
        )
        return float(state.probabilities() @ counts) / basis.length
    value, length = _coerce(state, length)
    return _wall_count(value, length, periodic) / length


def fidelity(a, b):
    """Squared overlap |<a|b>|^2 of two states on the same basis."""
    if a.basis is not b.basis and (
        a.basis.length != b.basis.length or a.basis.periodic != b.basis.periodic
    ):
        raise ValueError("states live on different bases")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def expansion_spectrum(eig, initial):
    """Energies and eigenbasis weights |<phi_i|initial>|^2 of a state.

    The weights sum to 1 for any normalized input; concentration on few
    eigenstates (a small participation ratio) is the hallmark of the scar
    initial states.
    """
    amps = np.asarray(initial.amplitudes, dtype=complex)
    if abs(np.linalg.norm(amps) - 1.0) > 1e-9:
        raise ValueError("initial state is not normalized")
    coeffs = eig.vectors.T @ amps
    return eig.energies.copy(), np.abs(coeffs) ** 2


def write_observables_csv(trajectory, path, observables=None):
    """Long-format CSV of per-snapshot observables.

    Columns are (initial_state, t, observable, value). By default the domain
    wall density and the fidelity to the initial snapshot are written.
    """
    basis = trajectory.basis
    label = format_bits(trajectory.initial, basis.length) if trajectory.initial >= 0 else "superposition"
    if observables is None:
        first = trajectory.states[0]
        observables = {
            "domain_wall_density": domain_wall_density,
            "fidelity_to_initial": lambda s: fidelity(first, s),
        }
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["initial_state", "t", "observable", "value"])
        for state in trajectory.states:
            for name, fn in observables.items():
                writer.writerow([label, repr(float(state.time)), name, repr(float(fn(state)))])


def write_state_dump(trajectory, path):
    """Binary snapshot dump: little-endian float64 (re, im) pairs.

    Layout: one block per snapshot in time order; within a block, rows
    follow the basis index, each row being the amplitude's real part then
    imaginary part.
    """
    data = trajectory.amplitudes().T  # (n_times, dim)
    interleaved = np.empty((data.shape[0], data.shape[1], 2))
    interleaved[..., 0] = data.real
    interleaved[..., 1] = data.imag
    interleaved.astype("<f8").tofile(path)


def read_state_dump(path, basis, times):
    """Inverse of :func:`write_state_dump`."""
    raw = np.fromfile(path, dtype="<f8").reshape(len(times), basis.size, 2)
    states = [
        StateVector(amplitudes=raw[k, :, 0] + 1j * raw[k, :, 1], basis=basis, time=float(t))
        for k, t in enumerate(times)
    ]
    return QuenchTrajectory(initial=-1, basis=basis, times=np.asarray(times, float), states=states)
