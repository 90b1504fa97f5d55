"""Quench simulation and unsupervised scar detection for the PXP chain.

The package covers the full pipeline: enumerating the blockade-constrained
Hilbert space, building and diagonalizing the PXP Hamiltonian, evolving
quenches, sampling projective measurements (optionally through a readout-error
channel), computing earth mover's / Hilbert-Schmidt distance matrices,
embedding them with stress-majorization MDS, and estimating the intrinsic
dimension of shot data on the Hamming lattice to flag scar initial states as
low outliers.
"""

from scarscan.hilbert import ConstrainedBasis, enumerate_basis, hamming, is_valid
from scarscan.dynamics import (
    EigenDecomposition,
    Hamiltonian,
    QuenchTrajectory,
    StateVector,
    basis_state,
    build_pxp,
    diagonalize,
    domain_wall_density,
    evolve,
    expansion_spectrum,
    fidelity,
)
from scarscan.sampling import SampleSet, apply_readout_error, sample_bitstrings, sample_trajectory
from scarscan.metric import (
    DiscreteDistribution,
    DistanceMatrix,
    distance_to_initial_series,
    hs_distance,
    pem_distance,
    trajectory_distance_matrix,
)
from scarscan.mds import (
    Embedding,
    StressMDS,
    classical_init,
    embedding_spread,
    procrustes_align,
    smacof,
    stress_value,
)
from scarscan.idest import (
    IdEstimate,
    LatticeIdEstimator,
    NeighborCounts,
    ScaleScan,
    binomial_log_likelihood,
    lattice_volume,
    neighbor_counts,
    scan_scales,
    solve_id,
)
from scarscan.detect import (
    BoxplotSummary,
    DetectionReport,
    boxplot_summary,
    flag_scars,
    run_pipeline,
)
from scarscan.config import RunConfig

__version__ = "0.1.0"

__all__ = [
    "ConstrainedBasis",
    "enumerate_basis",
    "hamming",
    "is_valid",
    "Hamiltonian",
    "EigenDecomposition",
    "StateVector",
    "QuenchTrajectory",
    "build_pxp",
    "diagonalize",
    "basis_state",
    "evolve",
    "domain_wall_density",
    "fidelity",
    "expansion_spectrum",
    "SampleSet",
    "sample_bitstrings",
    "apply_readout_error",
    "sample_trajectory",
    "DiscreteDistribution",
    "DistanceMatrix",
    "pem_distance",
    "hs_distance",
    "trajectory_distance_matrix",
    "distance_to_initial_series",
    "Embedding",
    "StressMDS",
    "classical_init",
    "smacof",
    "stress_value",
    "embedding_spread",
    "procrustes_align",
    "NeighborCounts",
    "IdEstimate",
    "ScaleScan",
    "LatticeIdEstimator",
    "lattice_volume",
    "neighbor_counts",
    "solve_id",
    "binomial_log_likelihood",
    "scan_scales",
    "BoxplotSummary",
    "DetectionReport",
    "boxplot_summary",
    "flag_scars",
    "run_pipeline",
    "RunConfig",
]
