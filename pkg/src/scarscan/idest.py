"""Intrinsic dimension of integer lattice data from neighbor-count statistics.

Given points on a lattice with the L1 metric (Hamming distance for binary
data), the number of points inside an inner ball, conditioned on the number
inside a concentric outer ball, is binomial with success probability equal
to the ratio of ball volumes; the ratio is density-independent. Matching the
model volume ratio at a real-valued dimension to the observed count ratio
yields a maximum-likelihood dimension estimate per scale pair; scanning
scales and locating the plateau gives the final estimate.
"""

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln
from sklearn.base import BaseEstimator

from scarscan._validation import check_lattice_points

#: Lower end of the dimension bracket used for root finding.
DIMENSION_FLOOR = 1e-3

#: Unique-value count above which bootstrap indicator matrices are refused.
BOOTSTRAP_MAX_UNIQUE = 4096


class IdEstimationError(RuntimeError):
    """No usable scale produced an intrinsic-dimension estimate."""


@dataclass(frozen=True, eq=False)
class NeighborCounts:
    """Per-point neighbor counts inside two concentric L1 balls.

    Counts exclude the center point itself but include duplicates of it at
    distance zero, preserving the empirical measure of concentrated data.
    """

    radius_inner: int
    radius_outer: int
    counts_inner: np.ndarray
    counts_outer: np.ndarray
    n_features: int

    @property
    def mean_inner(self):
        return float(self.counts_inner.mean())

    @property
    def mean_outer(self):
        return float(self.counts_outer.mean())


@dataclass(frozen=True, eq=False)
class IdEstimate:
    radius_inner: int
    radius_outer: int
    dimension: float
    bracket: tuple
    degenerate: bool
    ci: tuple = None  # (16th, 84th) bootstrap percentiles when requested


@dataclass(frozen=True, eq=False)
class ScaleScan:
    """Per-scale estimates plus the plateau decision."""

    estimates: list
    dimension: float
    plateaued: bool
    window: tuple  # inclusive (first, last) indices into `estimates`, or None


def _generalized_binomial(dim, k):
    """Falling-factorial binomial C(dim, k) for real dim."""
    out = 1.0
    for i in range(k):
        out *= (dim - i) / (k - i)
    return out


def lattice_volume(radius, dim):
    """Number of lattice points within L1 distance ``radius`` in dimension ``dim``.

    Evaluated as ``sum_k 2^k C(radius, k) C(dim, k)``, the generalized
    binomial expansion that extends the integer lattice-point count to real
    dimensions as a degree-``radius`` polynomial.
    """
    radius = int(radius)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    return float(
        sum(
            (2.0**k) * math.comb(radius, k) * _generalized_binomial(dim, k)
            for k in range(radius + 1)
        )
    )


def volume_ratio(radius_inner, radius_outer, dim):
    """V(inner, dim) / V(outer, dim); the binomial success probability."""
    return lattice_volume(radius_inner, dim) / lattice_volume(radius_outer, dim)


def _pairwise_l1_block(block, points, period):
    if period is None:
        if block.shape[1] <= 63 and points.min() >= 0 and points.max() <= 1:
            # binary data: pack sites into one integer and use popcounts
            shifts = np.arange(block.shape[1], dtype=np.int64)
            a = (block.astype(np.int64) << shifts[None, :]).sum(axis=1)
            b = (points.astype(np.int64) << shifts[None, :]).sum(axis=1)
            return np.bitwise_count(a[:, None] ^ b[None, :]).astype(np.int64)
        diff = np.abs(block[:, None, :] - points[None, :, :])
        return diff.sum(axis=-1)
    diff = np.abs(block[:, None, :] - points[None, :, :])
    diff = np.minimum(diff, period[None, None, :] - diff)
    return diff.sum(axis=-1)


def _count_profile(uniques, multiplicities, max_radius, period, block_size=1024):
    """Cumulative neighbor counts per unique point for radii 0..max_radius.

    Entry (i, r) counts all sample points (with multiplicity, including the
    center's own copies) within distance r of unique point i.
    """
    n_unique = len(uniques)
    buckets = max_radius + 2  # last bucket absorbs everything beyond max_radius
    profile = np.zeros((n_unique, buckets), dtype=np.float64)
    for start in range(0, n_unique, block_size):
        block = uniques[start : start + block_size]
        dists = np.minimum(_pairwise_l1_block(block, uniques, period), max_radius + 1)
        flat = (np.arange(len(block))[:, None] * buckets + dists).ravel()
        weights = np.broadcast_to(multiplicities, dists.shape).ravel().astype(np.float64)
        profile[start : start + len(block)] = np.bincount(
            flat, weights=weights, minlength=len(block) * buckets
        ).reshape(len(block), buckets)
    return np.cumsum(profile[:, :-1], axis=1)


def _diameter_bound(samples, period):
    """Largest L1 distance the data representation allows.

    Bitstrings can differ at every site, so binary data is bounded by the
    feature count regardless of the observed spread; general lattice data is
    bounded by the per-coordinate ranges (halved on a torus).
    """
    if period is not None:
        return int((period // 2).sum())
    if samples.min() >= 0 and samples.max() <= 1:
        return samples.shape[1]
    return max(int((samples.max(axis=0) - samples.min(axis=0)).sum()), 1)


def _prepare(samples, period):
    samples = check_lattice_points(samples)
    if period is not None:
        period = np.broadcast_to(np.asarray(period, dtype=np.int64), (samples.shape[1],)).copy()
        if np.any(period < 1):
            raise ValueError("period entries must be positive")
        samples = np.mod(samples, period)
    uniques, inverse, counts = np.unique(samples, axis=0, return_inverse=True, return_counts=True)
    return samples, uniques, inverse, counts, period


def neighbor_counts(samples, radius_inner, radius_outer, period=None):
    """Count, for every sample point, the neighbors within two L1 radii."""
    samples, uniques, inverse, counts, period = _prepare(samples, period)
    n, dim = samples.shape
    if n < 2:
        raise ValueError("need at least two sample points")
    radius_inner = int(radius_inner)
    radius_outer = int(radius_outer)
    if not (1 <= radius_inner < radius_outer):
        raise ValueError(f"need 1 <= inner < outer, got ({radius_inner}, {radius_outer})")
    if radius_outer > _diameter_bound(samples, period):
        raise ValueError(
            f"outer radius {radius_outer} exceeds the representable diameter "
            f"{_diameter_bound(samples, period)}"
        )
    profile = _count_profile(uniques, counts, radius_outer, period)
    inner = profile[inverse, radius_inner] - 1.0
    outer = profile[inverse, radius_outer] - 1.0
    return NeighborCounts(
        radius_inner=radius_inner,
        radius_outer=radius_outer,
        counts_inner=inner,
        counts_outer=outer,
        n_features=dim,
    )


def _solve_ratio(ratio, radius_inner, radius_outer, dim_cap):
    """Root of the volume-ratio equation; None when no sign change exists."""
    f = lambda d: volume_ratio(radius_inner, radius_outer, d) - ratio
    lo = DIMENSION_FLOOR
    hi = dim_cap
    if f(lo) <= 0:
        return None, (lo, hi), "inner"
    if f(hi) >= 0:
        hi = 2 * dim_cap  # one bracket expansion before giving up
        if f(hi) >= 0:
            return None, (lo, hi), "outer"
    root = brentq(f, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)
    return float(root), (lo, hi), None


def solve_id(counts):
    """Maximum-likelihood intrinsic dimension for one pair of radii.

    Solves ``V(inner, d)/V(outer, d) = mean_inner/mean_outer`` by bracketed
    root finding on d in [1e-3, 4 * n_features]. Degenerate statistics (all
    mass inside the inner ball, or no bracketing sign change) are flagged
    rather than raised.
    """
    if counts.mean_outer <= 0:
        return IdEstimate(
            radius_inner=counts.radius_inner,
            radius_outer=counts.radius_outer,
            dimension=float("nan"),
            bracket=(DIMENSION_FLOOR, 4.0 * counts.n_features),
            degenerate=True,
        )
    ratio = counts.mean_inner / counts.mean_outer
    root, bracket, failure = _solve_ratio(
        ratio, counts.radius_inner, counts.radius_outer, 4.0 * counts.n_features
    )
    if root is None:
        dimension = 0.0 if failure == "inner" else float("nan")
        return IdEstimate(
            radius_inner=counts.radius_inner,
            radius_outer=counts.radius_outer,
            dimension=dimension,
            bracket=bracket,
            degenerate=True,
        )
    residual = volume_ratio(counts.radius_inner, counts.radius_outer, root) - ratio
    if abs(residual) > 1e-9:
        raise IdEstimationError(f"root residual {residual:.3e} exceeds tolerance")
    return IdEstimate(
        radius_inner=counts.radius_inner,
        radius_outer=counts.radius_outer,
        dimension=root,
        bracket=bracket,
        degenerate=False,
    )


def binomial_log_likelihood(counts, dim):
    """Log-likelihood of the observed neighbor counts at a trial dimension.

    ``sum_i [log C(k_i, n_i) + n_i log p + (k_i - n_i) log(1 - p)]`` with
    p the volume ratio at ``dim``. The maximizer coincides with the root
    found by :func:`solve_id`.
    """
    p = volume_ratio(counts.radius_inner, counts.radius_outer, dim)
    if not 0.0 < p < 1.0:
        raise ValueError(f"volume ratio {p!r} outside (0, 1) at dimension {dim}")
    n = counts.counts_inner
    k = counts.counts_outer
    if np.any(n > k):
        raise ValueError("inner counts exceed outer counts")
    log_binom = gammaln(k + 1) - gammaln(n + 1) - gammaln(k - n + 1)
    return float(np.sum(log_binom + n * np.log(p) + (k - n) * np.log1p(-p)))


def _bootstrap_ci(uniques, counts, radius_inner, radius_outer, period, n_bootstrap, dim_cap, rng):
    if len(uniques) > BOOTSTRAP_MAX_UNIQUE:
        warnings.warn(
            f"skipping bootstrap: {len(uniques)} unique points exceed "
            f"{BOOTSTRAP_MAX_UNIQUE}", stacklevel=2,
        )
        return None
    total = int(counts.sum())
    dists = _pairwise_l1_block(uniques, uniques, period)
    inner = (dists <= radius_inner).astype(np.float32)
    outer = (dists <= radius_outer).astype(np.float32)
    pvals = counts / total
    pvals = pvals / pvals.sum()
    resamples = rng.multinomial(total, pvals, size=n_bootstrap).T.astype(np.float32)
    inner_counts = inner @ resamples  # (U, n_bootstrap)
    outer_counts = outer @ resamples
    mean_inner = (resamples * inner_counts).sum(axis=0) / total - 1.0
    mean_outer = (resamples * outer_counts).sum(axis=0) / total - 1.0
    draws = []
    for mi, mo in zip(mean_inner, mean_outer):
        if mo <= 0:
            continue
        root, _, failure = _solve_ratio(mi / mo, radius_inner, radius_outer, dim_cap)
        if root is not None:
            draws.append(root)
        elif failure == "inner":
            draws.append(0.0)
    if not draws:
        return None
    lo, hi = np.percentile(draws, [16.0, 84.0])
    return (float(lo), float(hi))


def _default_radii(samples):
    if samples.min() >= 0 and samples.max() <= 1:
        return list(range(2, samples.shape[1] + 1))
    raise ValueError("radii must be given explicitly for non-binary lattice data")


def _find_plateau(values, window, tol):
    """Longest contiguous window of >= ``window`` values with range < tol.

    Returns (start, stop) over ``values`` or None; earliest window wins ties.
    """
    best = None
    n = len(values)
    for start in range(n):
        stop = start + 1
        lo = hi = values[start]
        while stop < n:
            lo = min(lo, values[stop])
            hi = max(hi, values[stop])
            if hi - lo >= tol:
                break
            stop += 1
        if stop - start >= window and (best is None or stop - start > best[1] - best[0]):
            best = (start, stop)
    return best


def scan_scales(
    samples,
    radii=None,
    plateau_window=3,
    plateau_tol=0.15,
    n_bootstrap=0,
    period=None,
    random_state=None,
):
    """Estimate the intrinsic dimension over a range of outer radii.

    For each outer radius the inner radius is ``ceil(outer / 2)``, keeping
    the volume ratio well conditioned across scales. The plateau is the
    longest run of at least ``plateau_window`` non-degenerate estimates
    whose spread stays below ``plateau_tol``; its median is the final
    dimension. Without a qualifying run, the estimate at the smallest
    non-degenerate scale is returned with ``plateaued=False``.
    """
    samples, uniques, inverse, counts, period = _prepare(samples, period)
    if radii is None:
        radii = _default_radii(samples)
    radii = sorted(int(r) for r in radii)
    if not radii or radii[0] < 2:
        raise ValueError("outer radii must all be >= 2")
    total = int(counts.sum())
    if total < 2:
        raise IdEstimationError(f"cannot estimate a dimension from {total} sample point(s)")
    profile = _count_profile(uniques, counts, max(radii), period)
    rng = np.random.default_rng(random_state)
    dim_cap = 4.0 * samples.shape[1]

    estimates = []
    for outer in radii:
        inner = math.ceil(outer / 2)
        nc = NeighborCounts(
            radius_inner=inner,
            radius_outer=outer,
            counts_inner=profile[inverse, inner] - 1.0,
            counts_outer=profile[inverse, outer] - 1.0,
            n_features=samples.shape[1],
        )
        estimate = solve_id(nc)
        if not estimate.degenerate and n_bootstrap > 0:
            ci = _bootstrap_ci(uniques, counts, inner, outer, period, n_bootstrap, dim_cap, rng)
            estimate = IdEstimate(
                radius_inner=estimate.radius_inner,
                radius_outer=estimate.radius_outer,
                dimension=estimate.dimension,
                bracket=estimate.bracket,
                degenerate=False,
                ci=ci,
            )
        estimates.append(estimate)

    usable = [(k, e.dimension) for k, e in enumerate(estimates) if not e.degenerate]
    if not usable:
        raise IdEstimationError(
            f"all {len(radii)} scales degenerate for {total} samples of "
            f"{samples.shape[1]} features"
        )
    values = [v for _, v in usable]
    span = _find_plateau(values, plateau_window, plateau_tol)
    if span is None:
        return ScaleScan(
            estimates=estimates, dimension=values[0], plateaued=False, window=None
        )
    start, stop = span
    return ScaleScan(
        estimates=estimates,
        dimension=float(np.median(values[start:stop])),
        plateaued=True,
        window=(usable[start][0], usable[stop - 1][0]),
    )


def write_scan_csv(scan, path, header_lines=()):
    """Per-scale CSV: (t1, t2, d_hat, degenerate, ci_low, ci_high)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["t1", "t2", "d_hat", "degenerate", "ci_low", "ci_high"])
        for e in scan.estimates:
            ci = e.ci if e.ci is not None else ("", "")
            writer.writerow(
                [e.radius_inner, e.radius_outer, repr(float(e.dimension)), int(e.degenerate), ci[0], ci[1]]
            )


def scan_summary(scan):
    return {
        "dimension": scan.dimension,
        "plateaued": scan.plateaued,
        "window": list(scan.window) if scan.window is not None else None,
        "n_scales": len(scan.estimates),
        "n_degenerate": sum(e.degenerate for e in scan.estimates),
    }


def write_scan_json(scan, path, extra=None):
    payload = scan_summary(scan)
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


class LatticeIdEstimator(BaseEstimator):
    """Scikit-learn style wrapper around the multi-scale lattice estimator.

    ``fit`` expects an (n_samples, n_features) integer array of lattice
    points (0/1 columns for measurement bitstrings). After fitting,
    ``dimension_`` holds the plateau estimate, ``scan_`` the per-scale
    details.
    """

    def __init__(
        self,
        radii=None,
        plateau_window=3,
        plateau_tol=0.15,
        n_bootstrap=0,
        period=None,
        random_state=None,
    ):
        self.radii = radii
        self.plateau_window = plateau_window
        self.plateau_tol = plateau_tol
        self.n_bootstrap = n_bootstrap
        self.period = period
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_lattice_points(X, name="X")
        self.n_features_in_ = X.shape[1]
        self.scan_ = scan_scales(
            X,
            radii=self.radii,
            plateau_window=self.plateau_window,
            plateau_tol=self.plateau_tol,
            n_bootstrap=self.n_bootstrap,
            period=self.period,
            random_state=self.random_state,
        )
        self.dimension_ = self.scan_.dimension
        self.plateaued_ = self.scan_.plateaued
        self.estimates_ = self.scan_.estimates
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).dimension_
