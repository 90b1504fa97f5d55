"""Input validation helpers shared across the package."""

import numpy as np


def check_length(length):
    length = int(length)
    if length < 2:
        raise ValueError(f"chain length must be >= 2, got {length}")
    return length


def check_probability_vector(weights, *, tol=1e-9, name="weights"):
    """Validate a nonnegative vector summing to 1 within ``tol``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if w.size == 0:
        raise ValueError(f"{name} is empty")
    if np.any(w < -tol):
        raise ValueError(f"{name} has negative entries")
    total = w.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"{name} must sum to 1 (got {total!r})")
    return w


def check_square_matrix(values, *, name="matrix"):
    m = np.asarray(values, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def check_distance_matrix(values, *, sym_tol=1e-9, name="distance matrix"):
    """Validate symmetry, nonnegativity and a zero diagonal."""
    m = check_square_matrix(values, name=name)
    if np.any(m < -sym_tol):
        raise ValueError(f"{name} has negative entries")
    if np.abs(m - m.T).max(initial=0.0) > sym_tol:
        raise ValueError(f"{name} is not symmetric")
    if m.shape[0] and np.abs(np.diag(m)).max() > sym_tol:
        raise ValueError(f"{name} has a nonzero diagonal")
    return m


def check_lattice_points(samples, *, name="samples"):
    """Validate an (n_samples, n_features) array of integer lattice points."""
    x = np.asarray(samples)
    if x.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of lattice points, got ndim={x.ndim}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"{name} is empty: shape {x.shape}")
    if not np.issubdtype(x.dtype, np.integer):
        xf = np.asarray(x, dtype=float)
        xi = np.rint(xf).astype(np.int64)
        if np.abs(xf - xi).max() > 0:
            raise ValueError(f"{name} must contain integer lattice coordinates")
        x = xi
    return np.ascontiguousarray(x, dtype=np.int64)


def check_error_rate(error_rate):
    eps = float(error_rate)
    if not (0.0 <= eps < 0.5):
        raise ValueError(f"error rate must lie in [0, 0.5), got {eps}")
    return eps
