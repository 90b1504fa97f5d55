"""Metric MDS by stress majorization, with a deterministic spectral start.

The objective is the raw stress
``sum_{i<j} (||x_i - x_j|| - d_ij)^2``;
each SMACOF update applies the Guttman transform, which never increases it.
Initialization is classical (Torgerson) MDS by default so results are
reproducible; a seeded random-restart mode exists for robustness studies.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from scarscan._validation import check_distance_matrix

#: Embedded points closer than this are treated as coincident inside the
#: Guttman transform, avoiding a division by zero.
DISTANCE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Embedding:
    coords: np.ndarray
    stress: float
    iterations: int
    converged: bool
    stress_history: np.ndarray


def stress_value(coords, dissimilarities):
    """Raw stress of a configuration against target dissimilarities."""
    coords = np.asarray(coords, dtype=float)
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    iu = np.triu_indices(len(coords), k=1)
    return float(((dist[iu] - np.asarray(dissimilarities)[iu]) ** 2).sum())


def classical_init(dissimilarities, n_components=2):
    """Deterministic starting configuration from classical (Torgerson) MDS.

    Takes the top spectral directions of the double-centered squared
    dissimilarities. If fewer than ``n_components`` nonnegative spectral
    values exist, the remaining coordinates are zero-padded and a warning
    is emitted.
    """
    d = check_distance_matrix(dissimilarities)
    n = len(d)
    centering = np.eye(n) - np.ones((n, n)) / n
    gram = -0.5 * centering @ (d**2) @ centering
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1][:n_components]
    top = eigvals[order]
    positive = top > 0
    if positive.sum() < n_components:
        warnings.warn(
            f"only {int(positive.sum())} nonnegative spectral values; "
            "padding remaining coordinates with zeros",
            stacklevel=2,
        )
    coords = eigvecs[:, order] * np.sqrt(np.where(positive, top, 0.0))[None, :]
    return coords


def _guttman_update(coords, dissimilarities):
    n = len(coords)
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    ratio = np.where(dist > DISTANCE_FLOOR, dissimilarities / np.maximum(dist, DISTANCE_FLOOR), 0.0)
    b = -ratio
    np.fill_diagonal(b, 0.0)
    np.fill_diagonal(b, -b.sum(axis=1))
    return (b @ coords) / n


def smacof(dissimilarities, init, max_iter=500, tol=1e-9):
    """Minimize raw stress from a given start by iterated Guttman transforms.

    Stops when the relative stress decrease falls below ``tol`` (converged)
    or after ``max_iter`` updates. Coincident points are allowed; the update
    guards against zero embedded distances.
    """
    d = check_distance_matrix(dissimilarities)
    coords = np.array(init, dtype=float)
    if coords.ndim != 2 or len(coords) != len(d):
        raise ValueError(f"init shape {coords.shape} does not match {len(d)} points")
    history = [stress_value(coords, d)]
    converged = False
    iterations = 0
    for _ in range(max_iter):
        coords = _guttman_update(coords, d)
        iterations += 1
        history.append(stress_value(coords, d))
        previous, current = history[-2], history[-1]
        if previous - current < tol * max(previous, DISTANCE_FLOOR):
            converged = True
            break
    return Embedding(
        coords=coords,
        stress=history[-1],
        iterations=iterations,
        converged=converged,
        stress_history=np.array(history),
    )


def embedding_spread(embedding):
    """Root-mean-square distance of embedded points from their centroid."""
    coords = embedding.coords if isinstance(embedding, Embedding) else np.asarray(embedding, float)
    if len(coords) < 2:
        raise ValueError("spread needs at least two points")
    centered = coords - coords.mean(axis=0)
    return float(np.sqrt((centered**2).sum(axis=1).mean()))


def procrustes_align(reference, other):
    """Rigidly align ``other`` (rotation/reflection + translation) onto ``reference``."""
    a = np.asarray(reference, dtype=float)
    b = np.asarray(other, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mu_a = a.mean(axis=0)
    mu_b = b.mean(axis=0)
    u, _, vt = np.linalg.svd((b - mu_b).T @ (a - mu_a))
    rotation = u @ vt
    return (b - mu_b) @ rotation + mu_a


class StressMDS(BaseEstimator):
    """Stress-majorization MDS on precomputed distance matrices.

    Parameters
    ----------
    n_components : int, target dimension (2 suffices for this pipeline).
    init : "classical" for the deterministic spectral start, "random" for
        seeded random restarts.
    n_init : number of random restarts (ignored for classical init).
    max_iter, tol : SMACOF stopping rule (relative stress decrease).
    random_state : seed for random initialization.

    Attributes (after fit)
    ----------------------
    embedding_, stress_, stress_history_, n_iter_, converged_
    """

    def __init__(self, n_components=2, init="classical", n_init=4, max_iter=500, tol=1e-9, random_state=None):
        self.n_components = n_components
        self.init = init
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        d = check_distance_matrix(X)
        if self.init == "classical":
            starts = [classical_init(d, self.n_components)]
        elif self.init == "random":
            rng = np.random.default_rng(self.random_state)
            scale = max(d.max(initial=0.0), 1.0)
            starts = [rng.normal(scale=scale, size=(len(d), self.n_components)) for _ in range(self.n_init)]
        else:
            raise ValueError(f"unknown init {self.init!r}; expected 'classical' or 'random'")
        best = None
        for start in starts:
            result = smacof(d, start, max_iter=self.max_iter, tol=self.tol)
            if best is None or result.stress < best.stress:
                best = result
        self.embedding_ = best.coords
        self.stress_ = best.stress
        self.stress_history_ = best.stress_history
        self.n_iter_ = best.iterations
        self.converged_ = best.converged
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


def write_embedding(embedding, labels, csv_path, json_path=None, header_lines=()):
    """Plot-ready export: CSV of (label, x1, ..., xd) plus a JSON summary."""
    coords = embedding.coords
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("t," + ",".join(f"x{k + 1}" for k in range(coords.shape[1])) + "\n")
        for label, row in zip(labels, coords):
            fh.write(str(label) + "," + ",".join(repr(float(x)) for x in row) + "\n")
    if json_path is not None:
        summary = {
            "stress": embedding.stress,
            "iterations": embedding.iterations,
            "converged": embedding.converged,
            "spread": embedding_spread(embedding),
        }
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
