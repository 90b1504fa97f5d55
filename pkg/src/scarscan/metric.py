"""Distances between quantum states: exact earth mover's and Hilbert-Schmidt.

The earth mover's (optimal transport) distance between Born distributions
uses the Hamming distance as ground metric and is solved exactly with a
transportation-simplex solver on the dense bipartite cost matrix. A duality
certificate is verified before any optimum is returned, so a structurally
wrong plan raises instead of propagating a bad distance.
"""

import csv
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from scarscan._validation import check_distance_matrix, check_probability_vector

#: Born weights below this are dropped (and the rest renormalized) before
#: transport; the induced error is bounded by L times the truncated mass.
DEFAULT_TRUNCATION = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Probability distribution over equal-length bitstrings."""

    values: np.ndarray   # distinct integer encodings
    weights: np.ndarray  # matching probabilities, sum 1
    length: int

    def __post_init__(self):
        check_probability_vector(self.weights, name="weights")
        if len(np.unique(self.values)) != len(self.values):
            raise ValueError("support entries must be distinct")

    @classmethod
    def from_state(cls, state, truncation=DEFAULT_TRUNCATION):
        """Born distribution of a StateVector, truncated and renormalized."""
        probs = state.probabilities()
        keep = np.nonzero(probs > truncation)[0]
        weights = probs[keep]
        return cls(
            values=state.basis.states[keep].astype(np.int64),
            weights=weights / weights.sum(),
            length=state.basis.length,
        )

    @classmethod
    def from_samples(cls, encodings, length):
        """Empirical distribution of a multiset of encoded bitstrings."""
        values, counts = np.unique(np.asarray(encodings, dtype=np.int64), return_counts=True)
        return cls(values=values, weights=counts / counts.sum(), length=int(length))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric pairwise distances between labelled snapshots."""

    labels: list
    values: np.ndarray

    def __post_init__(self):
        check_distance_matrix(self.values)
        if len(self.labels) != len(self.values):
            raise ValueError("label count does not match matrix size")

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(self.labels)
            for row in self.values:
                writer.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(r for r in fh if not r.startswith("#")))
        labels = rows[0]
        values = np.array([[float(x) for x in row] for row in rows[1:]])
        return cls(labels=labels, values=values)

    def to_binary(self, path):
        """Compact layout: magic, N, newline-joined labels (utf-8), float64 row-major."""
        blob = "\n".join(str(l) for l in self.labels).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(b"SCDM")
            fh.write(struct.pack("<II", len(self.values), len(blob)))
            fh.write(blob)
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as fh:
            if fh.read(4) != b"SCDM":
                raise ValueError(f"{path} is not a distance-matrix file")
            n, blob_len = struct.unpack("<II", fh.read(8))
            labels = fh.read(blob_len).decode("utf-8").split("\n")
            values = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n).copy()
        return cls(labels=labels, values=values)


class TransportError(RuntimeError):
    """Transportation solve failed its own optimality certificate."""


def _greedy_plan(supply, demand, costs):
    """Matrix-minimum greedy start: flows plus a spanning forest of arcs."""
    m, n = costs.shape
    rem_s = supply.copy()
    rem_d = demand.copy()
    flow = np.zeros((m, n))
    arcs = []
    live_r = np.ones(m, dtype=bool)
    live_c = np.ones(n, dtype=bool)
    alive_r, alive_c = m, n
    for k in np.argsort(costs, axis=None, kind="stable"):
        i, j = divmod(int(k), n)
        if not (live_r[i] and live_c[j]):
            continue
        amount = rem_s[i] if rem_s[i] <= rem_d[j] else rem_d[j]
        flow[i, j] = amount
        arcs.append((i, j))
        rem_s[i] -= amount
        rem_d[j] -= amount
        if rem_s[i] <= rem_d[j]:
            live_r[i] = False
            alive_r -= 1
        else:
            live_c[j] = False
            alive_c -= 1
        if alive_r == 0 or alive_c == 0:
            break
    # numerical dust left by ties: dump it on the surviving rows/columns
    for i in np.nonzero(live_r)[0]:
        for j in np.nonzero(live_c)[0]:
            amount = min(rem_s[i], rem_d[j])
            flow[i, j] += amount
            arcs.append((i, j))
            rem_s[i] -= amount
            rem_d[j] -= amount
    return flow, arcs


def transport_plan(supply, demand, costs, tol=1e-11, max_pivots=None):
    """Exact optimum of the transportation problem.

    Minimizes ``sum(plan * costs)`` over nonnegative plans with row sums
    ``supply`` and column sums ``demand`` (both must have equal totals).
    Returns (cost, plan). The basis tree is maintained with parent pointers;
    duals are updated only on the re-rooted subtree after each pivot.
    Optimality is certified through the dual solution before returning.
    """
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    costs = np.asarray(costs, dtype=float)
    m, n = costs.shape
    if supply.shape != (m,) or demand.shape != (n,):
        raise ValueError("marginal shapes do not match the cost matrix")
    if abs(supply.sum() - demand.sum()) > 1e-9 * max(supply.sum(), 1.0):
        raise ValueError("supply and demand totals differ")
    total = m + n
    if max_pivots is None:
        max_pivots = 200 * total + 10_000

    flow, arcs = _greedy_plan(supply, demand, costs)

    # node ids: rows 0..m-1, columns m..m+n-1
    adjacency = [[] for _ in range(total)]
    basic = set()
    for i, j in arcs:
        if (i, j) not in basic:
            basic.add((i, j))
            adjacency[i].append(m + j)
            adjacency[m + j].append(i)

    # link the greedy forest into a single spanning tree with zero-flow arcs
    component = np.full(total, -1, dtype=np.int64)
    n_components = 0
    for start in range(total):
        if component[start] == -1:
            stack = [start]
            component[start] = n_components
            while stack:
                x = stack.pop()
                for y in adjacency[x]:
                    if component[y] == -1:
                        component[y] = n_components
                        stack.append(y)
            n_components += 1
    while n_components > 1:
        bridging = np.where(component[:m, None] == component[None, m:], np.inf, costs)
        i, j = divmod(int(np.argmin(bridging)), n)
        basic.add((i, j))
        adjacency[i].append(m + j)
        adjacency[m + j].append(i)
        old = component[m + j]
        component[component == old] = component[i]
        n_components -= 1

    parent = np.full(total, -1, dtype=np.int64)
    depth = np.zeros(total, dtype=np.int64)
    potential = np.zeros(total)

    def attach(node, to):
        parent[node] = to
        depth[node] = depth[to] + 1
        if node >= m:
            potential[node] = costs[to, node - m] - potential[to]
        else:
            potential[node] = costs[node, to - m] - potential[to]

    seen = np.zeros(total, dtype=bool)
    seen[0] = True
    queue = [0]
    head = 0
    while head < len(queue):
        x = queue[head]
        head += 1
        for y in adjacency[x]:
            if not seen[y]:
                seen[y] = True
                attach(y, x)
                queue.append(y)

    row_pot = potential[:m]
    col_pot = potential[m:]
    pivots = 0
    while True:
        reduced = costs - row_pot[:, None] - col_pot[None, :]
        k = int(np.argmin(reduced))
        enter_i, enter_j = divmod(k, n)
        if reduced[enter_i, enter_j] >= -tol:
            break
        if pivots >= max_pivots:
            raise TransportError("transportation simplex exceeded its pivot budget")
        pivots += 1

        # unique tree cycle through the entering arc, found via the LCA
        x, y = enter_i, m + enter_j
        path_x, path_y = [x], [y]
        while depth[x] > depth[y]:
            x = parent[x]
            path_x.append(x)
        while depth[y] > depth[x]:
            y = parent[y]
            path_y.append(y)
        while x != y:
            x = parent[x]
            path_x.append(x)
            y = parent[y]
            path_y.append(y)
        node_path = path_x + path_y[-2::-1]
        cycle = []
        for t in range(len(node_path) - 1):
            p, q = node_path[t], node_path[t + 1]
            cycle.append((p, q - m) if q >= m else (q, p - m))
        decreasing = cycle[0::2]
        theta = min(flow[c] for c in decreasing)
        for c in decreasing:
            if flow[c] == theta:
                leave = c
                break
        flow[enter_i, enter_j] += theta
        if theta != 0.0:
            for t, cell in enumerate(cycle):
                if t % 2 == 0:
                    flow[cell] -= theta
                else:
                    flow[cell] += theta

        leave_r, leave_c = leave[0], m + leave[1]
        child = leave_r if parent[leave_r] == leave_c else leave_c
        adjacency[leave_r].remove(leave_c)
        adjacency[leave_c].remove(leave_r)
        # the detached subtree hangs below `child`; collect it before
        # adding the entering arc so the scan cannot leak across it
        in_subtree = np.zeros(total, dtype=bool)
        in_subtree[child] = True
        stack = [child]
        while stack:
            xx = stack.pop()
            for yy in adjacency[xx]:
                if not in_subtree[yy]:
                    in_subtree[yy] = True
                    stack.append(yy)
        node_r, node_c = enter_i, m + enter_j
        inside, outside = (node_r, node_c) if in_subtree[node_r] else (node_c, node_r)
        adjacency[node_r].append(node_c)
        adjacency[node_c].append(node_r)
        # re-root the detached subtree at the entering arc
        attach(inside, outside)
        relabeled = np.zeros(total, dtype=bool)
        relabeled[inside] = True
        stack = [inside]
        while stack:
            xx = stack.pop()
            for yy in adjacency[xx]:
                if in_subtree[yy] and not relabeled[yy]:
                    relabeled[yy] = True
                    attach(yy, xx)
                    stack.append(yy)

    cost = float((flow * costs).sum())
    dual = float(supply @ row_pot + demand @ col_pot)
    if abs(cost - dual) > 1e-9 * max(1.0, abs(cost)):
        raise TransportError(f"duality gap {cost - dual:.3e} fails the optimality certificate")
    if (
        np.abs(flow.sum(axis=1) - supply).max(initial=0.0) > 1e-9
        or np.abs(flow.sum(axis=0) - demand).max(initial=0.0) > 1e-9
    ):
        raise TransportError("transport plan violates its marginals")
    return cost, flow


def _hamming_costs(values_a, values_b):
    return np.bitwise_count(values_a[:, None] ^ values_b[None, :]).astype(float)


def pem_distance(a, b):
    """Exact earth mover's distance between two bitstring distributions.

    Ground metric is the Hamming distance, so the value is the minimal
    average number of site flips needed to morph one distribution into the
    other.
    """
    if a.length != b.length:
        raise ValueError(f"distributions over different lengths: {a.length} vs {b.length}")
    cost, _ = transport_plan(a.weights, b.weights, _hamming_costs(a.values, b.values))
    return cost


def hs_distance(a, b):
    """Hilbert-Schmidt distance between pure-state projectors.

    Equals sqrt(2 * (1 - |<a|b>|^2)); invariant under global phases.
    """
    if a.basis.length != b.basis.length:
        raise ValueError("states live on different bases")
    overlap = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - overlap))))


def _pem_pair_solver(trajectory, truncation):
    distributions = [DiscreteDistribution.from_state(s, truncation) for s in trajectory.states]

    def solve(i, j):
        return pem_distance(distributions[i], distributions[j])

    return solve


def _hs_pair_solver(trajectory, truncation):
    states = trajectory.states

    def solve(i, j):
        return hs_distance(states[i], states[j])

    return solve


_KINDS = {"pem": _pem_pair_solver, "hs": _hs_pair_solver}


def trajectory_distance_matrix(trajectory, kind="pem", truncation=DEFAULT_TRUNCATION, n_jobs=1):
    """Pairwise snapshot distances of a quench trajectory.

    ``kind`` selects the earth mover's distance between Born distributions
    ("pem") or the Hilbert-Schmidt distance ("hs"). Upper-triangle entries
    are independent and are computed on a thread pool when ``n_jobs`` > 1.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown distance kind {kind!r}; expected one of {sorted(_KINDS)}")
    n_snapshots = len(trajectory.states)
    if n_snapshots < 2:
        raise ValueError("trajectory needs at least two snapshots")
    solve = _KINDS[kind](trajectory, truncation)
    values = np.zeros((n_snapshots, n_snapshots))
    pairs = [(i, j) for i in range(n_snapshots) for j in range(i + 1, n_snapshots)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda p: solve(*p), pairs))
    else:
        results = [solve(i, j) for i, j in pairs]
    for (i, j), value in zip(pairs, results):
        values[i, j] = values[j, i] = value
    labels = [f"t={t:g}" for t in trajectory.times]
    return DistanceMatrix(labels=labels, values=values)


def distance_to_initial_series(trajectory, kind="pem", truncation=DEFAULT_TRUNCATION):
    """Distance of every snapshot to the initial state, as (times, distances).

    For trajectories quenched from a product state the reference is that
    state itself (so the entry at t=0, if present, is exactly 0); otherwise
    the first snapshot serves as reference.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown distance kind {kind!r}; expected one of {sorted(_KINDS)}")
    if kind == "pem":
        if trajectory.initial >= 0:
            reference = DiscreteDistribution(
                values=np.array([trajectory.initial], dtype=np.int64),
                weights=np.array([1.0]),
                length=trajectory.basis.length,
            )
        else:
            reference = DiscreteDistribution.from_state(trajectory.states[0], truncation)
        snapshots = [DiscreteDistribution.from_state(s, truncation) for s in trajectory.states]
        distances = np.array([pem_distance(reference, snap) for snap in snapshots])
    else:
        if trajectory.initial >= 0:
            idx = trajectory.basis.index_of(trajectory.initial)
            overlaps = np.array([abs(s.amplitudes[idx]) ** 2 for s in trajectory.states])
            distances = np.sqrt(np.maximum(0.0, 2.0 * (1.0 - overlaps)))
        else:
            reference = trajectory.states[0]
            distances = np.array([hs_distance(reference, s) for s in trajectory.states])
    return np.asarray(trajectory.times, dtype=float), distances
