"""Independent oracles and utilities used by the test suite.

The oracles here deliberately avoid the library code paths they check:
energies are re-summed with scalar double loops, neighborhoods are found
by full distance scans over the site table, and peeling candidates are
enumerated from scratch. Relaxation itself is taken from the library (it
is the function under comparison's shared substrate, not the quantity
the oracles re-derive).
"""

import math

import numpy as np

from ifclust import Cluster, IndexCluster, cluster_energy, pair_energy, relax

# Keep in sync with the documented swap acceptance margin (ITSELF_MIN_GAIN):
# re-derived here so the oracle encodes the rule, not the implementation.
SWAP_MIN_GAIN = 1e-9


def brute_energy(model, coords) -> float:
    """Scalar double-loop energy, the non-vectorized route."""
    coords = np.asarray(coords, dtype=float)
    total = 0.0
    for i in range(len(coords) - 1):
        for j in range(i + 1, len(coords)):
            total += pair_energy(model, math.dist(coords[i], coords[j]))
    return total


def fd_gradient(model, cluster: Cluster, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of the cluster energy."""
    base = np.array(cluster.coords, dtype=float)
    out = np.empty(base.size)
    flat = base.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + step
        e_hi = cluster_energy(model, Cluster(base))
        flat[k] = orig - step
        e_lo = cluster_energy(model, Cluster(base))
        flat[k] = orig
        out[k] = (e_hi - e_lo) / (2.0 * step)
    return out


# ---------------------------------------------------------------------------
# Lattice scans built from raw positions
# ---------------------------------------------------------------------------

def scan_neighbors(lattice, index: int, cutoff: float) -> set[int]:
    """All other sites within the cutoff, by full distance scan."""
    pos = lattice.positions()
    d = np.linalg.norm(pos - pos[index], axis=1)
    return {int(i) for i in np.nonzero(d <= cutoff)[0] if i != index}


def scan_center(lattice) -> int | None:
    pos = lattice.positions()
    hits = np.nonzero(np.linalg.norm(pos, axis=1) < 1e-9)[0]
    return int(hits[0]) if hits.size else None


def scan_removable(lattice, members: frozenset[int], cutoff: float) -> set[int]:
    # Members on the outermost generated shell always border vacancy: the
    # next shell outward exists in the unbounded lattice but is never
    # occupied, because it was not even generated.
    out = set()
    for i in members:
        if lattice.site(int(i)).shell == lattice.shells:
            out.add(i)
        elif any(j not in members for j in scan_neighbors(lattice, i, cutoff)):
            out.add(i)
    center = scan_center(lattice)
    if center is not None and center in members:
        out.add(center)
    return out


def scan_addable(lattice, members: frozenset[int], cutoff: float) -> set[int]:
    out = set()
    for i in members:
        out.update(scan_neighbors(lattice, i, cutoff))
    return out - members


# ---------------------------------------------------------------------------
# Exhaustive peeling oracle
# ---------------------------------------------------------------------------

def _oracle_seed(lattice, members: list[int], coords: dict[int, np.ndarray]) -> Cluster:
    rows = [coords[i] if i in coords else lattice.positions_of([i])[0] for i in members]
    return Cluster(np.asarray(rows), members)


def _oracle_relax(model, lattice, members, coords, opts):
    members = sorted(members)
    return relax(model, _oracle_seed(lattice, members, coords), opts)


def oracle_peel(model, c: IndexCluster, direction: str, opts=None):
    """Re-derive one peeling step by exhaustive candidate enumeration.

    Returns (member frozenset, relaxed energy). Seeds every candidate at
    lattice positions, matching an operation applied without carried
    coordinates.
    """
    lat = c.lattice
    cutoff = lat.default_cutoff
    members = c.indices
    coords: dict[int, np.ndarray] = {}
    if direction == "forward":
        best = None
        for j in sorted(scan_addable(lat, members, cutoff)):
            res = _oracle_relax(model, lat, members | {j}, coords, opts)
            if best is None or (res.energy, j) < (best[1], best[2]):
                best = (members | {j}, res.energy, j)
        return frozenset(best[0]), best[1]
    if direction == "backward":
        best = None
        for k in sorted(scan_removable(lat, members, cutoff)):
            res = _oracle_relax(model, lat, members - {k}, coords, opts)
            if best is None or (res.energy, k) < (best[1], best[2]):
                best = (members - {k}, res.energy, k)
        return frozenset(best[0]), best[1]
    if direction == "itself":
        res0 = _oracle_relax(model, lat, members, coords, opts)
        best = None
        for k in sorted(scan_removable(lat, members, cutoff)):
            for j in sorted(scan_addable(lat, members, cutoff)):
                trial = (members - {k}) | {j}
                res = _oracle_relax(model, lat, trial, coords, opts)
                if best is None or (res.energy, k, j) < (best[1], best[2], best[3]):
                    best = (trial, res.energy, k, j)
        if best is not None and best[1] < res0.energy - SWAP_MIN_GAIN * (1.0 + abs(res0.energy)):
            return frozenset(best[0]), best[1]
        return frozenset(members), res0.energy
    raise ValueError(direction)


# ---------------------------------------------------------------------------
# Random generators
# ---------------------------------------------------------------------------

def random_cluster(n: int, rng: np.random.Generator, min_sep: float = 0.8) -> Cluster:
    """Random points kept at least min_sep apart.

    Near-coincident pairs push steep-core potentials to magnitudes where
    float64 cancellation swamps the absolute tolerances under test, so
    points are rejection-sampled into a box roomy enough to always fit.
    """
    half = 0.75 * max(2.0, n ** (1.0 / 3.0) * min_sep * 1.5)
    rows: list[np.ndarray] = []
    while len(rows) < n:
        cand = rng.uniform(-half, half, 3)
        if all(math.dist(cand, p) >= min_sep for p in rows):
            rows.append(cand)
    return Cluster(np.asarray(rows))


def random_blob(lattice, n: int, rng: np.random.Generator) -> IndexCluster:
    """A random connected occupied set grown site by site."""
    start = int(rng.integers(len(lattice)))
    members = {start}
    while len(members) < n:
        frontier = sorted(scan_addable(lattice, frozenset(members), lattice.default_cutoff))
        members.add(frontier[int(rng.integers(len(frontier)))])
    return IndexCluster(lattice, frozenset(members))


def random_chain(lattice, n_max: int, n_min: int, rng: np.random.Generator):
    """Descending chain of clusters, each dropping one random member."""
    chain = [random_blob(lattice, n_max, rng)]
    while chain[-1].size > n_min:
        members = sorted(chain[-1].indices)
        members.pop(int(rng.integers(len(members))))
        chain.append(IndexCluster(lattice, frozenset(members)))
    return chain
