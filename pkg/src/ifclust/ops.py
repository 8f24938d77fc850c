"""Index-set algebra over a lattice and the greedy peel moves.

A cluster drawn from a lattice is identified by its set of occupied site
indices. Differences between two such clusters are measured by the counts of
sites switched on, switched off, and their sum (a metric, the symmetric
difference size). The peel moves grow, shrink, or repair a cluster by trying
every admissible single-site change, relaxing each candidate, and keeping the
lowest relaxed energy; ties fall to the lowest site index so results are
deterministic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import FrontierExhaustedError
from .geometry import Cluster, center_of_mass, cylindrical_key, icosahedron_faces, icosahedron_vertices
from .lattice import Lattice, Sublattice
from .minimize import RelaxOptions, RelaxResult, relax
from .potentials import PairPotential

# Classification thresholds. A member counts as central when its relaxed
# position sits within ID_COM_RADIUS nearest-neighbor distances of the center
# of mass; it counts as on the Y+ semi-axis when its site's polar angle is
# within AXIS_ANGLE_TOL of zero (the origin site itself does not qualify).
ID_COM_RADIUS = 0.6
AXIS_ANGLE_TOL = 1e-3
CONE_TOL = 1e-6

# Relative energy margin a swap must gain before peel_itself accepts it.
# Symmetry-equivalent re-seatings of the same structure relax to energies
# that differ only in the last few bits; without a margin the operation
# would hop between them forever instead of reaching a fixed point.
ITSELF_MIN_GAIN = 1e-9


class GeometricType(enum.IntEnum):
    """Structural families, by the codes used in catalog files."""

    IC = 1
    ID = 2
    TO = 3
    FC = 5


@dataclass(frozen=True)
class IndexCluster:
    """A nonempty set of occupied site indices on a lattice."""

    lattice: Lattice
    indices: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "indices", frozenset(int(i) for i in self.indices))
        if not self.indices:
            raise ValueError("an index cluster must be nonempty")
        for i in self.indices:
            if i not in self.lattice:
                raise ValueError(f"index {i} is not a site of the lattice")

    @property
    def size(self) -> int:
        return len(self.indices)

    def sorted_indices(self) -> list[int]:
        return sorted(self.indices)

    def positions(self) -> np.ndarray:
        """(n, 3) site positions in ascending index order."""
        return self.lattice.positions_of(self.sorted_indices())

    def to_cluster(self) -> Cluster:
        """The cluster at its lattice positions, labeled by site index."""
        return Cluster(self.positions(), self.sorted_indices())


def _require_same_lattice(a: IndexCluster, b: IndexCluster) -> None:
    if a.lattice is not b.lattice:
        raise ValueError("index clusters live on different lattices")


def on_count(a: IndexCluster, b: IndexCluster) -> int:
    """How many sites b occupies that a does not."""
    _require_same_lattice(a, b)
    return len(b.indices - a.indices)


def off_count(a: IndexCluster, b: IndexCluster) -> int:
    """How many sites a occupies that b does not."""
    _require_same_lattice(a, b)
    return len(a.indices - b.indices)


def adj_count(a: IndexCluster, b: IndexCluster) -> int:
    """Total sites changed between a and b; zero iff equal, and a metric."""
    _require_same_lattice(a, b)
    return len(a.indices ^ b.indices)


def removal_candidates(c: IndexCluster, cutoff: float | None = None) -> frozenset[int]:
    """Members eligible for removal.

    A member qualifies when at least one lattice neighbor within the cutoff is
    vacant, or when it sits on the outermost generated shell: the lattice is a
    finite window onto an unbounded structure, so boundary sites always border
    vacancy. The central site additionally qualifies whenever it is a member.
    """
    lat = c.lattice
    if cutoff is None:
        cutoff = lat.default_cutoff
    out = set()
    for i in c.indices:
        if lat.site(i).shell == lat.shells or any(
            j not in c.indices for j in lat.neighbors(i, cutoff)
        ):
            out.add(i)
    center = lat.center_index
    if center is not None and center in c.indices:
        out.add(center)
    return frozenset(out)


def growth_candidates(c: IndexCluster, cutoff: float | None = None) -> frozenset[int]:
    """Vacant sites adjacent to at least one member within the cutoff."""
    lat = c.lattice
    if cutoff is None:
        cutoff = lat.default_cutoff
    out = set()
    for i in c.indices:
        out.update(lat.neighbors(i, cutoff))
    return frozenset(out - c.indices)


def _seed_coords(c: IndexCluster, coords: Cluster | None) -> dict[int, np.ndarray]:
    """Map member index to its seeding position (current geometry or lattice)."""
    if coords is None:
        base = c.to_cluster()
    else:
        if coords.labels is None:
            raise ValueError("seed coordinates must carry site labels")
        if set(coords.labels) != c.indices:
            raise ValueError("seed coordinate labels do not match the cluster members")
        base = coords
    return {lbl: np.array(base.coords[row]) for row, lbl in enumerate(base.labels)}


def _assemble(lattice: Lattice, members: dict[int, np.ndarray]) -> Cluster:
    labels = sorted(members)
    return Cluster(np.array([members[i] for i in labels]), labels)


def _relaxed_candidate(model, lattice, members, opts) -> RelaxResult:
    return relax(model, _assemble(lattice, members), opts)


def peel_forward(
    model: PairPotential,
    c: IndexCluster,
    opts: RelaxOptions | None = None,
    coords: Cluster | None = None,
    cutoff: float | None = None,
) -> tuple[IndexCluster, RelaxResult]:
    """Grow by the single vacant frontier site whose relaxed addition is lowest.

    Existing members are seeded at their `coords` positions when given (the
    labels must match the member set), otherwise at their lattice positions;
    the trial site is seeded at its exact lattice position. Energy ties fall
    to the lowest site index. Raises FrontierExhaustedError when no vacant
    neighbor exists.
    """
    frontier = sorted(growth_candidates(c, cutoff))
    if not frontier:
        raise FrontierExhaustedError("no vacant site borders the cluster")
    base = _seed_coords(c, coords)
    best = None
    for j in frontier:
        members = dict(base)
        members[j] = c.lattice.positions_of([j])[0]
        res = _relaxed_candidate(model, c.lattice, members, opts)
        if best is None or (res.energy, j) < (best[0].energy, best[1]):
            best = (res, j)
    res, j = best
    return IndexCluster(c.lattice, c.indices | {j}), res


def peel_backward(
    model: PairPotential,
    c: IndexCluster,
    opts: RelaxOptions | None = None,
    coords: Cluster | None = None,
    cutoff: float | None = None,
) -> tuple[IndexCluster, RelaxResult]:
    """Shrink by the removable member whose relaxed removal is lowest.

    Remaining members are seeded as in peel_forward. Requires at least three
    members; ties fall to the lowest removed index.
    """
    if c.size < 3:
        raise ValueError("backward peeling needs at least three members")
    removable = sorted(removal_candidates(c, cutoff))
    if not removable:
        raise ValueError("no member is removable")
    base = _seed_coords(c, coords)
    best = None
    for k in removable:
        members = {i: p for i, p in base.items() if i != k}
        res = _relaxed_candidate(model, c.lattice, members, opts)
        if best is None or (res.energy, k) < (best[0].energy, best[1]):
            best = (res, k)
    res, k = best
    return IndexCluster(c.lattice, c.indices - {k}), res


def peel_itself(
    model: PairPotential,
    c: IndexCluster,
    opts: RelaxOptions | None = None,
    coords: Cluster | None = None,
    cutoff: float | None = None,
) -> tuple[IndexCluster, RelaxResult]:
    """Swap one member for one vacant frontier site when that lowers the energy.

    Every (removable member, vacant frontier site) pair is tried; the best
    relaxed swap is kept only when it beats the relaxed unchanged cluster by
    the relative margin ITSELF_MIN_GAIN, otherwise the input cluster is
    returned with its own relaxation. Ties among swaps fall to the lowest
    removed index, then the lowest added index.
    """
    base = _seed_coords(c, coords)
    res0 = _relaxed_candidate(model, c.lattice, base, opts)
    removable = sorted(removal_candidates(c, cutoff))
    frontier = sorted(growth_candidates(c, cutoff))
    best = None
    for k in removable:
        for j in frontier:
            members = {i: p for i, p in base.items() if i != k}
            members[j] = c.lattice.positions_of([j])[0]
            res = _relaxed_candidate(model, c.lattice, members, opts)
            if best is None or (res.energy, k, j) < (best[0].energy, best[1], best[2]):
                best = (res, k, j)
    margin = ITSELF_MIN_GAIN * (1.0 + abs(res0.energy))
    if best is not None and best[0].energy < res0.energy - margin:
        res, k, j = best
        return IndexCluster(c.lattice, (c.indices - {k}) | {j}), res
    return c, res0


# ---------------------------------------------------------------------------
# Geometric classification
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def _cone_bases() -> np.ndarray:
    """Inverse vertex-direction bases of the 20 centered tetrahedral cones."""
    verts = icosahedron_vertices()
    return np.stack([
        np.linalg.inv(np.column_stack([verts[i], verts[j], verts[k]]))
        for i, j, k in icosahedron_faces()
    ])


def _inside_one_cone(points: np.ndarray, tol: float) -> bool:
    for inv in _cone_bases():
        coeff = points @ inv.T
        if (coeff >= -tol).all():
            return True
    return False


def classify(c: IndexCluster, relaxed: Cluster) -> GeometricType:
    """Structural family of a cluster, judged from its sites and relaxed shape.

    FC when any member occupies an FC site. Otherwise TO when every member
    site lies inside one centered tetrahedron spanned by three pairwise
    adjacent vertex axes. Otherwise ID when some member relaxes to within
    0.6 nearest-neighbor distances of the relaxed center of mass while its
    site sits on the Y+ semi-axis (within 1e-3 rad, origin excluded).
    Everything else is IC.
    """
    if relaxed.labels is None:
        raise ValueError("the relaxed cluster must carry site labels")
    if set(relaxed.labels) != c.indices:
        raise ValueError("relaxed labels do not match the cluster members")
    lat = c.lattice
    members = c.sorted_indices()
    sites = [lat.site(i) for i in members]

    if any(s.sublattice is Sublattice.FC for s in sites):
        return GeometricType.FC

    site_pos = np.array([tuple(s.position) for s in sites])
    if _inside_one_cone(site_pos, CONE_TOL):
        return GeometricType.TO

    com = np.array(tuple(center_of_mass(relaxed)))
    pos_of = {lbl: relaxed.coords[row] for row, lbl in enumerate(relaxed.labels)}
    near = ID_COM_RADIUS * lat.nn_distance
    for i, s in zip(members, sites):
        if np.linalg.norm(pos_of[i] - com) > near:
            continue
        key = cylindrical_key(s.position)
        if key.rho > 0.5 * lat.nn_distance and key.alpha <= AXIS_ANGLE_TOL:
            return GeometricType.ID
    return GeometricType.IC
