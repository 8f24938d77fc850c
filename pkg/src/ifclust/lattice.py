"""The IF lattice: concentric icosahedral (IC) shells plus stacking (FC) sites.

Shell k of the IC sublattice is the surface of the Mackay icosahedron scaled
to circumradius k*step: 12 vertices, 30*(k-1) edge sites, and
10*(k-1)*(k-2) face sites obtained by linear interpolation between the scaled
vertices (no re-projection onto the sphere), for 10*k*k + 2 sites per shell.
Shell 0 is the single central site.

The FC sublattice holds the alternative stacking positions: shell k
contributes the centroids of the k*(k-1)/2 downward sub-triangles of each
face's triangular grid, kept in the face plane, for 10*k*(k-1) sites per
shell. Each such site lies at exactly one step from the three IC sites of the
upward triangle it caps on shell k-1, which is what makes it an occupiable
stacking alternative to the Mackay positions of its own shell.

Cumulative site counts over full shells: 13, 75, 227, 509, ... and 9483 at
eleven shells. Sites are indexed by shell ascending, IC before FC within a
shell, then by the cylindrical canonical order, so a lattice with fewer
shells is always an index-for-index prefix of a deeper one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AmbiguousSiteError
from .geometry import (
    Point3,
    _snap,
    cylindrical_key,
    icosahedron_edges,
    icosahedron_faces,
    icosahedron_vertices,
)
from .potentials import BASIN_HI, R_STAR

# Radial spacing between consecutive shells along a lattice ray; also the
# distance from an FC site to each of its three supporting IC sites.
STEP_RATIO = 1.08183839

# Scale factor turning the nearest-neighbor distance into the default
# adjacency cutoff: neighbors are pairs whose separation stays inside the
# single-well basin after uniform scaling that puts the spacing at the well
# minimum. BASIN_HI / R_STAR is about 1.1087.
DEFAULT_CUTOFF_SCALE = BASIN_HI / R_STAR


class Sublattice(enum.Enum):
    IC = "IC"
    FC = "FC"


@dataclass(frozen=True)
class Site:
    """One lattice position with its shell, sublattice tag, and index."""

    position: Point3
    shell: int
    sublattice: Sublattice
    index: int

    def __post_init__(self):
        if self.shell < 0:
            raise ValueError("shell must be nonnegative")
        if self.index < 0:
            raise ValueError("index must be nonnegative")


class Lattice:
    """An immutable collection of sites with geometric queries.

    Site indices are unique but need not be contiguous: sublattice views
    returned by gen_ic/gen_fc keep the indices they had in the full lattice.
    """

    def __init__(self, sites, shells: int, step: float = STEP_RATIO,
                 nn_distance: float | None = None):
        sites = tuple(sorted(sites, key=lambda s: s.index))
        if not sites:
            raise ValueError("a lattice must contain at least one site")
        indices = [s.index for s in sites]
        if len(set(indices)) != len(indices):
            raise ValueError("site indices must be unique")
        self._sites = sites
        self._shells = int(shells)
        self._step = float(step)
        self._nn = float(nn_distance) if nn_distance is not None else float(step)
        self._indices = np.array(indices, dtype=int)
        pos = np.array([tuple(s.position) for s in sites], dtype=float)
        pos.setflags(write=False)
        self._positions = pos
        self._row_of = {idx: row for row, idx in enumerate(indices)}
        norms = np.linalg.norm(pos, axis=1)
        center_rows = np.flatnonzero(norms < 1e-9)
        self._center_index = int(self._indices[center_rows[0]]) if center_rows.size else None

    @property
    def sites(self) -> tuple[Site, ...]:
        return self._sites

    @property
    def shells(self) -> int:
        return self._shells

    @property
    def step(self) -> float:
        return self._step

    @property
    def nn_distance(self) -> float:
        return self._nn

    @property
    def default_cutoff(self) -> float:
        return DEFAULT_CUTOFF_SCALE * self._nn

    @property
    def center_index(self) -> int | None:
        """Index of the site at the origin, or None when absent."""
        return self._center_index

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    def __len__(self) -> int:
        return len(self._sites)

    def __contains__(self, index: int) -> bool:
        return index in self._row_of

    def site(self, index: int) -> Site:
        try:
            return self._sites[self._row_of[index]]
        except KeyError:
            raise ValueError(f"no site with index {index}") from None

    def positions_of(self, indices) -> np.ndarray:
        """(n, 3) array of positions for the given site indices, in given order."""
        rows = []
        for i in indices:
            row = self._row_of.get(i)
            if row is None:
                raise ValueError(f"no site with index {i}")
            rows.append(row)
        return np.array(self._positions[rows])

    def positions(self) -> np.ndarray:
        """Read-only (N, 3) array of all site positions, index-ascending."""
        return self._positions

    def neighbors(self, index: int, cutoff: float | None = None) -> list[int]:
        """Indices of sites within cutoff of the given site, itself excluded, sorted."""
        if cutoff is None:
            cutoff = self.default_cutoff
        if cutoff <= 0:
            raise ValueError("cutoff must be positive")
        row = self._row_of.get(index)
        if row is None:
            raise ValueError(f"no site with index {index}")
        d = np.linalg.norm(self._positions - self._positions[row], axis=1)
        hit = np.flatnonzero(d <= cutoff)
        return [int(self._indices[r]) for r in hit if r != row]

    def locate(self, p, tol: float) -> int | None:
        """Index of the unique site within tol of point p, or None when absent.

        Raises AmbiguousSiteError when two sites fall within tol of p.
        """
        if tol <= 0:
            raise ValueError("tol must be positive")
        q = np.asarray(tuple(p), dtype=float)
        d = np.linalg.norm(self._positions - q, axis=1)
        order = np.argsort(d)
        if d[order[0]] > tol:
            return None
        if order.size > 1 and d[order[1]] <= tol:
            raise AmbiguousSiteError(
                f"point matches sites {int(self._indices[order[0]])} and "
                f"{int(self._indices[order[1]])} within {tol:.3g}"
            )
        return int(self._indices[order[0]])


@lru_cache(maxsize=8)
def _shell_positions(k: int) -> tuple[np.ndarray, np.ndarray]:
    """(IC, FC) position arrays of shell k, in lattice units of one step."""
    verts = icosahedron_vertices()
    ic: list[np.ndarray] = [k * verts[i] for i in range(12)]
    for i, j in icosahedron_edges():
        for t in range(1, k):
            ic.append((k - t) * verts[i] + t * verts[j])
    fc: list[np.ndarray] = []
    for i, j, l in icosahedron_faces():
        vi, vj, vl = verts[i], verts[j], verts[l]
        for a in range(1, k - 1):
            for b in range(1, k - a):
                ic.append((k - a - b) * vi + a * vj + b * vl)
        for a in range(k - 1):
            for b in range(k - 1 - a):
                fc.append((k - a - b - 4.0 / 3.0) * vi + (a + 2.0 / 3.0) * vj
                          + (b + 2.0 / 3.0) * vl)
    if len(ic) != 10 * k * k + 2:
        raise RuntimeError(f"shell {k}: built {len(ic)} IC sites, expected {10 * k * k + 2}")
    if len(fc) != 10 * k * (k - 1):
        raise RuntimeError(f"shell {k}: built {len(fc)} FC sites, expected {10 * k * (k - 1)}")
    return _snap(np.array(ic)), _snap(np.array(fc)) if fc else np.empty((0, 3))


def _sorted_rows(block: np.ndarray) -> np.ndarray:
    keys = [cylindrical_key(row).as_tuple() for row in block]
    order = sorted(range(len(keys)), key=keys.__getitem__)
    return block[order]


def _validate_shells(shells: int) -> int:
    if not isinstance(shells, (int, np.integer)) or isinstance(shells, bool):
        raise ValueError("shells must be an integer")
    if shells < 1:
        raise ValueError("shells must be at least 1")
    return int(shells)


def gen_if(shells: int) -> Lattice:
    """The full IF lattice out to the given number of shells."""
    shells = _validate_shells(shells)
    sites = [Site(Point3(0.0, 0.0, 0.0), 0, Sublattice.IC, 0)]
    idx = 1
    for k in range(1, shells + 1):
        ic, fc = _shell_positions(k)
        for row in _sorted_rows(ic * STEP_RATIO):
            sites.append(Site(Point3(*row), k, Sublattice.IC, idx))
            idx += 1
        if fc.size:
            for row in _sorted_rows(fc * STEP_RATIO):
                sites.append(Site(Point3(*row), k, Sublattice.FC, idx))
                idx += 1
    return Lattice(sites, shells)


def gen_ic(shells: int) -> Lattice:
    """The IC sublattice view; sites keep their gen_if indices."""
    full = gen_if(shells)
    return Lattice([s for s in full.sites if s.sublattice is Sublattice.IC], shells)


def gen_fc(shells: int) -> Lattice:
    """The FC sublattice view; sites keep their gen_if indices."""
    full = gen_if(shells)
    picked = [s for s in full.sites if s.sublattice is Sublattice.FC]
    if not picked:
        raise ValueError("the FC sublattice is empty below two shells")
    return Lattice(picked, shells)


def shells_enclosing(radius: float) -> int:
    """Smallest shell count whose circumradius covers `radius`, plus one.

    Commands that need a lattice around an input cluster use this so the
    frontier beyond the outermost occupied shell is always present.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    return max(1, math.ceil(radius / STEP_RATIO - 1e-9)) + 1
