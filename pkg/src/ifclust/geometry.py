"""Points, clusters, the cylindrical canonical order, and icosahedral rotations.

All coordinates are dimensionless (reduced units, unit well diameter). The
canonical ordering key of a point is the cylindrical triple (rho, alpha, beta):
rho is the distance from the origin, alpha the polar angle measured from the
+Y axis in [0, pi], and beta the azimuth about Y measured from +X toward +Z in
[0, 2*pi). The origin maps to (0, 0, 0), so a central particle always sorts
first. The +Y axis is a five-fold symmetry axis of the icosahedral frame used
throughout the package: two icosahedron vertices sit on the Y axis, the upper
ring of five at azimuths 2*pi*j/5 and the lower ring offset by pi/5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

# Particles closer than this would sit on the divergent wall of any well
# potential, so such inputs are rejected outright.
MIN_SEPARATION = 1e-9

# Components with magnitude below this are rounded to exactly zero when
# positions are produced by trigonometric construction. This keeps the
# azimuth of on-plane points stable instead of flipping between 0 and 2*pi.
_SNAP_TOL = 1e-12


@dataclass(frozen=True)
class Point3:
    """A point in three dimensions."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError(f"coordinates must be finite, got {(self.x, self.y, self.z)}")

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y
        yield self.z

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class CylindricalKey:
    """Canonical ordering key (rho, alpha, beta) of a point."""

    rho: float
    alpha: float
    beta: float

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if not (0.0 <= self.alpha <= math.pi):
            raise ValueError("alpha must lie in [0, pi]")
        if not (0.0 <= self.beta <= 2.0 * math.pi):
            raise ValueError("beta must lie in [0, 2*pi]")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.rho, self.alpha, self.beta)


class Cluster:
    """An ordered, finite collection of particles.

    A cluster may carry per-particle integer labels (typically lattice site
    indices). Labels, when present, are distinct and parallel to the points.
    Instances are immutable; operations return new clusters.
    """

    __slots__ = ("_coords", "_labels")

    def __init__(self, points: Iterable | np.ndarray, labels: Sequence[int] | None = None):
        coords = np.array([tuple(p) for p in points], dtype=float) if not isinstance(
            points, np.ndarray
        ) else np.array(points, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise ValueError(f"expected an (n, 3) point array, got shape {coords.shape}")
        if coords.shape[0] == 0:
            raise ValueError("a cluster must contain at least one particle")
        if not np.isfinite(coords).all():
            raise ValueError("cluster coordinates must be finite")
        _check_separation(coords)
        coords.setflags(write=False)
        self._coords = coords
        if labels is not None:
            labels = tuple(int(v) for v in labels)
            if len(labels) != coords.shape[0]:
                raise ValueError("labels must parallel the points")
            if len(set(labels)) != len(labels):
                raise ValueError("labels must be distinct")
        self._labels = labels

    @property
    def coords(self) -> np.ndarray:
        """Read-only (n, 3) coordinate array."""
        return self._coords

    @property
    def labels(self) -> tuple[int, ...] | None:
        return self._labels

    @property
    def n(self) -> int:
        """Number of particles."""
        return self._coords.shape[0]

    def __len__(self) -> int:
        return self._coords.shape[0]

    def point(self, i: int) -> Point3:
        x, y, z = self._coords[i]
        return Point3(float(x), float(y), float(z))

    def points(self) -> list[Point3]:
        return [self.point(i) for i in range(len(self))]

    def __repr__(self) -> str:
        lbl = "" if self._labels is None else ", labeled"
        return f"Cluster(n={len(self)}{lbl})"


def _check_separation(coords: np.ndarray) -> None:
    n = coords.shape[0]
    if n < 2:
        return
    iu = np.triu_indices(n, 1)
    d = coords[iu[0]] - coords[iu[1]]
    r2 = np.einsum("ij,ij->i", d, d)
    rmin2 = float(r2.min())
    if rmin2 < MIN_SEPARATION * MIN_SEPARATION:
        raise ValueError(
            f"two particles are separated by {math.sqrt(rmin2):.3e}, "
            f"below the minimum {MIN_SEPARATION:.0e}"
        )


def distance(p: Point3 | Sequence[float], q: Point3 | Sequence[float]) -> float:
    """Euclidean distance between two points."""
    a = np.asarray(tuple(p), dtype=float)
    b = np.asarray(tuple(q), dtype=float)
    return float(np.linalg.norm(a - b))


def cylindrical_key(p: Point3 | Sequence[float]) -> CylindricalKey:
    """Canonical ordering key of a point.

    The origin yields (0, 0, 0). Points on the Y axis have beta = 0 by the
    atan2 convention.
    """
    x, y, z = (float(v) for v in p)
    rho = math.sqrt(x * x + y * y + z * z)
    if rho == 0.0:
        return CylindricalKey(0.0, 0.0, 0.0)
    alpha = math.acos(max(-1.0, min(1.0, y / rho)))
    beta = math.atan2(z, x) % (2.0 * math.pi)
    return CylindricalKey(rho, alpha, beta)


def point_from_cylindrical(key: CylindricalKey) -> Point3:
    """Inverse of :func:`cylindrical_key`."""
    sa = math.sin(key.alpha)
    return Point3(
        key.rho * sa * math.cos(key.beta),
        key.rho * math.cos(key.alpha),
        key.rho * sa * math.sin(key.beta),
    )


def canonical_order(c: Cluster) -> Cluster:
    """Return the cluster sorted by (rho, alpha, beta), ties left stable."""
    keys = [cylindrical_key(c.coords[i]).as_tuple() for i in range(len(c))]
    order = sorted(range(len(c)), key=keys.__getitem__)
    labels = None if c.labels is None else [c.labels[i] for i in order]
    return Cluster(c.coords[order], labels)


def center_of_mass(c: Cluster) -> Point3:
    """Unweighted centroid of the cluster."""
    m = c.coords.mean(axis=0)
    return Point3(float(m[0]), float(m[1]), float(m[2]))


@dataclass(frozen=True)
class Rotation:
    """A proper rotation, stored as an orthogonal 3x3 matrix with det +1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("a rotation matrix must be 3x3")
        if np.abs(m @ m.T - np.eye(3)).max() > 1e-12:
            raise ValueError("matrix is not orthogonal to 1e-12")
        if abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise ValueError("matrix determinant must be +1 to 1e-12")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))

    @classmethod
    def about_axis(cls, axis: Sequence[float], angle: float) -> "Rotation":
        """Rotation by `angle` about `axis`, re-orthonormalized after assembly."""
        a = np.asarray(tuple(axis), dtype=float)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            raise ValueError("rotation axis must be nonzero")
        a = a / norm
        k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
        m = np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)
        u, _, vt = np.linalg.svd(m)
        return cls(u @ vt)

    def apply(self, coords: np.ndarray) -> np.ndarray:
        """Rotate an (n, 3) array (or a single point) about the origin."""
        arr = np.asarray(coords, dtype=float)
        return arr @ self.matrix.T

    def compose(self, other: "Rotation") -> "Rotation":
        """The rotation equal to applying `other` first, then this one."""
        return Rotation(self.matrix @ other.matrix)


def rotate(c: Cluster, r: Rotation) -> Cluster:
    """Rotate every point of the cluster about the origin.

    Site labels do not survive a geometric rotation (the points generally no
    longer coincide with their labeled sites), so the result is unlabeled.
    """
    return Cluster(r.apply(c.coords))


# ---------------------------------------------------------------------------
# The icosahedral frame
# ---------------------------------------------------------------------------

def _snap(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out[np.abs(out) < _SNAP_TOL] = 0.0
    return out


@lru_cache(maxsize=1)
def icosahedron_vertices() -> np.ndarray:
    """The 12 unit vertices of the reference icosahedron, poles on the Y axis."""
    s5 = math.sqrt(5.0)
    ring_r = 2.0 / s5
    ring_y = 1.0 / s5
    verts = [(0.0, 1.0, 0.0)]
    for j in range(5):
        phi = 2.0 * math.pi * j / 5.0
        verts.append((ring_r * math.cos(phi), ring_y, ring_r * math.sin(phi)))
    for j in range(5):
        phi = 2.0 * math.pi * (j + 0.5) / 5.0
        verts.append((ring_r * math.cos(phi), -ring_y, ring_r * math.sin(phi)))
    verts.append((0.0, -1.0, 0.0))
    out = _snap(np.array(verts))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=1)
def icosahedron_edges() -> tuple[tuple[int, int], ...]:
    """The 30 vertex index pairs joined by an edge."""
    v = icosahedron_vertices()
    edge_len = 2.0 / math.sqrt((5.0 + math.sqrt(5.0)) / 2.0)  # circumradius 1
    edges = []
    for i in range(12):
        for j in range(i + 1, 12):
            if abs(np.linalg.norm(v[i] - v[j]) - edge_len) < 1e-9:
                edges.append((i, j))
    if len(edges) != 30:
        raise RuntimeError(f"expected 30 edges, found {len(edges)}")
    return tuple(edges)


@lru_cache(maxsize=1)
def icosahedron_faces() -> tuple[tuple[int, int, int], ...]:
    """The 20 vertex index triples forming triangular faces."""
    edges = set(icosahedron_edges())
    faces = []
    for i in range(12):
        for j in range(i + 1, 12):
            if (i, j) not in edges:
                continue
            for k in range(j + 1, 12):
                if (i, k) in edges and (j, k) in edges:
                    faces.append((i, j, k))
    if len(faces) != 20:
        raise RuntimeError(f"expected 20 faces, found {len(faces)}")
    return tuple(faces)


def _unique_axes(candidates: Iterable[np.ndarray]) -> list[np.ndarray]:
    axes: list[np.ndarray] = []
    for c in candidates:
        u = c / np.linalg.norm(c)
        if not any(np.abs(u - a).max() < 1e-9 or np.abs(u + a).max() < 1e-9 for a in axes):
            axes.append(u)
    return axes


def _verify_closure(rotations: Sequence[Rotation]) -> None:
    mats = np.stack([r.matrix for r in rotations])
    for a in range(len(mats)):
        prod = np.einsum("ij,bjk->bik", mats[a], mats)
        # distance from each product to its nearest group element
        diff = np.abs(prod[:, None, :, :] - mats[None, :, :, :]).max(axis=(2, 3))
        worst = diff.min(axis=1).max()
        if worst > 1e-9:
            raise RuntimeError(f"rotation set is not closed under composition ({worst:.2e})")


@lru_cache(maxsize=1)
def icosahedral_rotations() -> tuple[Rotation, ...]:
    """The 60 proper rotations of the reference icosahedron.

    Generated from the vertex geometry (five-fold vertex axes, two-fold edge
    axes, three-fold face axes), orthonormalized, and verified closed under
    composition. The identity is first; the order is otherwise fixed by the
    construction and stable across runs.
    """
    v = icosahedron_vertices()
    rots: list[Rotation] = [Rotation.identity()]
    for axis in _unique_axes(v[i] for i in range(12)):
        for j in range(1, 5):
            rots.append(Rotation.about_axis(axis, 2.0 * math.pi * j / 5.0))
    for axis in _unique_axes(v[i] + v[j] for i, j in icosahedron_edges()):
        rots.append(Rotation.about_axis(axis, math.pi))
    for axis in _unique_axes(v[i] + v[j] + v[k] for i, j, k in icosahedron_faces()):
        for j in range(1, 3):
            rots.append(Rotation.about_axis(axis, 2.0 * math.pi * j / 3.0))
    if len(rots) != 60:
        raise RuntimeError(f"expected 60 rotations, built {len(rots)}")
    _verify_closure(rots)
    return tuple(rots)


@lru_cache(maxsize=1)
def y_axis_rotations() -> tuple[Rotation, ...]:
    """The cyclic five-element subgroup about the Y axis, identity first."""
    return tuple(
        Rotation.about_axis((0.0, 1.0, 0.0), 2.0 * math.pi * j / 5.0) if j else Rotation.identity()
        for j in range(5)
    )
