"""Well pair potentials, cluster energies, gradients, and distance classes.

Every potential is radial and is evaluated in reduced units. The models are

    LennardJones:  u(r) = 4*eps0*((sigma/r)**12 - (sigma/r)**6)
    Morse:         u(r) = (1 - exp(-alpha*(1 - r)))**2 - 1
    Buckingham:    u(r) = alpha*exp(beta*r) + gamma/r**6
    Kihara:        u(r) = 4*eps0*(q**12 + q**6),  q = (1 - gamma)/(r/sigma - gamma)

with first and second radial derivatives available in closed form. The
default Lennard-Jones model (eps0 = sigma = 1) has its minimum at
r* = 2**(1/6) with depth -1, and its basin of single-well curvature is the
open interval (1.0536668, 1.2444551), on which u < -0.78698215 and u'' > 0.
Near r* the energy behaves as u(r* + xi) ~ -1 + K*xi**2 with K = 18*2**(2/3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateGradientError, DomainError
from .geometry import Cluster

R_STAR = 2.0 ** (1.0 / 6.0)
BASIN_LO = 1.0536668
BASIN_HI = 1.2444551
BASIN_ENERGY_BOUND = -0.78698215
SERIES_K = 18.0 * 2.0 ** (2.0 / 3.0)

# Tolerance for the Kihara pole at r/sigma = gamma.
_POLE_TOL = 1e-12


@dataclass(frozen=True)
class LjScalarProperties:
    """Frozen scalar facts about the reduced Lennard-Jones well."""

    r_star: float = R_STAR
    e_at_r_star: float = -1.0
    basin_lo: float = BASIN_LO
    basin_hi: float = BASIN_HI
    basin_energy_bound: float = BASIN_ENERGY_BOUND
    series_k: float = SERIES_K


LJ_SCALARS = LjScalarProperties()


class PairPotential:
    """Base class for radial pair potentials.

    Subclasses provide the unchecked evaluations ``_e``, ``_d1`` and ``_d2``
    (valid for in-domain r, scalar or ndarray) plus ``_check_domain``. The
    public ``energy``/``d1``/``d2`` methods validate their argument.
    """

    def _e(self, r):
        raise NotImplementedError

    def _d1(self, r):
        raise NotImplementedError

    def _d2(self, r):
        raise NotImplementedError

    def _check_domain(self, r: np.ndarray) -> None:
        if np.any(r <= 0.0):
            raise DomainError(f"{type(self).__name__} requires r > 0")

    def _validated(self, r) -> np.ndarray:
        arr = np.asarray(r, dtype=float)
        if not np.isfinite(arr).all():
            raise DomainError("r must be finite")
        self._check_domain(arr)
        return arr

    def energy(self, r):
        """Pair energy at separation r (scalar or array)."""
        out = self._e(self._validated(r))
        return float(out) if np.isscalar(r) or np.ndim(r) == 0 else out

    def d1(self, r):
        """First radial derivative at r."""
        out = self._d1(self._validated(r))
        return float(out) if np.isscalar(r) or np.ndim(r) == 0 else out

    def d2(self, r):
        """Second radial derivative at r."""
        out = self._d2(self._validated(r))
        return float(out) if np.isscalar(r) or np.ndim(r) == 0 else out


@dataclass(frozen=True)
class LennardJones(PairPotential):
    epsilon0: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.epsilon0 <= 0 or self.sigma <= 0:
            raise ValueError("epsilon0 and sigma must be positive")

    def _e(self, r):
        s6 = (self.sigma / r) ** 6
        return 4.0 * self.epsilon0 * (s6 * s6 - s6)

    def _d1(self, r):
        s6 = (self.sigma / r) ** 6
        return 4.0 * self.epsilon0 * (6.0 * s6 - 12.0 * s6 * s6) / r

    def _d2(self, r):
        s6 = (self.sigma / r) ** 6
        return 4.0 * self.epsilon0 * (156.0 * s6 * s6 - 42.0 * s6) / (r * r)


@dataclass(frozen=True)
class Morse(PairPotential):
    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    def _e(self, r):
        u = np.exp(-self.alpha * (1.0 - r))
        return (1.0 - u) ** 2 - 1.0

    def _d1(self, r):
        u = np.exp(-self.alpha * (1.0 - r))
        return -2.0 * self.alpha * u * (1.0 - u)

    def _d2(self, r):
        u = np.exp(-self.alpha * (1.0 - r))
        return -2.0 * self.alpha * self.alpha * u * (1.0 - 2.0 * u)


@dataclass(frozen=True)
class Buckingham(PairPotential):
    alpha: float
    beta: float
    gamma: float

    def _e(self, r):
        return self.alpha * np.exp(self.beta * r) + self.gamma / r**6

    def _d1(self, r):
        return self.alpha * self.beta * np.exp(self.beta * r) - 6.0 * self.gamma / r**7

    def _d2(self, r):
        return self.alpha * self.beta**2 * np.exp(self.beta * r) + 42.0 * self.gamma / r**8


@dataclass(frozen=True)
class Kihara(PairPotential):
    epsilon0: float
    sigma: float
    gamma: float

    def __post_init__(self):
        if self.epsilon0 <= 0 or self.sigma <= 0:
            raise ValueError("epsilon0 and sigma must be positive")

    def _check_domain(self, r: np.ndarray) -> None:
        super()._check_domain(r)
        if np.any(np.abs(r / self.sigma - self.gamma) < _POLE_TOL):
            raise DomainError("Kihara potential evaluated at its pole r/sigma = gamma")

    def _q(self, r):
        return (1.0 - self.gamma) / (r / self.sigma - self.gamma)

    def _e(self, r):
        q6 = self._q(r) ** 6
        return 4.0 * self.epsilon0 * (q6 * q6 + q6)

    def _d1(self, r):
        t = r / self.sigma - self.gamma
        q6 = self._q(r) ** 6
        return -4.0 * self.epsilon0 * (12.0 * q6 * q6 + 6.0 * q6) / (self.sigma * t)

    def _d2(self, r):
        t = r / self.sigma - self.gamma
        q6 = self._q(r) ** 6
        return 4.0 * self.epsilon0 * (156.0 * q6 * q6 + 42.0 * q6) / (self.sigma * t) ** 2


PotentialModel = PairPotential  # alias for annotations


def pair_energy(model: PairPotential, r) -> float:
    """Pair energy at separation r."""
    return model.energy(r)


def pair_energy_d1(model: PairPotential, r) -> float:
    """First derivative of the pair energy at r."""
    return model.d1(r)


def pair_energy_d2(model: PairPotential, r) -> float:
    """Second derivative of the pair energy at r."""
    return model.d2(r)


# ---------------------------------------------------------------------------
# Cluster sums
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _pair_indices(n: int):
    return np.triu_indices(n, 1)


def _pair_vectors(coords: np.ndarray):
    iu = _pair_indices(coords.shape[0])
    d = coords[iu[0]] - coords[iu[1]]
    r = np.sqrt(np.einsum("ij,ij->i", d, d))
    return iu, d, r


def _require_cluster(c: Cluster) -> np.ndarray:
    if len(c) < 2:
        raise ValueError("cluster sums need at least two particles")
    return c.coords


def cluster_energy(model: PairPotential, c: Cluster) -> float:
    """Total energy, the sum of the pair energy over all unordered pairs."""
    coords = _require_cluster(c)
    _, _, r = _pair_vectors(coords)
    model._check_domain(r)
    return float(model._e(r).sum())


def cluster_gradient(model: PairPotential, c: Cluster) -> np.ndarray:
    """Flat gradient (3n,) of the cluster energy with respect to coordinates."""
    coords = _require_cluster(c)
    iu, d, r = _pair_vectors(coords)
    model._check_domain(r)
    w = model._d1(r) / r
    f = w[:, None] * d
    g = np.zeros_like(coords)
    np.add.at(g, iu[0], f)
    np.add.at(g, iu[1], -f)
    return g.reshape(-1)


def normalized_gradient(model: PairPotential, c: Cluster) -> np.ndarray:
    """Unit-length gradient direction.

    Raises DegenerateGradientError when the gradient norm is at or below
    1e-14, where no direction is defined.
    """
    g = cluster_gradient(model, c)
    norm = float(np.linalg.norm(g))
    if norm <= 1e-14:
        raise DegenerateGradientError(f"gradient norm {norm:.3e} defines no direction")
    return g / norm


def _raw_energy(model: PairPotential, coords: np.ndarray) -> float:
    """Unchecked energy for optimizer internals; may return inf or nan."""
    _, _, r = _pair_vectors(coords)
    if np.any(r <= 0.0):
        return math.inf
    with np.errstate(all="ignore"):
        return float(model._e(r).sum())


def _raw_energy_gradient(model: PairPotential, coords: np.ndarray):
    """Unchecked (energy, flat gradient) for optimizer internals."""
    iu, d, r = _pair_vectors(coords)
    if np.any(r <= 0.0):
        return math.inf, np.full(coords.size, math.nan)
    with np.errstate(all="ignore"):
        e = float(model._e(r).sum())
        w = model._d1(r) / r
        f = w[:, None] * d
    g = np.zeros_like(coords)
    np.add.at(g, iu[0], f)
    np.add.at(g, iu[1], -f)
    return e, g.reshape(-1)


# ---------------------------------------------------------------------------
# Distance classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceClass:
    """A group of equal pair distances: one representative and how often it occurs."""

    representative: float
    multiplicity: int

    def __post_init__(self):
        if self.representative <= 0:
            raise ValueError("representative distance must be positive")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be at least 1")


def distance_classes(c: Cluster, tol: float = 1e-6) -> list[DistanceClass]:
    """Group the pair distances of a cluster into classes separated by more than tol.

    Distances are sorted and split wherever consecutive values differ by more
    than tol; each class is represented by the mean of its members, which does
    not depend on particle order. Multiplicities sum to n*(n-1)/2.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    coords = _require_cluster(c)
    _, _, r = _pair_vectors(coords)
    rs = np.sort(r)
    cuts = np.flatnonzero(np.diff(rs) > tol)
    groups = np.split(rs, cuts + 1)
    return [DistanceClass(float(g.mean()), int(g.size)) for g in groups]


def classed_energy(model: PairPotential, classes: list[DistanceClass]) -> float:
    """Energy evaluated once per distance class, weighted by multiplicity."""
    if not classes:
        raise ValueError("classes must be nonempty")
    return float(sum(k.multiplicity * model.energy(k.representative) for k in classes))
