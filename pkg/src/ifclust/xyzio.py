"""Reading and writing clusters as XYZ text files.

Layout: an atom count line, one free-form comment line, then one atom per
line as ``<symbol> <x> <y> <z>``. Coordinates are written with twelve
decimals. Writers put ``E=<energy> source=<tag>`` on the comment line, and
the lattice writer appends ``shell=<k> sub=<IC|FC> idx=<i>`` to each atom
line; readers ignore everything past the coordinates, so annotated files
read back fine.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import XyzParseError
from .geometry import Cluster
from .lattice import Lattice


def format_comment(energy: float | None = None, source: str | None = None) -> str:
    parts = []
    if energy is not None:
        parts.append(f"E={float(energy)!r}")
    if source:
        parts.append(f"source={source}")
    return " ".join(parts)


def _atom_line(symbol: str, row: np.ndarray) -> str:
    return f"{symbol} {row[0]:.12f} {row[1]:.12f} {row[2]:.12f}"


def write_xyz(
    path: str | os.PathLike,
    cluster: Cluster,
    energy: float | None = None,
    source: str | None = None,
    symbol: str = "X",
) -> None:
    """Write a cluster; the comment line records energy and producing command."""
    lines = [str(cluster.n), format_comment(energy, source)]
    lines.extend(_atom_line(symbol, row) for row in cluster.coords)
    Path(path).write_text("\n".join(lines) + "\n")


def write_xyz_extended(
    path: str | os.PathLike,
    cluster: Cluster,
    vectors: np.ndarray,
    energy: float | None = None,
    source: str | None = None,
    symbol: str = "X",
) -> None:
    """Write a cluster with one extra 3-vector per atom (six data columns).

    ``vectors`` must have one row per atom; rows land after the coordinates
    as ``<gx> <gy> <gz>``.
    """
    vectors = np.asarray(vectors, dtype=float).reshape(-1, 3)
    if vectors.shape[0] != cluster.n:
        raise ValueError(
            f"need one vector per atom: {vectors.shape[0]} vectors for {cluster.n} atoms"
        )
    lines = [str(cluster.n), format_comment(energy, source)]
    for row, vec in zip(cluster.coords, vectors):
        lines.append(_atom_line(symbol, row) + f" {vec[0]:.12f} {vec[1]:.12f} {vec[2]:.12f}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_lattice_xyz(
    path: str | os.PathLike,
    lattice: Lattice,
    source: str | None = None,
    symbol: str = "X",
) -> None:
    """Write every lattice site, annotated with shell, sublattice, and index."""
    lines = [str(len(lattice.sites)), format_comment(None, source)]
    for site in lattice.sites:
        row = np.asarray(tuple(site.position))
        lines.append(
            _atom_line(symbol, row)
            + f" shell={site.shell} sub={site.sublattice.value} idx={site.index}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_xyz(path: str | os.PathLike) -> tuple[Cluster, str]:
    """Read an XYZ file back as an unlabeled cluster plus its comment line.

    Raises XyzParseError, with the offending path and line number, on a bad
    count, too few atom lines, short atom lines, or unparsable coordinates.
    Tokens after the coordinates and trailing blank lines are ignored.
    """
    path = Path(path)
    lines = path.read_text().split("\n")
    if not lines or lines[0].strip() == "":
        raise XyzParseError(path, 1, "missing atom count")
    try:
        count = int(lines[0].strip())
    except ValueError:
        raise XyzParseError(path, 1, f"atom count must be an integer, got {lines[0]!r}") from None
    if count < 1:
        raise XyzParseError(path, 1, "atom count must be positive")
    if len(lines) < count + 2:
        raise XyzParseError(path, len(lines), f"expected {count} atom lines, file is shorter")
    comment = lines[1]
    coords = np.empty((count, 3))
    for i in range(count):
        lineno = i + 3
        tokens = lines[i + 2].split()
        if len(tokens) < 4:
            raise XyzParseError(path, lineno, "expected '<symbol> <x> <y> <z>'")
        try:
            coords[i] = [float(t) for t in tokens[1:4]]
        except ValueError:
            raise XyzParseError(path, lineno, "coordinates must be numbers") from None
        if not np.isfinite(coords[i]).all():
            raise XyzParseError(path, lineno, "coordinates must be finite")
    for extra, line in enumerate(lines[count + 2:]):
        if line.strip() != "":
            raise XyzParseError(path, count + 3 + extra, "unexpected content after the atoms")
    return Cluster(coords), comment
