"""Delta-compressed cluster catalogs and their text format.

A catalog stores one cluster per size n over a shared site table, recorded as
differences against the next larger cluster: the sites switched on and the
sites switched off. The largest entry is the seed and carries its full
membership. Reading entry n means starting from the seed and applying the
deltas downward, which keeps the file small because consecutive optimal
clusters overlap almost completely.

File format (MIFCAT version 1, strict line layout, '-' marks an absent
field)::

    MIFCAT 1
    sites <count>
    <index> <x> <y> <z>            one line per site, index ascending from 0
    entries <n_min> <n_max>
    n=<n> on=<i,...|-> off=<i,...|-> type=<1|2|3|5|-> e_init=<v|-> e_min=<v|-> adj=<k|->

Entry lines run from n_max down to n_min in steps of one. Site coordinates
are written with at least twelve significant digits and exact round-trip
precision; energies are written in shortest exact form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .errors import CatalogIntegrityError, CatalogSyntaxError, SymmetryViolationError
from .geometry import Cluster, Point3, Rotation, cylindrical_key
from .lattice import STEP_RATIO, Lattice, Site, Sublattice
from .minimize import RelaxOptions, RelaxResult, relax
from .ops import GeometricType, IndexCluster, adj_count
from .potentials import PairPotential, cluster_energy

# Recorded energies are checked against recomputed ones at this tolerance.
VERIFY_TOL = 1e-4

# Rotated sites must land back on lattice sites within this tolerance.
ALIGN_LOCATE_TOL = 1e-6

_ENTRY_KEYS = ("n", "on", "off", "type", "e_init", "e_min", "adj")


@dataclass(frozen=True)
class CatalogEntry:
    """One catalog line: the delta from size n+1 down to size n."""

    n: int
    on_indices: tuple[int, ...]
    off_indices: tuple[int, ...]
    type: GeometricType | None = None
    e_init: float | None = None
    e_min: float | None = None
    adj: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("entry size must be at least 2")
        for name, seq in (("on", self.on_indices), ("off", self.off_indices)):
            if len(set(seq)) != len(seq):
                raise ValueError(f"{name} indices must be distinct")
            if any(i < 0 for i in seq):
                raise ValueError(f"{name} indices must be nonnegative")
        if set(self.on_indices) & set(self.off_indices):
            raise ValueError("on and off indices must be disjoint")
        if self.adj is not None and self.adj < 0:
            raise ValueError("adj must be nonnegative")


class Catalog:
    """An in-memory catalog: a site table plus entries for n_min..n_max."""

    def __init__(self, site_table: np.ndarray, entries: Iterable[CatalogEntry]):
        table = np.array(site_table, dtype=float)
        if table.ndim != 2 or table.shape[1] != 3 or table.shape[0] == 0:
            raise ValueError("site_table must be a nonempty (M, 3) array")
        if not np.isfinite(table).all():
            raise ValueError("site_table must be finite")
        table.setflags(write=False)
        self._table = table
        self._entries = {e.n: e for e in entries}
        if not self._entries:
            raise CatalogIntegrityError("a catalog needs at least one entry (no seed)")
        self._n_max = max(self._entries)
        self._n_min = min(self._entries)
        self._lattice: Lattice | None = None
        self._validate()

    @property
    def site_table(self) -> np.ndarray:
        return self._table

    @property
    def n_max(self) -> int:
        return self._n_max

    @property
    def n_min(self) -> int:
        return self._n_min

    @property
    def entries(self) -> dict[int, CatalogEntry]:
        return dict(self._entries)

    def entry(self, n: int) -> CatalogEntry:
        e = self._entries.get(n)
        if e is None:
            raise CatalogIntegrityError(f"catalog has no entry for n={n}")
        return e

    def with_entry(self, entry: CatalogEntry) -> "Catalog":
        """A copy with one entry replaced (same n range)."""
        if entry.n not in self._entries:
            raise ValueError(f"catalog has no entry for n={entry.n}")
        items = dict(self._entries)
        items[entry.n] = entry
        return Catalog(self._table, items.values())

    @property
    def lattice(self) -> Lattice:
        """Positional lattice view of the site table.

        Reconstruction happens over the dense site table, which records
        positions only; sites here carry an IC placeholder tag and a shell
        guessed from the radius. Structural types of catalog clusters come
        from the stored entries, not from reclassifying this view.
        """
        if self._lattice is None:
            sites = [
                Site(Point3(*row), max(0, round(float(np.linalg.norm(row)) / STEP_RATIO)),
                     Sublattice.IC, i)
                for i, row in enumerate(self._table)
            ]
            shells = max(s.shell for s in sites)
            self._lattice = Lattice(sites, max(1, shells), STEP_RATIO, STEP_RATIO)
        return self._lattice

    def _validate(self) -> None:
        count = self._table.shape[0]
        for n in range(self._n_min, self._n_max + 1):
            if n not in self._entries:
                raise CatalogIntegrityError(f"catalog is missing the entry for n={n}")
        for e in self._entries.values():
            for i in (*e.on_indices, *e.off_indices):
                if i >= count:
                    raise CatalogIntegrityError(
                        f"entry n={e.n} references site {i} outside the table of {count}"
                    )
            if e.adj is not None and e.adj != len(e.on_indices) + len(e.off_indices):
                raise CatalogIntegrityError(
                    f"entry n={e.n}: adj={e.adj} but on+off = "
                    f"{len(e.on_indices) + len(e.off_indices)}"
                )
        seed = self._entries[self._n_max]
        if seed.off_indices:
            raise CatalogIntegrityError("the seed entry must have no off indices")
        if len(seed.on_indices) != self._n_max:
            raise CatalogIntegrityError(
                f"seed entry lists {len(seed.on_indices)} sites for n={self._n_max}"
            )
        # walk the delta chain once so size mismatches surface at load time
        current = set(seed.on_indices)
        for j in range(self._n_max - 1, self._n_min - 1, -1):
            current = self._apply_delta(current, self._entries[j])

    @staticmethod
    def _apply_delta(current: set[int], e: CatalogEntry) -> set[int]:
        off = set(e.off_indices)
        on = set(e.on_indices)
        if not off <= current:
            raise CatalogIntegrityError(f"entry n={e.n} switches off sites that are not occupied")
        if on & current:
            raise CatalogIntegrityError(f"entry n={e.n} switches on sites that are already occupied")
        out = (current - off) | on
        if len(out) != e.n:
            raise CatalogIntegrityError(
                f"entry n={e.n} reconstructs to {len(out)} sites (size mismatch)"
            )
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Catalog):
            return NotImplemented
        return (
            self._table.shape == other._table.shape
            and bool((self._table == other._table).all())
            and self._entries == other._entries
        )

    def __repr__(self) -> str:
        return f"Catalog(sites={self._table.shape[0]}, n={self._n_min}..{self._n_max})"


@dataclass(frozen=True)
class LookupOutcome:
    """Result of looking a size up in a catalog and relaxing it."""

    result: RelaxResult
    e_init: float
    entry: CatalogEntry
    energy_mismatch: bool


def reconstruct(cat: Catalog, n: int) -> IndexCluster:
    """The cluster of size n, rebuilt from the seed by applying deltas downward."""
    if not (2 <= n <= cat.n_max):
        raise ValueError(f"n must lie in [2, {cat.n_max}], got {n}")
    current = set(cat.entry(cat.n_max).on_indices)
    for j in range(cat.n_max - 1, n - 1, -1):
        current = Catalog._apply_delta(current, cat.entry(j))
    return IndexCluster(cat.lattice, frozenset(current))


def lookup_and_relax(
    cat: Catalog, model: PairPotential, n: int, opts: RelaxOptions | None = None
) -> LookupOutcome:
    """Reconstruct entry n, relax it, and compare against recorded energies.

    A recorded e_init or e_min differing from the recomputed value by more
    than 1e-4 sets the energy_mismatch flag; it is reported, not raised.
    """
    c = reconstruct(cat, n)
    entry = cat.entry(n)
    start = c.to_cluster()
    e_init = cluster_energy(model, start)
    res = relax(model, start, opts)
    mismatch = False
    if entry.e_init is not None and abs(entry.e_init - e_init) > VERIFY_TOL:
        mismatch = True
    if entry.e_min is not None and abs(entry.e_min - res.energy) > VERIFY_TOL:
        mismatch = True
    return LookupOutcome(res, e_init, entry, mismatch)


def build_catalog(clusters: Sequence[IndexCluster]) -> Catalog:
    """Compress a descending chain of clusters into a catalog.

    The chain must decrease in size by exactly one per step, down to at least
    two, with every cluster on the same lattice. The site table is the union
    of all referenced sites, re-indexed densely in ascending original order;
    energies and types are left unset (see with_entry).
    """
    if not clusters:
        raise ValueError("the chain must be nonempty")
    lat = clusters[0].lattice
    sizes = [c.size for c in clusters]
    if sizes[-1] < 2:
        raise ValueError("the chain must stop at size 2 or above")
    for prev, cur in zip(sizes, sizes[1:]):
        if cur != prev - 1:
            raise ValueError(f"chain sizes must descend by one, got {prev} then {cur}")
    for c in clusters:
        if c.lattice is not lat:
            raise ValueError("all chain clusters must share one lattice")

    used = sorted(set().union(*(c.indices for c in clusters)))
    dense = {orig: i for i, orig in enumerate(used)}
    table = lat.positions_of(used)

    entries = [
        CatalogEntry(
            n=sizes[0],
            on_indices=tuple(sorted(dense[i] for i in clusters[0].indices)),
            off_indices=(),
            adj=sizes[0],
        )
    ]
    for bigger, smaller in zip(clusters, clusters[1:]):
        on = tuple(sorted(dense[i] for i in smaller.indices - bigger.indices))
        off = tuple(sorted(dense[i] for i in bigger.indices - smaller.indices))
        entries.append(
            CatalogEntry(n=smaller.size, on_indices=on, off_indices=off, adj=len(on) + len(off))
        )
    return Catalog(table, entries)


def align_min_adj(
    fixed: IndexCluster, movable: IndexCluster, rotations: Sequence[Rotation]
) -> tuple[Rotation, int]:
    """The rotation whose image of `movable` differs least from `fixed`.

    Every rotation must map each movable site back onto some lattice site
    within tolerance, else SymmetryViolationError. Ties keep the earliest
    rotation in the sequence.
    """
    if fixed.lattice is not movable.lattice:
        raise ValueError("both clusters must live on one lattice")
    if not rotations:
        raise ValueError("rotations must be nonempty")
    lat = fixed.lattice
    pos = movable.positions()
    best: tuple[Rotation, int] | None = None
    for rot in rotations:
        mapped = set()
        for row in rot.apply(pos):
            hit = lat.locate(row, ALIGN_LOCATE_TOL)
            if hit is None:
                raise SymmetryViolationError(
                    f"rotation maps a site to ({row[0]:.6g}, {row[1]:.6g}, {row[2]:.6g}), "
                    "which is not a lattice site"
                )
            mapped.add(hit)
        adj = adj_count(fixed, IndexCluster(lat, frozenset(mapped)))
        if best is None or adj < best[1]:
            best = (rot, adj)
    return best


def orient_for_y_axis(
    c: IndexCluster, rotations: Sequence[Rotation]
) -> tuple[Rotation, IndexCluster]:
    """Rotate a cluster so its outermost shell leans on the Y+ semi-axis.

    Among the given rotations, picks the one maximizing how many outermost
    shell members land within 1e-3 rad of the positive Y axis (ties keep the
    earliest rotation), then returns the relocated cluster.
    """
    if not rotations:
        raise ValueError("rotations must be nonempty")
    lat = c.lattice
    outer_shell = max(lat.site(i).shell for i in c.indices)
    outer_pos = lat.positions_of(
        [i for i in c.sorted_indices() if lat.site(i).shell == outer_shell]
    )
    best: tuple[int, Rotation] | None = None
    for rot in rotations:
        count = 0
        for row in rot.apply(outer_pos):
            key = cylindrical_key(row)
            if key.rho > 0 and key.alpha <= 1e-3:
                count += 1
        if best is None or count > best[0]:
            best = (count, rot)
    rot = best[1]
    mapped = set()
    for row in rot.apply(c.positions()):
        hit = lat.locate(row, ALIGN_LOCATE_TOL)
        if hit is None:
            raise SymmetryViolationError("rotation maps a member off the lattice")
        mapped.add(hit)
    return rot, IndexCluster(lat, frozenset(mapped))


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def _fmt_coord(v: float) -> str:
    return np.format_float_positional(v, unique=True, min_digits=12)


def _fmt_index_list(seq: tuple[int, ...]) -> str:
    return ",".join(str(i) for i in seq) if seq else "-"


def _fmt_opt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, GeometricType):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def serialize_catalog(cat: Catalog) -> str:
    """Canonical MIFCAT text for a catalog; parse round-trips it exactly."""
    lines = ["MIFCAT 1", f"sites {cat.site_table.shape[0]}"]
    for i, row in enumerate(cat.site_table):
        lines.append(f"{i} {_fmt_coord(row[0])} {_fmt_coord(row[1])} {_fmt_coord(row[2])}")
    lines.append(f"entries {cat.n_min} {cat.n_max}")
    for n in range(cat.n_max, cat.n_min - 1, -1):
        e = cat.entry(n)
        lines.append(
            f"n={e.n} on={_fmt_index_list(e.on_indices)} off={_fmt_index_list(e.off_indices)} "
            f"type={_fmt_opt(e.type)} e_init={_fmt_opt(e.e_init)} e_min={_fmt_opt(e.e_min)} "
            f"adj={_fmt_opt(e.adj)}"
        )
    return "\n".join(lines) + "\n"


def _parse_int(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise CatalogSyntaxError(lineno, f"{what} must be an integer, got {text!r}") from None


def _parse_float(text: str, lineno: int, what: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise CatalogSyntaxError(lineno, f"{what} must be a number, got {text!r}") from None
    if not math.isfinite(v):
        raise CatalogSyntaxError(lineno, f"{what} must be finite")
    return v


def _parse_index_list(text: str, lineno: int, what: str) -> tuple[int, ...]:
    if text == "-":
        return ()
    if not text:
        raise CatalogSyntaxError(lineno, f"empty {what} list (use '-' for none)")
    return tuple(sorted(_parse_int(tok, lineno, what) for tok in text.split(",")))


def _parse_entry_line(line: str, lineno: int) -> CatalogEntry:
    tokens = line.split(" ")
    if len(tokens) != len(_ENTRY_KEYS):
        raise CatalogSyntaxError(lineno, f"expected {len(_ENTRY_KEYS)} fields, got {len(tokens)}")
    values = {}
    for tok, key in zip(tokens, _ENTRY_KEYS):
        prefix = key + "="
        if not tok.startswith(prefix):
            got = tok.split("=", 1)[0]
            raise CatalogSyntaxError(lineno, f"expected key {key!r}, got {got!r}")
        values[key] = tok[len(prefix):]
    n = _parse_int(values["n"], lineno, "n")
    type_txt = values["type"]
    if type_txt == "-":
        type_ = None
    else:
        code = _parse_int(type_txt, lineno, "type")
        try:
            type_ = GeometricType(code)
        except ValueError:
            raise CatalogSyntaxError(lineno, f"unknown type code {code}") from None
    e_init = None if values["e_init"] == "-" else _parse_float(values["e_init"], lineno, "e_init")
    e_min = None if values["e_min"] == "-" else _parse_float(values["e_min"], lineno, "e_min")
    adj = None if values["adj"] == "-" else _parse_int(values["adj"], lineno, "adj")
    try:
        return CatalogEntry(
            n=n,
            on_indices=_parse_index_list(values["on"], lineno, "on"),
            off_indices=_parse_index_list(values["off"], lineno, "off"),
            type=type_,
            e_init=e_init,
            e_min=e_min,
            adj=adj,
        )
    except ValueError as exc:
        raise CatalogSyntaxError(lineno, str(exc)) from None


def parse_catalog(text: str) -> Catalog:
    """Parse MIFCAT text; strict about layout, keys, and internal consistency."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    pos = 0

    def take(what: str) -> tuple[str, int]:
        nonlocal pos
        if pos >= len(lines):
            raise CatalogSyntaxError(len(lines) + 1, f"unexpected end of file, wanted {what}")
        line, lineno = lines[pos], pos + 1
        pos += 1
        if line == "":
            raise CatalogSyntaxError(lineno, "blank lines are not allowed")
        return line, lineno

    header, lineno = take("the MIFCAT header")
    if header != "MIFCAT 1":
        raise CatalogSyntaxError(lineno, f"expected 'MIFCAT 1', got {header!r}")

    sites_line, lineno = take("the sites count")
    parts = sites_line.split(" ")
    if len(parts) != 2 or parts[0] != "sites":
        raise CatalogSyntaxError(lineno, "expected 'sites <count>'")
    count = _parse_int(parts[1], lineno, "site count")
    if count < 1:
        raise CatalogSyntaxError(lineno, "site count must be positive")

    table = np.empty((count, 3))
    for i in range(count):
        line, lineno = take("a site line")
        toks = line.split(" ")
        if len(toks) != 4:
            raise CatalogSyntaxError(lineno, "expected '<index> <x> <y> <z>'")
        idx = _parse_int(toks[0], lineno, "site index")
        if idx != i:
            raise CatalogSyntaxError(lineno, f"site index {idx} out of order, expected {i}")
        table[i] = [_parse_float(t, lineno, "coordinate") for t in toks[1:]]

    entries_line, lineno = take("the entries header")
    parts = entries_line.split(" ")
    if len(parts) != 3 or parts[0] != "entries":
        raise CatalogSyntaxError(lineno, "expected 'entries <n_min> <n_max>'")
    n_min = _parse_int(parts[1], lineno, "n_min")
    n_max = _parse_int(parts[2], lineno, "n_max")
    if not (2 <= n_min <= n_max):
        raise CatalogSyntaxError(lineno, f"need 2 <= n_min <= n_max, got {n_min}, {n_max}")

    entries = []
    for expected in range(n_max, n_min - 1, -1):
        line, lineno = take(f"the entry for n={expected}")
        entry = _parse_entry_line(line, lineno)
        if entry.n != expected:
            raise CatalogSyntaxError(lineno, f"expected entry n={expected}, got n={entry.n}")
        entries.append(entry)

    if pos != len(lines):
        raise CatalogSyntaxError(pos + 1, "unexpected content after the last entry")
    return Catalog(table, entries)


def load_reference_catalog() -> Catalog:
    """The Lennard-Jones reference catalog shipped with the package (n = 2..20)."""
    text = resources.files("ifclust").joinpath("data/lj_n2_20.mifcat").read_text()
    return parse_catalog(text)
