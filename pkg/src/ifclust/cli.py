"""Command line front end.

Subcommands: lattice, relax, gradient, peel, classify, and catalog with the
build/lookup/verify actions. Exit codes: 0 on success, 1 when a verification
found a mismatch, 2 on usage errors, 3 on unreadable or inconsistent input,
4 on numeric breakdown.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .catalog import (
    Catalog,
    CatalogEntry,
    build_catalog,
    load_reference_catalog,
    lookup_and_relax,
    parse_catalog,
    reconstruct,
    serialize_catalog,
)
from .errors import (
    AmbiguousSiteError,
    CatalogError,
    DegenerateGradientError,
    DomainError,
    FrontierExhaustedError,
    NumericBreakdownError,
    OffLatticeError,
    XyzParseError,
    ZeroEnergyError,
)
from .geometry import Cluster
from .lattice import Lattice, gen_if, shells_enclosing
from .minimize import RelaxOptions, relax
from .ops import (
    IndexCluster,
    classify,
    peel_backward,
    peel_forward,
    peel_itself,
)
from .potentials import (
    Buckingham,
    Kihara,
    LennardJones,
    Morse,
    PairPotential,
    cluster_energy,
    cluster_gradient,
    normalized_gradient,
)
from .xyzio import read_xyz, write_lattice_xyz, write_xyz, write_xyz_extended

# Tolerance for matching input atoms to lattice sites: generous, but well
# under half the minimum site separation, so a match is never ambiguous.
LOCATE_SCALE = 0.3


class CliInputError(Exception):
    """A readable file whose content cannot be used as requested."""


def _add_potential_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("potential")
    g.add_argument("--potential", choices=("lj", "morse", "bu", "ki"), default="lj",
                   help="pair potential model (default lj)")
    g.add_argument("--eps", type=float, default=1.0, help="well depth (lj, ki)")
    g.add_argument("--sigma", type=float, default=1.0, help="length scale (lj, ki)")
    g.add_argument("--alpha", type=float, default=6.0, help="stiffness (morse) or prefactor (bu)")
    g.add_argument("--beta", type=float, default=1.0, help="exponential rate (bu)")
    g.add_argument("--gamma", type=float, default=0.0, help="core shift (ki) or r^-6 weight (bu)")


def _add_relax_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("relaxation")
    g.add_argument("--grad-tol", type=float, default=1e-8,
                   help="gradient norm target (default 1e-8)")
    g.add_argument("--max-iters", type=int, default=None,
                   help="iteration cap (default 200 per coordinate)")


def _model(args) -> PairPotential:
    if args.potential == "lj":
        return LennardJones(args.eps, args.sigma)
    if args.potential == "morse":
        return Morse(args.alpha)
    if args.potential == "bu":
        return Buckingham(args.alpha, args.beta, args.gamma)
    return Kihara(args.eps, args.sigma, args.gamma)


def _opts(args) -> RelaxOptions:
    return RelaxOptions(grad_tol=args.grad_tol, max_iters=args.max_iters)


def _read_cluster(path) -> tuple[Cluster, str]:
    try:
        return read_xyz(path)
    except XyzParseError:
        raise
    except (OSError, ValueError) as exc:
        raise CliInputError(f"{path}: {exc}") from None


def _auto_lattice(coords: np.ndarray, shells: int | None) -> Lattice:
    if shells is None:
        shells = shells_enclosing(float(np.linalg.norm(coords, axis=1).max()))
    return gen_if(shells)


def _locate_rows(lat: Lattice, coords: np.ndarray) -> list[int]:
    tol = LOCATE_SCALE * lat.nn_distance
    rows = []
    for row in coords:
        hit = lat.locate(row, tol)
        if hit is None:
            raise OffLatticeError(row, tol)
        rows.append(hit)
    if len(set(rows)) != len(rows):
        raise CliInputError("two input atoms map to the same lattice site")
    return rows


def _on_lattice(lat: Lattice, coords: np.ndarray) -> IndexCluster:
    return IndexCluster(lat, frozenset(_locate_rows(lat, coords)))


def _write_raw_xyz(path, coords, comment: str) -> None:
    # bypasses Cluster so even collapsed geometries can be saved for inspection
    lines = [str(len(coords)), comment]
    lines.extend(f"X {r[0]:.12f} {r[1]:.12f} {r[2]:.12f}" for r in coords)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _perturbed(cluster: Cluster, amplitude: float, seed: int) -> Cluster:
    rng = np.random.default_rng(seed)
    jitter = rng.uniform(-amplitude, amplitude, cluster.coords.shape)
    return Cluster(cluster.coords + jitter, cluster.labels)


def cmd_lattice(args) -> int:
    lat = gen_if(args.shells)
    ic = sum(1 for s in lat.sites if s.sublattice.value == "IC")
    fc = len(lat.sites) - ic
    print(f"shells={lat.shells} sites={len(lat.sites)} ic={ic} fc={fc} "
          f"step={lat.step} nn={lat.nn_distance} cutoff={lat.default_cutoff:.8f}")
    by_shell: dict[int, list[int]] = {}
    for s in lat.sites:
        rec = by_shell.setdefault(s.shell, [0, 0])
        rec[0 if s.sublattice.value == "IC" else 1] += 1
    for k in sorted(by_shell):
        sic, sfc = by_shell[k]
        print(f"shell={k} ic={sic} fc={sfc}")
    if args.out:
        write_lattice_xyz(args.out, lat, source=f"lattice --shells {args.shells}")
        print(f"wrote {args.out}")
    return 0


def cmd_relax(args) -> int:
    cluster, _ = _read_cluster(args.infile)
    if args.perturb:
        cluster = _perturbed(cluster, args.perturb, args.seed)
    model = _model(args)
    e_init = cluster_energy(model, cluster)
    trace = None
    if args.verbose:
        def trace(it, energy, grad_norm, step):
            print(f"{it} {energy!r} {grad_norm:.6e} {step:.6e}")
    try:
        res = relax(model, cluster, _opts(args), trace=trace)
    except NumericBreakdownError as exc:
        if args.out and exc.last_coords is not None:
            _write_raw_xyz(args.out, exc.last_coords,
                           "source=relax (numeric breakdown, last good iterate)")
            print(f"wrote {args.out} (last good iterate)", file=sys.stderr)
        raise
    print(f"n={cluster.n} E_init={e_init!r} E_min={res.energy!r} "
          f"|g|={res.grad_norm:.3e} iters={res.iterations} "
          f"converged={'true' if res.converged else 'false'}")
    if args.out:
        write_xyz(args.out, res.cluster, energy=res.energy, source="relax")
        print(f"wrote {args.out}")
    return 0


def cmd_gradient(args) -> int:
    cluster, _ = _read_cluster(args.infile)
    model = _model(args)
    e = cluster_energy(model, cluster)
    norm = float(np.linalg.norm(cluster_gradient(model, cluster)))
    try:
        vectors = normalized_gradient(model, cluster).reshape(-1, 3)
    except DegenerateGradientError:
        vectors = np.zeros((cluster.n, 3))
        print("warning: gradient vanishes, writing zero vectors", file=sys.stderr)
    print(f"n={cluster.n} E={e!r} |g|={norm:.6e}")
    write_xyz_extended(args.out, cluster, vectors, energy=e, source="gradient")
    print(f"wrote {args.out}")
    return 0


def _peel_input(args) -> tuple[IndexCluster, Cluster | None]:
    if args.sites is not None:
        if args.shells is None:
            raise CliInputError("--sites requires --shells to size the lattice")
        try:
            indices = frozenset(int(t) for t in args.sites.split(","))
        except ValueError:
            raise CliInputError(f"--sites must be a comma list of integers, got {args.sites!r}") \
                from None
        lat = gen_if(args.shells)
        try:
            return IndexCluster(lat, indices), None
        except ValueError as exc:
            raise CliInputError(str(exc)) from None
    cluster, _ = _read_cluster(args.infile)
    lat = _auto_lattice(cluster.coords, args.shells)
    rows = _locate_rows(lat, cluster.coords)
    return IndexCluster(lat, frozenset(rows)), Cluster(cluster.coords, rows)


def _seed_energy(model, c: IndexCluster, geom: Cluster | None, before: frozenset[int]) -> float:
    """Energy of the configuration the winning candidate was relaxed from.

    Members kept from the previous step sit at their previous coordinates;
    everything else (new sites, or all members when no geometry is carried)
    sits at its lattice position.
    """
    have = {}
    if geom is not None and geom.labels is not None:
        have = {lbl: geom.coords[row] for row, lbl in enumerate(geom.labels)}
    labels = c.sorted_indices()
    rows = [have[i] if i in before and i in have else c.lattice.positions_of([i])[0]
            for i in labels]
    return cluster_energy(model, Cluster(np.asarray(rows), labels))


def _step_path(out, step: int, n: int) -> str:
    base = str(out)
    if base.endswith(".xyz"):
        base = base[:-4]
    return f"{base}_step{step:03d}_n{n}.xyz"


def cmd_peel(args) -> int:
    c, geom = _peel_input(args)
    model = _model(args)
    opts = _opts(args)
    op = {"forward": peel_forward, "backward": peel_backward, "itself": peel_itself}[args.direction]
    print("n E_init E_min adj type")
    for step in range(1, args.steps + 1):
        before = c.indices
        try:
            c, res = op(model, c, opts, coords=geom)
        except FrontierExhaustedError as exc:
            print(f"stopped after {step - 1} of {args.steps} steps: {exc}", file=sys.stderr)
            break
        except ValueError as exc:
            raise CliInputError(str(exc)) from None
        e_init = _seed_energy(model, c, geom, before)
        kind = classify(c, res.cluster)
        geom = res.cluster
        print(f"{c.size} {e_init:.6f} {res.energy:.6f} {len(before ^ c.indices)} {int(kind)}")
        if args.out:
            path = _step_path(args.out, step, c.size)
            write_xyz(path, res.cluster, energy=res.energy,
                      source=f"peel --direction {args.direction} step {step}")
            print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_classify(args) -> int:
    cluster, _ = _read_cluster(args.infile)
    lat = _auto_lattice(cluster.coords, args.shells)
    c = _on_lattice(lat, cluster.coords)
    model = _model(args)
    res = relax(model, c.to_cluster(), _opts(args))
    kind = classify(c, res.cluster)
    print(f"n={c.size} type={kind.name} code={int(kind)} e_min={res.energy!r}")
    return 0


def _load_catalog(path) -> Catalog:
    if path is None:
        return load_reference_catalog()
    try:
        text = open(path).read()
    except OSError as exc:
        raise CliInputError(str(exc)) from None
    return parse_catalog(text)


def cmd_catalog_lookup(args) -> int:
    cat = _load_catalog(args.catalog)
    model = _model(args)
    try:
        out = lookup_and_relax(cat, model, args.n, _opts(args))
    except ValueError as exc:
        raise CliInputError(str(exc)) from None
    e = out.entry
    print(f"n={args.n} e_init={out.e_init!r} e_min={out.result.energy!r} "
          f"recorded_e_min={'-' if e.e_min is None else repr(e.e_min)} "
          f"type={'-' if e.type is None else e.type.name} "
          f"mismatch={'yes' if out.energy_mismatch else 'no'}")
    if args.out:
        write_xyz(args.out, out.result.cluster, energy=out.result.energy,
                  source=f"catalog lookup --n {args.n}")
        print(f"wrote {args.out}")
    return 1 if out.energy_mismatch else 0


def cmd_catalog_verify(args) -> int:
    cat = _load_catalog(args.catalog)
    model = _model(args)
    bad = 0
    for n in range(cat.n_max, cat.n_min - 1, -1):
        out = lookup_and_relax(cat, model, n, _opts(args))
        status = "mismatch" if out.energy_mismatch else "ok"
        bad += out.energy_mismatch
        print(f"n={n} e_init={out.e_init!r} e_min={out.result.energy!r} {status}")
    print(f"verified {cat.n_max - cat.n_min + 1} entries, {bad} mismatched")
    return 1 if bad else 0


def cmd_catalog_build(args) -> int:
    clusters = []
    coords_list = []
    for path in args.infiles:
        cluster, _ = _read_cluster(path)
        coords_list.append(cluster.coords)
    radius = max(float(np.linalg.norm(c, axis=1).max()) for c in coords_list)
    lat = gen_if(args.shells if args.shells is not None else shells_enclosing(radius))
    for path, coords in zip(args.infiles, coords_list):
        clusters.append(_on_lattice(lat, coords))
    try:
        cat = build_catalog(clusters)
    except ValueError as exc:
        raise CliInputError(str(exc)) from None
    model = _model(args)
    opts = _opts(args)
    for ic in clusters:
        start = ic.to_cluster()
        e_init = cluster_energy(model, start)
        res = relax(model, start, opts)
        kind = classify(ic, res.cluster)
        entry = cat.entry(ic.size)
        cat = cat.with_entry(CatalogEntry(
            n=entry.n, on_indices=entry.on_indices, off_indices=entry.off_indices,
            type=kind, e_init=e_init, e_min=res.energy, adj=entry.adj,
        ))
    text = serialize_catalog(cat)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({cat.n_min}..{cat.n_max})")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifclust",
        description="Search and organize optimal particle clusters on an icosahedral lattice.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="generate lattice sites")
    p.add_argument("--shells", type=int, required=True, help="number of shells")
    p.add_argument("--out", help="write annotated XYZ here")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("relax", help="minimize a cluster from an XYZ file")
    p.add_argument("--in", dest="infile", required=True, help="input XYZ file")
    p.add_argument("--perturb", type=float, default=0.0,
                   help="uniform jitter amplitude applied before relaxing")
    p.add_argument("--seed", type=int, default=0, help="jitter seed (default 0)")
    p.add_argument("--out", help="write the relaxed cluster here")
    p.add_argument("--verbose", action="store_true",
                   help="print an iteration trace: iter energy grad_norm step")
    _add_potential_args(p)
    _add_relax_args(p)
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("gradient", help="write the normalized gradient as extended XYZ")
    p.add_argument("--in", dest="infile", required=True, help="input XYZ file")
    p.add_argument("--out", required=True, help="output extended XYZ (x y z gx gy gz)")
    _add_potential_args(p)
    p.set_defaults(func=cmd_gradient)

    p = sub.add_parser("peel", help="grow, shrink, or swap one site at a time")
    p.add_argument("--in", dest="infile", help="input XYZ file on lattice sites")
    p.add_argument("--sites", help="comma list of occupied site indices instead of --in")
    p.add_argument("--shells", type=int, help="lattice size (auto from --in when omitted)")
    p.add_argument("--direction", choices=("forward", "backward", "itself"), required=True)
    p.add_argument("--steps", type=int, default=1, help="how many moves to apply")
    p.add_argument("--out", help="path prefix: one XYZ is written per completed step")
    _add_potential_args(p)
    _add_relax_args(p)
    p.set_defaults(func=cmd_peel)

    p = sub.add_parser("classify", help="structural family of a lattice cluster")
    p.add_argument("--in", dest="infile", required=True, help="input XYZ file on lattice sites")
    p.add_argument("--shells", type=int, help="lattice size (auto when omitted)")
    _add_potential_args(p)
    _add_relax_args(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("catalog", help="catalog file operations")
    csub = p.add_subparsers(dest="action", required=True)

    q = csub.add_parser("lookup", help="reconstruct one size and relax it")
    q.add_argument("--catalog", help="catalog file (bundled reference when omitted)")
    q.add_argument("--n", type=int, required=True, help="cluster size to reconstruct")
    q.add_argument("--out", help="write the relaxed cluster here")
    _add_potential_args(q)
    _add_relax_args(q)
    q.set_defaults(func=cmd_catalog_lookup)

    q = csub.add_parser("verify", help="recompute and check every entry")
    q.add_argument("--catalog", help="catalog file (bundled reference when omitted)")
    _add_potential_args(q)
    _add_relax_args(q)
    q.set_defaults(func=cmd_catalog_verify)

    q = csub.add_parser("build", help="compress a descending chain of XYZ files")
    q.add_argument("infiles", nargs="+", metavar="XYZ",
                   help="cluster files, largest first, sizes descending by one")
    q.add_argument("--shells", type=int, help="lattice size (auto when omitted)")
    q.add_argument("--out", help="write the catalog here (stdout when omitted)")
    _add_potential_args(q)
    _add_relax_args(q)
    q.set_defaults(func=cmd_catalog_build)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliInputError, XyzParseError, CatalogError, OffLatticeError,
            AmbiguousSiteError, FrontierExhaustedError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericBreakdownError, ZeroEnergyError, DegenerateGradientError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
