"""End-to-end command line checks, run in process through main().

Every test drives ifclust.cli.main with a real argv list and asserts on the
captured output, the exit code, and any files the command wrote. Published
energies are checked loosely; formatted values the interface promises are
checked verbatim.
"""

import itertools
from dataclasses import replace

import numpy as np
import pytest

from ifclust import IndexCluster, LennardJones, gen_if
from ifclust.catalog import load_reference_catalog, parse_catalog, reconstruct, serialize_catalog
from ifclust.cli import main
from ifclust.geometry import Cluster
from ifclust.xyzio import read_xyz, write_xyz

from helpers import oracle_peel

C13_PUBLISHED = -44.326801
E_PAIR_AT_STEP = -0.9387222644475866
PUB_TOL = 1e-5

ICO13 = ",".join(str(i) for i in range(13))


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def summary_fields(line):
    """Parse one key=value summary line into a dict of strings."""
    return dict(tok.split("=", 1) for tok in line.split())


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    lat1 = gen_if(1)
    pos = lat1.positions()
    verts = list(range(1, 13))
    edge = min(np.linalg.norm(pos[a] - pos[b])
               for a, b in itertools.combinations(verts, 2))
    face = next(t for t in itertools.combinations(verts, 3)
                if all(np.linalg.norm(pos[a] - pos[b]) < 1.05 * edge
                       for a, b in itertools.combinations(t, 2)))
    ytop = max(verts, key=lambda i: pos[i][1])
    ring = sorted(verts, key=lambda i: -pos[i][1])[1:6]

    lat2 = gen_if(2)
    fc = next(int(i) for i in lat2.indices
              if lat2.site(int(i)).sublattice.value == "FC")
    fc_partner = next(j for j in lat2.neighbors(fc)
                      if lat2.site(j).sublattice.value == "IC")
    mackay = [int(i) for i in lat2.indices
              if lat2.site(int(i)).sublattice.value == "IC"]

    out = {"root": root}

    def put(name, coords):
        path = root / name
        write_xyz(path, Cluster(np.asarray(coords, dtype=float)))
        out[name] = str(path)

    put("ico13.xyz", pos)
    put("dimer15.xyz", [[0, 0, 0], [1.5, 0, 0]])
    put("pair09.xyz", [[0, 0, 0], [0.9, 0, 0]])
    put("morse_min.xyz", [[0, 0, 0], [1.0, 0, 0]])
    put("single.xyz", [[0, 0, 0]])
    put("off_lattice.xyz", [[0, 0, 0], [0.5, 0.5, 0.5]])
    put("face_cap.xyz", pos[[0, *face]])
    put("bipyramid.xyz", pos[[0, ytop, *ring]])
    put("fc_pair.xyz", lat2.positions_of([fc, fc_partner]))
    put("mackay55.xyz", lat2.positions_of(mackay))
    return out


class TestLattice:
    def test_single_shell_summary(self, capsys):
        code, out, _ = run(capsys, "lattice", "--shells", 1)
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("shells=1 sites=13 ic=13 fc=0")
        assert "shell=0 ic=1 fc=0" in lines
        assert "shell=1 ic=12 fc=0" in lines

    def test_two_shell_counts(self, capsys):
        code, out, _ = run(capsys, "lattice", "--shells", 2)
        assert code == 0
        lines = out.splitlines()
        assert "sites=75" in lines[0]
        assert "shell=2 ic=42 fc=20" in lines

    def test_four_shell_site_count(self, capsys):
        code, out, _ = run(capsys, "lattice", "--shells", 4)
        assert code == 0
        assert "sites=509" in out.splitlines()[0]

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "lat.xyz"
        code, out, _ = run(capsys, "lattice", "--shells", 2, "--out", target)
        assert code == 0
        assert f"wrote {target}" in out
        cluster, comment = read_xyz(target)
        assert cluster.n == 75
        assert "source=lattice --shells 2" in comment

    def test_missing_shells_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            main(["lattice"])
        assert err.value.code == 2


class TestRelax:
    def test_icosahedron(self, capsys, files):
        code, out, _ = run(capsys, "relax", "--in", files["ico13.xyz"])
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert fields["n"] == "13"
        assert fields["converged"] == "true"
        assert float(fields["E_min"]) == pytest.approx(C13_PUBLISHED, abs=PUB_TOL)

    def test_stretched_dimer(self, capsys, files):
        code, out, _ = run(capsys, "relax", "--in", files["dimer15.xyz"])
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert float(fields["E_min"]) == pytest.approx(-1.0, abs=1e-9)
        assert fields["converged"] == "true"

    def test_out_roundtrip(self, capsys, files, tmp_path):
        target = tmp_path / "relaxed.xyz"
        code, out, _ = run(capsys, "relax", "--in", files["dimer15.xyz"],
                           "--out", target)
        assert code == 0
        cluster, comment = read_xyz(target)
        assert comment.endswith("source=relax")
        assert float(comment.split()[0][2:]) == pytest.approx(-1.0, abs=1e-9)
        bond = np.linalg.norm(cluster.coords[1] - cluster.coords[0])
        assert bond == pytest.approx(2.0 ** (1 / 6), abs=1e-6)

    def test_perturb_is_seeded(self, capsys, files):
        argv = ("relax", "--in", files["ico13.xyz"], "--perturb", 0.05, "--seed", 3)
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second
        _, other, _ = run(capsys, "relax", "--in", files["ico13.xyz"],
                          "--perturb", 0.05, "--seed", 4)
        a = summary_fields(first.splitlines()[0])
        b = summary_fields(other.splitlines()[0])
        assert a["E_init"] != b["E_init"]
        assert float(a["E_min"]) == pytest.approx(C13_PUBLISHED, abs=PUB_TOL)
        assert float(b["E_min"]) == pytest.approx(C13_PUBLISHED, abs=PUB_TOL)

    def test_verbose_trace(self, capsys, files):
        code, out, _ = run(capsys, "relax", "--in", files["dimer15.xyz"],
                           "--verbose")
        assert code == 0
        lines = out.splitlines()
        assert lines[-1].startswith("n=2 ")
        trace = lines[:-1]
        assert len(trace) >= 2
        # the starting point is traced as iteration zero
        assert [int(row.split()[0]) for row in trace] == list(range(len(trace)))

    def test_iteration_cap(self, capsys, files):
        code, out, _ = run(capsys, "relax", "--in", files["dimer15.xyz"],
                           "--max-iters", 1)
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert fields["iters"] == "1"
        assert fields["converged"] == "false"

    def test_loose_tolerance_converges(self, capsys, files):
        code, out, _ = run(capsys, "relax", "--in", files["dimer15.xyz"],
                           "--grad-tol", 1e-2)
        assert code == 0
        assert summary_fields(out.splitlines()[0])["converged"] == "true"

    def test_collapse_exits_4_and_saves_last_iterate(self, capsys, files, tmp_path):
        # alpha e^(beta r) + gamma r^-6 with gamma < 0 has no short-range
        # barrier, so the pair falls into the r -> 0 catastrophe
        target = tmp_path / "last.xyz"
        code, _, err = run(capsys, "relax", "--in", files["pair09.xyz"],
                           "--potential", "bu", "--alpha", 1.0, "--beta", -1.0,
                           "--gamma", -1.0, "--out", target)
        assert code == 4
        assert "collapsed" in err
        assert f"wrote {target}" in err
        raw = target.read_text().splitlines()
        assert raw[0] == "2"
        assert "last good iterate" in raw[1]

    def test_missing_file_exits_3(self, capsys, tmp_path):
        code, _, err = run(capsys, "relax", "--in", tmp_path / "absent.xyz")
        assert code == 3
        assert err.startswith("error:")

    def test_malformed_file_exits_3(self, capsys, tmp_path):
        bad = tmp_path / "bad.xyz"
        bad.write_text("not a count\n")
        code, _, err = run(capsys, "relax", "--in", bad)
        assert code == 3
        assert "bad.xyz:1" in err

    def test_single_atom_exits_2(self, capsys, files):
        code, _, err = run(capsys, "relax", "--in", files["single.xyz"])
        assert code == 2
        assert "two particles" in err


class TestGradient:
    def test_unit_direction_file(self, capsys, files, tmp_path):
        target = tmp_path / "grad.xyz"
        code, out, _ = run(capsys, "gradient", "--in", files["dimer15.xyz"],
                           "--out", target)
        assert code == 0
        assert out.splitlines()[0].startswith("n=2 E=")
        rows = target.read_text().splitlines()
        vecs = np.array([[float(t) for t in row.split()[4:]] for row in rows[2:]])
        assert vecs.shape == (2, 3)
        assert np.linalg.norm(vecs) == pytest.approx(1.0, abs=1e-9)
        # beyond the well minimum the energy grows with separation, so the
        # gradient pushes the atoms outward
        assert vecs[0, 0] < 0 < vecs[1, 0]
        assert np.abs(vecs[:, 1:]).max() < 1e-12

    def test_vanishing_gradient_writes_zeros(self, capsys, files, tmp_path):
        # a Morse pair at unit separation has an exactly zero gradient
        target = tmp_path / "grad.xyz"
        code, out, err = run(capsys, "gradient", "--in", files["morse_min.xyz"],
                             "--potential", "morse", "--out", target)
        assert code == 0
        assert "gradient vanishes" in err
        assert "|g|=0.000000e+00" in out
        rows = target.read_text().splitlines()
        vecs = np.array([[float(t) for t in row.split()[4:]] for row in rows[2:]])
        assert not vecs.any()

    def test_out_is_required(self, files):
        with pytest.raises(SystemExit) as err:
            main(["gradient", "--in", files["dimer15.xyz"]])
        assert err.value.code == 2


class TestPeel:
    def test_forward_matches_oracle(self, capsys):
        code, out, _ = run(capsys, "peel", "--sites", ICO13, "--shells", 2,
                           "--direction", "forward", "--steps", 1)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "n E_init E_min adj type"
        row = lines[1].split()
        c = IndexCluster(gen_if(2), frozenset(range(13)))
        _, expected = oracle_peel(LennardJones(), c, "forward")
        assert row[0] == "14"
        assert row[3] == "1"
        assert float(row[2]) == pytest.approx(expected, abs=1e-6)

    def test_backward_reaches_dimer(self, capsys):
        code, out, _ = run(capsys, "peel", "--sites", ICO13, "--shells", 2,
                           "--direction", "backward", "--steps", 11)
        assert code == 0
        rows = out.splitlines()[1:]
        assert len(rows) == 11
        assert [int(r.split()[0]) for r in rows] == list(range(12, 1, -1))
        assert rows[-1].startswith("2 ")
        assert rows[-1].split()[2] == "-1.000000"

    def test_itself_fixed_point_row(self, capsys):
        code, out, _ = run(capsys, "peel", "--sites", ICO13, "--shells", 2,
                           "--direction", "itself", "--steps", 1)
        assert code == 0
        assert out.splitlines()[1] == "13 -44.326801 -44.326801 0 1"

    def test_step_files(self, capsys, tmp_path):
        prefix = tmp_path / "grow.xyz"
        code, _, err = run(capsys, "peel", "--sites", ICO13, "--shells", 2,
                           "--direction", "forward", "--steps", 2,
                           "--out", prefix)
        assert code == 0
        first = tmp_path / "grow_step001_n14.xyz"
        second = tmp_path / "grow_step002_n15.xyz"
        assert first.exists() and second.exists()
        assert f"wrote {first}" in err and f"wrote {second}" in err
        cluster, _ = read_xyz(second)
        assert cluster.n == 15

    def test_saturated_lattice_stops_cleanly(self, capsys):
        code, out, err = run(capsys, "peel", "--sites", ICO13, "--shells", 1,
                             "--direction", "forward", "--steps", 1)
        assert code == 0
        assert out.splitlines() == ["n E_init E_min adj type"]
        assert "stopped after 0 of 1 steps" in err

    def test_sites_requires_shells(self, capsys):
        code, _, err = run(capsys, "peel", "--sites", ICO13,
                           "--direction", "forward")
        assert code == 3
        assert "--shells" in err

    def test_bad_sites_list(self, capsys):
        code, _, err = run(capsys, "peel", "--sites", "1,2,x", "--shells", 1,
                           "--direction", "forward")
        assert code == 3
        assert "comma list" in err

    def test_unknown_site_index(self, capsys):
        code, _, _ = run(capsys, "peel", "--sites", "0,99", "--shells", 1,
                         "--direction", "forward")
        assert code == 3

    def test_off_lattice_input(self, capsys, files):
        code, _, err = run(capsys, "peel", "--in", files["off_lattice.xyz"],
                           "--direction", "forward")
        assert code == 3
        assert err.startswith("error:")


class TestClassify:
    def test_icosahedron(self, capsys, files):
        code, out, _ = run(capsys, "classify", "--in", files["ico13.xyz"])
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert (fields["type"], fields["code"]) == ("IC", "1")
        assert float(fields["e_min"]) == pytest.approx(C13_PUBLISHED, abs=PUB_TOL)

    def test_face_cap(self, capsys, files):
        code, out, _ = run(capsys, "classify", "--in", files["face_cap.xyz"])
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert (fields["type"], fields["code"]) == ("TO", "3")
        assert float(fields["e_min"]) == pytest.approx(-6.0, abs=1e-9)

    def test_pentagonal_bipyramid(self, capsys, files):
        code, out, _ = run(capsys, "classify", "--in", files["bipyramid.xyz"])
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert (fields["type"], fields["code"]) == ("ID", "2")

    def test_face_sublattice_member(self, capsys, files):
        code, out, _ = run(capsys, "classify", "--in", files["fc_pair.xyz"],
                           "--shells", 2)
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert (fields["type"], fields["code"]) == ("FC", "5")

    def test_two_shell_core(self, capsys, files):
        code, out, _ = run(capsys, "classify", "--in", files["mackay55.xyz"])
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert fields["n"] == "55"
        assert (fields["type"], fields["code"]) == ("IC", "1")


def tampered_reference(tmp_path):
    """Reference catalog with a deliberately wrong recorded minimum at n=20."""
    cat = load_reference_catalog()
    cat = cat.with_entry(replace(cat.entry(20), e_min=-999.0))
    path = tmp_path / "tampered.mifcat"
    path.write_text(serialize_catalog(cat))
    return path


class TestCatalogLookup:
    def test_reference_icosahedron(self, capsys):
        code, out, _ = run(capsys, "catalog", "lookup", "--n", 13)
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert fields["type"] == "IC"
        assert fields["mismatch"] == "no"
        assert float(fields["e_min"]) == pytest.approx(C13_PUBLISHED, abs=PUB_TOL)

    def test_reference_dimer_seed(self, capsys):
        code, out, _ = run(capsys, "catalog", "lookup", "--n", 2)
        assert code == 0
        fields = summary_fields(out.splitlines()[0])
        assert fields["e_init"] == repr(E_PAIR_AT_STEP)
        assert float(fields["e_min"]) == pytest.approx(-1.0, abs=1e-9)

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "n4.xyz"
        code, _, _ = run(capsys, "catalog", "lookup", "--n", 4, "--out", target)
        assert code == 0
        cluster, comment = read_xyz(target)
        assert cluster.n == 4
        assert float(comment.split()[0][2:]) == pytest.approx(-6.0, abs=1e-9)

    @pytest.mark.parametrize("n", [1, 21])
    def test_out_of_range(self, capsys, n):
        code, _, err = run(capsys, "catalog", "lookup", "--n", n)
        assert code == 3
        assert err.startswith("error:")

    def test_recorded_mismatch_exits_1(self, capsys, tmp_path):
        path = tampered_reference(tmp_path)
        code, out, _ = run(capsys, "catalog", "lookup", "--catalog", path, "--n", 20)
        assert code == 1
        assert summary_fields(out.splitlines()[0])["mismatch"] == "yes"


class TestCatalogVerify:
    def test_reference_is_clean(self, capsys):
        code, out, _ = run(capsys, "catalog", "verify")
        assert code == 0
        lines = out.splitlines()
        assert lines[-1] == "verified 19 entries, 0 mismatched"
        assert all(line.endswith(" ok") for line in lines[:-1])

    def test_tampered_entry_flagged(self, capsys, tmp_path):
        path = tampered_reference(tmp_path)
        code, out, _ = run(capsys, "catalog", "verify", "--catalog", path)
        assert code == 1
        lines = out.splitlines()
        assert lines[-1] == "verified 19 entries, 1 mismatched"
        assert lines[0].startswith("n=20 ") and lines[0].endswith(" mismatch")

    def test_missing_file_exits_3(self, capsys, tmp_path):
        code, _, err = run(capsys, "catalog", "verify",
                           "--catalog", tmp_path / "absent.mifcat")
        assert code == 3
        assert err.startswith("error:")

    def test_corrupt_file_exits_3(self, capsys, tmp_path):
        path = tmp_path / "corrupt.mifcat"
        path.write_text("MIFCAT 9\n")
        code, _, err = run(capsys, "catalog", "verify", "--catalog", path)
        assert code == 3
        assert "MIFCAT" in err


class TestCatalogBuild:
    @pytest.fixture()
    def chain_files(self, tmp_path):
        lat = gen_if(1)
        paths = []
        for members in ((0, 1, 2, 3), (0, 1, 2), (0, 1)):
            path = tmp_path / f"n{len(members)}.xyz"
            write_xyz(path, Cluster(lat.positions_of(members)))
            paths.append(str(path))
        return paths

    def test_builds_parseable_catalog(self, capsys, chain_files, tmp_path):
        target = tmp_path / "built.mifcat"
        code, out, _ = run(capsys, "catalog", "build", *chain_files,
                           "--shells", 1, "--out", target)
        assert code == 0
        assert f"wrote {target} (2..4)" in out
        cat = parse_catalog(target.read_text())
        assert (cat.n_min, cat.n_max) == (2, 4)
        assert reconstruct(cat, 4).indices == frozenset({0, 1, 2, 3})
        for n in range(2, 5):
            entry = cat.entry(n)
            assert entry.e_min is not None and entry.type is not None
        assert cat.entry(2).e_init == pytest.approx(E_PAIR_AT_STEP, abs=1e-12)

    def test_stdout_when_no_out(self, capsys, chain_files):
        code, out, _ = run(capsys, "catalog", "build", *chain_files, "--shells", 1)
        assert code == 0
        assert out.startswith("MIFCAT 1\n")
        assert parse_catalog(out).n_max == 4

    def test_auto_lattice_size(self, capsys, chain_files):
        code, _, _ = run(capsys, "catalog", "build", *chain_files)
        assert code == 0

    def test_gap_in_chain_exits_3(self, capsys, chain_files):
        code, _, err = run(capsys, "catalog", "build",
                           chain_files[0], chain_files[2])
        assert code == 3
        assert err.startswith("error:")


class TestUsage:
    def test_no_arguments(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as err:
            main(["polish"])
        assert err.value.code == 2

    def test_catalog_requires_action(self):
        with pytest.raises(SystemExit) as err:
            main(["catalog"])
        assert err.value.code == 2
