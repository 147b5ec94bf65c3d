"""Command-line interface: subcommands, file formats, exit-status contract."""

import subprocess
import sys

import pytest

from treelasso import induced_distance, is_equivalent, parse_newick
from treelasso.cli import main
from conftest import REMARK1_PAIRS, SNOWFLAKE6_NEWICK


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def example1_tsv(tmp_path, caterpillar7, lasso11):
    d = induced_distance(caterpillar7, lasso11)
    path = tmp_path / "example1.tsv"
    path.write_text("".join(f"{c.a}\t{c.b}\t{d[c]}\n" for c in d))
    return str(path)


@pytest.fixture
def snowflake_nwk(tmp_path):
    path = tmp_path / "snowflake.nwk"
    path.write_text(SNOWFLAKE6_NEWICK + "\n")
    return str(path)


class TestReconstructCommand:
    def test_example1_round_trip(self, capsys, tmp_path, example1_tsv, caterpillar7):
        out_path = tmp_path / "out.nwk"
        code, out, err = run(capsys, "reconstruct", example1_tsv, "-o", str(out_path))
        assert code == 0
        assert is_equivalent(parse_newick(out_path.read_text()), caterpillar7)

    def test_incomplete_closure_exit_2(self, capsys, tmp_path):
        path = tmp_path / "partial.tsv"
        path.write_text("a\tb\t2.0\na\tc\t2.0\n")
        code, out, err = run(capsys, "reconstruct", str(path))
        assert code == 2
        assert out == ""
        assert "b\tc" in err

    def test_negative_distance_exit_1(self, capsys, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a\tb\t2.0\na\tc\t-1\n")
        code, out, err = run(capsys, "reconstruct", str(path))
        assert code == 1
        assert "line 2" in err

    def test_non_additive_exit_3(self, capsys, tmp_path):
        path = tmp_path / "nonadd.tsv"
        path.write_text("x\ty\t1.0\nx\tz\t1.0\ny\tz\t10.0\n")
        code, out, err = run(capsys, "reconstruct", str(path))
        assert code == 3
        assert "inconsistent" in err

    def test_trace_file(self, capsys, tmp_path, example1_tsv):
        trace_path = tmp_path / "steps.txt"
        code, out, _ = run(capsys, "reconstruct", example1_tsv, "--trace", str(trace_path))
        assert code == 0
        lines = trace_path.read_text().splitlines()
        assert len(lines) == 10  # 21 cords - 11 given
        assert all(":=" in line for line in lines)

    def test_missing_file_exit_1(self, capsys, tmp_path):
        code, _, err = run(capsys, "reconstruct", str(tmp_path / "nope.tsv"))
        assert code == 1


class TestClassifyCommand:
    def test_snowflake_cover_all_yes(self, capsys, tmp_path, snowflake_nwk, cover9):
        cords_path = tmp_path / "cover.cords"
        cords_path.write_text("".join(f"{c.a}\t{c.b}\n" for c in sorted(cover9)))
        code, out, _ = run(
            capsys, "classify", snowflake_nwk, str(cords_path), "--oracle-topological"
        )
        assert code == 0
        report = dict(
            line.split("\t")[:2] for line in out.strip().splitlines()
        )
        assert report["connected"] == "yes"
        assert report["non-bipartite"] == "yes"
        assert report["cover"] == "yes"
        assert report["triplet-cover"] == "yes"
        assert report["shellable"] == "yes"
        assert report["2d-tree"] == "yes"
        assert report["edge-weight-lasso"] == "yes"
        assert report["topological-oracle"] == "generically-topological"

    def test_remark1_verdicts(self, capsys, tmp_path):
        tree_path = tmp_path / "quartet.nwk"
        tree_path.write_text("((a:1,b:1):1,(c:1,d:1):1);\n")
        cords_path = tmp_path / "remark1.cords"
        cords_path.write_text(
            "".join(f"{a}\t{b}\n" for a, b in REMARK1_PAIRS)
        )
        code, out, _ = run(
            capsys, "classify", str(tree_path), str(cords_path), "--oracle-topological"
        )
        assert code == 0
        report = dict(line.split("\t")[:2] for line in out.strip().splitlines())
        assert report["2d-tree"] == "yes"
        assert report["shellable"] == "no"
        assert report["edge-weight-lasso"] == "no"
        assert report["topological-oracle"] == "refuted"

    def test_leaf_set_mismatch(self, capsys, tmp_path, snowflake_nwk):
        cords_path = tmp_path / "alien.cords"
        cords_path.write_text("a\tzz\n")
        code, _, err = run(capsys, "classify", snowflake_nwk, str(cords_path))
        assert code == 1


class TestGencoverCommand:
    def test_example3_assignment_file(self, capsys, tmp_path, snowflake_nwk, cover9):
        # The full Example-3 transversal, co-singletons included (the
        # min-rule default would break stability for them).
        assignment = tmp_path / "assignment.tsv"
        taxa = ["a", "ap", "b", "bp", "c", "cp"]
        lines = []
        lines.append("a,ap\ta")
        lines.append("b,bp\tb")
        lines.append("c,cp\tc")
        lines.append("b,bp,c,cp\tb")   # X - {a,ap}
        lines.append("a,ap,c,cp\tc")   # X - {b,bp}
        lines.append("a,ap,b,bp\ta")   # X - {c,cp}
        co = {"a": "b", "ap": "b", "b": "c", "bp": "c", "c": "a", "cp": "a"}
        for x, image in co.items():
            rest = ",".join(t for t in taxa if t != x)
            lines.append(f"{rest}\t{image}")
        assignment.write_text("".join(line + "\n" for line in lines))

        out_path = tmp_path / "cover.cords"
        code, _, err = run(
            capsys,
            "gencover",
            snowflake_nwk,
            "--assignment",
            str(assignment),
            "-o",
            str(out_path),
        )
        assert code == 0
        assert "|L| = 9" in err
        produced = {
            tuple(line.split("\t")) for line in out_path.read_text().strip().splitlines()
        }
        assert produced == {(c.a, c.b) for c in cover9}

    def test_min_mode_size(self, capsys, tmp_path):
        tree_path = tmp_path / "random10.nwk"
        from treelasso import random_tree

        tree_path.write_text(random_tree(10, seed=3).newick() + "\n")
        code, out, err = run(capsys, "gencover", str(tree_path))
        assert code == 0
        assert "|L| = 17" in err
        assert len(out.strip().splitlines()) == 17

    def test_three_leaf_star(self, capsys, tmp_path):
        tree_path = tmp_path / "star.nwk"
        tree_path.write_text("(x,y,z);\n")
        code, out, _ = run(capsys, "gencover", str(tree_path))
        assert code == 0
        assert len(out.strip().splitlines()) == 3

    def test_closest_and_furthest_modes(self, capsys, tmp_path, snowflake_nwk):
        for mode in ("closest", "furthest"):
            code, out, _ = run(
                capsys, "gencover", snowflake_nwk, "--transversal", mode
            )
            assert code == 0
            assert len(out.strip().splitlines()) == 9


class TestTreefrom2dCommand:
    def test_remark1_cords(self, capsys, tmp_path):
        cords_path = tmp_path / "remark1.cords"
        cords_path.write_text("".join(f"{a}\t{b}\n" for a, b in REMARK1_PAIRS))
        code, out, err = run(capsys, "treefrom2d", str(cords_path), "--certify")
        assert code == 0
        tree = parse_newick(out)
        assert tree.is_fully_resolved()
        assert tree.taxa == {"a", "b", "c", "d"}

    def test_non_2dtree_rejected(self, capsys, tmp_path):
        cords_path = tmp_path / "cycle.cords"
        cords_path.write_text("a\tb\nb\tc\nc\td\nd\ta\n")
        code, _, err = run(capsys, "treefrom2d", str(cords_path))
        assert code == 1
        assert "not a 2d-tree" in err


class TestClosureCommand:
    def test_complete_closure(self, capsys, example1_tsv):
        code, out, _ = run(capsys, "closure", example1_tsv)
        assert code == 0
        assert len(out.strip().splitlines()) == 21

    def test_incomplete_exit_2(self, capsys, tmp_path):
        path = tmp_path / "partial.tsv"
        path.write_text("a\tb\t1.0\nc\td\t1.0\n")
        code, out, err = run(capsys, "closure", str(path))
        assert code == 2
        assert len(out.strip().splitlines()) == 2  # echoes the fixpoint


class TestSimulateCommand:
    def test_stable_covers_always_succeed(self, capsys):
        code, out, _ = run(
            capsys, "simulate", "--n", "8", "--trials", "12", "--seed", "5"
        )
        assert code == 0
        header, row = out.strip().splitlines()
        fields = dict(zip(header.split("\t"), row.split("\t")))
        assert fields["success_rate"] == "1.0"

    def test_seed_determinism(self, capsys):
        args = ("simulate", "--n", "6", "--trials", "8", "--seed", "11", "--extra", "2")
        _, out1, _ = run(capsys, *args)
        _, out2, _ = run(capsys, *args)
        assert out1 == out2

    def test_heavy_dropout_fails(self, capsys):
        code, out, _ = run(
            capsys,
            "simulate",
            "--n", "6", "--trials", "10", "--seed", "2",
            "--dropout", "0.95", "--drop-cover",
        )
        assert code == 0
        header, row = out.strip().splitlines()
        fields = dict(zip(header.split("\t"), row.split("\t")))
        assert float(fields["success_rate"]) <= 0.2

    def test_bad_parameters_exit_1(self, capsys):
        code, _, err = run(capsys, "simulate", "--n", "2", "--trials", "5")
        assert code == 1


class TestEpsilonOverride:
    def test_env_epsilon_respected(self, capsys, tmp_path, monkeypatch):
        # With a huge epsilon the strict inequality of the extension rule
        # never fires, so nothing is derivable.
        path = tmp_path / "quartet.tsv"
        path.write_text(
            "x\ty\t2.0\nu\tz\t2.0\nx\tu\t3.0\ny\tu\t3.0\ny\tz\t3.0\n"
        )
        code, out, _ = run(capsys, "closure", str(path))
        assert code == 0  # derives xz normally
        monkeypatch.setenv("LASSO_EPSILON", "10.0")
        code, out, _ = run(capsys, "closure", str(path))
        assert code == 2  # the margin swallows the inequality

    def test_invalid_epsilon(self, capsys, tmp_path, monkeypatch):
        path = tmp_path / "d.tsv"
        path.write_text("a\tb\t1.0\na\tc\t1.0\nb\tc\t1.0\n")
        monkeypatch.setenv("LASSO_EPSILON", "banana")
        code, _, err = run(capsys, "closure", str(path))
        assert code == 1


def test_module_entry_point(tmp_path):
    path = tmp_path / "d.tsv"
    path.write_text("a\tb\t2.0\na\tc\t2.0\nb\tc\t2.0\n")
    proc = subprocess.run(
        [sys.executable, "-m", "treelasso", "reconstruct", str(path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().endswith(";")
