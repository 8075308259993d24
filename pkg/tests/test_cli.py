"""Tests for swingmor.cli"""

import json
import logging

import pytest
from swingmor.cli import main, read_samples
from swingmor.errors import ConfigError

from .test_netmodel import CASE3

GEN = ["gen", "--kind", "random_connected", "--n", "12", "--blocks", "2", "--inputs", "0,6"]


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    model, rom = root / "model.json", root / "rom.json"
    assert main(GEN + ["--seed", "3", "--out", str(model), "-q"]) == 0
    assert main(["reduce", "--model", str(model), "--samples-file", "two-block", "--order", "4", "--max-iter", "10", "--out", str(rom), "-q"]) == 0
    return model, rom


class TestGen:
    """Tests for the gen subcommand."""

    def test_writes_model(self, tmp_path, capsys):
        out = tmp_path / "model.json"
        assert main(GEN + ["--seed", "1", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["n"] == 12
        assert "n=12" in capsys.readouterr().out

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(GEN + ["--seed", "4", "--out", str(a)])
        main(GEN + ["--seed", "4", "--out", str(b)])
        assert a.read_text() == b.read_text()

    def test_missing_seed(self, tmp_path, capsys):
        assert main(GEN + ["--out", str(tmp_path / "m.json")]) == 2
        assert "--seed" in capsys.readouterr().err

    def test_stdout_without_out(self, capsys):
        assert main(["gen", "--kind", "random_connected", "--n", "20", "--seed", "7"]) == 0
        captured = capsys.readouterr()
        assert json.loads(captured.out)["n"] == 20
        assert "n=20" in captured.err

    def test_unknown_kind(self):
        assert main(["gen", "--kind", "mesh", "--n", "5", "--seed", "1"]) == 2

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert "swingmor" in capsys.readouterr().out


class TestImport:
    """Tests for the import subcommand."""

    def test_case(self, tmp_path, capsys):
        case, out = tmp_path / "case3.m", tmp_path / "model.json"
        case.write_text(CASE3)
        assert main(["import", str(case), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["n"] == 3
        assert "|E|=2" in capsys.readouterr().out

    def test_single_bus(self, tmp_path):
        case = tmp_path / "case1.m"
        case.write_text("mpc.bus = [\n\t1\t3\t0\t0\t0\t0\t1\t1\t0\t230\t1\t1.1\t0.9;\n];\n")
        assert main(["import", str(case), "--out", str(tmp_path / "m.json")]) == 1

    def test_unknown_field_warns(self, tmp_path, caplog):
        case = tmp_path / "case3.m"
        case.write_text(CASE3 + "mpc.foo = [1 2 3];\n")
        with caplog.at_level(logging.WARNING, logger="swingmor"):
            assert main(["import", str(case), "--out", str(tmp_path / "m.json")]) == 0
        assert "mpc.foo" in caplog.text


class TestReduce:
    """Tests for the reduce subcommand."""

    def test_writes_rom(self, files, capsys):
        _, rom = files
        data = json.loads(rom.read_text())
        assert data["format"] == "swingmor-rom"
        assert data["enrichment"] == "samples"

    def test_byte_identical_reruns(self, files, tmp_path):
        model, rom = files
        again = tmp_path / "rom.json"
        args = ["reduce", "--model", str(model), "--samples-file", "two-block", "--order", "4", "--max-iter", "10", "--out", str(again), "-q"]
        assert main(args) == 0
        assert again.read_text() == rom.read_text()

    def test_random_samples_are_reproducible(self, files, tmp_path):
        model, _ = files
        outs = [tmp_path / "a.json", tmp_path / "b.json"]
        for out in outs:
            args = ["reduce", "--model", str(model), "--random-samples", "2", "--seed", "5", "--order", "4", "--max-iter", "10", "--out", str(out), "-q"]
            assert main(args) == 0
        assert outs[0].read_text() == outs[1].read_text()

    def test_not_converged_is_reported(self, files, tmp_path, capsys, caplog):
        model, _ = files
        args = ["reduce", "--model", str(model), "--samples-file", "two-block", "--order", "4", "--max-iter", "1", "--out", str(tmp_path / "r.json")]
        with caplog.at_level(logging.WARNING, logger="swingmor"):
            assert main(args) == 0
        assert "NOT converged" in capsys.readouterr().out
        assert "did not converge" in caplog.text
        assert "2 of 2 samples stopped at --max-iter 1" in caplog.text

    def test_too_few_samples(self, files, tmp_path):
        model, _ = files
        args = ["reduce", "--model", str(model), "--sample", "0.95,1.05", "--out", str(tmp_path / "r.json")]
        assert main(args) == 2

    def test_no_samples(self, files, tmp_path):
        model, _ = files
        assert main(["reduce", "--model", str(model), "--out", str(tmp_path / "r.json")]) == 2

    def test_random_samples_need_seed(self, files, tmp_path):
        model, _ = files
        args = ["reduce", "--model", str(model), "--random-samples", "3", "--out", str(tmp_path / "r.json")]
        assert main(args) == 2

    def test_missing_model(self, tmp_path):
        args = ["reduce", "--model", str(tmp_path / "none.json"), "--sample", "1,1", "--out", str(tmp_path / "r.json")]
        assert main(args) == 1


class TestCheck:
    """Tests for the check subcommand."""

    def test_pass(self, files, capsys):
        model, rom = files
        assert main(["check", "--model", str(model), "--rom", str(rom), "--param", "0.9,1.1"]) == 0
        assert "PASS residue match" in capsys.readouterr().out

    def test_sabotaged_rom(self, files, tmp_path, capsys):
        model, rom = files
        data = json.loads(rom.read_text())
        data["B_r"] = [[1.5 * v for v in row] for row in data["B_r"]]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        assert main(["check", "--model", str(model), "--rom", str(bad)]) == 1
        assert "FAIL residue match" in capsys.readouterr().out

    def test_random_needs_seed(self, files):
        model, rom = files
        assert main(["check", "--model", str(model), "--rom", str(rom), "--random", "2"]) == 2


class TestEval:
    """Tests for the eval subcommand."""

    def test_full_model_csv(self, files, capsys):
        model, _ = files
        assert main(["eval", "--model", str(model), "--omega-points", "5"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "omega,sigma_max_H,fro_H"
        assert len(lines) == 6

    def test_reduced_entries(self, files, capsys):
        model, rom = files
        assert main(["eval", "--model", str(model), "--rom", str(rom), "--omega-points", "3", "--entries"]) == 0
        header = capsys.readouterr().out.splitlines()[0]
        assert header.startswith("omega,sigma_max_H_r,fro_H_r,re_H_r_0_0,im_H_r_0_0")

    def test_json(self, files, tmp_path):
        model, _ = files
        out = tmp_path / "h.json"
        assert main(["eval", "--model", str(model), "--omega-points", "4", "--format", "json", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert len(data["omega"]) == 4
        assert len(data["re"]) == 4


class TestSweep:
    """Tests for the sweep subcommand."""

    def test_grid(self, files, tmp_path):
        model, rom = files
        out = tmp_path / "sweep.csv"
        args = ["sweep", "--model", str(model), "--rom", str(rom), "--grid", "10", "--omega-points", "20", "--out", str(out)]
        assert main(args) == 0
        lines = out.read_text().splitlines()
        assert sum(line.startswith("#") for line in lines) == 3
        assert lines[3] == "p_1,p_2,rel_hinf,argmax_omega"
        assert len(lines) == 4 + 100

    def test_byte_identical_reruns(self, files, tmp_path):
        model, rom = files
        outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for out, workers in zip(outs, ("1", "2")):
            args = ["sweep", "--model", str(model), "--rom", str(rom), "--random", "6", "--seed", "9", "--omega-points", "20", "--workers", workers, "--out", str(out)]
            assert main(args) == 0
        assert outs[0].read_text() == outs[1].read_text()

    def test_sabotaged_rom(self, files, tmp_path):
        model, rom = files
        data = json.loads(rom.read_text())
        data["C_r"] = [[0.5 * v for v in row] for row in data["C_r"]]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        assert main(["sweep", "--model", str(model), "--rom", str(bad), "--grid", "2", "--omega-points", "10"]) == 1


class TestReadSamples:
    """Tests for read_samples function."""

    def test_shipped_table(self):
        assert read_samples(None, "two-block") == [[0.9572, 0.93399], [1.0304, 0.9522]]
        assert len(read_samples(None, "four-block")) == 4

    def test_inline_and_file(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text("[[1.0, 1.1]]")
        assert read_samples([[0.9, 0.9]], str(path)) == [[0.9, 0.9], [1.0, 1.1]]

    def test_bad_file(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text('{"p": 1}')
        with pytest.raises(ConfigError):
            read_samples(None, str(path))


class TestStudy:
    """Tests for the study subcommand."""

    def test_orders(self, files, capsys):
        model, _ = files
        args = ["study", "--model", str(model), "--orders", "2,4", "--samples-file", "two-block", "--max-iter", "10", "--grid", "2", "--omega-points", "10"]
        assert main(args) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "order,r,median_rel_hinf,max_rel_hinf"
        assert [line.split(",")[0] for line in lines[1:]] == ["2", "4"]
