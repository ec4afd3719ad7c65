"""Tests for the command-line front end: CSV contract, sweeps, presets,
config-file merging, and exit codes."""

import csv
import io
import shutil
import subprocess

import pytest

from esrsel.cli import CSV_HEADER, figure_preset, main

X1 = 2.1004124800191777  # quadrature value at (1,1,1,1,10,1)

HEADER_FIELDS = CSV_HEADER.split(",")


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_rows(out):
    reader = csv.DictReader(io.StringIO(out))
    return list(reader)


class TestCsvContract:
    def test_header_exact(self):
        assert CSV_HEADER == (
            "scheme,method,K,L,M_D,M_E,lambda_d_db,lambda_e_db,"
            "rho_s,rho_d,rho_e,esr_bpcu,stderr,term_count,max_log_term,trials,seed"
        )

    def test_single_point_row(self, capsys):
        code, out, _ = run_cli(["esr", "--scheme", "os", "--method", "exact"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 2
        row = parse_rows(out)[0]
        assert row["scheme"] == "os"
        assert row["method"] == "exact"
        assert (row["K"], row["L"], row["M_D"], row["M_E"]) == ("1", "1", "1", "1")
        assert (row["lambda_d_db"], row["lambda_e_db"]) == ("10", "0")
        assert abs(float(row["esr_bpcu"]) - X1) < 1e-6 * X1
        assert row["term_count"] != "" and row["max_log_term"] != ""
        assert row["stderr"] == "" and row["trials"] == "" and row["seed"] == ""

    def test_both_schemes_all_methods_row_count_and_fields(self, capsys):
        code, out, _ = run_cli(
            ["esr", "--scheme", "both", "--method", "all", "--trials", "2000", "--seed", "4"],
            capsys,
        )
        assert code == 0
        rows = parse_rows(out)
        assert len(rows) == 10  # 2 schemes × 5 methods
        combos = {(r["scheme"], r["method"]) for r in rows}
        assert combos == {
            (s, m)
            for s in ("os", "ss")
            for m in ("exact", "highsnr", "asymptotic", "quadrature", "mc")
        }
        for r in rows:
            if r["method"] == "mc":
                assert r["stderr"] != "" and r["trials"] == "2000" and r["seed"] == "4"
                assert r["term_count"] == "" and r["max_log_term"] == ""
            else:
                assert r["stderr"] == "" and r["trials"] == "" and r["seed"] == ""
                assert r["term_count"] != ""

    def test_out_file_instead_of_stdout(self, capsys, tmp_path):
        target = tmp_path / "rows.csv"
        code, out, _ = run_cli(
            ["esr", "--scheme", "os", "--method", "asymptotic", "--out", str(target)],
            capsys,
        )
        assert code == 0
        assert out == ""
        content = target.read_text().strip().splitlines()
        assert content[0] == CSV_HEADER
        assert len(content) == 2


class TestSweep:
    def test_lambda_sweep_rows_and_monotonicity(self, capsys):
        code, out, _ = run_cli(
            [
                "sweep", "--var", "lambda_d_db", "--from", "0", "--to", "10",
                "--step", "5", "--scheme", "os", "--method", "highsnr",
            ],
            capsys,
        )
        assert code == 0
        rows = parse_rows(out)
        assert [r["lambda_d_db"] for r in rows] == ["0", "5", "10"]
        vals = [float(r["esr_bpcu"]) for r in rows]
        assert vals[0] < vals[1] < vals[2]

    def test_integer_variable_sweep(self, capsys):
        code, out, _ = run_cli(
            [
                "sweep", "--var", "m_d", "--from", "1", "--to", "3", "--step", "1",
                "--scheme", "ss", "--method", "exact",
            ],
            capsys,
        )
        assert code == 0
        assert [r["M_D"] for r in parse_rows(out)] == ["1", "2", "3"]

    def test_fractional_step_on_integer_variable_rejected(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["sweep", "--var", "m_d", "--from", "1", "--to", "3", "--step", "0.5"])
        assert e.value.code == 2

    def test_reversed_range_rejected(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["sweep", "--var", "lambda_d_db", "--from", "10", "--to", "0", "--step", "2"])
        assert e.value.code == 2

    def test_unknown_variable_rejected(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["sweep", "--var", "bogus", "--from", "0", "--to", "1", "--step", "1"])
        assert e.value.code == 2


class TestCorrelationGating:
    def test_correlation_requires_monte_carlo(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["esr", "--method", "exact", "--rho-s", "0.5"])
        assert e.value.code == 2

    def test_correlated_monte_carlo_runs(self, capsys):
        code, out, _ = run_cli(
            [
                "esr", "--scheme", "ss", "--method", "mc", "--rho-s", "0.5",
                "--trials", "2000", "--seed", "5",
            ],
            capsys,
        )
        assert code == 0
        row = parse_rows(out)[0]
        assert row["rho_s"] == "0.5"
        assert row["stderr"] != ""

    def test_out_of_range_rho_rejected(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["esr", "--method", "mc", "--rho-s", "1.0"])
        assert e.value.code == 2


class TestConfigFile:
    def test_flags_override_file_and_file_overrides_defaults(self, capsys, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(
            "# operating point\nmethod = highsnr\nk = 2\nlambda_e_db = 9\n"
        )
        code, out, _ = run_cli(
            ["esr", "--config", str(cfgfile), "--k", "3", "--scheme", "os"], capsys
        )
        assert code == 0
        row = parse_rows(out)[0]
        assert row["method"] == "highsnr"  # from file
        assert row["K"] == "3"  # flag wins over file
        assert row["lambda_e_db"] == "9"  # from file
        assert row["lambda_d_db"] == "10"  # default survives

    def test_unknown_key_rejected(self, tmp_path):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("mystery = 1\n")
        with pytest.raises(SystemExit) as e:
            main(["esr", "--config", str(cfgfile)])
        assert e.value.code == 2

    def test_unparseable_value_rejected(self, tmp_path):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("k = abc\n")
        with pytest.raises(SystemExit) as e:
            main(["esr", "--config", str(cfgfile)])
        assert e.value.code == 2


class TestReproducibility:
    def test_monte_carlo_rerun_is_byte_identical(self, capsys, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = [
            "esr", "--scheme", "both", "--method", "mc", "--trials", "2000",
            "--seed", "99",
        ]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        capsys.readouterr()
        assert out1.read_bytes() == out2.read_bytes()


class TestFigurePresets:
    def test_row_counts(self):
        assert len(figure_preset("fig2", 100000, 1)) == 336
        assert len(figure_preset("fig3", 100000, 1)) == 336
        assert len(figure_preset("fig4", 100000, 1)) == 36
        assert len(figure_preset("fig5", 100000, 1)) == 132

    def test_multipath_sweep_preset_shape(self):
        rows = figure_preset("fig4", 100000, 1)
        assert all(r.method == "exact" for r in rows)
        assert all(r.lambda_d_db == 20.0 and r.lambda_e_db == 0.0 for r in rows)
        assert all(r.k == 2 and r.l == 2 for r in rows)
        assert {r.m_d for r in rows} == set(range(1, 7))
        assert {r.m_e for r in rows} == {1, 2, 3}
        assert {r.scheme for r in rows} == {"os", "ss"}

    def test_exact_plus_highsnr_preset_shape(self):
        rows = figure_preset("fig2", 100000, 1)
        assert {(r.k, r.l) for r in rows} == {(1, 1), (1, 3), (3, 1), (3, 3)}
        assert {r.method for r in rows} == {"exact", "highsnr"}
        assert all(r.m_d == 3 and r.m_e == 3 and r.lambda_e_db == 9.0 for r in rows)
        assert {r.lambda_d_db for r in rows} == set(float(x) for x in range(0, 41, 2))

    def test_correlation_preset_is_monte_carlo_only(self):
        rows = figure_preset("fig5", 100000, 1)
        assert all(r.method == "mc" for r in rows)
        assert all(r.k == 4 and r.l == 4 and r.m_d == 4 and r.m_e == 4 for r in rows)
        rho_sets = {(r.rho_s, r.rho_d, r.rho_e) for r in rows}
        assert len(rho_sets) == 6
        assert (0.0, 0.0, 0.0) in rho_sets

    def test_unknown_name_rejected(self):
        with pytest.raises(SystemExit) as e:
            main(["figure", "fig9"])
        assert e.value.code == 2

    def test_multipath_figure_end_to_end(self, capsys):
        code, out, _ = run_cli(["figure", "fig4", "--jobs", "4"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 37


class TestValidate:
    def test_small_grid_passes(self, capsys):
        code, out, _ = run_cli(["validate", "--grid", "small", "--jobs", "8"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[-1].startswith("SUMMARY ")
        assert "fail=0" in lines[-1]
        assert all(l.startswith(("PASS", "FAIL", "SUMMARY")) for l in lines)
        assert sum(1 for l in lines if l.startswith("PASS")) >= 130


class TestExitCodes:
    def test_engine_error_maps_to_one(self, capsys):
        code, out, err = run_cli(
            ["esr", "--scheme", "os", "--method", "exact", "--k", "8", "--l", "8",
             "--md", "12", "--me", "12"],
            capsys,
        )
        assert code == 1
        assert "error" in err.lower()

    def test_invalid_count_rejected(self):
        with pytest.raises(SystemExit) as e:
            main(["esr", "--k", "0"])
        assert e.value.code == 2

    def test_too_few_trials_rejected(self):
        with pytest.raises(SystemExit) as e:
            main(["esr", "--method", "mc", "--trials", "500"])
        assert e.value.code == 2

    @pytest.mark.skipif(shutil.which("esrsel") is None, reason="console script not on PATH")
    def test_console_script_wired(self):
        proc = subprocess.run(
            ["esrsel", "esr", "--scheme", "os", "--method", "asymptotic"],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[0] == CSV_HEADER
