import csv
import json
import math
import subprocess
import sys

import pytest

from tici import sweep
from tici.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main
from tici.incompat import ContextReport
from tici.sweep import (
    COLUMNS,
    ConfigError,
    FigureRow,
    InvariantViolation,
    SweepSpec,
    check_invariants,
    emit_figure_data,
    parse_angle,
    run_sweep,
    spec_from_table,
    validate_config,
)

HEADER = "mode,sweep_param,value,p,theta_p,theta_A,I_bits,term_forward,term_backward,I_sampled,I_stderr"


class TestAngles:
    @pytest.mark.parametrize("raw,expected", [
        (0.5, 0.5),
        (1, 1.0),
        ("22.5deg", math.pi / 8),
        ("-45deg", -math.pi / 4),
        ("pi/8", math.pi / 8),
        ("3*pi/8", 3 * math.pi / 8),
        ("-pi/4", -math.pi / 4),
        ("pi", math.pi),
        ("0.25", 0.25),
    ])
    def test_parse(self, raw, expected):
        assert parse_angle(raw) == pytest.approx(expected)

    @pytest.mark.parametrize("raw", ["pie", "12 degrees", True, [1]])
    def test_reject(self, raw):
        with pytest.raises(ConfigError):
            parse_angle(raw, "theta")


class TestValidateConfig:
    def test_minimal_fig3(self):
        spec = validate_config("[fig3]\n")
        assert spec.mode == "fig3" and spec.param == "theta_p"
        assert (spec.base, spec.seed, spec.counts, spec.format) == (2.0, 0, None, "csv")
        assert spec.steps == 33 and spec.fixed == {"axis": "x"}
        assert spec.start == 0.0 and spec.stop == pytest.approx(math.pi / 4)

    def test_top_level_defaults(self):
        spec = validate_config('seed = 4\nbase = 10\n[fig4]\np = 2\nrange = ["0deg", "45deg"]\nsteps = 5\nseed = 7\n')
        assert spec.seed == 7 and spec.base == 10.0
        assert spec.fixed["p"] == 2.0 and spec.stop == pytest.approx(math.pi / 4)

    def test_p_domain(self):
        with pytest.raises(ConfigError, match=r"p ∈ \[0,2\]"):
            validate_config("[fig4]\np = 2.5\n")

    def test_periodic_range_warns(self):
        with pytest.warns(UserWarning, match="periodic"):
            spec = validate_config('[fig3]\nrange = [0, "pi"]\n')
        assert spec.stop == pytest.approx(math.pi)

    @pytest.mark.parametrize("text,fragment", [
        ("[fig3]\n[fig4]\n", "exactly one"),
        ("base = 2\n", "exactly one"),
        ("[fig3]\ncolour = 1\n", "colour"),
        ("[fig3]\nsteps = 1\n", "steps"),
        ('[fig3]\naxis = "w"\n', "axis"),
        ("[fig3]\nbase = 1\n", "base"),
        ('[fig3]\nformat = "xml"\n', "format"),
        ("[fig3]\ncounts = 0\n", "counts"),
        ("[fig3\n", "parse"),
        ("[plot]\n", "unknown mode"),
        ("verbose = true\n[fig3]\n", "verbose"),
        ("[max-search]\ndim = 1\n", "dim"),
        ('[max-search]\nmeasure = "flat"\n', "measure"),
        ("[classical-check]\nmin_size = 4\nmax_size = 3\n", "max_size"),
        ("[fig4]\nbloch_factor = 3\n", "bloch_factor"),
    ])
    def test_errors_name_the_field(self, text, fragment):
        with pytest.raises(ConfigError, match=fragment):
            validate_config(text)

    def test_single(self):
        spec = validate_config('[single]\ntheta_1 = "pi/8"\ntheta_p = "10deg"\n')
        assert spec.fixed["theta_1"] == pytest.approx(math.pi / 8)
        assert spec.fixed["theta_A"] == pytest.approx(math.pi / 8)


class TestRunSweep:
    def test_fig3_x(self):
        rows = run_sweep(spec_from_table("fig3", {"axis": "x"}))
        assert len(rows) == 33
        assert rows[0].I_bits == pytest.approx(0.5, abs=1e-12)
        assert rows[-1].I_bits == pytest.approx(0.5, abs=1e-12)
        assert rows[16].theta_p == pytest.approx(math.pi / 8)
        assert rows[16].I_bits == pytest.approx(0.0, abs=1e-12)
        assert all(r.I_sampled is None for r in rows)

    def test_fig3_y_zero(self):
        rows = run_sweep(spec_from_table("fig3", {"axis": "y"}))
        assert max(abs(r.I_bits) for r in rows) <= 1e-12

    def test_fig4_p1_zero(self):
        rows = run_sweep(spec_from_table("fig4", {"p": 1}))
        assert max(abs(r.I_bits) for r in rows) <= 1e-12
        assert all(r.p == pytest.approx(1.0) for r in rows)

    def test_fig4_p0_peak(self):
        rows = run_sweep(spec_from_table("fig4", {"p": 0, "steps": 9}))
        assert rows[4].theta_A == pytest.approx(math.pi / 8)
        assert rows[4].I_bits == pytest.approx(0.5, abs=1e-10)

    def test_counts_and_determinism(self):
        spec = spec_from_table("fig3", {"steps": 4, "counts": 2000, "seed": 3})
        a, b = run_sweep(spec), run_sweep(spec)
        assert a == b
        assert all(r.I_sampled is not None and r.I_stderr is not None for r in a)

    def test_workers_preserve_order(self):
        spec = spec_from_table("fig3", {"steps": 6, "counts": 500})
        par = run_sweep(spec_from_table("fig3", {"steps": 6, "counts": 500, "workers": 2}))
        assert run_sweep(spec) == par

    def test_single(self):
        rows = run_sweep(spec_from_table("single", {"theta_1": "pi/8"}))
        assert len(rows) == 1 and rows[0].I_bits == pytest.approx(0.5, abs=1e-12)

    def test_max_search(self):
        rows = run_sweep(spec_from_table("max-search", {"samples": 500}))
        assert rows[0].value == 500 and 0.4 < rows[0].I_bits <= 0.5

    def test_classical(self):
        rows = run_sweep(spec_from_table("classical-check", {"tables": 50}))
        assert len(rows) == 50 and max(r.I_bits for r in rows) <= 1e-12

    def test_base(self):
        rows = run_sweep(spec_from_table("fig3", {"steps": 2, "base": math.e}))
        assert rows[0].I_bits == pytest.approx(0.5 * math.log(2), abs=1e-12)


class TestInvariants:
    def test_qubit_bound(self):
        spec = SweepSpec("single")
        with pytest.raises(InvariantViolation):
            check_invariants(spec, [FigureRow("single", I_bits=0.6)])
        with pytest.raises(InvariantViolation):
            check_invariants(spec, [FigureRow("single", I_bits=-1e-9)])
        check_invariants(spec, [FigureRow("single", I_bits=0.5)])

    def test_classical_nonzero(self):
        with pytest.raises(InvariantViolation):
            check_invariants(SweepSpec("classical-check"), [FigureRow("classical-check", "table", 0.0, I_bits=1e-6)])

    def test_circuit_channel_mismatch(self, monkeypatch):
        monkeypatch.setattr(sweep, "tici_quantum", lambda *a, **k: ContextReport(0.25, 0.5, 0.0, False))
        with pytest.raises(InvariantViolation, match="circuit"):
            run_sweep(spec_from_table("fig3", {"steps": 2}))


class TestEmit:
    def test_csv(self, tmp_path):
        path = emit_figure_data(run_sweep(spec_from_table("fig3", {})), tmp_path / "f.csv")
        text = path.read_text()
        assert text.splitlines()[0] == HEADER
        rows = list(csv.DictReader(text.splitlines()))
        assert float(rows[0]["I_bits"]) == pytest.approx(0.5)
        assert float(rows[-1]["I_bits"]) == pytest.approx(0.5)
        assert rows[0]["I_sampled"] == "" and rows[0]["I_stderr"] == ""

    def test_twelve_digits(self, tmp_path):
        path = emit_figure_data([FigureRow("single", I_bits=1 / 3)], tmp_path / "f.csv")
        assert "0.333333333333," in path.read_text()

    def test_json_mirror(self, tmp_path):
        rows = run_sweep(spec_from_table("fig3", {"steps": 3}))
        data = json.loads(emit_figure_data(rows, tmp_path / "f.json", "json").read_text())
        assert [list(d) for d in data] == [list(COLUMNS)] * 3
        assert data[0]["I_sampled"] is None and data[0]["I_bits"] == 0.5

    def test_infinite_values(self, tmp_path):
        row = FigureRow("single", I_bits=0.1, I_sampled=math.inf)
        assert ",inf," in emit_figure_data([row], tmp_path / "f.csv").read_text()
        assert json.loads(emit_figure_data([row], tmp_path / "f.json", "json").read_text())[0]["I_sampled"] == "inf"

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            emit_figure_data([], tmp_path / "empty.csv")
        assert not (tmp_path / "empty.csv").exists()

    def test_byte_stable(self, tmp_path):
        spec = spec_from_table("fig3", {"steps": 5, "counts": 1000, "seed": 11})
        a = emit_figure_data(run_sweep(spec), tmp_path / "a.csv").read_bytes()
        b = emit_figure_data(run_sweep(spec), tmp_path / "b.csv").read_bytes()
        assert a == b

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            emit_figure_data([FigureRow("single", I_bits=0.0)], tmp_path / "missing" / "f.csv")


class TestCLI:
    def test_fig3(self, tmp_path):
        out = tmp_path / "fig3.csv"
        assert main(["fig3", "--axis", "x", "--steps", "33", "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == HEADER and len(lines) == 34

    def test_fig4_json_stdout(self, capsys):
        assert main(["fig4", "--p", "1", "--steps", "3", "--format", "json"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert [d["I_bits"] for d in data] == [0.0, 0.0, 0.0]

    def test_counts_flag(self, capsys):
        assert main(["fig3", "--steps", "2", "--counts", "1000"]) == EXIT_OK
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert all(r["I_sampled"] and r["I_stderr"] for r in rows)

    def test_max_search_and_classical(self, capsys):
        assert main(["max-search", "--samples", "200", "--seed", "1", "--dim", "2"]) == EXIT_OK
        assert main(["classical-check", "--tables", "20", "--seed", "2"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "max-search,samples,200," in out and "classical-check,table,19," in out

    def test_run_config(self, tmp_path):
        cfg = tmp_path / "c.toml"
        out = tmp_path / "o.csv"
        cfg.write_text(f'[fig3]\naxis = "z"\nsteps = 5\nout = "{out.as_posix()}"\n')
        assert main(["run", str(cfg)]) == EXIT_OK
        assert out.read_text().startswith(HEADER)
        # command-line flags override the file
        assert main(["run", str(cfg), "--format", "json"]) == EXIT_OK
        assert json.loads(out.read_text())[0]["mode"] == "fig3"

    @pytest.mark.parametrize("argv", [
        ["fig3", "--steps", "1"],
        ["fig4", "--p", "3"],
        ["fig3", "--base", "0.5"],
        ["max-search", "--samples", "0"],
        ["plot"],
        [],
        ["run", "/nonexistent/config.toml"],
    ])
    def test_config_errors(self, argv, capsys):
        assert main(argv) == EXIT_CONFIG
        assert "error" in capsys.readouterr().err

    def test_bad_domain_in_file(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text("[fig4]\np = 2.5\n")
        assert main(["run", str(cfg)]) == EXIT_CONFIG
        assert "p ∈ [0,2]" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path):
        assert main(["fig3", "--steps", "2", "--out", str(tmp_path / "no" / "f.csv")]) == EXIT_CONFIG

    def test_invariant_exit(self, monkeypatch):
        monkeypatch.setattr(sweep, "tici_quantum", lambda *a, **k: ContextReport(0.25, 0.5, 0.0, False))
        assert main(["fig3", "--steps", "2"]) == EXIT_INVARIANT

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "tici", "fig4", "--p", "0", "--steps", "3"],
                              capture_output=True, text=True, check=True)
        assert proc.stdout.splitlines()[0] == HEADER
