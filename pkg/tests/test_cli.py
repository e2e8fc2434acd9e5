import json

import numpy as np
import pytest

import rt0eig.cli as cli
from rt0eig.cli import (ConfigError, StudyConfig, emit_reports, main,
                        parse_config, run_study)
from rt0eig.eigensolver import NumericalError

GOOD_CONFIG = """\
[study]
preset = laplace
levels = 2 4
k = 2

[output]
directory = {out}
"""


def _write(tmp_path, text, name="study.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_good_config(tmp_path):
    cfg = parse_config(_write(tmp_path, GOOD_CONFIG.format(out=tmp_path / "r")))
    assert cfg.preset == "laplace"
    assert cfg.levels == [2, 4]
    assert cfg.k == 2
    assert cfg.expansion_order == 2.0
    assert cfg.solver == "dense"
    assert not cfg.compute_superclose


def test_parse_rejects_unknown_key(tmp_path):
    bad = GOOD_CONFIG.format(out=tmp_path) + "typo_key = 1\n"
    with pytest.raises(ConfigError, match="unknown \\[output\\] keys"):
        parse_config(_write(tmp_path, bad))


def test_parse_rejects_unknown_section(tmp_path):
    bad = GOOD_CONFIG.format(out=tmp_path) + "\n[plotting]\nstyle = x\n"
    with pytest.raises(ConfigError, match="unknown config sections"):
        parse_config(_write(tmp_path, bad))


def test_parse_rejects_missing_required(tmp_path):
    with pytest.raises(ConfigError, match="missing required"):
        parse_config(_write(tmp_path, "[study]\npreset = laplace\nk = 1\n"))


def test_parse_rejects_bad_boolean(tmp_path):
    bad = GOOD_CONFIG.format(out=tmp_path).replace(
        "[output]", "compute_superclose = yes\n[output]")
    with pytest.raises(ConfigError, match="compute_superclose"):
        parse_config(_write(tmp_path, bad))


def test_parse_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "absent.ini")


def test_non_doubling_levels_rejected_before_computation(tmp_path):
    bad = GOOD_CONFIG.format(out=tmp_path).replace("levels = 2 4",
                                                   "levels = 8 24")
    with pytest.raises(ConfigError, match="double"):
        parse_config(_write(tmp_path, bad))


def test_validate_bounds():
    with pytest.raises(ConfigError, match="at least two"):
        StudyConfig(preset="laplace", levels=[4], k=1).validate()
    with pytest.raises(ConfigError, match="k must be"):
        StudyConfig(preset="laplace", levels=[2, 4], k=0).validate()
    with pytest.raises(ConfigError, match="exceeds"):
        StudyConfig(preset="laplace", levels=[1, 2], k=5).validate()
    with pytest.raises(ConfigError, match="unknown preset"):
        StudyConfig(preset="euler", levels=[2, 4], k=1).validate()
    with pytest.raises(ConfigError, match="solver"):
        StudyConfig(preset="laplace", levels=[2, 4], k=1,
                    solver="quantum").validate()
    with pytest.raises(ConfigError, match="expansion order"):
        StudyConfig(preset="laplace", levels=[2, 4], k=1,
                    expansion_order=-1).validate()


def test_presets_command(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["laplace", "shifted", "variable"]


def test_main_config_error_exit_code(tmp_path, capsys):
    bad = _write(tmp_path, "[study]\npreset = laplace\nlevels = 8 24\nk = 1\n")
    assert main(["run", str(bad)]) == 1
    assert "config error" in capsys.readouterr().err


def test_run_study_writes_reports(tmp_path, capsys):
    out = tmp_path / "res"
    cfgfile = _write(tmp_path, GOOD_CONFIG.format(out=out))
    assert main(["run", str(cfgfile)]) == 0
    csv_lines = (out / "report.csv").read_text().splitlines()
    assert csv_lines[0] == ",".join(cli.CSV_COLUMNS)
    # one row per (eigenvalue-or-cluster, level), constant field count
    counts = {len(line.split(",")) for line in csv_lines}
    assert counts == {len(cli.CSV_COLUMNS)}
    payload = json.loads((out / "report.json").read_text())
    assert payload["status"] == "ok"
    assert [lv["n"] for lv in payload["levels"]] == [2, 4]
    assert (out / "timings.json").exists()
    assert "total time" in capsys.readouterr().out


def test_cli_overrides(tmp_path):
    out = tmp_path / "a"
    cfgfile = _write(tmp_path, GOOD_CONFIG.format(out=out))
    out2 = tmp_path / "b"
    assert main(["run", str(cfgfile), "--output-dir", str(out2),
                 "--levels", "4,8", "--k", "3"]) == 0
    payload = json.loads((out2 / "report.json").read_text())
    assert payload["study"]["levels"] == [4, 8]
    assert payload["study"]["k"] == 3
    assert not out.exists()


def test_shifted_study_columns_shift_by_five(tmp_path):
    base = StudyConfig(preset="laplace", levels=[4, 8], k=3,
                       output_dir=tmp_path / "lap")
    shifted = StudyConfig(preset="shifted", levels=[4, 8], k=3,
                          output_dir=tmp_path / "shf")
    t0, _ = run_study(base)
    t5, _ = run_study(shifted)
    for r0, r5 in zip(t0.rows, t5.rows):
        assert np.abs((r5.raw - 5.0) - r0.raw).max() <= 1e-8 * np.abs(r0.raw).max()


def test_json_round_trip_at_12_digits(tmp_path):
    cfg = StudyConfig(preset="laplace", levels=[2, 4], k=2,
                      output_dir=tmp_path / "r")
    table, _ = run_study(cfg)
    payload = json.loads((tmp_path / "r" / "report.json").read_text())
    for row, entry in zip(table.rows, payload["eigen"]):
        for want, got in zip(row.raw, entry["lambda_h"]):
            assert got == float(f"{want:.12g}")
        for want, got in zip(row.extrapolated, entry["lambda_extrap"]):
            assert got == float(f"{want:.12g}")
    for res_level, entry in zip([2, 4], payload["levels"]):
        assert entry["n"] == res_level


def test_determinism_byte_identical(tmp_path):
    cfg_a = StudyConfig(preset="laplace", levels=[2, 4], k=2,
                        compute_superclose=True, output_dir=tmp_path / "a")
    cfg_b = StudyConfig(preset="laplace", levels=[2, 4], k=2,
                        compute_superclose=True, output_dir=tmp_path / "b")
    run_study(cfg_a)
    run_study(cfg_b)
    assert ((tmp_path / "a" / "report.csv").read_bytes()
            == (tmp_path / "b" / "report.csv").read_bytes())
    assert ((tmp_path / "a" / "report.json").read_bytes()
            == (tmp_path / "b" / "report.json").read_bytes())


def test_emit_reports_without_table(tmp_path):
    """No convergence rows: header-only CSV, valid JSON with empty array."""
    cfg = StudyConfig(preset="laplace", levels=[2, 4], k=2,
                      output_dir=tmp_path / "empty")
    paths = emit_reports(None, cfg, [], [])
    lines = paths["csv"].read_text().splitlines()
    assert lines == [",".join(cli.CSV_COLUMNS)]
    payload = json.loads(paths["json"].read_text())
    assert payload["eigen"] == []
    assert payload["levels"] == []


def test_emit_reports_unwritable_path_named(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = StudyConfig(preset="laplace", levels=[2, 4], k=2,
                      output_dir=blocker / "sub")
    with pytest.raises(ConfigError, match="file"):
        emit_reports(None, cfg, [], [])


def test_numerical_failure_marks_level_and_exit_code(tmp_path, monkeypatch, capsys):
    calls = {"count": 0}

    def explode(mesh, sys_, k, method="dense", seed=0):
        calls["count"] += 1
        if calls["count"] >= 2:
            raise NumericalError("synthetic breakdown")
        return real(mesh, sys_, k, method=method, seed=seed)

    real = cli.solve_mixed_eigenproblem
    monkeypatch.setattr(cli, "solve_mixed_eigenproblem", explode)
    out = tmp_path / "fail"
    cfgfile = _write(tmp_path, GOOD_CONFIG.format(out=out))
    assert main(["run", str(cfgfile)]) == 2
    assert "numerical failure" in capsys.readouterr().err
    payload = json.loads((out / "report.json").read_text())
    assert payload["status"] == "failed"
    statuses = {lv["n"]: lv["status"] for lv in payload["levels"]}
    assert statuses == {2: "ok", 4: "failed"}
    assert "synthetic breakdown" in payload["levels"][-1]["error"]


def test_dump_matrices_flag(tmp_path):
    cfg = StudyConfig(preset="laplace", levels=[1, 2], k=1,
                      dump_matrices=True, output_dir=tmp_path / "dumps")
    run_study(cfg)
    for name in ("M", "B", "C", "D"):
        assert (tmp_path / "dumps" / f"matrix_n1_{name}.txt").exists()
        assert (tmp_path / "dumps" / f"matrix_n2_{name}.txt").exists()
    # C of the laplace preset is all zeros: diagonal dump carries the zeros
    c_text = (tmp_path / "dumps" / "matrix_n1_C.txt").read_text()
    assert [ln.split()[2] for ln in c_text.splitlines()] == ["0", "0"]


def test_iterative_solver_study(tmp_path):
    cfg = StudyConfig(preset="laplace", levels=[4, 8], k=2,
                      solver="iterative", seed=7, output_dir=tmp_path / "it")
    table, _ = run_study(cfg)
    dense = StudyConfig(preset="laplace", levels=[4, 8], k=2,
                        output_dir=tmp_path / "dn")
    table_d, _ = run_study(dense)
    for ri, rd in zip(table.rows, table_d.rows):
        assert np.abs(ri.raw - rd.raw).max() <= 1e-8 * np.abs(rd.raw).max()
