"""Tests for adipal.cli module."""

import math
from unittest.mock import patch

import pytest
from rich.console import Console

from adipal.adi import SchemeKind
from adipal.cli import cmd_bounds, cmd_converge, main
from adipal.harness import ErrorRecord, ExperimentConfig


def test_bounds_two_dimensions(capsys):
    """Test that bounds prints the 2D values and flags them as sharp."""
    main(["bounds", "--k", "2", "--gamma", "0.9"])
    out = capsys.readouterr().out
    assert "0.317" in out
    assert "0.278" in out
    assert "sharp" in out


def test_bounds_three_dimensions(capsys):
    main(["bounds", "--k", "3", "--gamma", "0.75"])
    out = capsys.readouterr().out
    for value in ("0.556", "0.385", "0.335", "0.500"):
        assert value in out


def test_bounds_gamma_one_mentions_prior_bound(capsys):
    main(["bounds", "--k", "3", "--gamma", "1"])
    out = capsys.readouterr().out
    assert "0.667" in out
    assert "0.696" in out


def test_bounds_high_dimension_is_necessary_only(capsys):
    main(["bounds", "--k", "4", "--gamma", "1"])
    out = capsys.readouterr().out
    assert "necessary-only" in out
    assert "Sufficient bounds" in out


def test_cmd_bounds_rows():
    rows = cmd_bounds(2, 0.0, Console(quiet=True))
    assert [r["scheme"] for r in rows] == ["Do", "CS", "MCS", "HV"]
    assert [r["theorem1"] for r in rows] == [0.5, 0.5, 0.25, 0.25]
    assert all(r["sharp"] and not r["necessary_only"] for r in rows)


def test_bounds_bad_gamma_exits(capsys):
    """Test that invalid parameters print an error and exit with status 1."""
    with pytest.raises(SystemExit) as exc_info:
        main(["bounds", "--k", "2", "--gamma", "1.5"])
    assert exc_info.value.code == 1
    assert "Error" in capsys.readouterr().out


def test_version(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert "adipal 0.1.0" in capsys.readouterr().out


def test_missing_subcommand():
    with pytest.raises(SystemExit) as exc_info:
        main([])
    assert exc_info.value.code == 2


def test_sweep_at_bound_is_stable(tmp_path, capsys):
    out_file = tmp_path / "hv.csv"
    main(
        [
            "sweep",
            "--scheme",
            "HV",
            "--theta-policy",
            "theorem1",
            "--template",
            "2d-gamma",
            "--nphi",
            "8",
            "--rcount",
            "3",
            "--out",
            str(out_file),
        ]
    )
    out = capsys.readouterr().out
    assert "stable" in out
    assert "unstable" not in out
    lines = out_file.read_text().splitlines()
    assert lines[0] == "scheme,theta,r,phi_1,phi_2,absM"
    assert len(lines) == 1 + 8 * 8 * 3


def test_sweep_below_bound_is_unstable(capsys):
    main(["sweep", "--scheme", "Do", "--theta", "0.3", "--nphi", "16", "--rcount", "5"])
    assert "unstable" in capsys.readouterr().out


def test_sweep_bad_ratio_range(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["sweep", "--scheme", "HV", "--theta", "0.3", "--rmin", "10", "--rmax", "1"])
    assert exc_info.value.code == 1
    assert "rmin" in capsys.readouterr().out


def test_converge_from_config_file(tmp_path, capsys):
    config = tmp_path / "experiment.yaml"
    config.write_text("m: 8\nschemes: [HV]\nsteps: [1, 2]\nt_final: 1\n")
    out_file = tmp_path / "errors.csv"
    main(["converge", "--config", str(config), "--out", str(out_file), "--workers", "2"])
    lines = out_file.read_text().splitlines()
    assert lines[0] == "scheme,theta,m,dt,error"
    assert len(lines) == 3
    assert lines[1].startswith("HV,0.2782")
    assert (tmp_path / "errors.slopes.csv").exists()
    assert "slopes" in capsys.readouterr().out.lower()


def test_converge_cli_overrides_config(tmp_path):
    config = tmp_path / "experiment.yaml"
    config.write_text("m: 8\nschemes: [HV]\nsteps: [1]\nt_final: 1\n")
    out_file = tmp_path / "errors.csv"
    main(
        [
            "converge",
            "--config",
            str(config),
            "--schemes",
            "Do,CS",
            "--theta-policy",
            "value:0.6",
            "--out",
            str(out_file),
        ]
    )
    lines = out_file.read_text().splitlines()[1:]
    theta = "0.59999999999999998"
    assert [line.split(",")[:2] for line in lines] == [["Do", theta], ["CS", theta]]


def test_converge_bad_grid_list(capsys):
    with pytest.raises(SystemExit):
        main(["converge", "--m", "forty"])
    assert "--m expects integers" in capsys.readouterr().out


def test_cmd_converge_writes_both_files(tmp_path):
    """Test that cmd_converge writes error and slope CSVs from the harness records."""
    records = [
        ErrorRecord(SchemeKind.HV, 0.3, 40, 0.1, 1e-3, 50),
        ErrorRecord(SchemeKind.HV, 0.3, 40, 0.01, 1e-5, 500),
        ErrorRecord(SchemeKind.HV, 0.3, 40, 0.001, math.inf, 5000),
    ]
    config = ExperimentConfig(out=tmp_path / "e.csv")
    with patch("adipal.cli.run_convergence", return_value=records) as mock_run:
        result = cmd_converge(config, workers=4, console=Console(quiet=True))
    mock_run.assert_called_once()
    assert mock_run.call_args.kwargs["workers"] == 4
    assert result == records
    assert (tmp_path / "e.csv").read_text().splitlines()[-1].endswith(",inf")
    scheme, theta, m, slope, points, monotone = (
        (tmp_path / "e.slopes.csv").read_text().splitlines()[1].split(",")
    )
    assert (scheme, theta, m) == ("HV", "0.29999999999999999", "40")
    assert float(slope) == pytest.approx(2.0)
    assert (points, monotone) == ("2", "false")


def test_lemmas(capsys):
    main(["lemmas", "--alpha", "1", "--delta", "1", "--max-u", "5", "--h", "0.05"])
    out = capsys.readouterr().out
    assert "yes" in out
    assert "0.343" in out


def test_lemmas_bad_delta(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["lemmas", "--alpha", "1", "--delta", "5"])
    assert exc_info.value.code == 1
    assert "delta" in capsys.readouterr().out


def test_converge_malformed_config_exits(tmp_path, capsys):
    config = tmp_path / "experiment.yaml"
    config.write_text("m: [abc]\n")
    with pytest.raises(SystemExit) as exc_info:
        main(["converge", "--config", str(config)])
    assert exc_info.value.code == 1
    assert "Error" in capsys.readouterr().out


def test_sweep_anisotropic_csv_has_direction_ratios(tmp_path):
    out_file = tmp_path / "aniso.csv"
    main(
        [
            "sweep", "--scheme", "CS", "--theta", "0.5", "--nphi", "4", "--rcount", "2",
            "--anisotropic", "--out", str(out_file),
        ]
    )
    lines = out_file.read_text().splitlines()
    assert lines[0] == "scheme,theta,r,r_1,r_2,phi_1,phi_2,absM"
    assert len(lines) == 1 + 3 * 2 * 4 * 4
    assert len({tuple(line.split(",")[3:5]) for line in lines[1:]}) == 3 * 2
