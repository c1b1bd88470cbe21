import json

import pytest

from invdelay.cli import EXIT_THRESHOLD, main
from invdelay.current_model import CurrentModel
from invdelay.delay_model import DelayModel


def test_simulate_text(capsys):
    assert main(["simulate", "--cl", "10"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("t_phl = ") and "ps" in out


def test_simulate_json_and_trace(capsys, tmp_path):
    trace = tmp_path / "t.csv"
    assert main(["--format", "json", "simulate", "--W", "2", "--cl", "20",
                 "--trace", str(trace)]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["params"]["W"] == 2
    assert record["t_phl_ps"] > 0
    assert trace.read_text().startswith("t_s,vin_V,vout_V,idn_A")


def test_rise_matches_fall_for_mirrored_device(capsys):
    main(["--format", "json", "simulate", "--cl", "30"])
    fall = json.loads(capsys.readouterr().out)["t_phl_ps"]
    main(["--format", "json", "simulate", "--cl", "30", "--rise"])
    rise = json.loads(capsys.readouterr().out)["t_plh_ps"]
    assert rise == fall


def test_sweep_csv(capsys):
    assert main(["sweep", "--parameter", "W"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "parameter,value,ratio,idsat_A,current_ratio"
    assert len(lines) == 6


def test_fit_and_eval(capsys, tmp_path):
    cm_path, dm_path = tmp_path / "cm.json", tmp_path / "dm.json"
    assert main(["fit-current", "-o", str(cm_path)]) == 0
    assert main(["fit-delay", "--current-model", str(cm_path), "-o", str(dm_path)]) == 0
    CurrentModel.load(cm_path)
    DelayModel.load(dm_path)
    capsys.readouterr()
    assert main(["--format", "json", "eval", "--current-model", str(cm_path),
                 "--delay-model", str(dm_path), "--L", "86", "--W", "2.5", "--cl", "40"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["idsat_A"] > 0 and record["t_phl_ps"] > 0
    assert record["idsat_extrapolated"] is False


def test_validate_current_writes_reports(capsys, tmp_path):
    assert main(["--out-dir", str(tmp_path), "validate-current"]) == 0
    for ext in ("txt", "csv", "json"):
        assert (tmp_path / f"validate_current.{ext}").exists()
    assert "max error" in capsys.readouterr().out


def test_threshold_exit_code(tmp_path, capsys):
    cfg = tmp_path / "strict.json"
    cfg.write_text(json.dumps({"thresholds": {"current_avg": 0.0, "current_max": 0.0,
                                              "delay_avg": 0.0, "delay_max": 0.0}}))
    assert main(["--config", str(cfg), "validate-current"]) == EXIT_THRESHOLD
    assert "above threshold" in capsys.readouterr().err


def test_trace(tmp_path, capsys):
    assert main(["--out-dir", str(tmp_path), "trace", "iv_curves", "--widths", "1", "3"]) == 0
    header = (tmp_path / "iv_curves.csv").read_text().splitlines()[0]
    assert header == "vds_V,id_A_W1um,id_A_W3um"


def test_pipeline_seed_override(tmp_path, capsys):
    assert main(["--seed", "7", "--out-dir", str(tmp_path), "pipeline"]) == 0
    report = json.loads((tmp_path / "validate_delay.json").read_text())
    assert report["echo"]["seed"] == 7
    assert (tmp_path / "current_model.json").exists()


def test_subcommand_required(capsys):
    with pytest.raises(SystemExit):
        main([])
