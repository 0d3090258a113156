import json
import subprocess
import sys

import pytest

from tforge.cli import main
from tforge.model import dump_topology, prism_topology

OUTPUTS = ["equilibrium.json", "sag.json", "modal.json", "modes.csv", "clearance.csv",
           "plan.json", "report.txt", "base.dxf", "strut.dxf", "posts.csv"]


@pytest.fixture
def setup(tmp_path):
    dump_topology(prism_topology(3), tmp_path / "topo.json")
    mat = {"strut_length_in": 10.0, "strut_mass_lbm": 0.02, "spring_stiffness_lbf_per_in": 1.0,
           "spring_free_length_in": 3.0, "gravity_in_per_s2": 386.09}
    (tmp_path / "mat.json").write_text(json.dumps(mat))
    cfg = {"topology": "topo.json", "material": "mat.json", "formfind": {"restarts": 3}}
    (tmp_path / "run.json").write_text(json.dumps(cfg))
    return tmp_path


def test_all_writes_every_artifact(setup):
    out = setup / "out"
    assert main(["all", "--config", str(setup / "run.json"), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == sorted(OUTPUTS)
    modal = json.loads((out / "modal.json").read_text())
    assert modal[0] == {"mode": 1, "frequency_hz": 0.0} and len(modal) == 18
    assert json.loads((out / "plan.json").read_text())["pt1"] >= 1


def test_missing_topology_is_config_error(setup, capsys):
    cfg = {"topology": "nope.json", "material": "mat.json"}
    (setup / "bad.json").write_text(json.dumps(cfg))
    assert main(["formfind", "--config", str(setup / "bad.json"), "--out", str(setup / "o")]) == 2
    assert "nope.json" in capsys.readouterr().err


def test_unknown_key_is_config_error(setup):
    (setup / "bad.json").write_text(json.dumps({"topology": "topo.json", "material": "mat.json", "sedd": 1}))
    assert main(["formfind", "--config", str(setup / "bad.json"), "--out", str(setup / "o")]) == 2


def test_invalid_topology_is_config_error(setup, capsys):
    (setup / "topo.json").write_text(json.dumps({"n_struts": 2, "struts": [[1, 2], [3, 4]], "springs": [[1, 2]]}))
    assert main(["formfind", "--config", str(setup / "run.json"), "--out", str(setup / "o")]) == 2
    assert "duplicates a strut" in capsys.readouterr().err


def test_stage_failure_names_stage(setup, capsys):
    assert main(["analyze", "--config", str(setup / "run.json"), "--out", str(setup / "o")]) == 1
    assert "stage 'analyze'" in capsys.readouterr().err


def test_out_dir_from_environment(setup, monkeypatch):
    monkeypatch.setenv("TFORGE_OUT", str(setup / "env_out"))
    assert main(["formfind", "--config", str(setup / "run.json")]) == 0
    assert (setup / "env_out" / "equilibrium.json").is_file()


def test_no_out_dir(setup, monkeypatch):
    monkeypatch.delenv("TFORGE_OUT", raising=False)
    assert main(["formfind", "--config", str(setup / "run.json")]) == 2


def test_rerun_analyze_after_stiffness_change(setup):
    out = setup / "out"
    cfg = str(setup / "run.json")
    assert main(["formfind", "--config", cfg, "--out", str(out), "--supports", "1,3,5"]) == 0
    assert main(["analyze", "--config", cfg, "--out", str(out), "--supports", "1,3,5"]) == 0
    sag1 = json.loads((out / "sag.json").read_text())["max_sag_in"]
    eq = (out / "equilibrium.json").read_bytes()
    mat = json.loads((setup / "mat.json").read_text())
    mat["spring_stiffness_lbf_per_in"] = 2.0
    (setup / "mat.json").write_text(json.dumps(mat))
    assert main(["analyze", "--config", cfg, "--out", str(out), "--supports", "1,3,5"]) == 0
    sag2 = json.loads((out / "sag.json").read_text())
    assert sag2["supports"] == [1, 3, 5]
    assert sag2["max_sag_in"] == pytest.approx(sag1 / 2, rel=1e-8)
    assert (out / "equilibrium.json").read_bytes() == eq


def test_flags_override(setup):
    out = setup / "out"
    cfg = str(setup / "run.json")
    assert main(["all", "--config", cfg, "--out", str(out), "--threshold", "100", "--roll-scan",
                 "--exhaustive-budget", "1", "--seed", "4", "--tension-only"]) == 0
    rows = (out / "clearance.csv").read_text().splitlines()[1:]
    assert all(r.endswith(",1") for r in rows)


def test_module_entry_point(setup):
    proc = subprocess.run([sys.executable, "-m", "tforge", "formfind", "--config", str(setup / "run.json"),
                           "--out", str(setup / "m")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (setup / "m" / "equilibrium.json").is_file()
