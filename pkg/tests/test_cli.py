import json
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustbf.cli import RunConfig, main
from robustbf.sim import SimConfig

TINY_SIM = dict(SimConfig(K=1, J=1, N_T=3, N_PR=2, trials=2, gamma_base_db=0.0, P_I_dbm=-95.0).__dict__)


def write_cfg(tmp_path, **kw):
    d = {"sim": dict(TINY_SIM), "schemes": ["optimal", "baseline2"], "n_error_samples": 20, "n_tries": 2,
         "out_dir": str(tmp_path / "out")}
    for k, v in kw.items():
        if k == "sim":
            d["sim"].update(v)
        else:
            d[k] = v
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d, indent=1))
    return str(path)


def test_default_config_round_trip():
    c = RunConfig(sim=SimConfig())
    assert RunConfig.from_json(c.to_json()) == c


@given(st.integers(1, 4), st.floats(-10, 20, allow_nan=False), st.integers(1, 50),
       st.sampled_from(["gamma_base_db", "K", "N_T"]))
@settings(max_examples=30, deadline=None)
def test_config_round_trip(K, gamma, tries, param):
    d = {"sim": {**TINY_SIM, "K": K, "gamma_base_db": gamma}, "n_tries": tries,
         "sweep": {"param": param, "values": [3, 4]}}
    a = RunConfig.from_dict(d)
    b = RunConfig.from_json(a.to_json())
    assert a == b and a.to_json() == b.to_json()


def test_missing_field_named(tmp_path, capsys):
    d = {"sim": {k: v for k, v in TINY_SIM.items() if k != "trials"}}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(d))
    assert main(["solve", "--config", str(path)]) == 1
    assert "trials" in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text('{\n  "sim": {\n    "K": 2,,\n  }\n}\n')
    assert main(["campaign", "--config", str(path)]) == 1
    assert "line 3" in capsys.readouterr().err


@pytest.mark.parametrize("bad, field", [
    ({"schemes": ["optimal", "magic"]}, "schemes"),
    ({"sweep": {"param": "colour", "values": [1]}}, "sweep"),
    ({"sweep": {"param": "K", "values": [0]}}, "sweep"),
    ({"n_tries": 0}, "n_tries"),
    ({"solver": {"gap_tol": -1}}, "solver"),
    ({"sim": {"K": "two"}}, "sim"),
    ({"extra": 1}, "extra"),
])
def test_invalid_fields(tmp_path, capsys, bad, field):
    assert main(["solve", "--config", write_cfg(tmp_path, **bad)]) == 1
    assert field in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_bad_threads(tmp_path):
    assert main(["campaign", "--config", write_cfg(tmp_path), "--threads", "0"]) == 1


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["solve", "--config", write_cfg(tmp_path), "--out", str(blocker / "sub")]) == 1
    assert "writable" in capsys.readouterr().err


def test_solve_feasible(tmp_path, capsys):
    cfg = write_cfg(tmp_path, sim=dict(SimConfig().__dict__), trial=35, schemes=["optimal", "baseline1"],
                    n_error_samples=100)
    assert main(["solve", "--config", cfg]) == 0
    out = tmp_path / "out"
    sol = json.loads((out / "solution.json").read_text())
    p = sol["solutions"]["optimal"]["total_power_w"]
    assert sol["solutions"]["optimal"]["status"] == "optimal" and 0 < p < float("inf")
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["optimal"]["status"] == "solved"
    text = capsys.readouterr().out
    assert "dBm" in text and "bit/s/Hz" in text


def test_solve_infeasible(tmp_path):
    # a 60 dB target at a two-antenna transmitter with a -30 dB leakage cap
    cfg = write_cfg(tmp_path, sim={"N_T": 2, "N_PR": 1, "gamma_base_db": 60.0, "gamma_tol_db": -30.0, "K": 2},
                    schemes=["optimal"])
    assert main(["solve", "--config", cfg]) == 2


def test_campaign_outputs(tmp_path, capsys):
    cfg = write_cfg(tmp_path, sweep={"param": "gamma_base_db", "values": [0, 2]})
    assert main(["campaign", "--config", cfg, "--seed", "3"]) == 0
    out = tmp_path / "out"
    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[0] == "# schema=1"
    assert len(lines) == 2 + 2 * 2
    assert len((out / "trials.jsonl").read_text().splitlines()) == 2 * 2 * 2
    saved = RunConfig.from_json((out / "config.json").read_text())
    assert saved.sim.seed == 3
    assert "dBm" in capsys.readouterr().out
    # a rerun reproduces everything except the wall-clock column
    first = lines
    assert main(["campaign", "--config", cfg, "--seed", "3", "--trials", "2"]) == 0
    second = (out / "metrics.csv").read_text().splitlines()
    col = first[1].split(",").index("mean_solve_ms")

    def strip(rows):
        return [[c for i, c in enumerate(r.split(",")) if i != col] for r in rows]
    assert strip(first) == strip(second)


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "robustbf.cli", "solve", "--config", str(tmp_path / "x.json")],
                       capture_output=True, text=True, env={**os.environ})
    assert r.returncode == 1 and "config error" in r.stderr
