"""Exit-code contract, determinism, config merging, and output shapes of the
command-line front end."""

import json

import pytest

from ferrospin import harness
from ferrospin.cli import main, worker_count
from ferrospin.errors import InputError
from ferrospin.model import TwoSpinSystem, instance_dict


def write_instance(tmp_path, name, n, lam, edges):
    system = TwoSpinSystem.from_params(n, lam, edges)
    path = tmp_path / name
    path.write_text(json.dumps(instance_dict(system)))
    return path


@pytest.fixture
def path5(tmp_path):
    """A five-vertex path instance file."""
    return write_instance(
        tmp_path, "path5.json", 5, [0.7, 0.4, 0.9, 0.5, 0.6],
        [(0, 1, 1.0, 2.0), (1, 2, 0.9, 2.5), (2, 3, 1.0, 3.0),
         (3, 4, 0.8, 2.2)])


@pytest.fixture
def triangle(tmp_path):
    return write_instance(
        tmp_path, "tri.json", 3, [0.5, 0.5, 0.5],
        [(0, 1, 1.0, 2.0), (1, 2, 1.0, 2.0), (0, 2, 1.0, 2.0)])


# ---------------------------------------------------------------------------
# exit codes


def test_sample_success_writes_csv(path5, tmp_path):
    out = tmp_path / "traj.csv"
    code = main(["sample", "--instance", str(path5), "--schedule", "glauber",
                 "--steps", "50", "--seed", "7", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[6] == "step,hamming_weight,coupled_flag"
    assert len(lines) == 7 + 50


def test_missing_instance_file_names_the_path(tmp_path, capsys):
    bad = tmp_path / "nothere.json"
    assert main(["exact", "--instance", str(bad)]) == 1
    assert str(bad) in capsys.readouterr().err


def test_alternating_scan_on_non_bipartite_is_input_error(triangle, capsys):
    code = main(["sample", "--instance", str(triangle),
                 "--schedule", "alternating-scan", "--steps", "3"])
    assert code == 1
    assert "parts not independent sets" in capsys.readouterr().err


def test_capacity_error_exits_two(tmp_path):
    big = write_instance(tmp_path, "big.json", 25, [0.5] * 25, [])
    assert main(["exact", "--instance", str(big)]) == 2


def test_verification_failure_exits_three_but_writes_report(
        tmp_path, monkeypatch):
    bad_row = harness.inequality_row("forced-failure", "x", 2.0, 1.0,
                                     tolerance=0.0)
    monkeypatch.setitem(harness._SUITES, "saw-oracle", lambda cfg: [bad_row])
    out = tmp_path / "rep"
    code = main(["verify", "--suite", "saw-oracle", "--out", str(out)])
    assert code == 3
    text = (tmp_path / "rep.csv").read_text()
    assert "forced-failure" in text and ",false," in text.replace("false",
                                                                  ",false,")
    assert (tmp_path / "rep.json").exists()


def test_unknown_flag_is_input_error_not_system_exit(path5):
    assert main(["sample", "--instance", str(path5), "--bogus"]) == 1


def test_bad_d1_message(path5, capsys):
    code = main(["region", "--instance", str(path5), "--center", "0",
                 "--d1", "0", "--d2", "3"])
    assert code == 1
    assert "d1 must be >= 1" in capsys.readouterr().err


def test_instance_and_rbm_are_mutually_exclusive(path5, capsys):
    assert main(["exact", "--instance", str(path5), "--rbm", str(path5)]) == 1
    assert main(["exact"]) == 1


# ---------------------------------------------------------------------------
# determinism


def test_sample_is_byte_deterministic(path5, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert main(["sample", "--instance", str(path5), "--schedule",
                     "alternating-scan", "--steps", "40", "--seed", "13",
                     "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_verify_report_is_byte_deterministic(tmp_path):
    blobs = []
    for name in ("r1", "r2"):
        assert main(["verify", "--suite", "field", "--trials", "3",
                     "--max-n", "3", "--seed", "5",
                     "--out", str(tmp_path / name)]) == 0
        blobs.append(((tmp_path / f"{name}.csv").read_bytes(),
                      (tmp_path / f"{name}.json").read_bytes()))
    assert blobs[0] == blobs[1]


def test_region_sweep_deterministic_across_worker_counts(
        path5, tmp_path, monkeypatch):
    outputs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("FERROSPIN_THREADS", threads)
        out = tmp_path / f"regions-{threads}.jsonl"
        assert main(["region", "--instance", str(path5), "--center", "all",
                     "--d1", "2", "--d2", "3", "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


# ---------------------------------------------------------------------------
# config file


def test_config_file_supplies_defaults_and_flags_override(path5, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"steps": 3, "seed": 9,
                               "instance": str(path5)}))
    out1 = tmp_path / "c1.csv"
    assert main(["sample", "--config", str(cfg), "--out", str(out1)]) == 0
    assert "# seed=9" in out1.read_text()
    assert out1.read_text().count("\n") == 7 + 3
    out2 = tmp_path / "c2.csv"
    assert main(["sample", "--config", str(cfg), "--steps", "5",
                 "--out", str(out2)]) == 0
    assert out2.read_text().count("\n") == 7 + 5


def test_config_file_rejects_unknown_keys(path5, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"stepz": 3}))
    assert main(["sample", "--config", str(cfg),
                 "--instance", str(path5)]) == 1
    assert "unknown options" in capsys.readouterr().err


def test_config_file_must_be_valid_json(path5, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert main(["sample", "--config", str(cfg),
                 "--instance", str(path5)]) == 1


# ---------------------------------------------------------------------------
# per-subcommand output shapes


def test_exact_payload_fields(path5, tmp_path):
    out = tmp_path / "exact.json"
    assert main(["exact", "--instance", str(path5), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["n"] == 5 and len(doc["marginal_p1"]) == 5
    assert 0.0 < doc["all_ones_mass"] < 1.0
    assert all(0.0 <= p <= 1.0 for p in doc["marginal_p1"])


def test_saw_reports_zero_discrepancy_at_desk_scale(path5, tmp_path):
    out = tmp_path / "saw.json"
    assert main(["saw", "--instance", str(path5), "--center", "2",
                 "--pin", "0:1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["p0"] + doc["p1"] == pytest.approx(1.0, abs=1e-12)
    assert doc["discrepancy"] <= 1e-9


def test_saw_rejects_malformed_pin_and_center(path5):
    assert main(["saw", "--instance", str(path5), "--center", "9"]) == 1
    assert main(["saw", "--instance", str(path5), "--center", "1",
                 "--pin", "0=1"]) == 1


def test_region_single_center_record(path5, tmp_path):
    out = tmp_path / "region.jsonl"
    assert main(["region", "--instance", str(path5), "--center", "2",
                 "--d1", "2", "--d2", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1
    rec = json.loads(lines[0])
    assert rec["region"]["center"] == 2
    assert rec["verification"]["ok"] is True


def test_region_sweep_emits_one_record_per_center(path5, tmp_path):
    out = tmp_path / "sweep.jsonl"
    assert main(["region", "--instance", str(path5), "--center", "all",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert [json.loads(l)["region"]["center"] for l in lines] == list(range(5))


def test_region_flag_validation(path5):
    assert main(["region", "--instance", str(path5), "--center", "0",
                 "--d1", "2"]) == 1
    assert main(["region", "--instance", str(path5), "--center", "x"]) == 1
    assert main(["region", "--instance", str(path5), "--center", "11"]) == 1


def test_verify_stdout_mode_prints_csv(capsys):
    assert main(["verify", "--suite", "saw-oracle", "--trials", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# ferrospin report schema=1 suite=saw-oracle")
    assert "walk-tree-marginal-matches-enumeration" in out


def test_sweep_runs_and_writes_report(tmp_path):
    assert main(["sweep", "--sizes", "3,6", "--max-length", "6",
                 "--out", str(tmp_path / "sw")]) == 0
    text = (tmp_path / "sw.csv").read_text()
    assert "all-to-one-influence" in text
    assert "endpoint-influence-decays-log-linearly" in text
    assert main(["sweep", "--sizes", "3;6"]) == 1


def test_sample_field_schedule_and_censor(path5, tmp_path):
    out = tmp_path / "f.csv"
    assert main(["sample", "--instance", str(path5), "--schedule", "field",
                 "--theta", "0.4", "--steps", "5", "--out", str(out)]) == 0
    assert main(["sample", "--instance", str(path5), "--schedule", "glauber",
                 "--censor", "0,2", "--steps", "5",
                 "--out", str(tmp_path / "c.csv")]) == 0
    assert main(["sample", "--instance", str(path5), "--censor", "0,9",
                 "--steps", "5"]) == 1
    assert main(["sample", "--instance", str(path5), "--steps", "0"]) == 1


def test_rbm_input_path(tmp_path):
    rbm = {"n0": 2, "n1": 2, "theta": [0.3, -0.2, 0.1, 0.4],
           "W": [[0, 0, 0.5, 0.2], [0, 0, 0.1, 0.3],
                 [0.5, 0.1, 0, 0], [0.2, 0.3, 0, 0]]}
    path = tmp_path / "rbm.json"
    path.write_text(json.dumps(rbm))
    out = tmp_path / "rbm-exact.json"
    assert main(["exact", "--rbm", str(path), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["n"] == 4


# ---------------------------------------------------------------------------
# worker count


def test_worker_count_env_parsing(monkeypatch):
    monkeypatch.delenv("FERROSPIN_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("FERROSPIN_THREADS", "4")
    assert worker_count() == 4
    monkeypatch.setenv("FERROSPIN_THREADS", "zero")
    with pytest.raises(InputError):
        worker_count()
    monkeypatch.setenv("FERROSPIN_THREADS", "0")
    with pytest.raises(InputError):
        worker_count()
