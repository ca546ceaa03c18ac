import json
import subprocess
import sys

import numpy as np
import pytest

from mvcs.cli import EXIT_FAILURE, EXIT_INVALID, EXIT_OK, RunConfig, UsageError, main


@pytest.fixture(autouse=True)
def cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("MVCS_CACHE_DIR", str(tmp_path / "cache"))
    return tmp_path / "cache"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_pvalue_examples(capsys):
    code, out, _ = run(capsys, "pvalue", "--k", "3", "--n", "1", "--phat", "0,1,0", "--p", "0,1,0")
    assert code == EXIT_OK
    assert json.loads(out)["value"] == 1.0
    code, out, _ = run(capsys, "pvalue", "--k", "2", "--n", "2", "--phat", "2,0", "--p", "0.5,0.5")
    doc = json.loads(out)
    assert doc["value"] == pytest.approx(0.5, abs=1e-15)
    assert set(doc) >= {"value", "included_terms", "anchor"}


@pytest.mark.parametrize("argv,message", [
    (["pvalue", "--k", "2", "--n", "2", "--phat", "2,0", "--p", "0.5,0.6"], "not on simplex"),
    (["pvalue", "--k", "3", "--n", "2", "--phat", "2,0", "--p", "0.5,0.5"], ""),
    (["pvalue", "--k", "2", "--n", "3", "--phat", "2,0", "--p", "0.5,0.5"], ""),
    (["pvalue", "--k", "2", "--n", "2", "--phat", "a,b", "--p", "0.5,0.5"], ""),
    (["--tau", "0", "pvalue", "--k", "2", "--n", "2", "--phat", "2,0", "--p", "0.5,0.5"], "tau"),
])
def test_invalid_input_exits_2(capsys, argv, message):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_INVALID
    assert out == ""
    assert message in err


def test_sets_and_cache_hit(capsys, cache_dir):
    argv = ("sets", "--k", "3", "--n", "1", "--phat", "0,1,0")
    code, first, _ = run(capsys, *argv)
    assert code == EXIT_OK
    sets = json.loads(first)
    assert len(sets) == 4
    assert {tuple(s["omega"]) for s in sets} == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    assert all(s["touching"] == [1, 2] for s in sets)
    files = list(cache_dir.iterdir())
    assert len(files) == 1
    stamp = files[0].stat().st_mtime_ns
    _, second, _ = run(capsys, *argv)
    assert second == first
    assert files[0].stat().st_mtime_ns == stamp


def test_cache_key_tracks_tolerances(capsys, cache_dir):
    run(capsys, "sets", "--k", "3", "--n", "1", "--phat", "0,1,0")
    run(capsys, "--tau", "1e-8", "sets", "--k", "3", "--n", "1", "--phat", "0,1,0")
    run(capsys, "sets", "--k", "3", "--n", "1", "--phat", "0,1,0", "--no-prune")
    assert len(list(cache_dir.iterdir())) == 3


def test_no_cache_writes_nothing(capsys, cache_dir):
    code, _, _ = run(capsys, "--no-cache", "sets", "--k", "3", "--n", "1", "--phat", "0,1,0")
    assert code == EXIT_OK
    assert not cache_dir.exists() or not any(cache_dir.iterdir())


def test_cap_exceeded_exits_3(capsys):
    code, _, err = run(capsys, "--cap", "3", "sets", "--k", "3", "--n", "4", "--phat", "1,2,1", "--no-prune")
    assert code == EXIT_FAILURE
    assert err


def test_cover_examples(capsys):
    code, out, _ = run(capsys, "cover", "--k", "3", "--n", "0", "--phat", "0,0,0", "--omega", "",
                       "--epsilon", "0.5", "--delta", "0.5")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["eta"] == 4 and len(doc["points"]) == 15
    code, _, err = run(capsys, "cover", "--k", "3", "--n", "1", "--phat", "0,1,0", "--omega", "1,1",
                       "--epsilon", "0.1", "--delta", "0.05")
    assert code == EXIT_INVALID
    assert "delta must be ≥ epsilon" in err


def test_cover_json_labels(capsys):
    code, out, _ = run(capsys, "cover", "--k", "3", "--n", "1", "--phat", "0,1,0", "--omega", "1,1",
                       "--epsilon", "0.1", "--delta", "0.1")
    doc = json.loads(out)
    assert doc["omega"] == [1, 1]
    assert {p["label"] for p in doc["points"]} == {"inside", "near"}
    assert all(isinstance(c, int) for p in doc["points"] for c in p["counts"])


def test_disjoint(capsys):
    code, out, _ = run(capsys, "disjoint", "--k", "3", "--n", "1", "--phat1", "0,1,0", "--phat2", "0,1,0",
                       "--alpha", "0.5")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["status"] == "OVERLAP"
    assert len(doc["witness"]) == 3
    code, out, _ = run(capsys, "disjoint", "--k", "3", "--n", "2", "--phat1", "2,0,0", "--phat2", "0,2,0",
                       "--alpha", "0.9")
    assert json.loads(out)["status"] == "DISJOINT"


def test_figure_confset_is_disconnected(capsys):
    code, out, _ = run(capsys, "figure", "--which", "confset", "--k", "3", "--n", "4", "--phat", "0,4,0",
                       "--alpha", "0.5", "--eta", "200")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["components"] >= 2
    assert len(doc["points"]) == 201 * 202 // 2
    assert {"counts", "rho", "member"} <= set(doc["points"][0])


def test_figure_regions(capsys):
    code, out, _ = run(capsys, "figure", "--which", "regions", "--k", "3", "--n", "4", "--phat", "1,2,1",
                       "--eta", "60")
    doc = json.loads(out)
    labels = [p["omega_label"] for p in doc["points"]]
    used = {x for x in labels if x is not None}
    assert used <= set(range(len(doc["omegas"])))
    assert len(used) > 40
    assert sum(x is None for x in labels) < len(labels) // 4


def test_figure_cover(capsys):
    code, out, _ = run(capsys, "figure", "--which", "cover", "--k", "3", "--n", "1", "--phat", "0,1,0",
                       "--omega", "1,1", "--epsilon", "0.2")
    doc = json.loads(out)
    labels = {p["cover_label"] for p in doc["points"]}
    assert labels <= {"inside", "near", "none"} and "inside" in labels


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "-o", str(target), "pvalue", "--k", "3", "--n", "1", "--phat", "0,1,0",
                       "--p", "0.2,0.5,0.3")
    assert code == EXIT_OK
    assert target.read_text(encoding="utf-8") == out


def test_deterministic_output(capsys):
    argv = ("figure", "--which", "regions", "--k", "3", "--n", "1", "--phat", "0,1,0", "--eta", "20")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig(solver_tol=-1.0)
    with pytest.raises(UsageError):
        RunConfig(cap=0)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mvcs", "pvalue", "--k", "3", "--n", "1", "--phat", "1,0,0",
                           "--p", "1,0,0"], capture_output=True, text=True,
                          env={"MVCS_CACHE_DIR": str(tmp_path), "PATH": "/usr/bin:/bin"})
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == 1.0
    assert np.isfinite(json.loads(proc.stdout)["value"])
