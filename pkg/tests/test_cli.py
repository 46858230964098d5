import csv
import json

import numpy as np
import pytest

from qst_dantzig.cli import main
from qst_dantzig.measurement import read_jsonl
from qst_dantzig.states import PackingInstance


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def dataset(tmp_path):
    man = write(tmp_path / "sim.json", {"b": 2, "r": 1, "n": 10, "K": 5, "seed": 1, "output": str(tmp_path / "ds.jsonl")})
    assert main(["simulate", man]) == 0
    return tmp_path / "ds.jsonl"


def test_simulate_minimal_manifest(dataset, capsys):
    lines = dataset.read_text().splitlines()
    assert len(lines) == 11  # header plus one line per record
    ds = read_jsonl(dataset)
    assert (ds.m, ds.n, ds.K, ds.seed) == (4, 10, 5, 1)


def test_simulate_prints_summary(tmp_path, capsys):
    man = write(tmp_path / "sim.json", {"b": 2, "r": 1, "n": 10, "K": 5, "seed": 1})
    assert main(["--output-dir", str(tmp_path), "simulate", man]) == 0
    out = capsys.readouterr().out
    assert "m=4" in out and "n=10" in out and "K=5" in out and "seed=1" in out


def test_simulate_is_byte_identical(tmp_path, dataset):
    man = write(tmp_path / "sim2.json", {"b": 2, "r": 1, "n": 10, "K": 5, "seed": 1, "output": str(tmp_path / "ds2.jsonl")})
    assert main(["simulate", man]) == 0
    assert (tmp_path / "ds2.jsonl").read_bytes() == dataset.read_bytes()


def test_seed_flag_overrides_manifest(tmp_path, dataset):
    man = write(tmp_path / "sim.json", {"b": 2, "r": 1, "n": 10, "K": 5, "seed": 1, "output": str(tmp_path / "o.jsonl")})
    assert main(["simulate", man, "--seed", "9"]) == 0
    assert read_jsonl(tmp_path / "o.jsonl").seed == 9


@pytest.mark.parametrize(
    "manifest",
    [
        {"b": 2, "r": 1, "n": 0, "K": 5, "seed": 1},
        {"b": 2, "r": 1, "n": 10, "K": 5, "seed": 1, "colour": "red"},
        {"b": 2, "r": 1, "n": 10, "K": 5, "seed": 1, "schema_version": 2},
        {"b": 2, "n": 10, "K": 5, "seed": 1},
        {"b": 2, "r": 1, "n": 10, "seed": 1},
        {"b": 2, "r": 1, "n": 10, "K": 5, "seed": 1, "noiseless": True},
    ],
)
def test_simulate_validation_errors(tmp_path, manifest):
    assert main(["simulate", write(tmp_path / "m.json", manifest)]) == 2


def test_simulate_io_errors(tmp_path):
    assert main(["simulate", str(tmp_path / "missing.json")]) == 3
    bad_state = write(tmp_path / "m.json", {"state_file": str(tmp_path / "nope.json"), "n": 3, "K": 2, "seed": 0})
    assert main(["simulate", bad_state]) == 3


def test_simulate_from_state_file(tmp_path):
    sim = write(tmp_path / "a.json", {"b": 2, "r": 2, "n": 5, "K": 3, "seed": 0, "output": str(tmp_path / "a.jsonl"), "state_output": str(tmp_path / "rho.json")})
    assert main(["simulate", sim]) == 0
    again = write(tmp_path / "b.json", {"state_file": str(tmp_path / "rho.json"), "n": 5, "K": 3, "seed": 0, "output": str(tmp_path / "b.jsonl")})
    assert main(["simulate", again]) == 0
    assert (tmp_path / "a.jsonl").read_text() == (tmp_path / "b.jsonl").read_text()


def test_estimate_entropy_end_to_end(tmp_path, dataset):
    out = tmp_path / "sol.json"
    man = write(tmp_path / "est.json", {"dataset": str(dataset), "estimator": "entropy", "epsilon": "auto", "output": str(out)})
    assert main(["estimate", man]) == 0
    diag = json.loads(out.read_text())["diagnostics"]
    assert diag["converged"]
    assert diag["feasibility_gap"] <= 0.02 * diag["epsilon"]


def test_estimate_nuclear_large_epsilon_is_zero(tmp_path, dataset):
    out = tmp_path / "sol.json"
    man = write(tmp_path / "est.json", {"dataset": str(dataset), "estimator": "nuclear", "epsilon": 10, "output": str(out)})
    assert main(["estimate", man]) == 0
    sol = json.loads(out.read_text())
    from qst_dantzig.estimators import EstimatorSolution

    assert np.array_equal(EstimatorSolution.from_json_dict(sol).matrix, np.zeros((4, 4)))


def test_estimate_corrupted_dataset(tmp_path, dataset, capsys):
    lines = dataset.read_text().splitlines()
    lines[4] = '{"label": "XQ", "K": 5, "k_plus": 2}'
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(lines) + "\n")
    man = write(tmp_path / "est.json", {"dataset": str(bad), "estimator": "entropy"})
    assert main(["estimate", man]) == 3
    assert "line 5" in capsys.readouterr().err


def test_estimate_missing_dataset(tmp_path):
    man = write(tmp_path / "est.json", {"dataset": str(tmp_path / "nope.jsonl"), "estimator": "entropy"})
    assert main(["estimate", man]) == 3


def test_estimate_nonconvergence_exit_code(tmp_path):
    sim = write(tmp_path / "s.json", {"b": 3, "r": 2, "n": 100, "K": 10, "seed": 2, "output": str(tmp_path / "d.jsonl")})
    assert main(["simulate", sim]) == 0
    man = write(
        tmp_path / "est.json",
        {"dataset": str(tmp_path / "d.jsonl"), "estimator": "entropy", "epsilon": 1e-6, "solver": {"max_iter": 5, "smoothing": [0.01]}, "output": str(tmp_path / "o.json")},
    )
    assert main(["estimate", man]) == 4
    assert not json.loads((tmp_path / "o.json").read_text())["diagnostics"]["converged"]


def test_estimate_bad_config(tmp_path, dataset):
    man = write(tmp_path / "est.json", {"dataset": str(dataset), "estimator": "mle"})
    assert main(["estimate", man]) == 2


def test_check_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "pauli_basis" in out and "FAIL" not in out


def test_check_single_suite_and_unknown():
    assert main(["check", "--suite", "binomial_kl_bound"]) == 0
    assert main(["check", "--suite", "nope"]) == 2


def test_pack(tmp_path, capsys):
    out = tmp_path / "pack.json"
    man = write(tmp_path / "p.json", {"b": 3, "r": 2, "n": 256, "K": 100, "p": 2, "count": 8, "output": str(out), "spread_trials": 20000})
    assert main(["pack", man]) == 0
    inst = PackingInstance.from_json_dict(json.loads(out.read_text()))
    assert len(inst.states) == 8
    d = min(np.linalg.norm(a.data - b.data) for i, a in enumerate(inst.states) for b in inst.states[i + 1 :])
    assert inst.min_pairwise_distance == pytest.approx(d, rel=1e-12)


def test_sweep_row_count_and_threads(tmp_path, monkeypatch):
    man = {"grid": {"m": 4, "r": 1, "n": 40, "K": [10, 20, 40, 80]}, "estimator": "entropy", "seeds": 3, "min_seeds": 3}
    path = write(tmp_path / "sw.json", man)
    assert main(["sweep", path, "--output-dir", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("QST_THREADS", "2")
    assert main(["sweep", path, "--output-dir", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trials.csv").read_text()
    assert a == (tmp_path / "b" / "trials.csv").read_text()
    assert len(list(csv.DictReader(a.splitlines()))) == 4 * 3


def test_sweep_bad_grid(tmp_path, monkeypatch):
    man = {"grid": {"m": 4, "r": [1, 2], "n": 40, "K": [10, 20]}, "estimator": "entropy", "seeds": 3}
    assert main(["sweep", write(tmp_path / "sw.json", man)]) == 2
    monkeypatch.setenv("QST_THREADS", "many")
    ok = {"grid": {"m": 4, "r": 1, "n": 40, "K": [10, 20, 40, 80]}, "estimator": "entropy", "seeds": 1}
    assert main(["sweep", write(tmp_path / "ok.json", ok), "--output-dir", str(tmp_path)]) == 2


def test_unknown_command():
    assert main(["frobnicate"]) == 2
