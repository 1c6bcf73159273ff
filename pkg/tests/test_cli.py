import json
import subprocess
import sys

import numpy as np
import pytest

from netfactor.cli import main
from netfactor.network import canonical_instance, dump_network
from netfactor.slocc import Send, dump_protocol
from netfactor.tasks import cross_pairs_task, dump_task
from netfactor.verify import dump_assignment, zero_assignment


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_instances_list_and_emit(capsys, tmp_path):
    code, out, _ = run(capsys, "instances")
    assert code == 0 and "butterfly" in out
    p = tmp_path / "sq.json"
    assert main(["instances", "square", "--param", "d_internal=3", "--out", str(p)]) == 0
    doc = json.loads(p.read_text())
    assert len(doc["nodes"]) == 8


def test_verify_butterfly(capsys):
    code, out, _ = run(capsys, "verify", "--builtin", "butterfly")
    assert code == 0 and "matched: yes" in out


def test_verify_zero_assignment(capsys, tmp_path):
    net = canonical_instance("butterfly")
    dump_assignment(zero_assignment(net), tmp_path / "zero.json")
    code, out, _ = run(capsys, "verify", "--builtin", "butterfly", "--assignment", str(tmp_path / "zero.json"))
    assert code == 1 and "matched: no" in out


def test_verify_dim_mismatch(capsys, tmp_path):
    dump_task(cross_pairs_task([("S1", "T1"), ("S2", "T2")], 3), tmp_path / "t.json")
    code, _, err = run(capsys, "verify", "--builtin", "butterfly", "--task", str(tmp_path / "t.json"))
    assert code == 2 and "dim" in err


def test_verify_files(capsys, tmp_path):
    net = canonical_instance("single-edge", d=2)
    dump_network(net, tmp_path / "n.json")
    dump_task(cross_pairs_task([("u", "v")]), tmp_path / "t.json")
    (tmp_path / "a.json").write_text(json.dumps({"domain": "nonneg", "nodes": {}}))
    code, out, _ = run(capsys, "verify", "--network", str(tmp_path / "n.json"), "--task", str(tmp_path / "t.json"),
                       "--assignment", str(tmp_path / "a.json"))
    assert code == 0


def test_search_typewriter(capsys):
    code, out, _ = run(capsys, "search", "--builtin", "typewriter", "--domain", "complex", "--restarts", "3")
    assert code == 0 and "restart\tresidual\tsweeps" in out
    code, out, _ = run(capsys, "search", "--builtin", "typewriter", "--domain", "nonneg", "--restarts", "3")
    assert code == 1 and "no factorization found (evidence, not proof)" in out


def test_search_reduced_square(capsys):
    code, out, _ = run(capsys, "search", "--builtin", "square-cross", "--reduced", "--restarts", "2",
                       "--max-sweeps", "100")
    assert code == 1 and "evidence, not proof" in out


def test_search_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("NETFACTOR_SEED", "11")
    _, out, _ = run(capsys, "search", "--builtin", "typewriter", "--domain", "nonneg", "--restarts", "2")
    assert "seed: 11" in out
    _, explicit, _ = run(capsys, "search", "--builtin", "typewriter", "--domain", "nonneg", "--restarts", "2",
                         "--seed", "11")
    assert out == explicit
    monkeypatch.setenv("NETFACTOR_SEED", "x")
    code, _, _ = run(capsys, "search", "--builtin", "typewriter", "--restarts", "1")
    assert code == 2


def test_analyze(capsys, tmp_path):
    code, out, _ = run(capsys, "analyze", "--builtin", "typewriter")
    assert code == 0 and "rank: 3" in out and "non-negative rank bounds: [4, 4]" in out
    assert "lambda=1 mu=-1 nu=1" in out
    code, out, _ = run(capsys, "analyze", "--builtin", "identity4")
    assert code == 0 and "rank: 4" in out and "[4, 4]" in out
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"matrix": [[1, -1], [0, 1]]}))
    code, _, err = run(capsys, "analyze", "--matrix", str(p))
    assert code == 2 and "negative" in err
    code, out, _ = run(capsys, "analyze", "--matrix", str(p), "--no-nonneg")
    assert code == 0 and "rank: 2" in out


def test_simulate(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--builtin", "ternary-cross")
    assert code == 0 and "branches: 2" in out and "total probability: 1.000000000000" in out
    code, out, _ = run(capsys, "simulate", "--builtin", "basis-measure")
    assert code == 0 and out.count("probability 0.500000000000") == 2
    net = canonical_instance("single-edge", d=2)
    dump_network(net, tmp_path / "n.json")
    dump_protocol([Send("u|u-v", "ghost", "v")], tmp_path / "p.json", initial="network")
    code, _, err = run(capsys, "simulate", "--network", str(tmp_path / "n.json"), "--protocol",
                       str(tmp_path / "p.json"))
    assert code == 2 and "ghost" in err


def test_simulate_fidelity_failure(capsys, tmp_path):
    dump_task(cross_pairs_task([("a", "c"), ("b", "d")]), tmp_path / "t.json")
    code, out, _ = run(capsys, "simulate", "--builtin", "ternary-cross", "--task", str(tmp_path / "t.json"))
    assert code == 1 and "NOT met" in out


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["verify"]) == 2
    assert main(["search", "--builtin", "typewriter", "--reduced"]) == 2
    assert main(["verify", "--network", "/nonexistent.json", "--builtin", "butterfly"]) == 2
    capsys.readouterr()


def test_reports_are_byte_identical(tmp_path):
    for argv in (["search", "--builtin", "typewriter", "--domain", "nonneg", "--restarts", "4", "--seed", "3"],
                 ["search", "--builtin", "square-cross", "--reduced", "--restarts", "3", "--max-sweeps", "200"],
                 ["analyze", "--builtin", "typewriter"],
                 ["simulate", "--builtin", "ternary-cross"]):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        main(argv + ["--out", str(a)])
        main(argv + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "netfactor", "verify", "--builtin", "star-ghz"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "matched: yes" in proc.stdout
