"""End-to-end CLI runs compared against golden reports.

Set ``COMMGADGET_REGEN_GOLDEN=1`` to rewrite the goldens after an intended
change. Wall time is never compared; floats are compared to 1e-9.
"""

import io
import json
import math
import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from commgadget.cli import run

HERE = Path(__file__).resolve().parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"
REGEN = os.environ.get("COMMGADGET_REGEN_GOLDEN") == "1"

CASES = {
    "struct_build": ["struct", "build", "--input", "k3.json"],
    "struct_completion": ["struct", "completion", "--input", "msq.json"],
    "struct_power": ["struct", "power", "--base", "k3.json", "--exponent", "2"],
    "struct_complete": ["struct", "complete", "--n", "3"],
    "struct_homogenise": ["struct", "homogenise", "--lin", "single.json"],
    "struct_encode": ["struct", "encode", "--lin", "pair.json"],
    "struct_encode_complete": ["struct", "encode", "--lin", "pair.json", "--complete"],
    "struct_catalog_msq": ["struct", "catalog", "--name", "magic-square"],
    "struct_catalog_a7": ["struct", "catalog", "--name", "a7", "--out", "a7.json"],
    "hom_k3_k3": ["hom", "enumerate", "--source", "k3.json", "--target", "k3.json"],
    "hom_k3_k2": ["hom", "enumerate", "--source", "k3.json", "--target", "k2.json"],
    "hom_budget": ["--node-budget", "5", "hom", "enumerate", "--source", "c9.json", "--target", "k3.json"],
    "poly_k3_2": ["poly", "enumerate", "--base", "k3.json", "--arity", "2"],
    "gadget_build": ["gadget", "build", "--base", "k3.json", "--out", "g.json"],
    "gadget_verify": ["--seed", "7", "gadget", "verify", "--gadget", "k3_gadget.json", "--samples", "200"],
    "gadget_separation": ["gadget", "separation", "--lin", "single.json", "--emit-intermediates", "stages"],
    "group_solution": ["group", "solution", "--lin", "msq.json"],
    "group_tc": ["group", "tc", "--group", "msq_group.json"],
    "group_tc_limit": ["--max-cosets", "100", "group", "tc", "--group", "free2.json"],
    "group_word_yes": ["group", "word", "--group", "msq_group.json", "--word", "[x1,x5]J^-1"],
    "group_word_no": ["group", "word", "--group", "msq_group.json", "--word", "J"],
    "group_combine": ["group", "combine", "--group1", "z4a.json", "--group2", "z4b.json",
                      "--amalgamation", "amalgamation.json"],
    "group_quotient": ["group", "quotient", "--group", "z4a.json", "--words", "a^2"],
    "rep_check": ["rep", "check", "--rep", "msq_rep.json"],
    "rep_compose": ["rep", "compose", "--rep1", "k3_char.json", "--rep2", "k3_char.json"],
    "rep_character": ["rep", "character", "--source", "k3.json", "--target", "k3.json", "--mapping", "1,2,0"],
    "rep_magic_unitary": ["rep", "magic-unitary", "--arity", "2", "--coordinate", "1", "--out", "mu.json"],
    "rep_pi": ["rep", "pi", "--rep", "block_rep.json", "--subset", "0"],
    "rep_identities": ["rep", "identities", "--rep", "block_rep.json"],
    "rep_defect_a": ["rep", "defect", "--flavor", "a", "--strategy", "k3_swapped.json",
                     "--source", "k3.json", "--target", "k3.json"],
    "rep_defect_cv": ["rep", "defect", "--flavor", "cv", "--strategy", "msq_strategy.json",
                      "--source", "msq.json", "--target", "msq_lin.json"],
    "rep_defect_cc": ["rep", "defect", "--flavor", "cc", "--strategy", "msq_strategy.json",
                      "--source", "msq.json", "--target", "msq_lin.json", "--dist", "msq_cc_point.json"],
    "rep_commdef": ["rep", "commdef", "--strategy", "msq_strategy.json", "--x", "0", "--y", "4"],
    "game_build": ["game", "build", "--kind", "cc", "--source", "msq.json", "--target", "msq_lin.json",
                   "--out", "msq_cc.json"],
    "game_value_k3k2": ["game", "value", "--game", "k3k2_game.json"],
    "game_value_k3k2_sync": ["game", "value", "--game", "k3k2_game.json", "--synchronous"],
    "unknown_subcommand": ["frobnicate"],
    "missing_file": ["struct", "build", "--input", "nope.json"],
    "bad_word": ["group", "word", "--group", "msq_group.json", "--word", "[x1,"],
}

EXIT = {"hom_budget": 2, "group_tc_limit": 2, "unknown_subcommand": 1, "missing_file": 1, "bad_word": 1}


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    for f in DATA.glob("*.json"):
        shutil.copy(f, tmp_path / f.name)
    monkeypatch.chdir(tmp_path)
    return tmp_path


def invoke(argv):
    buf = io.StringIO()
    code = run(argv, stdout=buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 1, "report must be a single JSON document"
    return code, json.loads(lines[0])


def close(a, b, path="$"):
    if isinstance(a, float) or isinstance(b, float):
        assert isinstance(a, (int, float)) and isinstance(b, (int, float)), path
        assert math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9), f"{path}: {a} != {b}"
    elif isinstance(a, dict):
        assert isinstance(b, dict) and set(a) == set(b), f"{path}: keys {sorted(a)} != {sorted(b)}"
        for k in a:
            close(a[k], b[k], f"{path}.{k}")
    elif isinstance(a, list):
        assert isinstance(b, list) and len(a) == len(b), f"{path}: length mismatch"
        for i, (x, y) in enumerate(zip(a, b)):
            close(x, y, f"{path}[{i}]")
    else:
        assert a == b, f"{path}: {a!r} != {b!r}"


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, workdir):
    code, report = invoke(CASES[name])
    assert code == EXIT.get(name, 0)
    assert report.pop("wall_time") >= 0
    golden = GOLDEN / f"{name}.json"
    if REGEN:
        golden.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    close(report, json.loads(golden.read_text()))


def test_key_payloads(workdir):
    assert invoke(CASES["poly_k3_2"])[1]["payload"]["count"] == 12
    assert invoke(CASES["poly_k3_2"])[1]["payload"]["all_projections"]
    assert invoke(CASES["group_word_yes"])[1]["payload"]["trivial"] == "yes"
    assert invoke(CASES["group_word_no"])[1]["payload"]["trivial"] == "no"
    assert invoke(CASES["group_tc"])[1]["payload"]["index"] == 32
    assert invoke(CASES["hom_k3_k3"])[1]["payload"]["count"] == 6
    assert invoke(CASES["game_value_k3k2_sync"])[1]["payload"]["value"] == "2/3"
    code, rep = invoke(CASES["unknown_subcommand"])
    assert code == 1 and rep["status"] == "error" and "error" in rep


def test_outputs_written(workdir):
    invoke(CASES["gadget_separation"])
    assert {p.name for p in (workdir / "stages").iterdir()} == {
        "homogenised.json", "magic_assembly.json", "assembled.json", "result.json"}
    invoke(CASES["game_build"])
    code, rep = invoke(["--seed", "0", "game", "value", "--game", "msq_cc.json", "--synchronous"])
    assert code == 0 and rep["payload"]["value"] == "17/18"


def test_reproducible_with_seed(workdir):
    a = invoke(CASES["gadget_verify"])[1]
    b = invoke(CASES["gadget_verify"])[1]
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


def test_inputs_are_digested(workdir):
    _, rep = invoke(CASES["struct_build"])
    import hashlib

    assert rep["inputs"] == {"k3.json": hashlib.sha256((DATA / "k3.json").read_bytes()).hexdigest()}


def test_console_script(workdir):
    proc = subprocess.run(
        [sys.executable, "-m", "commgadget.cli", "struct", "complete", "--n", "2"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["payload"]["summary"]["domain_size"] == 2
