import csv
import json
from fractions import Fraction

import numpy as np
import pytest

from seqbounds.cli import main
from seqbounds.commands import run, verdict, yu_check
from seqbounds.panel import load_panel

SMALL = {
    "simulate": {},
    "estimate-discrepancy": {"process": {"m": 10, "T": 8}},
    "estimate-mixing": {"kind": "numeric", "sigma": 0.2, "grid_step": 0.02},
    "estimate-complexity": {"kind": "empirical_rademacher", "n_sigma_draws": 5, "process": {"m": 10, "T": 8}},
    "evaluate-bounds": {},
    "validate-bound": {"n_repetitions": 3, "process": {"m": 20, "T": 8}},
    "regime-experiment": {"cells": [[20, 8]], "n_seeds": 2},
    "advise": {"process": {"m": 20, "T": 10}},
    "yu-check": {"n_random": 5},
    "tent-example": {"n_trials": 40, "m": 6},
}


def _run_cli(tmp_path, name, cfg, *extra, tag="a"):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / f"{name}-{tag}.out"
    code = main([name, "--config", str(cfg_path), "--out", str(out), *extra])
    return code, out


@pytest.mark.parametrize("name", sorted(SMALL))
def test_each_command_is_byte_deterministic(tmp_path, name):
    c1, a = _run_cli(tmp_path, name, SMALL[name], tag="a")
    c2, b = _run_cli(tmp_path, name, SMALL[name], tag="b")
    assert c1 == c2 == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["command"] == name and "version" in report and "seed" in report["config"]


def test_exit_code_for_invalid_config(tmp_path, capsys):
    assert main(["evaluate-bounds", "--set", "delta=1.5"]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", "--config", str(bad)]) == 2
    assert main(["evaluate-bounds", "--set", "theorem=nope"]) == 2
    assert main(["advise", "--panel", str(tmp_path / "nope.csv")]) == 2
    assert "invalid config" in capsys.readouterr().err


def test_strict_mode_exit_code(tmp_path):
    cfg = {"theorem": "thm1_s2s", "ingredients": {"max_rademacher": 0, "delta_disc": 0, "partition_sizes": [3],
                                                  "betas_per_collection": [0.05], "delta_conf": 0.05}}
    code, out = _run_cli(tmp_path, "evaluate-bounds", cfg, "--strict")
    assert code == 3
    assert json.loads(out.read_text())["result"]["valid"] is False
    assert _run_cli(tmp_path, "evaluate-bounds", cfg, tag="b")[0] == 0
    assert _run_cli(tmp_path, "evaluate-bounds", {}, "--strict", tag="c")[0] == 0


def test_set_overrides_and_seed_flag(tmp_path, capsys):
    assert main(["simulate", "--set", "process.m=3", "--set", "process.T=4", "--seed", "7"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["config"]["seed"] == 7
    assert np.array(report["result"]["values"]).shape == (3, 4)
    assert report["config"]["process"]["p"] == 2


def test_simulate_csv_round_trip(tmp_path):
    out = tmp_path / "panel.csv"
    assert main(["simulate", "--format", "csv", "--out", str(out), "--set", "process.m=4"]) == 0
    panel = load_panel(out)
    assert panel.values.shape == (4, 20)
    assert panel.metadata["process_spec"]["kind"] == "ar"
    with out.open() as fh:
        assert next(csv.reader(fh))[:3] == ["series_id", "t1", "t2"]
    # the written panel drives data-mode advice
    assert main(["advise", "--panel", str(out), "--out", str(tmp_path / "adv.json")]) == 0
    adv = json.loads((tmp_path / "adv.json").read_text())["result"]
    assert adv["recommendation"] in ("hybrid", "seq2seq", "local")
    assert adv["evidence"]["m"] == 4


def test_rows_csv_output(tmp_path):
    code, out = _run_cli(tmp_path, "validate-bound", SMALL["validate-bound"], "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 3 and {"gap", "bound", "covered"} <= set(rows[0])
    code, out = _run_cli(tmp_path, "evaluate-bounds", {}, "--format", "csv")
    assert next(csv.reader(out.open())) == ["key", "value"]


def test_validate_bound_zero_loss_deterministic_data():
    cfg = {"n_repetitions": 4, "process": {"m": 20, "T": 8, "weights": [0.0, 0.0],
                                           "noise_cov": {"type": "identity", "scale": 0.0}}}
    res = run("validate-bound", cfg)["result"]
    assert res["coverage"] == 1.0 and res["n_invalid"] == 0
    assert all(r["gap"] == 0.0 for r in res["rows"])


def test_validate_bound_invalid_trials_counted():
    cfg = {"theorem": "thm1_s2s", "n_repetitions": 2, "delta": 0.05,
           "process": {"m": 8, "T": 8, "noise_cov": {"type": "hierarchical", "D": 3, "scale": 0.0025}},
           "partition": {"type": "whole"}}
    res = run("validate-bound", cfg)["result"]
    assert res["n_invalid"] == 2 and res["coverage"] is None


def test_yu_check_examples():
    ind = {(a, b): Fraction(1, 4) for a in range(2) for b in range(2)}
    f = {k: Fraction(k[0]) for k in ind}
    res = yu_check(ind, f)
    assert res["lhs"] == 0 and res["rhs"] == 0 and res["holds"]
    p = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
    joint = {(i, j): (p[i] if i == j else Fraction(0)) for i in range(3) for j in range(3)}
    eq = {(i, j): Fraction(int(i == j)) for i in range(3) for j in range(3)}
    res = yu_check(joint, eq)
    expected = 1 - sum(q * q for q in p)
    assert res["lhs"] == expected and res["rhs"] == expected and res["holds"]


def test_yu_check_command_with_explicit_joint():
    joint = [{"state": [i, j], "p": "1/3" if i == j else "0", "f": int(i == j)} for i in range(3) for j in range(3)]
    res = run("yu-check", {"joint": joint, "f": joint, "n_random": 100})["result"]
    assert res["all_hold"] and res["n_cases"] == 101
    assert res["rows"][0]["lhs"] == "2/3" == res["rows"][0]["rhs"]


def test_advisor_verdict_tie_order_and_all_invalid():
    def r(total):
        return {"total": total, "bound": {"valid": total is not None}}

    order = ("hybrid", "seq2seq", "local")
    assert verdict({"hybrid": r(0.5), "seq2seq": r(0.5), "local": r(0.5)}, order)["recommendation"] == "hybrid"
    v = verdict({"hybrid": r(0.6), "seq2seq": r(0.5), "local": r(0.5)}, order)
    assert v["recommendation"] == "seq2seq" and "tie broken" in v["tie_break"]
    assert verdict({"hybrid": r(0.6), "seq2seq": r(0.7), "local": r(0.5)}, order)["recommendation"] == "local"
    v = verdict({"hybrid": r(None), "seq2seq": r(None), "local": r(None)}, order)
    assert v["recommendation"] == "hybrid" and "ALL_BOUNDS_INVALID" in v["flags"]
    assert "all bounds invalid" in v["tie_break"]
