import csv
import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from snnwta import cli
from snnwta.constructors import build_two_inhibitor
from snnwta.harness import estimate_expected_time as real_estimate

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def spec_file(tmp_path):
    def make(variant="two-inhibitor", n=4, *extra):
        p = tmp_path / f"{variant}-{n}.json"
        assert cli.main(["build", variant, "--n", str(n), "--out", str(p), *map(str, extra)]) == 0
        return p
    return make


# -- golden files ------------------------------------------------------------


def test_build_golden(capsys):
    code, out, _ = run(capsys, "build", "two-inhibitor", "--n", 256)
    assert code == 0
    assert out == (GOLDEN / "build_two_inhibitor_256.json").read_text()
    d = json.loads(out)
    assert d["alpha"] == 2 and d["b_z"] == [0.5, 1.5]


def test_simulate_golden(capsys, spec_file):
    p = spec_file("two-inhibitor", 16)
    code, out, _ = run(capsys, "simulate", p, "--trials", 200, "--seed", 7, "--delta", 0.05)
    assert code == 0
    assert out == (GOLDEN / "simulate_two_inhibitor_16.json").read_text()


def test_classify_golden(capsys):
    code, out, _ = run(capsys, "classify", GOLDEN / "build_two_inhibitor_256.json")
    assert code == 0
    assert out == (GOLDEN / "classify_two_inhibitor_256.json").read_text()
    d = json.loads(out)
    assert d["labels"] == ["S", "C"] and d["k_of_z"] == {"1": 2}


def test_sweep_golden(tmp_path):
    plan = {"variant": ["two-inhibitor", "alpha"], "n": [16], "alpha": [3], "input_density": [1.0],
            "y0_policy": ["ones"], "trials": 300, "seed": 3}
    (tmp_path / "plan.json").write_text(json.dumps(plan))
    out = tmp_path / "out.csv"
    assert cli.main(["sweep", str(tmp_path / "plan.json"), "--out", str(out)]) == 0
    assert out.read_text() == (GOLDEN / "sweep_two_cells.csv").read_text()
    lines = out.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("variant,n,alpha,theta,input_density,y0_policy,trials,mean_et,stderr,q99,timeout_fraction")


# -- build --------------------------------------------------------------------


def test_alpha_two_byte_identical(capsys):
    _, a, _ = run(capsys, "build", "alpha", "--n", 4096, "--alpha", 2)
    _, b, _ = run(capsys, "build", "two-inhibitor", "--n", 4096)
    assert a == b


def test_invalid_variant_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["build", "three-inhibitor", "--n", "8"])
    assert exc.value.code == 2
    assert "usage:" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["build", "theta-level", "--n", "256"],
    ["build", "alpha", "--n", "4096", "--alpha", "3", "--c-prob", "5"],
    ["build", "two-inhibitor", "--n", "1"],
])
def test_build_errors_exit_two(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and "error" in err


def test_every_variant_builds(capsys):
    for argv in (["one-inhibitor", "--c-poly", 1], ["logn"], ["theta-level", "--theta", 2], ["alpha", "--alpha", 4]):
        code, out, _ = run(capsys, "build", argv[0], "--n", 64, *argv[1:])
        assert code == 0 and argv[0].split("-")[0] in json.loads(out)["provenance"]


# -- simulate -----------------------------------------------------------------


def test_simulate_deterministic(capsys, spec_file, monkeypatch):
    p = spec_file("logn", 64)
    _, a, _ = run(capsys, "simulate", p, "--trials", 3000, "--seed", 5, "--y0", "random")
    monkeypatch.setenv("WTA_JOBS", "2")
    _, b, _ = run(capsys, "simulate", p, "--trials", 3000, "--seed", 5, "--y0", "random")
    assert a == b


def test_simulate_zero_trials(capsys, spec_file):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", str(spec_file()), "--trials", "0"])
    assert exc.value.code == 2


def test_simulate_bad_spec(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 4}))
    assert run(capsys, "simulate", bad)[0] == 2
    bad.write_text("{not json")
    assert run(capsys, "simulate", bad)[0] == 2
    assert run(capsys, "simulate", tmp_path / "missing.json")[0] == 2


def test_simulate_per_trial(capsys, spec_file):
    code, out, _ = run(capsys, "simulate", spec_file(), "--trials", 5, "--per-trial")
    recs = json.loads(out)["per_trial"]
    assert code == 0 and len(recs) == 5 and set(recs[0]) == {"converged_at", "winner", "first_satisfaction", "reset_count"}


def test_simulate_logn_large(capsys, spec_file):
    code, out, _ = run(capsys, "simulate", spec_file("logn", 4096), "--trials", 2000, "--seed", 1)
    assert code == 0 and json.loads(out)["mean"] < 10


def test_seed_range(capsys, spec_file):
    p = spec_file()
    assert run(capsys, "simulate", p, "--trials", 3, "--seed", 2**64 - 1)[0] == 0
    with pytest.raises(SystemExit):
        cli.main(["simulate", str(p), "--seed", str(2**64)])


# -- sweep --------------------------------------------------------------------


def _plan(tmp_path, **over):
    plan = {"variant": "logn", "n": [8, 16, 32], "trials": 100, "seed": 1}
    plan.update(over)
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    return path


class Interrupted(Exception):
    pass


def test_sweep_resume_skips_finished(tmp_path, monkeypatch):
    plan, out = _plan(tmp_path), tmp_path / "out.csv"
    calls, armed = [], [True]

    def flaky(spec, *a, **k):
        calls.append(spec.n)
        if armed[0] and len(calls) == 2:
            armed[0] = False
            raise Interrupted
        return real_estimate(spec, *a, **k)

    monkeypatch.setattr(cli, "estimate_expected_time", flaky)
    with pytest.raises(Interrupted):
        cli.main(["sweep", str(plan), "--out", str(out)])
    assert len(out.read_text().splitlines()) == 2
    calls.clear()
    assert cli.main(["sweep", str(plan), "--out", str(out)]) == 0
    assert calls == [16, 32]
    rows = list(csv.DictReader(out.open()))
    assert [r["n"] for r in rows] == ["8", "16", "32"]

    # a complete file is left alone
    calls.clear()
    assert cli.main(["sweep", str(plan), "--out", str(out)]) == 0
    assert calls == []


def test_sweep_drops_torn_row(tmp_path):
    plan, out = _plan(tmp_path, n=[8, 16]), tmp_path / "out.csv"
    assert cli.main(["sweep", str(plan), "--out", str(out)]) == 0
    full = out.read_text()
    lines = full.splitlines()
    out.write_text("\n".join(lines[:2]) + "\n" + lines[2][:-5])
    assert cli.main(["sweep", str(plan), "--out", str(out)]) == 0
    assert out.read_text() == full


def test_sweep_detects_tampering(tmp_path):
    plan, out = _plan(tmp_path, n=[8]), tmp_path / "out.csv"
    cli.main(["sweep", str(plan), "--out", str(out)])
    good = out.read_text()
    out.write_text(good.replace(",100,", ",101,", 1))
    cli.main(["sweep", str(plan), "--out", str(out)])
    assert out.read_text() == good


@pytest.mark.parametrize("bad", [{"n": []}, {"trials": 0}, {"variant": []}, {"y0_policy": "ones"}])
def test_sweep_bad_plan(tmp_path, capsys, bad):
    plan = _plan(tmp_path, **bad)
    assert run(capsys, "sweep", plan, "--out", tmp_path / "o.csv")[0] == 2


def test_sweep_cells_product():
    plan = {"variant": ["alpha", "theta-level", "logn"], "n": [16, 64], "alpha": [2, 3], "theta": [1, 2, 3],
            "input_density": [1.0, 0.5], "y0_policy": ["ones"], "trials": 1}
    cells = cli.sweep_cells(plan)
    assert len(cells) == 2 * 2 * 2 + 2 * 3 * 2 + 2 * 2


# -- classify -----------------------------------------------------------------


def test_classify_unreachable(capsys, tmp_path):
    d = build_two_inhibitor(16).to_dict()
    d.update(alpha=3, w_z=[-1, -1, -1], w_y=[1, 1, 1], b_z=[0.5, 1.5, 256.0])
    p = tmp_path / "hand.json"
    p.write_text(json.dumps(d))
    code, out, _ = run(capsys, "classify", p)
    assert code == 0 and json.loads(out)["labels"].count("R") == 1


def test_classify_logn(capsys, spec_file):
    _, out, _ = run(capsys, "classify", spec_file("logn", 256))
    assert json.loads(out)["counts"] == {"S": 1, "C": 7, "R": 0}


# -- oracle-compare -----------------------------------------------------------


def test_oracle_compare_passes(capsys, spec_file):
    code, out, _ = run(capsys, "oracle-compare", spec_file(), "--trials", 100_000, "--seed", 1)
    res = json.loads(out)
    assert code == 0 and res["verdict"] == "pass" and res["sup_distance"] < res["band"]


def test_oracle_compare_horizon_one(capsys, spec_file):
    code, out, _ = run(capsys, "oracle-compare", spec_file(), "--horizon", 1, "--trials", 20_000)
    res = json.loads(out)
    assert code == 0 and len(res["exact_cdf"]) == 1
    assert res["exact_cdf"][0] == pytest.approx(0.25, rel=1e-6)


def test_oracle_compare_too_large(capsys, spec_file):
    assert run(capsys, "oracle-compare", spec_file("two-inhibitor", 64))[0] == 2


def test_oracle_compare_random_start_rejected(capsys, spec_file):
    assert run(capsys, "oracle-compare", spec_file(), "--y0", "random")[0] == 2


@pytest.fixture
def sign_flipped():
    """Two-inhibitor n=4 spec with w_z made excitatory, bypassing validation."""
    good = build_two_inhibitor(4)
    bad = object.__new__(type(good))
    for f in dataclasses.fields(good):
        object.__setattr__(bad, f.name, getattr(good, f.name))
    object.__setattr__(bad, "w_z", tuple(-w for w in good.w_z))
    return good, bad


def test_oracle_compare_catches_mutation(sign_flipped, spec_file, capsys, monkeypatch):
    good, bad = sign_flipped
    x = y0 = np.ones(4)
    assert cli.oracle_verdict(good, x, y0, 50, 20_000, 1, simulated=bad)["verdict"] == "fail"

    # through the command: the oracle reads the file, the simulator gets the mutant
    real = cli.simulate_trials
    monkeypatch.setattr(cli, "simulate_trials", lambda spec, *a, **k: real(bad, *a, **k))
    code, out, _ = run(capsys, "oracle-compare", spec_file(), "--trials", 20_000)
    assert code == 1 and json.loads(out)["verdict"] == "fail"
