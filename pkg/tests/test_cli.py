import json
import subprocess
import sys

import numpy as np
import pytest

from eigexpand import io as eio
from eigexpand.cli import main

SPEC = {"kind": "kl", "grid_T": 32,
        "profile": {"kind": "polynomial", "param": 2.0, "J_model": 8},
        "scores": {"kind": "ma_q", "coefs": [1.0, 0.5]}}


@pytest.fixture
def files(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SPEC))
    curves = tmp_path / "curves.csv"
    assert main(["--seed", "5", "simulate", "--spec", str(spec), "--n", "300",
                 "--out", str(curves)]) == 0
    return tmp_path, spec, curves


def test_simulate_deterministic(files):
    tmp, spec, curves = files
    other = tmp / "again.csv"
    assert main(["--seed", "5", "simulate", "--spec", str(spec), "--n", "300", "--out", str(other)]) == 0
    assert curves.read_bytes() == other.read_bytes()
    s = eio.read_sample_csv(curves)
    assert s.n == 300 and s.grid.T == 32


@pytest.mark.parametrize("kind,extra", [("cov", []), ("lag", ["--h", "2"]), ("symlag", ["--h", "1"]),
                                        ("longrun", ["--b", "2", "--weights", "bartlett"])])
def test_estimate(files, kind, extra):
    tmp, spec, curves = files
    out = tmp / f"{kind}.csv"
    assert main(["estimate", "--input", str(curves), "--kind", kind, "--center", "--out", str(out)] + extra) == 0
    K = eio.read_kernel_csv(out)
    assert K.matrix.shape == (32, 32)


def test_expand(files, capsys):
    tmp, spec, curves = files
    out = tmp / "rep.csv"
    assert main(["expand", "--input", str(curves), "--spec", str(spec), "--kind", "symlag",
                 "--h", "1", "--center", "--J", "4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "j,lambda_hat,lambda_pop,I_jj,R1,R2,R3,RF,m" and len(lines) == 5
    assert lines[1].split(",")[7] != ""


def test_maxdev_and_band(files):
    tmp, spec, curves = files
    out = tmp / "res.json"
    args = ["--seed", "1", "maxdev", "--input", str(curves), "--jplus", "5", "--method",
            "gaussian-mc", "--reps", "5000", "--spec", str(spec), "--out", str(out)]
    assert main(args) == 0
    d = json.loads(out.read_text())
    for key in ("T", "Jplus", "a_m", "b_m", "pvalue", "band", "method"):
        assert key in d
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first
    est = tmp / "est.csv"
    est.write_text("# grid_T=32\n0.9,1.4\n0.26,1.5\n0.1,1.6\n")
    bout = tmp / "band.csv"
    assert main(["band", "--estimates", str(est), "--n", "300", "--out", str(bout)]) == 0
    assert bout.read_text().splitlines()[0] == "j,lambda_hat,lower,upper,upper_infinite"


def test_mc_rate_and_dist(files):
    tmp, spec, _ = files
    exp = tmp / "exp.json"
    exp.write_text(json.dumps({"spec": SPEC, "ns": [100, 200, 400], "reps": 3, "J": 4,
                               "jplus": "fixed:4"}))
    out = tmp / "rate.json"
    assert main(["--seed", "2", "mc-rate", "--experiment", str(exp), "--out", str(out)]) == 0
    assert "max_abs_R1" in json.loads(out.read_text())["slopes"]
    out2 = tmp / "dist.json"
    assert main(["mc-dist", "--experiment", str(exp), "--reference-reps", "2000",
                 "--out", str(out2)]) == 0
    assert "ks_vs_gaussian_max" in json.loads(out2.read_text())["cells"][0]


def test_config_defaults(files):
    tmp, spec, curves = files
    cfg = tmp / "cfg.json"
    cfg.write_text(json.dumps({"kind": "longrun", "b": 3}))
    out = tmp / "k.csv"
    assert main(["--config", str(cfg), "estimate", "--input", str(curves), "--out", str(out)]) == 0
    from eigexpand.operators import longrun_op
    expect = longrun_op(eio.read_sample_csv(curves), 3, "flat", center=False).matrix
    np.testing.assert_allclose(eio.read_kernel_csv(out).matrix, expect)


def test_exit_codes(files):
    tmp, spec, curves = files
    assert main(["estimate", "--input", str(tmp / "missing.csv"), "--out", str(tmp / "x.csv")]) == 2
    assert main(["estimate", "--input", str(curves), "--kind", "lag", "--h", "400",
                 "--out", str(tmp / "x.csv")]) == 2
    const = tmp / "const.csv"
    const.write_text("# grid_T=16\n" + "\n".join(",".join(["1"] * 16) for _ in range(20)) + "\n")
    assert main(["maxdev", "--input", str(const), "--jplus", "3"]) == 3
    with pytest.raises(SystemExit) as e:
        main(["estimate"])
    assert e.value.code == 2


def test_module_entry_point(files):
    tmp, spec, curves = files
    r = subprocess.run([sys.executable, "-m", "eigexpand", "estimate", "--input", str(curves),
                        "--out", str(tmp / "k.csv")], capture_output=True)
    assert r.returncode == 0
