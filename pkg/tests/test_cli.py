import json
import os

import numpy as np

from gramian_bounds import LinearSystem, Region, SystemSpec, generate
from gramian_bounds.cli import RunConfig, build_parser, config_from_args, main


def run(argv, tmp_path):
    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        return main(argv)
    finally:
        os.chdir(cwd)


def test_runconfig_roundtrip():
    args = build_parser().parse_args(
        ["verify-thm2", "--seed", "3", "--jobs", "2", "--format", "csv",
         "--out", "x.csv", "--trials", "5"])
    cfg = config_from_args(args)
    back = RunConfig.from_json_dict(json.loads(json.dumps(cfg.to_json_dict())))
    assert back == cfg


def test_reproduce(tmp_path, capsys):
    rc = run(["reproduce", "--out", str(tmp_path / "r.json")], tmp_path)
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("relative deviation") == 4
    data = json.loads((tmp_path / "r.json").read_text())
    assert len(data["constants"]) == 4
    assert "note" in data


def test_capacity_cmd(tmp_path):
    rc = run(["capacity", "interval:0,1", "--n-max", "12", "--restarts", "2",
              "--out", str(tmp_path / "cap.json")], tmp_path)
    assert rc == 0
    data = json.loads((tmp_path / "cap.json").read_text())
    assert abs(data["closed_form"] - 0.25) < 1e-12
    assert abs(data["estimate"]["value"] - 0.25) < 0.05
    rc = run(["capacity", "square:1", "--n-max", "8", "--restarts", "2",
              "--out", str(tmp_path / "sq.json")], tmp_path)
    assert "note" in json.loads((tmp_path / "sq.json").read_text())


def test_err_cmd(tmp_path):
    rc = run(["err", "disk:0,0,0.5", "--l", "10", "--out", str(tmp_path / "e.json")],
             tmp_path)
    assert rc == 0
    data = json.loads((tmp_path / "e.json").read_text())
    assert abs(float(data["result"]["error"]) - 0.5**10) < 1e-12


def test_err_trend_csv(tmp_path):
    out = tmp_path / "trend.csv"
    rc = run(["err", "disk:0,0,0.5", "--l", "5", "--trend", "--format", "csv",
              "--out", str(out)], tmp_path)
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "l,err_root"
    assert len(lines) == 6
    assert os.path.exists(str(out) + ".values.json")


def test_gramian_cmd_and_overflow(tmp_path):
    sys_path = tmp_path / "sys.json"
    sys_obj = LinearSystem(np.array([[0.5]], dtype=complex), np.array([[1.0]], dtype=complex))
    sys_path.write_text(json.dumps(sys_obj.to_json_dict()))
    rc = run(["gramian", str(sys_path), "--t", "1", "--out", str(tmp_path / "g.json")],
             tmp_path)
    assert rc == 0
    data = json.loads((tmp_path / "g.json").read_text())
    assert set(data) == {"t", "lambda_min", "lambda_max", "precision_bits_used", "resolved"}
    assert abs(float(data["lambda_max"]) - 1.25) < 1e-12

    big = LinearSystem(np.array([[2.0, 1.0], [0.0, 2.0]], dtype=complex),
                       np.array([[1.0], [1.0]], dtype=complex))
    (tmp_path / "big.json").write_text(json.dumps(big.to_json_dict()))
    rc = run(["gramian", str(tmp_path / "big.json"), "--t", "2000",
              "--precision-bits", "53"], tmp_path)
    assert rc == 1


def test_verify_thm1_batch_csv_and_plot(tmp_path):
    out = tmp_path / "v1.csv"
    rc = run(["verify-thm1", "--trials", "3", "--n-min", "4", "--n-max", "7",
              "--format", "csv", "--out", str(out), "--plot"], tmp_path)
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "seed,n,k,t,lambda_min,bound,ratio,holds"
    assert len(lines) == 4
    assert all(line.endswith("True") for line in lines[1:])
    assert (tmp_path / "v1.png").exists()
    assert (tmp_path / "v1.csv.values.json").exists()
    side = json.loads((tmp_path / "v1.csv.values.json").read_text())
    assert len(side["trials"]) == 3


def test_verify_thm1_single_system_defective(tmp_path):
    bad = LinearSystem(np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex),
                       np.array([[1.0], [0.0]], dtype=complex))
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad.to_json_dict()))
    rc = run(["verify-thm1", "--system", str(p), "--region", "disk:0,0,0.1",
              "--out", str(tmp_path / "x.json")], tmp_path)
    assert rc == 1


def test_verify_thm1_single_system_ok(tmp_path):
    spec = SystemSpec(n=6, k=1, eigenvalue_region=Region.disk(0, 0.5),
                      target_cond_v=2.0, seed=3)
    sys_obj = generate(spec)
    p = tmp_path / "sys.json"
    p.write_text(json.dumps(sys_obj.to_json_dict()))
    rc = run(["verify-thm1", "--system", str(p), "--region", "disk:0,0,0.5",
              "--out", str(tmp_path / "ok.json")], tmp_path)
    assert rc == 0
    data = json.loads((tmp_path / "ok.json").read_text())
    assert data["trials"][0]["holds"] is True


def test_verify_thm2_batch(tmp_path):
    out = tmp_path / "v2.json"
    rc = run(["verify-thm2", "--trials", "3", "--n-min", "6", "--n-max", "10",
              "--t-cap", "60", "--out", str(out)], tmp_path)
    assert rc == 0
    data = json.loads(out.read_text())
    assert len(data["trials"]) == 3
    assert all(t["holds"] for t in data["trials"])


def test_conjecture_cmd(tmp_path):
    out = tmp_path / "conj.csv"
    rc = run(["conjecture", "--n-list", "4", "--t-multipliers", "0.5,2",
              "--trials", "1", "--format", "csv", "--out", str(out), "--plot"],
             tmp_path)
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "n,t,lambda_min_max"
    assert len(lines) == 3
    assert (tmp_path / "conj.png").exists()


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        rc = run(["verify-thm1", "--trials", "2", "--n-min", "4", "--n-max", "6",
                  "--seed", "11", "--format", "csv", "--out", str(path)], tmp_path)
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.values.json").read_bytes() == \
        (tmp_path / "b.csv.values.json").read_bytes()


def test_jobs_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "s.csv", tmp_path / "p.csv"
    run(["verify-thm2", "--trials", "4", "--n-min", "6", "--n-max", "9",
         "--t-cap", "40", "--seed", "2", "--format", "csv", "--out", str(a)], tmp_path)
    run(["verify-thm2", "--trials", "4", "--n-min", "6", "--n-max", "9",
         "--t-cap", "40", "--seed", "2", "--jobs", "2", "--format", "csv",
         "--out", str(b)], tmp_path)
    assert a.read_bytes() == b.read_bytes()


def test_region_parse_error_exit_code(tmp_path):
    rc = run(["capacity", "blob:1", "--n-max", "8"], tmp_path)
    assert rc == 1


def test_region_json_file_argument(tmp_path):
    rfile = tmp_path / "region.json"
    rfile.write_text(json.dumps(Region.disk(0, 0.5).to_json_dict()))
    out = tmp_path / "ef.json"
    rc = run(["err", "@" + str(rfile), "--l", "4", "--out", str(out)], tmp_path)
    assert rc == 0
    data = json.loads(out.read_text())
    assert abs(float(data["result"]["error"]) - 0.5**4) < 1e-12


def test_env_precision_override(tmp_path, monkeypatch):
    monkeypatch.setenv("GRAMIAN_BOUNDS_PRECISION", "106")
    args = build_parser().parse_args(["reproduce"])
    assert args.precision_bits == 106
