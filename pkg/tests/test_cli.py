import numpy as np
import pytest

from qmsvm.cli import build_run_config, build_parser, main
from qmsvm.data import load_csv, make_blobs, save_csv


@pytest.fixture(scope="module")
def blobs_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "blobs.csv"
    save_csv(make_blobs(600, 3, separation=5.0, seed=1), path)
    return path


@pytest.fixture(scope="module")
def trained(blobs_csv, tmp_path_factory):
    model = tmp_path_factory.mktemp("model") / "m.txt"
    assert main(["train", str(blobs_csv), "--model", str(model), "--M", "30", "--seed", "3"]) == 0
    return model


def test_train_report(blobs_csv, tmp_path, capsys):
    model = tmp_path / "m.txt"
    assert main(["train", str(blobs_csv), "-o", str(model), "--subset-size", "30"]) == 0
    out = capsys.readouterr().out
    combined = float(out.split("combined solution accuracy:")[1].split()[0])
    assert combined >= 0.95
    for phase in ("selection", "sampling", "combination"):
        assert phase in out
    assert "kernel_evals=18000" in out


def test_predict_matches_report(blobs_csv, tmp_path, capsys):
    model = tmp_path / "m.txt"
    main(["train", str(blobs_csv), "-o", str(model), "--M", "30"])
    reported = capsys.readouterr().out.split("combined solution accuracy:")[1].split()[0]
    assert main(["predict", str(blobs_csv), "-m", str(model), "-o", str(tmp_path / "p.txt")]) == 0
    assert capsys.readouterr().err.strip() == f"accuracy: {reported}"


def test_predict_raster(blobs_csv, trained, tmp_path):
    ppm = tmp_path / "map.ppm"
    assert main(["predict", str(blobs_csv), "-m", str(trained), "-o", str(tmp_path / "p"), "--raster", "20x30", "--ppm", str(ppm)]) == 0
    raw = ppm.read_bytes()
    assert raw.startswith(b"P6\n20 30\n255\n") and len(raw) == 13 + 3 * 600


def test_predict_wrong_features(trained, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3,0\n")
    assert main(["predict", str(bad), "-m", str(trained)]) == 3
    assert "features" in capsys.readouterr().err


def test_evaluate(tmp_path, capsys):
    (tmp_path / "p").write_text("0\n1\n1\n1\n")
    (tmp_path / "t").write_text("0\n0\n1\n1\n")
    assert main(["evaluate", "--pred", str(tmp_path / "p"), "--truth", str(tmp_path / "t"), "--name", "toy"]) == 0
    assert capsys.readouterr().out.splitlines() == ["dataset,N,M,accuracy,f1,seconds", "toy,,,0.750000,0.733333,"]


def test_evaluate_length_mismatch(tmp_path):
    (tmp_path / "p").write_text("0\n1\n")
    (tmp_path / "t").write_text("0\n")
    assert main(["evaluate", "--pred", str(tmp_path / "p"), "--truth", str(tmp_path / "t")]) == 3


def test_kmeans_indivisible(blobs_csv, tmp_path, capsys):
    code = main(["train", str(blobs_csv), "-o", str(tmp_path / "m"), "--M", "61", "--selection", "kmeans"])
    assert code == 2
    assert "M not divisible by C" in capsys.readouterr().err
    assert not (tmp_path / "m").exists()


def test_exact_capacity(blobs_csv, tmp_path, capsys):
    code = main(["train", str(blobs_csv), "-o", str(tmp_path / "m"), "--M", "5", "--sampler", "exact"])
    assert code == 2
    assert "capacity" in capsys.readouterr().err


def test_solve_qubo(tmp_path, capsys):
    (tmp_path / "q").write_text("qubo 1 1 1 1\n0 0 -2\n")
    assert main(["solve-qubo", str(tmp_path / "q"), "--sampler", "exact"]) == 0
    assert capsys.readouterr().out == "-2 1 1\n"


def test_solve_qubo_bad_line(tmp_path, capsys):
    (tmp_path / "q").write_text("qubo 2 1 1 2\n0 0 -2\n0 1\n")
    assert main(["solve-qubo", str(tmp_path / "q")]) == 3
    assert "line 3" in capsys.readouterr().err


def test_solve_qubo_sa_agrees(tmp_path, capsys):
    rng = np.random.default_rng(0)
    lines = ["qubo 8 0 0 0"] + [f"{i} {j} {rng.normal():.6f}" for i in range(8) for j in range(i, 8)]
    (tmp_path / "q").write_text("\n".join(lines) + "\n")
    main(["solve-qubo", str(tmp_path / "q"), "--sampler", "exact"])
    exact = capsys.readouterr().out.splitlines()[0].split()[0]
    main(["solve-qubo", str(tmp_path / "q"), "--sampler", "sa", "--num-reads", "200"])
    sa = capsys.readouterr().out.splitlines()[0].split()[0]
    assert float(sa) == pytest.approx(float(exact), abs=1e-12)


def test_benchmark_rows(tmp_path, capsys):
    out = tmp_path / "t.csv"
    args = ["benchmark", "--sizes", "30,60,120", "--M", "6", "--num-reads", "20", "--sweeps", "10",
            "--S", "5", "--test-size", "10", "--repeats", "1", "-o", str(out)]
    assert main(args) == 0
    rows = [r.split(",") for r in out.read_text().splitlines()]
    assert rows[0] == ["N", "phase", "seconds", "kernel_evals"]
    assert len(rows) == 1 + 3 * 4
    comb = [int(r[3]) for r in rows[1:] if r[1] == "combination"]
    inf = {int(r[3]) for r in rows[1:] if r[1] == "inference"}
    assert comb == [180, 360, 720] and inf == {60}


def test_benchmark_infeasible(capsys):
    assert main(["benchmark", "--sizes", "10", "--M", "60"]) == 2


def test_blobs_command(tmp_path):
    assert main(["blobs", "--n", "30", "-o", str(tmp_path / "b.csv")]) == 0
    assert load_csv(tmp_path / "b.csv", class_count=3).n_examples == 30


def test_config_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\nM = 12\nnum-reads = 50\nmax_min_ratio = off\n")
    parser = build_parser()
    args = parser.parse_args(["train", "x.csv", "-o", "m", "--config", str(cfg), "--num-reads", "70"])
    rc = build_run_config(args)
    assert (rc.M, rc.num_reads, rc.max_min_ratio, rc.S) == (12, 70, None, 100)
    monkeypatch.setenv("QMSVM_CONFIG", str(cfg))
    rc = build_run_config(parser.parse_args(["train", "x.csv", "-o", "m"]))
    assert rc.M == 12


def test_unknown_config_key(tmp_path, blobs_csv):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("chain_strength = 2\n")
    assert main(["train", str(blobs_csv), "-o", str(tmp_path / "m"), "--config", str(cfg)]) == 2


def test_passthrough_flags():
    args = build_parser().parse_args(
        ["train", "x", "-o", "m", "--sampler", "remote", "--remote-endpoint", "http://h",
         "--remote-passthrough", "chain_strength=1.5", "--remote-passthrough", "annealing_time=20"]
    )
    assert build_run_config(args).remote_passthrough == {"chain_strength": 1.5, "annealing_time": 20}


def test_remote_unreachable(blobs_csv, tmp_path):
    args = ["train", str(blobs_csv), "-o", str(tmp_path / "m"), "--M", "3", "--sampler", "remote",
            "--remote-endpoint", "http://127.0.0.1:9/x", "--remote-timeout", "2"]
    assert main(args) == 4


def test_missing_data(tmp_path):
    assert main(["train", str(tmp_path / "none.csv"), "-o", str(tmp_path / "m")]) == 3
