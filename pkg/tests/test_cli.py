import json
import os

import numpy as np
import pytest

from mmca.cli import main


@pytest.fixture
def example_file(tmp_path, example_csv):
    path = tmp_path / "ex.csv"
    path.write_text(example_csv)
    return str(path)


@pytest.fixture
def sim_file(tmp_path):
    out = str(tmp_path / "sim.csv")
    assert main(["simulate", "-o", out, "--n", "200", "--categories", ",".join(["3"] * 10),
                 "--singular-values", "30,20", "--seed", "1"]) == 0
    return out


def test_fit_writes_contract(tmp_path, example_file):
    out = tmp_path / "fit.json"
    assert main(["fit", example_file, "--rank", "2", "--lambda", "0.5", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["format_version"] == 1
    for key in ("mu", "U", "d", "V", "trace", "converged", "iterations", "effective_rank", "lambda"):
        assert key in doc
    assert np.all(np.diff(doc["trace"]) <= 1e-10)
    assert doc["variables"][0] == {"name": "v1", "categories": ["a", "b", "c"]}


def test_fit_huge_lambda_rank_zero(tmp_path, example_file):
    out = tmp_path / "fit.json"
    assert main(["fit", example_file, "--rank", "2", "--lambda", "1e9", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["effective_rank"] == 0


def test_fit_not_converged_exit_code(tmp_path, example_file):
    out = tmp_path / "fit.json"
    assert main(["fit", example_file, "--rank", "2", "--max-iter", "3", "-o", str(out)]) == 3
    assert out.exists()


def test_fit_output_is_byte_identical(tmp_path, example_file):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["fit", example_file, "--rank", "2", "--lambda", "0.5", "-o", str(a)])
    main(["fit", example_file, "--rank", "2", "--lambda", "0.5", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_missing_input_file(tmp_path):
    out = tmp_path / "x.json"
    assert main(["fit", str(tmp_path / "nope.csv"), "--rank", "1", "-o", str(out)]) == 1
    assert not out.exists()


def test_bad_rank_is_input_error(tmp_path, example_file):
    out = tmp_path / "x.json"
    assert main(["fit", example_file, "--rank", "9", "-o", str(out)]) == 1
    assert not out.exists()


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["fit"])
    assert exc.value.code == 1


def test_mca_csv(tmp_path, example_file, capsys):
    out = tmp_path / "mca.csv"
    assert main(["mca", example_file, "--rank", "2", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "kind,label,dim1,dim2"
    assert len(lines) == 1 + 10 + 8
    assert "grand row sums of G_hat = 3" in capsys.readouterr().out


def test_mca_missing_data_is_input_error(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("x,y\na,u\nb,NA\na,v\n")
    assert main(["mca", str(path), "--rank", "1", "-o", str(tmp_path / "o.csv")]) == 1


def test_simulate_deterministic_with_sidecar(tmp_path):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    args = ["--n", "50", "--categories", "3,2,4", "--singular-values", "5", "--seed", "7"]
    assert main(["simulate", "-o", a, *args]) == 0
    assert main(["simulate", "-o", b, *args]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()
    truth = json.loads(open(a + ".truth.json").read())
    assert truth["rank"] == 1 and truth["blocks"] == [3, 2, 4]


def test_env_seed_overrides_flag(tmp_path, monkeypatch):
    a, b, c = (str(tmp_path / f"{x}.csv") for x in "abc")
    base = ["--n", "30", "--categories", "3,3"]
    main(["simulate", "-o", a, *base, "--seed", "5"])
    monkeypatch.setenv("MMCA_SEED", "5")
    main(["simulate", "-o", b, *base, "--seed", "99"])
    monkeypatch.setenv("MMCA_SEED", "6")
    main(["simulate", "-o", c, *base, "--seed", "5"])
    assert open(a).read() == open(b).read()
    assert open(a).read() != open(c).read()


def test_bad_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("MMCA_SEED", "abc")
    assert main(["simulate", "-o", str(tmp_path / "a.csv"), "--n", "30", "--categories", "3,3"]) == 1


def test_simulate_rejects_bad_categories(tmp_path):
    assert main(["simulate", "-o", str(tmp_path / "a.csv"), "--n", "30", "--categories", "3,1"]) == 1


def test_biplot_glyph_count(tmp_path, example_file):
    fit_json = str(tmp_path / "fit.json")
    main(["fit", example_file, "--rank", "2", "--lambda", "0.2", "-o", fit_json])
    prefix = str(tmp_path / "bp")
    assert main(["biplot", fit_json, "-o", prefix, "--scaling", "symmetric"]) == 0
    svg = open(prefix + ".svg").read()
    assert svg.count('class="row"') + svg.count('class="category"') == 10 + 8
    rows = open(prefix + ".csv").read().splitlines()
    assert len(rows) == 1 + 18


def test_biplot_scalings_follow_formulas(tmp_path, example_file):
    fit_json = str(tmp_path / "fit.json")
    main(["fit", example_file, "--rank", "2", "--lambda", "0.2", "-o", fit_json])
    doc = json.loads(open(fit_json).read())
    U, d, V = np.array(doc["U"]), np.array(doc["d"]), np.array(doc["V"])
    for scaling, (X, A) in {
        "interaction": (np.sqrt(10) * U, V * d / np.sqrt(10)),
        "symmetric": (np.sqrt(10) * U * d ** 0.25, V * d ** 0.25 / np.sqrt(10)),
    }.items():
        prefix = str(tmp_path / scaling)
        main(["biplot", fit_json, "-o", prefix, "--scaling", scaling])
        table = np.loadtxt(prefix + ".csv", delimiter=",", skiprows=1, usecols=(2, 3))
        np.testing.assert_allclose(table[:10], X, atol=1e-12)
        np.testing.assert_allclose(table[10:], A, atol=1e-12)


def test_rank_one_biplot_skips_svg(tmp_path, example_file):
    fit_json = str(tmp_path / "fit.json")
    main(["fit", example_file, "--rank", "1", "--lambda", "0.2", "-o", fit_json])
    prefix = str(tmp_path / "bp")
    assert main(["biplot", fit_json, "-o", prefix]) == 0
    assert os.path.exists(prefix + ".csv")
    assert not os.path.exists(prefix + ".svg")


def test_biplot_bad_format_version(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"format_version": 2}))
    assert main(["biplot", str(path), "-o", str(tmp_path / "bp")]) == 1


def test_cv_command_single_grid(tmp_path, sim_file):
    out = tmp_path / "cv.json"
    assert main(["cv", sim_file, "--rank", "1", "--grid", "0.4", "--folds", "2", "--max-iter", "200",
                 "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["lambda_star"] == 0.4


def test_cv_command_singleton_categories_fail(tmp_path, example_file):
    # Two categories of v2 occur once, so every split empties one of them.
    out = tmp_path / "cv.json"
    assert main(["cv", example_file, "--rank", "1", "--grid", "0.4", "-o", str(out)]) == 1
    assert not out.exists()


def test_cv_command_requires_grid(tmp_path, example_file):
    assert main(["cv", example_file, "--rank", "1", "-o", str(tmp_path / "cv.json")]) == 1


def test_select_minimal_run(tmp_path, sim_file):
    out = tmp_path / "sel.json"
    assert main(["select", sim_file, "--replicates", "100", "--folds", "2", "--grid-count", "3",
                 "--max-iter", "300", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["qut"]["replicates"] == 100
    assert doc["cv"]["rank"] == doc["qut"]["estimated_rank"]
    assert doc["cv"]["lambda_star"] in doc["cv"]["lambda_grid"]
