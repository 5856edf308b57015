import csv
import json

import pytest

import main
from conftest import write_model


def run(tmp_path, *argv):
    return main.main(list(argv) + ["--output", str(tmp_path)])


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def test_region_from_sampled_dataset(tmp_path, m1_path):
    assert run(tmp_path, "region", "--model", m1_path, "--x", "treated", "--n", "50", "--alpha", "1.2", "--alpha", "10") == 0
    report = read_json(tmp_path / "region.json")
    assert report["meta"]["sampled"] is True
    assert report["meta"]["x"] == "treated"
    (alternative,) = report["alternatives"]
    assert [entry["y"] for entry in alternative["labels"]] == ["no", "yes"]
    regions = {entry["alpha"]: entry for entry in alternative["regions"]}
    assert regions[1.2]["oracle_members"] == ["yes"]
    assert regions[10.0]["members"] == ["no", "yes"]
    assert len(alternative["size_curve"]) == 50
    assert (tmp_path / "dataset.csv").exists()


def test_region_empty_dataset(tmp_path, uniform_path):
    dataset = tmp_path / "empty.csv"
    dataset.write_text("x,y,z\n", encoding="utf-8")
    assert run(tmp_path, "region", "--model", uniform_path, "--dataset", str(dataset)) == 0
    labels = read_json(tmp_path / "region.json")["alternatives"][0]["labels"]
    assert [entry["ratio"] for entry in labels] == [0.25, 0.25]


@pytest.mark.parametrize("alpha, members", [("10", ["0"]), ("0.5", [])])
def test_region_point_mass(tmp_path, uniform_path, alpha, members):
    dataset = tmp_path / "one.csv"
    dataset.write_text("x,y,z\n0,0,0\n", encoding="utf-8")
    assert run(tmp_path, "region", "--model", uniform_path, "--dataset", str(dataset),
               "--alternative", "point:0", "--alpha", alpha) == 0
    alternative = read_json(tmp_path / "region.json")["alternatives"][0]
    assert alternative["labels"][0]["F"] == 1.5
    # Q(y)=0 keeps label 1 in every region
    assert alternative["regions"][0]["members"] == members + ["1"]


def test_region_labels_only_model_needs_dataset(tmp_path):
    path = tmp_path / "labels.json"
    path.write_text(json.dumps({"x_labels": ["0"], "y_labels": ["a", "b"], "z_labels": ["c"]}), encoding="utf-8")
    assert run(tmp_path, "region", "--model", str(path)) == 4
    dataset = tmp_path / "data.csv"
    dataset.write_text("x,y,z\n0,a,c\n0,b,c\n0,a,c\n", encoding="utf-8")
    assert run(tmp_path, "region", "--model", str(path), "--dataset", str(dataset)) == 0
    report = read_json(tmp_path / "region.json")
    assert "oracle_members" not in report["alternatives"][0]["regions"][0]


def test_region_is_deterministic(tmp_path, m1_path):
    for name in ("a", "b"):
        assert main.main(["region", "--model", m1_path, "--seed", "12", "--output", str(tmp_path / name)]) == 0
    for name in ("region.json", "dataset.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_check_exact(tmp_path, m1_path):
    assert run(tmp_path, "check", "exact", "--model", m1_path, "--n", "2", "--trials", "2000") == 0
    report = read_json(tmp_path / "report.json")
    assert report["meta"]["pass"] is True
    assert report["results"][0]["agreement_rule"] == {"sigma": 4.0, "rounding": 1e-12}
    for x_report in report["results"]:
        for expectation in x_report["exact"]["expectations"]:
            assert "/" in expectation["rational"] or expectation["rational"] == "1"
            assert expectation["value"] <= 1
    with open(tmp_path / "report.csv", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert {row["quantity"] for row in rows} == {"exact_lemma1", "lemma1"}


def test_check_exact_budget(tmp_path, m1_path):
    assert run(tmp_path, "check", "exact", "--model", m1_path, "--n", "3", "--budget", "100", "--trials", "1000") == 5


def test_check_exact_needs_rational_model(tmp_path):
    path = write_model(tmp_path / "m.json", ["a"], ["u", "v"], ["p", "q"], [0.1, 0.2, 0.3, 0.4])
    assert run(tmp_path, "check", "exact", "--model", path, "--n", "1", "--trials", "1000") == 4


def test_check_lemma1(tmp_path, m1_path):
    assert run(tmp_path, "check", "lemma1", "--model", m1_path, "--n", "10", "--trials", "1000") == 0


def test_check_validity_and_plot(tmp_path, m1_path):
    assert run(tmp_path, "check", "validity", "--model", m1_path, "--x", "1", "--trials", "1000",
               "--alternative", "uniform", "--alternative", "0.5,0.5") == 0
    report = read_json(tmp_path / "report.json")
    assert [result["alternative"] for result in report["results"]] == ["uniform", "0.5,0.5"]
    assert [r["bound"] for r in report["results"][0]["error_rates"]] == [0.5, 0.1, 0.01]
    svg = tmp_path / "curve.svg"
    assert main.main(["plot", "error-vs-alpha", str(tmp_path / "report.json"), "--out", str(svg)]) == 0
    assert svg.exists()


def test_check_lemma2(tmp_path, m1_path):
    assert run(tmp_path, "check", "lemma2", "--model", m1_path, "--strategy", "copy-z",
               "--strategy", "constant:treated", "--n", "20", "--trials", "1000") == 0
    results = read_json(tmp_path / "report.json")["results"]
    assert [result["strategy"] for result in results] == ["copy-z", "constant:treated"]


def test_check_lemma2_bad_strategy(tmp_path, m1_path):
    assert run(tmp_path, "check", "lemma2", "--model", m1_path, "--strategy", "peek-y", "--trials", "1000") == 2
    assert run(tmp_path, "check", "lemma2", "--model", m1_path, "--strategy", "constant:7", "--trials", "1000") == 4


def test_check_conditional(tmp_path, uniform_path):
    assert run(tmp_path, "check", "conditional", "--model", uniform_path, "--n", "2", "--trials", "1000") == 0
    result = read_json(tmp_path / "report.json")["results"][0]
    assert result["mode"] == "exact"
    assert result["checks"][0]["exact_value"]["rational"] == "7/4"


def test_check_slack(tmp_path, m1_path):
    assert run(tmp_path, "check", "slack", "--model", m1_path, "--y", "yes", "--n", "20", "--trials", "1000") == 0
    result = read_json(tmp_path / "report.json")["results"][0]
    assert result["closed_form_mismatches"] == 0
    assert result["ordered"] is True


def test_check_sweep_and_plot(tmp_path, m1_path):
    assert run(tmp_path, "check", "sweep", "--model", m1_path, "--n", "10", "--trials", "1000") == 0
    report = read_json(tmp_path / "report.json")
    assert report["meta"]["exploratory"] is True
    assert [row["c"] for row in report["results"]] == [0.25, 0.5, 1.0]
    assert report["results"][-1]["violated"] is False
    assert main.main(["plot", "sweep", str(tmp_path / "report.json"), "--output", str(tmp_path)]) == 0
    assert (tmp_path / "sweep.svg").exists()


def test_check_is_deterministic(tmp_path, m1_path):
    for name in ("a", "b"):
        assert main.main(["check", "lemma1", "--model", m1_path, "--n", "10", "--trials", "1000",
                          "--seed", "4", "--output", str(tmp_path / name)]) == 0
    for name in ("report.json", "report.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_from_environment(tmp_path, m1_path, monkeypatch):
    monkeypatch.setenv("CAUSAL_ECONF_SEED", "31")
    assert run(tmp_path, "check", "lemma1", "--model", m1_path, "--n", "5", "--trials", "1000") == 0
    assert read_json(tmp_path / "report.json")["meta"]["seed"] == 31
    assert run(tmp_path, "check", "lemma1", "--model", m1_path, "--n", "5", "--trials", "1000", "--seed", "2") == 0
    assert read_json(tmp_path / "report.json")["meta"]["seed"] == 2


def test_config_file_and_flags(tmp_path, m1_path):
    config = tmp_path / "run.yml"
    config.write_text(f"model:\n    path: {m1_path}\n    intervention: treated\nrun:\n    n: 5\n    trials: 1000\n", encoding="utf-8")
    assert run(tmp_path, "check", "lemma1", "--config", str(config), "--n", "7") == 0
    meta = read_json(tmp_path / "report.json")["meta"]
    assert meta["N"] == 7
    assert meta["x"] == "treated"


@pytest.mark.parametrize("argv, code", [
    (["check", "lemma1", "--trials", "1000"], 2),
    (["check", "lemma1", "--model", "{m1}", "--trials", "10"], 2),
    (["check", "lemma1", "--model", "{m1}", "--x", "placebo", "--trials", "1000"], 4),
    (["check", "lemma1", "--model", "{m1}", "--alternative", "point:maybe", "--trials", "1000"], 0),
    (["check", "validity", "--model", "{m1}", "--alternative", "point:maybe", "--trials", "1000"], 2),
    (["check", "lemma1", "--model", "missing.json", "--trials", "1000"], 3),
    (["check", "unknown"], 2),
    (["plot", "sweep", "missing.json"], 3),
])
def test_exit_codes(tmp_path, m1_path, argv, code):
    argv = [arg.replace("{m1}", m1_path) for arg in argv]
    assert run(tmp_path, *argv) == code


def test_plot_malformed_report(tmp_path):
    report = tmp_path / "empty.json"
    report.write_text("{}", encoding="utf-8")
    assert main.main(["plot", "error-vs-alpha", str(report), "--output", str(tmp_path)]) == 4


def test_region_dataset_with_short_row(tmp_path, uniform_path):
    dataset = tmp_path / "short.csv"
    dataset.write_text("x,y,z\n0,1\n", encoding="utf-8")
    assert run(tmp_path, "region", "--model", uniform_path, "--dataset", str(dataset)) == 4


def test_region_empty_oracle_region_is_null(tmp_path, uniform_path):
    dataset = tmp_path / "one.csv"
    dataset.write_text("x,y,z\n0,0,0\n", encoding="utf-8")
    assert run(tmp_path, "region", "--model", uniform_path, "--dataset", str(dataset), "--alpha", "1") == 0

    def reject_constant(token):
        raise ValueError(f"non-standard JSON constant {token}")

    text = (tmp_path / "region.json").read_text(encoding="utf-8")
    (entry,) = json.loads(text, parse_constant=reject_constant)["alternatives"][0]["regions"]
    assert entry["members"] == ["0", "1"]
    assert entry["oracle_members"] == []
    assert entry["size_ratio"] is None


def help_text(capsys, *argv):
    with pytest.raises(SystemExit) as exit_info:
        main.build_parser().parse_args(list(argv) + ["--help"])
    assert exit_info.value.code == 0
    return " ".join(capsys.readouterr().out.split())


@pytest.mark.parametrize("command", [["region"], ["check", "lemma1"]])
def test_help_names_the_guarantees(capsys, command):
    text = help_text(capsys, *command)
    for anchor in (
        "{y : Q(y)/F_y < alpha}",
        "at most 1/alpha",
        "(n_z + c)/(N + c) * (n_xyz + c)/(n_xz + c)",
        "E[Q(Y)/F_Y] <= 1",
        "depends only on past (X, Z) pairs and the current Z",
        "estimate <= bound + sigma * stderr",
        "F_y = (k + |Z|)/(N + 1)",
        "E[(N + 1)/(n_z + 1)] <= 1/P(Z=z)",
    ):
        assert anchor in text


def test_check_help_documents_every_check(capsys):
    text = help_text(capsys, "check", "exact")
    for anchor in (
        "lemma1: E[p_y/F_y] <= 1 on IID data",
        "validity: E[Q(Y)/F_Y] <= 1",
        "lemma2: E[p_y/F_y] <= 1 when X is chosen by a",
        "conditional: E[(N + 1)/(n_z + 1)] <= 1/P(Z=z)",
        "slack: X always x",
        "sweep: E[p_y/F_y] for several c",
        "exact: E[p_y/F_y] in rational arithmetic",
    ):
        assert anchor in text
