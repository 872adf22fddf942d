import json

import pytest

from idprecon.core import SchemaError
from idprecon.harness import cli
from idprecon.harness.experiments import (
    ExperimentConfig,
    RunReport,
    run_experiment,
    simulate_decision_rule,
    synthetic_dataset,
)
from idprecon.harness.loader import IngestionError, load_dataset, load_schema
from idprecon.harness.report import attribute_rows, emit_report, load_report

SMALL_SCHEMA = {
    "age": {"kind": "numeric", "lower": 0, "upper": 99},
    "job": {"kind": "categorical", "categories": ["a", "b"]},
}


@pytest.fixture
def schema_file(tmp_path):
    p = tmp_path / "schema.json"
    p.write_text(json.dumps(SMALL_SCHEMA))
    return p


def _csv(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_bundled_banking_schema():
    s = load_schema()
    assert len(s) == 17
    assert s[s.index("age")].upper == 125
    assert s[s.index("y")].kind == "categorical"


def test_load_semicolon_csv(tmp_path, schema_file):
    p = _csv(tmp_path, 'age;job;extra\n30;"a";x\n41;b;y\n')
    d = load_dataset(p, schema_file)
    assert d.n == 2 and d.rows.tolist() == [[30, 0], [41, 1]]


def test_header_only_gives_empty_dataset(tmp_path, schema_file):
    d = load_dataset(_csv(tmp_path, "age,job\n"), schema_file)
    assert d.n == 0


@pytest.mark.parametrize("text,needle", [
    ("age\n30\n", "missing column 'job'"),
    ("age,job\n30,c\n", "row 1, column 'job'"),
    ("age,job\n30,a\n130,b\n", "row 2, column 'age'"),
    ("age,job\n30\n", "row 1"),
    ("", "missing header"),
])
def test_ingestion_errors_name_the_location(tmp_path, schema_file, text, needle):
    with pytest.raises(IngestionError, match=needle):
        load_dataset(_csv(tmp_path, text), schema_file)


def test_ingestion_error_is_schema_error():
    assert issubclass(IngestionError, SchemaError)


def test_synthetic_dataset_shape():
    d = synthetic_dataset(50, seed=1)
    assert d.n == 50 and len(d.schema) == 3
    assert len(set(d.row_multiset())) < 50
    assert synthetic_dataset(50, seed=1).row_multiset() == d.row_multiset()


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(attack="nope")
    with pytest.raises(ValueError):
        ExperimentConfig(defense="weird")
    with pytest.raises(ValueError):
        ExperimentConfig(detector="magic")


def test_reconstruct_with_baseline():
    rep = run_experiment(ExperimentConfig(n=60, k=2, baseline=True, seed=3))
    assert rep.exact is True
    assert rep.baseline["exact_overall"] is True
    assert rep.reconstruction["protected_queries"] > 0
    assert rep.baseline["unprotected_queries"] > 0
    assert rep.verdicts


def test_negative_control_fails():
    rep = run_experiment(ExperimentConfig(attack="negative-control", n=40, eps_cap=0.01, eps_per_call=1e-5))
    assert rep.exact is False


@pytest.mark.parametrize("attack", ["membership", "uniqueness"])
def test_targeted_experiments(attack):
    data = synthetic_dataset(40, seed=2)
    row = data.rows[0]
    values = {"amount": row[0], "score": row[2]}
    rep = run_experiment(ExperimentConfig(attack=attack, values=values), data=data)
    assert rep.exact is True
    assert rep.reconstruction["protected_queries"] == 2


def test_column_and_infer_experiments():
    data = synthetic_dataset(40, seed=4)
    rep = run_experiment(ExperimentConfig(attack="reconstruct-column", attribute="score"), data=data)
    assert rep.exact is True
    rep = run_experiment(ExperimentConfig(attack="attribute-infer", attribute="score",
                                          values={"colour": "red"}), data=data)
    assert rep.exact is True


def test_bdp_experiment():
    rep = run_experiment(ExperimentConfig(attack="bdp-enumerate", n=30, seed=5))
    assert rep.exact is True


def test_simulation_requires_even_trials():
    with pytest.raises(ValueError):
        simulate_decision_rule(10, 101)
    assert 0.7 < simulate_decision_rule(10, 2000, seed=1) < 0.9


def test_report_is_byte_deterministic(tmp_path):
    cfg = ExperimentConfig(n=40, seed=7)
    a, ta = emit_report(run_experiment(cfg), tmp_path / "a.json")
    b, tb = emit_report(run_experiment(cfg), tmp_path / "b.json")
    assert a.read_bytes() == b.read_bytes()
    assert ta.read_bytes() == tb.read_bytes()
    assert "seconds" not in a.read_text()
    rows = ta.read_text().splitlines()
    assert rows[0] == "attribute,distinct_values,queries,exact" and len(rows) == 4


def test_report_timing_opt_in(tmp_path):
    path, _ = emit_report(run_experiment(ExperimentConfig(n=20)), tmp_path / "t.json", include_timing=True)
    assert "seconds" in path.read_text()


def test_empty_dataset_report(tmp_path, schema_file):
    p = _csv(tmp_path, "age,job\n")
    rep = run_experiment(ExperimentConfig(dataset=str(p), schema=str(schema_file)))
    path, table = emit_report(rep, tmp_path / "empty.json")
    loaded = load_report(path)
    # n = 0 fails n >= 2k, so nothing is reconstructed and the table is empty
    assert loaded.exact is False and "ApplicabilityError" in loaded.error
    assert attribute_rows(loaded) == []
    assert table.read_text().splitlines() == ["attribute,distinct_values,queries,exact"]


def test_run_report_round_trip():
    rep = run_experiment(ExperimentConfig(n=20, seed=1))
    assert RunReport.from_dict(json.loads(json.dumps(rep.to_dict()))).to_dict() == json.loads(json.dumps(rep.to_dict()))


def test_cli_reconstruct(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["reconstruct", "--n", "30", "--k", "1", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["exact"] is True
    assert out.exists() and (tmp_path / "r_attributes.csv").exists()


def test_cli_exit_codes(tmp_path, schema_file, capsys):
    bad = _csv(tmp_path, "age,job\n30,zzz\n")
    assert cli.main(["reconstruct", "--dataset", str(bad), "--schema", str(schema_file)]) == cli.EXIT_INGESTION
    assert cli.main(["reconstruct", "--n", "3", "--k", "2"]) == cli.EXIT_APPLICABILITY
    assert cli.main(["reconstruct", "--n", "50", "--eps-cap", "1e-9"]) == cli.EXIT_BUDGET
    assert cli.main(["negative-control", "--n", "20", "--eps-cap", "0.01", "--eps-per-call", "1e-6"]) == 0


def test_cli_simulate_and_targets(capsys):
    assert cli.main(["simulate", "--m", "10", "--trials", "2000"]) == 0
    acc = json.loads(capsys.readouterr().out)["accuracy"]
    assert 0.7 < acc < 0.9
    assert cli.main(["membership", "--n", "30", "--values", "amount=5,score=3"]) == 0
    assert json.loads(capsys.readouterr().out)["result"] is False


def test_cli_bad_values_argument():
    with pytest.raises(SystemExit):
        cli.main(["membership", "--values", "amount"])


def test_public_n_skips_size_query(monkeypatch):
    from idprecon.mechanisms import GroupIdpCustodian

    def refuse(self):
        raise AssertionError("size query used")

    monkeypatch.setattr(GroupIdpCustodian, "size_query", refuse)
    rep = run_experiment(ExperimentConfig(n=30, n_source="public"))
    assert rep.exact is True
    with pytest.raises(ValueError):
        ExperimentConfig(n_source="guess")
