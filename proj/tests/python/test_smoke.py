import json
import urllib.request

import pytest

import evenif


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    evenif.generate("german", rows=300, seed=5, out_dir=d)
    evenif.generate("adult", rows=300, seed=2, out_dir=d)
    registry = {
        "datasets": [
            {"id": "german", "csv": "german.csv", "schema": "german.schema.json"},
            {"id": "adult", "csv": "adult.csv", "schema": "adult.schema.json", "scm": "adult.scm.json"},
        ]
    }
    (d / "registry.json").write_text(json.dumps(registry))
    return evenif.Service(d / "registry.json")


def test_method_names():
    names = evenif.method_names()
    assert len(names) == 7
    assert "sgen" in names and "sgen_causal" in names


def test_default_config_sections():
    cfg = evenif.default_config()
    assert set(cfg) >= {"objective", "ga", "causal", "baseline"}


def test_datasets_and_schema(service):
    ids = sorted(d["id"] for d in service.datasets())
    assert ids == ["adult", "german"]
    assert len(service.schema("german")["features"]) == 20


def test_explain_keeps_the_outcome(service):
    pos = service.individuals("german", "positive", 1)[0]
    out = service.explain("german", pos["id"], m=2, seed=3)
    assert len(out["items"]) == 2
    for item in out["items"]:
        assert item["sentence"].startswith("Even if")
        assert service.predict("german", item["semifactual"])["label"] == 1
    assert service.explain("german", pos["id"], m=2, seed=3) == out


def test_errors(service):
    neg = service.individuals("german", "negative", 1)[0]
    with pytest.raises(evenif.NotPositiveOutcome):
        service.explain("german", neg["id"])
    pos = service.individuals("german", "positive", 1)[0]
    with pytest.raises(evenif.ValidationError) as e:
        service.explain("german", pos["id"], m=0)
    assert e.value.args[1] == "m"
    with pytest.raises(evenif.NotFound):
        service.schema("nope")
    assert service.request("GET", "/v1/nowhere")[0] == 404


def test_http_round_trip(service):
    port = service.serve()
    try:
        with urllib.request.urlopen(f"http://127.0.0.1:{port}/v1/datasets") as r:
            assert r.status == 200
            assert len(json.loads(r.read())["datasets"]) == 2
    finally:
        service.stop()


def test_benchmark(tmp_path):
    plan = {
        "name": "tiny",
        "datasets": [{"id": "german", "synthetic": "german", "rows": 200, "seed": 1}],
        "models": ["logistic"],
        "methods": ["sgen", "dice_star"],
        "m": [1],
        "seeds": [0],
        "individuals_per_seed": 2,
        "evaluation": {"adversarial": False},
        "config": {"ga": {"generations": 3}},
    }
    summary = evenif.run_benchmark(plan, out_dir=tmp_path)
    assert summary["run"] == "tiny"
    assert (tmp_path / "tiny.csv").exists()
