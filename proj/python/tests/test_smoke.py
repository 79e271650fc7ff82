import json
import math

import numpy as np
import pytest

import deltashap as ds

NAN = float("nan")


def d4_fixture():
    model = ds.InteractionSyntheticModel(
        3, -0.2, [0.8, -0.6, 0.5, 0.3],
        [(0, 1, 0.7), (1, 2, -0.5), (0, 3, 0.4)], [0.3, 0.0, -0.2, 0.1])
    window = ds.Window(np.array([
        [0.2, -0.4, 1.0, 0.5],
        [0.6, NAN, 0.1, -0.3],
        [1.1, -0.9, 0.4, 0.8],
    ]))
    return model, window


def test_window_roundtrip():
    _, w = d4_fixture()
    assert w.shape == (3, 4)
    assert not w.mask[1, 1]
    assert w.observed == [0, 1, 2, 3]
    prepared = ds.prepare_window(w)
    assert prepared.values[1, 1] == -0.4
    assert ds.prepare_window(prepared) == prepared


def test_exact_matches_frozen_values():
    model, w = d4_fixture()
    r = ds.exact_shapley(model, w)
    expected = [0.04289223401439859, 0.014196778563103862,
                0.04976172154715983, 0.14399422024254674]
    assert r.phi == pytest.approx(expected, abs=1e-12)
    assert r.delta == pytest.approx(0.250844954367209, abs=1e-14)
    assert r.model_eval_count == 17


def test_deltashap_efficiency_and_budget():
    model, w = d4_fixture()
    counter = ds.CountingPredictor(model)
    r = ds.deltashap(counter, w, n=10, seed=3)
    assert r.status == "applied"
    assert sum(r.phi) == pytest.approx(r.delta, abs=1e-12)
    assert counter.count == 10 * 5 + 2 == r.model_eval_count


def test_callable_model_matches_builtin():
    weights = np.zeros((2, 3))
    weights[1] = [0.5, -0.25, 0.1]
    builtin = ds.LinearLogitModel(weights, 0.2, "sigmoid")

    def fn(batch):
        z = 0.2 + batch[:, -1, :] @ weights[1]
        return 1.0 / (1.0 + np.exp(-z))

    wrapped = ds.CallableModel(fn, 2, 3)
    w = ds.Window(np.array([[0.1, 0.3, -1.0], [1.2, -0.7, 0.4]]))
    a = ds.deltashap(builtin, w, n=4, seed=1)
    b = ds.deltashap(wrapped, w, n=4, seed=1)
    assert a.phi == pytest.approx(b.phi, abs=1e-12)


def test_callable_errors_become_model_fault():
    def broken(batch):
        raise ValueError("boom")

    w = ds.Window(np.ones((1, 2)))
    with pytest.raises(ds.ModelFault):
        ds.CallableModel(broken, 1, 2).predict(w)


def test_metrics_fixture():
    assert ds.auc([0.9, 0.8, 0.7, 0.1], [1, 0, 1, 0]) == 0.75
    assert ds.apr([0.9, 0.8, 0.7, 0.1], [1, 0, 1, 0]) == pytest.approx(5 / 6)
    model = ds.LinearLogitModel(np.array([[0.0, 0.0], [1.0, 1.0]]), -0.3,
                                "identity_clamped")
    w = ds.Window(np.array([[0.3, 0.2], [0.7, 0.3]]))
    assert ds.aupd(model, w, [0.4, 0.1], 2) == pytest.approx(0.45, abs=1e-12)
    with pytest.raises(ds.UndefinedMetric):
        ds.auc([0.1, 0.2], [1, 1])


def test_normalize_guards():
    assert ds.normalize([0.2, 0.2], 0.8, [0, 1]) == ([0.4, 0.4], "applied")
    phi, status = ds.normalize([0.3, -0.3], 0.1, [0, 1])
    assert status == "skipped_degenerate_sum"


def test_generate_train_evaluate():
    data, drivers = ds.generate(instances=300, seed=2)
    assert len(data) == 300 and len(drivers) == 300
    prepared = ds.prepare_dataset(data)
    model = ds.train_tiny_logistic(prepared, epochs=50, seed=1)
    assert model.accuracy(prepared) > 0.6
    phis = [ds.deltashap(model, inst.window, n=5, seed=i).phi
            for i, inst in enumerate(prepared.instances)]
    report = ds.evaluate(model, prepared, phis, method="deltashap")
    assert report["aupd"] > 0
    assert report["most_salient"]["auc_by_k"][0] == pytest.approx(
        ds.auc([model.predict(i.window) for i in prepared.instances],
               prepared.labels))


def test_exact_cap_refusal():
    model = ds.LinearLogitModel(np.full((1, 6), 0.1))
    with pytest.raises(ds.BudgetExceeded):
        ds.exact_shapley(model, ds.Window(np.ones((1, 6))), cap=5)


def test_cli_in_process(tmp_path):
    data = tmp_path / "data.jsonl"
    code, _, err = ds.run_cli(["gen-data", "--instances", "40",
                               "--out", str(data)])
    assert code == 0, err
    args = ["evaluate", "--data", str(data), "--model", "interaction",
            "--method", "deltashap,random"]
    first = ds.run_cli(args)
    second = ds.run_cli(args)
    assert first[0] == 0, first[2]
    assert first[1] == second[1]
    doc = json.loads(first[1])
    assert [s["method"] for s in doc["summary"]] == ["deltashap", "random"]
    assert not math.isnan(doc["summary"][0]["aupd"])
