import math

import pytest

import diloco_sim as ds


def small_config(method):
    c = ds.TrainConfig()
    c.method = method
    c.replicas = 2
    c.H = 5
    c.steps = 50
    c.objective.kind = ds.ObjectiveKind.Quadratic
    c.objective.dim = 8
    c.objective.heterogeneity = 1.0
    c.inner.lr = 0.02
    c.seed = 3
    return c


def test_vector_helpers():
    assert ds.average([[1.0, 2.0], [3.0, 4.0]]) == [2.0, 3.0]
    assert ds.l2_norm([3.0, 4.0]) == 5.0
    with pytest.raises(ValueError):
        ds.l2_norm([])


def test_quantization():
    fp4 = ds.parse_format("fp4-e2m1")
    assert fp4 == ds.QuantFormat.Fp4E2M1
    assert ds.round_to_format(2.6, fp4) == 3.0
    x = [0.5 * i for i in range(-16, 16)]
    q = ds.quantize(x, fp4)
    assert ds.quantize(q, fp4) == q
    assert ds.quantize(x, ds.QuantFormat.Fp32) == x
    assert ds.payload_bits(32, fp4) == 32 * 4 + 16


def test_gradient_matches_finite_differences():
    spec = ds.ObjectiveSpec()
    spec.kind = ds.ObjectiveKind.Logistic
    spec.dim = 6
    shards = ds.ShardSet(spec, 1, 0)
    batch = shards.batch(0, 0)
    theta = [0.1 * i for i in range(6)]
    _, grad = ds.loss_and_grad(spec, theta, batch)
    fd = ds.finite_diff_grad(spec, theta, batch)
    assert all(abs(a - b) < 1e-6 for a, b in zip(grad, fd))


def test_eager_combine():
    out = ds.eager_combine([1.0], [0.5], [2.0], 2)
    assert out == [0.5 * (1.0 - 0.5) + 2.0]


def test_run_training_eager_vs_standard():
    std = ds.run_training(small_config(ds.Method.Standard))
    eager = ds.run_training(small_config(ds.Method.EagerDelayed))
    assert len(std["eval_loss"]) == 50
    assert std["reduce_count"] == 10
    assert not eager["diverged"]
    # (fragment, sent_round, consumed_round)
    assert len(eager["consumed"]) == 9
    assert all(consumed - sent == 1 for _, sent, consumed in eager["consumed"])
    assert math.isfinite(eager["final_eval_loss"])


def test_config_errors_are_value_errors():
    c = small_config(ds.Method.Standard)
    c.H = 0
    with pytest.raises(ValueError):
        c.validate()


def test_netsim():
    n = ds.netsim
    model = n.ModelSpec.preset("1B")
    s = n.OverlapStrategy()
    s.kind = n.OverlapKind.DataParallel
    r = n.simulate(model, s, 2, 100.0, 100)
    assert r.utilization == pytest.approx(0.1 / 0.42)
    s.kind = n.OverlapKind.OuterStepOverlap
    assert n.min_bandwidth_for_cu(model, s, 2, 0.95) < 1.0


def test_preset_and_compare(tmp_path):
    assert "heterogeneous_quadratic" in ds.preset_names()
    report = ds.run_preset("bandwidth_sweep", str(tmp_path / "bw"))
    assert report["rows"] == 3 * 4 * 41
    cfg = tmp_path / "small.yaml"
    cfg.write_text(
        "name: py-smoke\nkind: training\nrepetitions: 2\n"
        "base: {H: 5, steps: 40, objective: {kind: quadratic, dim: 8, heterogeneity: 1}}\n"
        "variants: [{name: a, method: standard}, {name: b, method: eager-delayed}]\n"
    )
    r = ds.run_config(str(cfg), str(tmp_path / "out"), jobs=2)
    assert r["rows"] == 4
    s = ds.compare(str(r["runs_csv"]), "a", "b")
    assert s["pairs"] == 2
    assert s["verdict"] in {"equivalent", "candidate-worse", "candidate-better", "mixed"}
