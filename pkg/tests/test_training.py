import numpy as np
import pytest

from quadls.linesearch import LineSearchConfig, ZeroDirectionError, fe_cost
from quadls.network import classification_error, init_weights, logistic_spec
from quadls.quadfit import NO_BOUNDS, Bounds
from quadls.training import (
    TrainConfig,
    TrainRecord,
    angle_between,
    fe_decomposition,
    final_quartile_median,
    log10_floored,
    summarize,
    train,
)

from oracles import StubData


def _stub(n=60, n_features=4, seed=0):
    rng = np.random.default_rng(seed)
    w_true = rng.standard_normal(n_features)
    x_tr = rng.standard_normal((n, n_features))
    x_te = rng.standard_normal((n // 3, n_features))
    t_tr = (x_tr @ w_true > 0).astype(float).reshape(-1, 1)
    t_te = (x_te @ w_true > 0).astype(float).reshape(-1, 1)
    return StubData(x_tr, t_tr, x_te, t_te)


def _cfg(**kw):
    base = dict(dataset="stub", net=logistic_spec(4), sampler_mode="dynamic",
                search=LineSearchConfig(kind="gg"), m=10, budget=10 ** 6,
                seed=0, max_iterations=50)
    base.update(kw)
    return TrainConfig(**base)


def test_angle_between_axes():
    assert angle_between([1.0, 0.0], [0.0, 1.0]) == pytest.approx(90.0)
    d = np.array([0.3, -2.0, 1.1])
    assert angle_between(d, d) == pytest.approx(0.0, abs=1e-6)
    assert angle_between(d, -d) == pytest.approx(180.0)
    with pytest.raises(ZeroDirectionError):
        angle_between(d, np.zeros(3))


def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(sampler_mode="alternating")
    with pytest.raises(ValueError):
        _cfg(budget=0)
    with pytest.raises(ValueError):
        _cfg(eval_every=0)
    with pytest.raises(ValueError):
        _cfg(freeze_batch=True)  # only static batches can freeze


def test_budget_of_one_runs_a_single_iteration():
    records = train(_cfg(budget=1, max_iterations=None), _stub())
    assert len(records) == 1
    # bootstrap plus at most one full iteration of overshoot
    assert records[0].fe <= 1 + fe_cost("gg", records[0].outcome)


def test_identical_seeds_give_identical_logs():
    a = train(_cfg(max_iterations=30), _stub())
    b = train(_cfg(max_iterations=30), _stub())
    assert len(a) == len(b)
    for name in ("fe", "iter", "alpha", "train_error", "test_error", "dtheta"):
        np.testing.assert_array_equal([getattr(r, name) for r in a],
                                      [getattr(r, name) for r in b])
    assert [r.outcome for r in a] == [r.outcome for r in b]


def test_fe_counts_decompose_for_dynamic_runs():
    records = train(_cfg(max_iterations=80), _stub())
    assert len(records) == 80
    assert records[-1].fe == 1 + fe_decomposition(records, "gg")
    assert records[0].fe == 1 + fe_cost("gg", records[0].outcome)
    for prev, cur in zip(records, records[1:]):
        assert cur.fe - prev.fe == fe_cost("gg", cur.outcome)
        assert cur.fe > prev.fe


def test_fe_counts_include_static_refresh_probes():
    records = train(_cfg(sampler_mode="static", m=20, max_iterations=40), _stub())
    # each new direction after the first re-probes on the refreshed batch,
    # except right after a resample, which already supplied a fresh probe
    extra = sum(1 for prev, cur in zip(records, records[1:])
                if prev.outcome != "resample")
    assert records[-1].fe == 1 + fe_decomposition(records, "gg") + extra


def test_frozen_static_batch_needs_no_refresh_probes():
    records = train(_cfg(sampler_mode="static", m=20, freeze_batch=True,
                         max_iterations=40), _stub())
    assert records[-1].fe == 1 + fe_decomposition(records, "gg")


def test_error_measurements_follow_the_cadence():
    records = train(_cfg(max_iterations=60, eval_every=50), _stub())
    held = {r.train_error for r in records[:49]}
    assert len(held) == 1  # iterations 1..49 repeat the first measurement
    assert all(0.0 <= r.train_error <= 1.0 for r in records)
    assert all(0.0 <= r.test_error <= 1.0 for r in records)


def test_dtheta_defined_from_second_iteration():
    records = train(_cfg(max_iterations=20), _stub())
    assert np.isnan(records[0].dtheta)
    for rec in records[1:]:
        assert 0.0 <= rec.dtheta <= 180.0


def test_full_batch_descent_on_wdbc(wdbc):
    spec = logistic_spec(wdbc.n_features)
    cfg = TrainConfig(dataset="wdbc", net=spec, sampler_mode="full",
                      search=LineSearchConfig(kind="fgf"), budget=2000,
                      seed=0, max_iterations=None)
    initial = classification_error(spec, init_weights(spec, 0), wdbc, "train")
    records = train(cfg, wdbc)
    assert records[-1].train_error < initial
    assert records[-1].fe >= 2000


def test_exact_search_directions_are_orthogonal(wdbc):
    spec = logistic_spec(wdbc.n_features)
    cfg = TrainConfig(dataset="wdbc", net=spec, sampler_mode="full",
                      search=LineSearchConfig(kind="gg", bounds=Bounds(1e-8, 1e7)),
                      budget=10 ** 6, max_iterations=8, exact=True,
                      exact_tol=1e-8, seed=1)
    records = train(cfg, wdbc)
    assert [r.outcome for r in records] == ["exact"] * 8
    for rec in records[1:]:
        assert rec.dtheta == pytest.approx(90.0, abs=1.0)


def test_nonfinite_loss_aborts_with_partial_log():
    rng = np.random.default_rng(2)
    data = StubData(rng.standard_normal((20, 2)) * 1e200,
                    rng.integers(0, 2, size=(20, 1)).astype(float),
                    rng.standard_normal((5, 2)),
                    rng.integers(0, 2, size=(5, 1)).astype(float))
    cfg = TrainConfig(dataset="stub", net=logistic_spec(2), sampler_mode="full",
                      search=LineSearchConfig(kind="gg", bounds=NO_BOUNDS),
                      budget=50)
    records = train(cfg, data)
    assert isinstance(records, list)
    assert records == []  # the very first slope overflows


def test_fe_decomposition_rejects_exact_rows():
    rec = TrainRecord(fe=3, iter=1, alpha=1.0, train_error=0.5,
                      test_error=0.5, dtheta=float("nan"), outcome="exact")
    with pytest.raises(ValueError):
        fe_decomposition([rec], "gg")


def _flat_records(fes, alphas):
    return [TrainRecord(fe=fe, iter=i + 1, alpha=a, train_error=a,
                        test_error=a, dtheta=90.0, outcome="interpolation")
            for i, (fe, a) in enumerate(zip(fes, alphas))]


def test_summarize_single_run_has_zero_sigma():
    out = summarize([_flat_records([2, 4, 6], [1.0, 2.0, 3.0])])
    np.testing.assert_array_equal(out["alpha_sigma"], [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(out["alpha_mean"], [1.0, 2.0, 3.0])


def test_summarize_two_constant_runs():
    runs = [_flat_records([2], [1.0]), _flat_records([2], [3.0])]
    out = summarize(runs)
    assert out["alpha_mean"][0] == pytest.approx(2.0)
    assert out["alpha_sigma"][0] == pytest.approx(1.0)  # population convention


def test_summarize_carries_last_observation_forward():
    run_a = _flat_records([2, 6], [10.0, 20.0])
    run_b = _flat_records([3], [5.0])
    out = summarize([run_a, run_b])
    np.testing.assert_array_equal(out["fe"], [2, 3, 6])
    # run a holds 10 at fe=3; run b backfills 5 at fe=2 and holds it at fe=6
    np.testing.assert_allclose(out["alpha_mean"], [7.5, 7.5, 12.5])


def test_summarize_rejects_empty_input():
    with pytest.raises(ValueError):
        summarize([])
    with pytest.raises(ValueError):
        summarize([[]])


def test_log10_floored():
    np.testing.assert_allclose(log10_floored([100.0, 0.0]), [2.0, -300.0])


def test_final_quartile_median():
    recs = _flat_records(range(1, 9), [1, 1, 1, 1, 1, 1, 2.0, 4.0])
    assert final_quartile_median(recs) == pytest.approx(3.0)
    assert final_quartile_median(recs[:4]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        final_quartile_median([])
