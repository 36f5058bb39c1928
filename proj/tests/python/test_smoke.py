import math

import numpy as np
import pytest

import lyam


def lyam_reference(theta, grad, steps, eta0, b1, b2):
    """Vectorized recurrence written from the update rule."""
    theta = np.asarray(theta, dtype=float).copy()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    p1 = p2 = 1.0
    for _ in range(steps):
        g = grad(theta)
        p1 *= b1
        p2 *= b2
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        eta = eta0 / (1.0 + v / (1.0 - p2))
        theta = theta - eta * (m / (1.0 - p1))
    return theta


def test_single_step():
    out = lyam.lyam_step([0.0], lyam.init_state(1), [2.0], lyam.HyperParams(eta0=0.1, beta1=0.9, beta2=0.99))
    assert out.m_hat[0] == pytest.approx(2.0, abs=1e-12)
    assert out.v_hat[0] == pytest.approx(4.0, abs=1e-12)
    assert out.eta[0] == pytest.approx(0.02, abs=1e-12)
    assert out.new_params[0] == pytest.approx(-0.04, abs=1e-12)
    assert out.new_state.t == 1


def test_trace_matches_numpy_reference():
    c = 2.0
    theta0 = [1.5, -0.7, 0.3]
    opt = lyam.Optimizer(lyam.OptimizerKind.LyAm, lyam.HyperParams(eta0=0.003), theta0)
    for _ in range(200):
        opt.step([c * x for x in opt.params])
    ref = lyam_reference(theta0, lambda x: c * x, 200, 0.003, 0.9, 0.99)
    np.testing.assert_allclose(opt.params, ref, rtol=1e-12, atol=0.0)
    assert opt.step_count == 200


def test_rate_range_and_errors():
    rng = np.random.default_rng(3)
    hyper = lyam.HyperParams(eta0=0.01)
    state = lyam.init_state(4)
    params = [0.0] * 4
    for _ in range(100):
        g = list(rng.normal(size=4) * 10.0 ** rng.uniform(-6, 6))
        out = lyam.lyam_step(params, state, g, hyper)
        assert all(0.0 < e <= 0.01 for e in out.eta)
        params, state = out.new_params, out.new_state
    with pytest.raises(ValueError):
        lyam.lyam_step([0.0], lyam.init_state(1), [float("nan")], hyper)
    with pytest.raises(ValueError):
        lyam.lyam_step([0.0, 1.0], lyam.init_state(1), [1.0], hyper)
    with pytest.raises(ValueError):
        lyam.HyperParams(beta1=1.0)


def test_optimizer_names_and_parse():
    assert "AdaBelief" in lyam.optimizer_names()
    assert lyam.parse_optimizer_kind("adamw") == lyam.OptimizerKind.AdamW
    with pytest.raises(ValueError):
        lyam.parse_optimizer_kind("nadam")


def test_drift_and_classification():
    rep = lyam.drift_bound([1.0], [1.0], [0.1], 2.0)
    assert rep.descent_term == pytest.approx(-0.1)
    assert rep.quad_term == pytest.approx(0.01)
    kind, eig = lyam.classify_critical_point(np.diag([2.0, -2.0]))
    assert kind == "saddle"
    assert eig == pytest.approx([-2.0, 2.0])
    assert lyam.check_lr_bound(0.1, [0.0], 4.0) == [True]


def test_run_config_and_cli(tmp_path):
    runs = lyam.run_config("[task]\nkind = sphere\n[run]\nmax_steps = 30\nseeds = 0, 1\n")
    assert len(runs) == 2
    assert len(runs[0]["steps"]) == 30
    assert runs[0]["summary"]["final_loss"] < runs[0]["summary"]["initial_loss"]
    assert all(math.isfinite(s["drift_bound"]) for s in runs[0]["steps"])
    with pytest.raises(ValueError):
        lyam.run_config("[optimizer]\nkind = rmsprop\n")

    cfg = tmp_path / "s.ini"
    cfg.write_text("[task]\nkind = sphere\n[run]\nmax_steps = 10\n")
    code, out, _ = lyam.cli(["trace", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 0
    assert (tmp_path / "o" / "trajectory.csv").read_text().count("\n") == 11
    code, _, err = lyam.cli(["trace", "--config", str(tmp_path / "missing.ini")])
    assert code == 2
