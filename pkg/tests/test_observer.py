"""Three-step filter: recursion behavior, radii and their limits."""

import numpy as np
import pytest

import lpvobs as lo


def brute_force_radius(k, delta0, theta, eta_bar):
    """Literal evaluation of delta0*theta^k + eta_bar*sum theta^(i-1)."""
    acc = delta0 * theta**k
    for i in range(1, k + 1):
        acc += eta_bar * theta ** (i - 1)
    return acc


def test_state_radius_at_zero():
    assert lo.state_radius(0, 0.37, 0.5, 0.1) == 0.37


def test_state_radius_pure_decay():
    assert lo.state_radius(7, 2.0, 0.5, 0.0) == pytest.approx(2.0 * 0.5**7, rel=1e-14)


def test_state_radius_frozen_example():
    # theta=0.5, delta0=1, eta_bar=0.25, k=2: 0.25 + 0.25*(1 + 0.5) = 0.625
    assert lo.state_radius(2, 1.0, 0.5, 0.25) == pytest.approx(0.625, abs=1e-15)


def test_state_radius_matches_brute_force():
    rng = np.random.default_rng(9)
    for _ in range(30):
        k = int(rng.integers(0, 40))
        delta0 = rng.uniform(0, 2)
        theta = rng.uniform(0, 1.4)
        eta_bar = rng.uniform(0, 0.5)
        expected = brute_force_radius(k, delta0, theta, eta_bar)
        assert lo.state_radius(k, delta0, theta, eta_bar) == pytest.approx(expected, rel=1e-11, abs=1e-13)


def test_state_radius_recursion_identity():
    for theta in (0.3, 0.9, 1.0, 1.2):
        for k in range(1, 30):
            lhs = lo.state_radius(k, 0.5, theta, 0.02)
            rhs = theta * lo.state_radius(k - 1, 0.5, theta, 0.02) + 0.02
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_state_radius_theta_one_linear_growth():
    assert lo.state_radius(10, 1.0, 1.0, 0.1) == pytest.approx(2.0, abs=1e-14)
    assert lo.state_radius(10, 1.0, 1.0 + 1e-14, 0.1) == pytest.approx(2.0, abs=1e-10)


def test_state_radius_divergent_still_returned():
    val = lo.state_radius(50, 0.5, 1.2, 0.02)
    assert np.isfinite(val)
    assert val > 0.5 * 1.2**50


def test_input_radius_zero_floor(conv_dm, conv_consts):
    quiet = lo.error_constants(
        lo.decouple(lo.LpvModel(
            A=conv_dm.model.A, B=conv_dm.model.B, C=conv_dm.model.C,
            D=conv_dm.model.D, G=conv_dm.model.G, H=conv_dm.model.H,
            eta_w=0.0, eta_v=0.0, x0_hat=conv_dm.model.x0_hat,
            delta0_x=conv_dm.model.delta0_x,
        )),
        np.zeros((2, conv_dm.q)),
    )
    assert lo.input_radius(0.0, quiet, conv_dm, "worst_case") == 0.0


def test_input_radius_monotone_in_state_radius(conv_dm, conv_consts):
    r1 = lo.input_radius(0.1, conv_consts, conv_dm)
    r2 = lo.input_radius(0.2, conv_consts, conv_dm)
    assert r2 > r1


def test_time_varying_never_exceeds_worst_case(bench_dm, bench_consts):
    rng = np.random.default_rng(13)
    for _ in range(40):
        lam = rng.dirichlet(np.ones(2))
        tv = lo.input_radius(0.8, bench_consts, bench_dm, "time_varying", weights_prev=lam)
        wc = lo.input_radius(0.8, bench_consts, bench_dm, "worst_case")
        assert tv <= wc + 1e-12


def test_steady_state_frozen_values(conv_dm, conv_consts):
    import dataclasses
    consts = dataclasses.replace(conv_consts, theta=0.5, eta_bar=1.0)
    dx_inf, _ = lo.steady_state_radii(consts, conv_dm)
    assert dx_inf == pytest.approx(2.0, rel=1e-14)


def test_steady_state_zero_noise(conv_dm, conv_cert):
    quiet_model = lo.LpvModel(
        A=conv_dm.model.A, B=conv_dm.model.B, C=conv_dm.model.C,
        D=conv_dm.model.D, G=conv_dm.model.G, H=conv_dm.model.H,
        eta_w=0.0, eta_v=0.0, x0_hat=conv_dm.model.x0_hat,
        delta0_x=conv_dm.model.delta0_x,
    )
    dmq = lo.decouple(quiet_model)
    consts = lo.error_constants(dmq, conv_cert.L_tilde)
    assert consts.theta < 1.0
    assert lo.steady_state_radii(consts, dmq) == (0.0, 0.0)


def test_steady_state_requires_contraction(bench_dm, bench_consts):
    assert bench_consts.theta >= 1.0
    with pytest.raises(lo.ConvergenceError, match="do not converge"):
        lo.steady_state_radii(bench_consts, bench_dm)


def test_steady_state_is_input_radius_fixed_point(conv_dm, conv_consts):
    dx_inf, dd_inf = lo.steady_state_radii(conv_consts, conv_dm)
    assert dd_inf == pytest.approx(lo.input_radius(dx_inf, conv_consts, conv_dm), rel=1e-12)


def test_monotone_convergence_of_radius(conv_consts):
    theta, eta_bar = conv_consts.theta, conv_consts.eta_bar
    assert theta < 1.0
    dx_inf = eta_bar / (1.0 - theta)
    delta0 = 0.2
    prev = lo.state_radius(0, delta0, theta, eta_bar)
    for k in range(1, 120):
        cur = lo.state_radius(k, delta0, theta, eta_bar)
        gap = abs(cur - dx_inf)
        assert gap <= theta**k * abs(delta0 - dx_inf) + 1e-15
        # monotone approach
        assert abs(cur - dx_inf) <= abs(prev - dx_inf) + 1e-15
        prev = cur


def test_initialize_stores_radius_and_estimate(bench_dm, bench_cert, bench_consts):
    model = bench_dm.model
    y0 = np.array([0.4, -0.2])
    state = lo.initialize(
        bench_dm, bench_cert.L_tilde, bench_consts,
        model.x0_hat, model.delta0_x, y0, np.zeros(2), [0.5, 0.5],
    )
    assert state.k == 0
    assert state.delta_x == 0.5
    np.testing.assert_array_equal(state.x_hat, model.x0_hat)


def test_initialize_exact_recovers_feedthrough_component(bench_dm, bench_cert, bench_consts):
    # zero noise, known x0: the feedthrough component estimate is exact
    model = bench_dm.model
    rng = np.random.default_rng(4)
    x0 = rng.normal(size=2)
    d0 = rng.normal(size=2)
    lam0 = np.array([0.3, 0.7])
    u0 = rng.normal(size=2)
    y0 = model.C @ x0 + sum(lam0[i] * (model.D[i] @ u0) for i in range(2)) + model.H @ d0
    state = lo.initialize(bench_dm, bench_cert.L_tilde, bench_consts, x0, 0.0, y0, u0, lam0)
    d1_true, _ = lo.split_unknown_input(bench_dm, d0)
    np.testing.assert_allclose(state.d1_hat, d1_true, atol=1e-12)


def test_initialize_empty_feedthrough_component(conv_dm, conv_cert, conv_consts):
    model = conv_dm.model
    state = lo.initialize(
        conv_dm, conv_cert.L_tilde, conv_consts,
        model.x0_hat, model.delta0_x, np.zeros(2), np.zeros(1), [1.0, 0.0],
    )
    assert state.d1_hat.shape == (0,)


def test_step_rejects_bad_weights_and_nonfinite_measurements(bench_dm, bench_cert, bench_consts):
    model = bench_dm.model
    state = lo.initialize(
        bench_dm, bench_cert.L_tilde, bench_consts,
        model.x0_hat, model.delta0_x, np.zeros(2), np.zeros(2), [0.5, 0.5],
    )
    with pytest.raises(lo.WeightError):
        lo.step(state, np.zeros(2), np.zeros(2), np.zeros(2), [0.9, 0.2], [0.5, 0.5])
    with pytest.raises(ValueError, match="non-finite"):
        lo.step(state, np.zeros(2), np.zeros(2), np.array([np.nan, 0.0]), [0.5, 0.5], [0.5, 0.5])


def test_zero_error_absorption(bench_model, bench_dm, bench_cert, bench_consts):
    # exact init, zero noise, zero attack: both error tracks stay at zero
    scen = lo.Scenario(
        K=100, seed=0,
        weight_mode={"kind": "random_simplex"},
        unknown_input=({"kind": "constant", "value": 0.0},) * 2,
        known_input=({"kind": "constant", "value": 0.3},) * 2,
        noise_mode={"kind": "zero"},
        x0_true=bench_model.x0_hat,
    )
    truth = lo.simulate_plant(bench_model, scen)
    trace = lo.run_observer(bench_dm, bench_cert.L_tilde, bench_consts, truth)
    assert trace.err_x.max() < 1e-10
    assert trace.err_d.max() < 1e-10


def test_attack_fully_decoupled_without_noise(bench_model, bench_dm, bench_cert, bench_consts):
    # exact init and zero noise: even a large unmodeled attack leaves both
    # estimates exact, because the filter reconstructs it.
    scen = lo.Scenario(
        K=60, seed=1,
        weight_mode={"kind": "random_simplex"},
        unknown_input=(
            {"kind": "sinusoid", "amplitude": 50.0, "period": 11},
            {"kind": "piecewise", "segments": [[0, 5.0], [20, -40.0], [40, 12.5]]},
        ),
        known_input=({"kind": "constant", "value": 0.0},) * 2,
        noise_mode={"kind": "zero"},
        x0_true=bench_model.x0_hat,
    )
    truth = lo.simulate_plant(bench_model, scen)
    trace = lo.run_observer(bench_dm, bench_cert.L_tilde, bench_consts, truth)
    assert trace.err_x.max() < 1e-9
    assert trace.err_d.max() < 1e-9


def test_vertex_consistency_matches_lti_filter(bench_model, bench_dm, bench_cert, bench_consts):
    # scheduling pinned at vertex 2 must reproduce the single-vertex filter
    j = 1
    scen = lo.Scenario(
        K=40, seed=8,
        weight_mode={"kind": "fixed_vertex", "j": j},
        unknown_input=(
            {"kind": "sinusoid", "amplitude": 2.0, "period": 9},
            {"kind": "constant", "value": 1.0},
        ),
        known_input=({"kind": "constant", "value": 0.1},) * 2,
        noise_mode={"kind": "uniform_ball"},
    )
    truth = lo.simulate_plant(bench_model, scen)
    trace = lo.run_observer(bench_dm, bench_cert.L_tilde, bench_consts, truth)

    lti = lo.LpvModel(
        A=(bench_model.A[j],), B=(bench_model.B[j],), C=bench_model.C,
        D=(bench_model.D[j],), G=bench_model.G, H=bench_model.H,
        eta_w=bench_model.eta_w, eta_v=bench_model.eta_v,
        x0_hat=bench_model.x0_hat, delta0_x=bench_model.delta0_x,
    )
    dm_lti = lo.decouple(lti)
    consts_lti = lo.error_constants(dm_lti, bench_cert.L_tilde)
    truth_lti = lo.PlantTruth(
        x=truth.x, y=truth.y, u=truth.u, d=truth.d,
        lam=np.ones((truth.K + 1, 1)),
        w=truth.w[:, j:j + 1, :], v=truth.v[:, j:j + 1, :],
    )
    trace_lti = lo.run_observer(dm_lti, bench_cert.L_tilde, consts_lti, truth_lti)
    np.testing.assert_allclose(trace.x_hat, trace_lti.x_hat, atol=1e-12)
    np.testing.assert_allclose(trace.d_hat, trace_lti.d_hat, atol=1e-12)


def test_set_estimate_validation():
    with pytest.raises(ValueError):
        lo.SetEstimate(center=[0.0], radius=-1.0)
    with pytest.raises(ValueError):
        lo.SetEstimate(center=[np.inf], radius=1.0)
    ball = lo.SetEstimate(center=[1.0, 0.0], radius=0.5)
    assert ball.contains([1.2, 0.1])
    assert not ball.contains([2.0, 0.0])
