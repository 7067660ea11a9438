import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustbf.constraints import (BeamformingSolution, baseline1_qos, assemble_relaxed_problem, dbm_to_watt, solution_from_sdp)
from robustbf.sim import (CSV_COLUMNS, PIPELINE_SOLVER, SimConfig, TrialMetrics, _cn, _pu_rate_grad,
                          achieved_sinr, effective_noise_power, evaluate_solution, generate_realization, path_gain,
                          path_loss_db, pu_rate, qos_from_config, rows_to_csv, run_campaign, run_trial,
                          sample_ball, secrecy_floor, summarize, worst_pu_rate)
from robustbf.sdp import solve_sdp
from robustbf.validate import small_instance

TINY = SimConfig(K=1, J=1, N_T=3, N_PR=2, L=2, trials=3, gamma_base_db=0.0, P_I_dbm=-95.0)


def test_path_loss_hand_value():
    # 22.7 + 36.7 * 2 + 26 log10(2.6) at 100 m
    assert path_loss_db(100.0, 2.6) == pytest.approx(22.7 + 73.4 + 26 * math.log10(2.6))
    assert path_gain(100.0) == pytest.approx(10 ** (-path_loss_db(100.0) / 10))


def test_rayleigh_power():
    z = _cn(np.random.default_rng(0), 40000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.03)
    assert abs(np.mean(z)) < 0.02


def test_channel_energy_matches_path_gain():
    cfg = SimConfig(K=1, J=0, trials=1)
    ratios = []
    for t in range(3000):
        rng = np.random.default_rng([cfg.seed, t, 0, 0])
        d = rng.uniform(cfg.reference_distance_m, cfg.cell_radius_m)
        ch, _ = generate_realization(cfg, t)
        ratios.append(np.vdot(ch.h[0], ch.h[0]).real / (cfg.N_T * path_gain(d, cfg.carrier_ghz)))
    assert np.mean(ratios) == pytest.approx(1.0, rel=0.03)


def test_effective_noise():
    cfg = SimConfig()
    # a receiver 100 m from the primary transmitter
    pos = np.array([cfg.primary_distance_m - 100.0, 0.0])
    ref = dbm_to_watt(cfg.thermal_dbm) + dbm_to_watt(cfg.primary_tx_power_dbm) * path_gain(100.0)
    assert effective_noise_power(cfg, pos) == pytest.approx(ref)
    # closer than the reference distance is clamped
    assert effective_noise_power(cfg, np.array([cfg.primary_distance_m, 1.0])) == pytest.approx(
        dbm_to_watt(cfg.thermal_dbm) + dbm_to_watt(cfg.primary_tx_power_dbm) * path_gain(cfg.reference_distance_m))


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 10.0))
@settings(max_examples=20, deadline=None)
def test_sample_ball_inside(seed, eps):
    d = sample_ball(np.random.default_rng(seed), eps, (4, 2), 200)
    assert d.shape == (200, 4, 2)
    assert np.all(np.linalg.norm(d.reshape(200, -1), axis=1) <= eps * (1 + 1e-12))


def test_sample_ball_uniform_radius():
    # P(||d|| <= r) = (r / eps)^dim for uniform draws; dim = 2 * 2 = 4 real dimensions
    d = sample_ball(np.random.default_rng(1), 1.0, (2,), 20000)
    r = np.linalg.norm(d, axis=1)
    assert np.mean(r <= 0.5 ** 0.25) == pytest.approx(0.5, abs=0.015)


def test_config_validation():
    for bad in (dict(K=0), dict(N_T=2), dict(J=-1), dict(trials=1.5), dict(reference_distance_m=600.0),
                dict(csi_error_normalized=-1.0), dict(R_eav=0.0), dict(seed=-2), dict(gamma_base_db="5")):
        with pytest.raises(ValueError):
            SimConfig(**bad)


def test_qos_from_config():
    q = qos_from_config(SimConfig())
    assert q.gamma_req[0] == pytest.approx((10 ** 0.5, 10 ** 0.8))
    assert q.gamma_req[1][0] == pytest.approx(10 ** 0.5) and q.gamma_req[1][1] is None
    assert q.gamma_tol == pytest.approx(1.0)
    assert q.P_I[0] == pytest.approx(dbm_to_watt(-110.35))
    # the single-layer baseline carries both layers' rate for every receiver
    assert baseline1_qos(q).gamma_req[1][0] == pytest.approx(29.4245, abs=1e-4)


def test_secrecy_floor_value():
    q = qos_from_config(SimConfig(gamma_base_db=5.0))
    assert secrecy_floor(q, 0) == pytest.approx(math.log2(1 + 10 ** 0.5) - 1.0)
    assert secrecy_floor(q, 0) == pytest.approx(1.057, abs=1e-3)


def test_realization_deterministic_and_common():
    cfg = SimConfig()
    a, _ = generate_realization(cfg, 4)
    b, _ = generate_realization(cfg, 4)
    assert all(np.array_equal(x, y) for x, y in zip(a.h, b.h))
    # sweeping K keeps the existing users
    c, _ = generate_realization(cfg.replace(K=4), 4)
    assert np.array_equal(c.h[1], a.h[1])
    # sweeping N_T keeps the leading antennas
    d, _ = generate_realization(cfg.replace(N_T=5), 4)
    assert np.array_equal(d.h[0], a.h[0][:5])
    assert np.array_equal(d.G_true[0], a.G_true[0][:5])


def test_realization_error_ball():
    cfg = SimConfig()
    for t in range(5):
        ch, _ = generate_realization(cfg, t)
        for G, Gh, e in zip(ch.G_true, ch.G_hat, ch.eps):
            assert e ** 2 == pytest.approx(cfg.csi_error_normalized * np.linalg.norm(G) ** 2)
            assert np.linalg.norm(G - Gh) <= e


def test_pu_rate_hand_case():
    # single antenna: log2(1 + |g|^2 w / (|g|^2 v + s2))
    G = np.array([[2.0]])
    r = pu_rate(np.array([[3.0]]), np.array([[0.5]]), G, 1.0)
    assert r == pytest.approx(math.log2(1 + 12.0 / 3.0))


def test_pu_rate_gradient():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    W, V = x @ x.conj().T, np.eye(3) * 0.3
    G = (rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))
    g = _pu_rate_grad(W, V, G, 1.0)
    D = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    h = 1e-6
    fd = (pu_rate(W, V, G + h * D, 1.0) - pu_rate(W, V, G - h * D, 1.0)) / (2 * h)
    # directional derivative of a real function of complex G: 2 Re <grad, D>
    assert fd == pytest.approx(2 * np.real(np.vdot(g, D)), rel=1e-5)


def test_worst_rate_dominates_samples():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((3, 1)) + 1j * rng.standard_normal((3, 1))
    W, V = x @ x.conj().T, 0.1 * np.eye(3)
    Gh = rng.standard_normal((3, 2)) + 0j
    smp = sample_ball(rng, 0.3, Gh.shape, 100)
    r = worst_pu_rate(W, V, Gh, 0.3, 1.0, smp)
    assert r >= np.max(pu_rate(W, V, Gh[None] + smp, 1.0))


def test_evaluate_robust_solution():
    for i in range(20):
        ch, q = small_instance(np.random.default_rng([1, i]), P_I=0.5, g_scale=1.0)
        s = solve_sdp(assemble_relaxed_problem(ch, q), PIPELINE_SOLVER)
        if s.optimal:
            break
    assert s.optimal
    sol = solution_from_sdp(s, ch, q)
    m = evaluate_solution(sol, ch, q, n_error_samples=300, rng=np.random.default_rng(1))
    assert m.solved
    assert not m.interference_violation and not m.worst_case_violation
    assert all(w >= t * (1 - 1e-9) for w, t in zip(m.interference_worst_w, m.interference_true_w))
    sinr = achieved_sinr(sol, ch)
    for (l, k), g in sinr.items():
        if q.gamma_req[k][l] is not None:
            assert g >= q.gamma_req[k][l] * (1 - 1e-6)


def test_evaluate_infeasible_placeholder():
    ch, q = small_instance(np.random.default_rng(0))
    z = np.zeros((4, 4))
    sol = BeamformingSolution(W={(0, 0): z, (1, 0): z, (0, 1): z, (1, 1): z}, V=z, omega=np.zeros(1),
                              delta=np.zeros((2, 1)), status="infeasible")
    m = evaluate_solution(sol, ch, q)
    assert m.status == "infeasible" and not m.solved


def test_run_trial_and_summary():
    res = [run_trial(TINY, t, ("optimal", "baseline2"), n_error_samples=50, n_tries=2) for t in range(2)]
    rows = summarize(res, ("optimal", "baseline2"), "none", None)
    assert [r["scheme"] for r in rows] == ["optimal", "baseline2"]
    for r in rows:
        assert set(CSV_COLUMNS) <= set(r)
        assert r["trials_total"] == 2


def test_summary_is_paired():
    def tm(scheme, p):
        return TrialMetrics(scheme=scheme, status="solved" if p else "infeasible", total_power_w=p or float("nan"))
    res = [{"a": tm("a", 1.0), "b": tm("b", 2.0)}, {"a": tm("a", 3.0), "b": tm("b", None)}]
    rows = summarize(res, ("a", "b"), "x", 1)
    # only the first trial is solved by both schemes
    assert rows[0]["trials_feasible"] == 1
    assert rows[0]["mean_power_dbm"] == pytest.approx(30.0)
    assert rows[1]["infeasible_rate"] == pytest.approx(0.5)


def test_campaign_deterministic_and_thread_independent():
    sweep = ("gamma_base_db", [0.0, 3.0])
    log1 = io.StringIO()
    r1, _ = run_campaign(TINY, ("optimal", "baseline1"), sweep, n_error_samples=20, n_tries=2, trial_log=log1)
    r2, _ = run_campaign(TINY, ("optimal", "baseline1"), sweep, n_error_samples=20, n_tries=2, threads=2)
    a, b = rows_to_csv(r1), rows_to_csv(r2)
    assert a.splitlines()[0] == "# schema=1"
    assert a.splitlines()[1].split(",")[:11] == list(CSV_COLUMNS[:11])
    assert len(a.splitlines()) == 2 + 2 * 2
    # identical apart from the wall-clock column
    assert _strip_time(a) == _strip_time(b)
    assert len(log1.getvalue().splitlines()) == 2 * 3 * 2


def _strip_time(csv_text):
    out = []
    for line in csv_text.splitlines():
        cells = line.split(",")
        if len(cells) == len(CSV_COLUMNS) and cells[0] != "sweep_param":
            cells[CSV_COLUMNS.index("mean_solve_ms")] = ""
        out.append(",".join(cells))
    return out


def test_unknown_sweep_parameter():
    with pytest.raises(ValueError):
        run_campaign(TINY, ("optimal",), ("nope", [1]))
