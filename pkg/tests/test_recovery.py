import numpy as np
import pytest

from robustbf.constraints import BeamformingSolution, assemble_relaxed_problem, solution_from_sdp
from robustbf.recovery import (DualBundle, _random_direction, compute_A_matrix, construct_rank_one_solution,
                               is_rank_one, numerical_rank, scheme1_eigenvector, scheme2_randomization)
from robustbf.sdp import check_solution, solve_sdp
from robustbf.sim import PIPELINE_SOLVER
from robustbf.validate import small_instance


def _rank_gt_one_instances(n, start=0):
    """Relaxations of the synthetic family whose solution has some rank > 1 matrix."""
    out = []
    i = start
    while len(out) < n:
        ch, q = small_instance(np.random.default_rng([0, 7, i]))
        i += 1
        p = assemble_relaxed_problem(ch, q)
        s = solve_sdp(p, PIPELINE_SOLVER)
        if not s.optimal:
            continue
        rel = solution_from_sdp(s, ch, q)
        floor = 1e-9 * rel.total_power
        if not all(is_rank_one(w, floor=floor) for w in rel.W.values()):
            out.append((ch, q, p, s, rel))
    return out


@pytest.fixture(scope="module")
def rank_gt_one():
    return _rank_gt_one_instances(4)


def test_is_rank_one():
    u = np.array([1.0, 1j, 0.5])
    assert is_rank_one(np.outer(u, u.conj()))
    assert not is_rank_one(np.diag([1.0, 1e-3, 0.0]))
    assert is_rank_one(np.diag([1.0, 1e-7, 0.0]))
    assert is_rank_one(np.diag([1e-15, 1e-15]), floor=1e-12)
    assert numerical_rank(np.diag([1.0, 0.5, 0.0])) == 2


def test_construction_properties(rank_gt_one):
    for ch, q, p, s, rel in rank_gt_one:
        out = construct_rank_one_solution(rel, DualBundle.from_solution(s, ch, q), ch, q)
        floor = 1e-9 * rel.total_power
        assert all(is_rank_one(w, floor=floor) for w in out.W.values())
        assert out.total_power == pytest.approx(rel.total_power, rel=1e-6)
        assert check_solution(p, None, out.variables()).max_violation <= 1e-6
        # useful signal of every layer is untouched
        for (l, k), w in out.W.items():
            h = ch.h[k]
            assert np.vdot(h, w @ h).real == pytest.approx(np.vdot(h, rel.W[l, k] @ h).real, rel=1e-9, abs=1e-30)


def test_construction_is_idempotent(rank_gt_one):
    ch, q, p, s, rel = rank_gt_one[0]
    once = construct_rank_one_solution(rel, None, ch, q)
    twice = construct_rank_one_solution(once, None, ch, q)
    for key in once.W:
        assert np.array_equal(once.W[key], twice.W[key])
    assert np.array_equal(once.V, twice.V)


def test_dual_cross_checks(rank_gt_one):
    for ch, q, p, s, rel in rank_gt_one:
        out = construct_rank_one_solution(rel, DualBundle.from_solution(s, ch, q), ch, q)
        checks = out.info["dual_checks"]
        assert checks
        for c in checks.values():
            # the removed part lives where A = Y + c H vanishes, and H_k cannot see it
            assert c["W_on_null"] >= 0.999 or c["null_dim"] == 0
            assert c["H_annihilates_null"] <= 1e-4


def test_A_matrix_is_psd_at_optimum(rank_gt_one):
    ch, q, p, s, rel = rank_gt_one[0]
    duals = DualBundle.from_solution(s, ch, q)
    for (l, k) in rel.W:
        A, c = compute_A_matrix(l, k, duals, ch, q)
        lam = np.linalg.eigvalsh(A)
        assert lam[0] >= -1e-6 * max(1.0, abs(lam[-1]))


def test_rank_one_input_untouched():
    ch, q = small_instance(np.random.default_rng(0), P_I=50.0)
    u = ch.h[0] / np.linalg.norm(ch.h[0])
    W = {(0, 0): np.outer(u, u.conj()), (1, 0): 2 * np.outer(u, u.conj()), (0, 1): np.zeros((4, 4)),
         (1, 1): np.zeros((4, 4))}
    sol = BeamformingSolution(W=W, V=np.eye(4), omega=np.zeros(1), delta=np.zeros((2, 1)))
    out = construct_rank_one_solution(sol, None, ch, q)
    assert all(np.array_equal(out.W[k], W[k]) for k in W)
    assert np.array_equal(out.V, sol.V)


def test_orthogonal_part_becomes_noise():
    # W = a a^H + b b^H with b orthogonal to h: b b^H must move into V
    ch, q = small_instance(np.random.default_rng(1))
    h = ch.h[0]
    a = h / np.linalg.norm(h)
    b = np.linalg.svd(h[None, :].conj())[2][1].conj()
    assert abs(np.vdot(h, b)) < 1e-12
    z = np.zeros((4, 4), complex)
    W = {(0, 0): np.outer(a, a.conj()) + np.outer(b, b.conj()), (1, 0): z, (0, 1): z, (1, 1): z}
    out = construct_rank_one_solution(BeamformingSolution(W=W, V=z, omega=np.zeros(1), delta=np.zeros((2, 1))),
                                      None, ch, q)
    assert np.allclose(out.W[0, 0], np.outer(a, a.conj()), atol=1e-12)
    assert np.allclose(out.V, np.outer(b, b.conj()), atol=1e-12)


def test_random_direction_covariance():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    W = x @ x.conj().T
    # draws stay in range(W) and, averaged, span all of it
    acc = np.zeros((3, 3), complex)
    lam, U = np.linalg.eigh(W)
    null = U[:, 0]
    for i in range(2000):
        d = _random_direction(W, rng)
        assert abs(np.vdot(null, d @ null)) < 1e-10
        assert np.trace(d).real == pytest.approx(1.0)
        acc += d
    assert numerical_rank(acc / 2000, 1e-6) == 2


def test_schemes_feasible_and_above_optimal(rank_gt_one):
    ch, q, p, s, rel = rank_gt_one[0]
    for sol in (scheme1_eigenvector(rel, ch, q, PIPELINE_SOLVER),
                scheme2_randomization(rel, ch, q, n_tries=5, seed=3, solver_cfg=PIPELINE_SOLVER)):
        if sol.status != "optimal":
            continue
        assert sol.total_power >= rel.total_power * (1 - 1e-6)
        assert all(is_rank_one(w) for w in sol.W.values())
        assert check_solution(p, None, sol.variables()).max_violation <= 1e-6


def test_scheme2_nesting_and_determinism(rank_gt_one):
    ch, q, p, s, rel = rank_gt_one[1]
    a = scheme2_randomization(rel, ch, q, n_tries=3, seed=5, solver_cfg=PIPELINE_SOLVER)
    b = scheme2_randomization(rel, ch, q, n_tries=6, seed=5, solver_cfg=PIPELINE_SOLVER)
    c = scheme2_randomization(rel, ch, q, n_tries=6, seed=5, solver_cfg=PIPELINE_SOLVER)
    assert b.info["tries_evaluated"] == 6
    if a.status == "optimal":
        assert b.total_power <= a.total_power
    assert b.total_power == c.total_power and b.info["best_try"] == c.info["best_try"]


def test_scheme2_collapses_on_rank_one():
    for i in range(20):
        ch, q = small_instance(np.random.default_rng([4, i]), P_I=50.0)
        s = solve_sdp(assemble_relaxed_problem(ch, q), PIPELINE_SOLVER)
        if not s.optimal:
            continue
        rel = solution_from_sdp(s, ch, q)
        if all(is_rank_one(w, floor=1e-9 * rel.total_power) for w in rel.W.values()):
            out = scheme2_randomization(rel, ch, q, n_tries=50, solver_cfg=PIPELINE_SOLVER)
            one = scheme1_eigenvector(rel, ch, q, PIPELINE_SOLVER)
            assert out.info["tries_evaluated"] == 1
            assert out.total_power == pytest.approx(one.total_power, rel=1e-12)
            return
    pytest.fail("no rank-one relaxation found")


def test_scheme2_rejects_zero_tries(rank_gt_one):
    ch, q, p, s, rel = rank_gt_one[0]
    with pytest.raises(ValueError):
        scheme2_randomization(rel, ch, q, n_tries=0)
