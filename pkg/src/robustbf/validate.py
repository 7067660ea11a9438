"""Property suite run by ``robustbf validate``.

Each property draws its own small instance from ``seed`` and returns a
:class:`PropertyResult`.  The suite is meant to pass for every seed; a
failing property points at a broken invariant, not at bad luck.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from robustbf import constraints as cons
from robustbf.constraints import (NetworkChannels, QosSpec, assemble_baseline1, assemble_baseline2,
                                  assemble_relaxed_problem, fold_targets, solution_from_sdp)
from robustbf.linalg import det_trace_gap, kron, psd_part, trust_region_quadratic_max, vectorize
from robustbf.recovery import DualBundle, construct_rank_one_solution, is_rank_one
from robustbf.sdp import LinearConstraint, SdpProblem, check_solution, solve_sdp
from robustbf.sim import PIPELINE_SOLVER, evaluate_solution, sample_ball, worst_pu_rate


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def small_instance(rng, nt=4, K=2, J=1, g_scale=0.5, eps_rel=0.1, P_I=5.0, gammas=((3.0, 6.0), (3.0, None)),
                   gamma_tol=1.0, R_eav=1.0):
    """Unit-noise instance with ``G_true`` inside the ball; used by tests and the suite."""
    h = [cn(rng, nt) for _ in range(K)]
    G_true = [g_scale * cn(rng, nt, 2) for _ in range(J)]
    eps = [eps_rel * float(np.linalg.norm(G)) for G in G_true]
    G_hat = [G - sample_ball(rng, e, G.shape) for G, e in zip(G_true, eps)]
    ch = NetworkChannels(h=h, G_hat=G_hat, eps=eps, sigma_s_sq=[1.0] * K, sigma_pu_sq=[1.0] * J, G_true=G_true)
    q = QosSpec(tuple(gammas[:K]), gamma_tol, [P_I] * J, R_eav)
    return ch, q


def _solve_relaxed(ch, q):
    p = assemble_relaxed_problem(ch, q)
    s = solve_sdp(p, PIPELINE_SOLVER)
    return p, s


def prop_kron_trace(seed):
    rng = np.random.default_rng([seed, 1])
    worst = 0.0
    for _ in range(20):
        G = cn(rng, 3, 2)
        M = cn(rng, 3, 3)
        M = M + M.conj().T
        lhs = np.vdot(vectorize(G), kron(np.eye(2), M) @ vectorize(G))
        rhs = np.trace(G.conj().T @ M @ G)
        worst = max(worst, abs(lhs - rhs) / (1 + abs(rhs)))
    return worst <= 1e-12, f"max relative error {worst:.1e}"


def prop_det_trace(seed):
    rng = np.random.default_rng([seed, 2])
    bad = 0
    for i in range(2000):
        n = int(rng.integers(2, 6))
        r = int(rng.integers(1, n + 1))
        X = cn(rng, n, r)
        A = X @ X.conj().T
        gap = det_trace_gap(A)
        if gap < -1e-9 * (1 + np.trace(A).real) or (r == 1 and abs(gap) > 1e-9 * (1 + np.trace(A).real ** 2)):
            bad += 1
    return bad == 0, f"{bad} counterexamples in 2000 draws"


def prop_solver_eigen(seed):
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    for _ in range(5):
        n = int(rng.integers(3, 8))
        C = cn(rng, n, n)
        C = C + C.conj().T
        p = SdpProblem()
        p.add_block("X", n)
        p.objective = {"X": C}
        p.add(LinearConstraint("trace", {"X": np.eye(n)}, "==", 1.0))
        s = solve_sdp(p)
        if not s.optimal:
            return False, f"status {s.status}"
        worst = max(worst, abs(s.objective_value - np.linalg.eigvalsh(C)[0]))
    return worst <= 1e-6, f"max error {worst:.1e}"


def prop_mrt(seed):
    rng = np.random.default_rng([seed, 4])
    h = cn(rng, 4)
    ch = NetworkChannels(h=[h], G_hat=[], eps=[], sigma_s_sq=[0.7], sigma_pu_sq=[])
    q = QosSpec(((2.5,),), 1.0, [], 1.0)
    s = solve_sdp(assemble_relaxed_problem(ch, q))
    ref = 2.5 * 0.7 / np.vdot(h, h).real
    err = abs(s.objective_value - ref) / ref if s.optimal else np.inf
    return err <= 1e-6, f"relative error {err:.1e} ({s.status})"


def _feasible_instance(seed, tag, **kw):
    for i in range(50):
        rng = np.random.default_rng([seed, tag, i])
        ch, q = small_instance(rng, **kw)
        p, s = _solve_relaxed(ch, q)
        if s.optimal:
            return ch, q, p, s
    raise RuntimeError("no feasible instance found")


def prop_c3_soundness(seed):
    # tight interference cap: the constraint binds on this family
    ch, q, p, s = _feasible_instance(seed, 5, P_I=1.0, g_scale=0.7)
    sol = construct_rank_one_solution(solution_from_sdp(s, ch, q), None, ch, q)
    X = psd_part(sum(sol.W.values()) + sol.V)
    ratio = max(trust_region_quadratic_max(kron(np.eye(ch.N_PR), X), vectorize(ch.G_hat[j]), ch.eps[j]) / q.P_I[j]
                for j in range(ch.J))
    return ratio <= 1 + 1e-6, f"worst-case interference / P_I = {ratio:.8f}"


def prop_c4_soundness(seed):
    # strong eavesdropping channels and a loose interference cap, so that
    # the eavesdropping constraint is the active one
    ch, q, p, s = _feasible_instance(seed, 6, K=1, gammas=((10.0,),), g_scale=1.5, eps_rel=0.2, P_I=1e3)
    sol = construct_rank_one_solution(solution_from_sdp(s, ch, q), None, ch, q)
    rng = np.random.default_rng([seed, 6, 99])
    worst = 0.0
    for j in range(ch.J):
        smp = sample_ball(rng, ch.eps[j], ch.G_hat[j].shape, 1000)
        worst = max(worst, worst_pu_rate(sol.W[0, 0], sol.V, ch.G_hat[j], ch.eps[j], ch.sigma_pu_sq[j], smp))
    limit = float(np.max(q.R_eav)) + 1e-4
    return worst <= limit, f"worst sampled eavesdropper rate {worst:.6f} (limit {limit:.4f})"


def prop_rank_one_construction(seed):
    for i in range(60):
        rng = np.random.default_rng([seed, 7, i])
        ch, q = small_instance(rng)
        p, s = _solve_relaxed(ch, q)
        if not s.optimal:
            continue
        rel = solution_from_sdp(s, ch, q)
        floor = 1e-9 * rel.total_power
        if all(is_rank_one(w, floor=floor) for w in rel.W.values()):
            continue
        out = construct_rank_one_solution(rel, DualBundle.from_solution(s, ch, q), ch, q)
        dp = abs(out.total_power - rel.total_power) / rel.total_power
        viol = check_solution(p, None, out.variables()).max_violation
        ok = all(is_rank_one(w, floor=floor) for w in out.W.values()) and dp <= 1e-6 and viol <= 1e-6
        return ok, f"power change {dp:.1e}, max violation {viol:.1e}"
    return False, "no rank > 1 instance found"


def prop_ordering(seed):
    ch, q, p, s = _feasible_instance(seed, 8)
    s1 = solve_sdp(assemble_baseline1(ch, q), PIPELINE_SOLVER)
    s2 = solve_sdp(assemble_baseline2(ch, q), PIPELINE_SOLVER)
    if not (s1.optimal and s2.optimal):
        return False, f"baseline status {s1.status}/{s2.status}"
    tol = 1e-6 * s.objective_value
    ok = s2.objective_value <= s.objective_value + tol and s.objective_value <= s1.objective_value + tol
    return ok, f"baseline2 {s2.objective_value:.6g} <= optimal {s.objective_value:.6g} <= baseline1 {s1.objective_value:.6g}"


def prop_fold(seed):
    v = fold_targets([10 ** 0.5, 10 ** 0.8])
    return abs(v - 29.4245) < 1e-3, f"fold(5 dB, 8 dB) = {v:.4f}"


def prop_secrecy_floor(seed):
    ch, q, p, s = _feasible_instance(seed, 9)
    sol = construct_rank_one_solution(solution_from_sdp(s, ch, q), None, ch, q)
    m = evaluate_solution(sol, ch, q, n_error_samples=500, rng=np.random.default_rng([seed, 9, 1]))
    gaps = [r - f for r, f in zip(m.secrecy_rate_l1, m.secrecy_floor)]
    return min(gaps) >= -1e-4 and not m.interference_violation, \
        f"min(secrecy - floor) = {min(gaps):.5f} bit/s/Hz"


def prop_determinism(seed):
    ch, q, p, s = _feasible_instance(seed, 10)
    s2 = solve_sdp(assemble_relaxed_problem(ch, q), PIPELINE_SOLVER)
    same = s.iterations == s2.iterations and np.array_equal(s.x, s2.x)
    return same, f"{s.iterations} iterations, identical={same}"


PROPERTIES = [
    ("linalg.kron_trace_identity", prop_kron_trace),
    ("linalg.det_trace_inequality", prop_det_trace),
    ("sdp.eigenvalue_oracle", prop_solver_eigen),
    ("sdp.deterministic", prop_determinism),
    ("constraints.mrt_oracle", prop_mrt),
    ("constraints.fold_targets", prop_fold),
    ("constraints.c3bar_soundness", prop_c3_soundness),
    ("constraints.c4bar_soundness", prop_c4_soundness),
    ("constraints.baseline_ordering", prop_ordering),
    ("recovery.rank_one_construction", prop_rank_one_construction),
    ("sim.secrecy_floor", prop_secrecy_floor),
]


def run_properties(seed=0, inject_sign_flip=False, names=None):
    """Run the suite; returns a list of :class:`PropertyResult`."""
    out = []
    if inject_sign_flip:
        cons.FAULTS.add("c4-sign-flip")
    try:
        for name, fn in PROPERTIES:
            if names is not None and name not in names:
                continue
            t0 = time.perf_counter()
            try:
                ok, detail = fn(seed)
            except Exception as exc:  # a crash is a failure of that property
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            out.append(PropertyResult(name, bool(ok), detail, time.perf_counter() - t0))
    finally:
        cons.FAULTS.discard("c4-sign-flip")
    return out
