"""Rank-one beamforming from the relaxed SDP.

:func:`construct_rank_one_solution` turns any optimal point of the relaxed
problem into an equally optimal point whose beamforming matrices are rank
one.  For a pair with ``rank(W) > 1`` the matrix is split as

    W = W h h^H W / (h^H W h)  +  Q,        Q h = 0,  Q >= 0,

the rank-one part is kept as beamformer and ``Q`` is moved into the
artificial-noise covariance.  Power is unchanged, the useful signal
``h^H W h`` is unchanged and ``Q`` is invisible to receiver ``k``; every
other constraint only gains slack.  When the dual multipliers are supplied,
the split is cross-checked against the null space of
``A = Y + c H_k`` (``Q`` must live in that null space and ``H_k`` must
annihilate it).

:func:`scheme1_eigenvector` and :func:`scheme2_randomization` fix beam
directions (principal eigenvector, Gaussian randomization) and re-optimize
the powers.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from robustbf.constraints import (RANK_ONE_RATIO, BeamformingSolution, NetworkChannels, QosSpec,
                                  assemble_power_scaling_problem, empty_solution, solution_from_sdp)
from robustbf.linalg import hermitian_part, null_space_basis
from robustbf.linalg import numerical_rank as _numerical_rank
from robustbf.sdp import SolverConfig, solve_sdp

log = logging.getLogger(__name__)

CLASSIFY_TOL = 1e-6


class RecoveryError(RuntimeError):
    pass


def numerical_rank(W, tol=1e-7, floor=0.0):
    """Count of eigenvalues of ``W`` above ``max(tol * lambda_max, floor)``."""
    return _numerical_rank(W, tol, floor)


def is_rank_one(W, ratio=RANK_ONE_RATIO, floor=0.0):
    lam = np.linalg.eigvalsh(hermitian_part(W))
    if lam[-1] <= floor:
        return True
    return bool(lam.size < 2 or lam[-2] <= ratio * lam[-1])


@dataclass
class DualBundle:
    """Multipliers of the relaxed problem (as returned by the solver).

    They belong to the normalized problem in which channels are divided by
    ``sqrt(scale)``; :func:`compute_A_matrix` accounts for that.
    """

    Y: dict
    gamma: dict
    psi: dict
    D_c3: dict
    D_c4: dict
    scale: float = 1.0

    @classmethod
    def from_solution(cls, sol, ch: NetworkChannels, q: QosSpec):
        Y, gamma, psi, d3, d4 = {}, {}, {}, {}, {}
        for k in range(ch.K):
            for l in range(q.L[k]):
                Y[l, k] = sol.dual[f"W[{l},{k}]"]
                gamma[l, k] = sol.dual.get(f"C1[{l},{k}]", 0.0)
            for t in range(ch.K):
                if t != k:
                    psi[t, k] = sol.dual.get(f"C2[{t},{k}]", 0.0)
        for j in range(ch.J):
            d3[j] = sol.dual.get(f"C3[{j}]")
            for k in range(ch.K):
                d4[k, j] = sol.dual.get(f"C4[{k},{j}]")
        return cls(Y, gamma, psi, d3, d4, scale=ch.noise_ref)


def compute_A_matrix(l, k, duals: DualBundle, ch: NetworkChannels, q: QosSpec):
    """``A = Y + c H_k`` with ``c = gamma_{l,k} - sum_{t<l} gamma_{t,k} Gamma_{t,k}``."""
    c = duals.gamma.get((l, k), 0.0)
    for t in range(l):
        g = q.gamma_req[k][t]
        if g is not None:
            c -= duals.gamma.get((t, k), 0.0) * g
    H = ch.H(k) / duals.scale
    return hermitian_part(duals.Y[l, k] + c * H), c


def _dual_checks(l, k, W_old, W_new, duals, ch, q, floor):
    A, c = compute_A_matrix(l, k, duals, ch, q)
    lam_max = float(np.max(np.abs(np.linalg.eigvalsh(A))))
    ups = null_space_basis(A, CLASSIFY_TOL)
    # spectral classification of the eigenvectors of W*: all but one should
    # lie in null(A)
    lam, vec = np.linalg.eigh(W_old)
    keep = lam > max(floor, 1e-7 * lam[-1])
    off_null = int(np.sum(np.linalg.norm(A @ vec[:, keep], axis=0) > CLASSIFY_TOL * (1.0 + lam_max)))
    H = ch.H(k)
    hn = np.linalg.norm(H, 2)
    wn = max(np.linalg.norm(W_new, 2), 1e-300)
    out = {
        "c": float(c),
        "c_nonzero": bool(abs(c) * hn / duals.scale > CLASSIFY_TOL * (1.0 + lam_max)),
        "null_dim": int(ups.shape[1]),
        "eigvecs_off_null": off_null,
        "H_annihilates_null": float(np.linalg.norm(H @ ups) / hn) if ups.shape[1] else 0.0,
        "W_on_null": float(np.linalg.norm(ups.conj().T @ W_new @ ups) / wn) if ups.shape[1] else 0.0,
    }
    return out


def construct_rank_one_solution(primal: BeamformingSolution, duals: DualBundle | None,
                                ch: NetworkChannels, q: QosSpec, floor_rel=1e-9) -> BeamformingSolution:
    """Equal-power solution of the relaxed problem with rank-one ``W``.

    Pairs are processed in ascending ``(k, l)`` order; pairs that are already
    rank one (``lambda_2 <= 1e-6 lambda_1``) or negligible (below
    ``floor_rel`` times the total power) are left untouched, which makes the
    map idempotent.
    """
    floor = floor_rel * max(primal.total_power, 0.0)
    W = {key: w.copy() for key, w in primal.W.items()}
    V = primal.V.copy()
    checks = {}
    for k in range(ch.K):
        for l in range(q.L[k]):
            w = hermitian_part(W[l, k])
            if is_rank_one(w, floor=floor):
                continue
            h = ch.h[k]
            wh = w @ h
            s = float(np.real(np.vdot(h, wh)))
            lam_max = float(np.linalg.eigvalsh(w)[-1])
            if s <= 1e-14 * lam_max * float(np.vdot(h, h).real):
                # no useful signal: the whole matrix becomes artificial noise
                w_new = np.zeros_like(w)
            else:
                w_new = np.outer(wh, wh.conj()) / s
            Qm = hermitian_part(w - w_new)
            W[l, k] = w_new
            V = hermitian_part(V + Qm)
            if duals is not None:
                checks[l, k] = _dual_checks(l, k, w, Qm, duals, ch, q, floor)
    out = BeamformingSolution(W=W, V=V, omega=np.array(primal.omega, copy=True),
                              delta=np.array(primal.delta, copy=True), status=primal.status,
                              scheme=primal.scheme, info=dict(primal.info))
    out.info["rank_one_pairs_constructed"] = sorted(checks) if duals is not None else None
    out.info["dual_checks"] = {f"{l},{k}": v for (l, k), v in checks.items()}
    bad = [key for key, w in W.items() if not is_rank_one(w, floor=floor)]
    if bad:
        raise RecoveryError(f"construction left rank > 1 at {bad}")
    return out


def _principal_direction(W):
    lam, vec = np.linalg.eigh(hermitian_part(W))
    u = vec[:, -1]
    return np.outer(u, u.conj())


def _power_scaling(directions, ch, q, scheme, solver_cfg=None, robust=True):
    p = assemble_power_scaling_problem(directions, ch, q, robust=robust)
    sol = solve_sdp(p, solver_cfg)
    if not sol.optimal:
        out = empty_solution(ch, q, sol.status, scheme)
        out.info["solve_time_ms"] = sol.solve_time_ms
        return out
    return solution_from_sdp(sol, ch, q, scheme=scheme, directions=directions)


def scheme1_eigenvector(relaxed: BeamformingSolution, ch: NetworkChannels, q: QosSpec,
                        solver_cfg: SolverConfig | None = None, robust=True) -> BeamformingSolution:
    """Principal-eigenvector directions with re-optimized powers."""
    dirs = {key: _principal_direction(w) for key, w in relaxed.W.items()}
    return _power_scaling(dirs, ch, q, "scheme1", solver_cfg, robust)


def _random_direction(W, rng):
    lam, U = np.linalg.eigh(hermitian_part(W))
    lam = np.clip(lam, 0.0, None)
    n = lam.size
    qv = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    w = U @ (np.sqrt(lam) * qv)
    nw = np.linalg.norm(w)
    if nw == 0.0:
        w = U[:, -1]
        nw = 1.0
    w = w / nw
    return np.outer(w, w.conj())


def scheme2_randomization(relaxed: BeamformingSolution, ch: NetworkChannels, q: QosSpec, n_tries=50, seed=0,
                          solver_cfg: SolverConfig | None = None, robust=True,
                          floor_rel=1e-9) -> BeamformingSolution:
    """Gaussian randomization: ``w = U Theta^{1/2} q``, ``q ~ CN(0, I)``.

    Try ``i`` draws from ``default_rng([seed, i])`` so candidate sets nest
    across ``n_tries``.  The best feasible candidate wins (lowest index on
    ties).  When every relaxed matrix is already rank one all candidates
    share the principal directions, so a single try is evaluated.
    """
    if n_tries < 1:
        raise ValueError("n_tries must be >= 1")
    floor = floor_rel * max(relaxed.total_power, 0.0)
    collapsed = all(is_rank_one(w, floor=floor) for w in relaxed.W.values())
    tries = 1 if collapsed else n_tries
    best, best_i = None, -1
    for i in range(tries):
        rng = np.random.default_rng([seed, i])
        dirs = {}
        for key in sorted(relaxed.W, key=lambda t: (t[1], t[0])):
            w = relaxed.W[key]
            if collapsed or is_rank_one(w, floor=floor):
                dirs[key] = _principal_direction(w)
            else:
                dirs[key] = _random_direction(w, rng)
        cand = _power_scaling(dirs, ch, q, "scheme2", solver_cfg, robust)
        if cand.status != "optimal":
            continue
        if best is None or cand.total_power < best.total_power:
            best, best_i = cand, i
    if best is None:
        best = empty_solution(ch, q, "infeasible", "scheme2")
    best.info["tries_evaluated"] = tries
    best.info["best_try"] = best_i
    return best


__all__ = ["DualBundle", "RecoveryError", "numerical_rank", "is_rank_one", "compute_A_matrix",
           "construct_rank_one_solution", "scheme1_eigenvector", "scheme2_randomization"]
