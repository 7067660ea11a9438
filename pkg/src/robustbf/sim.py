"""Monte-Carlo simulation of the secondary network.

Geometry: the secondary transmitter sits at the origin, the primary
transmitter ``primary_distance_m`` away on the x axis.  Receivers are placed
at a distance drawn uniformly from ``[reference_distance_m, cell_radius_m]``
with a uniform bearing.  Large-scale fading follows the UMi NLOS law
``PL = 22.7 + 36.7 log10(d) + 26 log10(f_GHz)`` dB, small-scale fading is
Rayleigh.

Every receiver draws from its own stream ``default_rng([seed, trial, kind,
index])`` so that sweeping ``K``, ``J`` or ``Gamma_Base`` reuses the same
users (common random numbers across sweep points).
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from robustbf.constraints import (BeamformingSolution, NetworkChannels, QosSpec, assemble_baseline1,
                                  assemble_baseline2, assemble_relaxed_problem, baseline1_qos, db_to_linear,
                                  dbm_to_watt, empty_solution, solution_from_sdp, watt_to_dbm)
from robustbf.linalg import psd_part, trust_region_quadratic_max
from robustbf.recovery import (DualBundle, construct_rank_one_solution, is_rank_one, scheme1_eigenvector,
                               scheme2_randomization)
from robustbf.sdp import SolverConfig, solve_sdp

log = logging.getLogger(__name__)

SCHEMES = ("optimal", "scheme1", "scheme2", "baseline1", "baseline2")
ROBUST_SCHEMES = ("optimal", "scheme1", "scheme2", "baseline1")
CSV_COLUMNS = ("sweep_param", "sweep_value", "scheme", "trials_feasible", "mean_power_dbm",
               "mean_secrecy_l1_bps_hz", "mean_pu_interference_dbm", "secrecy_violation_rate",
               "interference_violation_rate", "rank_one_rate", "mean_solve_ms", "trials_total",
               "infeasible_rate", "power_ci95_low_dbm", "power_ci95_high_dbm")
INTERFERENCE_RTOL = 1e-6
SECRECY_ATOL = 1e-4
# interior-point endgames of the non-robust baseline occasionally stall just
# above a relative gap of 1e-8; 1e-7 is far below the metric tolerances
PIPELINE_SOLVER = SolverConfig(gap_tol=1e-7)

_SU, _PU, _ERR, _EVAL = 0, 1, 2, 3


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters; defaults follow the reference setup."""

    K: int = 2
    J: int = 2
    N_T: int = 8
    N_PR: int = 2
    N_PT: int = 8
    L: int = 2
    gamma_base_db: float = 5.0
    gamma_step_db: float = 3.0
    gamma_tol_db: float = 0.0
    R_eav: float = 1.0
    P_I_dbm: float = -110.35
    thermal_dbm: float = -107.35
    primary_tx_power_dbm: float = 5.0
    primary_distance_m: float = 500.0
    cell_radius_m: float = 500.0
    reference_distance_m: float = 30.0
    carrier_ghz: float = 2.6
    csi_error_normalized: float = 0.05
    trials: int = 200
    seed: int = 0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)) \
                    or not math.isfinite(v):
                raise ValueError(f"{f.name} must be a finite number")
            if f.type in (float, "float"):
                object.__setattr__(self, f.name, float(v))
        for name in ("K", "N_T", "N_PR", "N_PT", "L", "trials"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer")
            object.__setattr__(self, name, int(v))
        if int(self.J) != self.J or self.J < 0:
            raise ValueError("J must be a nonnegative integer")
        object.__setattr__(self, "J", int(self.J))
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        object.__setattr__(self, "seed", int(self.seed))
        if self.N_T <= self.N_PR:
            raise ValueError("N_T must exceed N_PR")
        if not 0 < self.reference_distance_m < self.cell_radius_m:
            raise ValueError("need 0 < reference_distance_m < cell_radius_m")
        if self.csi_error_normalized < 0:
            raise ValueError("csi_error_normalized must be nonnegative")
        if self.R_eav <= 0:
            raise ValueError("R_eav must be positive")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


def path_loss_db(d, carrier_ghz=2.6):
    """UMi NLOS path loss in dB at distance ``d`` metres."""
    return 22.7 + 36.7 * np.log10(d) + 26.0 * np.log10(carrier_ghz)


def path_gain(d, carrier_ghz=2.6):
    return 10.0 ** (-path_loss_db(d, carrier_ghz) / 10.0)


def _cn(rng, *shape):
    # real and imaginary parts interleaved, so the leading rows of a draw do
    # not depend on the number of rows (antenna sweeps share channels)
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def _place(rng, cfg):
    d = rng.uniform(cfg.reference_distance_m, cfg.cell_radius_m)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    return d, np.array([d * np.cos(phi), d * np.sin(phi)])


def effective_noise_power(cfg: SimConfig, su_position, primary_tx_gain=None):
    """Thermal noise plus the average power received from the primary transmitter.

    With Rayleigh fading ``E|t^H d|^2 = gain * P_PT`` whatever the primary
    precoder, so only the path gain between the two nodes matters.  If
    ``primary_tx_gain`` is not given it is computed from ``su_position``.
    """
    if primary_tx_gain is None:
        pt = np.array([cfg.primary_distance_m, 0.0])
        d = max(float(np.linalg.norm(np.asarray(su_position, float) - pt)), cfg.reference_distance_m)
        primary_tx_gain = path_gain(d, cfg.carrier_ghz)
    return dbm_to_watt(cfg.thermal_dbm) + dbm_to_watt(cfg.primary_tx_power_dbm) * primary_tx_gain


def sample_ball(rng, eps, shape, n=None):
    """Uniform samples from the Frobenius ball of radius ``eps``."""
    size = (n,) + tuple(shape) if n is not None else tuple(shape)
    z = _cn(rng, *size)
    dim = 2 * int(np.prod(shape))
    axes = tuple(range(-len(shape), 0))
    nrm = np.sqrt(np.sum(np.abs(z) ** 2, axis=axes, keepdims=True))
    r = eps * rng.uniform(size=nrm.shape) ** (1.0 / dim)
    return z / nrm * r


def qos_from_config(cfg: SimConfig) -> QosSpec:
    """Premium receiver 0 gets targets on all layers, the others on layer 1 only.

    Every receiver's video has ``L`` layers at the same nominal targets, which
    the single-layer baseline folds into one.
    """
    full = tuple(db_to_linear(cfg.gamma_base_db + l * cfg.gamma_step_db) for l in range(cfg.L))
    rows = [full] + [full[:1] + (None,) * (cfg.L - 1)] * (cfg.K - 1)
    return QosSpec(tuple(rows), db_to_linear(cfg.gamma_tol_db), (dbm_to_watt(cfg.P_I_dbm),) * cfg.J, cfg.R_eav,
                   layer_targets=(full,) * cfg.K)


def generate_realization(cfg: SimConfig, trial_index: int):
    """Channels and targets of trial ``trial_index``; deterministic in ``(seed, trial_index)``."""
    h, sig = [], []
    for k in range(cfg.K):
        rng = np.random.default_rng([cfg.seed, trial_index, _SU, k])
        d, pos = _place(rng, cfg)
        h.append(np.sqrt(path_gain(d, cfg.carrier_ghz)) * _cn(rng, cfg.N_T))
        sig.append(effective_noise_power(cfg, pos))
    G_true, G_hat, eps = [], [], []
    for j in range(cfg.J):
        rng = np.random.default_rng([cfg.seed, trial_index, _PU, j])
        d, _ = _place(rng, cfg)
        G = np.sqrt(path_gain(d, cfg.carrier_ghz)) * _cn(rng, cfg.N_T, cfg.N_PR)
        e = math.sqrt(cfg.csi_error_normalized) * float(np.linalg.norm(G))
        dG = sample_ball(np.random.default_rng([cfg.seed, trial_index, _ERR, j]), e, G.shape)
        G_true.append(G)
        G_hat.append(G - dG)
        eps.append(e)
    thermal = dbm_to_watt(cfg.thermal_dbm)
    ch = NetworkChannels(h=h, G_hat=G_hat, eps=eps, sigma_s_sq=sig, sigma_pu_sq=[thermal] * cfg.J,
                         G_true=G_true, n_pr=cfg.N_PR)
    return ch, qos_from_config(cfg)


# ---------------------------------------------------------------- evaluation


@dataclass
class TrialMetrics:
    scheme: str
    status: str
    total_power_dbm: float = float("nan")
    total_power_w: float = float("nan")
    sinr: dict = field(default_factory=dict)
    secrecy_rate_l1: list = field(default_factory=list)
    secrecy_floor: list = field(default_factory=list)
    eav_rate_su: list = field(default_factory=list)
    eav_rate_pu: list = field(default_factory=list)
    interference_true_w: list = field(default_factory=list)
    interference_sampled_max_w: list = field(default_factory=list)
    interference_worst_w: list = field(default_factory=list)
    interference_dbm: list = field(default_factory=list)
    secrecy_violation: bool = False
    interference_violation: bool = False
    worst_case_violation: bool = False
    rank_one_at_relaxation: bool | None = None
    # largest ||H_k u|| / ||H_k|| over the removed directions (rank-one construction), if any
    dual_check_residual: float | None = None
    solve_time_ms: float = 0.0

    @property
    def solved(self):
        return self.status == "solved"

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["sinr"] = {f"{l},{k}": v for (l, k), v in self.sinr.items()}
        return d


def _status(s):
    if s == "optimal":
        return "solved"
    if s == "infeasible":
        return "infeasible"
    return "failed"


def _quad(h, X):
    return float(np.real(np.vdot(h, X @ h)))


def achieved_sinr(sol: BeamformingSolution, ch: NetworkChannels):
    """Per-layer SINR with successive decoding of the lower layers."""
    out = {}
    for k in range(ch.K):
        h = ch.h[k]
        p = {key: _quad(h, w) for key, w in sol.W.items()}
        base = _quad(h, sol.V) + ch.sigma_s_sq[k]
        for (l, kk) in sol.W:
            if kk != k:
                continue
            interf = sum(v for (l2, k2), v in p.items() if k2 != k or l2 > l)
            out[l, k] = p[l, k] / (interf + base)
    return out


def su_eavesdropper_sinr(sol: BeamformingSolution, ch: NetworkChannels, t, k):
    """SINR of receiver ``t`` decoding the base layer of ``k`` after its own signal."""
    h = ch.h[t]
    num = _quad(h, sol.W[0, k])
    den = _quad(h, sol.V) + ch.sigma_s_sq[t]
    for (l2, k2), w in sol.W.items():
        if (k2 != k and k2 != t) or (k2 == k and l2 >= 1):
            den += _quad(h, w)
    return num / den


def _logdet2(m):
    sign, ld = np.linalg.slogdet(m)
    return ld / np.log(2.0)


def pu_rate(W1, V, G, sigma2):
    """``log2 det(I + S^-1 G^H W G)`` with ``S = G^H V G + sigma2 I`` (batched over leading axes)."""
    n = G.shape[-1]
    Gh = np.conj(np.swapaxes(G, -1, -2))
    S = Gh @ V @ G + sigma2 * np.eye(n)
    T = S + Gh @ W1 @ G
    return _logdet2(T) - _logdet2(S)


def _pu_rate_grad(W1, V, G, sigma2):
    n = G.shape[-1]
    Gh = G.conj().T
    S = Gh @ V @ G + sigma2 * np.eye(n)
    T = S + Gh @ W1 @ G
    return ((V + W1) @ G @ np.linalg.inv(T) - V @ G @ np.linalg.inv(S)) / np.log(2.0)


def _project(G, G_hat, eps):
    d = G - G_hat
    nd = np.linalg.norm(d)
    return G if nd <= eps else G_hat + d * (eps / nd)


def worst_pu_rate(W1, V, G_hat, eps, sigma2, samples, G_true=None, n_ascent=5, steps=60):
    """Largest eavesdropping rate over the samples plus projected-gradient ascent."""
    cands = G_hat[None] + samples
    if G_true is not None:
        cands = np.concatenate([cands, G_true[None]], axis=0)
    vals = pu_rate(W1, V, cands, sigma2)
    best = float(np.max(vals)) if vals.size else float(pu_rate(W1, V, G_hat, sigma2))
    order = np.argsort(vals)[::-1][:n_ascent]
    scale = max(eps, 1e-300)
    for i in order:
        G = cands[i]
        f = float(vals[i])
        step = 0.1 * scale
        for _ in range(steps):
            g = _pu_rate_grad(W1, V, G, sigma2)
            gn = np.linalg.norm(g)
            if gn == 0:
                break
            G_new = _project(G + step * g / gn, G_hat, eps)
            f_new = float(pu_rate(W1, V, G_new, sigma2))
            if f_new > f:
                G, f = G_new, f_new
                step *= 1.5
            else:
                step *= 0.3
                if step < 1e-8 * scale:
                    break
        best = max(best, f)
    return best


def secrecy_floor(q: QosSpec, k):
    """Guaranteed base-layer secrecy rate of receiver ``k`` implied by the targets."""
    g = q.gamma_req[k][0]
    if g is None:
        return 0.0
    leak = max([math.log2(1.0 + q.gamma_tol)] + [float(r) for r in q.R_eav[k]])
    return max(math.log2(1.0 + g) - leak, 0.0)


def evaluate_solution(sol: BeamformingSolution, ch: NetworkChannels, q: QosSpec, n_error_samples=1000,
                      rng=None, n_ascent=5, samples=None) -> TrialMetrics:
    """Metrics of ``sol`` against the true channels and sampled CSI errors.

    ``samples[j]`` (optional) are error matrices inside the ``eps_j`` ball;
    otherwise ``n_error_samples`` are drawn from ``rng``.
    """
    m = TrialMetrics(scheme=sol.scheme, status=_status(sol.status),
                     solve_time_ms=float(sol.info.get("solve_time_ms", 0.0)))
    checks = sol.info.get("dual_checks")
    if checks:
        m.dual_check_residual = max(c["H_annihilates_null"] for c in checks.values())
    if not m.solved:
        return m
    if rng is None:
        rng = np.random.default_rng(0)
    P = sol.total_power
    m.total_power_w = P
    m.total_power_dbm = watt_to_dbm(P) if P > 0 else float("-inf")
    m.sinr = achieved_sinr(sol, ch)
    Wsum = sum(sol.W.values())
    # interior-point output is PSD only to solver accuracy
    X = psd_part(Wsum + sol.V)
    if samples is None:
        samples = [sample_ball(rng, ch.eps[j], ch.G_hat[j].shape, n_error_samples) for j in range(ch.J)]

    for j in range(ch.J):
        G_hat, e = ch.G_hat[j], ch.eps[j]
        G_true = ch.G_true[j] if ch.G_true is not None else G_hat
        cands = G_hat[None] + samples[j]
        tr = float(np.real(np.trace(G_true.conj().T @ X @ G_true)))
        smax = float(np.max(np.real(np.einsum("sij,ik,skj->s", cands.conj(), X, cands)))) if len(cands) else tr
        M = np.kron(np.eye(ch.N_PR), X)
        worst = trust_region_quadratic_max(M, G_hat.reshape(-1, order="F"), e)
        m.interference_true_w.append(tr)
        m.interference_sampled_max_w.append(max(smax, tr))
        m.interference_worst_w.append(float(worst))
        m.interference_dbm.append(watt_to_dbm(tr) if tr > 0 else float("-inf"))
        lim = q.P_I[j] * (1.0 + INTERFERENCE_RTOL)
        m.interference_violation |= max(smax, tr) > lim
        m.worst_case_violation |= worst > lim

    for k in range(ch.K):
        c1 = math.log2(1.0 + m.sinr[0, k])
        su = [math.log2(1.0 + su_eavesdropper_sinr(sol, ch, t, k)) for t in range(ch.K) if t != k]
        pu = []
        for j in range(ch.J):
            G_true = ch.G_true[j] if ch.G_true is not None else None
            pu.append(worst_pu_rate(sol.W[0, k], sol.V, ch.G_hat[j], ch.eps[j], ch.sigma_pu_sq[j],
                                    samples[j], G_true=G_true, n_ascent=n_ascent))
        leak = max(su + pu + [0.0])
        sec = max(c1 - leak, 0.0)
        fl = secrecy_floor(q, k)
        m.secrecy_rate_l1.append(sec)
        m.secrecy_floor.append(fl)
        m.eav_rate_su.append(su)
        m.eav_rate_pu.append(pu)
        m.secrecy_violation |= sec < fl - SECRECY_ATOL
    return m


# ---------------------------------------------------------------- trials


def solve_trial(ch, q, schemes=SCHEMES, n_tries=50, seed=0, solver_cfg=None):
    """Solutions of every requested scheme for one realization.

    Returns ``(solutions, rank_one_at_relaxation)``.
    """
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    if solver_cfg is None:
        solver_cfg = PIPELINE_SOLVER
    out = {}
    rank_one = None
    if {"optimal", "scheme1", "scheme2"} & set(schemes):
        t0 = time.perf_counter()
        sol = solve_sdp(assemble_relaxed_problem(ch, q), solver_cfg)
        t_relax = 1e3 * (time.perf_counter() - t0)
        if sol.optimal:
            relaxed = solution_from_sdp(sol, ch, q, scheme="relaxed")
            floor = 1e-9 * relaxed.total_power
            rank_one = all(is_rank_one(w, floor=floor) for w in relaxed.W.values())
            if "optimal" in schemes:
                opt = construct_rank_one_solution(relaxed, DualBundle.from_solution(sol, ch, q), ch, q)
                opt.scheme = "optimal"
                opt.info["solve_time_ms"] = t_relax
                out["optimal"] = opt
            for name, fn in (("scheme1", lambda: scheme1_eigenvector(relaxed, ch, q, solver_cfg)),
                             ("scheme2", lambda: scheme2_randomization(relaxed, ch, q, n_tries, seed, solver_cfg))):
                if name in schemes:
                    t0 = time.perf_counter()
                    r = fn()
                    r.info["solve_time_ms"] = t_relax + 1e3 * (time.perf_counter() - t0)
                    out[name] = r
        else:
            for name in ("optimal", "scheme1", "scheme2"):
                if name in schemes:
                    e = empty_solution(ch, q, sol.status, name)
                    e.info["solve_time_ms"] = t_relax
                    out[name] = e
    for name, build, qq in (("baseline1", assemble_baseline1, baseline1_qos(q)),
                            ("baseline2", assemble_baseline2, q)):
        if name not in schemes:
            continue
        t0 = time.perf_counter()
        sol = solve_sdp(build(ch, q), solver_cfg)
        if sol.optimal:
            r = solution_from_sdp(sol, ch, qq, scheme=name)
            r = construct_rank_one_solution(r, None, ch, qq)
        else:
            r = empty_solution(ch, qq, sol.status, name)
        r.info["solve_time_ms"] = 1e3 * (time.perf_counter() - t0)
        out[name] = r
    return out, rank_one


def run_trial(cfg: SimConfig, trial_index, schemes=SCHEMES, n_error_samples=1000, n_tries=50, solver_cfg=None,
              return_solutions=False):
    """Solve and evaluate one trial; returns ``{scheme: TrialMetrics}``.

    With ``return_solutions`` the :class:`BeamformingSolution` dict is
    returned as a second value.
    """
    ch, q = generate_realization(cfg, trial_index)
    sols, rank_one = solve_trial(ch, q, schemes, n_tries=n_tries, seed=hash_seed(cfg.seed, trial_index),
                                 solver_cfg=solver_cfg)
    srng = np.random.default_rng([cfg.seed, trial_index, _EVAL])
    samples = [sample_ball(srng, ch.eps[j], ch.G_hat[j].shape, n_error_samples) for j in range(ch.J)]
    res = {}
    for name in schemes:
        qq = baseline1_qos(q) if name == "baseline1" else q
        m = evaluate_solution(sols[name], ch, qq, samples=samples)
        if name in ("optimal", "scheme1", "scheme2"):
            m.rank_one_at_relaxation = rank_one
        res[name] = m
    return (res, sols) if return_solutions else res


def hash_seed(seed, trial_index):
    """Deterministic per-trial integer seed."""
    return int(np.random.SeedSequence([seed, trial_index]).generate_state(1)[0])


# ---------------------------------------------------------------- campaigns


def _mean(xs):
    xs = list(xs)
    return math.fsum(xs) / len(xs) if xs else float("nan")


def _ci95(xs):
    """Normal-approximation 95% interval of the mean of ``xs``."""
    if len(xs) < 2:
        return float("nan"), float("nan")
    m = _mean(xs)
    half = 1.96 * float(np.std(xs, ddof=1)) / math.sqrt(len(xs))
    return m - half, m + half


def summarize(results, schemes, sweep_param, sweep_value):
    """Rows of the metrics table for one sweep point.

    ``results`` is a list (trial order) of ``{scheme: TrialMetrics}``.
    Power, secrecy and interference are averaged over the trials solved by
    every scheme; violation and rank-one rates over each scheme's solved
    trials; the infeasible rate over all trials.
    """
    paired = [r for r in results if all(r[s].solved for s in schemes)]
    rows = []
    for s in schemes:
        own = [r[s] for r in results if r[s].solved]
        pm = [r[s] for r in paired]
        mean_p = _mean(m.total_power_w for m in pm)
        lo, hi = _ci95([m.total_power_w for m in pm])
        mean_i = _mean(x for m in pm for x in m.interference_true_w)
        ro = [m.rank_one_at_relaxation for m in own if m.rank_one_at_relaxation is not None]
        rows.append({
            "sweep_param": sweep_param,
            "sweep_value": sweep_value,
            "scheme": s,
            "trials_feasible": len(paired),
            "mean_power_dbm": watt_to_dbm(mean_p) if mean_p > 0 else float("nan"),
            "mean_secrecy_l1_bps_hz": _mean(x for m in pm for x in m.secrecy_rate_l1),
            "mean_pu_interference_dbm": watt_to_dbm(mean_i) if mean_i > 0 else float("nan"),
            "secrecy_violation_rate": _mean(float(m.secrecy_violation) for m in own),
            "interference_violation_rate": _mean(float(m.interference_violation) for m in own),
            "rank_one_rate": _mean(float(x) for x in ro),
            "mean_solve_ms": _mean(m.solve_time_ms for m in own),
            "trials_total": len(results),
            "infeasible_rate": _mean(float(r[s].status == "infeasible") for r in results),
            "power_ci95_low_dbm": watt_to_dbm(lo) if lo > 0 else float("nan"),
            "power_ci95_high_dbm": watt_to_dbm(hi) if hi > 0 else float("nan"),
        })
    return rows


def _trial_job(args):
    cfg, t, schemes, n_err, n_tries, solver_cfg = args
    return run_trial(cfg, t, schemes, n_err, n_tries, solver_cfg)


def run_campaign(cfg: SimConfig, schemes=SCHEMES, sweep=None, n_error_samples=1000, n_tries=50, threads=1,
                 solver_cfg=None, trial_log=None, progress=None):
    """Run every sweep point and return ``(rows, per_point_results)``.

    ``sweep`` is ``(param, values)`` naming a :class:`SimConfig` field, or
    ``None`` for a single point.  Trials may run in ``threads`` worker
    processes; results are gathered in trial order so the output does not
    depend on the worker count.  ``trial_log`` (a text stream) receives one
    JSON line per trial and scheme.
    """
    if sweep is None:
        param, values = "none", [None]
    else:
        param, values = sweep
        if param not in {f.name for f in dataclasses.fields(SimConfig)}:
            raise ValueError(f"unknown sweep parameter {param!r}")
    rows, allres = [], {}
    for v in values:
        c = cfg if v is None else cfg.replace(**{param: v})
        jobs = [(c, t, tuple(schemes), n_error_samples, n_tries, solver_cfg) for t in range(c.trials)]
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(_trial_job, jobs))
        else:
            results = []
            for jb in jobs:
                results.append(_trial_job(jb))
                if progress is not None:
                    progress(param, v, len(results), c.trials)
        if trial_log is not None:
            for t, r in enumerate(results):
                for s in schemes:
                    rec = {"sweep_param": param, "sweep_value": v, "trial": t, **r[s].to_dict()}
                    trial_log.write(json.dumps(rec, default=_json_default) + "\n")
        rows.extend(summarize(results, schemes, param, v))
        allres[v] = results
    return rows, allres


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def rows_to_csv(rows) -> str:
    """CSV text with a ``# schema=1`` first line."""
    buf = io.StringIO()
    buf.write("# schema=1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


__all__ = ["SimConfig", "TrialMetrics", "path_gain", "path_loss_db", "effective_noise_power", "sample_ball",
           "qos_from_config", "generate_realization", "evaluate_solution", "achieved_sinr", "pu_rate",
           "worst_pu_rate", "secrecy_floor", "solve_trial", "run_trial", "run_campaign", "summarize",
           "rows_to_csv", "SCHEMES", "ROBUST_SCHEMES", "CSV_COLUMNS"]
