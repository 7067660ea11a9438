"""Primal-dual interior-point solver for Hermitian block SDPs.

The compiled cone program (see :mod:`robustbf.sdp.problem`) is embedded in
the homogeneous self-dual model

    A^T y + G^T z + c tau = 0
    -A x + b tau          = 0
    -G x + h tau - s      = 0
    -c^T x - b^T y - h^T z - kappa = 0,   s, z in K,  tau, kappa >= 0

and followed with Nesterov-Todd scaled Newton steps and a Mehrotra
predictor-corrector.  PSD cones stay complex Hermitian throughout; the
scaling matrices come from complex Cholesky factors.  Infeasibility and
unboundedness are read off the usual certificates of the embedding
(``tau -> 0``).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from robustbf.linalg import smat, svec
from robustbf.sdp.problem import SdpProblem, StandardForm

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITERATIONS = "max-iterations"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True)
class SolverConfig:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iterations: int = 200
    step_fraction: float = 0.98

    def __post_init__(self):
        if self.gap_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class SdpSolution:
    status: str
    primal: dict = field(default_factory=dict)
    dual: dict = field(default_factory=dict)
    objective_value: float = float("nan")
    dual_objective: float = float("nan")
    duality_gap: float = float("nan")
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    solve_time_ms: float = 0.0
    x: np.ndarray | None = None

    @property
    def optimal(self):
        return self.status == OPTIMAL


# -- cone helpers -------------------------------------------------------------

class _Block:
    """Per-PSD-cone data with the nonzero columns of G pre-extracted."""

    def __init__(self, cb, col_scale=None):
        self.name, self.kind, self.dim = cb.name, cb.kind, cb.dim
        nz = np.flatnonzero(np.any(cb.G != 0, axis=0))
        self.cols = nz
        self.G = cb.G[:, nz]
        self.h = cb.h
        self.mats = smat(self.G.T, self.dim)   # (k, d, d)


def _chol(m):
    return np.linalg.cholesky(0.5 * (m + m.conj().T))


def _psd_step(lam_isqrt, d):
    """Largest alpha with I + alpha * L^{-1/2} d L^{-1/2} PSD (inf if none)."""
    m = lam_isqrt[:, None] * d * lam_isqrt[None, :]
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
    return np.inf if ev >= 0 else -1.0 / ev


class _Scaling:
    """Nesterov-Todd scaling W with W z = W^{-T} s = lambda."""

    def __init__(self, sl, zl, S, Z):
        self.w = np.sqrt(sl / zl)
        self.lam_l = np.sqrt(sl * zl)
        self.R, self.T, self.lam = [], [], []
        for s, z in zip(S, Z):
            ls, lz = _chol(s), _chol(z)
            u, lam, qh = np.linalg.svd(lz.conj().T @ ls)
            isq = 1.0 / np.sqrt(lam)
            self.R.append((ls @ qh.conj().T) * isq[None, :])
            self.T.append((lz @ u) * isq[None, :])
            self.lam.append(lam)

    # each map takes/returns (lp vector, list of matrices)
    def W(self, ul, U):
        return ul * self.w, [r.conj().T @ u @ r for r, u in zip(self.R, U)]

    def WT(self, ul, U):
        return ul * self.w, [r @ u @ r.conj().T for r, u in zip(self.R, U)]

    def WinvT(self, ul, U):
        return ul / self.w, [t.conj().T @ u @ t for t, u in zip(self.T, U)]

    def WTW_inv(self, ul, U):
        out = []
        for t, u in zip(self.T, U):
            tt = t @ t.conj().T
            out.append(tt @ u @ tt)
        return ul / self.w**2, out

    def WTW(self, ul, U):
        out = []
        for r, u in zip(self.R, U):
            rr = r @ r.conj().T
            out.append(rr @ u @ rr)
        return ul * self.w**2, out

    def lam_circ(self, ul, U):
        return self.lam_l * ul, [0.5 * (lam[:, None] + lam[None, :]) * u for lam, u in zip(self.lam, U)]

    def lam_div(self, vl, V):
        return vl / self.lam_l, [2.0 * v / (lam[:, None] + lam[None, :]) for lam, v in zip(self.lam, V)]


class _Embedding:
    def __init__(self, sf: StandardForm):
        self.sf = sf
        self.nx = sf.nx
        self.blocks = [_Block(cb) for cb in sf.psd]
        self.Gl = sf.lp_G
        self.hl = sf.lp_h
        self.A = sf.A
        self.b = sf.b
        self.c = sf.c
        self._scale()

    def _column_scale(self):
        # one scale per variable (a whole block shares its factor so that the
        # block cone is preserved), from the largest column norm the variable
        # has in the coupling constraints
        sf = self.sf
        self.D = np.ones(self.nx)
        own = {cb.name for cb in sf.psd if cb.kind == "block"}
        norms = np.zeros(self.nx)
        if self.Gl.size:
            norms = np.maximum(norms, np.max(np.abs(self.Gl), axis=0))
        if self.A.size:
            norms = np.maximum(norms, np.max(np.abs(self.A), axis=0))
        for blk in self.blocks:
            if blk.kind == "block" and blk.name in own:
                continue
            if blk.G.size:
                norms[blk.cols] = np.maximum(norms[blk.cols], np.max(np.abs(blk.G), axis=0))
        for name, (off, ln) in sf.layout.items():
            m = float(np.max(norms[off:off + ln]))
            if m > 0:
                self.D[off:off + ln] = 1.0 / m
        self.Gl = self.Gl * self.D[None, :]
        self.A = self.A * self.D[None, :]
        self.c = self.c * self.D
        for blk in self.blocks:
            d = self.D[blk.cols]
            blk.G = blk.G * d[None, :]
            blk.mats = blk.mats * d[:, None, None]

    def _scale(self):
        self._column_scale()
        # row-equilibrate each cone and equality row, then normalize c and (h, b)
        self.f_l = np.ones(len(self.hl))
        for i in range(len(self.hl)):
            n = np.linalg.norm(self.Gl[i])
            if n > 0:
                self.f_l[i] = 1.0 / n
        self.Gl = self.Gl * self.f_l[:, None]
        self.hl = self.hl * self.f_l
        self.f_b = []
        for blk in self.blocks:
            colmax = np.max(np.linalg.norm(blk.G, axis=0)) if blk.G.size else 1.0
            f = 1.0 / colmax if colmax > 0 else 1.0
            self.f_b.append(f)
            blk.G = blk.G * f
            blk.mats = blk.mats * f
            blk.h = blk.h * f
        self.f_A = np.ones(len(self.b))
        for i in range(len(self.b)):
            n = np.linalg.norm(self.A[i])
            if n > 0:
                self.f_A[i] = 1.0 / n
        self.A = self.A * self.f_A[:, None]
        self.b = self.b * self.f_A
        cn = np.linalg.norm(self.c)
        self.gamma = cn if cn > 0 else 1.0
        self.c = self.c / self.gamma
        hn = np.sqrt(np.sum(self.hl**2) + sum(np.sum(blk.h**2) for blk in self.blocks)
                     + np.sum(self.b**2))
        self.beta = hn if hn > 0 else 1.0
        self.hl = self.hl / self.beta
        self.b = self.b / self.beta
        for blk in self.blocks:
            blk.h = blk.h / self.beta
        self.H_mats = [smat(blk.h, blk.dim) for blk in self.blocks]
        self.resx0 = max(1.0, np.linalg.norm(self.c))
        self.resz0 = max(1.0, np.sqrt(np.sum(self.hl**2) + sum(np.sum(blk.h**2) for blk in self.blocks)
                                      + np.sum(self.b**2)))

    # linear maps --------------------------------------------------------
    def G_mul(self, x):
        return self.Gl @ x, [smat(blk.G @ x[blk.cols], blk.dim) for blk in self.blocks]

    def GT_mul(self, zl, Z):
        out = self.Gl.T @ zl
        for blk, z in zip(self.blocks, Z):
            out[blk.cols] += blk.G.T @ svec(z)
        return out

    def h_dot(self, zl, Z):
        return float(self.hl @ zl + sum(np.real(np.vdot(h, z)) for h, z in zip(self.H_mats, Z)))

    @property
    def degree(self):
        return len(self.hl) + sum(blk.dim for blk in self.blocks)


def _inner(al, A, bl, B):
    return float(al @ bl + sum(np.real(np.vdot(a, b)) for a, b in zip(A, B)))


def _norm(al, A):
    return np.sqrt(_inner(al, A, al, A))


def _add(al, A, bl, B, beta=1.0):
    return al + beta * bl, [a + beta * b for a, b in zip(A, B)]


def _scale(al, A, f):
    return f * al, [f * a for a in A]


class _KKT:
    """Solver for [[0, A^T, G^T], [A, 0, 0], [G, 0, -W^T W]].

    Works with the scaled matrix ``Gs = W^{-T} G``; equalities are removed
    through a QR basis ``Q2`` of the null space of ``A``.  The reduced
    least-squares matrix ``M = Gs Q2`` is factored either through the
    normal equations (``"chol"``, fast) or by QR (``"qr"``, which does not
    square the conditioning and is used once the normal equations lose
    accuracy near the optimum).
    """

    def __init__(self, emb: _Embedding, sc: _Scaling, method="chol"):
        self.emb, self.sc, self.method = emb, sc, method
        nx = emb.nx
        rows = [emb.Gl / sc.w[:, None]]
        for blk, t in zip(emb.blocks, sc.T):
            g = np.zeros((blk.dim**2, nx))
            g[:, blk.cols] = svec(t.conj().T @ blk.mats @ t).T
            rows.append(g)
        self.Gs = np.vstack(rows)
        self.p = emb.A.shape[0]
        if self.p:
            q, r = np.linalg.qr(emb.A.T, mode="complete")
            self.Q1, self.Q2, self.RA = q[:, :self.p], q[:, self.p:], r[:self.p]
            M = self.Gs @ self.Q2
        else:
            M = self.Gs
        self.M = M
        if method == "chol":
            self.F = sla.cho_factor(M.T @ M, check_finite=False)
        else:
            self.Qm, self.Rm = sla.qr(M, mode="economic", check_finite=False)
            d = np.abs(np.diag(self.Rm))
            if d.size and d.min() == 0.0:
                raise np.linalg.LinAlgError("KKT system is singular")
        self.rel_residual = 0.0

    def _pack(self, vl, V):
        return np.concatenate([vl] + [svec(v) for v in V])

    def _unpack(self, v):
        nl = len(self.sc.w)
        out, off = [], nl
        for blk in self.emb.blocks:
            out.append(smat(v[off:off + blk.dim**2], blk.dim))
            off += blk.dim**2
        return v[:nl], out

    def solve(self, r1, r2, r3l, R3, refine=2):
        sol = self._solve(r1, r2, r3l, R3)
        rnorm = np.sqrt(r1 @ r1 + r2 @ r2) + _norm(r3l, R3)
        for i in range(refine + 1):
            e1, e2, e3l, E3 = self._residual(sol, r1, r2, r3l, R3)
            enorm = np.sqrt(e1 @ e1 + e2 @ e2) + _norm(e3l, E3)
            if i == refine or enorm <= 1e-14 * rnorm:
                break
            corr = self._solve(e1, e2, e3l, E3)
            sol = (sol[0] + corr[0], sol[1] + corr[1], *_add(sol[2], sol[3], corr[2], corr[3]))
        self.rel_residual = max(self.rel_residual, enorm / max(rnorm, 1e-300))
        return sol

    def _residual(self, sol, r1, r2, r3l, R3):
        emb, sc = self.emb, self.sc
        dx, dy, dzl, DZ = sol
        e1 = r1 - emb.A.T @ dy - emb.GT_mul(dzl, DZ)
        e2 = r2 - emb.A @ dx
        gl, Gm = emb.G_mul(dx)
        wl, WM = sc.WTW(dzl, DZ)
        e3l, E3 = _add(*_add(r3l, R3, gl, Gm, -1.0), wl, WM)
        return e1, e2, e3l, E3

    def _solve(self, r1, r2, r3l, R3):
        emb, sc = self.emb, self.sc
        rs = self._pack(*sc.WinvT(r3l, R3))
        tri = sla.solve_triangular
        if self.p:
            x0 = self.Q1 @ tri(self.RA, r2, trans="T")
            rhs = self.Q2.T @ (r1 - self.Gs.T @ (self.Gs @ x0))
        else:
            x0 = np.zeros(emb.nx)
            rhs = r1
        if self.method == "chol":
            u = sla.cho_solve(self.F, rhs + self.M.T @ rs, check_finite=False)
        else:
            u = tri(self.Rm, tri(self.Rm, rhs, trans="T") + self.Qm.T @ rs)
        dx = x0 + (self.Q2 @ u if self.p else u)
        zs = self.Gs @ dx - rs
        if self.p:
            dy = tri(self.RA, self.Q1.T @ (r1 - self.Gs.T @ zs))
        else:
            dy = np.zeros(0)
        # dz = W^{-1} zs
        zl, ZS = self._unpack(zs)
        dzl = zl / sc.w
        DZ = [t @ z @ t.conj().T for t, z in zip(sc.T, ZS)]
        return dx, dy, dzl, DZ


def _max_step(sc, dsl, DS, dzl, DZ):
    """Largest step keeping s and z in the cone, measured in scaled space."""
    alpha = np.inf
    # LP part: lambda + alpha * W^{-T} ds >= 0 etc.
    lam = sc.lam_l
    for v in (dsl / sc.w, dzl * sc.w):
        neg = v < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-lam[neg] / v[neg])))
    for r, t, lam_b, ds, dz in zip(sc.R, sc.T, sc.lam, DS, DZ):
        isq = 1.0 / np.sqrt(lam_b)
        alpha = min(alpha, _psd_step(isq, t.conj().T @ ds @ t))
        alpha = min(alpha, _psd_step(isq, r.conj().T @ dz @ r))
    return alpha


KKT_RESIDUAL_TOL = 1e-10


def _newton_step(emb, sc, method, state, cfg):
    """Mehrotra predictor-corrector direction and step length."""
    tau, kappa, mu, rx, ry, rzl, RZ, rt, nl = state
    kkt = _KKT(emb, sc, method)
    x1, y1, z1l, Z1 = kkt.solve(-emb.c, emb.b, emb.hl, emb.H_mats)
    wz1l, WZ1 = sc.W(z1l, Z1)
    denom = kappa / tau + _inner(wz1l, WZ1, wz1l, WZ1)

    def direction(sigma, corr_l, CORR, corr_tk):
        dsl, DS = sc.lam_div(
            sigma * mu - sc.lam_l**2 - corr_l,
            [sigma * mu * np.eye(len(lam)) - np.diag(lam**2) - cr for lam, cr in zip(sc.lam, CORR)])
        dk = sigma * mu - tau * kappa - corr_tk
        f = -(1.0 - sigma)
        wtl, WTD = sc.WT(dsl, DS)
        r3l = -(f * rzl) - wtl
        R3 = [-(f * rz) - w for rz, w in zip(RZ, WTD)]
        x2, y2, z2l, Z2 = kkt.solve(f * rx, -(f * ry), r3l, R3)
        num = f * rt + dk / tau + float(emb.c @ x2) + float(emb.b @ y2) + emb.h_dot(z2l, Z2)
        dtau = num / denom
        dx = x2 + dtau * x1
        dy = y2 + dtau * y1
        dzl, DZ = _add(z2l, Z2, z1l, Z1, dtau)
        # ds from the primal residual equation rather than the linearized
        # complementarity: KKT solve errors then perturb centrality (which
        # the next steps repair) instead of accumulating in the residual
        gl, Gm = emb.G_mul(dx)
        dsl2 = -gl + emb.hl * dtau - f * rzl
        DS2 = [-g + h * dtau - f * rz for g, h, rz in zip(Gm, emb.H_mats, RZ)]
        DS2 = [0.5 * (d + d.conj().T) for d in DS2]
        dkap = (dk - kappa * dtau) / tau
        return dx, dy, dsl2, DS2, dzl, DZ, dtau, dkap

    def step_len(d):
        a = _max_step(sc, d[2], d[3], d[4], d[5])
        if d[6] < 0:
            a = min(a, -tau / d[6])
        if d[7] < 0:
            a = min(a, -kappa / d[7])
        return a

    zero_corr = [np.zeros((len(lam), len(lam))) for lam in sc.lam]
    aff = direction(0.0, np.zeros(nl), zero_corr, 0.0)
    sigma = (1.0 - min(1.0, step_len(aff))) ** 3
    # second-order term (W^{-T} ds_a) o (W dz_a)
    al, AL = sc.WinvT(aff[2], aff[3])
    bl, BL = sc.W(aff[4], aff[5])
    CORR = [0.5 * (a @ b + b @ a) for a, b in zip(AL, BL)]
    d = direction(sigma, al * bl, CORR, aff[6] * aff[7])
    alpha = min(1.0, cfg.step_fraction * step_len(d))
    return (*d, alpha, kkt.rel_residual)


def solve_sdp(problem, config: SolverConfig | None = None) -> SdpSolution:
    """Solve an :class:`SdpProblem` (or an already compiled standard form)."""
    cfg = config or SolverConfig()
    t0 = time.perf_counter()
    sf = problem.compile() if isinstance(problem, SdpProblem) else problem
    emb = _Embedding(sf)
    nl = len(emb.hl)
    p = emb.A.shape[0]
    nu = emb.degree

    x = np.zeros(emb.nx)
    y = np.zeros(p)
    sl, zl = np.ones(nl), np.ones(nl)
    S = [np.eye(blk.dim, dtype=complex) for blk in emb.blocks]
    Z = [np.eye(blk.dim, dtype=complex) for blk in emb.blocks]
    tau = kappa = 1.0

    status = MAX_ITERATIONS
    kkt_method = "chol"
    info = {}
    it = 0
    for it in range(cfg.max_iterations + 1):
        gl, Gx = emb.G_mul(x)
        gtz = emb.GT_mul(zl, Z)
        rx = emb.A.T @ y + gtz + emb.c * tau
        ry = -emb.A @ x + emb.b * tau
        rzl = -gl + emb.hl * tau - sl
        RZ = [-g + h * tau - s for g, h, s in zip(Gx, emb.H_mats, S)]
        cx = float(emb.c @ x)
        by = float(emb.b @ y)
        hz = emb.h_dot(zl, Z)
        rt = -cx - by - hz - kappa
        sz = _inner(sl, S, zl, Z)
        mu = (sz + tau * kappa) / (nu + 1)

        pcost, dcost = cx / tau, -(by + hz) / tau
        gap = sz / tau**2
        pres = max(np.linalg.norm(ry), _norm(rzl, RZ)) / tau / emb.resz0
        dres = np.linalg.norm(rx) / tau / emb.resx0
        rel_gap = gap / (1.0 + abs(pcost))
        info = dict(pcost=pcost, dcost=dcost, gap=gap, rel_gap=rel_gap, pres=pres, dres=dres)
        log.debug("it %d pcost %.8e dcost %.8e gap %.2e pres %.2e dres %.2e tau %.2e kappa %.2e",
                  it, pcost, dcost, gap, pres, dres, tau, kappa)
        if pres <= cfg.feas_tol and dres <= cfg.feas_tol and rel_gap <= cfg.gap_tol \
                and abs(pcost - dcost) / (1.0 + abs(pcost)) <= cfg.gap_tol:
            status = OPTIMAL
            break
        # certificates
        if hz + by < 0:
            pinf = np.linalg.norm(emb.A.T @ y + gtz) / emb.resx0 / (-(hz + by))
            if pinf <= cfg.feas_tol:
                status = INFEASIBLE
                info["certificate"] = pinf
                break
        if cx < 0:
            dinf = np.sqrt(np.linalg.norm(emb.A @ x) ** 2 + _norm(gl + sl, [g + s for g, s in zip(Gx, S)]) ** 2) \
                / emb.resz0 / (-cx)
            if dinf <= cfg.feas_tol:
                status = UNBOUNDED
                info["certificate"] = dinf
                break
        if it == cfg.max_iterations:
            break

        try:
            sc = _Scaling(sl, zl, S, Z)
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            log.debug("scaling failure at iteration %d: %s", it, exc)
            status = NUMERICAL_FAILURE
            break
        state = (tau, kappa, mu, rx, ry, rzl, RZ, rt, nl)
        step = None
        for method in (("chol", "qr") if kkt_method == "chol" else ("qr",)):
            try:
                step = _newton_step(emb, sc, method, state, cfg)
            except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
                log.debug("%s factorization failure at iteration %d: %s", method, it, exc)
                continue
            if step[-1] <= KKT_RESIDUAL_TOL or method == "qr":
                break
            step = None
        if step is None:
            status = NUMERICAL_FAILURE
            break
        kkt_method = method
        dx, dy, dsl, DS, dzl, DZ, dtau, dkap, alpha, kres = step
        log.debug("   step %.3e via %s, kkt residual %.1e", alpha, method, kres)

        x = x + alpha * dx
        y = y + alpha * dy
        sl, S = _add(sl, S, dsl, DS, alpha)
        zl, Z = _add(zl, Z, dzl, DZ, alpha)
        S = [0.5 * (s + s.conj().T) for s in S]
        Z = [0.5 * (z + z.conj().T) for z in Z]
        tau += alpha * dtau
        kappa += alpha * dkap

    sol = _unscale(emb, sf, status, x, y, zl, Z, tau, info, it)
    sol.solve_time_ms = 1e3 * (time.perf_counter() - t0)
    return sol


def _unscale(emb, sf, status, x, y, zl, Z, tau, info, it):
    sol = SdpSolution(status=status, iterations=it)
    sol.residuals = {"primal": info.get("pres", np.nan), "dual": info.get("dres", np.nan)}
    if status == INFEASIBLE or status == UNBOUNDED:
        sol.residuals["certificate"] = info.get("certificate", np.nan)
        return sol
    scale_x = emb.beta / tau
    scale_z = emb.gamma / tau
    xo = x * emb.D * scale_x
    sol.x = xo
    sol.objective_value = float(sf.c @ xo)
    sol.dual_objective = info.get("dcost", np.nan) * emb.gamma * emb.beta
    sol.duality_gap = info.get("rel_gap", np.nan)
    for name, (off, ln) in sf.layout.items():
        blk = next((cb for cb in sf.psd if cb.kind == "block" and cb.name == name), None)
        if blk is not None:
            sol.primal[name] = smat(xo[off:off + ln], blk.dim)
        else:
            sol.primal[name] = float(xo[off])
    zl_o = zl * emb.f_l * scale_z
    for (kind, name), val in zip(sf.lp_names, zl_o):
        sol.dual[name] = float(val)
    for blk, f, z in zip(emb.blocks, emb.f_b, Z):
        sol.dual[blk.name] = z * f * scale_z
    y_o = y * emb.f_A * scale_z
    for name, val in zip(sf.eq_names, y_o):
        sol.dual[name] = float(val)
    return sol


@dataclass
class ResidualReport:
    """Feasibility and complementarity of a (possibly modified) solution.

    ``violations`` holds, per constraint name, the relative amount by which
    it is violated (0 when satisfied); ``lambda_min`` the smallest
    eigenvalue per primal block; ``complementarity`` the relative
    ``||Z X||_F`` per PSD pair when duals are available.
    """

    violations: dict
    lambda_min: dict
    complementarity: dict

    @property
    def max_violation(self):
        vals = list(self.violations.values()) + [max(0.0, -v) for v in self.lambda_min.values()]
        return max(vals, default=0.0)

    def ok(self, tol):
        return self.max_violation <= tol


def check_solution(p: SdpProblem, s, values=None) -> ResidualReport:
    """Evaluate every constraint of ``p`` at the primal point of ``s``.

    ``values`` overrides ``s.primal`` (used to check constructed points).
    """
    from robustbf.sdp.problem import constraint_scale, constraint_value

    vals = values if values is not None else s.primal
    viol = {}
    for con in p.constraints:
        v = constraint_value(p, con, vals)
        viol[con.name] = max(0.0, -v) / constraint_scale(p, con, vals)
    lmin = {}
    for name in p.blocks:
        x = vals[name]
        lmin[name] = float(np.linalg.eigvalsh(0.5 * (x + x.conj().T))[0]) / max(1.0, np.linalg.norm(x, 2))
    for name in p.scalars:
        lmin[name] = float(vals[name])
    comp = {}
    if s is not None and values is None:
        for name in p.blocks:
            z = s.dual.get(name)
            if z is not None:
                x = vals[name]
                comp[name] = float(np.linalg.norm(z @ x)) / (1.0 + np.linalg.norm(x))
    return ResidualReport(viol, lmin, comp)
