"""SDP instances for robust secure layered beamforming.

A realization (:class:`NetworkChannels`) and its QoS targets
(:class:`QosSpec`) are turned into block SDPs:

* :func:`assemble_relaxed_problem` -- rank-relaxed robust problem with the
  S-procedure LMIs for the interference temperature and the eavesdropping
  rate at each primary receiver,
* :func:`assemble_power_scaling_problem` -- beam directions fixed, powers free,
* :func:`assemble_baseline1` -- single-layer transmission at the folded target,
* :func:`assemble_baseline2` -- estimated CSI treated as exact.

Powers are in Watts and SINRs linear.  Internally every channel is divided
by ``sqrt(noise_ref)`` and every noise / interference power by
``noise_ref``, so that the SDP data are O(1) while beamforming matrices keep
their physical unit.

Index conventions are 0-based: ``W[l,k]`` is layer ``l`` of secondary
receiver ``k``; ``C1[l,k]``, ``C2[t,k]`` (receiver ``t`` overhearing the base
layer of ``k``), ``C3[j]``, ``C4[k,j]`` name the constraints.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from robustbf.linalg import numerical_rank, vectorize
from robustbf.sdp import Congruence, LinearConstraint, LmiConstraint, SdpProblem
from robustbf.sdp.io import decode_array, encode_array

RANK_ONE_RATIO = 1e-6
# relative back-off of P_I inside the robust interference LMI: the LMI is met
# only to solver tolerance, which maps to worst-case leakage up to ~1e-6 above
# P_I; the margin keeps the exact worst case below the cap
P_I_BACKOFF = 2e-6

# fault-injection switches used by the validation suite (never set in normal use)
FAULTS: set = set()


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(w):
    return 10.0 * np.log10(np.asarray(w, dtype=float)) + 30.0


@dataclass(frozen=True)
class NetworkChannels:
    """Channels of one realization.

    ``h[k]`` has length ``N_T``; ``G_hat[j]`` and ``G_true[j]`` are
    ``N_T x N_PR`` so that ``G^H W G`` is the ``N_PR x N_PR`` received
    covariance at primary receiver ``j``.
    """

    h: tuple
    G_hat: tuple
    eps: tuple
    sigma_s_sq: tuple
    sigma_pu_sq: tuple
    G_true: tuple | None = None
    n_pr: int = 2

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(np.asarray(x, dtype=complex).reshape(-1) for x in self.h))
        object.__setattr__(self, "G_hat", tuple(np.asarray(g, dtype=complex) for g in self.G_hat))
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "sigma_s_sq", tuple(float(s) for s in self.sigma_s_sq))
        object.__setattr__(self, "sigma_pu_sq", tuple(float(s) for s in self.sigma_pu_sq))
        if self.G_true is not None:
            object.__setattr__(self, "G_true", tuple(np.asarray(g, dtype=complex) for g in self.G_true))
        if self.G_hat:
            object.__setattr__(self, "n_pr", int(self.G_hat[0].shape[1]))
        K, J = len(self.h), len(self.G_hat)
        if K < 1:
            raise ValueError("need at least one secondary receiver")
        if len(self.sigma_s_sq) != K:
            raise ValueError("sigma_s_sq must have one entry per secondary receiver")
        if len(self.eps) != J or len(self.sigma_pu_sq) != J:
            raise ValueError("eps and sigma_pu_sq must have one entry per primary receiver")
        nt = self.N_T
        if any(x.shape != (nt,) for x in self.h):
            raise ValueError("all h_k must have length N_T")
        if any(g.shape != (nt, self.n_pr) for g in self.G_hat):
            raise ValueError("all G_hat_j must be N_T x N_PR")
        if J and nt <= self.n_pr:
            raise ValueError("N_T must exceed N_PR")
        if any(e < 0 for e in self.eps):
            raise ValueError("eps must be nonnegative")
        if any(s <= 0 for s in self.sigma_s_sq + self.sigma_pu_sq):
            raise ValueError("noise powers must be positive")
        if self.G_true is not None:
            if len(self.G_true) != J:
                raise ValueError("G_true must have one entry per primary receiver")
            for gt, gh, e in zip(self.G_true, self.G_hat, self.eps):
                if np.linalg.norm(gt - gh) > e * (1 + 1e-9) + 1e-300:
                    raise ValueError("G_true lies outside the error ball around G_hat")

    @property
    def K(self):
        return len(self.h)

    @property
    def J(self):
        return len(self.G_hat)

    @property
    def N_T(self):
        return self.h[0].shape[0]

    @property
    def N_PR(self):
        return self.n_pr

    def H(self, k):
        return np.outer(self.h[k], self.h[k].conj())

    @property
    def noise_ref(self):
        """Reference power used to normalize the SDP data."""
        return min(self.sigma_s_sq + self.sigma_pu_sq)

    def scaled(self, ref):
        """Channels divided by ``sqrt(ref)``, noise powers by ``ref``."""
        a = 1.0 / np.sqrt(ref)
        return NetworkChannels(
            h=tuple(a * x for x in self.h),
            G_hat=tuple(a * g for g in self.G_hat),
            eps=tuple(a * e for e in self.eps),
            sigma_s_sq=tuple(s / ref for s in self.sigma_s_sq),
            sigma_pu_sq=tuple(s / ref for s in self.sigma_pu_sq),
            G_true=None if self.G_true is None else tuple(a * g for g in self.G_true),
            n_pr=self.n_pr,
        )


@dataclass(frozen=True)
class QosSpec:
    """Per-layer targets.

    ``gamma_req[k][l]`` is the linear SINR target of layer ``l`` at
    receiver ``k`` or ``None`` when that layer carries no guarantee (it still
    gets a beamforming matrix).  ``R_eav`` is a ``K x J`` array (a scalar is
    broadcast).  ``layer_targets`` (optional) holds the nominal SINR of every
    layer, guaranteed or not; the single-layer baseline folds it.
    """

    gamma_req: tuple
    gamma_tol: float
    P_I: tuple
    R_eav: np.ndarray | float = 1.0
    layer_targets: tuple | None = None

    def __post_init__(self):
        g = tuple(tuple(None if x is None else float(x) for x in row) for row in self.gamma_req)
        object.__setattr__(self, "gamma_req", g)
        if self.layer_targets is not None:
            lt = tuple(tuple(float(x) for x in row) for row in self.layer_targets)
            if len(lt) != len(g) or any(len(a) != len(b) for a, b in zip(lt, g)):
                raise ValueError("layer_targets must match the layer structure of gamma_req")
            if any(x <= 0 for row in lt for x in row):
                raise ValueError("SINR targets must be positive")
            object.__setattr__(self, "layer_targets", lt)
        object.__setattr__(self, "P_I", tuple(float(p) for p in self.P_I))
        K, J = len(g), len(self.P_I)
        r = np.broadcast_to(np.asarray(self.R_eav, dtype=float), (K, J)).copy()
        object.__setattr__(self, "R_eav", r)
        if any(len(row) < 1 for row in g):
            raise ValueError("every receiver needs at least one layer")
        if any(x is not None and x <= 0 for row in g for x in row):
            raise ValueError("SINR targets must be positive")
        if self.gamma_tol <= 0:
            raise ValueError("gamma_tol must be positive")
        if any(p <= 0 for p in self.P_I):
            raise ValueError("interference temperatures must be positive")
        if np.any(r <= 0):
            raise ValueError("R_eav must be positive")

    @property
    def K(self):
        return len(self.gamma_req)

    @property
    def L(self):
        return [len(row) for row in self.gamma_req]

    def xi_eav(self, k, j):
        return float(2.0 ** self.R_eav[k, j] - 1.0)

    def scaled(self, ref):
        return QosSpec(self.gamma_req, self.gamma_tol, tuple(p / ref for p in self.P_I), self.R_eav,
                       self.layer_targets)


def fold_targets(gammas):
    """Single-layer SINR carrying the summed rate of ``gammas`` (linear)."""
    return float(np.prod([1.0 + g for g in gammas]) - 1.0)


@dataclass
class BeamformingSolution:
    """Transmit covariances of one scheme.  Powers in Watts."""

    W: dict
    V: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    status: str = "optimal"
    scheme: str = "optimal"
    info: dict = field(default_factory=dict)

    @property
    def total_power(self):
        return float(sum(np.trace(w).real for w in self.W.values()) + np.trace(self.V).real)

    def rank_one(self, ratio=RANK_ONE_RATIO, floor=0.0):
        """Per-(l, k) flag: ``lambda_2 / lambda_1 <= ratio`` (or negligible)."""
        out = {}
        for key, w in self.W.items():
            lam = np.linalg.eigvalsh(0.5 * (w + w.conj().T))
            out[key] = bool(lam[-1] <= floor or lam[-2] <= ratio * lam[-1]) if lam.size > 1 else True
        return out

    def ranks(self, tol=1e-7, floor=0.0):
        return {key: numerical_rank(w, tol, floor) for key, w in self.W.items()}

    def beam(self, l, k):
        """Principal beamforming vector ``sqrt(lambda_1) u_1`` of ``W[l,k]``."""
        lam, vec = np.linalg.eigh(0.5 * (self.W[l, k] + self.W[l, k].conj().T))
        return np.sqrt(max(lam[-1], 0.0)) * vec[:, -1]

    def variables(self):
        """Primal values keyed by SDP variable name."""
        out = {f"W[{l},{k}]": w for (l, k), w in self.W.items()}
        out["V"] = self.V
        for j, w in enumerate(np.atleast_1d(self.omega)):
            out[f"omega[{j}]"] = float(w)
        for (k, j), v in np.ndenumerate(np.atleast_2d(self.delta)):
            out[f"delta[{k},{j}]"] = float(v)
        return out

    def to_json(self):
        mat = encode_array
        return json.dumps({
            "scheme": self.scheme,
            "status": self.status,
            "total_power_w": self.total_power,
            "W": [{"l": l, "k": k, "matrix": mat(w)} for (l, k), w in sorted(self.W.items(), key=lambda t: (t[0][1], t[0][0]))],
            "V": mat(self.V),
            "omega": np.asarray(self.omega, dtype=float).tolist(),
            "delta": np.asarray(self.delta, dtype=float).tolist(),
        }, indent=1)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        mat = decode_array
        return cls(
            W={(e["l"], e["k"]): mat(e["matrix"]) for e in d["W"]},
            V=mat(d["V"]),
            omega=np.asarray(d["omega"], dtype=float),
            delta=np.asarray(d["delta"], dtype=float),
            status=d["status"],
            scheme=d["scheme"],
        )


# -- LMI builders ------------------------------------------------------------------

def _check_lmi_inputs(G_hat, eps):
    G_hat = np.asarray(G_hat, dtype=complex)
    if G_hat.ndim != 2:
        raise ValueError("G_hat must be a matrix")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return G_hat


def build_c3bar_lmi(W_refs, V_ref, omega_ref, G_hat_j, eps_j, P_I_j, name="C3", scalar_dirs=None,
                    balanced=True):
    """Robust interference-temperature LMI of size ``N_PR * N_T + 1``.

    ``omega * diag(I, -eps^2) + diag(0, P_I) - U^H (I kron (V + sum W)) U >= 0``
    with ``U = [I, vec(G_hat)]``.  The Kronecker lift is expanded into one
    congruence per receive antenna.

    ``W_refs`` names block variables; ``scalar_dirs`` maps scalar variable
    names to fixed matrices ``D`` (the term is then ``-P * U^H (I kron D) U``).

    With ``balanced`` the matrix is pre- and post-multiplied by
    ``diag(eps I, 1)``.  The feasible set is the same, but an eigenvalue
    error ``eta`` then bounds the worst-case interference excess by about
    ``2 eta`` instead of ``(1 + eps^2) eta``.
    """
    G_hat = _check_lmi_inputs(G_hat_j, eps_j)
    nt, npr = G_hat.shape
    n = nt * npr
    s = eps_j if balanced else 1.0
    U = np.hstack([s * np.eye(n), vectorize(G_hat)])
    Bs = [U[q * nt:(q + 1) * nt] for q in range(npr)]
    terms = {}
    for ref in list(W_refs) + [V_ref]:
        terms[ref] = [Congruence(B, -1.0) for B in Bs]
    for ref, D in (scalar_dirs or {}).items():
        terms[ref] = -sum(B.conj().T @ D @ B for B in Bs)
    cw = s**2 * np.eye(n + 1)
    cw[n, n] = -eps_j**2
    terms[omega_ref] = cw
    const = np.zeros((n + 1, n + 1))
    const[n, n] = P_I_j
    return LmiConstraint(name, n + 1, const, terms)


def build_c4bar_lmi(W1k_ref, V_ref, delta_ref, G_hat_j, eps_j, xi, sigma_pu_sq_j, name="C4", w_dir=None,
                    balanced=True):
    """Robust eavesdropping LMI of size ``N_PR + N_T``.

    ``diag((xi s2 - delta) I, (delta/eps^2) I) + xi R^H V R - R^H W R >= 0``
    with ``R = [G_hat, I]``.  With ``w_dir`` given, ``W1k_ref`` is a scalar
    power multiplying the fixed matrix ``w_dir``.  ``balanced`` applies the
    congruence ``diag(I, eps I)`` (same feasible set, better scaling).
    """
    if xi <= 0:
        raise ValueError("xi must be positive (R_eav > 0)")
    G_hat = _check_lmi_inputs(G_hat_j, eps_j)
    nt, npr = G_hat.shape
    s = eps_j if balanced else 1.0
    R = np.hstack([G_hat, s * np.eye(nt)])
    d = npr + nt
    terms = {V_ref: [Congruence(R, xi)]}
    sign = 1.0 if "c4-sign-flip" in FAULTS else -1.0
    if w_dir is None:
        terms[W1k_ref] = [Congruence(R, sign)]
    else:
        terms[W1k_ref] = sign * (R.conj().T @ w_dir @ R)
    terms[delta_ref] = np.diag(np.r_[-np.ones(npr), np.full(nt, s**2 / eps_j**2)]).astype(complex)
    const = np.zeros((d, d))
    const[:npr, :npr] = xi * sigma_pu_sq_j * np.eye(npr)
    return LmiConstraint(name, d, const, terms)


def build_c4_nonrobust_lmi(W1k_ref, V_ref, G_hat_j, xi, sigma_pu_sq_j, name="C4", w_dir=None):
    """``xi (G^H V G + s2 I) - G^H W G >= 0`` at the estimate (size ``N_PR``)."""
    G = np.asarray(G_hat_j, dtype=complex)
    npr = G.shape[1]
    terms = {V_ref: [Congruence(G, xi)]}
    if w_dir is None:
        terms[W1k_ref] = [Congruence(G, -1.0)]
    else:
        terms[W1k_ref] = -(G.conj().T @ w_dir @ G)
    return LmiConstraint(name, npr, xi * sigma_pu_sq_j * np.eye(npr), terms)


# -- assembly ----------------------------------------------------------------------

def w_name(l, k):
    return f"W[{l},{k}]"


def p_name(l, k):
    return f"P[{l},{k}]"


class _Beams:
    """Uniform access to the transmit covariance of each (l, k).

    Either a PSD block variable or a scalar power times a fixed direction.
    """

    def __init__(self, L, directions=None):
        self.L = L
        self.dirs = directions

    def keys(self):
        return [(l, k) for k in range(len(self.L)) for l in range(self.L[k])]

    def name(self, l, k):
        return w_name(l, k) if self.dirs is None else p_name(l, k)

    def lin(self, terms, l, k, M, weight=1.0):
        n = self.name(l, k)
        if self.dirs is None:
            c = weight * M
        else:
            c = weight * float(np.real(np.vdot(M, self.dirs[l, k])))
        terms[n] = terms[n] + c if n in terms else c


def _build(ch: NetworkChannels, q: QosSpec, robust=True, directions=None):
    if q.K != ch.K or len(q.P_I) != ch.J:
        raise ValueError("QosSpec does not match the channel dimensions")
    ref = ch.noise_ref
    chn, qn = ch.scaled(ref), q.scaled(ref)
    L = q.L
    beams = _Beams(L, directions)
    p = SdpProblem()
    nt = ch.N_T
    for (l, k) in beams.keys():
        if directions is None:
            p.add_block(w_name(l, k), nt)
        else:
            p.add_scalar(p_name(l, k))
    p.add_block("V", nt)
    robust_j = [robust and chn.eps[j] > 0 for j in range(ch.J)]
    for j in range(ch.J):
        if robust_j[j]:
            p.add_scalar(f"omega[{j}]")
    for k in range(ch.K):
        for j in range(ch.J):
            if robust_j[j]:
                p.add_scalar(f"delta[{k},{j}]")
    obj = {}
    for (l, k) in beams.keys():
        beams.lin(obj, l, k, np.eye(nt))
    obj["V"] = np.eye(nt)
    p.objective = obj

    H = [chn.H(k) for k in range(ch.K)]
    # C1: SINR of layer l at receiver k, upper layers of k and all other users interfere
    for k in range(ch.K):
        for l in range(L[k]):
            g = qn.gamma_req[k][l]
            if g is None:
                continue
            t = {}
            beams.lin(t, l, k, H[k])
            for (l2, k2) in beams.keys():
                if k2 != k or l2 > l:
                    beams.lin(t, l2, k2, H[k], -g)
            t["V"] = -g * H[k]
            p.add(LinearConstraint(f"C1[{l},{k}]", t, ">=", g * chn.sigma_s_sq[k]))
    # C2: receiver t overhearing the base layer of k
    gt = qn.gamma_tol
    for k in range(ch.K):
        for t_ in range(ch.K):
            if t_ == k:
                continue
            t = {}
            beams.lin(t, 0, k, H[t_])
            for (l2, k2) in beams.keys():
                if (k2 != k and k2 != t_) or (k2 == k and l2 >= 1):
                    beams.lin(t, l2, k2, H[t_], -gt)
            t["V"] = -gt * H[t_]
            p.add(LinearConstraint(f"C2[{t_},{k}]", t, "<=", gt * chn.sigma_s_sq[t_]))
    # C3 / C4 per primary receiver
    for j in range(ch.J):
        G = chn.G_hat[j]
        if robust_j[j]:
            cap = qn.P_I[j] * (1.0 - P_I_BACKOFF)
            if directions is None:
                p.add(build_c3bar_lmi([w_name(l, k) for (l, k) in beams.keys()], "V", f"omega[{j}]",
                                      G, chn.eps[j], cap, name=f"C3[{j}]"))
            else:
                p.add(build_c3bar_lmi([], "V", f"omega[{j}]", G, chn.eps[j], cap, name=f"C3[{j}]",
                                      scalar_dirs={p_name(l, k): directions[l, k] for (l, k) in beams.keys()}))
        else:
            GG = G @ G.conj().T
            t = {}
            for (l, k) in beams.keys():
                beams.lin(t, l, k, GG)
            t["V"] = GG
            p.add(LinearConstraint(f"C3[{j}]", t, "<=", qn.P_I[j]))
        for k in range(ch.K):
            xi = q.xi_eav(k, j)
            wd = None if directions is None else directions[0, k]
            if robust_j[j]:
                p.add(build_c4bar_lmi(beams.name(0, k), "V", f"delta[{k},{j}]", G, chn.eps[j], xi,
                                      chn.sigma_pu_sq[j], name=f"C4[{k},{j}]", w_dir=wd))
            else:
                p.add(build_c4_nonrobust_lmi(beams.name(0, k), "V", G, xi, chn.sigma_pu_sq[j],
                                             name=f"C4[{k},{j}]", w_dir=wd))
    return p


def assemble_relaxed_problem(ch: NetworkChannels, q: QosSpec) -> SdpProblem:
    """Robust problem with the rank constraint dropped."""
    return _build(ch, q, robust=True)


def assemble_baseline2(ch: NetworkChannels, q: QosSpec) -> SdpProblem:
    """Non-robust variant that trusts the estimate ``G_hat``."""
    return _build(ch, q, robust=False)


def baseline1_qos(q: QosSpec) -> QosSpec:
    """One layer per receiver carrying the folded target.

    Folds ``layer_targets`` when given, otherwise the guaranteed layers.
    """
    if q.layer_targets is not None:
        # the single layer carries the whole video, every layer's rate
        g = tuple((fold_targets(row),) for row in q.layer_targets)
    else:
        g = tuple((fold_targets([x for x in row if x is not None]),) for row in q.gamma_req)
    return QosSpec(g, q.gamma_tol, q.P_I, q.R_eav)


def assemble_baseline1(ch: NetworkChannels, q: QosSpec) -> SdpProblem:
    return _build(ch, baseline1_qos(q), robust=True)


def assemble_power_scaling_problem(directions: dict, ch: NetworkChannels, q: QosSpec, robust=True) -> SdpProblem:
    """Powers ``P[l,k] >= 0`` along fixed unit-trace rank-one ``directions[l, k]``."""
    for key in _Beams(q.L).keys():
        if key not in directions:
            raise ValueError(f"missing direction for {key}")
        d = np.asarray(directions[key])
        if abs(np.trace(d).real - 1.0) > 1e-9:
            raise ValueError(f"direction {key} must have unit trace")
        if numerical_rank(d, 1e-9) > 1:
            raise ValueError(f"direction {key} must be rank one")
    return _build(ch, q, robust=robust, directions={k: np.asarray(v, dtype=complex) for k, v in directions.items()})


def solution_from_sdp(sol, ch: NetworkChannels, q: QosSpec, scheme="optimal", directions=None):
    """Map an :class:`~robustbf.sdp.SdpSolution` back to a :class:`BeamformingSolution`."""
    L = q.L
    nt = ch.N_T
    W = {}
    for k in range(ch.K):
        for l in range(L[k]):
            if directions is None:
                W[l, k] = sol.primal[w_name(l, k)]
            else:
                W[l, k] = max(sol.primal[p_name(l, k)], 0.0) * directions[l, k]
    omega = np.array([sol.primal.get(f"omega[{j}]", 0.0) for j in range(ch.J)])
    delta = np.array([[sol.primal.get(f"delta[{k},{j}]", 0.0) for j in range(ch.J)] for k in range(ch.K)])
    delta = delta.reshape(ch.K, ch.J)
    return BeamformingSolution(W=W, V=sol.primal.get("V", np.zeros((nt, nt))), omega=omega, delta=delta,
                               status=sol.status, scheme=scheme,
                               info={"iterations": sol.iterations, "solve_time_ms": sol.solve_time_ms})


def empty_solution(ch, q, status, scheme):
    nt = ch.N_T
    W = {(l, k): np.zeros((nt, nt), complex) for k in range(ch.K) for l in range(q.L[k])}
    return BeamformingSolution(W=W, V=np.zeros((nt, nt), complex), omega=np.zeros(ch.J),
                               delta=np.zeros((ch.K, ch.J)), status=status, scheme=scheme)


__all__ = [
    "NetworkChannels", "QosSpec", "BeamformingSolution", "build_c3bar_lmi", "build_c4bar_lmi",
    "build_c4_nonrobust_lmi", "assemble_relaxed_problem", "assemble_power_scaling_problem",
    "assemble_baseline1", "assemble_baseline2", "baseline1_qos", "fold_targets", "solution_from_sdp",
    "db_to_linear", "linear_to_db", "dbm_to_watt", "watt_to_dbm",
]
