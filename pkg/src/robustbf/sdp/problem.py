"""Block-structured Hermitian SDP model and its compilation to cone form.

Decision variables are Hermitian blocks (each implicitly constrained PSD)
and nonnegative real scalars.  Constraints are scalar linear relations or
LMIs ``F0 + sum_v map_v(v) >= 0``, where block terms are sums of
congruences ``w * B^H X B`` and scalar terms multiply a fixed Hermitian
matrix.

:meth:`SdpProblem.compile` lowers the model to

    minimize    c^T x
    subject to  G x + s = h,   A x = b,   s in K

with ``x`` the concatenated :func:`~robustbf.linalg.svec` coordinates of the
blocks followed by the scalars, and ``K`` a product of one nonnegative
orthant and Hermitian PSD cones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from robustbf.linalg import hermitian_basis, is_hermitian, svec, svec_dim

Coef = Union[float, np.ndarray]


class ProblemError(ValueError):
    pass


@dataclass
class Congruence:
    """The linear map ``X -> weight * B^H X B``."""

    B: np.ndarray
    weight: float = 1.0

    def apply(self, x):
        return self.weight * (self.B.conj().T @ x @ self.B)


@dataclass
class LinearConstraint:
    """``sum_v <coef_v, v>  (relation)  rhs`` with relation in ``>=, <=, ==``.

    For a block variable the coefficient is a Hermitian matrix and the
    pairing is ``Re Tr(coef X)``; for a scalar it is a float.
    """

    name: str
    terms: dict
    relation: str
    rhs: float = 0.0

    def __post_init__(self):
        if self.relation not in (">=", "<=", "=="):
            raise ProblemError(f"{self.name}: unknown relation {self.relation!r}")


@dataclass
class LmiConstraint:
    """``constant + sum_v term_v(v) >= 0`` (PSD) in a cone of size ``dim``.

    ``terms[block]`` is a list of :class:`Congruence`; ``terms[scalar]`` is a
    Hermitian ``dim x dim`` matrix multiplied by the scalar.
    """

    name: str
    dim: int
    constant: np.ndarray
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ProblemError(f"{self.name}: LMI dimension must be >= 1")
        self.constant = np.asarray(self.constant, dtype=complex)
        if self.constant.shape != (self.dim, self.dim):
            raise ProblemError(f"{self.name}: constant has shape {self.constant.shape}")


@dataclass
class SdpProblem:
    blocks: dict = field(default_factory=dict)      # name -> dim
    scalars: list = field(default_factory=list)     # nonnegative scalar names
    objective: dict = field(default_factory=dict)   # name -> coefficient
    constraints: list = field(default_factory=list)

    def add_block(self, name, dim):
        self._check_new(name)
        self.blocks[name] = int(dim)
        return name

    def add_scalar(self, name):
        self._check_new(name)
        self.scalars.append(name)
        return name

    def _check_new(self, name):
        if name in self.blocks or name in self.scalars:
            raise ProblemError(f"duplicate variable {name!r}")

    def add(self, constraint):
        self.constraints.append(constraint)
        return constraint

    # -- layout -----------------------------------------------------------
    def layout(self):
        """Map variable name -> (offset, length) inside ``x``."""
        out, off = {}, 0
        for name, n in self.blocks.items():
            out[name] = (off, svec_dim(n))
            off += svec_dim(n)
        for name in self.scalars:
            out[name] = (off, 1)
            off += 1
        return out, off

    def validate(self):
        names = set(self.blocks) | set(self.scalars)
        seen = set()
        for con in self.constraints:
            if con.name in seen:
                raise ProblemError(f"duplicate constraint name {con.name!r}")
            seen.add(con.name)
            for v, coef in con.terms.items():
                if v not in names:
                    raise ProblemError(f"{con.name}: unknown variable {v!r}")
                if isinstance(con, LmiConstraint):
                    if v in self.blocks:
                        for t in coef:
                            if t.B.shape != (self.blocks[v], con.dim):
                                raise ProblemError(
                                    f"{con.name}: congruence for {v} has shape {t.B.shape}")
                    elif np.shape(coef) != (con.dim, con.dim) or not is_hermitian(coef):
                        raise ProblemError(f"{con.name}: bad coefficient for {v}")
                elif v in self.blocks:
                    if np.shape(coef) != (self.blocks[v],) * 2 or not is_hermitian(coef):
                        raise ProblemError(f"{con.name}: coefficient for {v} must be Hermitian")
            if isinstance(con, LmiConstraint) and not is_hermitian(con.constant):
                raise ProblemError(f"{con.name}: constant is not Hermitian")
        for v, coef in self.objective.items():
            if v not in names:
                raise ProblemError(f"objective: unknown variable {v!r}")
            if v in self.blocks and not is_hermitian(coef):
                raise ProblemError(f"objective coefficient for {v} must be Hermitian")

    def linear_coefficients(self, terms):
        """Dense row ``a`` with ``a @ x == sum <coef, v>``."""
        lay, nx = self.layout()
        row = np.zeros(nx)
        for v, coef in terms.items():
            off, ln = lay[v]
            if v in self.blocks:
                row[off:off + ln] += svec(np.asarray(coef, dtype=complex))
            else:
                row[off] += float(np.real(coef))
        return row

    def lmi_matrix(self, con):
        """Real matrix ``M`` (``dim**2 x nx``) with ``svec(sum term_v(v)) == M @ x``."""
        lay, nx = self.layout()
        out = np.zeros((svec_dim(con.dim), nx))
        for v, coef in con.terms.items():
            off, ln = lay[v]
            if v in self.blocks:
                basis = hermitian_basis(self.blocks[v])
                acc = np.zeros((ln, con.dim, con.dim), dtype=complex)
                for t in coef:
                    acc += t.weight * (t.B.conj().T @ basis @ t.B)
                out[:, off:off + ln] += svec(acc).T
            else:
                out[:, off] += svec(np.asarray(coef, dtype=complex))
        return out

    def compile(self):
        self.validate()
        return StandardForm.from_problem(self)


@dataclass
class ConeBlock:
    """One PSD cone ``smat(h - G x) >= 0`` of Hermitian dimension ``dim``."""

    name: str
    kind: str          # "block" (a variable is PSD) or "lmi"
    dim: int
    G: np.ndarray      # (dim**2, nx)
    h: np.ndarray      # (dim**2,)


@dataclass
class StandardForm:
    nx: int
    c: np.ndarray
    lp_G: np.ndarray                 # (nl, nx)
    lp_h: np.ndarray
    lp_names: list                   # (kind, name) per LP row
    psd: list                        # ConeBlock
    A: np.ndarray                    # (p, nx)
    b: np.ndarray
    eq_names: list
    layout: dict

    @classmethod
    def from_problem(cls, p):
        lay, nx = p.layout()
        c = p.linear_coefficients(p.objective)
        lp_rows, lp_h, lp_names = [], [], []
        eq_rows, eq_b, eq_names = [], [], []
        psd = []
        for name, n in p.blocks.items():
            off, ln = lay[name]
            G = np.zeros((ln, nx))
            G[:, off:off + ln] = -np.eye(ln)
            psd.append(ConeBlock(name, "block", n, G, np.zeros(ln)))
        for name in p.scalars:
            row = np.zeros(nx)
            row[lay[name][0]] = -1.0
            lp_rows.append(row)
            lp_h.append(0.0)
            lp_names.append(("scalar", name))
        for con in p.constraints:
            if isinstance(con, LmiConstraint):
                M = p.lmi_matrix(con)
                psd.append(ConeBlock(con.name, "lmi", con.dim, -M, svec(con.constant)))
                continue
            a = p.linear_coefficients(con.terms)
            if con.relation == "==":
                eq_rows.append(a)
                eq_b.append(con.rhs)
                eq_names.append(con.name)
            elif con.relation == ">=":
                lp_rows.append(-a)
                lp_h.append(-con.rhs)
                lp_names.append(("linear", con.name))
            else:
                lp_rows.append(a)
                lp_h.append(con.rhs)
                lp_names.append(("linear", con.name))
        return cls(
            nx=nx,
            c=c,
            lp_G=np.array(lp_rows).reshape(len(lp_rows), nx),
            lp_h=np.array(lp_h, dtype=float),
            lp_names=lp_names,
            psd=psd,
            A=np.array(eq_rows).reshape(len(eq_rows), nx),
            b=np.array(eq_b, dtype=float),
            eq_names=eq_names,
            layout=lay,
        )

    @property
    def degree(self):
        return len(self.lp_h) + sum(cb.dim for cb in self.psd)


def constraint_value(p: SdpProblem, con, values):
    """Signed slack of ``con`` at ``values`` (negative means violated).

    Linear constraints give ``lhs - rhs`` oriented so that feasibility is
    ``>= 0`` (``-|lhs - rhs|`` for equalities); LMIs give the smallest
    eigenvalue of the constraint matrix.
    """
    if isinstance(con, LmiConstraint):
        m = con.constant.copy()
        for v, coef in con.terms.items():
            if v in p.blocks:
                for t in coef:
                    m = m + t.apply(values[v])
            else:
                m = m + float(values[v]) * np.asarray(coef)
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    lhs = 0.0
    for v, coef in con.terms.items():
        if v in p.blocks:
            lhs += float(np.real(np.vdot(np.asarray(coef), values[v])))
        else:
            lhs += float(np.real(coef)) * float(values[v])
    if con.relation == ">=":
        return lhs - con.rhs
    if con.relation == "<=":
        return con.rhs - lhs
    return -abs(lhs - con.rhs)


def constraint_scale(p: SdpProblem, con, values):
    """Magnitude used to make :func:`constraint_value` relative."""
    if isinstance(con, LmiConstraint):
        s = np.linalg.norm(con.constant, 2)
        for v, coef in con.terms.items():
            if v in p.blocks:
                s += sum(abs(t.weight) * np.linalg.norm(t.B, 2) ** 2 for t in coef) \
                    * np.linalg.norm(values[v], 2)
            else:
                s += np.linalg.norm(coef, 2) * abs(float(values[v]))
        return max(1.0, float(s))
    s = abs(con.rhs)
    for v, coef in con.terms.items():
        if v in p.blocks:
            s += np.linalg.norm(coef, 2) * np.trace(np.abs(values[v])).real
        else:
            s += abs(float(np.real(coef)) * float(values[v]))
    return max(1.0, float(s))
