"""Independent reference: the same SdpProblem handed to cvxpy (tests only)."""
import numpy as np

from robustbf.sdp.problem import LmiConstraint

try:
    import cvxpy as cp
except ImportError:  # pragma: no cover
    cp = None


def solve_with_cvxpy(p, solvers=("CLARABEL", "CVXOPT", "SCS")):
    """Return ``(status, objective, values)`` from cvxpy."""
    var = {}
    cons = []
    for name, n in p.blocks.items():
        var[name] = cp.Variable((n, n), hermitian=True)
        cons.append(var[name] >> 0)
    for name in p.scalars:
        var[name] = cp.Variable(nonneg=True)

    def lin(terms):
        e = 0
        for v, coef in terms.items():
            if v in p.blocks:
                e = e + cp.real(cp.trace(np.asarray(coef) @ var[v]))
            else:
                e = e + float(np.real(coef)) * var[v]
        return e

    for con in p.constraints:
        if isinstance(con, LmiConstraint):
            m = con.constant
            for v, coef in con.terms.items():
                if v in p.blocks:
                    for t in coef:
                        m = m + t.weight * (t.B.conj().T @ var[v] @ t.B)
                else:
                    m = m + var[v] * np.asarray(coef)
            cons.append((m + m.H) / 2 >> 0)
        elif con.relation == ">=":
            cons.append(lin(con.terms) >= con.rhs)
        elif con.relation == "<=":
            cons.append(lin(con.terms) <= con.rhs)
        else:
            cons.append(lin(con.terms) == con.rhs)
    prob = cp.Problem(cp.Minimize(lin(p.objective)), cons)
    for solver in solvers:
        try:
            prob.solve(solver=solver)
        except cp.error.SolverError:
            continue
        if prob.status in ("optimal", "infeasible"):
            break
    vals = {k: (v.value if v.value is not None else None) for k, v in var.items()}
    return prob.status, prob.value, vals
