"""JSON debug dump of :class:`SdpProblem` instances.

Complex arrays are stored as ``[re, im]`` pairs of nested lists so that
the file can be read by any external tool.
"""
from __future__ import annotations

import json

import numpy as np

from robustbf.sdp.problem import Congruence, LinearConstraint, LmiConstraint, SdpProblem

FORMAT = "robustbf-sdp/1"


def encode_array(a):
    a = np.asarray(a)
    return [np.real(a).tolist(), np.imag(a).tolist()]


def decode_array(v):
    re, im = (np.asarray(x, dtype=float) for x in v)
    out = np.empty(re.shape, dtype=complex)
    out.real, out.imag = re, im   # keeps signed zeros, unlike re + 1j * im
    return out


def _coef(v, blocks):
    def enc(name, c):
        if isinstance(c, list):
            return {"congruences": [{"B": encode_array(t.B), "weight": t.weight} for t in c]}
        if name in blocks or np.ndim(c) == 2:
            return {"matrix": encode_array(c)}
        return {"scalar": float(np.real(c))}
    return {name: enc(name, c) for name, c in v.items()}


def _decode_terms(terms):
    out = {}
    for name, t in terms.items():
        if "congruences" in t:
            out[name] = [Congruence(decode_array(c["B"]), float(c["weight"])) for c in t["congruences"]]
        elif "matrix" in t:
            out[name] = decode_array(t["matrix"])
        else:
            out[name] = float(t["scalar"])
    return out


def problem_to_dict(p: SdpProblem) -> dict:
    cons = []
    for c in p.constraints:
        if isinstance(c, LmiConstraint):
            cons.append({"type": "lmi", "name": c.name, "dim": c.dim, "constant": encode_array(c.constant),
                         "terms": _coef(c.terms, p.blocks)})
        else:
            cons.append({"type": "linear", "name": c.name, "relation": c.relation, "rhs": float(c.rhs),
                         "terms": _coef(c.terms, p.blocks)})
    return {"format": FORMAT, "blocks": dict(p.blocks), "scalars": list(p.scalars),
            "objective": _coef(p.objective, p.blocks), "constraints": cons}


def problem_from_dict(d: dict) -> SdpProblem:
    if d.get("format") != FORMAT:
        raise ValueError(f"unsupported format {d.get('format')!r}")
    p = SdpProblem()
    for name, n in d["blocks"].items():
        p.add_block(name, n)
    for name in d["scalars"]:
        p.add_scalar(name)
    p.objective = _decode_terms(d["objective"])
    for c in d["constraints"]:
        if c["type"] == "lmi":
            p.add(LmiConstraint(c["name"], c["dim"], decode_array(c["constant"]), _decode_terms(c["terms"])))
        else:
            p.add(LinearConstraint(c["name"], _decode_terms(c["terms"]), c["relation"], c["rhs"]))
    return p


def dump_problem(p: SdpProblem, fp):
    json.dump(problem_to_dict(p), fp)


def load_problem(fp) -> SdpProblem:
    return problem_from_dict(json.load(fp))


def dumps_problem(p: SdpProblem) -> str:
    return json.dumps(problem_to_dict(p))


def loads_problem(s: str) -> SdpProblem:
    return problem_from_dict(json.loads(s))


def standard_form_to_dict(sf) -> dict:
    """Compiled cone program (all data real, cones in ``svec`` coordinates)."""
    return {
        "format": FORMAT + "-standard",
        "nx": sf.nx,
        "c": sf.c.tolist(),
        "lp": {"G": sf.lp_G.tolist(), "h": sf.lp_h.tolist(), "names": [list(n) for n in sf.lp_names]},
        "psd": [{"name": cb.name, "kind": cb.kind, "dim": cb.dim, "G": cb.G.tolist(), "h": cb.h.tolist()}
                for cb in sf.psd],
        "eq": {"A": sf.A.tolist(), "b": sf.b.tolist(), "names": list(sf.eq_names)},
        "layout": {k: list(v) for k, v in sf.layout.items()},
    }
