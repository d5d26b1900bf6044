"""JSON schemas (versioned "loopgrad/1") for every exchange format.

Complex scalars are [re, im] pairs, matrices are row-major nested lists of
such pairs, all floats IEEE-754 doubles.  Loaders validate through the
ordinary constructors, so a file violating e.g. the twist eigenspace
constraint fails with the same structured errors as programmatic use.
"""

from __future__ import annotations

import json

import numpy as np

from . import gradation, lie_core, loop_algebra
from .errors import MathematicalRejection

SCHEMA = "loopgrad/1"


def _c2j(z):
    z = complex(z)
    return [z.real, z.imag]


def _j2c(pair):
    return complex(pair[0], pair[1])


def _vec2j(v):
    return [_c2j(z) for z in np.asarray(v, dtype=complex)]


def _j2vec(data):
    return np.array([_j2c(p) for p in data], dtype=complex)


def _mat2j(m):
    return [_vec2j(row) for row in np.asarray(m, dtype=complex)]


def _j2mat(data):
    return np.array([[_j2c(p) for p in row] for row in data], dtype=complex)


def _expect(data, kind):
    if data.get("schema") != SCHEMA:
        raise MathematicalRejection(
            f"unsupported schema {data.get('schema')!r}; expected {SCHEMA}")
    if data.get("kind") != kind:
        raise MathematicalRejection(
            f"expected kind {kind!r}, found {data.get('kind')!r}")


# ---------------------------------------------------------------------------
# algebras, elements, automorphisms
# ---------------------------------------------------------------------------

def algebra_to_json(alg):
    triples = []
    c = alg.structure_constants
    idx = np.argwhere(np.abs(c) > 0)
    for i, j, k in idx:
        triples.append([int(i), int(j), int(k),
                        float(c[i, j, k].real), float(c[i, j, k].imag)])
    return {
        "schema": SCHEMA,
        "kind": "algebra",
        "label": alg.label,
        "dim": alg.dim,
        "defining_dim": alg.defining_dim,
        "basis_labels": list(alg.basis_labels),
        "structure_constants": triples,
        "bracket_constant": alg.bracket_constant,
    }


def algebra_from_json(data):
    _expect(data, "algebra")
    alg = lie_core.build_algebra(data["label"])
    if alg.dim != data["dim"]:
        raise MathematicalRejection(
            f"algebra {data['label']} has dim {alg.dim}, file says "
            f"{data['dim']}")
    return alg


def element_to_json(x):
    return {
        "schema": SCHEMA,
        "kind": "algebra_element",
        "algebra": x.algebra.label,
        "coeffs": _vec2j(x.coeffs),
    }


def element_from_json(data):
    _expect(data, "algebra_element")
    alg = lie_core.build_algebra(data["algebra"])
    return lie_core.AlgebraElement(alg, _j2vec(data["coeffs"]))


def automorphism_to_json(a):
    out = {
        "schema": SCHEMA,
        "kind": "automorphism",
        "algebra": a.algebra.label,
        "matrix": _mat2j(a.matrix),
    }
    if a.realization is not None:
        out["realization"] = {
            "outer": a.realization.outer,
            "group_matrix": _mat2j(a.realization.matrix),
        }
    return out


def automorphism_from_json(data):
    _expect(data, "automorphism")
    alg = lie_core.build_algebra(data["algebra"])
    realization = None
    if "realization" in data:
        realization = lie_core.GroupRealization(
            data["realization"]["outer"],
            _j2mat(data["realization"]["group_matrix"]))
    return lie_core.AlgebraAutomorphism(alg, _j2mat(data["matrix"]),
                                        realization)


# ---------------------------------------------------------------------------
# loop elements, fields, operators
# ---------------------------------------------------------------------------

def twist_to_json(twist):
    return {
        "algebra": twist.algebra.label,
        "K": twist.K,
        "automorphism": automorphism_to_json(twist.automorphism),
    }


def twist_from_json(data, tol=1e-9):
    alg = lie_core.build_algebra(data["algebra"])
    a = automorphism_from_json(data["automorphism"])
    return loop_algebra.TwistData(alg, a, data["K"], tol=tol)


def loop_element_to_json(xi):
    out = twist_to_json(xi.twist)
    out.update({
        "schema": SCHEMA,
        "kind": "loop_element",
        "modes": [{"k": k, "coeffs": _vec2j(xi.modes[k])}
                  for k in xi.support()],
    })
    return out


def loop_element_from_json(data, tol=1e-9):
    _expect(data, "loop_element")
    twist = twist_from_json(data, tol=tol)
    modes = {m["k"]: _j2vec(m["coeffs"]) for m in data["modes"]}
    return loop_algebra.make_loop_element(twist, modes, tol=tol)


def field_to_json(X):
    return {"K": X.K,
            "modes": [{"j": j, "c": _c2j(c)}
                      for j, c in sorted(X.modes.items())]}


def field_from_json(data):
    return gradation.VectorFieldK(
        data["K"], {m["j"]: _j2c(m["c"]) for m in data["modes"]})


def grading_operator_to_json(Q):
    out = twist_to_json(Q.twist)
    out.update({
        "schema": SCHEMA,
        "kind": "grading_operator",
        "field": field_to_json(Q.X),
        "eta_modes": [{"k": k, "coeffs": _vec2j(Q.eta.modes[k])}
                      for k in Q.eta.support()],
    })
    return out


def grading_operator_from_json(data, tol=1e-9):
    _expect(data, "grading_operator")
    twist = twist_from_json(data, tol=tol)
    X = field_from_json(data["field"])
    eta = loop_algebra.make_loop_element(
        twist, {m["k"]: _j2vec(m["coeffs"]) for m in data["eta_modes"]},
        tol=tol)
    return gradation.GradingOperator(X, eta)


def lift_to_json(f):
    return {"K": f.K, "rotation": f.rotation,
            "modes": [{"j": j, "c": _c2j(c)}
                      for j, c in sorted(f.periodic_modes.items())]}


def lift_from_json(data):
    return loop_algebra.CircleDiffeoLift(
        data["K"], data["rotation"],
        {m["j"]: _j2c(m["c"]) for m in data["modes"]})


# ---------------------------------------------------------------------------
# result reports
# ---------------------------------------------------------------------------

def gradation_table_to_json(table):
    entries = []
    for degree, basis in table.entries:
        entries.append({
            "degree": int(degree),
            "dim": len(basis),
            "basis": [[{"k": k, "coeffs": _vec2j(b.modes[k])}
                       for k in b.support()] for b in basis],
        })
    return {
        "schema": SCHEMA,
        "kind": "gradation_table",
        "window": table.window,
        "twist": twist_to_json(table.twist),
        "entries": entries,
        "residuals": {str(d): r for d, r in sorted(table.residuals.items())},
    }


def normalization_to_json(result):
    mono = result.monodromy
    return {
        "schema": SCHEMA,
        "kind": "normalization",
        "algebra": result.algebra.label,
        "K_prime": result.K_prime,
        "kappa": result.kappa,
        "a_prime": automorphism_to_json(result.a_prime),
        "integrality_residual": result.integrality_residual,
        "order_residual": result.order_residual,
        "flipped": result.flipped,
        "dims": list(result.dims),
        "semisimple_ok": result.semisimple_ok,
        "monodromy": _mat2j(mono.g.matrix),
        "conjugating_lift": lift_to_json(result.rectification.f),
        "diagnostics": {
            "pushforward_residual":
                result.rectification.pushforward_residual,
            "quadrature_error": result.rectification.quadrature_error,
            "ode_residual": mono.ode_residual,
            "det_drift": mono.det_drift,
            "monodromy_consistency": mono.consistency_residual,
            "shift_residual": result.shift_residual,
        },
    }


def classification_to_json(report):
    return {
        "schema": SCHEMA,
        "kind": "classification",
        "algebra": report.algebra,
        "K": report.K,
        "r": report.r,
        "oracle_count": report.oracle_count,
        "oracle_agreement": report.oracle_agreement,
        "entries": [{
            "s": list(e.label.s),
            "r": e.label.r,
            "order": e.order,
            "dims": list(e.dims),
        } for e in report.entries],
    }


def dump(data, path=None):
    text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if path is None:
        return text
    with open(path, "w") as fh:
        fh.write(text)
    return text


def load(path):
    with open(path) as fh:
        return json.load(fh)
