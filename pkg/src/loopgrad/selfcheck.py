"""Deterministic invariant battery behind the ``selfcheck`` subcommand.

Every random draw flows from the single seed, no timestamps or environment
data enter the report, and floats are emitted through repr-stable json
encoding, so identical (seed, version) pairs produce byte-identical
reports.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import classify, gradation, lie_core, loop_algebra, normalizer
from .errors import LoopgradError, NonIntegerSpectrum
from .serialization import SCHEMA


def _check(name, ok, **details):
    out = {"name": name, "ok": bool(ok)}
    out.update({k: _plain(v) for k, v in sorted(details.items())})
    return out


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in sorted(v.items())}
    return v


def run_selfcheck(seed=0):
    """Run the full battery; returns a JSON-ready report dict."""
    rng = np.random.default_rng(int(seed))
    checks = []

    # algebra invariants
    for label in lie_core.SUPPORTED_LABELS:
        alg = lie_core.build_algebra(label)
        jac = lie_core.jacobi_residual(alg)
        worst_mat = 0.0
        for _ in range(20):
            x = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(
                alg.dim)
            y = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(
                alg.dim)
            abstract = lie_core.bracket_coeffs(alg, x, y)
            mats = alg.matrix_of(x) @ alg.matrix_of(y) \
                - alg.matrix_of(y) @ alg.matrix_of(x)
            worst_mat = max(worst_mat, float(np.abs(
                abstract - alg.coeffs_of_matrix(mats)).max()))
        checks.append(_check(
            f"algebra-invariants-{label}",
            jac < 1e-12 and worst_mat < 1e-10,
            jacobi_residual=jac, matrix_agreement=worst_mat,
            bracket_constant=alg.bracket_constant))

    # bracket bounds, coordinate level and loop level
    for label in ("A1", "A2"):
        alg = lie_core.build_algebra(label)
        c = alg.bracket_constant
        violations = 0
        for _ in range(200):
            x = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(
                alg.dim)
            y = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(
                alg.dim)
            lhs = float(np.abs(lie_core.bracket_coeffs(alg, x, y)).max())
            rhs = c * np.abs(x).max() * np.abs(y).max()
            violations += lhs > rhs + 1e-12
        checks.append(_check(f"coordinate-bracket-bound-{label}",
                             violations == 0, violations=violations))

    tw = loop_algebra.untwisted(lie_core.build_algebra("A1"))
    worst_ratio = 0.0
    violations = 0
    for _ in range(100):
        xi = loop_algebra.random_element(tw, rng, max_mode=3)
        eta = loop_algebra.random_element(tw, rng, max_mode=3)
        for m in (1, 2, 3):
            rep = loop_algebra.check_bracket_bound(xi, eta, m)
            violations += not rep.ok
            worst_ratio = max(worst_ratio, rep.ratio)
    checks.append(_check("seminorm-bracket-bound", violations == 0,
                         violations=violations, worst_ratio=worst_ratio))

    # convolution bracket vs pointwise sampling oracle
    worst = 0.0
    grid = 2.0 * np.pi * np.arange(64) / 64
    for _ in range(50):
        xi = loop_algebra.random_element(tw, rng, max_mode=5)
        eta = loop_algebra.random_element(tw, rng, max_mode=5)
        direct = loop_algebra.loop_bracket(xi, eta)
        xs = loop_algebra.evaluate_grid(xi, grid)
        ys = loop_algebra.evaluate_grid(eta, grid)
        pts = np.einsum('pi,pj,ijk->pk', xs, ys,
                        tw.algebra.structure_constants)
        sampled = loop_algebra.fourier_project(pts, tw, 10)
        worst = max(worst, _mode_distance(direct, sampled))
    checks.append(_check("bracket-convolution-oracle", worst < 1e-10,
                         worst_residual=worst))

    # gradation axioms on the twisted standard example
    alg = lie_core.build_algebra("A1")
    a2fold = lie_core.inner_automorphism(alg, np.diag([1.0, -1.0]))
    tw2 = loop_algebra.TwistData(alg, a2fold, 2)
    table = gradation.grading_subspaces(
        gradation.GradingOperator.standard(tw2), 4)
    dims = table.dims()
    dims_ok = all(dims[k] == (1 if k % 2 == 0 else 2) for k in dims)
    worst_flow = 0.0
    for _ in range(20):
        xi = loop_algebra.random_element(tw2, rng, max_mode=4)
        eta = loop_algebra.random_element(tw2, rng, max_mode=4)
        t1, t2 = rng.uniform(-3, 3, size=2)
        d1 = gradation.flow(t1, gradation.flow(t2, xi, table), table) \
            - gradation.flow(t1 + t2, xi, table)
        worst_flow = max(worst_flow, loop_algebra.seminorm(d1, 1))
        small = gradation.grading_subspaces(
            gradation.GradingOperator.standard(tw2), 8)
        lhs = gradation.flow(t1, loop_algebra.loop_bracket(xi, eta), small)
        rhs = loop_algebra.loop_bracket(gradation.flow(t1, xi, small),
                                        gradation.flow(t1, eta, small))
        worst_flow = max(worst_flow, loop_algebra.seminorm(lhs - rhs, 1))
    checks.append(_check("gradation-axioms", dims_ok and worst_flow < 1e-10,
                         dims={str(k): v for k, v in dims.items()},
                         worst_flow_residual=worst_flow))

    # closed-form normalization and its rejected variant
    h = np.array([0, 1, 0], complex)
    eta = loop_algebra.make_loop_element(tw, {0: -0.5j * h})
    res = normalizer.normalize(gradation.GradingOperator(
        gradation.VectorFieldK.constant(1, 1.0), eta), steps=1024)
    g_ok = float(np.abs(res.monodromy.g.matrix + np.eye(2)).max())
    rejected = False
    try:
        normalizer.normalize(gradation.GradingOperator(
            gradation.VectorFieldK.constant(1, 1.0),
            loop_algebra.make_loop_element(tw, {0: -0.25j * h})),
            steps=1024)
    except NonIntegerSpectrum:
        rejected = True
    checks.append(_check(
        "closed-form-normalization",
        res.K_prime == 1 and g_ok < 1e-9
        and res.integrality_residual < 1e-10 and rejected,
        monodromy_vs_minus_identity=g_ok,
        integrality_residual=res.integrality_residual,
        quarter_shift_rejected=rejected))

    # rectification oracle
    rect = normalizer.rectify_vector_field(gradation.VectorFieldK.cosine(
        1, 0.3))
    kappa_err = abs(rect.kappa - np.sqrt(0.91))
    checks.append(_check(
        "rectification-oracle",
        kappa_err < 1e-9 and rect.pushforward_residual < 1e-8,
        kappa_error=kappa_err,
        pushforward_residual=rect.pushforward_residual))

    # one round trip per small class
    rt_ok = True
    rt_detail = {}
    for label, K in (("A1", 2), ("A2", 3)):
        algk = lie_core.build_algebra(label)
        lab = classify.enumerate_kac_labels(algk, K)[0]
        aut = classify.realize_automorphism(lab, algk)
        twk = loop_algebra.TwistData(algk, aut, K)
        Q0 = gradation.GradingOperator.standard(twk)
        base = normalizer.normalize(Q0, steps=1024)
        pair = loop_algebra.LoopAutomorphism(
            loop_algebra.CircleDiffeoLift.rotation_lift(
                K, float(rng.uniform(0, 2 * np.pi))),
            loop_algebra.LoopAutomorphismElement.exp_ad(
                loop_algebra.random_element(twk, rng, max_mode=2,
                                            scale=0.3)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            Q1 = normalizer.conjugate_operator(Q0, pair)
        res1 = normalizer.normalize(Q1, steps=1024)
        same = normalizer.compare_normalizations(base, res1)
        rt_ok = rt_ok and same and res1.K_prime == K
        rt_detail[f"{label}-K{K}"] = {
            "recovered_K": res1.K_prime, "equivalent": bool(same),
            "integrality_residual": res1.integrality_residual}
    checks.append(_check("normalization-round-trip", rt_ok, **rt_detail))

    # classification oracle agreement
    cls_ok = True
    counts = {}
    for label, r, orders in (("A1", 1, range(1, 7)), ("A2", 1, range(1, 5)),
                             ("A2", 2, (2, 4))):
        try:
            table = classify.validate_diagram_tables(label, r, orders)
            counts[f"{label}-r{r}"] = {str(k): list(v)
                                       for k, v in table.items()}
        except LoopgradError as err:
            cls_ok = False
            counts[f"{label}-r{r}"] = str(err)
    checks.append(_check("classification-oracle", cls_ok, counts=counts))

    return {
        "schema": SCHEMA,
        "kind": "selfcheck",
        "seed": int(seed),
        "ok": all(c["ok"] for c in checks),
        "checks": checks,
    }


def _mode_distance(x, y):
    keys = set(x.modes) | set(y.modes)
    if not keys:
        return 0.0
    return max(float(np.abs(x.mode(k) - y.mode(k)).max()) for k in keys)
