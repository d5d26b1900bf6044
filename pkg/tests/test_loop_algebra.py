import warnings

import numpy as np
import pytest

from conftest import mode_distance
from loopgrad import lie_core as lc
from loopgrad import loop_algebra as la
from loopgrad.errors import (
    NonMonotone,
    NotAbsolutelyConvergent,
    NotFiniteOrder,
    TruncationWarning,
    TwistMismatch,
    TwistViolation,
)

E = np.array([1, 0, 0], complex)
H = np.array([0, 1, 0], complex)
F = np.array([0, 0, 1], complex)


def test_twist_data_requires_finite_order(sl2):
    a = lc.inner_automorphism(sl2, np.diag([1.0, np.exp(0.3j)]))
    with pytest.raises(NotFiniteOrder):
        la.TwistData(sl2, a, 3)


def test_make_loop_element_twisted(twisted_sl2):
    xi = la.make_loop_element(twisted_sl2, {1: E})
    assert xi.support() == [1]
    with pytest.raises(TwistViolation) as err:
        la.make_loop_element(twisted_sl2, {1: H})
    assert err.value.mode == 1
    assert err.value.residual > 1.0


def test_empty_modes_always_valid(twisted_sl2):
    xi = la.make_loop_element(twisted_sl2, {})
    assert xi.is_zero()
    zero = la.make_loop_element(twisted_sl2, {3: np.zeros(3)})
    assert zero.is_zero()


def test_loop_bracket_single_mode(untwisted_sl2):
    xe = la.make_loop_element(untwisted_sl2, {1: E})
    xf = la.make_loop_element(untwisted_sl2, {-1: F})
    br = la.loop_bracket(xe, xf)
    assert br.support() == [0]
    assert np.allclose(br.mode(0), H)


def test_loop_bracket_zero_and_antisymmetry(untwisted_sl2, rng):
    xi = la.random_element(untwisted_sl2, rng, max_mode=3)
    zero = la.zero_element(untwisted_sl2)
    assert la.loop_bracket(xi, zero).is_zero()
    anti = la.loop_bracket(xi, xi)
    assert la.seminorm(anti, 1) < 1e-12


def test_loop_bracket_jacobi_mode_exact(untwisted_sl2, rng):
    x = la.random_element(untwisted_sl2, rng, max_mode=2)
    y = la.random_element(untwisted_sl2, rng, max_mode=2)
    z = la.random_element(untwisted_sl2, rng, max_mode=2)
    total = la.loop_bracket(x, la.loop_bracket(y, z)) \
        + la.loop_bracket(y, la.loop_bracket(z, x)) \
        + la.loop_bracket(z, la.loop_bracket(x, y))
    assert mode_distance(total, la.zero_element(untwisted_sl2)) < 1e-12


def test_loop_bracket_twist_mismatch(untwisted_sl2, twisted_sl2):
    a = la.make_loop_element(untwisted_sl2, {0: H})
    b = la.make_loop_element(twisted_sl2, {0: H})
    with pytest.raises(TwistMismatch):
        la.loop_bracket(a, b)


def test_bracket_grid_oracle(twisted_sl2, rng):
    grid = 2.0 * np.pi * np.arange(64) / 64
    alg = twisted_sl2.algebra
    for _ in range(30):
        xi = la.random_element(twisted_sl2, rng, max_mode=6)
        eta = la.random_element(twisted_sl2, rng, max_mode=6)
        direct = la.loop_bracket(xi, eta)
        pts = np.einsum('pi,pj,ijk->pk', la.evaluate_grid(xi, grid),
                        la.evaluate_grid(eta, grid),
                        alg.structure_constants)
        projected = la.fourier_project(pts, twisted_sl2, 12)
        assert mode_distance(direct, projected) < 1e-10


def test_evaluate(untwisted_sl2, twisted_sl2, rng):
    zero = la.zero_element(untwisted_sl2)
    assert lc.norm_max(la.evaluate(zero, 1.234)) == 0.0
    xe = la.make_loop_element(untwisted_sl2, {1: E})
    assert np.allclose(la.evaluate(xe, 0.0).coeffs, E)
    # twisted periodicity under one period step
    a = twisted_sl2.automorphism
    for _ in range(5):
        xi = la.random_element(twisted_sl2, rng, max_mode=4)
        s = float(rng.uniform(0, 2 * np.pi))
        lhs = la.evaluate(xi, s + np.pi).coeffs
        rhs = a.matrix @ la.evaluate(xi, s).coeffs
        assert np.abs(lhs - rhs).max() < 1e-12


def test_fourier_project_exact(untwisted_sl2):
    grid = 2.0 * np.pi * np.arange(16) / 16
    xi = la.make_loop_element(untwisted_sl2, {2: H})
    samples = la.evaluate_grid(xi, grid)
    back = la.fourier_project(samples, untwisted_sl2, 4)
    assert back.support() == [2]
    assert np.abs(back.mode(2) - H).max() < 1e-12


def test_fourier_project_constant(untwisted_sl2):
    samples = np.tile(H, (8, 1))
    back = la.fourier_project(samples, untwisted_sl2, 2)
    assert back.support() == [0]
    assert np.allclose(back.mode(0), H)


def test_fourier_round_trip(twisted_sl2, rng):
    xi = la.random_element(twisted_sl2, rng, max_mode=5)
    grid = 2.0 * np.pi * np.arange(32) / 32
    back = la.fourier_project(la.evaluate_grid(xi, grid), twisted_sl2, 7)
    assert mode_distance(xi, back) < 1e-12


def test_fourier_project_truncation_warning(untwisted_sl2):
    xi = la.make_loop_element(untwisted_sl2, {5: E})
    grid = 2.0 * np.pi * np.arange(32) / 32
    samples = la.evaluate_grid(xi, grid)
    with pytest.warns(TruncationWarning):
        la.fourier_project(samples, untwisted_sl2, 3, validate=False)


def test_fourier_project_needs_enough_samples(untwisted_sl2):
    with pytest.raises(ValueError):
        la.fourier_project(np.zeros((8, 3)), untwisted_sl2, 4)


def test_seminorm_values(untwisted_sl2):
    assert la.seminorm(la.zero_element(untwisted_sl2), 3) == 0.0
    xe = la.make_loop_element(untwisted_sl2, {1: E})
    assert abs(la.seminorm(xe, 1) - 1.0) < 1e-9
    assert abs(la.seminorm(xe, 2) - 1.0) < 1e-9


def test_seminorm_monotone(untwisted_sl2, rng):
    for _ in range(20):
        xi = la.random_element(untwisted_sl2, rng, max_mode=4)
        values = [la.seminorm(xi, m) for m in range(1, 5)]
        assert all(values[i] <= values[i + 1] + 1e-12 for i in range(3))


def test_seminorm_upper_bound(untwisted_sl2, rng):
    for _ in range(10):
        xi = la.random_element(untwisted_sl2, rng, max_mode=3)
        est, bound = la.seminorm_with_bound(xi, 3)
        assert est <= bound + 1e-12


def test_seminorm_batch_matches_single(untwisted_sl2, rng):
    elements = [la.random_element(untwisted_sl2, rng, max_mode=3)
                for _ in range(8)]
    batch = la.seminorms(elements, 3)
    singles = np.array([la.seminorm(x, 3) for x in elements])
    assert np.abs(batch - singles).max() < 1e-9


def test_check_bracket_bound(untwisted_sl2, rng):
    eta = la.zero_element(untwisted_sl2)
    xi = la.random_element(untwisted_sl2, rng, max_mode=2)
    rep = la.check_bracket_bound(xi, eta, 2)
    assert rep.ok and rep.lhs == 0.0
    worst = 0.0
    for _ in range(100):
        a = la.random_element(untwisted_sl2, rng, max_mode=3)
        b = la.random_element(untwisted_sl2, rng, max_mode=3)
        for m in (1, 2, 3, 4):
            rep = la.check_bracket_bound(a, b, m)
            assert rep.ok
            worst = max(worst, rep.ratio)
    assert worst <= 1.0


def test_convergence_geometric():
    report = la.absolute_convergence_check(la.DecayProfile.geometric(0.5), 2)
    assert report.convergent
    assert report.regroup_delta < 1e-10


def test_convergence_harmonic_tail_rejected():
    def tail(k):
        k = np.abs(np.asarray(k, dtype=float))
        return np.where(k <= 50, 1.0, 1.0 / np.maximum(k, 1.0))

    with pytest.raises(NotAbsolutelyConvergent) as err:
        la.absolute_convergence_check(la.DecayProfile(tail, None), 1)
    assert hasattr(err.value, "report")


def test_convergence_finite_support(untwisted_sl2, rng):
    xi = la.random_element(untwisted_sl2, rng, max_mode=4)
    report = la.absolute_convergence_check(xi, 3)
    assert report.convergent
    assert report.support_radius == 4


# ---------------------------------------------------------------------------
# circle diffeomorphism lifts
# ---------------------------------------------------------------------------

def test_lift_identity_and_rotation():
    ident = la.CircleDiffeoLift.identity(2)
    assert ident(1.5) == 1.5
    rot = la.CircleDiffeoLift.rotation_lift(1, 0.7)
    assert abs(rot(0.5) - 1.2) < 1e-15
    assert abs(rot.inverse_at(1.2) - 0.5) < 1e-12


def test_lift_periodicity_exact():
    lift = la.CircleDiffeoLift(2, rotation=0.3,
                               periodic_modes={1: 0.05 + 0.02j})
    s = np.linspace(0, 2 * np.pi, 13)
    assert np.abs(lift(s + np.pi) - lift(s) - np.pi).max() < 1e-12


def test_lift_rejects_non_monotone():
    with pytest.raises(NonMonotone):
        la.CircleDiffeoLift(1, periodic_modes={1: 0.6})


def test_lift_inverse_round_trip(rng):
    lift = la.CircleDiffeoLift(1, rotation=0.4,
                               periodic_modes={1: 0.1 - 0.03j, 2: 0.02j})
    for s in rng.uniform(0, 2 * np.pi, size=10):
        assert abs(lift(lift.inverse_at(s)) - s) < 1e-11


def test_lift_fit_round_trip():
    lift = la.CircleDiffeoLift(1, rotation=0.2,
                               periodic_modes={1: 0.07 + 0.01j})
    grid = 2.0 * np.pi * np.arange(64) / 64
    fitted = la.CircleDiffeoLift.from_samples(1, lift(grid) - grid,
                                              window=8)
    assert abs(fitted.rotation - 0.2) < 1e-12
    probe = np.linspace(0, 6, 17)
    assert np.abs(fitted(probe) - lift(probe)).max() < 1e-12


# ---------------------------------------------------------------------------
# pointwise automorphisms and the (f, alpha) action
# ---------------------------------------------------------------------------

def test_alpha_equivariance_validation(twisted_sl2, sl2):
    # a constant factor must commute with the twist automorphism
    bad = lc.inner_automorphism(sl2, np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(TwistViolation):
        la.LoopAutomorphismElement.constant(twisted_sl2, bad)
    good = lc.inner_automorphism(sl2, np.diag([1.0j, -1.0j]))
    la.LoopAutomorphismElement.constant(twisted_sl2, good)


def test_exp_ad_factor_is_equivariant(twisted_sl2, rng):
    zeta = la.random_element(twisted_sl2, rng, max_mode=2, scale=0.4)
    alpha = la.LoopAutomorphismElement.exp_ad(zeta)
    val = alpha.value(0.37)
    a = twisted_sl2.automorphism.matrix
    shifted = alpha.value(0.37 + np.pi)
    assert np.abs(shifted - a @ val @ np.linalg.inv(a)).max() < 1e-9


def test_action_identity(untwisted_sl2, rng):
    xi = la.random_element(untwisted_sl2, rng, max_mode=3)
    out = la.apply_loop_automorphism(
        la.CircleDiffeoLift.identity(1),
        la.LoopAutomorphismElement.identity(untwisted_sl2), xi)
    assert mode_distance(out, xi) < 1e-12


def test_action_rotation_phases(untwisted_sl2):
    xe = la.make_loop_element(untwisted_sl2, {1: E})
    out = la.apply_loop_automorphism(
        la.CircleDiffeoLift.rotation_lift(1, 0.7), None, xe)
    assert np.abs(out.mode(1) - np.exp(-0.7j) * E).max() < 1e-14


def test_action_bracket_equivariance(untwisted_sl2, rng):
    zeta = la.random_element(untwisted_sl2, rng, max_mode=1, scale=0.3)
    pair = la.LoopAutomorphism(
        la.CircleDiffeoLift.rotation_lift(1, 1.1),
        la.LoopAutomorphismElement.exp_ad(zeta))
    x = la.random_element(untwisted_sl2, rng, max_mode=2, scale=0.5)
    y = la.random_element(untwisted_sl2, rng, max_mode=2, scale=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        lhs = pair.apply(la.loop_bracket(x, y), window=24)
        rhs = la.loop_bracket(pair.apply(x, window=24),
                              pair.apply(y, window=24))
    assert mode_distance(lhs, rhs) < 1e-9


def test_compose_neutral_element(untwisted_sl2, rng):
    ident = la.LoopAutomorphism.identity(untwisted_sl2)
    zeta = la.random_element(untwisted_sl2, rng, max_mode=1, scale=0.3)
    pair = la.LoopAutomorphism(
        la.CircleDiffeoLift.rotation_lift(1, -0.4),
        la.LoopAutomorphismElement.exp_ad(zeta))
    x = la.random_element(untwisted_sl2, rng, max_mode=2)
    left = la.compose_loop_automorphisms(ident, pair)
    right = la.compose_loop_automorphisms(pair, ident)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        for combo in (left, right):
            assert mode_distance(combo.apply(x, window=16),
                                 pair.apply(x, window=16)) < 1e-10


def test_compose_with_inverse_is_neutral(untwisted_sl2, rng):
    zeta = la.random_element(untwisted_sl2, rng, max_mode=1, scale=0.3)
    pair = la.LoopAutomorphism(
        la.CircleDiffeoLift(1, rotation=0.25,
                            periodic_modes={1: 0.04 - 0.01j}),
        la.LoopAutomorphismElement.exp_ad(zeta))
    x = la.random_element(untwisted_sl2, rng, max_mode=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        inv = la.invert_loop_automorphism(pair)
        both = la.compose_loop_automorphisms(pair, inv)
        out = both.apply(x, window=24)
    assert mode_distance(out, x) < 1e-9


def test_compose_associativity_via_action(untwisted_sl2, rng):
    def random_pair():
        return la.LoopAutomorphism(
            la.CircleDiffeoLift.rotation_lift(1, float(rng.uniform(0, 6))),
            la.LoopAutomorphismElement.exp_ad(
                la.random_element(untwisted_sl2, rng, max_mode=1,
                                  scale=0.25)))

    a, b, c = random_pair(), random_pair(), random_pair()
    x = la.random_element(untwisted_sl2, rng, max_mode=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        left = la.compose_loop_automorphisms(
            la.compose_loop_automorphisms(a, b), c)
        right = la.compose_loop_automorphisms(
            a, la.compose_loop_automorphisms(b, c))
        out_l = left.apply(x, window=30)
        out_r = right.apply(x, window=30)
        nested = a.apply(b.apply(c.apply(x, window=30), window=30),
                         window=30)
    assert mode_distance(out_l, out_r) < 1e-8
    assert mode_distance(out_l, nested) < 1e-8


def test_action_group_law_exact_for_rotations(untwisted_sl2, sl2, rng):
    """Rotation + constant pairs compose exactly, no truncation."""
    u1 = lc.inner_automorphism(sl2, np.diag([1.0j, -1.0j]))
    u2 = lc.inner_automorphism(sl2, np.diag([2.0, 0.5]))
    p1 = la.LoopAutomorphism(
        la.CircleDiffeoLift.rotation_lift(1, 0.3),
        la.LoopAutomorphismElement.constant(untwisted_sl2, u1))
    p2 = la.LoopAutomorphism(
        la.CircleDiffeoLift.rotation_lift(1, -1.2),
        la.LoopAutomorphismElement.constant(untwisted_sl2, u2))
    x = la.random_element(untwisted_sl2, rng, max_mode=3)
    combo = la.compose_loop_automorphisms(p1, p2)
    assert mode_distance(combo.apply(x), p1.apply(p2.apply(x))) < 1e-12
