import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopgrad import lie_core as lc
from loopgrad.errors import (
    AlgebraMismatch,
    InvalidAutomorphism,
    InvalidGroupElement,
    NoOuterAutomorphism,
    NotFiniteOrder,
    UnsupportedAlgebra,
)

DIMS = {"A1": 3, "A2": 8, "A3": 15, "A4": 24}


@pytest.mark.parametrize("label,dim", sorted(DIMS.items()))
def test_build_algebra_dimensions(label, dim):
    alg = lc.build_algebra(label)
    assert alg.dim == dim
    assert alg.defining_dim == int(label[1]) + 1
    assert len(alg.basis_labels) == dim


def test_sl2_basis_order(sl2):
    assert sl2.basis_labels == ("e[1,2]", "h[1]", "f[1,2]")


def test_unsupported_label():
    with pytest.raises(UnsupportedAlgebra):
        lc.build_algebra("E8")
    with pytest.raises(UnsupportedAlgebra):
        lc.build_algebra("B2")


@pytest.mark.parametrize("label", sorted(DIMS))
def test_jacobi_and_antisymmetry(label):
    alg = lc.build_algebra(label)
    assert lc.jacobi_residual(alg) < 1e-12
    c = alg.structure_constants
    assert np.abs(c + np.transpose(c, (1, 0, 2))).max() == 0.0


def test_sl2_bracket_table(sl2):
    e, h, f = (lc.basis_element(sl2, i) for i in range(3))
    assert np.allclose(lc.bracket(e, f).coeffs, h.coeffs)
    assert np.allclose(lc.bracket(h, e).coeffs, 2 * e.coeffs)
    assert np.allclose(lc.bracket(h, f).coeffs, -2 * f.coeffs)


def test_bracket_vs_matrix_commutator(rng):
    for label in sorted(DIMS):
        alg = lc.build_algebra(label)
        for _ in range(25):
            x = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(
                alg.dim)
            y = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(
                alg.dim)
            direct = lc.bracket_coeffs(alg, x, y)
            comm = alg.matrix_of(x) @ alg.matrix_of(y) \
                - alg.matrix_of(y) @ alg.matrix_of(x)
            assert np.abs(direct - alg.coeffs_of_matrix(comm)).max() < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_bracket_antisymmetry_property(vals):
    alg = lc.build_algebra("A1")
    x = lc.AlgebraElement(alg, np.array(vals[:3]) + 0j)
    y = lc.AlgebraElement(alg, np.array(vals[3:]) + 0j)
    assert lc.norm_max(lc.bracket(x, x)) == 0.0
    lhs = lc.bracket(x, y).coeffs
    rhs = -lc.bracket(y, x).coeffs
    assert np.abs(lhs - rhs).max() < 1e-12


def test_bracket_algebra_mismatch(sl2, sl3):
    x = lc.basis_element(sl2, 0)
    y = lc.basis_element(sl3, 0)
    with pytest.raises(AlgebraMismatch):
        lc.bracket(x, y)


def test_norm_max(sl2):
    e = lc.basis_element(sl2, 0)
    h = lc.basis_element(sl2, 1)
    zero = lc.AlgebraElement(sl2, np.zeros(3))
    assert lc.norm_max(zero) == 0.0
    assert lc.norm_max(e + 3 * h) == 3.0


@pytest.mark.parametrize("label", sorted(DIMS))
def test_coordinate_bracket_bound(label, rng):
    alg = lc.build_algebra(label)
    c = lc.bracket_bound_constant(alg)
    assert c > 0
    x = rng.standard_normal((1000, alg.dim)) \
        + 1j * rng.standard_normal((1000, alg.dim))
    y = rng.standard_normal((1000, alg.dim)) \
        + 1j * rng.standard_normal((1000, alg.dim))
    z = np.einsum('bi,bj,ijk->bk', x, y, alg.structure_constants)
    lhs = np.abs(z).max(axis=1)
    rhs = c * np.abs(x).max(axis=1) * np.abs(y).max(axis=1)
    assert (lhs <= rhs + 1e-12).all()


def test_bracket_constant_values(sl2, sl3):
    assert lc.bracket_bound_constant(sl2) == 10.0
    direct = float(np.abs(sl3.structure_constants).sum())
    assert lc.bracket_bound_constant(sl3) == direct
    assert sl3.bracket_constant == direct


def test_inner_automorphism_examples(sl2):
    ident = lc.inner_automorphism(sl2, np.eye(2))
    assert np.abs(ident.matrix - np.eye(3)).max() < 1e-14

    a = lc.inner_automorphism(sl2, np.diag([1.0, -1.0]))
    assert np.allclose(np.diag(a.matrix), [-1.0, 1.0, -1.0])

    central = lc.inner_automorphism(sl2, -np.eye(2))
    assert np.abs(central.matrix - np.eye(3)).max() < 1e-14


def test_inner_automorphism_rejects_bad_input(sl2):
    with pytest.raises(InvalidGroupElement):
        lc.inner_automorphism(sl2, np.zeros((2, 2)))
    with pytest.raises(InvalidGroupElement):
        lc.inner_automorphism(sl2, np.eye(3))


def test_automorphism_bracket_preservation(sl3, rng):
    g = np.linalg.qr(rng.standard_normal((3, 3))
                     + 1j * rng.standard_normal((3, 3)))[0]
    a = lc.inner_automorphism(sl3, g)
    assert lc.bracket_preservation_residual(a) < 1e-10


def test_zero_matrix_rejected_as_automorphism(sl2):
    with pytest.raises(InvalidAutomorphism):
        lc.AlgebraAutomorphism(sl2, np.zeros((3, 3)))


def test_non_automorphism_rejected(sl2, rng):
    bad = rng.standard_normal((3, 3))
    with pytest.raises(InvalidAutomorphism):
        lc.AlgebraAutomorphism(sl2, bad)


def test_diagram_automorphism(sl2, sl3):
    with pytest.raises(NoOuterAutomorphism):
        lc.diagram_automorphism(sl2)
    d = lc.diagram_automorphism(sl3)
    assert lc.automorphism_order(d, 5) == 2
    square = d.compose(d)
    assert np.abs(square.matrix - np.eye(sl3.dim)).max() < 1e-12


def test_automorphism_order(sl2, sl3):
    assert lc.automorphism_order(lc.identity_automorphism(sl2), 3) == 1
    a = lc.inner_automorphism(sl2, np.diag([1.0, -1.0]))
    assert lc.automorphism_order(a, 10) == 2
    assert lc.automorphism_order(a, 1) is None
    g3 = np.diag([1.0, np.exp(2j * np.pi / 3), np.exp(-2j * np.pi / 3)])
    assert lc.automorphism_order(lc.inner_automorphism(sl3, g3), 10) == 3


def test_eigenspace_gradation_identity(sl2):
    spaces = lc.eigenspace_gradation(lc.identity_automorphism(sl2), 1)
    assert len(spaces) == 1
    assert spaces[0][1].shape == (3, 3)


def test_eigenspace_gradation_twisted(sl2):
    a = lc.inner_automorphism(sl2, np.diag([1.0, -1.0]))
    dims = lc.eigenspace_dims(a, 2)
    assert dims == (1, 2)


@pytest.mark.parametrize("label,K", [("A2", 3), ("A3", 2), ("A4", 5)])
def test_eigenspace_dims_sum(label, K, rng):
    from loopgrad import classify
    alg = lc.build_algebra(label)
    for lab in classify.enumerate_kac_labels(alg, K):
        a = classify.realize_automorphism(lab, alg)
        dims = lc.eigenspace_dims(a, K)
        assert sum(dims) == alg.dim


def test_eigenspace_bracket_compatibility(sl3):
    g3 = np.diag([1.0, np.exp(2j * np.pi / 3), np.exp(-2j * np.pi / 3)])
    a = lc.inner_automorphism(sl3, g3)
    spaces = lc.eigenspace_gradation(a, 3)
    for m, bm in spaces:
        for n, bn in spaces:
            target = (m + n) % 3
            proj = spaces[target][1]
            for i in range(bm.shape[1]):
                for j in range(bn.shape[1]):
                    z = lc.bracket_coeffs(sl3, bm[:, i], bn[:, j])
                    residual = z - proj @ (proj.conj().T @ z)
                    assert np.abs(residual).max() < 1e-9


def test_eigenspace_requires_finite_order(sl2):
    a = lc.inner_automorphism(sl2, np.diag([1.0, np.exp(0.7j)]))
    with pytest.raises(NotFiniteOrder):
        lc.eigenspace_gradation(a, 2)


def test_group_element_determinant(sl2):
    lc.GroupElement(sl2, np.eye(2))
    with pytest.raises(InvalidGroupElement):
        lc.GroupElement(sl2, 2.0 * np.eye(2))


def test_recover_realization_inner(sl3, rng):
    g = np.linalg.qr(rng.standard_normal((3, 3))
                     + 1j * rng.standard_normal((3, 3)))[0]
    g = g / np.linalg.det(g) ** (1 / 3)
    a = lc.AlgebraAutomorphism(sl3, lc.inner_automorphism(sl3, g).matrix)
    real = lc.recover_realization(a)
    assert not real.outer
    redone = lc.inner_automorphism(sl3, real.matrix)
    assert np.abs(redone.matrix - a.matrix).max() < 1e-8


def test_recover_realization_outer(sl3):
    d = lc.diagram_automorphism(sl3)
    bare = lc.AlgebraAutomorphism(sl3, d.matrix)
    real = lc.recover_realization(bare)
    assert real.outer


def test_realization_group_action_consistency(sl3, rng):
    """Applying the group realization matches Ad at the algebra level."""
    g = np.linalg.qr(rng.standard_normal((3, 3))
                     + 1j * rng.standard_normal((3, 3)))[0]
    g = g / np.linalg.det(g) ** (1 / 3)
    a = lc.diagram_automorphism(sl3).compose(lc.inner_automorphism(sl3, g))
    h = np.linalg.qr(rng.standard_normal((3, 3))
                     + 1j * rng.standard_normal((3, 3)))[0]
    h = h / np.linalg.det(h) ** (1 / 3)
    lhs = lc.inner_automorphism(sl3, a.realization.apply_group(h))
    rhs = a.compose(lc.inner_automorphism(sl3, h)).compose(a.inverse())
    assert np.abs(lhs.matrix - rhs.matrix).max() < 1e-8
