"""Complex simple Lie algebras of type A in a Chevalley basis.

An algebra is built from its label (``A1`` .. ``A4``) and carries two views
that are kept consistent to 1e-12: abstract structure constants over the
Chevalley basis, and the defining matrix realization by traceless
(n+1)x(n+1) matrices.  The basis is ordered positive root vectors by height,
then Cartan generators, then negative root vectors; all structure constants
are integers, so exactness checks are cheap.

Automorphisms are stored as dim x dim matrices over the chosen basis.  Those
produced by the constructors here additionally carry a group realization
``x -> tau^t(u x u^-1)`` with ``tau(x) = -x^T``, which is what lets the
normalizer act on group-valued paths.
"""

from __future__ import annotations

import cmath
from functools import lru_cache

import numpy as np

from .errors import (
    AlgebraMismatch,
    InvalidAutomorphism,
    InvalidGroupElement,
    NoOuterAutomorphism,
    NotFiniteOrder,
    NumericalFailure,
    UnsupportedAlgebra,
)

SUPPORTED_LABELS = ("A1", "A2", "A3", "A4")

DEFAULT_TOL = 1e-9


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class SimpleLieAlgebra:
    """sl(n+1, C) with Chevalley basis and validated structure constants.

    Immutable after construction.  Use :func:`build_algebra`; the constructor
    itself assumes consistent inputs.
    """

    def __init__(self, label, rank, basis_labels, basis_matrices,
                 structure_constants, bracket_constant):
        self.label = label
        self.rank = rank
        self.dim = len(basis_labels)
        self.defining_dim = rank + 1
        self.basis_labels = tuple(basis_labels)
        self.basis_matrices = _frozen(basis_matrices)
        self.structure_constants = _frozen(structure_constants)
        self.bracket_constant = float(bracket_constant)
        # ad(b_i) as a dim x dim matrix: ad_matrices[i][k, j] = c^k_{ij}
        self.ad_matrices = _frozen(
            np.transpose(structure_constants, (0, 2, 1)))
        flat = self.ad_matrices.reshape(self.dim, -1).T   # (dim^2, dim)
        self._ad_flat = _frozen(flat)
        self._ad_pinv = _frozen(np.linalg.pinv(flat))

    def __repr__(self):
        return f"SimpleLieAlgebra({self.label}, dim={self.dim})"

    def __eq__(self, other):
        return isinstance(other, SimpleLieAlgebra) and other.label == self.label

    def __hash__(self):
        return hash(("SimpleLieAlgebra", self.label))

    # -- converting between the abstract and the matrix view ---------------

    def matrix_of(self, coeffs):
        """Defining-representation matrix of the element with given coords."""
        return np.tensordot(np.asarray(coeffs), self.basis_matrices, axes=1)

    def coeffs_of_matrix(self, mat, tol=1e-9):
        """Coordinates over the Chevalley basis of a traceless matrix."""
        mat = np.asarray(mat, dtype=complex)
        n1 = self.defining_dim
        if mat.shape != (n1, n1):
            raise AlgebraMismatch(
                f"expected a {n1}x{n1} matrix, got {mat.shape}")
        tr = abs(np.trace(mat))
        if tr > tol * max(1.0, float(np.abs(mat).max())):
            raise NumericalFailure(f"matrix is not traceless: |tr| = {tr:.3e}")
        coeffs = np.zeros(self.dim, dtype=complex)
        pos = _positive_roots(self.rank)
        npos = len(pos)
        for idx, (i, j) in enumerate(pos):
            coeffs[idx] = mat[i, j]                   # e_(i,j)
            coeffs[npos + self.rank + idx] = mat[j, i]  # f_(i,j)
        diag = np.diag(mat)
        coeffs[npos:npos + self.rank] = np.cumsum(diag)[:-1]
        return coeffs

    def ad(self, coeffs):
        """Matrix of ad(x) on the algebra, x given by coordinates."""
        return np.tensordot(np.asarray(coeffs), self.ad_matrices, axes=(0, 0))

    def solve_ad(self, derivation, tol=1e-8):
        """Recover x with ad(x) = D from a derivation matrix D.

        Inner derivations are the only ones on a simple algebra, so the
        linear system is solvable whenever D really is a derivation; the
        residual is checked against ``tol``.
        """
        target = np.asarray(derivation, dtype=complex).reshape(-1)
        x = self._ad_pinv @ target
        residual = float(np.abs(self._ad_flat @ x - target).max())
        if residual > tol:
            raise NumericalFailure(
                f"matrix is not an inner derivation: residual {residual:.3e}")
        return x


@lru_cache(maxsize=None)
def _positive_roots(rank):
    """Positive roots (i, j) ~ eps_i - eps_j of A_rank, ordered by height."""
    roots = [(i, j) for i in range(rank + 1) for j in range(i + 1, rank + 1)]
    roots.sort(key=lambda r: (r[1] - r[0], r[0]))
    return tuple(roots)


def _basis_matrices(rank):
    n1 = rank + 1
    pos = _positive_roots(rank)
    labels, mats = [], []
    for (i, j) in pos:
        m = np.zeros((n1, n1), dtype=complex)
        m[i, j] = 1.0
        labels.append(f"e[{i + 1},{j + 1}]")
        mats.append(m)
    for i in range(rank):
        m = np.zeros((n1, n1), dtype=complex)
        m[i, i] = 1.0
        m[i + 1, i + 1] = -1.0
        labels.append(f"h[{i + 1}]")
        mats.append(m)
    for (i, j) in pos:
        m = np.zeros((n1, n1), dtype=complex)
        m[j, i] = 1.0
        labels.append(f"f[{i + 1},{j + 1}]")
        mats.append(m)
    return labels, np.array(mats)


@lru_cache(maxsize=None)
def build_algebra(label):
    """Construct a supported algebra with validated invariants.

    Raises
    ------
    UnsupportedAlgebra
        If ``label`` is not in ``SUPPORTED_LABELS``.
    """
    if label not in SUPPORTED_LABELS:
        raise UnsupportedAlgebra(
            f"label {label!r} not supported; expected one of "
            f"{', '.join(SUPPORTED_LABELS)}")
    rank = int(label[1:])
    labels, mats = _basis_matrices(rank)
    dim = len(labels)

    alg = SimpleLieAlgebra.__new__(SimpleLieAlgebra)
    # temporary init so coeffs_of_matrix can be used to fill the constants
    alg.label, alg.rank, alg.dim = label, rank, dim
    alg.defining_dim = rank + 1
    alg.basis_labels = tuple(labels)
    alg.basis_matrices = _frozen(mats)

    const = np.zeros((dim, dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(i + 1, dim):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            coeffs = alg.coeffs_of_matrix(comm)
            const[i, j] = coeffs
            const[j, i] = -coeffs

    bracket_c = float(np.abs(const).sum())
    alg2 = SimpleLieAlgebra(label, rank, labels, mats, const, bracket_c)
    _validate_algebra(alg2)
    return alg2


def _validate_algebra(alg, jacobi_tol=1e-12):
    c = alg.structure_constants
    if np.abs(c + np.transpose(c, (1, 0, 2))).max() != 0.0:
        raise NumericalFailure("structure constants are not antisymmetric")
    jac = (np.einsum('ijm,mkl->ijkl', c, c)
           + np.einsum('jkm,mil->ijkl', c, c)
           + np.einsum('kim,mjl->ijkl', c, c))
    worst = float(np.abs(jac).max())
    if worst > jacobi_tol:
        raise NumericalFailure(
            f"structure constants violate the closure identity: {worst:.3e}")


def jacobi_residual(alg):
    """Largest residual of the closure identity over all basis triples."""
    c = alg.structure_constants
    jac = (np.einsum('ijm,mkl->ijkl', c, c)
           + np.einsum('jkm,mil->ijkl', c, c)
           + np.einsum('kim,mjl->ijkl', c, c))
    return float(np.abs(jac).max())


def bracket_bound_constant(alg):
    """Sum of absolute structure constants; the bracket-bound constant."""
    return float(np.abs(alg.structure_constants).sum())


class AlgebraElement:
    """Element of a simple Lie algebra given by coordinates over the basis."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (algebra.dim,):
            raise AlgebraMismatch(
                f"coefficient vector of length {coeffs.shape} does not match "
                f"dim {algebra.dim}")
        self.algebra = algebra
        self.coeffs = _frozen(coeffs)

    def __repr__(self):
        return f"AlgebraElement({self.algebra.label}, {self.coeffs!r})"

    def __add__(self, other):
        _same_algebra(self, other)
        return AlgebraElement(self.algebra, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_algebra(self, other)
        return AlgebraElement(self.algebra, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return AlgebraElement(self.algebra, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return AlgebraElement(self.algebra, -self.coeffs)

    def matrix(self):
        return self.algebra.matrix_of(self.coeffs)


def basis_element(alg, index_or_label):
    """Basis vector by index or by its label string."""
    if isinstance(index_or_label, str):
        index = alg.basis_labels.index(index_or_label)
    else:
        index = int(index_or_label)
    coeffs = np.zeros(alg.dim, dtype=complex)
    coeffs[index] = 1.0
    return AlgebraElement(alg, coeffs)


def _same_algebra(x, y):
    if x.algebra != y.algebra:
        raise AlgebraMismatch(
            f"elements of {x.algebra.label} and {y.algebra.label} cannot "
            "be combined")


def bracket(x, y):
    """Lie bracket from the structure constants; bilinear, antisymmetric."""
    _same_algebra(x, y)
    z = np.einsum('i,j,ijk->k', x.coeffs, y.coeffs,
                  x.algebra.structure_constants)
    return AlgebraElement(x.algebra, z)


def bracket_coeffs(alg, x, y):
    """Raw-coefficient bracket, avoiding element wrappers in hot loops."""
    return np.einsum('i,j,ijk->k', x, y, alg.structure_constants)


def norm_max(x):
    """Max modulus of the coordinates; zero iff x = 0."""
    coeffs = x.coeffs if isinstance(x, AlgebraElement) else np.asarray(x)
    if coeffs.size == 0:
        return 0.0
    return float(np.abs(coeffs).max())


# ---------------------------------------------------------------------------
# automorphisms
# ---------------------------------------------------------------------------

class GroupRealization:
    """Group-level form tau^t . Ad(u) of an algebra automorphism.

    ``tau`` is x -> -x^T on the algebra and h -> (h^T)^-1 on the group.
    Knowing (t, u) is what allows applying the automorphism to group-valued
    paths (needed for monodromy extraction).
    """

    __slots__ = ("outer", "matrix")

    def __init__(self, outer, matrix):
        self.outer = bool(outer)
        self.matrix = _frozen(np.asarray(matrix, dtype=complex))

    def apply_group(self, h):
        """Image of a group element h."""
        u = self.matrix
        res = u @ h @ np.linalg.inv(u)
        if self.outer:
            res = np.linalg.inv(res).T
        return res

    def compose(self, other):
        """Realization of self followed after other (self . other)."""
        u1, u2 = self.matrix, other.matrix
        if other.outer:
            u1 = np.linalg.inv(u1).T
        return GroupRealization(self.outer ^ other.outer, u1 @ u2)

    def inverse(self):
        u = self.matrix
        if self.outer:
            u = np.linalg.inv(u).T
        return GroupRealization(self.outer, np.linalg.inv(u))


class AlgebraAutomorphism:
    """Automorphism of a simple Lie algebra as a matrix over the basis.

    Validated at construction: the matrix must be invertible (the zero
    matrix in particular is rejected here, not at use sites) and must
    preserve brackets on all basis pairs to 1e-10.
    """

    def __init__(self, algebra, matrix, realization=None, _validate=True):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (algebra.dim, algebra.dim):
            raise InvalidAutomorphism(
                f"matrix shape {matrix.shape} does not match algebra "
                f"dimension {algebra.dim}")
        self.algebra = algebra
        self.matrix = _frozen(matrix)
        self.realization = realization
        self._order = None
        if _validate:
            self._validate()

    def _validate(self, tol=1e-10):
        a = self.matrix
        sv = np.linalg.svd(a, compute_uv=False)
        if sv[-1] < 1e-12:
            raise InvalidAutomorphism(
                "matrix is singular (or zero) and cannot be an automorphism")
        residual = bracket_preservation_residual(self)
        if residual > tol:
            raise InvalidAutomorphism(
                f"bracket preservation fails on basis pairs: "
                f"residual {residual:.3e}")

    def __call__(self, x):
        if isinstance(x, AlgebraElement):
            return AlgebraElement(self.algebra, self.matrix @ x.coeffs)
        return self.matrix @ np.asarray(x, dtype=complex)

    def compose(self, other):
        """self . other (apply other first)."""
        if self.algebra != other.algebra:
            raise AlgebraMismatch("automorphisms of different algebras")
        realization = None
        if self.realization is not None and other.realization is not None:
            realization = self.realization.compose(other.realization)
        return AlgebraAutomorphism(self.algebra, self.matrix @ other.matrix,
                                   realization, _validate=False)

    def inverse(self):
        realization = None
        if self.realization is not None:
            realization = self.realization.inverse()
        return AlgebraAutomorphism(self.algebra, np.linalg.inv(self.matrix),
                                   realization, _validate=False)

    def power(self, k):
        out = identity_automorphism(self.algebra)
        base = self if k >= 0 else self.inverse()
        for _ in range(abs(int(k))):
            out = base.compose(out)
        return out

    def __repr__(self):
        return f"AlgebraAutomorphism({self.algebra.label})"


def bracket_preservation_residual(a):
    """max over basis pairs of || a[b_i, b_j] - [a b_i, a b_j] ||."""
    alg = a.algebra
    c = alg.structure_constants
    m = a.matrix
    lhs = np.einsum('ijk,lk->ijl', c, m)
    rhs = np.einsum('ip,jq,pqk->ijk', m.T, m.T, c)
    return float(np.abs(lhs - rhs).max())


def identity_automorphism(alg):
    return AlgebraAutomorphism(
        alg, np.eye(alg.dim),
        GroupRealization(False, np.eye(alg.defining_dim)), _validate=False)


class GroupElement:
    """Element of SL(n+1, C) in the defining representation."""

    __slots__ = ("algebra", "matrix")

    def __init__(self, algebra, matrix, det_tol=1e-10):
        matrix = np.asarray(matrix, dtype=complex)
        n1 = algebra.defining_dim
        if matrix.shape != (n1, n1):
            raise InvalidGroupElement(
                f"expected a {n1}x{n1} matrix, got {matrix.shape}")
        det = np.linalg.det(matrix)
        if abs(det - 1.0) > det_tol:
            raise InvalidGroupElement(
                f"|det - 1| = {abs(det - 1.0):.3e} exceeds {det_tol:.1e}")
        self.algebra = algebra
        self.matrix = _frozen(matrix)

    def __repr__(self):
        return f"GroupElement({self.algebra.label})"


def inner_automorphism(alg, g):
    """Conjugation x -> g x g^-1 expressed over the Chevalley basis."""
    if isinstance(g, GroupElement):
        if g.algebra != alg:
            raise AlgebraMismatch("group element of a different algebra")
        gm = g.matrix
    else:
        gm = np.asarray(g, dtype=complex)
        n1 = alg.defining_dim
        if gm.shape != (n1, n1):
            raise InvalidGroupElement(
                f"expected a {n1}x{n1} matrix, got {gm.shape}")
        if abs(np.linalg.det(gm)) < 1e-12:
            raise InvalidGroupElement("matrix is not invertible")
    ginv = np.linalg.inv(gm)
    cols = np.empty((alg.dim, alg.dim), dtype=complex)
    for i in range(alg.dim):
        cols[:, i] = alg.coeffs_of_matrix(gm @ alg.basis_matrices[i] @ ginv)
    return AlgebraAutomorphism(alg, cols, GroupRealization(False, gm))


def diagram_automorphism(alg):
    """The order-2 outer automorphism x -> -x^T, for rank >= 2."""
    if alg.rank < 2:
        raise NoOuterAutomorphism(
            "A1 has no diagram symmetry, hence no outer automorphism")
    cols = np.empty((alg.dim, alg.dim), dtype=complex)
    for i in range(alg.dim):
        cols[:, i] = alg.coeffs_of_matrix(-alg.basis_matrices[i].T)
    return AlgebraAutomorphism(
        alg, cols, GroupRealization(True, np.eye(alg.defining_dim)))


def linear_map_matrix(alg, fn):
    """Matrix over the basis of a linear map given on defining matrices."""
    cols = np.empty((alg.dim, alg.dim), dtype=complex)
    for i in range(alg.dim):
        cols[:, i] = alg.coeffs_of_matrix(fn(alg.basis_matrices[i]))
    return cols


def negative_transpose_matrix(alg):
    """Matrix of x -> -x^T over the basis (inner for A1, outer beyond)."""
    return linear_map_matrix(alg, lambda B: -B.T)


def recover_realization(a, tol=1e-8):
    """Find the group-level form tau^t . Ad(u) of an automorphism.

    Solves the linear intertwining system u B_i = M_i u for the inner
    candidate, then retries against tau . a.  The solution space is one
    dimensional (scalars) whenever the candidate really is inner, so the
    dominant null vector is the answer; it is normalized to unit
    determinant and verified before being cached on the automorphism.
    """
    if a.realization is not None:
        return a.realization
    alg = a.algebra
    tau = negative_transpose_matrix(alg)
    for outer in (False, True):
        m = a.matrix if not outer else tau @ a.matrix
        u = _solve_group_conjugator(alg, m, tol)
        if u is not None:
            realization = GroupRealization(outer, u)
            a.realization = realization
            return realization
    raise InvalidAutomorphism(
        "no group realization of the form tau^t . Ad(u) was found")


def _solve_group_conjugator(alg, m, tol):
    """u (up to scalar) with u B_i u^-1 = matrix of m applied to b_i."""
    n1 = alg.defining_dim
    eye = np.eye(n1)
    rows = []
    for i in range(alg.dim):
        target = alg.matrix_of(m[:, i])
        rows.append(np.kron(alg.basis_matrices[i].T, eye)
                    - np.kron(eye, target))
    big = np.vstack(rows)
    _, s, vh = np.linalg.svd(big)
    if s[-1] > 1e-7 * max(1.0, s[0]):
        return None
    u = vh[-1].conj().reshape((n1, n1), order='F')
    det = np.linalg.det(u)
    if abs(det) < 1e-10:
        return None
    u = u * np.exp(-np.log(det) / n1)
    check = np.empty_like(m)
    uinv = np.linalg.inv(u)
    for i in range(alg.dim):
        check[:, i] = alg.coeffs_of_matrix(u @ alg.basis_matrices[i] @ uinv)
    if np.abs(check - m).max() > tol:
        return None
    return u


def automorphism_order(a, k_max, tol=DEFAULT_TOL):
    """Smallest K <= k_max with a^K = id within tol, or None."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if a._order is not None and a._order <= k_max:
        return a._order
    eye = np.eye(a.algebra.dim)
    power = np.eye(a.algebra.dim)
    for k in range(1, int(k_max) + 1):
        power = a.matrix @ power
        if np.abs(power - eye).max() <= tol:
            a._order = k
            return k
    return None


def eigenspace_gradation(a, K, tol=DEFAULT_TOL):
    """Eigenspace decomposition of a finite-order automorphism.

    Returns a list of ``(m, basis)`` for m = 0 .. K-1, where ``basis`` is a
    (dim x d_m) matrix whose orthonormal columns span the eigenspace for
    eigenvalue exp(2 pi i m / K).  Uses projection averaging
    P_m = (1/K) sum_l eps^(-ml) a^l, so no eigenvalue clustering is needed.

    Raises
    ------
    NotFiniteOrder
        If a^K != id within tol.
    NumericalFailure
        If the eigenspaces do not fill the algebra (defective input).
    """
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    dim = a.algebra.dim
    powers = [np.eye(dim, dtype=complex)]
    for _ in range(K - 1):
        powers.append(a.matrix @ powers[-1])
    closure = np.abs(a.matrix @ powers[-1] - np.eye(dim)).max()
    if closure > tol:
        raise NotFiniteOrder(
            f"automorphism does not close at order {K}: "
            f"residual {closure:.3e}")
    eps = cmath.exp(2j * cmath.pi / K)
    result = []
    total = 0
    for m in range(K):
        proj = sum(eps ** (-m * l) * powers[l] for l in range(K)) / K
        u, s, _ = np.linalg.svd(proj)
        d_m = int((s > 0.5).sum())
        basis = u[:, :d_m]
        if d_m:
            res = np.abs(a.matrix @ basis - eps ** m * basis).max()
            if res > max(tol, 100 * closure):
                raise NumericalFailure(
                    f"eigenspace m={m} fails its eigenvalue relation: "
                    f"residual {res:.3e}")
        result.append((m, _frozen(basis)))
        total += d_m
    if total != dim:
        raise NumericalFailure(
            f"eigenspace dimensions sum to {total}, expected {dim}")
    return result


def eigenspace_dims(a, K, tol=DEFAULT_TOL):
    """Dimension of each eigenspace, as a tuple indexed by m in Z_K."""
    return tuple(b.shape[1] for _, b in eigenspace_gradation(a, K, tol))
