"""Grading operators Q = -i X + i ad(eta) and their gradations.

On the truncated mode window the operator is exact mode arithmetic: the
vector-field term differentiates and convolves with the field coefficients,
the ad term is a loop bracket.  Degree subspaces come from diagonalizing the
finite matrix of Q on the windowed twist-compatible basis, eigenvalues are
rounded to integers with a residual check, and the phase flow is a phase
multiplication in that eigenbasis.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg

from . import loop_algebra
from .errors import (
    DefectiveOperator,
    FieldHasZeros,
    NonIntegerSpectrum,
    NumericalFailure,
    TwistMismatch,
    WindowLeakage,
    ZeroFieldInfiniteDimensional,
)
from .loop_algebra import LoopElement, loop_bracket, make_loop_element

DEFAULT_TOL = 1e-9
INT_TOL = 1e-6


class VectorFieldK:
    """Vector field v d/ds with v a real trig polynomial of period 2 pi/K."""

    def __init__(self, K, modes=None, validate=True):
        self.K = int(K)
        clean = {}
        if modes:
            for j, c in modes.items():
                j = int(j)
                if abs(c) <= 1e-15:
                    continue
                clean[j] = complex(c)
            for j in list(clean):
                other = clean.get(-j, 0.0)
                avg = 0.5 * (clean[j] + np.conj(other))
                clean[j] = avg
                clean[-j] = np.conj(avg)
        self.modes = {j: c for j, c in sorted(clean.items())
                      if abs(c) > 1e-15}
        if validate:
            self._validate()

    def _validate(self):
        grid = self.sample_grid()
        vals = self.values(grid)
        if np.abs(vals.imag).max() > 1e-12:
            raise NumericalFailure("vector field is not real on the grid")

    def sample_grid(self):
        max_j = max((abs(j) for j in self.modes), default=0)
        n = max(256, 32 * max_j)
        return np.linspace(0.0, 2.0 * np.pi / self.K, n, endpoint=False)

    def values(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        acc = np.zeros(sigma.shape, dtype=complex)
        for j, c in self.modes.items():
            acc += c * np.exp(1j * j * self.K * sigma)
        return acc

    def __call__(self, sigma):
        return self.values(sigma).real

    @property
    def is_constant(self):
        return all(j == 0 for j in self.modes)

    def constant_value(self):
        if not self.is_constant:
            raise ValueError("field is not constant")
        return float(self.modes.get(0, 0.0).real) if self.modes else 0.0

    @classmethod
    def constant(cls, K, value):
        return cls(K, {0: complex(value)})

    @classmethod
    def cosine(cls, K, amplitude, offset=1.0):
        """v(sigma) = offset + amplitude cos(K sigma)."""
        return cls(K, {0: complex(offset), 1: amplitude / 2.0,
                       -1: amplitude / 2.0})

    def __repr__(self):
        return f"VectorFieldK(K={self.K}, modes={self.modes})"


@dataclasses.dataclass(frozen=True)
class FieldValidation:
    min_abs: float
    max_abs: float


def validate_vector_field(X, zero_tol=1e-12):
    """Accept a nowhere-zero field; classify the two rejection modes.

    A zero field would force some degree subspace to be infinite
    dimensional (the ad term bounds the degrees), and a field with zeros
    cannot be rectified to a constant one.
    """
    grid = X.sample_grid()
    # midpoints double-check against sign changes slipping between nodes
    fine = np.concatenate([grid, grid + 0.5 * (grid[1] - grid[0])])
    vals = X(fine)
    vmax = float(np.abs(vals).max())
    if vmax <= zero_tol:
        raise ZeroFieldInfiniteDimensional(
            "zero vector field: the gradation would have infinite "
            "dimensional degree subspaces (degrees are bounded by the "
            "ad-term seminorm)")
    vmin = float(np.abs(vals).min())
    if vmin <= zero_tol or vals.min() < 0.0 < vals.max():
        raise FieldHasZeros(
            f"vector field changes sign or vanishes on the circle "
            f"(min |v| = {vmin:.3e})")
    return FieldValidation(min_abs=vmin, max_abs=vmax)


class GradingOperator:
    """Pair (X, eta) acting as Q xi = -i X(xi) + i [eta, xi]."""

    def __init__(self, X, eta, validate=True):
        if X.K != eta.twist.K:
            raise TwistMismatch(
                f"field has K={X.K}, eta has K={eta.twist.K}")
        self.X = X
        self.eta = eta
        self.twist = eta.twist
        if validate:
            loop_algebra.validate_twist(eta)
            X._validate()

    @classmethod
    def standard(cls, twist):
        """The operator of the standard gradation: v = 1, eta = 0."""
        return cls(VectorFieldK.constant(twist.K, 1.0),
                   loop_algebra.zero_element(twist))

    def __repr__(self):
        return f"GradingOperator(K={self.twist.K}, X={self.X.modes})"


def apply_grading_operator(Q, xi):
    """Q xi = -i v xi' + i [eta, xi], computed in mode arithmetic."""
    if xi.twist != Q.twist:
        raise TwistMismatch("element carries different twist data")
    out = {}
    K = Q.X.K
    for k, v in xi.modes.items():
        dv = 1j * k * v
        for j, c in Q.X.modes.items():
            key = k + j * K
            term = -1j * c * dv
            out[key] = out.get(key, 0) + term
    result = LoopElement(xi.twist, loop_algebra._pruned(out))
    if not Q.eta.is_zero():
        result = result + 1j * loop_bracket(Q.eta, xi)
    return result


@dataclasses.dataclass(frozen=True)
class DerivationReport:
    residuals: tuple
    tol: float

    @property
    def ok(self):
        return all(r < self.tol for r in self.residuals)

    @property
    def worst(self):
        return max(self.residuals) if self.residuals else 0.0


def check_derivation(apply_fn, pairs, tol=DEFAULT_TOL):
    """Residuals || D[xi,eta] - [D xi, eta] - [xi, D eta] ||_1 per pair.

    ``apply_fn`` is any linear operator on loop elements (a
    GradingOperator is accepted and wrapped).
    """
    if isinstance(apply_fn, GradingOperator):
        Q = apply_fn
        apply_fn = lambda z: apply_grading_operator(Q, z)  # noqa: E731
    residuals = []
    for xi, eta in pairs:
        lhs = apply_fn(loop_bracket(xi, eta))
        rhs = loop_bracket(apply_fn(xi), eta) + loop_bracket(xi, apply_fn(eta))
        residuals.append(loop_algebra.seminorm(lhs - rhs, 1))
    return DerivationReport(residuals=tuple(residuals), tol=tol)


class DerivationOperator:
    """D xi = -X(xi) + [eta, xi]; relates to grading operators by Q = i D."""

    def __init__(self, X, eta):
        if X.K != eta.twist.K:
            raise TwistMismatch(
                f"field has K={X.K}, eta has K={eta.twist.K}")
        self.X = X
        self.eta = eta
        self.twist = eta.twist

    def __call__(self, xi):
        if xi.twist != self.twist:
            raise TwistMismatch("element carries different twist data")
        out = {}
        K = self.X.K
        for k, v in xi.modes.items():
            dv = 1j * k * v
            for j, c in self.X.modes.items():
                key = k + j * K
                out[key] = out.get(key, 0) - c * dv
        result = LoopElement(xi.twist, loop_algebra._pruned(out))
        if not self.eta.is_zero():
            result = result + loop_bracket(self.eta, xi)
        return result


def derivation_from_pair(X, eta):
    """Derivation built from a field and the inner part ad(eta)."""
    return DerivationOperator(X, eta)


def grading_operator_from_derivation(D):
    """The grading operator i D associated with a derivation pair."""
    return GradingOperator(D.X, D.eta)


# ---------------------------------------------------------------------------
# degree subspaces on a finite window
# ---------------------------------------------------------------------------

class GradationTable:
    """Degree decomposition of the windowed space under a grading operator.

    ``entries`` is a list of (degree, basis elements); every basis element
    xi satisfies ||Q xi - degree xi|| <= tol.  Degrees ascend and bases are
    deterministic for identical inputs.
    """

    def __init__(self, twist, window, entries, residuals, flat_basis,
                 degrees, index):
        self.twist = twist
        self.window = int(window)
        self.entries = entries
        self.residuals = residuals
        self._flat_basis = flat_basis        # columns: eigenvectors
        self._degrees = degrees              # degree per column
        self._index = index                  # list of (mode k, eigvec)
        self._lu = scipy.linalg.lu_factor(flat_basis)

    @property
    def degrees(self):
        return sorted(e[0] for e in self.entries)

    def dims(self):
        return {deg: len(basis) for deg, basis in self.entries}

    def _flatten(self, xi, tol):
        dim_flat = self._flat_basis.shape[0]
        vec = np.zeros(dim_flat, dtype=complex)
        leak = 0.0
        consumed = np.zeros(self.twist.algebra.dim, dtype=complex)
        by_mode = {}
        for pos, (k, evec) in enumerate(self._index):
            by_mode.setdefault(k, []).append((pos, evec))
        for k, v in xi.modes.items():
            slots = by_mode.get(k)
            if slots is None:
                leak = max(leak, float(np.abs(v).max()))
                continue
            consumed[:] = 0.0
            for pos, evec in slots:
                c = np.vdot(evec, v)
                vec[pos] = c
                consumed += c * evec
            leak = max(leak, float(np.abs(v - consumed).max()))
        if leak > tol:
            raise WindowLeakage(
                f"element does not lie in the windowed space: "
                f"residual {leak:.3e}")
        return vec

    def _unflatten(self, vec):
        modes = {}
        for pos, (k, evec) in enumerate(self._index):
            if abs(vec[pos]) > 1e-15:
                modes[k] = modes.get(k, 0) + vec[pos] * evec
        return make_loop_element(self.twist, modes, validate=False)


def grading_subspaces(Q, window, tol=DEFAULT_TOL, int_tol=INT_TOL):
    """Diagonalize Q on the windowed twist-compatible basis.

    Requires a constant field: a non-constant v does not preserve any
    finite window, so such operators must be rectified first (see the
    normalizer).  Leakage of the ad term outside the window is measured and
    rejected above tol.

    Raises
    ------
    WindowLeakage, NonIntegerSpectrum, DefectiveOperator
    """
    if not Q.X.is_constant:
        raise WindowLeakage(
            "non-constant field: no finite mode window is invariant; "
            "rectify the field to a constant one first")
    kappa = Q.X.constant_value()
    twist = Q.twist
    window = int(window)

    # basis of the windowed space: for each mode k a basis of the
    # eigenspace holding that mode
    index = []
    for k in range(-window, window + 1):
        proj = twist.projector(k)
        u, s, _ = np.linalg.svd(proj)
        d = int((s > 0.5).sum())
        for c in range(d):
            index.append((k, u[:, c].copy()))
    n = len(index)

    # matrix of Q on that basis, with leakage measured
    mat = np.zeros((n, n), dtype=complex)
    leakage = 0.0
    by_mode = {}
    for pos, (k, evec) in enumerate(index):
        by_mode.setdefault(k, []).append((pos, evec))
    for col, (k, evec) in enumerate(index):
        xi = LoopElement(twist, {k: evec})
        out = apply_grading_operator(Q, xi)
        for kk, vv in out.modes.items():
            slots = by_mode.get(kk)
            if slots is None:
                leakage = max(leakage, float(np.abs(vv).max()))
                continue
            rem = vv.copy()
            for pos, bvec in slots:
                c = np.vdot(bvec, vv)
                mat[pos, col] = c
                rem -= c * bvec
            leakage = max(leakage, float(np.abs(rem).max()))
    if leakage > tol:
        raise WindowLeakage(
            f"operator leaks {leakage:.3e} outside the window "
            f"(radius {window})")

    evals, evecs = scipy.linalg.eig(mat)
    worst_int = 0.0
    degrees = np.empty(n, dtype=int)
    for i, lam in enumerate(evals):
        d = int(np.round(lam.real))
        residual = abs(lam - d)
        worst_int = max(worst_int, residual)
        degrees[i] = d
    if worst_int > int_tol:
        bad = evals[np.argmax([abs(l - np.round(l.real)) for l in evals])]
        raise NonIntegerSpectrum(
            f"spectrum is not integral: eigenvalue {bad:.6f} is "
            f"{worst_int:.3e} from the nearest integer")

    entries = []
    residuals = {}
    flat_cols = []
    flat_degrees = []
    for d in sorted(set(degrees.tolist())):
        block = _nullspace(mat - d * np.eye(n))
        if block.shape[1] == 0:
            raise DefectiveOperator(
                f"no eigenvector found for degree {d}")
        block = _canonical_columns(block)
        res = float(np.abs(mat @ block - d * block).max())
        residuals[d] = res
        if res > max(tol, 100 * worst_int):
            raise DefectiveOperator(
                f"degree {d} basis fails its eigen relation: {res:.3e}")
        basis_elements = []
        for c in range(block.shape[1]):
            modes = {}
            for pos, (k, evec) in enumerate(index):
                if abs(block[pos, c]) > 1e-15:
                    modes[k] = modes.get(k, 0) + block[pos, c] * evec
            basis_elements.append(
                make_loop_element(twist, modes, validate=False))
            flat_cols.append(block[:, c])
            flat_degrees.append(d)
        entries.append((d, basis_elements))

    total = sum(len(b) for _, b in entries)
    if total != n:
        raise DefectiveOperator(
            f"degree subspaces fill {total} of {n} dimensions")
    flat_basis = np.array(flat_cols).T
    return GradationTable(twist, window, entries, residuals, flat_basis,
                          np.array(flat_degrees), index)


def _nullspace(mat, cutoff=1e-8):
    _, s, vh = np.linalg.svd(mat)
    rank = int((s > cutoff * max(1.0, s[0])).sum())
    return vh[rank:].conj().T


def _canonical_columns(block):
    """Deterministic orientation and order for a subspace basis.

    Phase-fix each column at its largest component, then sort columns by
    the position of that component so identical inputs give identical
    tables.
    """
    cols = []
    for c in range(block.shape[1]):
        v = block[:, c]
        lead = int(np.abs(v).argmax())
        phase = v[lead] / abs(v[lead])
        cols.append((lead, v / phase))
    cols.sort(key=lambda t: t[0])
    return np.array([v for _, v in cols]).T


def flow(tau, xi, table, tol=DEFAULT_TOL):
    """Phase flow: multiply the degree-d component by e^(-i d tau)."""
    if xi.twist != table.twist:
        raise TwistMismatch("element carries different twist data")
    vec = table._flatten(xi, tol)
    coeffs = scipy.linalg.lu_solve(table._lu, vec)
    coeffs = coeffs * np.exp(-1j * table._degrees * float(tau))
    return table._unflatten(table._flat_basis @ coeffs)


def grading_components(xi, table, tol=DEFAULT_TOL):
    """Decompose xi into its degree components under the table."""
    vec = table._flatten(xi, tol)
    coeffs = scipy.linalg.lu_solve(table._lu, vec)
    out = {}
    for d in sorted(set(table._degrees.tolist())):
        mask = table._degrees == d
        full = np.zeros_like(coeffs)
        full[mask] = coeffs[mask]
        element = table._unflatten(table._flat_basis @ full)
        if not element.is_zero():
            out[d] = element
    return out
