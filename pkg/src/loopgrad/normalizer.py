"""Normalization of grading operators to the standard form.

Pipeline: fix orientation, rectify the vector field to a constant kappa,
transport the inner part through the rectifying diffeomorphism, solve the
conjugation ODE kappa g^-1 dg/ds = -eta, read off the monodromy g, and
return the standard-form data (a' = a . Ad(g), K' = kappa K) together with
diagnostics (integrality and order residuals, determinant drift, and the
bracket-shift term whose vanishing certifies the conjugation).
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from typing import Optional

import numpy as np
import scipy.integrate

from . import gradation, lie_core, loop_algebra
from .errors import (
    InconsistentMonodromy,
    NonIntegerKPrime,
    NonIntegerSpectrum,
    NotFiniteOrder,
    NumericalFailure,
    QuadratureFailure,
    StepSizeUnderflow,
    TwistMismatch,
)
from .gradation import GradingOperator, VectorFieldK, validate_vector_field
from .lie_core import GroupElement
from .loop_algebra import (
    CircleDiffeoLift,
    LoopAutomorphism,
    TwistData,
    apply_loop_automorphism,
)

DEFAULT_KPRIME_TOL = 1e-6
DEFAULT_ORDER_TOL = 1e-8
DEFAULT_STEPS = 4096


@dataclasses.dataclass(frozen=True)
class RectificationResult:
    """Rectifying lift with f_* X = kappa d/ds and its error estimates."""
    f: CircleDiffeoLift
    kappa: float
    quadrature_error: float
    pushforward_residual: float


def rectify_vector_field(X, samples=512, max_refine=3):
    """Rectify a nowhere-zero field to a constant one.

    kappa is fixed by one full-period adaptive quadrature of 1/v; the lift
    is fitted from cumulative subinterval quadratures.  The pushforward is
    checked on off-grid points and the fit is refined until the residual is
    below 1e-8.
    """
    validate_vector_field(X)
    K = X.K
    period = 2.0 * np.pi / K
    if X.is_constant:
        kappa = X.constant_value()
        return RectificationResult(CircleDiffeoLift.identity(K), kappa,
                                   0.0, 0.0)

    def integrand(s):
        return 1.0 / X(np.array([s]))[0]

    total, toterr = _quad(integrand, 0.0, period)
    kappa = period / total

    last_residual = math.inf
    for attempt in range(max_refine):
        P = samples * 2 ** attempt
        edges = period * np.arange(P + 1) / P
        seg = np.empty(P)
        segerr = 0.0
        for i in range(P):
            seg[i], err = _quad(integrand, edges[i], edges[i + 1])
            segerr += err
        cum = np.concatenate([[0.0], np.cumsum(seg)])[:-1]
        displacement = kappa * cum - edges[:-1]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", loop_algebra.TruncationWarning)
            f = CircleDiffeoLift.from_samples(K, displacement,
                                              window=P // 3)
        check = period * (np.arange(64) + 0.371) / 64
        tau = f.inverse_grid(check)
        pushed = X(tau) * f.deriv(tau)
        last_residual = float(np.abs(pushed - kappa).max())
        if last_residual < 1e-8:
            return RectificationResult(f, kappa, toterr + segerr,
                                       last_residual)
    raise QuadratureFailure(
        f"pushforward residual {last_residual:.3e} did not reach 1e-8 "
        f"after {max_refine} refinements")


def _quad(fn, a, b):
    out = scipy.integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-13,
                               limit=200, full_output=1)
    if len(out) > 3:
        raise QuadratureFailure(f"adaptive quadrature trouble: {out[3]}")
    return out[0], out[1]


@dataclasses.dataclass(frozen=True)
class OrientationFix:
    Q: GradingOperator
    twist: TwistData
    flipped: bool


def orientation_fix(Q, twist=None):
    """Reflect the circle when the field is negative, so kappa > 0.

    Reflection maps the algebra onto the one twisted by the inverse
    automorphism: v(s) -> -v(-s), eta(s) -> eta(-s), a -> a^-1.  Applying
    the fix twice returns the original data.
    """
    twist = twist if twist is not None else Q.twist
    if twist != Q.twist:
        raise TwistMismatch("operator carries different twist data")
    if Q.X(np.zeros(1))[0] > 0.0:
        return OrientationFix(Q, twist, False)
    new_twist = TwistData(twist.algebra, twist.automorphism.inverse(),
                          twist.K)
    v_modes = {j: -np.conj(c) for j, c in Q.X.modes.items()}
    new_X = VectorFieldK(Q.X.K, v_modes)
    eta_modes = {-k: v for k, v in Q.eta.modes.items()}
    new_eta = loop_algebra.make_loop_element(new_twist, eta_modes)
    return OrientationFix(GradingOperator(new_X, new_eta), new_twist, True)


# ---------------------------------------------------------------------------
# conjugation ODE and monodromy
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class SolvedPath:
    """Dense solution of kappa g^-1 dg/ds = -eta over a whole number of
    periods, with gamma(0) = I; values off the grid come from one extra
    integration step from the nearest grid node."""
    kappa: float
    period: float
    s: np.ndarray
    mats: np.ndarray
    ode_residual: float
    det_drift: float

    def at_index(self, j):
        return self.mats[j]

    def value(self, sigma):
        j = int(round(sigma / (self.s[1] - self.s[0])))
        if abs(self.s[j] - sigma) < 1e-12:
            return self.mats[j]
        raise ValueError("off-grid path evaluation is not supported")


def solve_conjugation_ode(eta, kappa, steps=DEFAULT_STEPS, periods=2):
    """Fourth-order fixed-step integration with per-step determinant
    projection back to SL(n+1)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive; run orientation_fix first")
    if steps < 8:
        raise StepSizeUnderflow("need at least 8 steps per period")
    twist = eta.twist
    alg = twist.algebra
    n1 = alg.defining_dim
    period = 2.0 * np.pi / twist.K
    total = int(steps) * int(periods)
    h = period / steps

    halves = 0.5 * h * np.arange(2 * total + 1)
    coeffs = loop_algebra.evaluate_grid(eta, halves)
    a_samples = np.tensordot(coeffs, alg.basis_matrices, axes=(1, 0))
    a_samples *= -1.0 / kappa

    mats = np.empty((total + 1, n1, n1), dtype=complex)
    g = np.eye(n1, dtype=complex)
    mats[0] = g
    det_drift = 0.0
    for j in range(total):
        a0 = a_samples[2 * j]
        a1 = a_samples[2 * j + 1]
        a2 = a_samples[2 * j + 2]
        k1 = g @ a0
        k2 = (g + 0.5 * h * k1) @ a1
        k3 = (g + 0.5 * h * k2) @ a1
        k4 = (g + h * k3) @ a2
        g = g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        det = np.linalg.det(g)
        if not np.isfinite(det) or abs(det) < 1e-8:
            raise StepSizeUnderflow(
                f"integration lost the group at step {j}")
        det_drift = max(det_drift, abs(det - 1.0))
        g = g * np.exp(-np.log(det) / n1)
        mats[j + 1] = g

    s = h * np.arange(total + 1)
    residual = _ode_residual(mats, a_samples[::2], h, kappa)
    return SolvedPath(kappa=kappa, period=period, s=s, mats=mats,
                      ode_residual=residual, det_drift=det_drift)


def _ode_residual(mats, a_grid, h, kappa):
    """Check kappa g^-1 g' + eta = 0 with five-point difference derivatives."""
    total = mats.shape[0] - 1
    checks = range(2, total - 1, max(1, total // 32))
    worst = 0.0
    for j in checks:
        dg = (-mats[j + 2] + 8 * mats[j + 1] - 8 * mats[j - 1]
              + mats[j - 2]) / (12.0 * h)
        res = np.linalg.inv(mats[j]) @ dg - a_grid[j]
        worst = max(worst, float(np.abs(res).max()))
    return worst * kappa


@dataclasses.dataclass(frozen=True)
class MonodromyResult:
    path: SolvedPath
    g: GroupElement
    consistency_residual: float

    @property
    def ode_residual(self):
        return self.path.ode_residual

    @property
    def det_drift(self):
        return self.path.det_drift


def monodromy(path, twist, tol=1e-8):
    """Group element g with gamma(s + period) = a(g gamma(s)).

    With gamma(0) = I the defining relation at s = 0 gives
    g = a^-1(gamma(period)); the relation is then re-checked at 32 interior
    grid points using the second integrated period.
    """
    realization = twist.automorphism.realization
    if realization is None:
        realization = lie_core.recover_realization(twist.automorphism)
    steps = int(round(path.period / (path.s[1] - path.s[0])))
    if path.mats.shape[0] < 2 * steps + 1:
        raise ValueError("path must span two periods for the "
                         "consistency check")
    g_mat = realization.inverse().apply_group(path.mats[steps])
    scale = max(1.0, float(np.abs(path.mats).max()))
    worst = 0.0
    for j in range(0, steps, max(1, steps // 32)):
        lhs = path.mats[j + steps]
        rhs = realization.apply_group(g_mat @ path.mats[j])
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    if worst > tol * scale:
        raise InconsistentMonodromy(
            f"twisted periodicity of the path fails at interior points: "
            f"residual {worst:.3e}")
    g = GroupElement(twist.algebra, g_mat, det_tol=1e-8)
    return MonodromyResult(path=path, g=g, consistency_residual=worst)


# ---------------------------------------------------------------------------
# transporting the inner part and conjugating whole operators
# ---------------------------------------------------------------------------

def pushforward_field(X, f, window=None, tol=1e-9):
    """f_* X as a field: v'(f(s)) = v(s) f'(s)."""
    if f.is_rotation:
        c = f.rotation
        return VectorFieldK(X.K, {j: cj * np.exp(-1j * j * X.K * c)
                                  for j, cj in X.modes.items()})
    max_j = max([abs(j) for j in X.modes] +
                [abs(j) for j in f.periodic_modes] + [1])
    if window is None:
        window = 4 * max_j + 4
    P = max(256, 8 * window)
    grid = (2.0 * np.pi / X.K) * np.arange(P) / P
    tau = f.inverse_grid(grid)
    u = X(tau) * f.deriv(tau)
    spec = np.fft.fft(u) / P
    modes = {}
    for idx in range(P):
        j = idx if idx <= P // 2 else idx - P
        if abs(j) <= window and abs(spec[idx]) > 1e-14:
            modes[j] = spec[idx]
    return VectorFieldK(X.K, modes)


def transport_eta(eta, f, window=None, tol=1e-9):
    """eta . f^-1; exact mode arithmetic when f is a rotation."""
    return apply_loop_automorphism(f, None, eta, window=window, tol=tol)


def conjugate_operator(Q, pair, window=None, tol=1e-9):
    """Grading operator of the gradation conjugated by (f, alpha).

    The field maps by pushforward; the inner part picks up, next to the
    transported alpha(eta . f^-1), the logarithmic-derivative term solved
    from ad(zeta(s)) = alpha'(s) alpha(s)^-1 and weighted by the pushed
    field.  Used by the round-trip checks to generate disguised standard
    operators.
    """
    f, alpha = pair.f, pair.alpha
    twist = Q.twist
    alg = twist.algebra
    new_X = pushforward_field(Q.X, f, window=window)
    if (alpha is None or not alpha.factors) and f.is_rotation:
        return GradingOperator(new_X, transport_eta(Q.eta, f, window=window))

    if window is None:
        window = loop_algebra.default_window(f, alpha, Q.eta) + 2 * twist.K
    P = loop_algebra._action_grid(twist, window)
    sigmas = 2.0 * np.pi * np.arange(P) / P
    taus = f.inverse_grid(sigmas)
    eta_vals = np.zeros((P, alg.dim), dtype=complex)
    for k, v in Q.eta.modes.items():
        eta_vals += np.exp(1j * k * taus)[:, None] * v[None, :]
    u_vals = Q.X(taus) * f.deriv(taus)
    out = np.empty((P, alg.dim), dtype=complex)
    for idx in range(P):
        if alpha is not None and alpha.factors:
            aval, adval = alpha.value_and_deriv(sigmas[idx])
            base = aval @ eta_vals[idx]
            dlog = adval @ np.linalg.inv(aval)
            zeta = alg.solve_ad(dlog)
        else:
            base = eta_vals[idx]
            zeta = 0.0
        out[idx] = base + u_vals[idx] * zeta
    new_eta = loop_algebra.fourier_project(out, twist, window, tol=tol,
                                           eigenspace_clean=True)
    return GradingOperator(new_X, new_eta)


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class NormalizationResult:
    """Standard-form data of an integrable gradation plus diagnostics."""
    a_prime: lie_core.AlgebraAutomorphism
    K_prime: int
    kappa: float
    integrality_residual: float
    order_residual: float
    flipped: bool
    rectification: RectificationResult
    monodromy: MonodromyResult
    shift_residual: float
    dims: tuple
    semisimple_ok: bool

    @property
    def algebra(self):
        return self.a_prime.algebra

    def summary(self):
        return {
            "algebra": self.algebra.label,
            "K_prime": self.K_prime,
            "kappa": self.kappa,
            "integrality_residual": self.integrality_residual,
            "order_residual": self.order_residual,
            "flipped": self.flipped,
            "dims": list(self.dims),
            "semisimple_ok": self.semisimple_ok,
        }


def normalize(Q, twist=None, tol=DEFAULT_KPRIME_TOL,
              order_tol=DEFAULT_ORDER_TOL, steps=DEFAULT_STEPS,
              window=None):
    """Bring a grading operator to the standard form of L_(a', K').

    Raises the structured rejections NonIntegerKPrime (kappa K off the
    integers: the input was not an integral gradation with finite
    dimensional subspaces), NonIntegerSpectrum (a' eigenphases off the
    K'-th roots of unity) and NotFiniteOrder, plus upstream field/ODE
    errors.
    """
    if twist is not None and twist != Q.twist:
        raise TwistMismatch("operator carries different twist data")
    fix = orientation_fix(Q)
    Q, twist = fix.Q, fix.twist
    K = twist.K

    rect = rectify_vector_field(Q.X)
    kappa = rect.kappa
    eta_hat = transport_eta(Q.eta, rect.f, window=window)

    path = solve_conjugation_ode(eta_hat, kappa, steps=steps, periods=2)
    mono = monodromy(path, twist)
    a_prime = twist.automorphism.compose(
        lie_core.inner_automorphism(twist.algebra, mono.g))

    k_real = kappa * K
    K_prime = int(round(k_real))
    integrality = abs(k_real - K_prime)
    if K_prime < 1 or integrality > tol:
        raise NonIntegerKPrime(
            f"kappa K = {k_real:.9f} is {integrality:.3e} from an integer; "
            "the gradation is not an integral one with finite dimensional "
            "subspaces", value=k_real)

    phases = np.angle(np.linalg.eigvals(a_prime.matrix))
    scaled = phases * K_prime / (2.0 * np.pi)
    spec_residual = float(np.abs(scaled - np.round(scaled)).max())
    if spec_residual > max(tol, 1e-6):
        raise NonIntegerSpectrum(
            f"eigenphases of the standard-form automorphism are "
            f"{spec_residual:.3e} from integers over K' = {K_prime}; the "
            "original spectrum was not integral")

    power = a_prime.power(K_prime)
    order_residual = float(
        np.abs(power.matrix - np.eye(twist.algebra.dim)).max())
    if order_residual > max(order_tol, 100 * spec_residual):
        raise NotFiniteOrder(
            f"standard-form automorphism misses order {K_prime}: "
            f"residual {order_residual:.3e}")

    semisimple_ok = True
    try:
        spaces = lie_core.eigenspace_gradation(
            a_prime, K_prime, tol=max(1e-7, 100 * order_residual))
        dims = tuple(b.shape[1] for _, b in spaces)
    except NumericalFailure:
        semisimple_ok = False
        dims = ()

    shift = _shift_residual(path, eta_hat, kappa)

    return NormalizationResult(
        a_prime=a_prime, K_prime=K_prime, kappa=kappa,
        integrality_residual=integrality, order_residual=order_residual,
        flipped=fix.flipped, rectification=rect, monodromy=mono,
        shift_residual=shift, dims=dims, semisimple_ok=semisimple_ok)


def _shift_residual(path, eta_hat, kappa):
    """Sup of || gamma eta gamma^-1 + kappa gamma' gamma^-1 ||.

    The conjugated operator keeps this combination as its inner part; by
    construction of gamma it must vanish, and the derivative here is an
    independent finite-difference estimate, so the value certifies the
    conjugation rather than restating the ODE right-hand side.
    """
    mats = path.mats
    h = path.s[1] - path.s[0]
    alg = eta_hat.twist.algebra
    total = mats.shape[0] - 1
    worst = 0.0
    for j in range(2, total - 1, max(1, total // 24)):
        dg = (-mats[j + 2] + 8 * mats[j + 1] - 8 * mats[j - 1]
              + mats[j - 2]) / (12.0 * h)
        ginv = np.linalg.inv(mats[j])
        eta_mat = loop_algebra.evaluate_matrix(eta_hat, path.s[j])
        shift = mats[j] @ eta_mat @ ginv + kappa * dg @ ginv
        coeffs = alg.coeffs_of_matrix(shift, tol=1.0)
        worst = max(worst, float(np.abs(coeffs).max()))
    return worst


def standard_gradation_dims(result):
    """Degree-subspace dimension per residue class of the standard form."""
    return dict(enumerate(result.dims))


def compare_normalizations(r1, r2, tol=1e-6):
    """Equivalence of two normalized gradations.

    True iff K' agree and the standard-form automorphisms are conjugate,
    decided through eigenvalue multiplicities plus Kac-label identification
    at the supported ranks, with an explicit matrix certificate as a
    fallback for inner pairs.  Raises Undecided rather than returning a
    silent False when no route is conclusive.
    """
    from . import classify
    from .errors import Ambiguous, NoMatch, Undecided

    if r1.algebra != r2.algebra:
        return False
    if r1.K_prime != r2.K_prime:
        return False
    if r1.dims and r2.dims and sorted(r1.dims) != sorted(r2.dims):
        return False
    try:
        l1 = classify.kac_label_of(r1.a_prime, r1.K_prime, tol=tol)
        l2 = classify.kac_label_of(r2.a_prime, r2.K_prime, tol=tol)
        return l1 == l2
    except (NoMatch, Ambiguous):
        pass
    cert = classify.inner_conjugacy_certificate(
        r1.a_prime, r2.a_prime, tol=tol)
    if cert is not None:
        return True
    raise Undecided(
        "conjugacy could not be decided: label identification failed and "
        "no inner certificate was found")
