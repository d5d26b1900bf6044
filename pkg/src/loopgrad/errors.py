"""Exception hierarchy.

Two branches matter for callers (and for the CLI exit-code contract):

* :class:`MathematicalRejection` -- the input is structurally wrong for the
  requested operation (a named condition is violated).  CLI exit code 2.
* :class:`NumericalFailure` -- the computation could not be carried out to
  the requested accuracy.  CLI exit code 1.

Every concrete class carries a short ``condition`` string naming the
violated condition, so reports can state *what* failed, not just *that*
something failed.
"""


class LoopgradError(Exception):
    """Base class for all errors raised by this package."""

    condition = "error"


class MathematicalRejection(LoopgradError):
    """The input violates a structural condition; not a numerics problem."""

    condition = "structural-rejection"


class NumericalFailure(LoopgradError):
    """A computation failed to reach the requested accuracy."""

    condition = "numerical-accuracy"


# ---------------------------------------------------------------------------
# simple Lie algebras
# ---------------------------------------------------------------------------

class UnsupportedAlgebra(MathematicalRejection):
    condition = "supported-algebra-label"


class AlgebraMismatch(MathematicalRejection):
    condition = "same-underlying-algebra"


class InvalidGroupElement(MathematicalRejection):
    condition = "invertible-unit-determinant-matrix"


class InvalidAutomorphism(MathematicalRejection):
    condition = "bracket-preserving-invertible-map"


class NoOuterAutomorphism(MathematicalRejection):
    condition = "diagram-symmetry-exists"


class NotFiniteOrder(MathematicalRejection):
    condition = "finite-order-automorphism"


# ---------------------------------------------------------------------------
# loop algebra
# ---------------------------------------------------------------------------

class TwistViolation(MathematicalRejection):
    condition = "twist-eigenspace-constraint"

    def __init__(self, message, mode=None, residual=None):
        super().__init__(message)
        self.mode = mode
        self.residual = residual


class TwistMismatch(MathematicalRejection):
    condition = "identical-twist-data"


class NonMonotone(MathematicalRejection):
    condition = "orientation-preserving-diffeomorphism"


class NotAbsolutelyConvergent(MathematicalRejection):
    condition = "absolute-seminorm-summability"


class TruncationWarning(UserWarning):
    """Energy outside the requested mode window was discarded."""


# ---------------------------------------------------------------------------
# gradations
# ---------------------------------------------------------------------------

class ZeroFieldInfiniteDimensional(MathematicalRejection):
    condition = "nowhere-zero-vector-field"


class FieldHasZeros(MathematicalRejection):
    condition = "nowhere-zero-vector-field"


class NonIntegerSpectrum(MathematicalRejection):
    condition = "integer-grading-spectrum"


class WindowLeakage(MathematicalRejection):
    condition = "window-stable-operator"


class DefectiveOperator(NumericalFailure):
    condition = "diagonalizable-operator"


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

class QuadratureFailure(NumericalFailure):
    condition = "quadrature-accuracy"


class StepSizeUnderflow(NumericalFailure):
    condition = "ode-step-size"


class InconsistentMonodromy(NumericalFailure):
    condition = "monodromy-relation"


class NonIntegerKPrime(MathematicalRejection):
    condition = "integer-rescaled-period"

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

class UnsupportedTwist(MathematicalRejection):
    condition = "supported-twist-order"


class RealizationOrderMismatch(NumericalFailure):
    condition = "realized-order-equals-label-order"


class NoMatch(MathematicalRejection):
    condition = "enumerated-class-match"


class Ambiguous(NumericalFailure):
    condition = "class-invariants-separate"


class Undecided(NumericalFailure):
    condition = "conjugacy-decision"
