"""Exception types shared across the package."""


class CurveflowError(Exception):
    """Base class for all curveflow errors."""


class DegenerateCurve(CurveflowError):
    """A polygon violates the discrete immersion condition (a vanishing edge,
    too few vertices, or non-finite coordinates)."""


class NonHorizontalPath(CurveflowError):
    """An operation that is only meaningful for horizontal paths (time
    velocity normal to the curve) received a path with too much tangential
    motion."""


class RequiresPositiveA(CurveflowError):
    """The requested quantity is only defined for a strictly positive
    curvature weight."""


class DegeneratePlane(CurveflowError):
    """Two tangent fields are (numerically) linearly dependent and do not
    span a 2-plane."""


class NonConvergence(CurveflowError):
    """An iterative solver hit its iteration budget.  Solvers normally report
    this through a result flag instead of raising."""


class GridTooCoarse(CurveflowError):
    """A sampling grid is too coarse to resolve the requested construction."""


class SingularAngle(CurveflowError):
    """A tangent-angle function passes too close to a coordinate singularity
    (sin(theta) = 0)."""


class StiffnessFailure(CurveflowError):
    """Adaptive step control underflowed while integrating an ODE."""


class BlowupDetected(CurveflowError):
    """Curvature exceeded the configured ceiling during forward integration.

    Carries the partial trajectory computed so far in ``states``.
    """

    def __init__(self, message, states=None):
        super().__init__(message)
        self.states = states if states is not None else []
