"""homoglab: numerical laboratory for harmonic functions with oscillating
boundary data, their homogenized limits and convergence rates."""
__version__ = "0.1.0"

from .errors import (ConditionViolated, DegenerateFit, HomogLabError, IllConditioned,  # noqa: F401
                     MeshUnderResolved, PointNotInterior, PointNotOnBoundary,
                     PointTooCloseToBoundary, QuadratureUnderResolved, ResolutionError,
                     SingularMatrix, UnsupportedData, UnsupportedDimension)
from .geometry import ConvexDomain, TorusBall  # noqa: F401
from .torus import BoundaryData, TorusFunction  # noqa: F401
