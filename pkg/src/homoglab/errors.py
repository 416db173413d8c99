"""Exception hierarchy.

Every error carries the module and guard that raised it so the CLI can
report failures precisely and map them to exit codes.
"""


class HomogLabError(Exception):
    module = "homoglab"
    guard = "general"

    def __init__(self, message, *, module=None, guard=None):
        super().__init__(message)
        if module is not None:
            self.module = module
        if guard is not None:
            self.guard = guard

    def describe(self):
        return f"[{self.module}:{self.guard}] {self}"


class UnsupportedDimension(HomogLabError, ValueError):
    guard = "dimension"


class PointNotOnBoundary(HomogLabError, ValueError):
    module = "geometry"
    guard = "on-boundary"


class PointNotInterior(HomogLabError, ValueError):
    module = "geometry"
    guard = "interior"


class ResolutionError(HomogLabError):
    """Base for failures of a resolution self-test (CLI exit code 3)."""

    guard = "resolution"


class QuadratureUnderResolved(ResolutionError):
    guard = "quadrature-doubling"


class PointTooCloseToBoundary(ResolutionError):
    module = "solver"
    guard = "boundary-distance"


class MeshUnderResolved(ResolutionError):
    module = "norms_rates"
    guard = "mesh-doubling"


class DegenerateFit(HomogLabError, ValueError):
    module = "norms_rates"
    guard = "fit"


class IllConditioned(HomogLabError):
    module = "cell_homog"
    guard = "condition"


class SingularMatrix(HomogLabError):
    module = "cell_homog"
    guard = "ellipticity"


class ConditionViolated(HomogLabError, ValueError):
    module = "cell_homog"
    guard = "divergence-free"


class UnsupportedData(HomogLabError, ValueError):
    module = "solver"
    guard = "data"
