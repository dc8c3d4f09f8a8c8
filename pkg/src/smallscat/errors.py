"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class SmallScatError(Exception):
    exit_code = 1
    code = "error"


class ValidationError(SmallScatError, ValueError):
    """Input violates a documented constraint (sign, range, shape)."""

    exit_code = 2
    code = "validation"


class MeshError(ValidationError):
    code = "mesh"


class SingularEvaluationError(ValidationError):
    """Kernel evaluated at coincident points."""

    code = "singular-evaluation"


class SolverError(SmallScatError, RuntimeError):
    """Linear solve failed or produced an untrustworthy result."""

    exit_code = 3
    code = "solver"

    def __init__(self, message, condition=None, residual=None):
        super().__init__(message)
        self.condition = condition
        self.residual = residual


class ComparisonError(SmallScatError):
    """Two runs differ beyond tolerance, or their outputs do not match in schema."""

    exit_code = 4
    code = "comparison"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code
