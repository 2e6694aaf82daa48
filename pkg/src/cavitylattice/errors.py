"""Exception hierarchy shared across the package."""


class CavityLatticeError(Exception):
    """Base class for all package errors."""


class InfeasibleSectorError(CavityLatticeError, ValueError):
    pass


class BasisLookupError(CavityLatticeError, LookupError):
    pass


class OperatorMismatchError(CavityLatticeError, ValueError):
    pass


class ContractError(CavityLatticeError, ValueError):
    """An operation was called outside its documented preconditions."""


class QuadratureError(CavityLatticeError, RuntimeError):
    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error


class CavitySingularityError(CavityLatticeError, ZeroDivisionError):
    pass


class AssemblyError(CavityLatticeError, ValueError):
    pass


class NonNearestNeighbourError(CavityLatticeError, ValueError):
    pass


class StepSizeError(CavityLatticeError, ValueError):
    pass


class NumericalUnderflowError(CavityLatticeError, FloatingPointError):
    pass


class NonHermitianError(CavityLatticeError, ValueError):
    pass


class ConvergenceError(CavityLatticeError, RuntimeError):
    pass
