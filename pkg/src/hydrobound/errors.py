"""Exception hierarchy shared by all modules."""


class HydroboundError(Exception):
    """Base class for every error raised by this package."""


# pauli-core
class WindowTooSmall(HydroboundError, ValueError):
    pass


class WindowTooLarge(HydroboundError, ValueError):
    pass


# k-sector
class IdentityString(HydroboundError, ValueError):
    pass


class TruncationTooLarge(HydroboundError, ValueError):
    pass


# generator
class ChargeNotConserved(HydroboundError):
    pass


# hydro-solver
class DegenerateKernel(HydroboundError):
    pass


class BallisticTransport(HydroboundError):
    def __init__(self, first_order, tolerance):
        self.first_order = first_order
        super().__init__(
            f"first-order dispersion coefficient |b1| = {abs(first_order):.3e} "
            f"exceeds {tolerance:.1e}: transport is ballistic"
        )


class ConvergenceError(HydroboundError):
    """Common parent of the numerical non-convergence failures."""


class SolverDivergence(ConvergenceError):
    pass


class NonDecayingIntegrand(ConvergenceError):
    pass


class StepSizeUnderflow(ConvergenceError):
    pass


class ModeTrackingLost(HydroboundError):
    pass


class GapClosure(HydroboundError):
    pass


# chain-sim
class RingTooLarge(HydroboundError, ValueError):
    pass


class HorizonExceeded(HydroboundError, ValueError):
    pass


class ConeNotResolved(HydroboundError):
    pass


# transport-cli
class ConfigError(HydroboundError, ValueError):
    pass


class ValidationError(HydroboundError, ValueError):
    pass


class InvalidBoundInput(HydroboundError, ValueError):
    pass
