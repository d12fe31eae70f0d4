"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An input violates a documented precondition."""


class NumericError(RuntimeError):
    """An iterative routine failed to reach its accuracy target."""


class InfeasibleProblem(RuntimeError):
    """The constraint set has no feasible point within the power budget.

    Attributes
    ----------
    worst_user : int or None
        Index of the user whose margin is hardest to satisfy.
    certificate : float or None
        Best attainable minimum margin (negative when infeasible).
    """

    def __init__(self, message, worst_user=None, certificate=None):
        super().__init__(message)
        self.worst_user = worst_user
        self.certificate = certificate


class DegenerateGeometry(RuntimeError):
    """The waveform places the target in a transmit null, so the MVDR
    beamformer is undefined."""


class RandomizationFailure(RuntimeError):
    """Gaussian randomization produced no feasible candidate; retry with a
    different seed."""
