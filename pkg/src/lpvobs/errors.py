"""Exception types shared across the toolkit."""


class ModelStructureError(ValueError):
    """A matrix has inconsistent dimensions or a required field is malformed."""


class WeightError(ValueError):
    """A scheduling weight vector violates the simplex constraints."""


class BoundednessError(ValueError):
    """rank(C2 G2) != p - p_H: the input/state estimation errors cannot be
    bounded by any gain, so the filter construction is refused."""


class StructuralError(RuntimeError):
    """A structural pre-flight check (existence report) failed."""


class InfeasibleError(RuntimeError):
    """The gain synthesis SDP is infeasible. Carries the solver status."""

    def __init__(self, message, solver_status=None, solver_name=None):
        super().__init__(message)
        self.solver_status = solver_status
        self.solver_name = solver_name


class ConvergenceError(RuntimeError):
    """Radius convergence (contraction factor < 1) cannot be certified."""


class ContainmentError(RuntimeError):
    """A simulated error left its certified ball: implementation or
    certificate bug. Carries the offending trial/step."""

    def __init__(self, message, trial=None, step=None, seed=None):
        super().__init__(message)
        self.trial = trial
        self.step = step
        self.seed = seed
