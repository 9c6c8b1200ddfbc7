"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 2), numerical
breakdowns from :class:`NumericalError` (CLI exit code 3).
"""


class SDCError(Exception):
    pass


class InputError(SDCError, ValueError):
    pass


class NotHermitian(InputError):
    def __init__(self, deviation: float, allowed: float):
        super().__init__(f"matrix is not Hermitian: max |A - A*| = {deviation:.3e} > {allowed:.3e}")
        self.deviation = deviation
        self.allowed = allowed


class NonFinite(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NoKernel(SDCError, ValueError):
    pass


class IdenticallyZeroMatrix(SDCError, ValueError):
    pass


class ZeroPivot(SDCError, ValueError):
    pass


class NotCommuting(SDCError, ValueError):
    pass


class NumericalError(SDCError, ArithmeticError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    def __init__(self, min_eig: float):
        super().__init__(f"matrix is not positive definite (min eigenvalue {min_eig:.3e})")
        self.min_eig = min_eig


class StepBudgetExceeded(NumericalError):
    pass


class WitnessNotFound(NumericalError):
    pass


class NotBlockDiagonal(NumericalError):
    pass


class MaxSweepsExceeded(NumericalError):
    def __init__(self, result):
        super().__init__(f"Jacobi sweeps exhausted with off2 = {result.final_off2:.3e}")
        self.result = result


class VerdictConflict(NumericalError):
    def __init__(self, sdp_report, pencil_report):
        super().__init__(
            f"routes disagree: SDP says {sdp_report.verdict.value}, "
            f"pencil says {pencil_report.verdict.value}"
        )
        self.sdp_report = sdp_report
        self.pencil_report = pencil_report
