"""Simultaneous diagonalization of Hermitian matrices by *-congruence."""

from .core import (
    DEFAULT_TOL,
    CongruenceResult,
    HermitianMatrix,
    MatrixFamily,
    Tolerances,
    backward_error,
    common_kernel,
    commutator_defect,
    deflate_common_kernel,
    hermitian_eig,
    is_commuting,
    make_hermitian,
    off2,
    pd_sqrt,
    svd_rank,
)
from .detect import (
    DetectReport,
    Route,
    Verdict,
    block_partition,
    detect_via_pencil,
    is_real_diagonalizable,
    sdc_commuting_recursive,
)
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    InputError,
    MaxSweepsExceeded,
    NonFinite,
    NotCommuting,
    NotHermitian,
    NotPositiveDefinite,
    NumericalError,
    SDCError,
    VerdictConflict,
    WitnessNotFound,
)
from .jacobi import JointDiagResult, Rotation, joint_diagonalize
from .schmudgen import max_rank_witness, numeric_max_rank, pencil_from_family, schmudgen_run
from .sdp import build_system, find_pd, solution_space
from .solver import SolveOutcome, detect, random_sdc_family, solve

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "CongruenceResult",
    "HermitianMatrix",
    "MatrixFamily",
    "Tolerances",
    "backward_error",
    "common_kernel",
    "commutator_defect",
    "deflate_common_kernel",
    "hermitian_eig",
    "is_commuting",
    "make_hermitian",
    "off2",
    "pd_sqrt",
    "svd_rank",
    "DetectReport",
    "Route",
    "Verdict",
    "block_partition",
    "detect_via_pencil",
    "is_real_diagonalizable",
    "sdc_commuting_recursive",
    "ConvergenceFailure",
    "DimensionMismatch",
    "InputError",
    "MaxSweepsExceeded",
    "NonFinite",
    "NotCommuting",
    "NotHermitian",
    "NotPositiveDefinite",
    "NumericalError",
    "SDCError",
    "VerdictConflict",
    "WitnessNotFound",
    "JointDiagResult",
    "Rotation",
    "joint_diagonalize",
    "max_rank_witness",
    "numeric_max_rank",
    "pencil_from_family",
    "schmudgen_run",
    "build_system",
    "find_pd",
    "solution_space",
    "SolveOutcome",
    "detect",
    "random_sdc_family",
    "solve",
]
