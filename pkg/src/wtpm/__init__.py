"""Weighted trace-penalty minimization for a few extreme eigenpairs of
large sparse symmetric matrices."""

from .cd import CdConfig, CdState, cd_init, cd_solve, load_state, save_state
from .errors import (
    CapacityError,
    DataError,
    DegeneracyError,
    DimensionError,
    EmptyPatternError,
    FormatError,
    InfeasibleWeightError,
    UnsupportedFormatError,
    WtpmError,
)
from .gd import GdConfig, bb_stepsize, gd_solve
from .hamiltonian import HubbardSpec, hubbard_operator, laplacian_eigenvalues, laplacian_operator
from .matrix import SparseColumnMatrix, SymmetricOperator, block_apply, load_matrix_market, write_matrix_market
from .model import (
    Spectrum,
    WeightedPenaltyProblem,
    condition_number,
    global_minimizer,
    gradient,
    hessian_apply,
    objective,
)
from .oracle import DenseSymmetric, dense_eig, eigen_error, hessian_matrix
from .trace import ConvergenceTrace, SolveResult
from .weights import gap_weights, rayleigh_weights, spread_score, uniform_weights

__version__ = "0.1.0"
