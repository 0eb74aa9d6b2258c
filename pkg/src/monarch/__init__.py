"""Monarch structured matrices.

A Monarch matrix is a permuted product of two block-diagonal matrices,
M = P.T Ltilde P R. The package provides the structured classes and
permutation machinery, a fast batched application path, optimal Frobenius
projection of dense matrices onto the Monarch set, exact factorization of
MM* products via simultaneous diagonalization, butterfly/DFT/Hadamard
containment constructions, analytic gradients, and a file-format CLI.
"""

from .butterfly import (
    ButterflyFactorMatrix,
    ButterflyMatrix,
    butterfly_matvec,
    butterfly_to_monarch,
    dft_butterfly,
    hadamard_butterfly,
    random_butterfly,
)
from .core import (
    ASSUMPTION1,
    MonarchMatrix,
    MonarchProduct,
    hierarchy,
    mm_star,
    monarch_flop_count,
    monarch_matvec,
    monarch_matvec_adjoint,
    monarch_param_count,
    monarch_to_dense,
    mstar_m,
    permuted_to_mstar_m,
    product_matvec,
    product_to_dense,
    random_mm_star,
    random_monarch,
)
from .counting import count_multiplies
from .errors import (
    BadBlocking,
    BadSize,
    DefectiveMatrix,
    DimensionMismatch,
    IndexOutOfRange,
    MonarchError,
    NoConvergence,
    ParseError,
    SimDiagFailed,
    SingularBlock,
    SingularMatrix,
    UnsupportedBlocking,
)
from .factorization import (
    MMStarFactorization,
    SimDiagResult,
    assumption1_check,
    factorize_mm_star,
    simultaneous_diagonalize,
)
from .gradients import MonarchTangent, gradcheck, matvec_vjp
from .indexing import (
    BlockForm,
    BlockPermutation,
    IndexPermutation,
    block_form,
    permutation_matrix,
    permute_cols,
    permute_rows,
    permute_vector,
)
from .numerics import EigResult, SvdResult, eig, lu_invert, matmul, rank1_approx, svd
from .projection import ProjectionReport, project, slice_singular_ratios, slice_view
from .structured import (
    BlockDiagMatrix,
    DiagBlockMatrix,
    bd_matvec,
    bd_membership,
    bd_to_db,
    class_containment_check,
    db_membership,
    db_to_bd,
)

__version__ = "0.1.0"
