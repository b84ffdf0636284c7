"""acrsolve: accelerated cyclic reduction for block tridiagonal systems.

Block cyclic reduction in which every block is stored and manipulated as
a weakly admissible hierarchical (HODLR) matrix, plus 2D model-problem
generators, dense reference oracles, and a benchmarking CLI.
"""

from .algebra import (RankProfile, SingularBlockError, add,
                      add_triple_product, invert, matvec, multiply,
                      rank_profile)
from .cluster import ClusterTree, build_cluster_tree
from .hodlr import (HodlrMatrix, LowRankFactor, Tolerance, compress_dense,
                    from_diagonal, from_tridiagonal, truncate_factor)
from .oracles import dense_lu_solve, relative_residual, spectrum_small
from .problems import (BlockTridiagSystem, CoefficientField, Grid2D,
                       assemble_full, checkerboard_kappa, constant_kappa,
                       convdiff2d, gaussian_rhs, helmholtz2d, poisson2d)
from .reduction import (EliminationRecord, HBlockTridiag, SolveReport,
                        acr_solve, backsubstitute, dense_bcr_solve,
                        lift_system, reduce_level)

__version__ = "0.1.0"

__all__ = [
    "ClusterTree", "build_cluster_tree",
    "HodlrMatrix", "LowRankFactor", "Tolerance",
    "compress_dense", "from_tridiagonal", "from_diagonal", "truncate_factor",
    "RankProfile", "SingularBlockError",
    "matvec", "add", "multiply", "invert", "add_triple_product",
    "rank_profile",
    "Grid2D", "CoefficientField", "BlockTridiagSystem",
    "constant_kappa", "checkerboard_kappa",
    "poisson2d", "helmholtz2d", "convdiff2d", "gaussian_rhs", "assemble_full",
    "dense_lu_solve", "relative_residual", "spectrum_small",
    "HBlockTridiag", "EliminationRecord", "SolveReport",
    "lift_system", "reduce_level", "backsubstitute",
    "acr_solve", "dense_bcr_solve",
]
