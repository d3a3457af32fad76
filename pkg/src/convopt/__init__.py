"""Communication bounds, optimal tilings and their verification for convolution layers."""
from .bounds import (BoundBreakdown, cnn_projections, cnn_subgroups, hbl_exponents, lower_bound,
                     matmul_lower_bound, max_ops_per_round, pooling_subgroups)
from .cachesim import SimConfig, TrafficReport, reference_convolution, simulate, tile_footprint
from .model import (ALEXNET_CONV1, CacheModel, ConvParams, KernelKind, ParamError, array_sizes,
                    total_flops, validate_params)
from .mplp import Partition, partition_parameter_space, verify_attainability
from .simplex import LPInstance, simplex_solve
from .stride1 import split2, split3, stride1_decision_tree
from .tiling import Tiling, build_tiling_lp, solve_tiling, tiling_comm_cost

__version__ = "0.1.0"

__all__ = [
    "ALEXNET_CONV1", "BoundBreakdown", "CacheModel", "ConvParams", "KernelKind", "LPInstance",
    "ParamError", "Partition", "SimConfig", "Tiling", "TrafficReport", "array_sizes",
    "build_tiling_lp", "cnn_projections", "cnn_subgroups", "hbl_exponents", "lower_bound",
    "matmul_lower_bound", "max_ops_per_round", "partition_parameter_space", "pooling_subgroups",
    "reference_convolution", "simplex_solve", "simulate", "solve_tiling", "split2", "split3",
    "stride1_decision_tree", "tile_footprint", "tiling_comm_cost", "total_flops",
    "validate_params", "verify_attainability",
]
