"""Tensor rank, border rank and the ill-posedness of low-rank approximation.

Exact orbit classification of real 2x2x2 tensors, generators for
rank-jumping sequences, and CP / border-rank-2 fitting with degeneracy
diagnostics.
"""

from .approx import (
    GENERATORS,
    HALF_SQUARED_NORM,
    BoundaryModel,
    BregmanGenerator,
    CpModel,
    DegeneracyReport,
    FitTrace,
    als_cp,
    best_rank1,
    bregman,
    degeneracy_report,
    weak_rank2,
)
from .constructions import (
    LeibnizSpec,
    SequenceHandle,
    build_diag_rank,
    dsl_sequence,
    dsl_tensor,
    gap_sequence,
    leibniz_quotient,
    leibniz_sequence,
    leibniz_tensor,
    random_orbit_sample,
    rank_plus_one_instance,
)
from .errors import DimensionError, ToleranceError
from .io import read_tensor, write_tensor
from .rank222 import (
    MultilinearRankError,
    OrbitClass,
    OrbitReport,
    Unclassified,
    classify222,
    classify_general,
    delta,
    delta_extended,
    mrank_by_minors,
    rank_bounds,
    reduce222,
    table1,
)
from .tensor_core import (
    DenseTensor,
    MlRank,
    MultilinearMap,
    Projector,
    direct_sum,
    embed_pad,
    flatten,
    frobenius,
    mmm,
    mrank,
    outer_product,
    permute_modes,
    project_onto_support,
    supporting_projector,
    tensor,
)

__version__ = "0.1.0"
