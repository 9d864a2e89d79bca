"""Hypersparse multi-temporal analysis of network packet streams."""

from .distributions import (
    BinnedDistribution,
    DegreeHistogram,
    DistributionStats,
    ScalingFit,
    alignment_check,
    bin_distribution,
    fit_scaling,
    histogram,
    window_stats,
)
from .estimators import MultiTemporalAnalyzer, ScalingRegressor, WindowQuantities
from .ingest import (
    Anonymizer,
    PacketRecord,
    StreamFormatError,
    ValidityFilter,
    anonymize,
    filter_valid,
    read_batches,
    read_stream,
    write_binary,
    write_csv,
)
from .matrix import (
    DegreeVector,
    TrafficMatrix,
    add,
    col_sums,
    from_records,
    max_value,
    nnz,
    row_sums,
    total,
    zero_norm,
)
from .quantities import (
    DEGREE_TYPES,
    QUANTITY_NAMES,
    InternalSet,
    QuadrantSpec,
    QuantityVector,
    compute_quantities,
    degree_vectors,
    quadrant,
)
from .synth import TopologySpec, expected_exponent, generate
from .windows import (
    HierarchyLevelResult,
    WindowSpec,
    build_hierarchy,
    evaluate_hierarchy,
    partition,
)

__version__ = "0.1.0"
