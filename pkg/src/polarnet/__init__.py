"""Polarization analysis of multiplex directed social networks.

The package models a shared node registry with named directed layers
(supports / likes / comments style), measures how similar layers are,
how polarized each layer is along group labels (directed Q-modularity),
which communities an algorithm suite finds, how polarization evolves in
sliding time windows, how groups are structured internally, how strongly
one group links to another (demodularity), which words characterize each
group (PMI), and whether cross-group connectivity tracks ideological
distance.
"""
from .communities import (
    DEFAULT_PORTFOLIO,
    ComboScript,
    DetectionResult,
    detect_extremal,
    detect_fast,
    detect_spectral,
    refine_reposition,
    run_combo,
    run_portfolio,
)
from .errors import (
    InternalConsistencyError,
    ParseError,
    PolarnetError,
    UndefinedMetricError,
    ValidationError,
)
from .ideology import (
    DemodDistanceResult,
    DistanceDemodPair,
    PartyPosition,
    demod_distance_analysis,
    euclidean_distance,
    pearson,
    pearson_pvalue,
    read_positions,
)
from .infometrics import (
    MetricEstimate,
    MIResult,
    entropy_ml,
    entropy_mm,
    jaccard,
    jackknife,
    link_nmi,
    mutual_information,
    nmi,
    partial_jaccard,
    partition_nmi,
)
from .modularity import (
    POLARIZATION_THRESHOLD,
    DemodularityMatrix,
    classify_polarization,
    demodularity,
    demodularity_matrix,
    q_modularity,
)
from .network import (
    Layer,
    LayerLink,
    LayerSchema,
    MultiplexNetwork,
    Partition,
    PartyMergeConfig,
    apply_party_merge,
    export_graphml,
    export_layer_csv,
    filter_partition,
    generate_planted_partition,
    ingest_layer,
    read_merge_config,
    read_node_table,
)
from .structure import (
    GroupSubnetwork,
    KCoreResult,
    StructureRow,
    average_path_length,
    group_subnetwork,
    in_degree_centralization,
    kcore_decomposition,
    structure_report,
)
from .timeseries import (
    EventAnnotation,
    WindowedSeries,
    WindowRecord,
    WindowSpec,
    event_annotation,
    sweep,
    window_slice,
)
from .topics import (
    CommentRecord,
    GroupTopics,
    TopicReport,
    WordGroupStat,
    load_stopwords,
    pmi,
    read_comments,
    significance,
    tokenize,
    topic_report,
)

__all__ = [
    "DEFAULT_PORTFOLIO",
    "POLARIZATION_THRESHOLD",
    "ComboScript",
    "CommentRecord",
    "DemodDistanceResult",
    "DemodularityMatrix",
    "DetectionResult",
    "DistanceDemodPair",
    "EventAnnotation",
    "GroupSubnetwork",
    "GroupTopics",
    "InternalConsistencyError",
    "KCoreResult",
    "Layer",
    "LayerLink",
    "LayerSchema",
    "MetricEstimate",
    "MIResult",
    "MultiplexNetwork",
    "ParseError",
    "Partition",
    "PartyMergeConfig",
    "PartyPosition",
    "PolarnetError",
    "StructureRow",
    "TopicReport",
    "UndefinedMetricError",
    "ValidationError",
    "WindowRecord",
    "WindowSpec",
    "WindowedSeries",
    "WordGroupStat",
    "apply_party_merge",
    "average_path_length",
    "classify_polarization",
    "demod_distance_analysis",
    "demodularity",
    "demodularity_matrix",
    "detect_extremal",
    "detect_fast",
    "detect_spectral",
    "entropy_ml",
    "entropy_mm",
    "euclidean_distance",
    "event_annotation",
    "export_graphml",
    "export_layer_csv",
    "filter_partition",
    "generate_planted_partition",
    "group_subnetwork",
    "in_degree_centralization",
    "ingest_layer",
    "jaccard",
    "jackknife",
    "kcore_decomposition",
    "link_nmi",
    "load_stopwords",
    "mutual_information",
    "nmi",
    "partial_jaccard",
    "partition_nmi",
    "pearson",
    "pearson_pvalue",
    "pmi",
    "q_modularity",
    "read_comments",
    "read_merge_config",
    "read_node_table",
    "read_positions",
    "refine_reposition",
    "run_combo",
    "run_portfolio",
    "significance",
    "structure_report",
    "sweep",
    "tokenize",
    "topic_report",
    "window_slice",
]
