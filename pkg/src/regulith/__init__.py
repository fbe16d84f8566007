"""Approximate regular partitions of dense weighted graphs, reduced graphs,
and compress-then-cluster segmentation."""

from .clustering import ClusterResult, TwoPhaseResult, cluster, dominant_sets, spectral_clustering, two_phase
from .errors import DegenerateRefinement, DomainError, InvariantViolation, ParseError
from .graph import (
    ImageGrid,
    WeightedGraph,
    average_degree,
    edge_density,
    load_edge_list,
    read_pgm,
    save_edge_list,
    similarity_graph,
)
from .partition import (
    ExactConstants,
    Partition,
    RegularityCheck,
    RunConfig,
    check_partition,
    exact_constants,
    index_of_partition,
    initial_partition,
    refine,
    run_partition,
)
from .reduced import UNASSIGNED, ReducedGraph, blow_up, build_reduced, project_labels
from .regularity import (
    DeviationCase,
    PairCertificate,
    Verdict,
    certify_pair,
    neighbourhood_deviation,
    set_deviation,
)
from .segmentation import Segmentation, compression_rate, pri, segment_image, vi

__version__ = "0.1.0"
