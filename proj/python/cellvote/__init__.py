"""Consensus labelling of blood-cell crops: quorum aggregation, agreement
metrics, annotator simulation and Chan-Vese segmentation."""

from ._cellvote import (
    CellvoteError,
    aggregate,
    aggregate_votes_file,
    calibrate_correlation,
    chan_vese,
    classify_pattern,
    estimate_consensus_accuracy,
    expected_consensus_accuracy,
    merge_label,
    merge_matrix,
    metrics_report,
    simulate_consensus_accuracy,
)

__all__ = [
    "CellvoteError",
    "aggregate",
    "aggregate_votes_file",
    "calibrate_correlation",
    "chan_vese",
    "classify_pattern",
    "estimate_consensus_accuracy",
    "expected_consensus_accuracy",
    "merge_label",
    "merge_matrix",
    "metrics_report",
    "simulate_consensus_accuracy",
]
