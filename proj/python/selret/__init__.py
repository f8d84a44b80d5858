"""Selective prediction toolkit for ranked retrieval.

Thin Python surface over the C++ core: retrieval math, scoring functions,
risk-coverage evaluation, Clopper-Pearson bounds and SGR threshold
selection, plus readers/writers for the dataset and prediction formats.
"""

from ._selret import (  # noqa: F401
    AggregationStrategy,
    CandidateRanking,
    Decomposition,
    DifficultyModel,
    DomainError,
    Fingerprint,
    Instance,
    IoError,
    NumericError,
    PredictionBundle,
    SgrResult,
    SynthConfig,
    TrainEmbeddingIndex,
    ValidationError,
    __version__,
    aggregate_prediction,
    bitwise_decomposition,
    calibration_split,
    candidate_distribution,
    clopper_pearson_upper,
    cosine_similarity,
    coverage_at_threshold,
    generate,
    hit_at_k,
    instance_loss,
    load_dataset,
    load_predictions,
    mc_validate_sgr,
    rank_candidates,
    rank_variance,
    ranking_loss,
    retrieval_decomposition,
    risk_coverage_curve,
    score_confidence,
    score_gap,
    sgr_select,
    sha256_file,
    spearman,
    write_dataset,
    write_predictions,
)
