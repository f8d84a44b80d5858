#pragma once

#include <span>
#include <string>
#include <vector>

#include "selret/core.hpp"
#include "selret/types.hpp"

namespace selret::seleval {

enum class SimilarityMeasure { Tanimoto, Cosine, Hamming };
enum class SimilarityMode { Continuous, Discrete };

// Loss selector: the top-K miss indicator, or one minus a fingerprint
// similarity. Hamming only admits the discrete mode.
struct LossSpec {
    enum class Kind { Hit, Similarity };

    Kind kind = Kind::Hit;
    std::size_t k = 1;
    SimilarityMeasure measure = SimilarityMeasure::Tanimoto;
    SimilarityMode mode = SimilarityMode::Continuous;

    static LossSpec hit(std::size_t k);
    static LossSpec similarity(SimilarityMeasure measure, SimilarityMode mode);
    static LossSpec parse(const std::string& text);
    std::string name() const;
};

// Tanimoto / cosine / Hamming similarity of a prediction vector (continuous
// probabilities or 0/1 values) against a binary fingerprint.
double fingerprint_similarity(std::span<const double> prediction, const Fingerprint& truth,
                              SimilarityMeasure measure);

// Binarize with the strictly-greater rule y_hat = 1[theta > 0.5].
std::vector<double> binarize(std::span<const double> theta);

// Loss in [0, 1] for one instance. Hit losses use the ranking; similarity
// losses use the mean prediction (discrete modes binarize it first).
double instance_loss(const Instance& instance, const CandidateRanking& ranking,
                     std::span<const double> mean_theta, const LossSpec& spec);

// Convenience wrapper that aggregates the bundle itself.
double instance_loss(const Instance& instance, const PredictionBundle& bundle,
                     const LossSpec& spec, double temperature,
                     AggregationStrategy strategy = AggregationStrategy::ScoreMean);

// Mean loss over accepted instances; rejects an empty acceptance set.
double selective_risk(std::span<const double> losses, std::span<const bool> accepted);

struct RiskCoveragePoint {
    double coverage = 0.0;
    double risk = 0.0;
};

struct RiskCoverageCurve {
    std::vector<RiskCoveragePoint> points;  // one per prefix, coverage m/n
    double aurc = 0.0;
    double aurc_oracle = 0.0;
    double aurc_random = 0.0;
    double rel_aurc = 0.0;
    // Oracle and random areas coincide (all losses equal); rel_aurc is
    // reported as 0 in that case.
    bool degenerate = false;
};

// Empirical risk-coverage curve for one scoring function. Instances are
// accepted in order of descending kappa (ties by ascending index); the
// area adds a left rectangle to the trapezoids so that a constant-risk
// curve integrates exactly to the mean loss.
RiskCoverageCurve risk_coverage_curve(std::span<const double> losses,
                                      std::span<const double> kappa);

// Fraction of instances with kappa >= tau.
double coverage_at_threshold(std::span<const double> kappa, double tau);

// Average ranks (ties averaged), the building block of Spearman.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation of two equal-length columns; NaN when either
// column has zero variance.
double spearman(std::span<const double> x, std::span<const double> y);

// Symmetric matrix of pairwise Spearman correlations with unit diagonal.
// Zero-variance columns yield NaN off-diagonal entries.
std::vector<std::vector<double>> spearman_matrix(
    const std::vector<std::vector<double>>& columns);

}  // namespace selret::seleval
