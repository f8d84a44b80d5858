#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selret/core.hpp"
#include "selret/types.hpp"

namespace selret::scoring {

// Total/aleatoric/epistemic triple in confidence orientation (higher =
// more confident). `ep` is clamped to <= 0 and `tot` is re-derived as
// al + ep so the identity holds exactly; `ep_raw` keeps the pre-clamp
// value for diagnostics.
struct Decomposition {
    double tot = 0.0;
    double al = 0.0;
    double ep = 0.0;
    double ep_raw = 0.0;
};

// Binary entropy in nats with the 0 log 0 := 0 convention.
double binary_entropy(double p);

// Max candidate probability of the aggregate ranking, in (0, 1].
double score_confidence(const CandidateRanking& ranking);

// Difference between the two highest entries of the ranking's score
// vector; for a singleton candidate set the absent runner-up counts as 0.
double score_gap(const CandidateRanking& ranking);

// Entropy decomposition of the S x D bitwise probabilities, summed over
// bits and negated.
Decomposition bitwise_decomposition(const PredictionBundle& bundle);

// Entropy decomposition of the per-sample candidate distributions.
// -ep is the mutual information and lies in [0, log S].
Decomposition retrieval_decomposition(const PredictionBundle& bundle,
                                      const Instance& instance,
                                      double temperature);

// Negated mean variance (population, over the S samples) of the 0-based
// rank positions of the mean-prediction top-K candidates when re-ranked
// under each sample. Uses min(K, M) members; the variance is unchanged by
// the rank base or the temperature (orderings are softmax-invariant).
double rank_variance(const PredictionBundle& bundle, const Instance& instance,
                     std::size_t k, double temperature);

// Immutable index over l2-normalized training embeddings: rows, mean,
// covariance with epsilon * I folded in, and its Cholesky factor.
class TrainEmbeddingIndex {
public:
    // rows is n x d row-major. Rows are l2-normalized during construction;
    // a zero-norm row is a domain error.
    static TrainEmbeddingIndex build(std::span<const double> rows, std::size_t n,
                                     std::size_t dim, double epsilon = 1e-6);

    std::size_t size() const { return static_cast<std::size_t>(embeddings_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(embeddings_.cols()); }
    const Eigen::MatrixXd& embeddings() const { return embeddings_; }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& covariance() const { return covariance_; }

    // -(1/k) * sum of Euclidean distances to the k nearest rows (exact
    // search). k must not exceed the number of rows.
    double knn_score(std::span<const double> embedding, std::size_t k) const;

    // -sqrt((h - mu)^T Sigma^-1 (h - mu)) via the Cholesky factor.
    double mahalanobis_score(std::span<const double> embedding) const;

private:
    Eigen::MatrixXd embeddings_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd covariance_;
    Eigen::LLT<Eigen::MatrixXd> cholesky_;
};

double knn_score(std::span<const double> embedding, const TrainEmbeddingIndex& index,
                 std::size_t k);
double mahalanobis_score(std::span<const double> embedding,
                         const TrainEmbeddingIndex& index);

// Column-oriented per-instance score table.
struct ScoreTable {
    std::vector<std::string> columns;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> values;  // one row per id

    std::optional<std::size_t> column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    std::size_t num_rows() const { return ids.size(); }
};

struct ScoringConfig {
    std::vector<std::string> scores;  // requested kappa names (see known_scores)
    std::vector<std::size_t> k_values = {1, 5, 20};  // for rank_var@K
    double temperature = 0.003;
    AggregationStrategy aggregation = AggregationStrategy::ScoreMean;
    std::size_t knn_k = 100;
    const TrainEmbeddingIndex* train_index = nullptr;
};

// Scores the spec knows about, in canonical column order. rank_var is a
// family; it expands to rank_var@K per requested K.
const std::vector<std::string>& known_scores();

// Expands "all" / "all-cheap" shorthands and validates names. "all-cheap"
// is everything except knn/mah.
std::vector<std::string> resolve_score_names(const std::vector<std::string>& requested,
                                             bool have_train_index);

// Expanded column names (rank_var -> rank_var@K ...) plus num_candidates.
std::vector<std::string> table_columns(const ScoringConfig& config);

// One row of the table for one instance; order matches table_columns.
std::vector<double> score_instance(const Instance& instance,
                                   const PredictionBundle& bundle,
                                   const ScoringConfig& config);

// Fused per-instance evaluation: the S x M similarity matrix is computed
// at most once and shared across every requested column. The aggregate
// ranking and mean prediction can be requested alongside for loss
// computation downstream.
struct InstanceEvaluation {
    std::vector<double> row;  // same order as table_columns
    CandidateRanking ranking;
    std::vector<double> mean_theta;
    bool has_ranking = false;
    bool has_mean_theta = false;
};
InstanceEvaluation evaluate_instance(const Instance& instance,
                                     const PredictionBundle& bundle,
                                     const ScoringConfig& config,
                                     bool want_ranking = false,
                                     bool want_mean_theta = false);

struct ScoreTableResult {
    ScoreTable table;
    // (instance id, reason) for instances skipped over soft errors.
    std::vector<std::pair<std::string, std::string>> exclusions;
};

// Pairs instances with bundles by id and fills every requested column.
// A missing bundle excludes the instance; a missing embedding when a
// distance score was requested is a hard validation error naming ids.
ScoreTableResult compute_score_table(const std::vector<Instance>& instances,
                                     const std::vector<PredictionBundle>& bundles,
                                     const ScoringConfig& config);

}  // namespace selret::scoring
