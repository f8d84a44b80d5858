#include "selret/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace selret::scoring {

double binary_entropy(double p) {
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
    return h;
}

double score_confidence(const CandidateRanking& ranking) {
    if (ranking.probs.empty())
        throw DomainError("score_confidence: empty ranking");
    return *std::max_element(ranking.probs.begin(), ranking.probs.end());
}

double score_gap(const CandidateRanking& ranking) {
    if (ranking.scores.empty())
        throw DomainError("score_gap: empty ranking");
    const double top = ranking.scores[ranking.order[0]];
    if (ranking.size() == 1) return top;
    return top - ranking.scores[ranking.order[1]];
}

namespace {

// Clamp epistemic to the confidence side and re-derive the total so
// tot == al + ep holds exactly in floating point.
Decomposition close_identity(double tot_raw, double al) {
    Decomposition d;
    d.al = al;
    d.ep_raw = tot_raw - al;
    d.ep = std::min(0.0, d.ep_raw);
    d.tot = d.al + d.ep;
    return d;
}

double neg_entropy(std::span<const double> probs) {
    double s = 0.0;
    for (double p : probs)
        if (p > 0.0) s += p * std::log(p);
    return s;
}

// S x M row-major matrix of per-sample similarity scores.
std::vector<double> sample_score_matrix(const PredictionBundle& bundle,
                                        const Instance& instance) {
    const std::size_t m = instance.candidates.size();
    std::vector<double> matrix(bundle.num_samples * m);
    for (std::size_t s = 0; s < bundle.num_samples; ++s) {
        const std::vector<double> scores = similarity_scores(
            instance, std::span<const double>(bundle.sample(s), bundle.dim));
        std::copy(scores.begin(), scores.end(), matrix.begin() + s * m);
    }
    return matrix;
}

Decomposition retrieval_decomposition_from_matrix(std::span<const double> matrix,
                                                  std::size_t s_count, std::size_t m,
                                                  double temperature) {
    const double inv_s = 1.0 / static_cast<double>(s_count);
    std::vector<double> mean_probs(m, 0.0);
    double al_sum = 0.0;
    for (std::size_t s = 0; s < s_count; ++s) {
        const std::vector<double> probs =
            candidate_distribution(matrix.subspan(s * m, m), temperature);
        al_sum += neg_entropy(probs);
        for (std::size_t j = 0; j < m; ++j) mean_probs[j] += probs[j];
    }
    for (double& p : mean_probs) p *= inv_s;
    return close_identity(neg_entropy(mean_probs), al_sum * inv_s);
}

double rank_variance_from_matrix(std::span<const double> matrix, std::size_t s_count,
                                 std::size_t m, std::span<const double> mean_scores,
                                 std::size_t k) {
    const std::size_t members = std::min(k, m);
    const std::vector<std::size_t> mean_order = descending_order(mean_scores);

    std::vector<double> sum(members, 0.0);
    std::vector<double> sum_sq(members, 0.0);
    std::vector<std::size_t> position(m);
    for (std::size_t s = 0; s < s_count; ++s) {
        const std::vector<std::size_t> order = descending_order(matrix.subspan(s * m, m));
        for (std::size_t r = 0; r < m; ++r) position[order[r]] = r;
        for (std::size_t t = 0; t < members; ++t) {
            const double rank = static_cast<double>(position[mean_order[t]]);
            sum[t] += rank;
            sum_sq[t] += rank * rank;
        }
    }
    const double inv_s = 1.0 / static_cast<double>(s_count);
    double var_sum = 0.0;
    for (std::size_t t = 0; t < members; ++t) {
        const double mean_rank = sum[t] * inv_s;
        var_sum += std::max(0.0, sum_sq[t] * inv_s - mean_rank * mean_rank);
    }
    return var_sum == 0.0 ? 0.0 : -var_sum / static_cast<double>(members);
}

// Rankings derived from the shared score matrix; float-identical to the
// aggregate_prediction paths in core.
CandidateRanking ranking_from_matrix(std::span<const double> matrix, std::size_t s_count,
                                     std::size_t m, AggregationStrategy strategy,
                                     double temperature) {
    const double inv_s = 1.0 / static_cast<double>(s_count);
    CandidateRanking r;
    if (strategy == AggregationStrategy::ScoreMean) {
        r.scores.assign(m, 0.0);
        for (std::size_t s = 0; s < s_count; ++s)
            for (std::size_t j = 0; j < m; ++j) r.scores[j] += matrix[s * m + j];
        for (double& v : r.scores) v *= inv_s;
        r.probs = candidate_distribution(r.scores, temperature);
        r.order = descending_order(r.scores);
        return r;
    }
    if (strategy == AggregationStrategy::ProbMean) {
        std::vector<double> mean_probs(m, 0.0);
        for (std::size_t s = 0; s < s_count; ++s) {
            const std::vector<double> p =
                candidate_distribution(matrix.subspan(s * m, m), temperature);
            for (std::size_t j = 0; j < m; ++j) mean_probs[j] += p[j];
        }
        double total = 0.0;
        for (double& p : mean_probs) {
            p *= inv_s;
            total += p;
        }
        for (double& p : mean_probs) p /= total;
        r.scores = mean_probs;
        r.probs = std::move(mean_probs);
        r.order = descending_order(r.scores);
        return r;
    }
    throw DomainError("ranking_from_matrix: unsupported strategy");
}

}  // namespace

Decomposition bitwise_decomposition(const PredictionBundle& bundle) {
    if (bundle.num_samples == 0)
        throw DomainError("bitwise_decomposition: bundle '" + bundle.instance_id +
                          "' has no samples");
    const std::size_t s_count = bundle.num_samples;
    const std::size_t dim = bundle.dim;
    const double inv_s = 1.0 / static_cast<double>(s_count);

    double u_tot = 0.0;
    double u_al = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        double mean = 0.0;
        double h_sum = 0.0;
        for (std::size_t s = 0; s < s_count; ++s) {
            const double p = bundle.samples[s * dim + d];
            mean += p;
            h_sum += binary_entropy(p);
        }
        u_tot += binary_entropy(mean * inv_s);
        u_al += h_sum * inv_s;
    }
    // kappa orientation: negate the summed uncertainties.
    return close_identity(-u_tot, -u_al);
}

Decomposition retrieval_decomposition(const PredictionBundle& bundle,
                                      const Instance& instance,
                                      double temperature) {
    if (bundle.num_samples == 0)
        throw DomainError("retrieval_decomposition: bundle '" + bundle.instance_id +
                          "' has no samples");
    if (instance.candidates.empty())
        throw DomainError("retrieval_decomposition: instance '" + instance.id +
                          "' has no candidates");
    const std::vector<double> matrix = sample_score_matrix(bundle, instance);
    return retrieval_decomposition_from_matrix(matrix, bundle.num_samples,
                                               instance.candidates.size(), temperature);
}

double rank_variance(const PredictionBundle& bundle, const Instance& instance,
                     std::size_t k, double temperature) {
    (void)temperature;  // orderings are softmax-invariant; kept for symmetry
    if (k < 1) throw DomainError("rank_variance: K must be >= 1");
    if (bundle.num_samples == 0)
        throw DomainError("rank_variance: bundle '" + bundle.instance_id +
                          "' has no samples");
    if (instance.candidates.empty())
        throw DomainError("rank_variance: instance '" + instance.id +
                          "' has no candidates");
    const std::vector<double> matrix = sample_score_matrix(bundle, instance);
    const std::vector<double> mean = mean_sample(bundle);
    const std::vector<double> mean_scores = similarity_scores(instance, mean);
    return rank_variance_from_matrix(matrix, bundle.num_samples,
                                     instance.candidates.size(), mean_scores, k);
}

TrainEmbeddingIndex TrainEmbeddingIndex::build(std::span<const double> rows,
                                               std::size_t n, std::size_t dim,
                                               double epsilon) {
    if (n == 0 || dim == 0)
        throw DomainError("TrainEmbeddingIndex: empty embedding matrix");
    if (rows.size() != n * dim)
        throw DomainError("TrainEmbeddingIndex: row data size mismatch");

    TrainEmbeddingIndex index;
    index.embeddings_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Map<const Eigen::VectorXd> row(rows.data() + i * dim,
                                              static_cast<Eigen::Index>(dim));
        const double norm = row.norm();
        if (norm == 0.0)
            throw DomainError("TrainEmbeddingIndex: zero-norm training embedding at row " +
                              std::to_string(i));
        index.embeddings_.row(static_cast<Eigen::Index>(i)) = row.transpose() / norm;
    }

    index.mean_ = index.embeddings_.colwise().mean();
    Eigen::MatrixXd centered = index.embeddings_.rowwise() - index.mean_.transpose();
    index.covariance_ =
        (centered.transpose() * centered) / static_cast<double>(n) +
        epsilon * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
    index.cholesky_.compute(index.covariance_);
    if (index.cholesky_.info() != Eigen::Success)
        throw NumericError(
            "TrainEmbeddingIndex: covariance factorization failed even after "
            "regularization (epsilon = " + std::to_string(epsilon) + ")");
    return index;
}

double TrainEmbeddingIndex::knn_score(std::span<const double> embedding,
                                      std::size_t k) const {
    if (embedding.size() != dim())
        throw DomainError("knn_score: embedding dimension mismatch");
    if (k < 1 || k > size())
        throw DomainError("knn_score: k = " + std::to_string(k) +
                          " outside [1, " + std::to_string(size()) + "]");

    Eigen::Map<const Eigen::VectorXd> h(embedding.data(),
                                        static_cast<Eigen::Index>(embedding.size()));
    std::vector<double> dist(size());
    for (std::size_t i = 0; i < size(); ++i)
        dist[i] = (embeddings_.row(static_cast<Eigen::Index>(i)).transpose() - h).norm();
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     dist.end());
    const double total = std::accumulate(
        dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
    return -total / static_cast<double>(k);
}

double TrainEmbeddingIndex::mahalanobis_score(std::span<const double> embedding) const {
    if (embedding.size() != dim())
        throw DomainError("mahalanobis_score: embedding dimension mismatch");
    Eigen::Map<const Eigen::VectorXd> h(embedding.data(),
                                        static_cast<Eigen::Index>(embedding.size()));
    const Eigen::VectorXd centered = h - mean_;
    // d^2 = |L^-1 (h - mu)|^2 with Sigma = L L^T.
    const Eigen::VectorXd y = cholesky_.matrixL().solve(centered);
    return -y.norm();
}

double knn_score(std::span<const double> embedding, const TrainEmbeddingIndex& index,
                 std::size_t k) {
    return index.knn_score(embedding, k);
}

double mahalanobis_score(std::span<const double> embedding,
                         const TrainEmbeddingIndex& index) {
    return index.mahalanobis_score(embedding);
}

std::optional<std::size_t> ScoreTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    return std::nullopt;
}

std::vector<double> ScoreTable::column(const std::string& name) const {
    const auto idx = column_index(name);
    if (!idx) throw DomainError("ScoreTable: no column named '" + name + "'");
    std::vector<double> out(values.size());
    for (std::size_t r = 0; r < values.size(); ++r) out[r] = values[r][*idx];
    return out;
}

const std::vector<std::string>& known_scores() {
    static const std::vector<std::string> names = {
        "conf", "gap", "bit_tot", "bit_al", "bit_ep",
        "ret_tot", "ret_al", "ret_ep", "rank_var", "knn", "mah"};
    return names;
}

std::vector<std::string> resolve_score_names(const std::vector<std::string>& requested,
                                             bool have_train_index) {
    std::vector<std::string> out;
    auto push_unique = [&out](const std::string& name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    };
    for (const std::string& name : requested) {
        if (name == "all" || name == "all-cheap") {
            for (const std::string& k : known_scores()) {
                if ((k == "knn" || k == "mah") && (name == "all-cheap" || !have_train_index))
                    continue;
                push_unique(k);
            }
            continue;
        }
        if (std::find(known_scores().begin(), known_scores().end(), name) ==
            known_scores().end())
            throw DomainError("unknown score '" + name + "'");
        push_unique(name);
    }
    if (out.empty()) throw DomainError("no scores requested");
    return out;
}

std::vector<std::string> table_columns(const ScoringConfig& config) {
    std::vector<std::string> cols;
    for (const std::string& name : config.scores) {
        if (name == "rank_var") {
            for (std::size_t k : config.k_values)
                cols.push_back("rank_var@" + std::to_string(k));
        } else {
            cols.push_back(name);
        }
    }
    cols.push_back("num_candidates");
    return cols;
}

InstanceEvaluation evaluate_instance(const Instance& instance,
                                     const PredictionBundle& bundle,
                                     const ScoringConfig& config, bool want_ranking,
                                     bool want_mean_theta) {
    if (bundle.num_samples == 0)
        throw DomainError("evaluate_instance: bundle '" + bundle.instance_id +
                          "' has no samples");
    const std::size_t m = instance.candidates.size();
    const std::size_t s_count = bundle.num_samples;

    bool need_ranking = want_ranking;
    bool need_bit = false;
    bool need_ret = false;
    bool need_rank_var = false;
    bool need_distance = false;
    for (const std::string& name : config.scores) {
        if (name == "conf" || name == "gap") need_ranking = true;
        else if (name == "bit_tot" || name == "bit_al" || name == "bit_ep") need_bit = true;
        else if (name == "ret_tot" || name == "ret_al" || name == "ret_ep") need_ret = true;
        else if (name == "rank_var") need_rank_var = true;
        else if (name == "knn" || name == "mah") need_distance = true;
        else throw DomainError("unknown score '" + name + "'");
    }

    const bool need_matrix =
        need_ret || need_rank_var ||
        (need_ranking && config.aggregation != AggregationStrategy::FingerprintMean);
    const bool need_mean =
        want_mean_theta || need_rank_var ||
        (need_ranking && config.aggregation == AggregationStrategy::FingerprintMean);

    InstanceEvaluation out;
    std::vector<double> matrix;
    if (need_matrix) matrix = sample_score_matrix(bundle, instance);
    std::vector<double> mean_scores;
    if (need_mean) {
        out.mean_theta = mean_sample(bundle);
        out.has_mean_theta = true;
        if (need_rank_var ||
            (need_ranking && config.aggregation == AggregationStrategy::FingerprintMean))
            mean_scores = similarity_scores(instance, out.mean_theta);
    }
    if (need_ranking) {
        if (config.aggregation == AggregationStrategy::FingerprintMean) {
            out.ranking.scores = mean_scores;
            out.ranking.probs =
                candidate_distribution(out.ranking.scores, config.temperature);
            out.ranking.order = descending_order(out.ranking.scores);
        } else {
            out.ranking =
                ranking_from_matrix(matrix, s_count, m, config.aggregation,
                                    config.temperature);
        }
        out.has_ranking = true;
    }

    Decomposition bit;
    if (need_bit) bit = bitwise_decomposition(bundle);
    Decomposition ret;
    if (need_ret)
        ret = retrieval_decomposition_from_matrix(matrix, s_count, m, config.temperature);

    std::vector<double> unit_embedding;
    if (need_distance) {
        if (!config.train_index)
            throw DomainError("distance scores requested without training embeddings");
        if (!bundle.has_embedding())
            throw ValidationError("distance scores requested but bundle for instance '" +
                                  instance.id + "' carries no embedding");
        unit_embedding = bundle.embedding;
        double sq = 0.0;
        for (double v : unit_embedding) sq += v * v;
        if (sq == 0.0)
            throw ValidationError("zero-norm embedding for instance '" + instance.id + "'");
        const double inv = 1.0 / std::sqrt(sq);
        for (double& v : unit_embedding) v *= inv;
    }

    out.row.reserve(table_columns(config).size());
    for (const std::string& name : config.scores) {
        if (name == "conf") {
            out.row.push_back(score_confidence(out.ranking));
        } else if (name == "gap") {
            out.row.push_back(score_gap(out.ranking));
        } else if (name == "bit_tot") {
            out.row.push_back(bit.tot);
        } else if (name == "bit_al") {
            out.row.push_back(bit.al);
        } else if (name == "bit_ep") {
            out.row.push_back(bit.ep);
        } else if (name == "ret_tot") {
            out.row.push_back(ret.tot);
        } else if (name == "ret_al") {
            out.row.push_back(ret.al);
        } else if (name == "ret_ep") {
            out.row.push_back(ret.ep);
        } else if (name == "rank_var") {
            for (std::size_t k : config.k_values)
                out.row.push_back(
                    rank_variance_from_matrix(matrix, s_count, m, mean_scores, k));
        } else if (name == "knn") {
            const std::size_t k = std::min(config.knn_k, config.train_index->size());
            out.row.push_back(config.train_index->knn_score(unit_embedding, k));
        } else if (name == "mah") {
            out.row.push_back(config.train_index->mahalanobis_score(unit_embedding));
        }
    }
    out.row.push_back(static_cast<double>(instance.num_candidates()));
    return out;
}

std::vector<double> score_instance(const Instance& instance,
                                   const PredictionBundle& bundle,
                                   const ScoringConfig& config) {
    return evaluate_instance(instance, bundle, config).row;
}

ScoreTableResult compute_score_table(const std::vector<Instance>& instances,
                                     const std::vector<PredictionBundle>& bundles,
                                     const ScoringConfig& config) {
    std::unordered_map<std::string, const PredictionBundle*> by_id;
    by_id.reserve(bundles.size());
    for (const PredictionBundle& b : bundles) by_id[b.instance_id] = &b;

    const bool wants_distance =
        std::find(config.scores.begin(), config.scores.end(), "knn") != config.scores.end() ||
        std::find(config.scores.begin(), config.scores.end(), "mah") != config.scores.end();
    if (wants_distance) {
        std::vector<std::string> missing;
        for (const Instance& inst : instances) {
            auto it = by_id.find(inst.id);
            if (it != by_id.end() && !it->second->has_embedding())
                missing.push_back(inst.id);
        }
        if (!missing.empty()) {
            std::ostringstream msg;
            msg << "distance scores requested but embeddings are missing for "
                << missing.size() << " instance(s):";
            for (const std::string& id : missing) msg << ' ' << id;
            throw ValidationError(msg.str());
        }
    }

    ScoreTableResult result;
    result.table.columns = table_columns(config);
    for (const Instance& inst : instances) {
        auto it = by_id.find(inst.id);
        if (it == by_id.end()) {
            result.exclusions.emplace_back(inst.id, "no prediction bundle");
            continue;
        }
        result.table.ids.push_back(inst.id);
        result.table.values.push_back(score_instance(inst, *it->second, config));
    }
    return result;
}

}  // namespace selret::scoring
