#include "selret/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace selret {

double cosine_similarity(std::span<const double> theta, const Fingerprint& c) {
    if (theta.size() != c.size())
        throw DomainError("cosine_similarity: dimension mismatch (" +
                          std::to_string(theta.size()) + " vs " +
                          std::to_string(c.size()) + ")");
    const std::size_t c_pop = c.popcount();
    if (c_pop == 0)
        throw DomainError("cosine_similarity: all-zero fingerprint");

    // Dot against a binary vector = sum of theta over set bits, walked
    // word by word so dense 4096-bit fingerprints stay cheap.
    double dot = 0.0;
    double theta_sq = 0.0;
    const auto& words = c.words();
    for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        const std::size_t base = w << 6;
        while (bits) {
            const int b = std::countr_zero(bits);
            dot += theta[base + static_cast<std::size_t>(b)];
            bits &= bits - 1;
        }
    }
    for (double t : theta) theta_sq += t * t;
    if (theta_sq == 0.0)
        throw DomainError("cosine_similarity: zero-norm probability vector");

    return dot / (std::sqrt(theta_sq) * std::sqrt(static_cast<double>(c_pop)));
}

std::vector<double> candidate_distribution(std::span<const double> scores,
                                           double temperature) {
    if (scores.empty())
        throw DomainError("candidate_distribution: empty score vector");
    if (!(temperature > 0.0))
        throw DomainError("candidate_distribution: temperature must be > 0");

    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> probs(scores.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        probs[j] = std::exp((scores[j] - top) / temperature);
        sum += probs[j];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

std::vector<double> similarity_scores(const Instance& instance,
                                      std::span<const double> theta) {
    double theta_sq = 0.0;
    for (double t : theta) theta_sq += t * t;
    if (theta_sq == 0.0)
        throw DomainError("similarity_scores: zero-norm probability vector");
    const double inv_norm = 1.0 / std::sqrt(theta_sq);

    std::vector<double> scores(instance.candidates.size());
    for (std::size_t j = 0; j < instance.candidates.size(); ++j) {
        const Fingerprint& c = instance.candidates[j];
        if (c.size() != theta.size())
            throw DomainError("similarity_scores: dimension mismatch for instance '" +
                              instance.id + "'");
        const std::size_t pop = c.popcount();
        if (pop == 0)
            throw DomainError("similarity_scores: all-zero candidate fingerprint in '" +
                              instance.id + "'");
        double dot = 0.0;
        const auto& words = c.words();
        for (std::size_t w = 0; w < words.size(); ++w) {
            std::uint64_t bits = words[w];
            const std::size_t base = w << 6;
            while (bits) {
                dot += theta[base + static_cast<std::size_t>(std::countr_zero(bits))];
                bits &= bits - 1;
            }
        }
        scores[j] = dot * inv_norm / std::sqrt(static_cast<double>(pop));
    }
    return scores;
}

CandidateRanking rank_candidates(const Instance& instance,
                                 std::span<const double> theta,
                                 double temperature) {
    if (instance.candidates.empty())
        throw DomainError("rank_candidates: instance '" + instance.id +
                          "' has no candidates");
    CandidateRanking r;
    r.scores = similarity_scores(instance, theta);
    r.probs = candidate_distribution(r.scores, temperature);
    r.order = descending_order(r.scores);
    return r;
}

int hit_at_k(const CandidateRanking& ranking, std::size_t true_index,
             std::size_t k) {
    if (k < 1) throw DomainError("hit_at_k: K must be >= 1");
    if (true_index >= ranking.size())
        throw DomainError("hit_at_k: true_index out of range");
    const std::size_t depth = std::min(k, ranking.size());
    for (std::size_t r = 0; r < depth; ++r)
        if (ranking.order[r] == true_index) return 1;
    return 0;
}

std::vector<double> mean_sample(const PredictionBundle& bundle) {
    if (bundle.num_samples == 0)
        throw DomainError("mean_sample: bundle '" + bundle.instance_id +
                          "' has no samples");
    std::vector<double> mean(bundle.dim, 0.0);
    for (std::size_t s = 0; s < bundle.num_samples; ++s) {
        const double* row = bundle.sample(s);
        for (std::size_t d = 0; d < bundle.dim; ++d) mean[d] += row[d];
    }
    const double inv = 1.0 / static_cast<double>(bundle.num_samples);
    for (double& m : mean) m *= inv;
    return mean;
}

CandidateRanking aggregate_prediction(const PredictionBundle& bundle,
                                      const Instance& instance,
                                      AggregationStrategy strategy,
                                      double temperature) {
    if (bundle.num_samples == 0)
        throw DomainError("aggregate_prediction: bundle '" + bundle.instance_id +
                          "' has no samples");
    const std::size_t m = instance.candidates.size();
    if (m == 0)
        throw DomainError("aggregate_prediction: instance '" + instance.id +
                          "' has no candidates");

    switch (strategy) {
        case AggregationStrategy::FingerprintMean: {
            const std::vector<double> mean = mean_sample(bundle);
            return rank_candidates(instance, mean, temperature);
        }
        case AggregationStrategy::ScoreMean: {
            CandidateRanking r;
            r.scores.assign(m, 0.0);
            for (std::size_t s = 0; s < bundle.num_samples; ++s) {
                const std::vector<double> scores = similarity_scores(
                    instance, std::span<const double>(bundle.sample(s), bundle.dim));
                for (std::size_t j = 0; j < m; ++j) r.scores[j] += scores[j];
            }
            const double inv = 1.0 / static_cast<double>(bundle.num_samples);
            for (double& v : r.scores) v *= inv;
            r.probs = candidate_distribution(r.scores, temperature);
            r.order = descending_order(r.scores);
            return r;
        }
        case AggregationStrategy::ProbMean: {
            std::vector<double> mean_probs(m, 0.0);
            for (std::size_t s = 0; s < bundle.num_samples; ++s) {
                const std::vector<double> scores = similarity_scores(
                    instance, std::span<const double>(bundle.sample(s), bundle.dim));
                const std::vector<double> p = candidate_distribution(scores, temperature);
                for (std::size_t j = 0; j < m; ++j) mean_probs[j] += p[j];
            }
            const double inv = 1.0 / static_cast<double>(bundle.num_samples);
            double sum = 0.0;
            for (double& p : mean_probs) {
                p *= inv;
                sum += p;
            }
            // Already sums to 1 up to rounding; renormalize to pin it down.
            for (double& p : mean_probs) p /= sum;
            CandidateRanking r;
            r.scores = mean_probs;
            r.probs = std::move(mean_probs);
            r.order = descending_order(r.scores);
            return r;
        }
    }
    throw DomainError("aggregate_prediction: unknown strategy");
}

double ranking_loss(const CandidateRanking& ranking, std::size_t true_index) {
    if (true_index >= ranking.size())
        throw DomainError("ranking_loss: true_index out of range");
    const double p = ranking.probs[true_index];
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(p);
}

}  // namespace selret
