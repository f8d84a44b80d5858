#pragma once

#include <span>
#include <vector>

#include "selret/types.hpp"

namespace selret {

// Cosine similarity between a probability vector and a binary fingerprint,
// theta^T c / (|theta| |c|). Both sides must have nonzero norm.
double cosine_similarity(std::span<const double> theta, const Fingerprint& c);

// Temperature-scaled softmax over raw similarity scores, computed with
// max-subtraction. Sums to 1 within 1e-12.
std::vector<double> candidate_distribution(std::span<const double> scores,
                                           double temperature);

// Descending-score permutation with ties broken by ascending index.
std::vector<std::size_t> descending_order(std::span<const double> scores);

// Cosine scores of one probability vector against every candidate, with
// the query norm computed once. All ranking paths share this primitive.
std::vector<double> similarity_scores(const Instance& instance,
                                      std::span<const double> theta);

// Rank an instance's candidates against one probability vector.
CandidateRanking rank_candidates(const Instance& instance,
                                 std::span<const double> theta,
                                 double temperature);

// 1 if true_index sits among the first min(K, M) entries of the order.
int hit_at_k(const CandidateRanking& ranking, std::size_t true_index,
             std::size_t k);

// Collapse S posterior samples into one ranking. FingerprintMean ranks by
// sim(mean theta, c_j); ScoreMean by the mean of per-sample scores (probs
// are the softmax of those means); ProbMean by the mean of per-sample
// candidate distributions (scores and probs both hold the renormalized
// average). All three coincide for S = 1.
CandidateRanking aggregate_prediction(const PredictionBundle& bundle,
                                      const Instance& instance,
                                      AggregationStrategy strategy,
                                      double temperature);

// Mean of the S sample rows of a bundle.
std::vector<double> mean_sample(const PredictionBundle& bundle);

// Negative log-likelihood of the true candidate under ranking.probs.
// Returns +infinity when that probability underflows to zero.
double ranking_loss(const CandidateRanking& ranking, std::size_t true_index);

}  // namespace selret
