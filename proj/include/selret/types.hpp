#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "selret/errors.hpp"

namespace selret {

// Round a double through an actual float object. The volatile store keeps
// GCC 11's SLP vectorizer at -O3 from eliding the narrowing conversion,
// which would break the single-precision file contract.
inline double round_to_float(double v) {
    volatile float f = static_cast<float>(v);
    return static_cast<double>(f);
}

// Fixed-length binary substructure vector, packed 64 bits per word.
// Word w holds bits [64w, 64w+63]; bit d lives at word d/64, position d%64.
class Fingerprint {
public:
    Fingerprint() = default;
    explicit Fingerprint(std::size_t n_bits)
        : n_bits_(n_bits), words_((n_bits + 63) / 64, 0) {}

    static Fingerprint from_bools(const std::vector<bool>& bits) {
        Fingerprint fp(bits.size());
        for (std::size_t d = 0; d < bits.size(); ++d)
            if (bits[d]) fp.set(d);
        return fp;
    }

    std::size_t size() const { return n_bits_; }

    bool test(std::size_t d) const {
        return (words_[d >> 6] >> (d & 63)) & 1ULL;
    }
    void set(std::size_t d) { words_[d >> 6] |= 1ULL << (d & 63); }
    void reset(std::size_t d) { words_[d >> 6] &= ~(1ULL << (d & 63)); }

    std::size_t popcount() const {
        std::size_t n = 0;
        for (std::uint64_t w : words_) n += std::popcount(w);
        return n;
    }

    bool any() const {
        for (std::uint64_t w : words_)
            if (w) return true;
        return false;
    }

    const std::vector<std::uint64_t>& words() const { return words_; }
    std::vector<std::uint64_t>& words() { return words_; }

    bool operator==(const Fingerprint& other) const {
        return n_bits_ == other.n_bits_ && words_ == other.words_;
    }

private:
    std::size_t n_bits_ = 0;
    std::vector<std::uint64_t> words_;
};

// One spectrum's retrieval problem: the candidate fingerprints, which one
// is the true molecule, and free-form metadata (precursor mass etc.).
struct Instance {
    std::string id;
    std::vector<Fingerprint> candidates;
    std::size_t true_index = 0;
    std::map<std::string, std::string> meta;

    std::size_t num_candidates() const { return candidates.size(); }
};

// S posterior samples of bitwise probabilities for one instance, row-major
// S x D, plus an optional penultimate-layer embedding.
struct PredictionBundle {
    std::string instance_id;
    std::size_t num_samples = 0;   // S
    std::size_t dim = 0;           // D
    std::vector<double> samples;   // size S * D, sample s at [s*D, (s+1)*D)
    std::vector<double> embedding; // empty when absent

    const double* sample(std::size_t s) const { return samples.data() + s * dim; }
    bool has_embedding() const { return !embedding.empty(); }
};

// Scored candidate list: similarity scores, softmax probabilities and the
// descending-score permutation (ties broken by ascending candidate index).
struct CandidateRanking {
    std::vector<double> scores;
    std::vector<double> probs;
    std::vector<std::size_t> order;

    std::size_t size() const { return scores.size(); }
    // Rank position (0-based) of candidate j in the ordering.
    std::size_t rank_of(std::size_t j) const {
        for (std::size_t r = 0; r < order.size(); ++r)
            if (order[r] == j) return r;
        throw DomainError("rank_of: candidate index out of range");
    }
};

enum class AggregationStrategy { FingerprintMean, ScoreMean, ProbMean };

inline const char* to_string(AggregationStrategy s) {
    switch (s) {
        case AggregationStrategy::FingerprintMean: return "fingerprint-mean";
        case AggregationStrategy::ScoreMean: return "score-mean";
        case AggregationStrategy::ProbMean: return "prob-mean";
    }
    return "?";
}

inline AggregationStrategy aggregation_from_string(const std::string& s) {
    if (s == "fingerprint-mean") return AggregationStrategy::FingerprintMean;
    if (s == "score-mean") return AggregationStrategy::ScoreMean;
    if (s == "prob-mean") return AggregationStrategy::ProbMean;
    throw DomainError("unknown aggregation strategy: " + s);
}

}  // namespace selret
