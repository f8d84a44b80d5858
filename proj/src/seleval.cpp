#include "selret/seleval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace selret::seleval {

LossSpec LossSpec::hit(std::size_t k) {
    if (k < 1) throw DomainError("LossSpec: K must be >= 1");
    LossSpec spec;
    spec.kind = Kind::Hit;
    spec.k = k;
    return spec;
}

LossSpec LossSpec::similarity(SimilarityMeasure measure, SimilarityMode mode) {
    if (measure == SimilarityMeasure::Hamming && mode == SimilarityMode::Continuous)
        throw DomainError("LossSpec: Hamming loss requires the discrete mode");
    LossSpec spec;
    spec.kind = Kind::Similarity;
    spec.measure = measure;
    spec.mode = mode;
    return spec;
}

LossSpec LossSpec::parse(const std::string& text) {
    if (text.rfind("hit@", 0) == 0) {
        const std::string k_str = text.substr(4);
        std::size_t pos = 0;
        const unsigned long k = std::stoul(k_str, &pos);
        if (pos != k_str.size() || k < 1)
            throw DomainError("LossSpec: bad hit loss '" + text + "'");
        return hit(k);
    }
    auto measure_of = [&](const std::string& m) {
        if (m == "tanimoto") return SimilarityMeasure::Tanimoto;
        if (m == "cosine") return SimilarityMeasure::Cosine;
        if (m == "hamming") return SimilarityMeasure::Hamming;
        throw DomainError("LossSpec: unknown loss '" + text + "'");
    };
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) {
        const SimilarityMeasure m = measure_of(text);
        return similarity(m, m == SimilarityMeasure::Hamming ? SimilarityMode::Discrete
                                                             : SimilarityMode::Continuous);
    }
    const SimilarityMeasure m = measure_of(text.substr(0, colon));
    const std::string mode = text.substr(colon + 1);
    if (mode == "cont") return similarity(m, SimilarityMode::Continuous);
    if (mode == "disc") return similarity(m, SimilarityMode::Discrete);
    throw DomainError("LossSpec: unknown mode '" + mode + "' in '" + text + "'");
}

std::string LossSpec::name() const {
    if (kind == Kind::Hit) return "hit@" + std::to_string(k);
    std::string base;
    switch (measure) {
        case SimilarityMeasure::Tanimoto: base = "tanimoto"; break;
        case SimilarityMeasure::Cosine: base = "cosine"; break;
        case SimilarityMeasure::Hamming: base = "hamming"; break;
    }
    return base + (mode == SimilarityMode::Continuous ? ":cont" : ":disc");
}

double fingerprint_similarity(std::span<const double> prediction,
                              const Fingerprint& truth, SimilarityMeasure measure) {
    if (prediction.size() != truth.size())
        throw DomainError("fingerprint_similarity: dimension mismatch");
    const std::size_t dim = prediction.size();
    switch (measure) {
        case SimilarityMeasure::Tanimoto: {
            double dot = 0.0, sum_a = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                sum_a += prediction[d];
                if (truth.test(d)) dot += prediction[d];
            }
            const double sum_y = static_cast<double>(truth.popcount());
            const double denom = sum_a + sum_y - dot;
            if (denom == 0.0)
                throw DomainError("fingerprint_similarity: empty union in Tanimoto");
            return dot / denom;
        }
        case SimilarityMeasure::Cosine:
            return cosine_similarity(prediction, truth);
        case SimilarityMeasure::Hamming: {
            std::size_t mismatches = 0;
            for (std::size_t d = 0; d < dim; ++d) {
                const bool a = prediction[d] != 0.0;
                if (a != truth.test(d)) ++mismatches;
            }
            return 1.0 - static_cast<double>(mismatches) / static_cast<double>(dim);
        }
    }
    throw DomainError("fingerprint_similarity: unknown measure");
}

std::vector<double> binarize(std::span<const double> theta) {
    std::vector<double> out(theta.size());
    for (std::size_t d = 0; d < theta.size(); ++d) out[d] = theta[d] > 0.5 ? 1.0 : 0.0;
    return out;
}

double instance_loss(const Instance& instance, const CandidateRanking& ranking,
                     std::span<const double> mean_theta, const LossSpec& spec) {
    if (spec.kind == LossSpec::Kind::Hit)
        return 1.0 - static_cast<double>(hit_at_k(ranking, instance.true_index, spec.k));

    if (spec.measure == SimilarityMeasure::Hamming &&
        spec.mode == SimilarityMode::Continuous)
        throw DomainError("instance_loss: Hamming requires the discrete mode");
    const Fingerprint& truth = instance.candidates.at(instance.true_index);
    if (spec.mode == SimilarityMode::Discrete) {
        const std::vector<double> hard = binarize(mean_theta);
        return 1.0 - fingerprint_similarity(hard, truth, spec.measure);
    }
    return 1.0 - fingerprint_similarity(mean_theta, truth, spec.measure);
}

double instance_loss(const Instance& instance, const PredictionBundle& bundle,
                     const LossSpec& spec, double temperature,
                     AggregationStrategy strategy) {
    if (spec.kind == LossSpec::Kind::Hit) {
        const CandidateRanking ranking =
            aggregate_prediction(bundle, instance, strategy, temperature);
        return instance_loss(instance, ranking, {}, spec);
    }
    const std::vector<double> mean = mean_sample(bundle);
    return instance_loss(instance, CandidateRanking{}, mean, spec);
}

double selective_risk(std::span<const double> losses, std::span<const bool> accepted) {
    if (losses.size() != accepted.size())
        throw DomainError("selective_risk: size mismatch");
    long double sum = 0.0L;
    std::size_t count = 0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (accepted[i]) {
            sum += losses[i];
            ++count;
        }
    }
    if (count == 0)
        throw DomainError("selective_risk: empty acceptance set (coverage 0)");
    return static_cast<double>(sum / static_cast<long double>(count));
}

namespace {

// Prefix-mean risks for a given acceptance order.
std::vector<double> prefix_risks(std::span<const double> losses,
                                 std::span<const std::size_t> order) {
    std::vector<double> risks(order.size());
    long double sum = 0.0L;
    for (std::size_t m = 0; m < order.size(); ++m) {
        sum += losses[order[m]];
        risks[m] = static_cast<double>(sum / static_cast<long double>(m + 1));
    }
    return risks;
}

// Area under the prefix-risk curve over coverage (0, 1]: a rectangle of
// height R_1 over [0, 1/n] plus trapezoids between consecutive prefixes.
// A constant curve therefore integrates exactly to its value.
double curve_area(std::span<const double> risks) {
    const std::size_t n = risks.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    long double area = static_cast<long double>(risks[0]) * inv_n;
    for (std::size_t m = 0; m + 1 < n; ++m)
        area += (static_cast<long double>(risks[m]) + risks[m + 1]) * 0.5L * inv_n;
    return static_cast<double>(area);
}

}  // namespace

RiskCoverageCurve risk_coverage_curve(std::span<const double> losses,
                                      std::span<const double> kappa) {
    if (losses.size() != kappa.size())
        throw DomainError("risk_coverage_curve: size mismatch");
    if (losses.empty())
        throw DomainError("risk_coverage_curve: empty input");
    const std::size_t n = losses.size();

    // Acceptance order: descending kappa, ties by ascending index.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return kappa[a] > kappa[b]; });
    const std::vector<double> risks = prefix_risks(losses, order);

    // Oracle order: ascending loss (prefix means do not depend on the
    // tie-break within equal losses).
    std::vector<std::size_t> oracle_order(n);
    std::iota(oracle_order.begin(), oracle_order.end(), std::size_t{0});
    std::stable_sort(oracle_order.begin(), oracle_order.end(), [&](std::size_t a, std::size_t b) {
        return losses[a] < losses[b];
    });
    const std::vector<double> oracle_risks = prefix_risks(losses, oracle_order);

    RiskCoverageCurve curve;
    curve.points.resize(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t m = 0; m < n; ++m)
        curve.points[m] = {static_cast<double>(m + 1) * inv_n, risks[m]};
    curve.aurc = curve_area(risks);
    curve.aurc_oracle = curve_area(oracle_risks);
    curve.aurc_random = risks[n - 1];  // full-coverage risk = mean loss

    const double span = curve.aurc_random - curve.aurc_oracle;
    if (std::abs(span) <= 1e-12) {
        curve.degenerate = true;
        curve.rel_aurc = 0.0;
    } else {
        curve.rel_aurc = (curve.aurc - curve.aurc_oracle) / span;
    }
    return curve;
}

double coverage_at_threshold(std::span<const double> kappa, double tau) {
    if (kappa.empty()) return 0.0;
    std::size_t count = 0;
    for (double v : kappa)
        if (v >= tau) ++count;
    return static_cast<double>(count) / static_cast<double>(kappa.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = static_cast<double>(i + j) / 2.0 + 1.0;  // 1-based
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw DomainError("spearman: size mismatch");
    if (x.size() < 2)
        throw DomainError("spearman: need at least 2 observations");
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    const std::size_t n = x.size();
    long double mean = (static_cast<long double>(n) + 1.0L) / 2.0L;
    long double sxx = 0.0L, syy = 0.0L, sxy = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double dx = rx[i] - mean;
        const long double dy = ry[i] - mean;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0L || syy <= 0.0L)
        return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

std::vector<std::vector<double>> spearman_matrix(
    const std::vector<std::vector<double>>& columns) {
    const std::size_t k = columns.size();
    if (k == 0) throw DomainError("spearman_matrix: no columns");
    const std::size_t n = columns[0].size();
    if (n < 2) throw DomainError("spearman_matrix: need at least 2 instances");
    for (const auto& col : columns)
        if (col.size() != n)
            throw DomainError("spearman_matrix: ragged columns");

    std::vector<std::vector<double>> matrix(k, std::vector<double>(k, 1.0));
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            const double rho = spearman(columns[a], columns[b]);
            matrix[a][b] = rho;
            matrix[b][a] = rho;
        }
    }
    return matrix;
}

}  // namespace selret::seleval
