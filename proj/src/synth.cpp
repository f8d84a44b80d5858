#include "selret/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "selret/parallel.hpp"
#include "selret/riskctl.hpp"

namespace selret::synth {

void SynthConfig::validate() const {
    if (n_instances < 1) throw DomainError("SynthConfig: n_instances must be >= 1");
    if (dim < 2) throw DomainError("SynthConfig: dim must be >= 2");
    if (m_min < 1 || m_max < m_min)
        throw DomainError("SynthConfig: invalid candidate-size range");
    if (m_max > cap)
        throw DomainError("SynthConfig: m_max exceeds the candidate cap");
    if (num_samples < 1) throw DomainError("SynthConfig: num_samples must be >= 1");
    if (noise_level < 0.0) throw DomainError("SynthConfig: noise_level must be >= 0");
}

namespace {

std::uint64_t hash_words(const std::vector<std::uint64_t>& words) {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (std::uint64_t w : words) {
        h ^= w;
        h *= 0x100000001B3ULL;
        h ^= h >> 29;
    }
    return h;
}

// Random fingerprint with exactly `weight` set bits: random words, then
// corrective flips until the popcount matches.
Fingerprint random_fixed_weight(std::size_t dim, std::size_t weight, Rng& rng) {
    Fingerprint fp(dim);
    auto& words = fp.words();
    for (auto& w : words) w = rng.next_u64();
    const std::size_t tail = dim & 63;
    if (tail != 0) words.back() &= (1ULL << tail) - 1;

    std::size_t count = fp.popcount();
    while (count > weight) {
        const std::size_t d = static_cast<std::size_t>(rng.bounded(dim));
        if (fp.test(d)) {
            fp.reset(d);
            --count;
        }
    }
    while (count < weight) {
        const std::size_t d = static_cast<std::size_t>(rng.bounded(dim));
        if (!fp.test(d)) {
            fp.set(d);
            ++count;
        }
    }
    return fp;
}

// Near-duplicate of `base`: swaps `swaps` set bits against unset ones,
// keeping the weight fixed.
Fingerprint perturb_fingerprint(const Fingerprint& base, std::size_t swaps, Rng& rng) {
    Fingerprint fp = base;
    const std::size_t dim = fp.size();
    for (std::size_t s = 0; s < swaps; ++s) {
        for (;;) {
            const std::size_t d = static_cast<std::size_t>(rng.bounded(dim));
            if (fp.test(d)) {
                fp.reset(d);
                break;
            }
        }
        for (;;) {
            const std::size_t d = static_cast<std::size_t>(rng.bounded(dim));
            if (!fp.test(d)) {
                fp.set(d);
                break;
            }
        }
    }
    return fp;
}

std::size_t hamming_distance(const Fingerprint& a, const Fingerprint& b) {
    std::size_t dist = 0;
    for (std::size_t w = 0; w < a.words().size(); ++w)
        dist += static_cast<std::size_t>(std::popcount(a.words()[w] ^ b.words()[w]));
    return dist;
}

double gaussian(Rng& rng) {
    const double u1 = 1.0 - rng.next_double();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<double> random_unit_vector(std::size_t dim, Rng& rng) {
    std::vector<double> v(dim);
    double sq = 0.0;
    for (double& x : v) {
        x = gaussian(rng);
        sq += x * x;
    }
    if (sq == 0.0) {
        v[0] = 1.0;
        sq = 1.0;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x = round_to_float(x * inv);
    return v;
}

}  // namespace

InstanceGenerator::InstanceGenerator(const SynthConfig& config) : config_(config) {
    config_.validate();
    root_seed_ = Rng::derive_seed(config_.seed, /*stream=*/1);
}

SynthInstance InstanceGenerator::at(std::size_t index) const {
    if (index >= config_.n_instances)
        throw DomainError("InstanceGenerator: index out of range");
    Rng rng(Rng::derive_seed(root_seed_, index));

    const std::size_t dim = config_.dim;
    const std::size_t weight = std::max<std::size_t>(1, dim / 2);
    const std::size_t m =
        config_.m_min + static_cast<std::size_t>(rng.bounded(config_.m_max - config_.m_min + 1));
    const bool planted = config_.difficulty == DifficultyModel::PlantedConfidence;

    SynthInstance out;
    out.instance.id = "syn-" + std::to_string(index);
    out.instance.true_index = static_cast<std::size_t>(rng.bounded(m));

    // Same-weight candidates make the cosine ranking depend only on bit
    // overlap, which is what lets the construction below keep the planted
    // argmax under every bounded jitter draw.
    std::unordered_set<std::uint64_t> seen;
    out.instance.candidates.reserve(m);
    const Fingerprint* truth = nullptr;
    for (std::size_t j = 0; j < m; ++j) {
        for (;;) {
            Fingerprint fp;
            if (!planted && j != out.instance.true_index && truth != nullptr &&
                rng.next_double() < 0.5) {
                const std::size_t swaps = 1 + static_cast<std::size_t>(rng.bounded(2));
                fp = perturb_fingerprint(*truth, swaps, rng);
            } else {
                fp = random_fixed_weight(dim, weight, rng);
            }
            if (seen.insert(hash_words(fp.words())).second) {
                out.instance.candidates.push_back(std::move(fp));
                break;
            }
        }
        if (j == out.instance.true_index)
            truth = &out.instance.candidates.back();
    }

    // Latent difficulty q drives the error probability, the signal
    // amplitude and the sample jitter.
    const double q = rng.next_double();
    const double cap_p = std::min(config_.noise_level, 1.0);
    double signal, jitter;
    std::size_t base_index = out.instance.true_index;

    if (planted) {
        out.error_prob = m >= 2 ? cap_p * q : 0.0;
        out.ideal_kappa = 1.0 - out.error_prob;
        if (rng.bernoulli(out.error_prob)) {
            std::size_t decoy = static_cast<std::size_t>(rng.bounded(m - 1));
            if (decoy >= out.instance.true_index) ++decoy;
            base_index = decoy;
        }
        signal = 0.5 * (1.0 - 0.5 * q);
        // Strictly below signal/2: no jitter draw can move the argmax off
        // the base candidate (same-weight margin argument).
        jitter = 0.45 * signal * q;
    } else {
        std::size_t min_dist = 2 * weight;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == out.instance.true_index) continue;
            min_dist = std::min(
                min_dist, hamming_distance(out.instance.candidates[j], *truth));
        }
        out.error_prob = std::numeric_limits<double>::quiet_NaN();
        out.ideal_kappa =
            static_cast<double>(min_dist) / static_cast<double>(2 * weight);
        signal = 0.4;
        jitter = 0.5 * config_.noise_level;  // may exceed signal/2: flips intended
    }

    const Fingerprint& base = out.instance.candidates[base_index];
    const double offset = (1.0 - signal) / 2.0;
    out.bundle.instance_id = out.instance.id;
    out.bundle.num_samples = config_.num_samples;
    out.bundle.dim = dim;
    out.bundle.samples.resize(config_.num_samples * dim);
    for (std::size_t s = 0; s < config_.num_samples; ++s) {
        double* row = out.bundle.samples.data() + s * dim;
        for (std::size_t d = 0; d < dim; ++d) {
            double v = offset + (base.test(d) ? signal : 0.0) +
                       jitter * rng.uniform(-1.0, 1.0);
            v = std::clamp(v, 0.01, 0.99);
            row[d] = round_to_float(v);
        }
    }
    if (config_.embedding_dim > 0)
        out.bundle.embedding = random_unit_vector(config_.embedding_dim, rng);

    out.instance.meta["planted_p"] =
        planted ? std::to_string(out.error_prob) : "nan";
    return out;
}

SynthData generate(const SynthConfig& config) {
    InstanceGenerator gen(config);
    SynthData data;
    data.instances.resize(config.n_instances);
    data.bundles.resize(config.n_instances);
    data.error_probs.resize(config.n_instances);
    data.ideal_kappas.resize(config.n_instances);
    for (std::size_t i = 0; i < config.n_instances; ++i) {
        SynthInstance s = gen.at(i);
        data.instances[i] = std::move(s.instance);
        data.bundles[i] = std::move(s.bundle);
        data.error_probs[i] = s.error_prob;
        data.ideal_kappas[i] = s.ideal_kappa;
    }
    return data;
}

LatentDraw draw_planted_scores(const SynthConfig& config, std::uint64_t trial_seed) {
    if (config.difficulty != DifficultyModel::PlantedConfidence)
        throw DomainError("draw_planted_scores: requires the PlantedConfidence model");
    Rng rng(Rng::derive_seed(config.seed, trial_seed));
    const double cap_p = std::min(config.noise_level, 1.0);
    LatentDraw draw;
    draw.kappa.resize(config.n_instances);
    draw.loss.resize(config.n_instances);
    draw.error_prob.resize(config.n_instances);
    for (std::size_t i = 0; i < config.n_instances; ++i) {
        const double p = cap_p * rng.next_double();
        draw.error_prob[i] = p;
        draw.kappa[i] = 1.0 - p;
        draw.loss[i] = rng.bernoulli(p) ? 1.0 : 0.0;
    }
    return draw;
}

double population_selective_risk(const SynthConfig& config, double tau) {
    const double cap_p = std::min(config.noise_level, 1.0);
    // kappa = 1 - p with p ~ U(0, cap_p): accepting kappa >= tau keeps
    // p <= 1 - tau, and the conditional mean of a uniform is half its cap.
    const double limit = std::min(1.0 - tau, cap_p);
    if (cap_p == 0.0) return 0.0;
    if (limit < 0.0) return std::numeric_limits<double>::quiet_NaN();
    return limit / 2.0;
}

OracleDecomposition oracle_decomposition(const PredictionBundle& bundle,
                                         const Instance& instance,
                                         double temperature) {
    const std::size_t m = instance.candidates.size();
    const std::size_t s_count = bundle.num_samples;
    if (m > 64 || s_count > 16)
        throw DomainError("oracle_decomposition: desk-scale limits are M <= 64, S <= 16");
    if (m == 0 || s_count == 0)
        throw DomainError("oracle_decomposition: empty input");
    const std::size_t dim = bundle.dim;

    std::vector<long double> mean_probs(m, 0.0L);
    long double al = 0.0L;
    for (std::size_t s = 0; s < s_count; ++s) {
        // Naive cosine scores over every bit.
        std::vector<long double> scores(m);
        long double theta_sq = 0.0L;
        for (std::size_t d = 0; d < dim; ++d) {
            const long double t = bundle.samples[s * dim + d];
            theta_sq += t * t;
        }
        for (std::size_t j = 0; j < m; ++j) {
            long double dot = 0.0L;
            long double c_sq = 0.0L;
            for (std::size_t d = 0; d < dim; ++d) {
                const long double c = instance.candidates[j].test(d) ? 1.0L : 0.0L;
                dot += c * bundle.samples[s * dim + d];
                c_sq += c * c;
            }
            scores[j] = dot / (std::sqrt(theta_sq) * std::sqrt(c_sq));
        }
        // Direct softmax; long double absorbs exp(s/T) up to T ~ 1e-3.
        std::vector<long double> probs(m);
        long double z = 0.0L;
        for (std::size_t j = 0; j < m; ++j) {
            probs[j] = std::exp(scores[j] / static_cast<long double>(temperature));
            z += probs[j];
        }
        long double h = 0.0L;
        for (std::size_t j = 0; j < m; ++j) {
            probs[j] /= z;
            if (probs[j] > 0.0L) h += probs[j] * std::log(probs[j]);
            mean_probs[j] += probs[j];
        }
        al += h;
    }
    al /= static_cast<long double>(s_count);
    long double tot = 0.0L;
    for (std::size_t j = 0; j < m; ++j) {
        const long double p = mean_probs[j] / static_cast<long double>(s_count);
        if (p > 0.0L) tot += p * std::log(p);
    }

    OracleDecomposition out;
    out.tot = static_cast<double>(tot);
    out.al = static_cast<double>(al);
    out.ep = static_cast<double>(tot - al);
    return out;
}

double mc_validate_sgr(const SynthConfig& config, double target_risk, double delta,
                       std::size_t trials, std::size_t threads) {
    if (config.difficulty != DifficultyModel::PlantedConfidence)
        throw DomainError("mc_validate_sgr: requires the PlantedConfidence model");
    if (trials < 1) throw DomainError("mc_validate_sgr: trials must be >= 1");

    std::vector<std::uint8_t> violated(trials, 0);
    parallel_for(trials, threads, [&](std::size_t t) {
        const LatentDraw draw = draw_planted_scores(config, t);
        const riskctl::SgrResult result =
            riskctl::sgr_select(draw.kappa, draw.loss, target_risk, delta);
        if (!result.feasible) return;  // abstaining cannot violate the bound
        const double true_risk = population_selective_risk(config, result.tau_star);
        if (std::isfinite(true_risk) && true_risk > target_risk) violated[t] = 1;
    });
    std::size_t count = 0;
    for (std::uint8_t v : violated) count += v;
    return static_cast<double>(count) / static_cast<double>(trials);
}

std::vector<double> random_unit_rows(std::size_t n, std::size_t dim, Rng& rng) {
    std::vector<double> rows;
    rows.reserve(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> v = random_unit_vector(dim, rng);
        rows.insert(rows.end(), v.begin(), v.end());
    }
    return rows;
}

}  // namespace selret::synth
