#pragma once

#include <cstdint>
#include <vector>

#include "selret/rng.hpp"
#include "selret/types.hpp"

namespace selret::synth {

enum class DifficultyModel { PlantedConfidence, SimilarCandidates };

struct SynthConfig {
    std::size_t n_instances = 100;
    std::size_t dim = 64;        // fingerprint length D
    std::size_t m_min = 2;       // candidate-set size range
    std::size_t m_max = 16;
    std::size_t num_samples = 3; // posterior samples S
    double noise_level = 0.5;    // scales error probabilities / sample jitter
    std::uint64_t seed = 0;
    DifficultyModel difficulty = DifficultyModel::PlantedConfidence;
    std::size_t cap = 256;
    std::size_t embedding_dim = 0;  // 0 = bundles carry no embedding

    void validate() const;
};

// One generated instance with its planted ground truth. For the
// PlantedConfidence model, error_prob is the exact Bernoulli probability
// that Hit@1 fails (the construction realizes it exactly: every posterior
// sample keeps the planted argmax). ideal_kappa is monotone in the latent
// difficulty, so an oracle scorer can sort by it.
struct SynthInstance {
    Instance instance;
    PredictionBundle bundle;
    double error_prob = 0.0;  // NaN for SimilarCandidates
    double ideal_kappa = 0.0;
};

// Streaming generator: instance i depends only on (config, i), so streams
// are reproducible and parallelizable.
class InstanceGenerator {
public:
    explicit InstanceGenerator(const SynthConfig& config);
    std::size_t count() const { return config_.n_instances; }
    SynthInstance at(std::size_t index) const;

private:
    SynthConfig config_;
    std::uint64_t root_seed_;
};

struct SynthData {
    std::vector<Instance> instances;
    std::vector<PredictionBundle> bundles;
    std::vector<double> error_probs;
    std::vector<double> ideal_kappas;
};

// Materializes the whole dataset (desk scale).
SynthData generate(const SynthConfig& config);

// Latent-level draw for Monte-Carlo work: (ideal kappa, realized 0/1 loss,
// planted error probability) triples without building fingerprints.
struct LatentDraw {
    std::vector<double> kappa;
    std::vector<double> loss;
    std::vector<double> error_prob;
};
LatentDraw draw_planted_scores(const SynthConfig& config, std::uint64_t trial_seed);

// True population selective risk of the PlantedConfidence model at
// acceptance rule kappa >= tau (error probabilities are uniform on
// [0, noise_level] and kappa = 1 - p). Returns NaN when the acceptance
// region has zero mass.
double population_selective_risk(const SynthConfig& config, double tau);

// Extended-precision re-implementation of the retrieval-level entropy
// decomposition (naive double loops in long double, no shared helpers);
// desk scale only: M <= 64, S <= 16.
struct OracleDecomposition {
    double tot = 0.0;
    double al = 0.0;
    double ep = 0.0;
};
OracleDecomposition oracle_decomposition(const PredictionBundle& bundle,
                                         const Instance& instance,
                                         double temperature);

// Runs sgr_select on `trials` fresh calibration draws and returns the
// fraction of trials whose true selective risk at tau* exceeds the target.
// Requires the PlantedConfidence model.
double mc_validate_sgr(const SynthConfig& config, double target_risk, double delta,
                       std::size_t trials, std::size_t threads = 0);

// Row-major l2-normalized pseudo-Gaussian rows (Box-Muller over the
// counter RNG), float-rounded like everything else the generator emits.
std::vector<double> random_unit_rows(std::size_t n, std::size_t dim, Rng& rng);

}  // namespace selret::synth
