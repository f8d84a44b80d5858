#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "selret/pipeline.hpp"
#include "selret/version.hpp"

namespace {

using selret::pipeline::RunConfig;

void add_common_options(CLI::App* cmd, RunConfig& config) {
    cmd->add_option("--threads", config.threads,
                    "Worker threads (default: SELRET_THREADS or all cores)");
    cmd->add_option("--out", config.out_dir, "Output directory")->capture_default_str();
}

void add_input_options(CLI::App* cmd, RunConfig& config, bool table_allowed) {
    cmd->add_option("--dataset", config.dataset_path, "Dataset file (JSON lines)");
    cmd->add_option("--predictions", config.predictions_path, "Prediction file");
    if (table_allowed)
        cmd->add_option("--table", config.table_path,
                        "Existing scores.csv to reuse instead of recomputing");
    cmd->add_option("--train-embeddings", config.train_embeddings_path,
                    "Training-embedding file for knn/mah scores");
    cmd->add_flag("--allow-uncapped", config.allow_uncapped,
                  "Accept candidate sets larger than the file's cap");
    cmd->add_option("--min-candidates", config.min_candidates,
                    "Keep only instances with at least this many candidates");
    cmd->add_option("--max-candidates", config.max_candidates,
                    "Keep only instances with at most this many candidates");
}

void add_scoring_options(CLI::App* cmd, RunConfig& config) {
    cmd->add_option("--scores", config.scores,
                    "Score names (conf,gap,bit_*,ret_*,rank_var,knn,mah or all/all-cheap)")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--k", config.k_values, "Top-K depths")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--losses", config.losses,
                    "Losses: hit, hit@K, tanimoto[:cont|:disc], cosine[...], hamming")
        ->delimiter(',');
    cmd->add_option("--temperature", config.temperature, "Softmax temperature")
        ->capture_default_str();
    cmd->add_option_function<std::string>(
           "--aggregation",
           [&config](const std::string& s) {
               config.aggregation = selret::aggregation_from_string(s);
           },
           "fingerprint-mean | score-mean | prob-mean")
        ->default_str("score-mean");
    cmd->add_option("--knn-k", config.knn_k, "Neighbor count for the knn score")
        ->capture_default_str();
}

int dispatch(const std::string& command, const RunConfig& config) {
    using namespace selret;
    try {
        std::vector<std::string> outputs;
        if (command == "score") outputs = pipeline::run_score(config);
        else if (command == "curve") outputs = pipeline::run_curve(config);
        else if (command == "sgr") outputs = pipeline::run_sgr(config);
        else if (command == "correlate") outputs = pipeline::run_correlate(config);
        else if (command == "simulate") outputs = pipeline::run_simulate(config);
        for (const std::string& path : outputs) std::cout << path << "\n";
        return 0;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        pipeline::write_failure_manifest(config, command, e.what());
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        pipeline::write_failure_manifest(config, command, e.what());
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective prediction toolkit for ranked retrieval"};
    app.set_version_flag("--version", std::string("selret ") + SELRET_VERSION);
    app.require_subcommand(1);

    RunConfig config;

    CLI::App* score = app.add_subcommand("score", "Compute per-instance scores and losses");
    add_input_options(score, config, false);
    add_scoring_options(score, config);
    add_common_options(score, config);

    CLI::App* curve = app.add_subcommand("curve", "Risk-coverage curves and AURC summary");
    add_input_options(curve, config, true);
    add_scoring_options(curve, config);
    add_common_options(curve, config);
    curve->add_flag("--no-plots", config.no_plots, "Skip SVG output");

    CLI::App* sgr = app.add_subcommand("sgr", "Certified threshold selection");
    add_input_options(sgr, config, true);
    add_scoring_options(sgr, config);
    add_common_options(sgr, config);
    sgr->add_option("--delta", config.delta, "Confidence level")->capture_default_str();
    sgr->add_option("--target-risks", config.target_risks, "Target risk levels")
        ->delimiter(',')
        ->capture_default_str();
    sgr->add_option("--seed", config.seed, "Calibration split seed")->capture_default_str();
    sgr->add_flag("--no-plots", config.no_plots, "Skip SVG output");

    CLI::App* correlate =
        app.add_subcommand("correlate", "Spearman correlations between scores");
    add_input_options(correlate, config, true);
    add_scoring_options(correlate, config);
    add_common_options(correlate, config);
    correlate->add_flag("--no-plots", config.no_plots, "Skip SVG output");

    CLI::App* simulate = app.add_subcommand("simulate", "Generate synthetic datasets");
    simulate->add_option("--n", config.synth.n_instances, "Instances")->capture_default_str();
    simulate->add_option("--dim", config.synth.dim, "Fingerprint length D")
        ->capture_default_str();
    simulate->add_option("--m-min", config.synth.m_min, "Min candidates")
        ->capture_default_str();
    simulate->add_option("--m-max", config.synth.m_max, "Max candidates")
        ->capture_default_str();
    simulate->add_option("--samples", config.synth.num_samples, "Posterior samples S")
        ->capture_default_str();
    simulate->add_option("--noise", config.synth.noise_level, "Noise level")
        ->capture_default_str();
    simulate->add_option("--seed", config.synth.seed, "Generator seed")
        ->capture_default_str();
    simulate->add_option("--cap", config.synth.cap, "Candidate cap")->capture_default_str();
    simulate->add_option("--embedding-dim", config.synth.embedding_dim,
                         "Embedding dimension (0 = none)");
    std::string difficulty = "planted";
    simulate->add_option("--difficulty", difficulty, "planted | similar")
        ->check(CLI::IsMember({"planted", "similar"}))
        ->capture_default_str();
    simulate->add_option("--train-embeddings-count", config.train_embedding_count,
                         "Also write this many training embeddings");
    simulate->add_option("--validate-sgr-trials", config.validate_trials,
                         "Run the Monte-Carlo SGR validation with this many trials");
    simulate->add_option("--delta", config.delta, "Confidence level for validation")
        ->capture_default_str();
    simulate->add_option("--target-risks", config.target_risks,
                         "Target risks for validation")
        ->delimiter(',')
        ->capture_default_str();
    add_common_options(simulate, config);

    CLI11_PARSE(app, argc, argv);

    config.synth.difficulty = difficulty == "similar"
                                  ? selret::synth::DifficultyModel::SimilarCandidates
                                  : selret::synth::DifficultyModel::PlantedConfidence;

    for (const auto* cmd : {score, curve, sgr, correlate, simulate})
        if (cmd->parsed()) return dispatch(cmd->get_name(), config);
    return 2;
}
