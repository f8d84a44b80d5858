#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selret/io.hpp"
#include "selret/scoring.hpp"
#include "selret/seleval.hpp"
#include "selret/synth.hpp"
#include "selret/types.hpp"

namespace selret::pipeline {

// One parsed CLI invocation; fields not used by a subcommand are ignored.
struct RunConfig {
    std::string dataset_path;
    std::string predictions_path;
    std::string train_embeddings_path;
    std::string table_path;  // reuse a scores CSV instead of recomputing
    std::string out_dir = ".";

    std::vector<std::string> scores = {"all-cheap"};
    std::vector<std::size_t> k_values = {1, 5, 20};
    std::vector<std::string> losses;  // empty = hit@K for every K
    double temperature = 0.003;
    AggregationStrategy aggregation = AggregationStrategy::ScoreMean;
    std::size_t knn_k = 100;

    double delta = 0.001;
    std::vector<double> target_risks = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::uint64_t seed = 42;

    std::size_t min_candidates = 0;
    std::size_t max_candidates = 0;  // 0 = unbounded
    std::size_t threads = 0;
    bool allow_uncapped = false;
    bool no_plots = false;

    // simulate
    synth::SynthConfig synth;
    std::size_t train_embedding_count = 0;
    std::size_t validate_trials = 0;
};

std::vector<seleval::LossSpec> resolve_losses(const RunConfig& config);

// Streamed score+loss table: reads the dataset and prediction files one
// record at a time, scores batches in parallel, and keeps only the table
// in memory. Loss columns are named loss_<spec>.
struct TableResult {
    scoring::ScoreTable table;
    std::vector<std::pair<std::string, std::string>> exclusions;
};
TableResult compute_table(const RunConfig& config);

// Loads the table from config.table_path when given, else computes it.
TableResult obtain_table(const RunConfig& config);

// kappa orientation for ranking by a table column: num_candidates counts
// down (bigger sets are harder), every other column is already oriented.
std::vector<double> oriented_column(const scoring::ScoreTable& table,
                                    const std::string& name);

// Subcommand drivers; each writes its outputs plus a manifest into
// config.out_dir and returns the paths it wrote.
std::vector<std::string> run_score(const RunConfig& config);
std::vector<std::string> run_curve(const RunConfig& config);
std::vector<std::string> run_sgr(const RunConfig& config);
std::vector<std::string> run_correlate(const RunConfig& config);
std::vector<std::string> run_simulate(const RunConfig& config);

// Failure-path manifest so no partial output set is left unmarked.
void write_failure_manifest(const RunConfig& config, const std::string& command,
                            const std::string& error);

}  // namespace selret::pipeline
