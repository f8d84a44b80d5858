#include "selret/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numeric>

#include "selret/parallel.hpp"
#include "selret/plot.hpp"
#include "selret/riskctl.hpp"

namespace selret::pipeline {

namespace fs = std::filesystem;

std::vector<seleval::LossSpec> resolve_losses(const RunConfig& config) {
    std::vector<seleval::LossSpec> specs;
    if (config.losses.empty()) {
        for (std::size_t k : config.k_values) specs.push_back(seleval::LossSpec::hit(k));
        return specs;
    }
    for (const std::string& text : config.losses) {
        if (text == "hit") {
            for (std::size_t k : config.k_values) specs.push_back(seleval::LossSpec::hit(k));
        } else {
            specs.push_back(seleval::LossSpec::parse(text));
        }
    }
    return specs;
}

namespace {

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (c == ':' || c == '/' || c == ' ') c = '-';
    return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += sep;
        out += items[i];
    }
    return out;
}

std::string out_path(const RunConfig& config, const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
}

void ensure_out_dir(const RunConfig& config) {
    if (!config.out_dir.empty()) fs::create_directories(config.out_dir);
}

std::map<std::string, std::string> base_manifest_config(const RunConfig& config) {
    std::map<std::string, std::string> m;
    m["temperature"] = io::format_double(config.temperature);
    m["aggregation"] = to_string(config.aggregation);
    m["scores"] = join(config.scores, ",");
    std::vector<std::string> ks;
    for (std::size_t k : config.k_values) ks.push_back(std::to_string(k));
    m["k_values"] = join(ks, ",");
    if (!config.losses.empty()) m["losses"] = join(config.losses, ",");
    if (config.min_candidates > 0)
        m["min_candidates"] = std::to_string(config.min_candidates);
    if (config.max_candidates > 0)
        m["max_candidates"] = std::to_string(config.max_candidates);
    if (config.allow_uncapped) m["allow_uncapped"] = "true";
    return m;
}

void add_input_digest(io::Manifest& manifest, const std::string& path) {
    if (!path.empty()) manifest.inputs.emplace_back(path, io::sha256_file(path));
}

// Per-column confidence orientation (see oriented_column).
std::vector<double> orient(const std::string& name, std::vector<double> values) {
    if (name == "num_candidates")
        for (double& v : values) v = -v;
    return values;
}

// Expands requested score names against the columns actually present in a
// table: "rank_var" matches every rank_var@K column, "all"/"all-cheap"
// every non-loss column.
std::vector<std::string> expand_against_table(const std::vector<std::string>& requested,
                                              const scoring::ScoreTable& table) {
    std::vector<std::string> out;
    auto push_unique = [&out](const std::string& name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    };
    for (const std::string& name : requested) {
        if (name == "all" || name == "all-cheap") {
            for (const std::string& col : table.columns) {
                if (col.rfind("loss_", 0) == 0) continue;
                if (name == "all-cheap" && (col == "knn" || col == "mah")) continue;
                push_unique(col);
            }
        } else if (name == "rank_var") {
            bool found = false;
            for (const std::string& col : table.columns) {
                if (col.rfind("rank_var@", 0) == 0) {
                    push_unique(col);
                    found = true;
                }
            }
            if (!found)
                throw ValidationError("no rank_var columns in the score table");
        } else {
            if (!table.column_index(name))
                throw ValidationError("score column '" + name +
                                      "' not present in the table");
            push_unique(name);
        }
    }
    if (out.empty()) throw DomainError("no score columns selected");
    return out;
}

scoring::ScoreTable filter_by_candidates(const scoring::ScoreTable& table,
                                         std::size_t min_c, std::size_t max_c) {
    if (min_c == 0 && max_c == 0) return table;
    const auto idx = table.column_index("num_candidates");
    if (!idx)
        throw ValidationError(
            "candidate-size filter requires a num_candidates column");
    scoring::ScoreTable out;
    out.columns = table.columns;
    for (std::size_t r = 0; r < table.ids.size(); ++r) {
        const double m = table.values[r][*idx];
        if (min_c > 0 && m < static_cast<double>(min_c)) continue;
        if (max_c > 0 && m > static_cast<double>(max_c)) continue;
        out.ids.push_back(table.ids[r]);
        out.values.push_back(table.values[r]);
    }
    if (out.ids.empty())
        throw ValidationError("candidate-size filter removed every instance");
    return out;
}

std::vector<std::pair<double, double>> downsample(
    const std::vector<seleval::RiskCoveragePoint>& points, std::size_t cap = 512) {
    std::vector<std::pair<double, double>> out;
    const std::size_t n = points.size();
    const std::size_t stride = n > cap ? n / cap : 1;
    for (std::size_t i = 0; i < n; i += stride) out.emplace_back(points[i].coverage, points[i].risk);
    if ((n - 1) % stride != 0) out.emplace_back(points[n - 1].coverage, points[n - 1].risk);
    return out;
}

}  // namespace

std::vector<double> oriented_column(const scoring::ScoreTable& table,
                                    const std::string& name) {
    return orient(name, table.column(name));
}

TableResult compute_table(const RunConfig& config) {
    if (config.dataset_path.empty() || config.predictions_path.empty())
        throw ValidationError("dataset and prediction paths are required");

    io::DatasetReader reader(config.dataset_path, config.allow_uncapped);
    io::PredictionFileIndex predictions(config.predictions_path);
    if (predictions.header().dim != reader.header().dim)
        throw ValidationError("prediction D = " + std::to_string(predictions.header().dim) +
                              " does not match dataset D = " +
                              std::to_string(reader.header().dim));

    scoring::TrainEmbeddingIndex train_index;
    bool have_index = false;
    if (!config.train_embeddings_path.empty()) {
        auto [rows, shape] = io::load_embeddings(config.train_embeddings_path);
        train_index = scoring::TrainEmbeddingIndex::build(rows, shape.first, shape.second);
        have_index = true;
    }

    scoring::ScoringConfig sc;
    sc.scores = scoring::resolve_score_names(config.scores, have_index);
    sc.k_values = config.k_values;
    sc.temperature = config.temperature;
    sc.aggregation = config.aggregation;
    sc.knn_k = config.knn_k;
    sc.train_index = have_index ? &train_index : nullptr;
    if (have_index && config.knn_k > train_index.size())
        std::cerr << "warning: knn k = " << config.knn_k << " clamped to "
                  << train_index.size() << " training embeddings\n";

    const std::vector<seleval::LossSpec> losses = resolve_losses(config);
    bool need_ranking = false;
    bool need_mean = false;
    for (const auto& spec : losses) {
        if (spec.kind == seleval::LossSpec::Kind::Hit) need_ranking = true;
        else need_mean = true;
    }

    TableResult result;
    result.table.columns = scoring::table_columns(sc);
    for (const auto& spec : losses)
        result.table.columns.push_back("loss_" + spec.name());

    constexpr std::size_t kBatch = 64;
    std::vector<Instance> instances;
    std::vector<PredictionBundle> bundles;
    std::vector<std::vector<double>> rows;
    bool done = false;
    while (!done) {
        instances.clear();
        bundles.clear();
        while (instances.size() < kBatch) {
            auto instance = reader.next();
            if (!instance) {
                done = true;
                break;
            }
            const std::size_t m = instance->num_candidates();
            if (config.min_candidates > 0 && m < config.min_candidates) continue;
            if (config.max_candidates > 0 && m > config.max_candidates) continue;
            if (!predictions.contains(instance->id)) {
                result.exclusions.emplace_back(instance->id, "no prediction bundle");
                continue;
            }
            bundles.push_back(predictions.read(instance->id));
            instances.push_back(std::move(*instance));
        }
        if (instances.empty()) continue;

        rows.assign(instances.size(), {});
        parallel_for(instances.size(), config.threads, [&](std::size_t i) {
            scoring::InstanceEvaluation eval = scoring::evaluate_instance(
                instances[i], bundles[i], sc, need_ranking, need_mean);
            for (const auto& spec : losses)
                eval.row.push_back(seleval::instance_loss(instances[i], eval.ranking,
                                                          eval.mean_theta, spec));
            rows[i] = std::move(eval.row);
        });
        for (std::size_t i = 0; i < instances.size(); ++i) {
            result.table.ids.push_back(instances[i].id);
            result.table.values.push_back(std::move(rows[i]));
        }
    }
    if (result.table.ids.empty())
        throw ValidationError("no instances left to score");
    return result;
}

TableResult obtain_table(const RunConfig& config) {
    if (!config.table_path.empty())
        return {io::read_score_table(config.table_path), {}};
    return compute_table(config);
}

namespace {

void write_exclusions(const RunConfig& config, const TableResult& result,
                      std::vector<std::string>& outputs) {
    if (result.exclusions.empty()) return;
    std::vector<std::vector<std::string>> rows;
    for (const auto& [id, reason] : result.exclusions) rows.push_back({id, reason});
    const std::string path = out_path(config, "exclusions.csv");
    io::write_csv(path, {"id", "reason"}, rows);
    outputs.push_back(path);
    std::cerr << "warning: excluded " << result.exclusions.size()
              << " instance(s), see " << path << "\n";
}

}  // namespace

std::vector<std::string> run_score(const RunConfig& config) {
    ensure_out_dir(config);
    TableResult result = compute_table(config);

    std::vector<std::string> outputs;
    const std::string table_path = out_path(config, "scores.csv");
    io::write_score_table(table_path, result.table);
    outputs.push_back(table_path);
    write_exclusions(config, result, outputs);

    io::Manifest manifest;
    manifest.command = "score";
    manifest.config = base_manifest_config(config);
    manifest.seed = config.seed;
    add_input_digest(manifest, config.dataset_path);
    add_input_digest(manifest, config.predictions_path);
    add_input_digest(manifest, config.train_embeddings_path);
    manifest.outputs = outputs;
    const std::string manifest_path = out_path(config, "manifest-score.json");
    io::write_manifest(manifest_path, manifest);
    outputs.push_back(manifest_path);
    return outputs;
}

std::vector<std::string> run_curve(const RunConfig& config) {
    ensure_out_dir(config);
    TableResult obtained = obtain_table(config);
    const scoring::ScoreTable table = filter_by_candidates(
        obtained.table, config.min_candidates, config.max_candidates);

    const std::vector<std::string> kappa_columns =
        expand_against_table(config.scores, table);
    const std::vector<seleval::LossSpec> losses = resolve_losses(config);

    std::vector<std::string> outputs;
    std::vector<std::vector<std::string>> summary_rows;
    for (const auto& spec : losses) {
        const std::string loss_column = "loss_" + spec.name();
        if (!table.column_index(loss_column))
            throw ValidationError("loss column '" + loss_column +
                                  "' not present in the table");
        const std::vector<double> loss_values = table.column(loss_column);

        std::vector<plot::Series> series;
        for (const std::string& kappa_name : kappa_columns) {
            const std::vector<double> kappa = oriented_column(table, kappa_name);
            const seleval::RiskCoverageCurve curve =
                seleval::risk_coverage_curve(loss_values, kappa);

            std::vector<std::vector<std::string>> rows;
            rows.reserve(curve.points.size());
            for (const auto& p : curve.points)
                rows.push_back({io::format_double(p.coverage), io::format_double(p.risk)});
            const std::string curve_path = out_path(
                config,
                "curve_" + sanitize(kappa_name) + "_" + sanitize(spec.name()) + ".csv");
            io::write_csv(curve_path, {"coverage", "risk"}, rows);
            outputs.push_back(curve_path);

            summary_rows.push_back({kappa_name, spec.name(),
                                    io::format_double(curve.aurc),
                                    io::format_double(curve.aurc_oracle),
                                    io::format_double(curve.aurc_random),
                                    io::format_double(curve.rel_aurc),
                                    curve.degenerate ? "true" : "false"});
            series.push_back({kappa_name, downsample(curve.points)});
        }
        if (!config.no_plots) {
            plot::ChartOptions opts;
            opts.title = "Risk-coverage, loss " + spec.name();
            opts.x_label = "coverage";
            opts.y_label = "selective risk";
            const std::string svg_path =
                out_path(config, "curves_" + sanitize(spec.name()) + ".svg");
            plot::write_svg(svg_path, plot::line_chart(series, opts));
            outputs.push_back(svg_path);
        }
    }
    const std::string summary_path = out_path(config, "aurc_summary.csv");
    io::write_csv(summary_path,
                  {"score", "loss", "aurc", "aurc_oracle", "aurc_random", "rel_aurc",
                   "degenerate"},
                  summary_rows);
    outputs.push_back(summary_path);

    io::Manifest manifest;
    manifest.command = "curve";
    manifest.config = base_manifest_config(config);
    manifest.seed = config.seed;
    add_input_digest(manifest, config.table_path.empty() ? config.dataset_path
                                                         : config.table_path);
    if (config.table_path.empty()) add_input_digest(manifest, config.predictions_path);
    add_input_digest(manifest, config.train_embeddings_path);
    manifest.outputs = outputs;
    const std::string manifest_path = out_path(config, "manifest-curve.json");
    io::write_manifest(manifest_path, manifest);
    outputs.push_back(manifest_path);
    return outputs;
}

std::vector<std::string> run_sgr(const RunConfig& config) {
    ensure_out_dir(config);
    for (const std::string& text : config.losses)
        if (text != "hit" && text.rfind("hit@", 0) != 0)
            throw DomainError(
                "sgr requires Bernoulli losses; similarity losses are not admissible");
    if (!(config.delta > 0.0 && config.delta < 1.0))
        throw DomainError("delta must lie in (0, 1)");
    for (double target : config.target_risks)
        if (!(target > 0.0 && target <= 1.0))
            throw DomainError("target risks must lie in (0, 1]");

    TableResult obtained = obtain_table(config);
    const scoring::ScoreTable table = filter_by_candidates(
        obtained.table, config.min_candidates, config.max_candidates);
    const std::vector<std::string> kappa_columns =
        expand_against_table(config.scores, table);

    const std::size_t n = table.ids.size();
    auto [cal_idx, eval_idx] = riskctl::calibration_split(n, config.seed);

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> outputs;
    struct PlotCell {
        std::string score;
        double target = 0.0;
        double coverage = 0.0;
        double risk = std::numeric_limits<double>::quiet_NaN();
    };
    std::map<std::size_t, std::vector<PlotCell>> cells_by_k;

    for (std::size_t k : config.k_values) {
        const std::string loss_column = "loss_hit@" + std::to_string(k);
        if (!table.column_index(loss_column))
            throw ValidationError("loss column '" + loss_column +
                                  "' not present in the table");
        const std::vector<double> loss_values = table.column(loss_column);

        for (const std::string& kappa_name : kappa_columns) {
            const std::vector<double> kappa = oriented_column(table, kappa_name);
            std::vector<double> kappa_cal, loss_cal, kappa_eval, loss_eval;
            for (std::size_t i : cal_idx) {
                kappa_cal.push_back(kappa[i]);
                loss_cal.push_back(loss_values[i]);
            }
            for (std::size_t i : eval_idx) {
                kappa_eval.push_back(kappa[i]);
                loss_eval.push_back(loss_values[i]);
            }

            for (double target : config.target_risks) {
                const riskctl::SgrResult res =
                    riskctl::sgr_select(kappa_cal, loss_cal, target, config.delta);
                double eval_coverage = 0.0;
                double eval_risk = std::numeric_limits<double>::quiet_NaN();
                if (res.feasible) {
                    eval_coverage = seleval::coverage_at_threshold(kappa_eval, res.tau_star);
                    long double sum = 0.0L;
                    std::size_t count = 0;
                    for (std::size_t i = 0; i < kappa_eval.size(); ++i) {
                        if (kappa_eval[i] >= res.tau_star) {
                            sum += loss_eval[i];
                            ++count;
                        }
                    }
                    if (count > 0)
                        eval_risk = static_cast<double>(sum / static_cast<long double>(count));
                }
                rows.push_back({kappa_name, std::to_string(k), io::format_double(target),
                                io::format_double(config.delta),
                                res.feasible ? "true" : "false",
                                io::format_double(res.tau_star),
                                io::format_double(res.bound_b_star),
                                io::format_double(res.coverage_cal),
                                io::format_double(res.empirical_risk_cal),
                                io::format_double(eval_coverage),
                                io::format_double(eval_risk)});
                cells_by_k[k].push_back({kappa_name, target, eval_coverage, eval_risk});
            }
        }
    }

    const std::string results_path = out_path(config, "sgr_results.csv");
    io::write_csv(results_path,
                  {"score", "k", "target_risk", "delta", "feasible", "tau_star", "bound",
                   "cal_coverage", "cal_risk", "eval_coverage", "eval_risk"},
                  rows);
    outputs.push_back(results_path);

    if (!config.no_plots) {
        for (const auto& [k, cells] : cells_by_k) {
            std::map<std::string, plot::Series> coverage_series, risk_series;
            for (const PlotCell& cell : cells) {
                coverage_series[cell.score].label = cell.score;
                coverage_series[cell.score].points.emplace_back(cell.target, cell.coverage);
                risk_series[cell.score].label = cell.score;
                risk_series[cell.score].points.emplace_back(cell.target, cell.risk);
            }
            auto to_vec = [](std::map<std::string, plot::Series>& m) {
                std::vector<plot::Series> v;
                for (auto& [_, s] : m) v.push_back(std::move(s));
                return v;
            };
            plot::ChartOptions cov_opts;
            cov_opts.title = "Coverage at target risk, hit@" + std::to_string(k);
            cov_opts.x_label = "target risk";
            cov_opts.y_label = "evaluation coverage";
            const std::string cov_path =
                out_path(config, "sgr_coverage_hit@" + std::to_string(k) + ".svg");
            plot::write_svg(cov_path, plot::line_chart(to_vec(coverage_series), cov_opts));
            outputs.push_back(cov_path);

            plot::ChartOptions risk_opts;
            risk_opts.title = "Empirical vs target risk, hit@" + std::to_string(k);
            risk_opts.x_label = "target risk";
            risk_opts.y_label = "evaluation risk";
            risk_opts.diagonal = true;
            const std::string risk_path =
                out_path(config, "sgr_risk_hit@" + std::to_string(k) + ".svg");
            plot::write_svg(risk_path, plot::line_chart(to_vec(risk_series), risk_opts));
            outputs.push_back(risk_path);
        }
    }

    io::Manifest manifest;
    manifest.command = "sgr";
    manifest.config = base_manifest_config(config);
    manifest.config["delta"] = io::format_double(config.delta);
    std::vector<std::string> targets;
    for (double r : config.target_risks) targets.push_back(io::format_double(r));
    manifest.config["target_risks"] = join(targets, ",");
    manifest.seed = config.seed;
    add_input_digest(manifest, config.table_path.empty() ? config.dataset_path
                                                         : config.table_path);
    if (config.table_path.empty()) add_input_digest(manifest, config.predictions_path);
    manifest.outputs = outputs;
    const std::string manifest_path = out_path(config, "manifest-sgr.json");
    io::write_manifest(manifest_path, manifest);
    outputs.push_back(manifest_path);
    return outputs;
}

std::vector<std::string> run_correlate(const RunConfig& config) {
    ensure_out_dir(config);
    TableResult obtained = obtain_table(config);
    const scoring::ScoreTable table = filter_by_candidates(
        obtained.table, config.min_candidates, config.max_candidates);

    std::vector<std::string> requested = expand_against_table(config.scores, table);
    if (requested.size() < 2)
        throw DomainError("correlate needs at least 2 score columns");

    // Group into retrieval / fingerprint / other families, mirroring the
    // score-level separators of the correlation figures.
    auto family = [](const std::string& name) {
        if (name.rfind("bit_", 0) == 0) return 1;
        if (name == "knn" || name == "mah" || name == "num_candidates") return 2;
        return 0;
    };
    std::stable_sort(requested.begin(), requested.end(),
                     [&](const std::string& a, const std::string& b) {
                         return family(a) < family(b);
                     });
    std::vector<std::size_t> boundaries;
    for (std::size_t i = 1; i < requested.size(); ++i)
        if (family(requested[i]) != family(requested[i - 1])) boundaries.push_back(i);

    std::vector<std::vector<double>> columns;
    columns.reserve(requested.size());
    for (const std::string& name : requested)
        columns.push_back(oriented_column(table, name));
    const std::vector<std::vector<double>> matrix = seleval::spearman_matrix(columns);

    std::vector<std::string> header = {"score"};
    header.insert(header.end(), requested.begin(), requested.end());
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < requested.size(); ++r) {
        std::vector<std::string> row = {requested[r]};
        for (double v : matrix[r]) row.push_back(io::format_double(v));
        rows.push_back(std::move(row));
    }
    std::vector<std::string> outputs;
    const std::string matrix_path = out_path(config, "correlation.csv");
    io::write_csv(matrix_path, header, rows);
    outputs.push_back(matrix_path);

    if (!config.no_plots) {
        const std::string svg_path = out_path(config, "correlation.svg");
        plot::write_svg(svg_path, plot::heatmap(requested, matrix, boundaries,
                                                "Spearman rank correlations"));
        outputs.push_back(svg_path);
    }

    io::Manifest manifest;
    manifest.command = "correlate";
    manifest.config = base_manifest_config(config);
    manifest.seed = config.seed;
    add_input_digest(manifest, config.table_path.empty() ? config.dataset_path
                                                         : config.table_path);
    if (config.table_path.empty()) add_input_digest(manifest, config.predictions_path);
    manifest.outputs = outputs;
    const std::string manifest_path = out_path(config, "manifest-correlate.json");
    io::write_manifest(manifest_path, manifest);
    outputs.push_back(manifest_path);
    return outputs;
}

std::vector<std::string> run_simulate(const RunConfig& config) {
    ensure_out_dir(config);
    config.synth.validate();
    if (config.train_embedding_count > 0 && config.synth.embedding_dim == 0)
        throw DomainError(
            "train embeddings requested but embedding dimension is 0");

    std::vector<std::string> outputs;
    const std::string dataset_path = out_path(config, "dataset.jsonl");
    const std::string predictions_path = out_path(config, "predictions.rgp");

    synth::InstanceGenerator generator(config.synth);
    io::DatasetHeader dh;
    dh.dim = config.synth.dim;
    dh.cap = config.synth.cap;
    io::DatasetWriter dataset(dataset_path, dh);
    io::PredictionHeader ph;
    ph.record_count = static_cast<std::uint32_t>(config.synth.n_instances);
    ph.dim = static_cast<std::uint32_t>(config.synth.dim);
    ph.num_samples = static_cast<std::uint32_t>(config.synth.num_samples);
    ph.flags = config.synth.embedding_dim > 0 ? 1u : 0u;
    ph.embedding_dim = static_cast<std::uint32_t>(config.synth.embedding_dim);
    io::PredictionWriter predictions(predictions_path, ph);
    for (std::size_t i = 0; i < generator.count(); ++i) {
        const synth::SynthInstance item = generator.at(i);
        dataset.write(item.instance);
        predictions.write(item.bundle);
    }
    dataset.close();
    predictions.close();
    outputs.push_back(dataset_path);
    outputs.push_back(predictions_path);

    if (config.train_embedding_count > 0) {
        Rng rng(Rng::derive_seed(config.synth.seed, /*stream=*/2));
        const std::vector<double> rows = synth::random_unit_rows(
            config.train_embedding_count, config.synth.embedding_dim, rng);
        const std::string emb_path = out_path(config, "train_embeddings.rge");
        io::write_embeddings(emb_path, rows, config.train_embedding_count,
                             config.synth.embedding_dim);
        outputs.push_back(emb_path);
    }

    if (config.validate_trials > 0) {
        std::vector<std::vector<std::string>> rows;
        for (double target : config.target_risks) {
            const double rate = synth::mc_validate_sgr(
                config.synth, target, config.delta, config.validate_trials,
                config.threads);
            rows.push_back({io::format_double(target), io::format_double(config.delta),
                            std::to_string(config.validate_trials),
                            io::format_double(rate)});
            std::cout << "validate-sgr: target " << target << " delta " << config.delta
                      << " violation rate " << rate << "\n";
        }
        const std::string report_path = out_path(config, "validate_sgr.csv");
        io::write_csv(report_path, {"target_risk", "delta", "trials", "violation_rate"},
                      rows);
        outputs.push_back(report_path);
    }

    io::Manifest manifest;
    manifest.command = "simulate";
    manifest.config = base_manifest_config(config);
    manifest.config["n_instances"] = std::to_string(config.synth.n_instances);
    manifest.config["dim"] = std::to_string(config.synth.dim);
    manifest.config["m_min"] = std::to_string(config.synth.m_min);
    manifest.config["m_max"] = std::to_string(config.synth.m_max);
    manifest.config["num_samples"] = std::to_string(config.synth.num_samples);
    manifest.config["noise_level"] = io::format_double(config.synth.noise_level);
    manifest.config["difficulty"] =
        config.synth.difficulty == synth::DifficultyModel::PlantedConfidence
            ? "planted"
            : "similar";
    manifest.config["cap"] = std::to_string(config.synth.cap);
    if (config.synth.embedding_dim > 0)
        manifest.config["embedding_dim"] = std::to_string(config.synth.embedding_dim);
    manifest.seed = config.synth.seed;
    manifest.outputs = outputs;
    const std::string manifest_path = out_path(config, "manifest-simulate.json");
    io::write_manifest(manifest_path, manifest);
    outputs.push_back(manifest_path);
    return outputs;
}

void write_failure_manifest(const RunConfig& config, const std::string& command,
                            const std::string& error) {
    try {
        ensure_out_dir(config);
        io::Manifest manifest;
        manifest.command = command;
        manifest.config = base_manifest_config(config);
        manifest.seed = config.seed;
        manifest.status = "failed";
        manifest.error = error;
        io::write_manifest(out_path(config, "manifest-" + command + ".json"), manifest);
    } catch (...) {
        // best effort; the original error is what the caller reports
    }
}

}  // namespace selret::pipeline
