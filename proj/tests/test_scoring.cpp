#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "selret/core.hpp"
#include "selret/rng.hpp"
#include "selret/scoring.hpp"
#include "selret/seleval.hpp"
#include "selret/synth.hpp"

using namespace selret;
using scoring::Decomposition;

namespace {

Fingerprint fp_of(std::initializer_list<int> bits) {
    std::vector<bool> v;
    for (int b : bits) v.push_back(b != 0);
    return Fingerprint::from_bools(v);
}

PredictionBundle bundle_of(std::size_t dim, std::vector<std::vector<double>> samples) {
    PredictionBundle b;
    b.instance_id = "t";
    b.dim = dim;
    b.num_samples = samples.size();
    for (const auto& row : samples)
        b.samples.insert(b.samples.end(), row.begin(), row.end());
    return b;
}

Instance two_candidates() {
    Instance inst;
    inst.id = "t";
    inst.candidates = {fp_of({1, 0}), fp_of({0, 1})};
    inst.true_index = 0;
    return inst;
}

}  // namespace

TEST_CASE("confidence and gap") {
    CandidateRanking uniform;
    uniform.scores = {0.5, 0.5, 0.5, 0.5, 0.5};
    uniform.probs = {0.2, 0.2, 0.2, 0.2, 0.2};
    uniform.order = {0, 1, 2, 3, 4};
    CHECK(scoring::score_confidence(uniform) == doctest::Approx(0.2));

    const auto logistic = candidate_distribution(std::vector<double>{1.0, 0.0}, 1.0);
    CandidateRanking lr;
    lr.scores = {1.0, 0.0};
    lr.probs = logistic;
    lr.order = {0, 1};
    CHECK(scoring::score_confidence(lr) == doctest::Approx(0.73105857863).epsilon(1e-9));

    CandidateRanking single;
    single.scores = {0.8};
    single.probs = {1.0};
    single.order = {0};
    CHECK(scoring::score_confidence(single) == doctest::Approx(1.0));
    CHECK(scoring::score_gap(single) == doctest::Approx(0.8));

    CandidateRanking spread;
    spread.scores = {0.9, 0.7, 0.3};
    spread.probs = {0.6, 0.3, 0.1};
    spread.order = {0, 1, 2};
    CHECK(scoring::score_gap(spread) == doctest::Approx(0.2).epsilon(1e-12));

    CandidateRanking tied;
    tied.scores = {0.4, 0.4, 0.1};
    tied.probs = {0.45, 0.45, 0.1};
    tied.order = {0, 1, 2};
    CHECK(scoring::score_gap(tied) == doctest::Approx(0.0));
}

TEST_CASE("bitwise decomposition analytic cases") {
    // degenerate posterior: all samples identical
    const auto same = scoring::bitwise_decomposition(
        bundle_of(3, {{0.2, 0.7, 0.5}, {0.2, 0.7, 0.5}}));
    CHECK(same.ep == 0.0);
    CHECK(same.tot == same.al);

    // D=1, S=2, theta in {0, 1}
    const auto split = scoring::bitwise_decomposition(bundle_of(1, {{0.0}, {1.0}}));
    CHECK(split.tot == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(split.al == doctest::Approx(0.0));
    CHECK(split.ep == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

    // D=1, S=1, theta = 0.5
    const auto one = scoring::bitwise_decomposition(bundle_of(1, {{0.5}}));
    CHECK(one.tot == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(one.al == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(one.ep == 0.0);
}

TEST_CASE("retrieval decomposition analytic cases") {
    const Instance inst = two_candidates();

    // identical samples: zero epistemic
    const auto same = scoring::retrieval_decomposition(
        bundle_of(2, {{0.9, 0.1}, {0.9, 0.1}}), inst, 0.05);
    CHECK(same.ep == 0.0);
    CHECK(same.tot == same.al);

    // antisymmetric samples at a temperature small enough that each
    // per-sample distribution is exactly one-hot
    const auto flip = scoring::retrieval_decomposition(
        bundle_of(2, {{0.99, 0.01}, {0.01, 0.99}}), inst, 1e-4);
    CHECK(flip.tot == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(flip.al == doctest::Approx(0.0));
    CHECK(flip.ep == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

    // M = 1: all zero
    Instance single;
    single.id = "s";
    single.candidates = {fp_of({1, 0})};
    single.true_index = 0;
    const auto degenerate = scoring::retrieval_decomposition(
        bundle_of(2, {{0.9, 0.1}, {0.5, 0.5}}), single, 0.05);
    CHECK(degenerate.tot == 0.0);
    CHECK(degenerate.al == 0.0);
    CHECK(degenerate.ep == 0.0);
}

TEST_CASE("decomposition identities on random bundles") {
    Rng rng(21);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t dim = 5 + rng.bounded(9);
        const std::size_t s = 1 + rng.bounded(8);
        const std::size_t m = 1 + rng.bounded(10);
        const PredictionBundle bundle = oracles::random_bundle(dim, s, rng);
        const Instance inst = oracles::random_instance(dim, m, rng);

        const auto bit = scoring::bitwise_decomposition(bundle);
        CHECK(bit.tot == bit.al + bit.ep);  // exact
        CHECK(bit.ep_raw <= 1e-9);          // -ep_raw is the epistemic uncertainty
        CHECK(bit.ep <= 0.0);

        const auto bit_oracle = oracles::bitwise_oracle(bundle);
        CHECK(std::abs(bit.tot - bit_oracle.tot) < 1e-9);
        CHECK(std::abs(bit.al - bit_oracle.al) < 1e-9);

        const auto ret = scoring::retrieval_decomposition(bundle, inst, 0.05);
        CHECK(ret.tot == ret.al + ret.ep);  // exact
        CHECK(ret.ep_raw <= 1e-9);
        CHECK(-ret.ep <= std::log(static_cast<double>(s)) + 1e-9);

        const auto ret_oracle = synth::oracle_decomposition(bundle, inst, 0.05);
        CHECK(std::abs(ret.tot - ret_oracle.tot) < 1e-9);
        CHECK(std::abs(ret.al - ret_oracle.al) < 1e-9);
        CHECK(std::abs(ret.ep - ret_oracle.ep) < 1e-9);
    }
}

TEST_CASE("rank variance") {
    const Instance inst = two_candidates();

    // identical samples: no movement
    CHECK(scoring::rank_variance(bundle_of(2, {{0.8, 0.2}, {0.8, 0.2}}), inst, 1, 0.05) ==
          0.0);

    // single sample: zero variance by definition
    CHECK(scoring::rank_variance(bundle_of(2, {{0.8, 0.2}}), inst, 1, 0.05) == 0.0);

    // top candidate swaps rank between the two samples: variance of {0,1}
    const double swap =
        scoring::rank_variance(bundle_of(2, {{0.9, 0.1}, {0.1, 0.9}}), inst, 1, 0.05);
    CHECK(swap == doctest::Approx(-0.25).epsilon(1e-12));

    // K beyond M averages over the min(K, M) members
    const double wide =
        scoring::rank_variance(bundle_of(2, {{0.9, 0.1}, {0.1, 0.9}}), inst, 20, 0.05);
    CHECK(wide == doctest::Approx(-0.25).epsilon(1e-12));

    // zero whenever all samples agree on the ordering
    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const Instance random_inst = oracles::random_instance(10, 2 + rng.bounded(6), rng);
        std::vector<double> theta(10);
        for (double& t : theta) t = 0.05 + 0.9 * rng.next_double();
        std::vector<std::vector<double>> rows;
        for (int s = 0; s < 4; ++s) rows.push_back(theta);
        CHECK(scoring::rank_variance(bundle_of(10, rows), random_inst, 3, 0.05) == 0.0);
    }
}

TEST_CASE("train embedding index: knn") {
    // unit vectors in the plane
    const std::vector<double> rows = {1.0, 0.0, 0.0, 1.0, -1.0, 0.0};
    const auto index = scoring::TrainEmbeddingIndex::build(rows, 3, 2);

    CHECK(index.knn_score(std::vector<double>{1.0, 0.0}, 1) == doctest::Approx(0.0));
    const double sqrt2 = std::sqrt(2.0);
    CHECK(index.knn_score(std::vector<double>{1.0, 0.0}, 2) ==
          doctest::Approx(-sqrt2 / 2.0).epsilon(1e-12));
    CHECK(index.knn_score(std::vector<double>{1.0, 0.0}, 3) ==
          doctest::Approx(-(0.0 + sqrt2 + 2.0) / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(index.knn_score(std::vector<double>{1.0, 0.0}, 4), DomainError);
    CHECK_THROWS_AS(index.knn_score(std::vector<double>{1.0, 0.0}, 0), DomainError);

    // random sets against the brute-force oracle
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 3 + rng.bounded(40);
        const std::size_t d = 2 + rng.bounded(6);
        std::vector<std::vector<double>> unit_rows(n, std::vector<double>(d));
        std::vector<double> flat;
        for (auto& r : unit_rows) {
            double sq = 0.0;
            for (double& v : r) {
                v = rng.uniform(-1.0, 1.0);
                sq += v * v;
            }
            for (double& v : r) v /= std::sqrt(sq);
            flat.insert(flat.end(), r.begin(), r.end());
        }
        const auto idx = scoring::TrainEmbeddingIndex::build(flat, n, d);
        std::vector<double> query(d);
        double qsq = 0.0;
        for (double& v : query) {
            v = rng.uniform(-1.0, 1.0);
            qsq += v * v;
        }
        for (double& v : query) v /= std::sqrt(qsq);
        const std::size_t k = 1 + rng.bounded(n);
        CHECK(idx.knn_score(query, k) ==
              doctest::Approx(oracles::knn_oracle(unit_rows, query, k)).epsilon(1e-10));
    }
}

TEST_CASE("train embedding index: mahalanobis") {
    Rng rng(24);

    // score at the mean is exactly zero
    std::vector<double> flat;
    const std::size_t n = 20, d = 3;
    for (std::size_t i = 0; i < n * d; ++i) flat.push_back(rng.uniform(-1.0, 1.0));
    const auto index = scoring::TrainEmbeddingIndex::build(flat, n, d);
    std::vector<double> mu(index.mean().data(), index.mean().data() + d);
    CHECK(index.mahalanobis_score(mu) == doctest::Approx(0.0).epsilon(1e-12));

    // anisotropic 2-D set against the dense-solve oracle
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t rows_n = 6 + rng.bounded(30);
        std::vector<std::vector<double>> rows(rows_n, std::vector<double>(2));
        std::vector<double> rows_flat;
        for (auto& r : rows) {
            r[0] = rng.uniform(-2.0, 2.0);
            r[1] = 0.2 * rng.uniform(-2.0, 2.0) + 0.4 * r[0];
            if (r[0] == 0.0 && r[1] == 0.0) r[0] = 0.5;
            rows_flat.insert(rows_flat.end(), r.begin(), r.end());
        }
        const auto idx = scoring::TrainEmbeddingIndex::build(rows_flat, rows_n, 2);
        const std::vector<double> query = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        CHECK(idx.mahalanobis_score(query) ==
              doctest::Approx(oracles::mahalanobis_oracle(rows, query, 1e-6))
                  .epsilon(1e-8));
    }
}

TEST_CASE("distance scores are rotation invariant") {
    Rng rng(25);
    const std::size_t d = 8, n = 60;
    std::vector<double> flat(n * d);
    for (double& v : flat) v = rng.uniform(-1.0, 1.0);
    std::vector<double> query(d);
    for (double& v : query) v = rng.uniform(-1.0, 1.0);
    double qsq = 0.0;
    for (double v : query) qsq += v * v;
    for (double& v : query) v /= std::sqrt(qsq);

    const auto base = scoring::TrainEmbeddingIndex::build(flat, n, d);
    const double knn_ref = base.knn_score(query, 10);
    const double mah_ref = base.mahalanobis_score(query);

    for (int trial = 0; trial < 25; ++trial) {
        Eigen::MatrixXd gauss(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                gauss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    rng.uniform(-1.0, 1.0);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
        Eigen::MatrixXd rotation = qr.householderQ();
        if (rotation.determinant() < 0) rotation.col(0) = -rotation.col(0);

        std::vector<double> rotated(n * d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::Map<const Eigen::VectorXd> row(flat.data() + i * d, d);
            Eigen::Map<Eigen::VectorXd> dst(rotated.data() + i * d, d);
            dst = rotation * row;
        }
        Eigen::Map<const Eigen::VectorXd> q(query.data(), d);
        const Eigen::VectorXd rq = rotation * q;
        const std::vector<double> rotated_query(rq.data(), rq.data() + d);

        const auto rotated_index = scoring::TrainEmbeddingIndex::build(rotated, n, d);
        CHECK(rotated_index.knn_score(rotated_query, 10) ==
              doctest::Approx(knn_ref).epsilon(1e-8));
        CHECK(rotated_index.mahalanobis_score(rotated_query) ==
              doctest::Approx(mah_ref).epsilon(1e-8));
    }
}

TEST_CASE("score table composition") {
    Rng rng(26);
    synth::SynthConfig config;
    config.n_instances = 3;
    config.dim = 16;
    config.m_min = 2;
    config.m_max = 6;
    config.num_samples = 3;
    config.noise_level = 0.5;
    config.seed = 99;
    config.embedding_dim = 4;
    const synth::SynthData data = synth::generate(config);

    Rng emb_rng(27);
    const std::vector<double> train = synth::random_unit_rows(25, 4, emb_rng);
    const auto index = scoring::TrainEmbeddingIndex::build(train, 25, 4);

    scoring::ScoringConfig sc;
    sc.scores = scoring::resolve_score_names({"all"}, true);
    sc.k_values = {1, 3};
    sc.temperature = 0.05;
    sc.knn_k = 10;
    sc.train_index = &index;

    const auto result = scoring::compute_score_table(data.instances, data.bundles, sc);
    REQUIRE(result.exclusions.empty());
    REQUIRE(result.table.ids.size() == 3);

    // column-wise agreement with the standalone operations
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& inst = data.instances[i];
        const auto& bundle = data.bundles[i];
        const auto ranking =
            aggregate_prediction(bundle, inst, sc.aggregation, sc.temperature);
        const auto row = result.table.values[i];
        auto col = [&](const std::string& name) {
            return row[*result.table.column_index(name)];
        };
        CHECK(col("conf") == scoring::score_confidence(ranking));
        CHECK(col("gap") == scoring::score_gap(ranking));
        const auto bit = scoring::bitwise_decomposition(bundle);
        CHECK(col("bit_tot") == bit.tot);
        CHECK(col("bit_al") == bit.al);
        CHECK(col("bit_ep") == bit.ep);
        const auto ret = scoring::retrieval_decomposition(bundle, inst, sc.temperature);
        CHECK(col("ret_tot") == ret.tot);
        CHECK(col("ret_al") == ret.al);
        CHECK(col("ret_ep") == ret.ep);
        CHECK(col("rank_var@1") ==
              scoring::rank_variance(bundle, inst, 1, sc.temperature));
        CHECK(col("rank_var@3") ==
              scoring::rank_variance(bundle, inst, 3, sc.temperature));
        std::vector<double> unit = bundle.embedding;
        double sq = 0.0;
        for (double v : unit) sq += v * v;
        for (double& v : unit) v /= std::sqrt(sq);
        CHECK(col("knn") == index.knn_score(unit, 10));
        CHECK(col("mah") == index.mahalanobis_score(unit));
        CHECK(col("num_candidates") == static_cast<double>(inst.num_candidates()));
    }

    // one instance, conf only
    scoring::ScoringConfig conf_only;
    conf_only.scores = {"conf"};
    conf_only.temperature = 0.05;
    const auto small = scoring::compute_score_table({data.instances[0]},
                                                    {data.bundles[0]}, conf_only);
    CHECK(small.table.ids.size() == 1);
    CHECK(small.table.columns ==
          std::vector<std::string>{"conf", "num_candidates"});

    // missing bundle becomes an exclusion
    const auto partial = scoring::compute_score_table(
        {data.instances[0], data.instances[1]}, {data.bundles[0]}, conf_only);
    CHECK(partial.table.ids.size() == 1);
    REQUIRE(partial.exclusions.size() == 1);
    CHECK(partial.exclusions[0].first == data.instances[1].id);

    // distance scores demand embeddings
    scoring::ScoringConfig wants_knn;
    wants_knn.scores = {"knn"};
    wants_knn.train_index = &index;
    wants_knn.knn_k = 5;
    std::vector<PredictionBundle> stripped = {data.bundles[0]};
    stripped[0].embedding.clear();
    try {
        scoring::compute_score_table({data.instances[0]}, stripped, wants_knn);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(data.instances[0].id) != std::string::npos);
    }
}

TEST_CASE("score orientation on planted data") {
    synth::SynthConfig config;
    config.n_instances = 600;
    config.dim = 32;
    config.m_min = 4;
    config.m_max = 12;
    config.num_samples = 4;
    config.noise_level = 0.8;
    config.seed = 4242;
    const synth::SynthData data = synth::generate(config);

    scoring::ScoringConfig sc;
    sc.scores = {"conf", "gap", "ret_tot", "ret_al"};
    sc.temperature = 0.05;
    const auto result = scoring::compute_score_table(data.instances, data.bundles, sc);

    std::vector<double> correct(data.instances.size());
    for (std::size_t i = 0; i < data.instances.size(); ++i) {
        const auto ranking = aggregate_prediction(data.bundles[i], data.instances[i],
                                                  sc.aggregation, sc.temperature);
        correct[i] = hit_at_k(ranking, data.instances[i].true_index, 1);
    }
    for (const std::string name : {"conf", "gap", "ret_tot", "ret_al"}) {
        const double rho = seleval::spearman(result.table.column(name), correct);
        INFO("score ", name, " rho ", rho);
        CHECK(rho >= 0.0);
    }

    // confidence stays inside (0, 1] and only reaches 1 when a single
    // candidate carries all probability mass
    for (std::size_t i = 0; i < data.instances.size(); ++i) {
        const auto ranking = aggregate_prediction(data.bundles[i], data.instances[i],
                                                  sc.aggregation, sc.temperature);
        const double conf = scoring::score_confidence(ranking);
        CHECK(conf > 0.0);
        CHECK(conf <= 1.0);
        if (conf == 1.0) {
            double rest = 0.0;
            for (std::size_t j = 0; j < ranking.probs.size(); ++j)
                if (j != ranking.order[0]) rest += ranking.probs[j];
            CHECK(rest == 0.0);
        }
    }
}
