#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "selret/core.hpp"
#include "selret/io.hpp"
#include "selret/riskctl.hpp"
#include "selret/scoring.hpp"
#include "selret/seleval.hpp"
#include "selret/synth.hpp"
#include "selret/types.hpp"
#include "selret/version.hpp"

namespace py = pybind11;
using namespace selret;

namespace {

Fingerprint fingerprint_from_array(py::array_t<std::uint8_t, py::array::c_style> bits) {
    if (bits.ndim() != 1) throw DomainError("fingerprint: expected a 1-D array");
    Fingerprint fp(static_cast<std::size_t>(bits.shape(0)));
    auto view = bits.unchecked<1>();
    for (py::ssize_t d = 0; d < bits.shape(0); ++d)
        if (view(d)) fp.set(static_cast<std::size_t>(d));
    return fp;
}

py::array_t<std::uint8_t> fingerprint_to_array(const Fingerprint& fp) {
    py::array_t<std::uint8_t> out(static_cast<py::ssize_t>(fp.size()));
    auto view = out.mutable_unchecked<1>();
    for (std::size_t d = 0; d < fp.size(); ++d)
        view(static_cast<py::ssize_t>(d)) = fp.test(d) ? 1 : 0;
    return out;
}

std::vector<double> to_vector(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 1) throw DomainError("expected a 1-D array");
    return std::vector<double>(arr.data(), arr.data() + arr.shape(0));
}

PredictionBundle bundle_from_samples(
    const std::string& id,
    py::array_t<double, py::array::c_style | py::array::forcecast> samples,
    py::object embedding) {
    if (samples.ndim() != 2) throw DomainError("samples: expected an S x D array");
    PredictionBundle bundle;
    bundle.instance_id = id;
    bundle.num_samples = static_cast<std::size_t>(samples.shape(0));
    bundle.dim = static_cast<std::size_t>(samples.shape(1));
    bundle.samples.assign(samples.data(),
                          samples.data() + samples.shape(0) * samples.shape(1));
    if (!embedding.is_none())
        bundle.embedding = to_vector(
            embedding.cast<py::array_t<double, py::array::c_style | py::array::forcecast>>());
    return bundle;
}

py::dict curve_to_dict(const seleval::RiskCoverageCurve& curve) {
    py::list coverage, risk;
    for (const auto& p : curve.points) {
        coverage.append(p.coverage);
        risk.append(p.risk);
    }
    py::dict out;
    out["coverage"] = coverage;
    out["risk"] = risk;
    out["aurc"] = curve.aurc;
    out["aurc_oracle"] = curve.aurc_oracle;
    out["aurc_random"] = curve.aurc_random;
    out["rel_aurc"] = curve.rel_aurc;
    out["degenerate"] = curve.degenerate;
    return out;
}

}  // namespace

PYBIND11_MODULE(_selret, m) {
    m.doc() = "Selective prediction toolkit for ranked retrieval (C++ core)";
    m.attr("__version__") = SELRET_VERSION;

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<Fingerprint>(m, "Fingerprint")
        .def(py::init(&fingerprint_from_array), py::arg("bits"))
        .def_property_readonly("size", &Fingerprint::size)
        .def("popcount", &Fingerprint::popcount)
        .def("to_numpy", &fingerprint_to_array);

    py::class_<Instance>(m, "Instance")
        .def(py::init([](const std::string& id, const std::vector<Fingerprint>& candidates,
                         std::size_t true_index) {
                 Instance inst;
                 inst.id = id;
                 inst.candidates = candidates;
                 inst.true_index = true_index;
                 if (inst.candidates.empty())
                     throw DomainError("instance needs at least one candidate");
                 if (inst.true_index >= inst.candidates.size())
                     throw DomainError("true_index out of range");
                 return inst;
             }),
             py::arg("id"), py::arg("candidates"), py::arg("true_index"))
        .def_readonly("id", &Instance::id)
        .def_readonly("true_index", &Instance::true_index)
        .def_property_readonly("num_candidates", &Instance::num_candidates);

    py::class_<PredictionBundle>(m, "PredictionBundle")
        .def(py::init(&bundle_from_samples), py::arg("instance_id"), py::arg("samples"),
             py::arg("embedding") = py::none())
        .def_readonly("instance_id", &PredictionBundle::instance_id)
        .def_property_readonly("num_samples",
                               [](const PredictionBundle& b) { return b.num_samples; })
        .def_property_readonly("dim", [](const PredictionBundle& b) { return b.dim; })
        .def_property_readonly("samples", [](const PredictionBundle& b) {
            py::array_t<double> out({static_cast<py::ssize_t>(b.num_samples),
                                     static_cast<py::ssize_t>(b.dim)});
            std::copy(b.samples.begin(), b.samples.end(), out.mutable_data());
            return out;
        });

    py::class_<CandidateRanking>(m, "CandidateRanking")
        .def_readonly("scores", &CandidateRanking::scores)
        .def_readonly("probs", &CandidateRanking::probs)
        .def_readonly("order", &CandidateRanking::order);

    py::enum_<AggregationStrategy>(m, "AggregationStrategy")
        .value("FINGERPRINT_MEAN", AggregationStrategy::FingerprintMean)
        .value("SCORE_MEAN", AggregationStrategy::ScoreMean)
        .value("PROB_MEAN", AggregationStrategy::ProbMean);

    m.def(
        "cosine_similarity",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> theta,
           const Fingerprint& c) {
            const std::vector<double> t = to_vector(theta);
            return cosine_similarity(t, c);
        },
        py::arg("theta"), py::arg("fingerprint"));
    m.def(
        "candidate_distribution",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> scores,
           double temperature) {
            return candidate_distribution(to_vector(scores), temperature);
        },
        py::arg("scores"), py::arg("temperature"));
    m.def(
        "rank_candidates",
        [](const Instance& instance,
           py::array_t<double, py::array::c_style | py::array::forcecast> theta,
           double temperature) {
            return rank_candidates(instance, to_vector(theta), temperature);
        },
        py::arg("instance"), py::arg("theta"), py::arg("temperature") = 0.003);
    m.def("hit_at_k", &hit_at_k, py::arg("ranking"), py::arg("true_index"), py::arg("k"));
    m.def("aggregate_prediction", &aggregate_prediction, py::arg("bundle"),
          py::arg("instance"), py::arg("strategy") = AggregationStrategy::ScoreMean,
          py::arg("temperature") = 0.003);
    m.def("ranking_loss", &ranking_loss, py::arg("ranking"), py::arg("true_index"));

    py::class_<scoring::Decomposition>(m, "Decomposition")
        .def_readonly("tot", &scoring::Decomposition::tot)
        .def_readonly("al", &scoring::Decomposition::al)
        .def_readonly("ep", &scoring::Decomposition::ep)
        .def_readonly("ep_raw", &scoring::Decomposition::ep_raw);

    m.def("score_confidence", &scoring::score_confidence, py::arg("ranking"));
    m.def("score_gap", &scoring::score_gap, py::arg("ranking"));
    m.def("bitwise_decomposition", &scoring::bitwise_decomposition, py::arg("bundle"));
    m.def("retrieval_decomposition", &scoring::retrieval_decomposition, py::arg("bundle"),
          py::arg("instance"), py::arg("temperature") = 0.003);
    m.def("rank_variance", &scoring::rank_variance, py::arg("bundle"), py::arg("instance"),
          py::arg("k"), py::arg("temperature") = 0.003);

    py::class_<scoring::TrainEmbeddingIndex>(m, "TrainEmbeddingIndex")
        .def(py::init([](py::array_t<double, py::array::c_style | py::array::forcecast> rows,
                         double epsilon) {
                 if (rows.ndim() != 2)
                     throw DomainError("embeddings: expected an N x d array");
                 const std::vector<double> data(
                     rows.data(), rows.data() + rows.shape(0) * rows.shape(1));
                 return scoring::TrainEmbeddingIndex::build(
                     data, static_cast<std::size_t>(rows.shape(0)),
                     static_cast<std::size_t>(rows.shape(1)), epsilon);
             }),
             py::arg("rows"), py::arg("epsilon") = 1e-6)
        .def_property_readonly("size", &scoring::TrainEmbeddingIndex::size)
        .def_property_readonly("dim", &scoring::TrainEmbeddingIndex::dim)
        .def(
            "knn_score",
            [](const scoring::TrainEmbeddingIndex& index,
               py::array_t<double, py::array::c_style | py::array::forcecast> h,
               std::size_t k) { return index.knn_score(to_vector(h), k); },
            py::arg("embedding"), py::arg("k"))
        .def(
            "mahalanobis_score",
            [](const scoring::TrainEmbeddingIndex& index,
               py::array_t<double, py::array::c_style | py::array::forcecast> h) {
                return index.mahalanobis_score(to_vector(h));
            },
            py::arg("embedding"));

    m.def(
        "instance_loss",
        [](const Instance& instance, const PredictionBundle& bundle,
           const std::string& loss, double temperature, AggregationStrategy strategy) {
            return seleval::instance_loss(instance, bundle, seleval::LossSpec::parse(loss),
                                          temperature, strategy);
        },
        py::arg("instance"), py::arg("bundle"), py::arg("loss") = "hit@1",
        py::arg("temperature") = 0.003,
        py::arg("strategy") = AggregationStrategy::ScoreMean);
    m.def(
        "risk_coverage_curve",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> losses,
           py::array_t<double, py::array::c_style | py::array::forcecast> kappa) {
            return curve_to_dict(seleval::risk_coverage_curve(to_vector(losses),
                                                              to_vector(kappa)));
        },
        py::arg("losses"), py::arg("kappa"));
    m.def(
        "coverage_at_threshold",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> kappa,
           double tau) { return seleval::coverage_at_threshold(to_vector(kappa), tau); },
        py::arg("kappa"), py::arg("tau"));
    m.def(
        "spearman",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
           py::array_t<double, py::array::c_style | py::array::forcecast> y) {
            return seleval::spearman(to_vector(x), to_vector(y));
        },
        py::arg("x"), py::arg("y"));

    m.def("clopper_pearson_upper", &riskctl::clopper_pearson_upper, py::arg("errors"),
          py::arg("n"), py::arg("delta_prime"));

    py::class_<riskctl::SgrResult>(m, "SgrResult")
        .def_readonly("tau_star", &riskctl::SgrResult::tau_star)
        .def_readonly("bound_b_star", &riskctl::SgrResult::bound_b_star)
        .def_readonly("target_risk", &riskctl::SgrResult::target_risk)
        .def_readonly("delta", &riskctl::SgrResult::delta)
        .def_readonly("coverage_cal", &riskctl::SgrResult::coverage_cal)
        .def_readonly("empirical_risk_cal", &riskctl::SgrResult::empirical_risk_cal)
        .def_readonly("iterations", &riskctl::SgrResult::iterations)
        .def_readonly("feasible", &riskctl::SgrResult::feasible);

    m.def(
        "sgr_select",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> kappa,
           py::array_t<double, py::array::c_style | py::array::forcecast> losses,
           double target_risk, double delta) {
            return riskctl::sgr_select(to_vector(kappa), to_vector(losses), target_risk,
                                       delta);
        },
        py::arg("kappa"), py::arg("losses"), py::arg("target_risk"), py::arg("delta"));
    m.def(
        "calibration_split",
        [](std::size_t n, std::uint64_t seed) { return riskctl::calibration_split(n, seed); },
        py::arg("n"), py::arg("seed"));

    py::enum_<synth::DifficultyModel>(m, "DifficultyModel")
        .value("PLANTED_CONFIDENCE", synth::DifficultyModel::PlantedConfidence)
        .value("SIMILAR_CANDIDATES", synth::DifficultyModel::SimilarCandidates);

    py::class_<synth::SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("n_instances", &synth::SynthConfig::n_instances)
        .def_readwrite("dim", &synth::SynthConfig::dim)
        .def_readwrite("m_min", &synth::SynthConfig::m_min)
        .def_readwrite("m_max", &synth::SynthConfig::m_max)
        .def_readwrite("num_samples", &synth::SynthConfig::num_samples)
        .def_readwrite("noise_level", &synth::SynthConfig::noise_level)
        .def_readwrite("seed", &synth::SynthConfig::seed)
        .def_readwrite("difficulty", &synth::SynthConfig::difficulty)
        .def_readwrite("cap", &synth::SynthConfig::cap)
        .def_readwrite("embedding_dim", &synth::SynthConfig::embedding_dim);

    m.def(
        "generate",
        [](const synth::SynthConfig& config) {
            synth::SynthData data = synth::generate(config);
            py::dict out;
            out["instances"] = data.instances;
            out["bundles"] = data.bundles;
            out["error_probs"] = data.error_probs;
            out["ideal_kappas"] = data.ideal_kappas;
            return out;
        },
        py::arg("config"));
    m.def("mc_validate_sgr", &synth::mc_validate_sgr, py::arg("config"),
          py::arg("target_risk"), py::arg("delta"), py::arg("trials"),
          py::arg("threads") = 0);

    m.def("load_dataset", &io::load_dataset, py::arg("path"),
          py::arg("allow_uncapped") = false);
    m.def("load_predictions", &io::load_predictions, py::arg("path"));
    m.def(
        "write_dataset",
        [](const std::string& path, std::size_t dim, std::size_t cap,
           const std::vector<Instance>& instances) {
            io::DatasetHeader header;
            header.dim = dim;
            header.cap = cap;
            io::write_dataset(path, header, instances);
        },
        py::arg("path"), py::arg("dim"), py::arg("cap"), py::arg("instances"));
    m.def("write_predictions", &io::write_predictions, py::arg("path"), py::arg("bundles"),
          py::arg("embedding_dim") = 0);
    m.def("sha256_file", &io::sha256_file, py::arg("path"));
}
