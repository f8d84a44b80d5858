#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "selret/io.hpp"
#include "selret/rng.hpp"
#include "selret/synth.hpp"

using namespace selret;

namespace {

namespace fs = std::filesystem;

std::string temp_file(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

const char* kHeader = R"({"format":"rg-dataset","version":1,"D":8,"cap":4})";

}  // namespace

TEST_CASE("round_to_float survives optimization in bulk loops") {
    // regression: GCC 11 -O3 SLP used to elide bare double->float->double
    // casts inside initializer lists and unrolled loops
    Rng rng(50);
    std::vector<double> values;
    for (int i = 0; i < 64; ++i) values.push_back(round_to_float(rng.uniform(-5.0, 5.0)));
    std::vector<double> pair = {round_to_float(rng.uniform(-1, 1)),
                                round_to_float(rng.uniform(-1, 1))};
    values.insert(values.end(), pair.begin(), pair.end());
    for (double v : values) {
        volatile float f = static_cast<float>(v);
        CHECK(static_cast<double>(f) == v);
    }
}

TEST_CASE("bitset packing is LSB-first") {
    // bits 0 and 9 set: byte 0 = 0x01, byte 1 = 0x02
    Fingerprint fp(16);
    fp.set(0);
    fp.set(9);
    const auto bytes = io::pack_fingerprint(fp);
    REQUIRE(bytes.size() == 2);
    CHECK(bytes[0] == 0x01);
    CHECK(bytes[1] == 0x02);
    CHECK(io::unpack_fingerprint(bytes, 16) == fp);

    // nonzero padding beyond D is rejected
    CHECK_THROWS_AS(io::unpack_fingerprint({0xFF, 0xFF}, 12), ValidationError);
    // wrong byte count is rejected
    CHECK_THROWS_AS(io::unpack_fingerprint({0x01}, 16), ValidationError);
}

TEST_CASE("base64 round trip") {
    Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> bytes(rng.bounded(40));
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.bounded(256));
        CHECK(io::base64_decode(io::base64_encode(bytes)) == bytes);
    }
    CHECK(io::base64_encode({}) == "");
    CHECK_THROWS_AS(io::base64_decode("abc"), ValidationError);    // bad length
    CHECK_THROWS_AS(io::base64_decode("a£=="), ValidationError);   // bad character
    CHECK_THROWS_AS(io::base64_decode("=AAA"), ValidationError);   // misplaced padding
}

TEST_CASE("dataset round trip") {
    synth::SynthConfig config;
    config.n_instances = 12;
    config.dim = 24;
    config.m_min = 1;
    config.m_max = 4;
    config.num_samples = 2;
    config.seed = 5;
    const synth::SynthData data = synth::generate(config);

    const std::string path = temp_file("ds_roundtrip.jsonl");
    io::DatasetHeader header;
    header.dim = config.dim;
    header.cap = config.cap;
    io::write_dataset(path, header, data.instances);

    const auto loaded = io::load_dataset(path);
    REQUIRE(loaded.size() == data.instances.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].id == data.instances[i].id);
        CHECK(loaded[i].true_index == data.instances[i].true_index);
        CHECK(loaded[i].meta == data.instances[i].meta);
        REQUIRE(loaded[i].candidates.size() == data.instances[i].candidates.size());
        for (std::size_t j = 0; j < loaded[i].candidates.size(); ++j)
            CHECK(loaded[i].candidates[j] == data.instances[i].candidates[j]);
    }

    // writing twice produces identical bytes
    const std::string again = temp_file("ds_roundtrip2.jsonl");
    io::write_dataset(again, header, data.instances);
    CHECK(slurp(path) == slurp(again));
}

TEST_CASE("dataset loader diagnostics") {
    const std::string path = temp_file("ds_diag.jsonl");

    // minimal valid file
    write_text(path, std::string(kHeader) + "\n" +
                         R"({"id":"a","true_index":0,"candidates":["AQ=="],"meta":{}})" +
                         "\n");
    const auto ok = io::load_dataset(path);
    REQUIRE(ok.size() == 1);
    CHECK(ok[0].candidates[0].test(0));
    CHECK(ok[0].candidates[0].popcount() == 1);

    auto expect_error = [&](const std::string& body, const std::string& needle) {
        write_text(path, std::string(kHeader) + "\n" + body + "\n");
        try {
            io::load_dataset(path);
            FAIL_CHECK("expected ValidationError for: " << body);
        } catch (const ValidationError& e) {
            INFO("message: ", e.what());
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    // wrong bitset length: names line and candidate index
    expect_error(R"({"id":"a","true_index":0,"candidates":["AQE="]})", "candidate 0");
    expect_error(R"({"id":"a","true_index":0,"candidates":["AQ==","AQE="]})",
                 "candidate 1");
    // true_index == M
    expect_error(R"({"id":"a","true_index":1,"candidates":["AQ=="]})", "true_index");
    // all-zero fingerprint
    expect_error(R"({"id":"a","true_index":0,"candidates":["AA=="]})", "all-zero");
    // malformed JSON names the line
    expect_error(R"({"id":)", ":2");
    // candidate cap (header cap = 4)
    expect_error(
        R"({"id":"a","true_index":0,"candidates":["AQ==","AQ==","AQ==","AQ==","AQ=="]})",
        "cap");

    // cap violations pass with allow_uncapped
    write_text(path,
               std::string(kHeader) + "\n" +
                   R"({"id":"a","true_index":0,"candidates":["AQ==","AQ==","AQ==","AQ==","AQ=="]})" +
                   "\n");
    CHECK(io::load_dataset(path, /*allow_uncapped=*/true).size() == 1);

    // missing header
    write_text(path, R"({"id":"a","true_index":0,"candidates":["AQ=="]})");
    CHECK_THROWS_AS(io::load_dataset(path), ValidationError);
}

TEST_CASE("prediction round trip is bit-exact") {
    std::vector<PredictionBundle> bundles;
    PredictionBundle b;
    b.instance_id = "inst-1";
    b.dim = 4;
    b.num_samples = 1;
    b.samples = {0.25, 0.5, 0.0, 1.0};  // exactly representable in float
    bundles.push_back(b);

    const std::string path = temp_file("pred_roundtrip.rgp");
    io::write_predictions(path, bundles);
    const auto loaded = io::load_predictions(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].instance_id == "inst-1");
    CHECK(loaded[0].samples == bundles[0].samples);

    // float-rounded random payloads round-trip exactly too
    Rng rng(52);
    bundles.clear();
    for (int i = 0; i < 5; ++i) {
        PredictionBundle r;
        r.instance_id = "r" + std::to_string(i);
        r.dim = 6;
        r.num_samples = 3;
        for (int v = 0; v < 18; ++v)
            r.samples.push_back(round_to_float(rng.next_double()));
        r.embedding = {round_to_float(rng.uniform(-1, 1)),
                       round_to_float(rng.uniform(-1, 1))};
        bundles.push_back(std::move(r));
    }
    io::write_predictions(path, bundles);
    const auto loaded2 = io::load_predictions(path);
    REQUIRE(loaded2.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(loaded2[i].samples == bundles[i].samples);
        CHECK(loaded2[i].embedding == bundles[i].embedding);
    }
}

TEST_CASE("prediction loader diagnostics") {
    const std::string path = temp_file("pred_diag.rgp");

    // empty file with zero records
    io::write_predictions(path, {});
    CHECK(io::load_predictions(path).empty());

    // out-of-range probability: rebuild a payload by hand
    {
        PredictionBundle b;
        b.instance_id = "bad";
        b.dim = 2;
        b.num_samples = 1;
        b.samples = {0.5, 0.25};
        io::write_predictions(path, {b});
        // patch the second float (offset: 8 magic + 20 header + 2 len + 3 id + 4)
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(8 + 20 + 2 + 3 + 4);
        const float bad = 1.5f;
        f.write(reinterpret_cast<const char*>(&bad), 4);
    }
    try {
        io::load_predictions(path);
        FAIL_CHECK("expected ValidationError for out-of-range probability");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("bad") != std::string::npos);
    }

    // truncated payload
    {
        PredictionBundle b;
        b.instance_id = "cut";
        b.dim = 8;
        b.num_samples = 2;
        b.samples.assign(16, 0.25);
        io::write_predictions(path, {b});
        fs::resize_file(path, fs::file_size(path) - 7);
    }
    CHECK_THROWS_AS(io::load_predictions(path), ValidationError);

    // bad magic
    write_text(path, "NOTMAGIC........................");
    CHECK_THROWS_AS(io::load_predictions(path), ValidationError);

    // trailing data after the declared records
    {
        PredictionBundle b;
        b.instance_id = "x";
        b.dim = 2;
        b.num_samples = 1;
        b.samples = {0.5, 0.5};
        io::write_predictions(path, {b});
        std::ofstream f(path, std::ios::app | std::ios::binary);
        f << "junk";
    }
    CHECK_THROWS_AS(io::load_predictions(path), ValidationError);
}

TEST_CASE("prediction file index") {
    std::vector<PredictionBundle> bundles;
    for (int i = 0; i < 6; ++i) {
        PredictionBundle b;
        b.instance_id = "id-" + std::to_string(i);
        b.dim = 3;
        b.num_samples = 2;
        for (int v = 0; v < 6; ++v) b.samples.push_back(0.125 * (i + 1));
        bundles.push_back(std::move(b));
    }
    const std::string path = temp_file("pred_index.rgp");
    io::write_predictions(path, bundles);

    io::PredictionFileIndex index(path);
    CHECK(index.contains("id-3"));
    CHECK_FALSE(index.contains("id-9"));
    const auto b3 = index.read("id-3");
    CHECK(b3.samples == bundles[3].samples);
    const auto b0 = index.read("id-0");  // seeks backwards
    CHECK(b0.samples == bundles[0].samples);
    CHECK_THROWS_AS(index.read("id-9"), ValidationError);
}

TEST_CASE("embedding file round trip") {
    Rng rng(53);
    const std::size_t n = 7, d = 3;
    std::vector<double> rows(n * d);
    for (double& v : rows) v = round_to_float(rng.uniform(-1.0, 1.0));
    const std::string path = temp_file("emb.rge");
    io::write_embeddings(path, rows, n, d);
    const auto [loaded, shape] = io::load_embeddings(path);
    CHECK(shape.first == n);
    CHECK(shape.second == d);
    CHECK(loaded == rows);

    write_text(path, "WRONGMAG");
    CHECK_THROWS_AS(io::load_embeddings(path), ValidationError);
}

TEST_CASE("csv formatting round trips doubles exactly") {
    Rng rng(54);
    for (int trial = 0; trial < 200; ++trial) {
        double v;
        switch (trial % 4) {
            case 0: v = rng.uniform(-1e6, 1e6); break;
            case 1: v = rng.next_double() * 1e-7; break;
            case 2: v = -rng.next_double(); break;
            default: v = rng.uniform(0.0, 1.0); break;
        }
        const std::string text = io::format_double(v);
        CHECK(std::stod(text) == v);
    }
    CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("score table CSV round trip") {
    scoring::ScoreTable table;
    table.columns = {"conf", "gap", "num_candidates"};
    table.ids = {"a", "b, with comma"};
    table.values = {{0.12345678901234567, -1.5, 8.0},
                    {std::numeric_limits<double>::quiet_NaN(), 0.0, 3.0}};
    const std::string path = temp_file("table.csv");
    io::write_score_table(path, table);
    const auto loaded = io::read_score_table(path);
    CHECK(loaded.columns == table.columns);
    CHECK(loaded.ids == table.ids);
    CHECK(loaded.values[0] == table.values[0]);
    CHECK(std::isnan(loaded.values[1][0]));
    CHECK(loaded.values[1][1] == 0.0);

    // header-only table
    scoring::ScoreTable empty;
    empty.columns = {"conf"};
    io::write_score_table(path, empty);
    CHECK(slurp(path) == "id,conf\n");
    const auto loaded_empty = io::read_score_table(path);
    CHECK(loaded_empty.ids.empty());
    CHECK(loaded_empty.columns == std::vector<std::string>{"conf"});
}

TEST_CASE("sha256 digest") {
    const std::string path = temp_file("digest.txt");
    write_text(path, "abc");
    CHECK(io::sha256_file(path) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifests are deterministic") {
    io::Manifest manifest;
    manifest.command = "score";
    manifest.config["temperature"] = "0.003";
    manifest.seed = 42;
    manifest.inputs.emplace_back("in.jsonl", "00ff");
    manifest.outputs = {"scores.csv"};

    const std::string a = temp_file("manifest_a.json");
    const std::string b = temp_file("manifest_b.json");
    io::write_manifest(a, manifest);
    io::write_manifest(b, manifest);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a).find("\"status\": \"complete\"") != std::string::npos);
    CHECK(slurp(a).find("sha256") != std::string::npos);
}
