#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "selret/scoring.hpp"
#include "selret/types.hpp"

namespace selret::io {

// ---- dataset files (JSON lines, one instance per line) ----

struct DatasetHeader {
    std::size_t dim = 0;  // fingerprint length D
    std::size_t cap = 0;  // maximum candidate-set size
    int version = 1;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Bitset packing: D bits -> ceil(D/8) bytes, LSB-first within each byte
// (bit d sits in byte d/8 at position d%8); trailing pad bits are zero.
std::vector<std::uint8_t> pack_fingerprint(const Fingerprint& fp);
Fingerprint unpack_fingerprint(const std::vector<std::uint8_t>& bytes, std::size_t dim);

class DatasetWriter {
public:
    DatasetWriter(const std::string& path, const DatasetHeader& header);
    void write(const Instance& instance);
    void close();
    ~DatasetWriter();

private:
    std::string path_;
    DatasetHeader header_;
    std::ofstream out_;
};

class DatasetReader {
public:
    explicit DatasetReader(const std::string& path, bool allow_uncapped = false);
    const DatasetHeader& header() const { return header_; }
    // One validated instance, or nullopt at end of file.
    std::optional<Instance> next();

private:
    std::string path_;
    bool allow_uncapped_;
    DatasetHeader header_;
    std::ifstream in_;
    std::size_t line_number_ = 0;
};

std::vector<Instance> load_dataset(const std::string& path, bool allow_uncapped = false);
void write_dataset(const std::string& path, const DatasetHeader& header,
                   const std::vector<Instance>& instances);

// ---- prediction files (binary container, magic RGPRED01) ----

struct PredictionHeader {
    std::uint32_t record_count = 0;
    std::uint32_t dim = 0;          // D
    std::uint32_t num_samples = 0;  // S
    std::uint32_t flags = 0;        // bit 0: embeddings present
    std::uint32_t embedding_dim = 0;

    bool has_embeddings() const { return (flags & 1u) != 0; }
};

class PredictionWriter {
public:
    PredictionWriter(const std::string& path, const PredictionHeader& header);
    void write(const PredictionBundle& bundle);
    void close();  // verifies the record count
    ~PredictionWriter();

private:
    std::string path_;
    PredictionHeader header_;
    std::ofstream out_;
    std::uint32_t written_ = 0;
};

class PredictionReader {
public:
    explicit PredictionReader(const std::string& path);
    const PredictionHeader& header() const { return header_; }
    std::optional<PredictionBundle> next();

private:
    std::string path_;
    PredictionHeader header_;
    std::ifstream in_;
    std::uint32_t read_ = 0;
};

std::vector<PredictionBundle> load_predictions(const std::string& path);
void write_predictions(const std::string& path, const std::vector<PredictionBundle>& bundles,
                       std::size_t embedding_dim = 0);

// Offset index for random access by instance id (used to pair a streamed
// dataset with its bundles without holding either in memory).
class PredictionFileIndex {
public:
    explicit PredictionFileIndex(const std::string& path);
    const PredictionHeader& header() const { return header_; }
    bool contains(const std::string& id) const { return offsets_.count(id) != 0; }
    PredictionBundle read(const std::string& id);

private:
    std::string path_;
    PredictionHeader header_;
    std::ifstream in_;
    std::unordered_map<std::string, std::streamoff> offsets_;
};

// ---- training-embedding files (binary container, magic RGEMB001) ----

void write_embeddings(const std::string& path, const std::vector<double>& rows,
                      std::size_t n, std::size_t dim);
// Returns row-major data plus (n, dim).
std::pair<std::vector<double>, std::pair<std::size_t, std::size_t>> load_embeddings(
    const std::string& path);

// ---- CSV result tables ----

// Shortest decimal that round-trips the exact double value.
std::string format_double(double value);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_score_table(const std::string& path, const scoring::ScoreTable& table);
scoring::ScoreTable read_score_table(const std::string& path);

// ---- digests and run manifests ----

std::string sha256_file(const std::string& path);

struct Manifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;  // (path, sha256)
    std::vector<std::string> outputs;
    std::string status = "complete";  // or "failed"
    std::string error;
};

void write_manifest(const std::string& path, const Manifest& manifest);

}  // namespace selret::io
