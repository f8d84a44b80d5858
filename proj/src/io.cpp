#include "selret/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "selret/version.hpp"

namespace selret::io {

using nlohmann::json;

namespace {

constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

void write_u16(std::ofstream& out, std::uint16_t v) {
    const std::uint8_t bytes[2] = {static_cast<std::uint8_t>(v & 0xFF),
                                   static_cast<std::uint8_t>(v >> 8)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    std::uint8_t bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

bool read_exact(std::ifstream& in, void* dst, std::size_t size) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(size));
    return static_cast<std::size_t>(in.gcount()) == size;
}

std::uint16_t load_u16(const std::uint8_t* b) {
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t load_u32(const std::uint8_t* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void store_f32(std::uint8_t* dst, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int i = 0; i < 4; ++i) dst[i] = static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF);
}

float load_f32(const std::uint8_t* src) {
    const std::uint32_t bits = load_u32(src);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

constexpr char kPredictionMagic[8] = {'R', 'G', 'P', 'R', 'E', 'D', '0', '1'};
constexpr char kEmbeddingMagic[8] = {'R', 'G', 'E', 'M', 'B', '0', '0', '1'};

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kBase64Alphabet[(v >> 18) & 63]);
        out.push_back(kBase64Alphabet[(v >> 12) & 63]);
        out.push_back(kBase64Alphabet[(v >> 6) & 63]);
        out.push_back(kBase64Alphabet[v & 63]);
        i += 3;
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t v = bytes[i] << 16;
        out.push_back(kBase64Alphabet[(v >> 18) & 63]);
        out.push_back(kBase64Alphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rest == 2) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kBase64Alphabet[(v >> 18) & 63]);
        out.push_back(kBase64Alphabet[(v >> 12) & 63]);
        out.push_back(kBase64Alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    static const auto value_of = []() {
        std::array<std::int8_t, 256> table;
        table.fill(-1);
        for (int i = 0; i < 64; ++i)
            table[static_cast<unsigned char>(kBase64Alphabet[i])] = static_cast<std::int8_t>(i);
        return table;
    }();
    if (text.size() % 4 != 0)
        throw ValidationError("base64: length not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = text[i + j];
            if (c == '=') {
                if (i + 4 != text.size() || j < 2)
                    throw ValidationError("base64: misplaced padding");
                vals[j] = 0;
                ++pad;
            } else {
                if (pad > 0) throw ValidationError("base64: data after padding");
                const std::int8_t v = value_of[static_cast<unsigned char>(c)];
                if (v < 0) throw ValidationError("base64: invalid character");
                vals[j] = v;
            }
        }
        const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    return out;
}

std::vector<std::uint8_t> pack_fingerprint(const Fingerprint& fp) {
    std::vector<std::uint8_t> bytes((fp.size() + 7) / 8, 0);
    const auto& words = fp.words();
    for (std::size_t w = 0; w < words.size(); ++w) {
        const std::uint64_t word = words[w];
        const std::size_t base = w * 8;
        for (std::size_t b = 0; b < 8 && base + b < bytes.size(); ++b)
            bytes[base + b] = static_cast<std::uint8_t>((word >> (8 * b)) & 0xFF);
    }
    return bytes;
}

Fingerprint unpack_fingerprint(const std::vector<std::uint8_t>& bytes, std::size_t dim) {
    if (bytes.size() != (dim + 7) / 8)
        throw ValidationError("bitset decodes to " + std::to_string(bytes.size() * 8) +
                              " bits, expected exactly " + std::to_string(dim));
    Fingerprint fp(dim);
    auto& words = fp.words();
    for (std::size_t i = 0; i < bytes.size(); ++i)
        words[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (i % 8));
    // Pad bits beyond D must be zero so packed forms are canonical.
    const std::size_t tail = dim & 63;
    if (tail != 0 && (words.back() & ~((1ULL << tail) - 1)) != 0)
        throw ValidationError("bitset has nonzero padding bits beyond D");
    return fp;
}

DatasetWriter::DatasetWriter(const std::string& path, const DatasetHeader& header)
    : path_(path), header_(header), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open dataset file for writing: " + path);
    json h;
    h["format"] = "rg-dataset";
    h["version"] = header.version;
    h["D"] = header.dim;
    h["cap"] = header.cap;
    out_ << h.dump() << '\n';
}

void DatasetWriter::write(const Instance& instance) {
    if (instance.candidates.empty())
        throw DomainError("dataset write: instance '" + instance.id + "' has no candidates");
    if (instance.true_index >= instance.candidates.size())
        throw DomainError("dataset write: true_index out of range for '" + instance.id + "'");
    json obj;
    obj["id"] = instance.id;
    obj["true_index"] = instance.true_index;
    json cands = json::array();
    for (const Fingerprint& fp : instance.candidates) {
        if (fp.size() != header_.dim)
            throw DomainError("dataset write: fingerprint length mismatch in '" +
                              instance.id + "'");
        cands.push_back(base64_encode(pack_fingerprint(fp)));
    }
    obj["candidates"] = std::move(cands);
    json meta = json::object();
    for (const auto& [k, v] : instance.meta) meta[k] = v;
    obj["meta"] = std::move(meta);
    out_ << obj.dump() << '\n';
    if (!out_) throw IoError("write failure on dataset file: " + path_);
}

void DatasetWriter::close() {
    if (out_.is_open()) {
        out_.flush();
        if (!out_) throw IoError("write failure on dataset file: " + path_);
        out_.close();
    }
}

DatasetWriter::~DatasetWriter() {
    try {
        close();
    } catch (...) {
    }
}

DatasetReader::DatasetReader(const std::string& path, bool allow_uncapped)
    : path_(path), allow_uncapped_(allow_uncapped), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in_, line))
        throw ValidationError(path + ": missing header line");
    ++line_number_;
    json h;
    try {
        h = json::parse(line);
    } catch (const json::exception& e) {
        throw ValidationError(path + ":1: malformed JSON header: " + e.what());
    }
    if (!h.contains("format") || h["format"] != "rg-dataset")
        throw ValidationError(path + ":1: not an rg-dataset file");
    if (!h.contains("version") || !h["version"].is_number_integer() ||
        h["version"].get<int>() != 1)
        throw ValidationError(path + ":1: unsupported version");
    if (!h.contains("D") || !h["D"].is_number_unsigned() || h["D"].get<std::size_t>() == 0)
        throw ValidationError(path + ":1: missing or invalid D");
    if (!h.contains("cap") || !h["cap"].is_number_unsigned() ||
        h["cap"].get<std::size_t>() == 0)
        throw ValidationError(path + ":1: missing or invalid cap");
    header_.version = 1;
    header_.dim = h["D"].get<std::size_t>();
    header_.cap = h["cap"].get<std::size_t>();
}

std::optional<Instance> DatasetReader::next() {
    std::string line;
    for (;;) {
        if (!std::getline(in_, line)) return std::nullopt;
        ++line_number_;
        if (!line.empty()) break;
    }
    const std::string where = path_ + ":" + std::to_string(line_number_);
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::exception& e) {
        throw ValidationError(where + ": malformed JSON: " + std::string(e.what()));
    }
    if (!obj.contains("id") || !obj["id"].is_string())
        throw ValidationError(where + ": missing string field 'id'");
    Instance instance;
    instance.id = obj["id"].get<std::string>();
    if (!obj.contains("candidates") || !obj["candidates"].is_array() ||
        obj["candidates"].empty())
        throw ValidationError(where + ": 'candidates' must be a non-empty array");
    const auto& cands = obj["candidates"];
    if (!allow_uncapped_ && cands.size() > header_.cap)
        throw ValidationError(where + ": candidate set of size " +
                              std::to_string(cands.size()) + " exceeds cap " +
                              std::to_string(header_.cap) +
                              " (pass --allow-uncapped to accept)");
    instance.candidates.reserve(cands.size());
    for (std::size_t j = 0; j < cands.size(); ++j) {
        if (!cands[j].is_string())
            throw ValidationError(where + ": candidate " + std::to_string(j) +
                                  " is not a base64 string");
        Fingerprint fp;
        try {
            fp = unpack_fingerprint(base64_decode(cands[j].get<std::string>()),
                                    header_.dim);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": candidate " + std::to_string(j) + ": " +
                                  e.what());
        }
        if (!fp.any())
            throw ValidationError(where + ": candidate " + std::to_string(j) +
                                  " is the all-zero fingerprint");
        instance.candidates.push_back(std::move(fp));
    }
    if (!obj.contains("true_index") || !obj["true_index"].is_number_unsigned())
        throw ValidationError(where + ": missing unsigned field 'true_index'");
    instance.true_index = obj["true_index"].get<std::size_t>();
    if (instance.true_index >= instance.candidates.size())
        throw ValidationError(where + ": true_index " +
                              std::to_string(instance.true_index) +
                              " out of range for " +
                              std::to_string(instance.candidates.size()) + " candidates");
    if (obj.contains("meta")) {
        if (!obj["meta"].is_object())
            throw ValidationError(where + ": 'meta' must be an object");
        for (const auto& [k, v] : obj["meta"].items())
            instance.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return instance;
}

std::vector<Instance> load_dataset(const std::string& path, bool allow_uncapped) {
    DatasetReader reader(path, allow_uncapped);
    std::vector<Instance> instances;
    while (auto instance = reader.next()) instances.push_back(std::move(*instance));
    return instances;
}

void write_dataset(const std::string& path, const DatasetHeader& header,
                   const std::vector<Instance>& instances) {
    DatasetWriter writer(path, header);
    for (const Instance& instance : instances) writer.write(instance);
    writer.close();
}

PredictionWriter::PredictionWriter(const std::string& path, const PredictionHeader& header)
    : path_(path), header_(header), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open prediction file for writing: " + path);
    out_.write(kPredictionMagic, 8);
    write_u32(out_, header.record_count);
    write_u32(out_, header.dim);
    write_u32(out_, header.num_samples);
    write_u32(out_, header.flags);
    write_u32(out_, header.embedding_dim);
}

void PredictionWriter::write(const PredictionBundle& bundle) {
    if (bundle.dim != header_.dim || bundle.num_samples != header_.num_samples)
        throw DomainError("prediction write: bundle shape mismatch for '" +
                          bundle.instance_id + "'");
    if (header_.has_embeddings() != bundle.has_embedding() ||
        (bundle.has_embedding() && bundle.embedding.size() != header_.embedding_dim))
        throw DomainError("prediction write: embedding presence/size mismatch for '" +
                          bundle.instance_id + "'");
    if (bundle.instance_id.size() > 0xFFFF)
        throw DomainError("prediction write: id longer than 65535 bytes");
    write_u16(out_, static_cast<std::uint16_t>(bundle.instance_id.size()));
    out_.write(bundle.instance_id.data(),
               static_cast<std::streamsize>(bundle.instance_id.size()));

    std::vector<std::uint8_t> buf(bundle.samples.size() * 4);
    for (std::size_t i = 0; i < bundle.samples.size(); ++i)
        store_f32(buf.data() + i * 4, static_cast<float>(bundle.samples[i]));
    out_.write(reinterpret_cast<const char*>(buf.data()),
               static_cast<std::streamsize>(buf.size()));
    if (header_.has_embeddings()) {
        std::vector<std::uint8_t> emb(bundle.embedding.size() * 4);
        for (std::size_t i = 0; i < bundle.embedding.size(); ++i)
            store_f32(emb.data() + i * 4, static_cast<float>(bundle.embedding[i]));
        out_.write(reinterpret_cast<const char*>(emb.data()),
                   static_cast<std::streamsize>(emb.size()));
    }
    if (!out_) throw IoError("write failure on prediction file: " + path_);
    ++written_;
}

void PredictionWriter::close() {
    if (out_.is_open()) {
        if (written_ != header_.record_count)
            throw DomainError("prediction write: wrote " + std::to_string(written_) +
                              " records but header declares " +
                              std::to_string(header_.record_count));
        out_.flush();
        if (!out_) throw IoError("write failure on prediction file: " + path_);
        out_.close();
    }
}

PredictionWriter::~PredictionWriter() {
    try {
        close();
    } catch (...) {
    }
}

namespace {

PredictionHeader read_prediction_header(std::ifstream& in, const std::string& path) {
    char magic[8];
    if (!read_exact(in, magic, 8) || std::memcmp(magic, kPredictionMagic, 8) != 0)
        throw ValidationError(path + ": bad magic, not a prediction file");
    std::uint8_t raw[20];
    if (!read_exact(in, raw, 20)) throw ValidationError(path + ": truncated header");
    PredictionHeader h;
    h.record_count = load_u32(raw);
    h.dim = load_u32(raw + 4);
    h.num_samples = load_u32(raw + 8);
    h.flags = load_u32(raw + 12);
    h.embedding_dim = load_u32(raw + 16);
    if (h.record_count > 0 && (h.dim == 0 || h.num_samples == 0))
        throw ValidationError(path + ": header declares empty sample matrix");
    if (h.has_embeddings() && h.embedding_dim == 0)
        throw ValidationError(path + ": embeddings flagged but d_h is 0");
    return h;
}

PredictionBundle read_prediction_record(std::ifstream& in, const PredictionHeader& header,
                                        const std::string& path, std::uint32_t index) {
    const std::string where = path + ": record " + std::to_string(index);
    std::uint8_t len_raw[2];
    if (!read_exact(in, len_raw, 2)) throw ValidationError(where + ": truncated file");
    const std::uint16_t id_len = load_u16(len_raw);
    PredictionBundle bundle;
    bundle.instance_id.resize(id_len);
    if (id_len > 0 && !read_exact(in, bundle.instance_id.data(), id_len))
        throw ValidationError(where + ": truncated id");
    bundle.dim = header.dim;
    bundle.num_samples = header.num_samples;

    const std::size_t n_values =
        static_cast<std::size_t>(header.dim) * header.num_samples;
    std::vector<std::uint8_t> buf(n_values * 4);
    if (!read_exact(in, buf.data(), buf.size()))
        throw ValidationError(where + " ('" + bundle.instance_id + "'): truncated payload");
    bundle.samples.resize(n_values);
    for (std::size_t i = 0; i < n_values; ++i) {
        const float v = load_f32(buf.data() + i * 4);
        if (std::isnan(v) || v < 0.0f || v > 1.0f)
            throw ValidationError(where + " ('" + bundle.instance_id +
                                  "'): probability out of [0,1] or NaN");
        bundle.samples[i] = static_cast<double>(v);
    }
    if (header.has_embeddings()) {
        std::vector<std::uint8_t> emb(static_cast<std::size_t>(header.embedding_dim) * 4);
        if (!read_exact(in, emb.data(), emb.size()))
            throw ValidationError(where + " ('" + bundle.instance_id +
                                  "'): truncated embedding");
        bundle.embedding.resize(header.embedding_dim);
        for (std::size_t i = 0; i < header.embedding_dim; ++i) {
            const float v = load_f32(emb.data() + i * 4);
            if (!std::isfinite(v))
                throw ValidationError(where + " ('" + bundle.instance_id +
                                      "'): non-finite embedding value");
            bundle.embedding[i] = static_cast<double>(v);
        }
    }
    return bundle;
}

}  // namespace

PredictionReader::PredictionReader(const std::string& path)
    : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open prediction file: " + path);
    header_ = read_prediction_header(in_, path);
}

std::optional<PredictionBundle> PredictionReader::next() {
    if (read_ >= header_.record_count) {
        // After the declared records, the file must end.
        char extra;
        if (in_.read(&extra, 1).gcount() == 1)
            throw ValidationError(path_ + ": trailing data after " +
                                  std::to_string(header_.record_count) + " records");
        return std::nullopt;
    }
    PredictionBundle bundle = read_prediction_record(in_, header_, path_, read_);
    ++read_;
    return bundle;
}

std::vector<PredictionBundle> load_predictions(const std::string& path) {
    PredictionReader reader(path);
    std::vector<PredictionBundle> bundles;
    bundles.reserve(reader.header().record_count);
    while (auto bundle = reader.next()) bundles.push_back(std::move(*bundle));
    return bundles;
}

void write_predictions(const std::string& path,
                       const std::vector<PredictionBundle>& bundles,
                       std::size_t embedding_dim) {
    PredictionHeader header;
    header.record_count = static_cast<std::uint32_t>(bundles.size());
    if (!bundles.empty()) {
        header.dim = static_cast<std::uint32_t>(bundles.front().dim);
        header.num_samples = static_cast<std::uint32_t>(bundles.front().num_samples);
        if (embedding_dim == 0 && bundles.front().has_embedding())
            embedding_dim = bundles.front().embedding.size();
    }
    header.flags = embedding_dim > 0 ? 1u : 0u;
    header.embedding_dim = static_cast<std::uint32_t>(embedding_dim);
    PredictionWriter writer(path, header);
    for (const PredictionBundle& bundle : bundles) writer.write(bundle);
    writer.close();
}

PredictionFileIndex::PredictionFileIndex(const std::string& path)
    : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open prediction file: " + path);
    header_ = read_prediction_header(in_, path);
    const std::size_t payload =
        static_cast<std::size_t>(header_.dim) * header_.num_samples * 4 +
        (header_.has_embeddings() ? static_cast<std::size_t>(header_.embedding_dim) * 4 : 0);
    offsets_.reserve(header_.record_count);
    for (std::uint32_t r = 0; r < header_.record_count; ++r) {
        const std::streamoff record_start = in_.tellg();
        std::uint8_t len_raw[2];
        if (!read_exact(in_, len_raw, 2))
            throw ValidationError(path + ": record " + std::to_string(r) +
                                  ": truncated file");
        const std::uint16_t id_len = load_u16(len_raw);
        std::string id(id_len, '\0');
        if (id_len > 0 && !read_exact(in_, id.data(), id_len))
            throw ValidationError(path + ": record " + std::to_string(r) +
                                  ": truncated id");
        offsets_[id] = record_start;
        in_.seekg(static_cast<std::streamoff>(payload), std::ios::cur);
        if (!in_)
            throw ValidationError(path + ": record " + std::to_string(r) +
                                  " ('" + id + "'): truncated payload");
    }
    // The payload of the final record may extend exactly to EOF; verify.
    in_.clear();
    in_.seekg(0, std::ios::end);
    const std::streamoff end = in_.tellg();
    std::streamoff expected = 8 + 20;
    for (const auto& [id, off] : offsets_)
        expected += 2 + static_cast<std::streamoff>(id.size()) +
                    static_cast<std::streamoff>(payload);
    if (end != expected)
        throw ValidationError(path + ": file length " + std::to_string(end) +
                              " does not match declared records (" +
                              std::to_string(expected) + ")");
}

PredictionBundle PredictionFileIndex::read(const std::string& id) {
    auto it = offsets_.find(id);
    if (it == offsets_.end())
        throw ValidationError(path_ + ": no record for instance '" + id + "'");
    in_.clear();
    in_.seekg(it->second);
    return read_prediction_record(in_, header_, path_, 0);
}

void write_embeddings(const std::string& path, const std::vector<double>& rows,
                      std::size_t n, std::size_t dim) {
    if (rows.size() != n * dim)
        throw DomainError("write_embeddings: row data size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open embedding file for writing: " + path);
    out.write(kEmbeddingMagic, 8);
    write_u32(out, static_cast<std::uint32_t>(n));
    write_u32(out, static_cast<std::uint32_t>(dim));
    std::vector<std::uint8_t> buf(rows.size() * 4);
    for (std::size_t i = 0; i < rows.size(); ++i)
        store_f32(buf.data() + i * 4, static_cast<float>(rows[i]));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failure on embedding file: " + path);
}

std::pair<std::vector<double>, std::pair<std::size_t, std::size_t>> load_embeddings(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file: " + path);
    char magic[8];
    if (!read_exact(in, magic, 8) || std::memcmp(magic, kEmbeddingMagic, 8) != 0)
        throw ValidationError(path + ": bad magic, not an embedding file");
    std::uint8_t raw[8];
    if (!read_exact(in, raw, 8)) throw ValidationError(path + ": truncated header");
    const std::size_t n = load_u32(raw);
    const std::size_t dim = load_u32(raw + 4);
    if (n == 0 || dim == 0)
        throw ValidationError(path + ": empty embedding matrix");
    std::vector<std::uint8_t> buf(n * dim * 4);
    if (!read_exact(in, buf.data(), buf.size()))
        throw ValidationError(path + ": truncated embedding payload");
    std::vector<double> rows(n * dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const float v = load_f32(buf.data() + i * 4);
        if (!std::isfinite(v))
            throw ValidationError(path + ": non-finite embedding value");
        rows[i] = static_cast<double>(v);
    }
    return {std::move(rows), {n, dim}};
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

double parse_double(const std::string& text, const std::string& where) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ValidationError(where + ": cannot parse number '" + text + "'");
    return value;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open CSV for writing: " + path);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c > 0) out << ',';
        out << csv_escape(header[c]);
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out << ',';
            out << csv_escape(row[c]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failure on CSV: " + path);
}

void write_score_table(const std::string& path, const scoring::ScoreTable& table) {
    std::vector<std::string> header;
    header.reserve(table.columns.size() + 1);
    header.push_back("id");
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    std::vector<std::vector<std::string>> rows;
    rows.reserve(table.ids.size());
    for (std::size_t r = 0; r < table.ids.size(); ++r) {
        std::vector<std::string> row;
        row.reserve(header.size());
        row.push_back(table.ids[r]);
        for (double v : table.values[r]) row.push_back(format_double(v));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

scoring::ScoreTable read_score_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open score table: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path + ": empty score table");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = csv_split(line);
    if (header.empty() || header[0] != "id")
        throw ValidationError(path + ": first column must be 'id'");
    scoring::ScoreTable table;
    table.columns.assign(header.begin() + 1, header.end());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = csv_split(line);
        if (fields.size() != header.size())
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(fields.size()));
        table.ids.push_back(fields[0]);
        std::vector<double> row(fields.size() - 1);
        for (std::size_t c = 1; c < fields.size(); ++c)
            row[c - 1] =
                parse_double(fields[c], path + ":" + std::to_string(line_no));
        table.values.push_back(std::move(row));
    }
    return table;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for digest: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw NumericError("sha256: cannot allocate digest context");
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw NumericError("sha256: digest init failed");
    }
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const std::streamsize got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(got)) != 1) {
            EVP_MD_CTX_free(ctx);
            throw NumericError("sha256: digest update failed");
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw NumericError("sha256: digest final failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
    json obj;
    obj["command"] = manifest.command;
    json config = json::object();
    for (const auto& [k, v] : manifest.config) config[k] = v;
    obj["config"] = std::move(config);
    obj["seed"] = manifest.seed;
    json inputs = json::array();
    for (const auto& [p, digest] : manifest.inputs)
        inputs.push_back(json{{"path", p}, {"sha256", digest}});
    obj["inputs"] = std::move(inputs);
    obj["outputs"] = manifest.outputs;
    obj["status"] = manifest.status;
    if (!manifest.error.empty()) obj["error"] = manifest.error;
    obj["tool"] = "selret";
    obj["version"] = SELRET_VERSION;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open manifest for writing: " + path);
    out << obj.dump(2) << '\n';
    if (!out) throw IoError("write failure on manifest: " + path);
}

}  // namespace selret::io
