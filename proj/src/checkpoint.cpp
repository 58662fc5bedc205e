#include "syllab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "syllab/error.hpp"

namespace syllab {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "syllab-checkpoint";

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for blobs over 4 GiB.
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1U << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + offset), chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

void append_le(std::string& out, double value) {
    auto bits = std::bit_cast<std::uint64_t>(value);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>(bits & 0xFF));
        bits >>= 8;
    }
}

double read_le(const char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
    return std::bit_cast<double>(bits);
}

json config_to_json(const ModelConfig& c) {
    return json{{"embedding_dim", c.embedding_dim},
                {"lstm_dim", c.lstm_dim},
                {"conv_blocks", c.conv_blocks},
                {"conv_filters", c.conv_filters},
                {"conv_width", c.conv_width},
                {"pool_size", c.pool_size},
                {"dropout_rate", c.dropout_rate},
                {"output_head", to_string(c.output_head)},
                {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs},
                {"patience", c.patience},
                {"clip_threshold", c.clip_threshold},
                {"learning_rate", c.learning_rate},
                {"forget_bias", c.forget_bias}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.lstm_dim = j.at("lstm_dim").get<std::size_t>();
    c.conv_blocks = j.at("conv_blocks").get<std::size_t>();
    c.conv_filters = j.at("conv_filters").get<std::size_t>();
    c.conv_width = j.at("conv_width").get<std::size_t>();
    c.pool_size = j.at("pool_size").get<std::size_t>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.output_head = output_head_from_string(j.at("output_head").get<std::string>());
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.clip_threshold = j.at("clip_threshold").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.forget_bias = j.at("forget_bias").get<double>();
    c.validate();
    return c;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    const auto names = ckpt.parameters.tensor_names();
    const auto tensors = ckpt.parameters.tensors();
    if (ckpt.parameters.head != ckpt.config.output_head) {
        throw CheckpointError("checkpoint parameters and config disagree on the output head");
    }

    std::string blob;
    json tensor_index = json::array();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        tensor_index.push_back({{"name", names[i]}, {"shape", tensors[i]->shape()}, {"offset", blob.size()}});
        for (double v : tensors[i]->values()) append_le(blob, v);
    }

    json header{{"magic", kMagic},
                {"format_version", kCheckpointFormatVersion},
                {"config", config_to_json(ckpt.config)},
                {"vocabulary", ckpt.vocabulary.tokens()},
                {"lexicon_format",
                 {{"tokenization", to_string(ckpt.lexicon_format.tokenization)},
                  {"delimiter", std::string(1, ckpt.lexicon_format.syllable_delimiter)}}},
                {"training_seed", ckpt.training_seed},
                {"metadata", ckpt.metadata},
                {"tensors", std::move(tensor_index)},
                {"blob_bytes", blob.size()},
                {"blob_crc32", crc32_of(blob)}};
    std::string out = header.dump();
    out.push_back('\n');
    out += blob;
    return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
    const auto newline = bytes.find('\n');
    if (newline == std::string_view::npos) throw CheckpointError("checkpoint truncated: no header terminator");
    json header;
    try {
        header = json::parse(bytes.substr(0, newline));
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
    }
    if (!header.is_object() || header.value("magic", std::string()) != kMagic) {
        throw CheckpointError("not a syllab checkpoint");
    }
    const int version = header.value("format_version", -1);
    if (version != kCheckpointFormatVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                              std::to_string(kCheckpointFormatVersion) + ")");
    }

    try {
        const std::string_view blob = bytes.substr(newline + 1);
        const auto blob_bytes = header.at("blob_bytes").get<std::size_t>();
        if (blob.size() < blob_bytes) throw CheckpointError("checkpoint truncated: blob shorter than header states");
        if (blob.size() > blob_bytes) throw CheckpointError("checkpoint has trailing bytes after the blob");
        if (crc32_of(blob) != header.at("blob_crc32").get<std::uint32_t>()) {
            throw CheckpointError("checkpoint checksum mismatch");
        }

        Checkpoint ckpt;
        ckpt.config = config_from_json(header.at("config"));
        ckpt.vocabulary = PhoneVocabulary::from_tokens(header.at("vocabulary").get<std::vector<std::string>>());
        const auto& fmt = header.at("lexicon_format");
        ckpt.lexicon_format.tokenization = tokenization_from_string(fmt.at("tokenization").get<std::string>());
        const auto delimiter = fmt.at("delimiter").get<std::string>();
        if (delimiter.size() != 1) throw CheckpointError("checkpoint delimiter must be one character");
        ckpt.lexicon_format.syllable_delimiter = delimiter[0];
        ckpt.lexicon_format.validate();
        ckpt.training_seed = header.at("training_seed").get<std::uint64_t>();
        ckpt.metadata = header.at("metadata").get<std::map<std::string, std::string>>();

        ckpt.parameters = ModelParameters::zeros(ckpt.config, ckpt.vocabulary.size());
        const auto names = ckpt.parameters.tensor_names();
        auto tensors = ckpt.parameters.tensors();
        const auto& index = header.at("tensors");
        if (index.size() != tensors.size()) throw CheckpointError("checkpoint tensor count does not match its config");
        std::size_t expected_offset = 0;
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            const auto& entry = index[i];
            if (entry.at("name").get<std::string>() != names[i] ||
                entry.at("shape").get<Shape>() != tensors[i]->shape() ||
                entry.at("offset").get<std::size_t>() != expected_offset) {
                throw CheckpointError("checkpoint tensor '" + names[i] + "' does not match its config");
            }
            const std::size_t nbytes = tensors[i]->size() * 8;
            if (expected_offset + nbytes > blob.size()) throw CheckpointError("checkpoint truncated inside " + names[i]);
            for (std::size_t k = 0; k < tensors[i]->size(); ++k) {
                (*tensors[i])[k] = read_le(blob.data() + expected_offset + 8 * k);
            }
            if (!tensors[i]->all_finite()) throw CheckpointError("checkpoint tensor '" + names[i] + "' is not finite");
            expected_offset += nbytes;
        }
        if (expected_offset != blob_bytes) throw CheckpointError("checkpoint blob size does not match its tensors");
        return ckpt;
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
    } catch (const CheckpointError&) {
        throw;
    } catch (const Error& e) {
        throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    const std::string bytes = serialize_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace syllab
