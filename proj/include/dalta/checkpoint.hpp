#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dalta/errors.hpp"
#include "dalta/trainer.hpp"

namespace dalta {

inline uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

inline nlohmann::json tensor_to_json(const Tensor2& t) {
    return nlohmann::json{{"shape", {t.rows, t.cols}}, {"data", t.data}};
}

inline Tensor2 tensor_from_json(const nlohmann::json& j) {
    const auto shape = j.at("shape");
    Tensor2 t(shape.at(0).get<int>(), shape.at(1).get<int>());
    const auto& data = j.at("data");
    if (data.size() != t.data.size()) throw FormatError("checkpoint tensor size mismatch");
    for (size_t i = 0; i < t.data.size(); ++i) t.data[i] = data[i].get<double>();
    return t;
}

} // namespace detail

// Versioned JSON container mapping parameter names to shapes and row-major
// values; the header records seed, step count and the config hash.
inline nlohmann::json checkpoint_to_json(TrainState& state, const ModelConfig& model,
                                         uint64_t seed, const std::string& config_hash,
                                         const std::string& vocab_hash) {
    nlohmann::json params = nlohmann::json::object();
    for (ParamBlock* p : state.all_params()) params[p->name] = detail::tensor_to_json(p->value);
    return nlohmann::json{
        {"v", 1},
        {"kind", "dalta-checkpoint"},
        {"seed", seed},
        {"step_count", state.step},
        {"config_hash", config_hash},
        {"vocab_hash", vocab_hash},
        {"model",
         {{"vocab_size", model.vocab_size},
          {"hidden", model.hidden},
          {"latent", model.latent},
          {"disc_hidden", model.disc_hidden},
          {"k_source", model.k_source},
          {"k_target", model.k_target}}},
        {"params", params},
    };
}

inline void save_checkpoint(TrainState& state, const ModelConfig& model, uint64_t seed,
                            const std::string& config_hash, const std::string& vocab_hash,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << checkpoint_to_json(state, model, seed, config_hash, vocab_hash).dump() << "\n";
}

struct Checkpoint {
    ModelConfig model;
    uint64_t seed = 0;
    long step_count = 0;
    std::string config_hash;
    std::string vocab_hash;
    TrainState state;

    explicit Checkpoint(const ModelConfig& m, uint64_t s) : model(m), state(m, s) {}
};

inline Checkpoint load_checkpoint(const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("malformed checkpoint " + path + " at byte " + std::to_string(e.byte) +
                          ": " + e.what());
    }
    if (!j.contains("kind") || j["kind"] != "dalta-checkpoint" || j.value("v", 0) != 1)
        throw FormatError("not a v1 dalta checkpoint: " + path);

    ModelConfig m;
    const auto& jm = j.at("model");
    m.vocab_size = jm.at("vocab_size").get<int>();
    m.hidden = jm.at("hidden").get<int>();
    m.latent = jm.at("latent").get<int>();
    m.disc_hidden = jm.at("disc_hidden").get<int>();
    m.k_source = jm.at("k_source").get<int>();
    m.k_target = jm.at("k_target").get<int>();

    Checkpoint c(m, j.at("seed").get<uint64_t>());
    c.seed = j.at("seed").get<uint64_t>();
    c.step_count = j.at("step_count").get<long>();
    c.config_hash = j.at("config_hash").get<std::string>();
    c.vocab_hash = j.at("vocab_hash").get<std::string>();
    c.state.step = c.step_count;

    const auto& params = j.at("params");
    for (ParamBlock* p : c.state.all_params()) {
        if (!params.contains(p->name)) throw FormatError("checkpoint missing parameter " + p->name);
        Tensor2 t = detail::tensor_from_json(params.at(p->name));
        if (!t.same_shape(p->value))
            throw FormatError("checkpoint parameter " + p->name + " has wrong shape");
        p->value = std::move(t);
    }
    return c;
}

} // namespace dalta
