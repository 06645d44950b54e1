// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "l2a/model.hpp"

namespace l2a {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "l2a-checkpoint";
constexpr int kVersion = 1;
constexpr const char* kB64 =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const uint8_t* data, size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (size_t i = 0; i < len; i += 3) {
        uint32_t v = static_cast<uint32_t>(data[i]) << 16;
        if (i + 1 < len) v |= static_cast<uint32_t>(data[i + 1]) << 8;
        if (i + 2 < len) v |= data[i + 2];
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(i + 1 < len ? kB64[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? kB64[v & 63] : '=');
    }
    return out;
}

std::vector<uint8_t> b64_decode(const std::string& s) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<uint8_t> out;
    int acc = 0, bits = 0;
    for (char c : s) {
        if (c == '=') break;
        const int v = val(c);
        if (v < 0) throw std::runtime_error("checkpoint: invalid base64");
        acc = (acc << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

// Float bits little-endian; round trips are bit-exact.
json tensor_to_json(const SeqMatrix& m) {
    std::vector<uint8_t> bytes(m.data.size() * 4);
    for (size_t i = 0; i < m.data.size(); ++i) {
        uint32_t bits;
        static_assert(sizeof(bits) == sizeof(float));
        std::memcpy(&bits, &m.data[i], 4);
        bytes[4 * i + 0] = bits & 0xFF;
        bytes[4 * i + 1] = (bits >> 8) & 0xFF;
        bytes[4 * i + 2] = (bits >> 16) & 0xFF;
        bytes[4 * i + 3] = (bits >> 24) & 0xFF;
    }
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", b64_encode(bytes.data(), bytes.size())}};
}

SeqMatrix tensor_from_json(const json& j) {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    const std::vector<uint8_t> bytes = b64_decode(j.at("data").get<std::string>());
    if (bytes.size() != static_cast<size_t>(rows) * cols * 4)
        throw std::runtime_error("checkpoint: tensor byte length mismatch");
    SeqMatrix m(rows, cols);
    for (size_t i = 0; i < m.data.size(); ++i) {
        uint32_t bits = static_cast<uint32_t>(bytes[4 * i]) | (static_cast<uint32_t>(bytes[4 * i + 1]) << 8) |
                        (static_cast<uint32_t>(bytes[4 * i + 2]) << 16) |
                        (static_cast<uint32_t>(bytes[4 * i + 3]) << 24);
        std::memcpy(&m.data[i], &bits, 4);
    }
    return m;
}

json vec_to_json(const std::vector<float>& v) {
    SeqMatrix m(1, static_cast<int>(v.size()));
    m.data = v;
    return tensor_to_json(m);
}

std::vector<float> vec_from_json(const json& j) { return tensor_from_json(j).data; }

json attn_to_json(const AttnParams& p) {
    return json{{"w_q", tensor_to_json(p.w_q)},
                {"w_k", tensor_to_json(p.w_k)},
                {"w_v", tensor_to_json(p.w_v)},
                {"w_o", tensor_to_json(p.w_o)},
                {"num_heads", p.num_heads}};
}

AttnParams attn_from_json(const json& j, float rope_base, bool rope_enabled) {
    AttnParams p;
    p.w_q = tensor_from_json(j.at("w_q"));
    p.w_k = tensor_from_json(j.at("w_k"));
    p.w_v = tensor_from_json(j.at("w_v"));
    p.w_o = tensor_from_json(j.at("w_o"));
    p.num_heads = j.at("num_heads").get<int>();
    p.rope.base_frequency = rope_base;
    p.rope.enabled = rope_enabled;
    p.rope.head_dim = p.w_q.rows / p.num_heads;
    return p;
}

}  // namespace

void save_checkpoint(const ToyModel& model, const std::string& path) {
    json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["config"] = {{"vocab", model.vocab},
                   {"d", model.d},
                   {"num_heads", model.num_heads},
                   {"tie_embeddings", model.tie_embeddings},
                   {"trainable", model.trainable == TrainableSet::kAll ? "all" : "mixing"},
                   {"router_input", model.router_input == RouterInput::kPostLn ? "post_ln" : "pre_ln"},
                   {"ln_eps", model.ln_eps},
                   {"rope_base", model.rope_base},
                   {"rope_enabled", model.rope_enabled}};
    j["embed"] = tensor_to_json(model.embed);
    if (!model.tie_embeddings) j["unembed"] = tensor_to_json(model.unembed);
    json layers = json::array();
    for (size_t li = 0; li < model.layers.size(); ++li) {
        const auto& l = model.layers[li];
        json lj;
        lj["local"] = attn_to_json(l.local);
        lj["global"] = l.global_attn ? attn_to_json(*l.global_attn) : json(nullptr);
        lj["router_w"] = tensor_to_json(l.router_w);
        lj["ln_local"] = {{"gamma", vec_to_json(l.ln_local.gamma)}, {"beta", vec_to_json(l.ln_local.beta)}};
        lj["ln_global"] = {{"gamma", vec_to_json(l.ln_global.gamma)}, {"beta", vec_to_json(l.ln_global.beta)}};
        lj["window"] = l.window;
        lj["threshold"] = l.threshold;
        lj["pruned"] = l.pruned;
        lj["ffn"] = {{"w1", tensor_to_json(model.ffn[li].w1)}, {"w2", tensor_to_json(model.ffn[li].w2)}};
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("checkpoint: cannot open for write: " + path);
    out << j.dump(2) << "\n";
}

ToyModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
    json j;
    in >> j;
    if (j.at("format").get<std::string>() != kFormat) throw std::runtime_error("checkpoint: unknown format");
    if (j.at("version").get<int>() != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    const json& cfg = j.at("config");
    ToyModel m;
    m.vocab = cfg.at("vocab").get<int>();
    m.d = cfg.at("d").get<int>();
    m.num_heads = cfg.at("num_heads").get<int>();
    m.tie_embeddings = cfg.at("tie_embeddings").get<bool>();
    m.trainable = cfg.at("trainable").get<std::string>() == "all" ? TrainableSet::kAll : TrainableSet::kMixing;
    m.router_input =
        cfg.at("router_input").get<std::string>() == "pre_ln" ? RouterInput::kPreLn : RouterInput::kPostLn;
    m.ln_eps = cfg.at("ln_eps").get<float>();
    m.rope_base = cfg.at("rope_base").get<float>();
    m.rope_enabled = cfg.at("rope_enabled").get<bool>();
    m.embed = tensor_from_json(j.at("embed"));
    if (!m.tie_embeddings) m.unembed = tensor_from_json(j.at("unembed"));
    for (const auto& lj : j.at("layers")) {
        L2ALayerT<float> l;
        l.local = attn_from_json(lj.at("local"), m.rope_base, m.rope_enabled);
        if (!lj.at("global").is_null()) l.global_attn = attn_from_json(lj.at("global"), m.rope_base, m.rope_enabled);
        l.router_w = tensor_from_json(lj.at("router_w"));
        l.ln_local.gamma = vec_from_json(lj.at("ln_local").at("gamma"));
        l.ln_local.beta = vec_from_json(lj.at("ln_local").at("beta"));
        l.ln_global.gamma = vec_from_json(lj.at("ln_global").at("gamma"));
        l.ln_global.beta = vec_from_json(lj.at("ln_global").at("beta"));
        l.window = lj.at("window").get<int>();
        l.threshold = lj.at("threshold").get<float>();
        l.pruned = lj.at("pruned").get<bool>();
        m.layers.push_back(std::move(l));
        FfnT<float> f;
        f.w1 = tensor_from_json(lj.at("ffn").at("w1"));
        f.w2 = tensor_from_json(lj.at("ffn").at("w2"));
        m.ffn.push_back(std::move(f));
    }
    return m;
}

}  // namespace l2a
