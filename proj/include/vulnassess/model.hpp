#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vulnassess/errors.hpp"
#include "vulnassess/lexer.hpp"
#include "vulnassess/vir.hpp"

namespace vulnassess {

// ---------------------------------------------------------------------------
// hybrid prompt (hard text around the code and analysis slots, learnable soft
// prompt appended in feature space, class head in place of the answer slot)
// ---------------------------------------------------------------------------

struct HybridPrompt {
    std::string code;     // slot X: rendered intention dependence graph
    std::string analysis; // slot Y: canonical report rendering

    bool operator==(const HybridPrompt &) const = default;
};

inline HybridPrompt assemble_prompt(const std::string &idg_text, const Vir &vir) {
    return {idg_text, render_vir(vir)};
}

inline std::string hybrid_text(const HybridPrompt &hp) {
    return "The code snippet : " + hp.code + " The vulnerability analysis : " + hp.analysis;
}

/// Code-aware token stream: identifiers, numerals and operators kept verbatim,
/// string/char literals folded into one token class each.
inline std::vector<std::string> feature_tokens(const std::string &text) {
    std::vector<std::string> out;
    for (const auto &t : lex(text)) {
        switch (t.kind) {
            case TokKind::Str: out.push_back("<str>"); break;
            case TokKind::Chr: out.push_back("<chr>"); break;
            default: out.push_back(t.text);
        }
    }
    return out;
}

constexpr size_t kMaxPromptTokens = 4096; // X truncated from the tail first

inline std::vector<std::string> hybrid_tokens(const HybridPrompt &hp) {
    auto x = feature_tokens(hp.code);
    auto y = feature_tokens(hp.analysis);
    if (x.size() + y.size() > kMaxPromptTokens) {
        size_t keep_x = y.size() >= kMaxPromptTokens ? 0 : kMaxPromptTokens - y.size();
        x.resize(std::min(x.size(), keep_x));
        if (y.size() > kMaxPromptTokens) y.resize(kMaxPromptTokens);
    }
    std::vector<std::string> stream = {"The", "code", "snippet", ":"};
    stream.insert(stream.end(), x.begin(), x.end());
    const char *mid[] = {"The", "vulnerability", "analysis", ":"};
    stream.insert(stream.end(), std::begin(mid), std::end(mid));
    stream.insert(stream.end(), y.begin(), y.end());
    return stream;
}

// ---------------------------------------------------------------------------
// hashed n-gram features
// ---------------------------------------------------------------------------

/// Sparse L2-normalized vector; entries sorted by bucket index.
struct HashedFeatures {
    std::vector<std::pair<int, double>> entries;
};

namespace detail {

inline uint64_t splitmix64(uint64_t &state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t token_hash(std::string_view s, uint64_t seed) {
    uint64_t h = 0xcbf29ce484222325ull ^ (seed * 0x100000001b3ull);
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace detail

/// Hash token 1- and 2-grams into `dim` buckets with a seeded hash and
/// L2-normalize; the empty stream maps to the zero vector.
inline HashedFeatures hash_ngrams(const std::vector<std::string> &tokens, int dim, uint64_t seed) {
    std::map<int, double> buckets;
    for (size_t i = 0; i < tokens.size(); ++i) {
        buckets[static_cast<int>(detail::token_hash(tokens[i], seed) % static_cast<uint64_t>(dim))] += 1.0;
        if (i + 1 < tokens.size()) {
            std::string bigram = tokens[i] + "\x1e" + tokens[i + 1];
            buckets[static_cast<int>(detail::token_hash(bigram, seed ^ 0x5851f42d4c957f2dull) %
                                     static_cast<uint64_t>(dim))] += 1.0;
        }
    }
    double norm2 = 0.0;
    for (const auto &[b, v] : buckets) norm2 += v * v;
    double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
    HashedFeatures f;
    f.entries.reserve(buckets.size());
    for (const auto &[b, v] : buckets) f.entries.push_back({b, v * inv});
    return f;
}

// ---------------------------------------------------------------------------
// model parameters
// ---------------------------------------------------------------------------

struct ModelDims {
    int feature_dim = 32768; // hashed bucket count (D)
    int soft_len = 16;       // learnable soft-prompt length (K)
    int hidden_dim = 256;    // encoder output width (H)
};

/// Frozen random projection plus the trainable surface of prompt tuning:
/// soft prompt, severity head, and the bilinear suggestion scorer.
struct ModelParams {
    ModelDims dims;
    uint64_t seed = 0;
    Eigen::MatrixXd projection;    // (D+K) x H, never trained
    Eigen::VectorXd soft_prompt;   // K
    Eigen::MatrixXd head_w;        // H x 4
    Eigen::Vector4d head_b;        // 4
    Eigen::MatrixXd sugg_bilinear; // H x H

    static ModelParams init(const ModelDims &dims, uint64_t seed) {
        ModelParams p;
        p.dims = dims;
        p.seed = seed;
        const int rows = dims.feature_dim + dims.soft_len;
        p.projection.resize(rows, dims.hidden_dim);
        uint64_t state = seed * 0x9e3779b97f4a7c15ull + 0x6a09e667f3bcc909ull;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < dims.hidden_dim; ++j) {
                // uniform in [-1, 1), reproducible across platforms
                uint64_t r = detail::splitmix64(state);
                p.projection(i, j) =
                    static_cast<double>(r >> 11) * (2.0 / 9007199254740992.0) - 1.0;
            }
        p.soft_prompt = Eigen::VectorXd::Zero(dims.soft_len);
        p.head_w = Eigen::MatrixXd::Zero(dims.hidden_dim, 4);
        p.head_b = Eigen::Vector4d::Zero();
        p.sugg_bilinear = Eigen::MatrixXd::Zero(dims.hidden_dim, dims.hidden_dim);
        return p;
    }

    /// Bottom K rows of the projection — the soft prompt's pathway.
    Eigen::MatrixXd soft_rows() const {
        return projection.bottomRows(dims.soft_len);
    }
};

/// u = P_featᵀ c for a sparse hashed vector c; the encoder is
/// h = tanh(u + Qᵀ s) with Q the soft rows.
inline Eigen::VectorXd feature_projection(const HashedFeatures &f, const ModelParams &p) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(p.dims.hidden_dim);
    for (const auto &[idx, val] : f.entries) u += val * p.projection.row(idx).transpose();
    return u;
}

inline Eigen::VectorXd encode_projected(const Eigen::VectorXd &u, const ModelParams &p) {
    return (u + p.soft_rows().transpose() * p.soft_prompt).array().tanh();
}

inline Eigen::VectorXd encode_tokens(const std::vector<std::string> &tokens,
                                     const ModelParams &p) {
    return encode_projected(feature_projection(hash_ngrams(tokens, p.dims.feature_dim, p.seed), p),
                            p);
}

inline Eigen::VectorXd encode(const HybridPrompt &hp, const ModelParams &p) {
    return encode_tokens(hybrid_tokens(hp), p);
}

/// Max-subtracted softmax over the four severity logits.
inline Eigen::Vector4d predict(const Eigen::VectorXd &h, const ModelParams &p) {
    Eigen::Vector4d logits = p.head_w.transpose() * h + p.head_b;
    double m = logits.maxCoeff();
    Eigen::Vector4d e = (logits.array() - m).exp();
    return e / e.sum();
}

struct BankEntry {
    std::string text;
    Eigen::VectorXd vec;
};

/// Highest bilinear score wins; ties break toward the lowest bank index.
inline const std::string &suggest(const Eigen::VectorXd &h, const ModelParams &p,
                                  const std::vector<BankEntry> &bank) {
    if (bank.empty()) throw EmptyBank();
    Eigen::VectorXd hu = p.sugg_bilinear.transpose() * h;
    size_t best = 0;
    double best_score = hu.dot(bank[0].vec);
    for (size_t i = 1; i < bank.size(); ++i) {
        double s = hu.dot(bank[i].vec);
        if (s > best_score) {
            best = i;
            best_score = s;
        }
    }
    return bank[best].text;
}

struct Assessment {
    int severity = 0;
    std::array<double, 4> distribution{};
    std::string suggestion;
    double confidence = 0.0;
    bool used_fallback = false; // slice was empty; whole function used
    std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// checkpoint io
// ---------------------------------------------------------------------------

constexpr const char *kCheckpointVersion = "vulnassess-checkpoint-1";

inline nlohmann::json checkpoint_to_json(const ModelParams &p, const std::vector<BankEntry> &bank) {
    auto matrix = [](const Eigen::MatrixXd &m) {
        std::vector<double> flat(static_cast<size_t>(m.size()));
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j)
                flat[static_cast<size_t>(i) * static_cast<size_t>(m.cols()) +
                     static_cast<size_t>(j)] = m(i, j);
        return flat;
    };
    nlohmann::json doc;
    doc["version"] = kCheckpointVersion;
    doc["seed"] = p.seed;
    doc["dims"] = {{"feature_dim", p.dims.feature_dim},
                   {"soft_len", p.dims.soft_len},
                   {"hidden_dim", p.dims.hidden_dim}};
    doc["projection_from_seed"] = true;
    doc["soft_prompt"] = std::vector<double>(p.soft_prompt.data(),
                                             p.soft_prompt.data() + p.soft_prompt.size());
    doc["head_w"] = matrix(p.head_w);
    doc["head_b"] = std::vector<double>(p.head_b.data(), p.head_b.data() + 4);
    doc["sugg_bilinear"] = matrix(p.sugg_bilinear);
    nlohmann::json bank_json = nlohmann::json::array();
    for (const auto &e : bank)
        bank_json.push_back({{"text", e.text},
                             {"vec", std::vector<double>(e.vec.data(), e.vec.data() + e.vec.size())}});
    doc["bank"] = std::move(bank_json);
    return doc;
}

inline std::pair<ModelParams, std::vector<BankEntry>> checkpoint_from_json(const nlohmann::json &doc) {
    if (doc.value("version", "") != kCheckpointVersion)
        throw Error("unsupported checkpoint version '" + doc.value("version", "") + "'");
    ModelDims dims{doc.at("dims").at("feature_dim").get<int>(),
                   doc.at("dims").at("soft_len").get<int>(),
                   doc.at("dims").at("hidden_dim").get<int>()};
    ModelParams p = ModelParams::init(dims, doc.at("seed").get<uint64_t>());
    auto fill_matrix = [](Eigen::MatrixXd &m, const std::vector<double> &flat) {
        if (static_cast<size_t>(m.size()) != flat.size())
            throw Error("checkpoint tensor size mismatch");
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j)
                m(i, j) = flat[static_cast<size_t>(i) * static_cast<size_t>(m.cols()) +
                               static_cast<size_t>(j)];
    };
    auto soft = doc.at("soft_prompt").get<std::vector<double>>();
    if (static_cast<int>(soft.size()) != dims.soft_len) throw Error("soft prompt size mismatch");
    p.soft_prompt = Eigen::Map<Eigen::VectorXd>(soft.data(), dims.soft_len);
    fill_matrix(p.head_w, doc.at("head_w").get<std::vector<double>>());
    auto b = doc.at("head_b").get<std::vector<double>>();
    if (b.size() != 4) throw Error("head bias size mismatch");
    p.head_b = Eigen::Map<Eigen::Vector4d>(b.data());
    fill_matrix(p.sugg_bilinear, doc.at("sugg_bilinear").get<std::vector<double>>());

    std::vector<BankEntry> bank;
    for (const auto &e : doc.at("bank")) {
        BankEntry be;
        be.text = e.at("text").get<std::string>();
        auto v = e.at("vec").get<std::vector<double>>();
        be.vec = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
        bank.push_back(std::move(be));
    }
    return {std::move(p), std::move(bank)};
}

inline void save_checkpoint(const std::string &path, const ModelParams &p,
                            const std::vector<BankEntry> &bank) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << checkpoint_to_json(p, bank).dump() << "\n";
}

inline std::pair<ModelParams, std::vector<BankEntry>> load_checkpoint(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json doc;
    in >> doc;
    return checkpoint_from_json(doc);
}

} // namespace vulnassess
