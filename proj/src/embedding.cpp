#include "aes/embedding.hpp"

#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "aes/corpus.hpp"

namespace aes {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.values.size() != b.values.size()) {
        throw Error("embedding length mismatch: " + std::to_string(a.values.size()) + " vs " +
                    std::to_string(b.values.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error("cosine similarity of zero-norm embedding");
    }
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

EmbeddingVector Embedder::embed(std::string_view text) const {
    const std::string normalized = normalize_text(text);
    if (normalized.empty()) {
        throw Error("cannot embed empty text");
    }
    return embed_normalized(normalized);
}

FallbackEmbedder::FallbackEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) {
        throw Error("fallback embedding dimension must be positive");
    }
}

std::string FallbackEmbedder::identity() const {
    return "fallback-hash-" + std::to_string(dim_);
}

EmbeddingVector FallbackEmbedder::embed_normalized(const std::string& text) const {
    EmbeddingVector v;
    v.source = EmbeddingSource::DeterministicFallback;
    v.values.assign(dim_, 0.0);

    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (c == ' ' || c == '\n') {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }

    const auto add = [&](std::string_view feature, double weight) {
        const std::uint64_t h = fnv1a64(feature);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        v.values[h % dim_] += sign * weight;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add(tokens[i], 1.0);
        if (i + 1 < tokens.size()) {
            add(tokens[i] + "\x1f" + tokens[i + 1], 0.5);
        }
    }

    // Signed buckets can cancel; a text-dependent bias keeps the norm positive.
    double norm = 0.0;
    for (double x : v.values) {
        norm += x * x;
    }
    if (norm == 0.0) {
        v.values[fnv1a64(text) % dim_] = 1.0;
    }
    return v;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), model_(std::move(model)), timeout_(timeout) {}

std::string HttpEmbedder::identity() const { return "http:" + base_url_ + "#" + model_; }

EmbeddingVector HttpEmbedder::embed_normalized(const std::string& text) const {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(timeout_);
    cli.set_read_timeout(timeout_);
    const nlohmann::json body = {{"model", model_}, {"input", text}};
    auto res = cli.Post("/api/embed", body.dump(), "application/json");
    if (!res) {
        throw Error("embedding endpoint " + base_url_ + " unreachable: " +
                    httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error("embedding endpoint " + base_url_ + " returned status " +
                    std::to_string(res->status));
    }
    EmbeddingVector v;
    v.source = EmbeddingSource::RemoteModel;
    try {
        const auto reply = nlohmann::json::parse(res->body);
        v.values = reply.at("embeddings").at(0).get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("embedding endpoint " + base_url_ + " returned malformed body: " + e.what());
    }
    if (v.values.empty()) {
        throw Error("embedding endpoint " + base_url_ + " returned an empty vector");
    }
    return v;
}

} // namespace aes
