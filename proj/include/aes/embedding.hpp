#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aes/types.hpp"

namespace aes {

enum class EmbeddingSource : std::uint8_t { RemoteModel, DeterministicFallback };

struct EmbeddingVector {
    std::vector<double> values;
    EmbeddingSource source = EmbeddingSource::DeterministicFallback;
};

/// dot(a, b) / (|a| |b|). Throws Error on length mismatch or a zero norm.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Text embedder. Input is normalized with normalize_text before it reaches the
/// backend, so texts differing only in layout embed identically. Implementations
/// must be safe for concurrent calls.
class Embedder {
public:
    virtual ~Embedder() = default;

    /// Throws Error for text that is empty after normalization.
    EmbeddingVector embed(std::string_view text) const;

    virtual std::string identity() const = 0;

protected:
    virtual EmbeddingVector embed_normalized(const std::string& text) const = 0;
};

/// Offline embedder: signed feature hashing of word unigrams and bigrams into a
/// fixed number of buckets. Deterministic across runs and platforms.
class FallbackEmbedder final : public Embedder {
public:
    explicit FallbackEmbedder(std::size_t dim = 128);
    std::string identity() const override;
    std::size_t dim() const { return dim_; }

protected:
    EmbeddingVector embed_normalized(const std::string& text) const override;

private:
    std::size_t dim_;
};

/// POST {base_url}/api/embed with {"model", "input"}; expects {"embeddings": [[...]]}.
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(std::string base_url, std::string model,
                 std::chrono::seconds timeout = std::chrono::seconds(60));
    std::string identity() const override;

protected:
    EmbeddingVector embed_normalized(const std::string& text) const override;

private:
    std::string base_url_;
    std::string model_;
    std::chrono::seconds timeout_;
};

/// 64-bit FNV-1a, used for feature hashing and configuration fingerprints.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace aes
