#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "aes/chat_client.hpp"
#include "aes/grading.hpp"
#include "aes/retrieval.hpp"
#include "aes/script.hpp"

namespace aes {

enum class TechniqueKind {
    Baseline,
    RagBestAvgWorst,
    RagMostSimilar,
    RagRange,
    FewAllGrades,
    FewBestWorst,
    FewMixed,
    CotBestWorst,
};

struct Technique {
    TechniqueKind kind = TechniqueKind::Baseline;
    int k = 1; ///< rag_most_similar
    int n = 1; ///< rag_range

    bool few_shot() const;
    bool cot() const { return kind == TechniqueKind::CotBestWorst; }
    bool operator==(const Technique&) const = default;
};

/// Config name, e.g. "rag_most_similar".
std::string_view technique_key(TechniqueKind kind);
/// Accepts "rag_most_similar" or "rag_most_similar(4)" (and likewise for rag_range).
std::optional<Technique> parse_technique(std::string_view s);
/// Table row label: baseline, RAG-4-best, RAG-5-grade, RAG-best-worst, Few-all-grades,
/// Few-best-worst, Few-mixed, CoT-best-worst.
std::string technique_label(const Technique& t);

/// Context strategy for a technique. Few-shot techniques select their calibration
/// exemplars through AllGrades levels.
ContextStrategy strategy_for(const Technique& t, int noise_count = 0, std::uint64_t noise_seed = 0);

struct ExperimentConfig {
    std::filesystem::path corpus_path = "corpus";
    std::filesystem::path rubric_path = "rubrics";
    Technique technique;
    OrderingScheme ordering = OrderingScheme::Base;

    std::string client_kind = "http"; ///< "http" or "mock"
    std::string client_policy = "echo_gold";
    HttpChatSettings http;
    int retries = 0;

    int noise_count = 0;
    std::uint64_t noise_seed = 1;

    int parallelism = 1;
    std::size_t token_budget = 128000; ///< 0 disables the check

    std::filesystem::path output_dir = "out";
    std::optional<std::filesystem::path> prompts_dir;

    std::string embedding_base_url = "http://localhost:11434";
    std::string embedding_model = "nomic-embed-text";
    bool embedding_fallback = true;
    std::size_t embedding_dim = 128;

    Rounding rounding = Rounding::HalfToBetter;
    bool trust_stored_grades = false;
    std::optional<std::filesystem::path> calibration_manifest;

    /// Throws Error for out-of-range values.
    void validate() const;
};

/// Flat "key = value" lines; '#' starts a comment. Unknown keys and malformed values
/// throw Error naming the line. Relative paths are resolved against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& file);

/// Every key with its effective value, sorted by key, one "key = value" per line.
std::string config_to_text(const ExperimentConfig& cfg);

/// Documented defaults, as printed by `run --print-defaults`.
std::string default_config_text();

/// 16 hex digits of FNV-1a over the effective settings that influence results
/// (output.dir and runner.parallelism are left out).
std::string config_hash(const ExperimentConfig& cfg);

} // namespace aes
