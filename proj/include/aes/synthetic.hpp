#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "aes/corpus.hpp"

namespace aes {

struct SyntheticOptions {
    int count = 25;
    std::uint64_t seed = 7;
    /// Relative frequency of base grades 1..5.
    std::array<int, kGradeCount> weights{2, 3, 4, 3, 1};
};

/// German-like filler exams in two task packs (2023 and 2024). Better grades get
/// more connectives, more paragraphs and longer words. Stored sections and finals are
/// consistent with the sub-grades. Same options, same corpus.
Corpus make_synthetic_corpus(const SyntheticOptions& opts);

/// Rubric entries for every text type the synthetic corpus uses.
RubricSet make_synthetic_rubrics();

/// Writes <dir>/exams/<id>.json, <dir>/rubrics/<type>.json and <dir>/experiment.cfg
/// (mock client, fallback embeddings).
void write_synthetic(const std::filesystem::path& dir, const SyntheticOptions& opts);

} // namespace aes
