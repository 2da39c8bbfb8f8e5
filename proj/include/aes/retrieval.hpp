#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aes/corpus.hpp"
#include "aes/embedding.hpp"

namespace aes {

/// One reference text handed to the model. Noise documents carry no grades.
struct ContextEntry {
    std::string exam_id;
    int task_position = 0; ///< 1 or 2; 0 for noise documents
    TextType text_type{TextType::LiteraryInterpretation};
    std::string body;
    TaskGrades gold{};
    int final_grade = 0; ///< exam final, Fail as 5
    int level = 0;       ///< calibration grade level used for ordering
    std::optional<double> similarity;
    bool is_noise = false;
};

struct ContextSelection {
    std::vector<ContextEntry> entries;
    /// Fewer references than requested were available.
    bool underfilled = false;
    /// Range-of-examples: kept texts per final grade 1..5.
    std::array<int, kGradeCount> coverage{};
    std::vector<std::string> notes;

    std::size_t reference_count() const;
    std::size_t noise_count() const;
};

// Per-task strategy alternatives.
struct Baseline {
    bool operator==(const Baseline&) const = default;
};
struct BestAverageWorst {
    bool operator==(const BestAverageWorst&) const = default;
};
struct MostSimilar {
    int k = 1;
    bool operator==(const MostSimilar&) const = default;
};
struct RangeOfExamples {
    int n = 1;
    bool operator==(const RangeOfExamples&) const = default;
};
/// Exemplars at grade levels 1..5 (or a subset, for calibration).
struct AllGrades {
    std::vector<int> levels{1, 2, 3, 4, 5};
    bool operator==(const AllGrades&) const = default;
};

using TaskStrategy = std::variant<Baseline, BestAverageWorst, MostSimilar, RangeOfExamples, AllGrades>;

/// Context strategy for a candidate. A uniform strategy uses the same TaskStrategy for
/// both tasks; a per-task mix holds two different ones. Mixing cannot nest by
/// construction.
struct ContextStrategy {
    TaskStrategy task1 = Baseline{};
    TaskStrategy task2 = Baseline{};
    int noise_count = 0;
    std::uint64_t noise_seed = 0;

    static ContextStrategy uniform(TaskStrategy s) { return {s, s, 0, 0}; }
    static ContextStrategy mixed(TaskStrategy t1, TaskStrategy t2) { return {t1, t2, 0, 0}; }
    bool is_mixed() const { return !(task1 == task2); }
    bool needs_similarity() const;
    /// Throws Error for k < 1, n < 1, empty or out-of-range levels, negative noise.
    void validate() const;
};

std::string describe(const TaskStrategy& s);

/// Exemplar ids per (year, pack, grade level), curated by hand.
class ExemplarManifest {
public:
    /// {"<year>/<pack>": {"1": "<exam id>", ...}, ...}
    static ExemplarManifest load(const std::filesystem::path& file);
    void set(int year, const std::string& pack, int level, std::string id);
    std::optional<std::string> lookup(int year, const std::string& pack, int level) const;

private:
    std::map<std::string, std::map<int, std::string>> by_pack_;
};

/// Exact full-scan similarity index over all (exam, task position) bodies. Immutable
/// after construction; queries are safe from multiple threads.
class SimilarityIndex {
public:
    /// Embeds every task body, with up to `parallelism` concurrent embedder calls.
    SimilarityIndex(const Corpus& corpus, const Embedder& embedder, int parallelism = 1);

    struct Scored {
        const ExamRecord* exam;
        double similarity;
    };

    /// Pool of the same (year, pack, task position) minus the candidate, in
    /// descending similarity to the candidate's task body; ties by ascending id.
    std::vector<Scored> rank(const ExamRecord& candidate, int position) const;

    const EmbeddingVector& vector_of(std::string_view exam_id, int position) const;
    const Corpus& corpus() const { return *corpus_; }

private:
    const Corpus* corpus_;
    const Embedder* embedder_;
    std::map<std::pair<std::string, int>, EmbeddingVector, std::less<>> vectors_;
};

/// Best (lowest final, then lowest sub-grade sum, then id), most average (smallest L1
/// distance to the pack's per-dimension means, then id) and worst (highest final,
/// then highest sum, then id) exam of a pack, in that order, both tasks each.
/// `exclude_id` removes one exam from the pool first. Throws Error if fewer than
/// three exams remain.
ContextSelection select_best_average_worst(const Corpus& corpus, int year, const std::string& pack,
                                           const std::string& exclude_id = {});

/// Top-k task texts by cosine similarity (leave-one-out). Sets `underfilled` when the
/// pool is smaller than k.
ContextSelection select_most_similar(const SimilarityIndex& index, const ExamRecord& candidate,
                                     int k, int position);

/// Descending-similarity scan keeping a text while its final grade has fewer than n
/// kept texts; stops once every grade has n or the pool is exhausted.
ContextSelection select_range_of_examples(const SimilarityIndex& index,
                                          const ExamRecord& candidate, int n, int position);

/// One exemplar per requested level: the manifest entry when present, otherwise the
/// exam whose eight grades are closest (L1) to the uniform vector of that level.
/// Exemplars are distinct and never the excluded exam. Levels whose pool is empty are
/// skipped and flagged as underfilled. Entries cover both tasks, exam-major.
ContextSelection select_exemplars(const Corpus& corpus, int year, const std::string& pack,
                                  const std::vector<int>& levels, const std::string& exclude_id,
                                  const ExemplarManifest* manifest = nullptr);

/// Appends `count` random-word documents drawn with a seeded generator.
ContextSelection inject_noise(ContextSelection selection, int count, std::uint64_t seed);

/// Restricts an exam-major selection to one task position.
ContextSelection restrict_to_task(const ContextSelection& selection, int position);

struct RetrievalContext {
    const Corpus* corpus = nullptr;
    const SimilarityIndex* index = nullptr; ///< required for similarity strategies
    const ExemplarManifest* manifest = nullptr;
};

/// Full context for a candidate: uniform exam-level strategies produce exam-major
/// entries covering both tasks; everything else is task 1 entries followed by task 2
/// entries. Noise is appended last.
ContextSelection select_context(const ContextStrategy& strategy, const RetrievalContext& ctx,
                                const ExamRecord& candidate);

} // namespace aes
