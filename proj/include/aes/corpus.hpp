#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aes/grading.hpp"
#include "aes/types.hpp"

namespace aes {

struct TaskText {
    TextType text_type{TextType::LiteraryInterpretation};
    std::string body;   ///< normalized
    int word_count = 0; ///< whitespace-separated tokens of body
};

/// Human gold grades. The eight sub-dimension grades are mandatory; the stored
/// section and final grades are optional and, when present, are cross-checked
/// against recomputation. A stored final of 5 and "fail" mean the same thing.
struct GoldGrades {
    SubGrades sub;
    std::optional<int> k1, k2, k3_1, k3_2, k3;
    std::optional<int> final;
    bool operator==(const GoldGrades&) const = default;
};

struct ExamRecord {
    std::string id;
    int year = 0;
    std::string pack;
    std::array<TaskText, 2> tasks;
    GoldGrades gold;

    const TaskText& task(int position) const {
        return tasks.at(static_cast<std::size_t>(position - 1));
    }
};

struct CorpusOptions {
    /// Keep records whose stored aggregates disagree with recomputation and use the
    /// stored values as gold.
    bool trust_stored_grades = false;
    Rounding rounding = Rounding::HalfToBetter;
};

struct ValidationResult {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Range and consistency checks on a structurally parsed record.
ValidationResult validate_record(const ExamRecord& record, const CorpusOptions& opts = {});

/// Gold final grade used for scoring: the stored value when present, else the
/// recomputed one. Fail maps to 5.
int gold_final(const ExamRecord& record, Rounding mode = Rounding::HalfToBetter);

/// Collapses whitespace runs, joins soft hyphenation across line breaks, strips
/// control characters and keeps paragraph breaks as a single blank line. Idempotent.
std::string normalize_text(std::string_view raw);

int count_words(std::string_view normalized);

struct LoadError {
    std::string file;
    std::string message;
};

/// Immutable, id-sorted collection of exam records.
class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<ExamRecord> records);

    const std::vector<ExamRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const ExamRecord* find(std::string_view id) const;
    const ExamRecord& at(std::string_view id) const;

    /// Records of one (year, pack) in id order.
    std::vector<const ExamRecord*> pack(int year, std::string_view pack) const;

    Rounding rounding() const { return rounding_; }
    void set_rounding(Rounding r) { rounding_ = r; }

private:
    std::vector<ExamRecord> records_;
    Rounding rounding_ = Rounding::HalfToBetter;
};

struct CorpusLoad {
    Corpus corpus;
    std::vector<LoadError> errors;
};

/// Loads every *.json file in `dir` (non-recursive, filename order). Throws Error if
/// the directory cannot be read; per-file problems are collected in `errors`.
CorpusLoad load_corpus(const std::filesystem::path& dir, const CorpusOptions& opts = {});

/// Structural parse of one exam document. Throws Error naming the offending field.
ExamRecord parse_exam(const nlohmann::json& doc);

nlohmann::json exam_to_json(const ExamRecord& record);
/// Canonical serialization; equal corpora serialize to identical strings.
std::string serialize_corpus(const Corpus& corpus);

struct RubricEntry {
    TextType text_type{TextType::LiteraryInterpretation};
    std::string summary;
    /// dimension -> grade (1..4) -> descriptor
    std::map<Dimension, std::map<int, std::string>> descriptors;
};

class RubricSet {
public:
    void add(RubricEntry entry);
    bool contains(TextType t) const { return entries_.count(t) != 0; }
    const RubricEntry& at(TextType t) const;
    /// Throws Error naming (type, dimension, grade) if any descriptor 1..4 is missing.
    const std::string& descriptor(TextType t, Dimension d, int grade) const;
    const std::map<TextType, RubricEntry>& entries() const { return entries_; }

private:
    std::map<TextType, RubricEntry> entries_;
};

RubricEntry parse_rubric(const nlohmann::json& doc);
nlohmann::json rubric_to_json(const RubricEntry& entry);
/// Loads every *.json rubric file in `dir`. Throws Error on any malformed file.
RubricSet load_rubrics(const std::filesystem::path& dir);

/// Checks that every text type used by the corpus has descriptors 1..4 for all four
/// dimensions. Returns human-readable problems.
std::vector<std::string> check_rubric_coverage(const RubricSet& rubrics, const Corpus& corpus);

} // namespace aes
