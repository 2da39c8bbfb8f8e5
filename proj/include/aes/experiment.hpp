#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aes/config.hpp"
#include "aes/corpus.hpp"
#include "aes/embedding.hpp"
#include "aes/metrics.hpp"
#include "aes/prompts.hpp"
#include "aes/retrieval.hpp"
#include "aes/script.hpp"
#include "aes/session.hpp"

namespace aes {

/// Thread-safe line logger; a null stream discards.
class RunLog {
public:
    explicit RunLog(std::ostream* out = nullptr) : out_(out) {}
    void line(const std::string& msg) const;

private:
    std::ostream* out_;
    mutable std::mutex mu_;
};

struct PreparedScript {
    ContextSelection context;
    ConversationScript script;
    std::vector<std::string> dropped; ///< log lines for texts removed to fit the budget
};

/// Corpus, rubric, templates and retrieval state for one configuration.
class Experiment {
public:
    /// Loads everything the config points at. Records rejected by the corpus loader are
    /// logged and left out. Throws Error when nothing usable remains or the rubric does
    /// not cover the corpus.
    explicit Experiment(ExperimentConfig cfg, const RunLog* log = nullptr);
    /// For tests: an in-memory corpus and rubric.
    Experiment(ExperimentConfig cfg, Corpus corpus, RubricSet rubric,
               PromptTemplates templates = PromptTemplates::defaults(), const RunLog* log = nullptr);

    const ExperimentConfig& config() const { return cfg_; }
    const Corpus& corpus() const { return corpus_; }
    const RubricSet& rubric() const { return rubric_; }
    const PromptTemplates& templates() const { return templates_; }
    const std::vector<LoadError>& load_errors() const { return load_errors_; }

    ContextStrategy strategy_for_candidate(const ExamRecord& candidate) const;
    ContextSelection context_for(const ExamRecord& candidate) const;

    /// Context and script for one candidate, trimmed to the token budget: references
    /// go from the end (lowest similarity first when scored), calibration exams from
    /// the end; at least one calibration exam is kept.
    PreparedScript script_for(const ExamRecord& candidate) const;

    /// Grades every exam with up to `parallelism` concurrent conversations. Transport
    /// failures mark the candidate errored. Results are in corpus order.
    std::vector<GradeOutcome> grade_all(const ChatClient& client) const;

private:
    void init();

    ExperimentConfig cfg_;
    const RunLog* log_;
    Corpus corpus_;
    RubricSet rubric_;
    PromptTemplates templates_;
    std::vector<LoadError> load_errors_;
    ExemplarManifest manifest_;
    std::unique_ptr<Embedder> embedder_;
    std::unique_ptr<SimilarityIndex> index_;
};

std::unique_ptr<ChatClient> make_client(const ExperimentConfig& cfg, const Corpus* corpus);

struct RunResult {
    EvaluationReport report;
    std::vector<GradeOutcome> outcomes;
};

/// Full run: probe the client, grade, score, and write predictions.jsonl,
/// transcripts/<id>.json, run.json and the report files into output.dir. Uses the
/// configured client unless one is passed in. Throws Error or TransportError on fatal
/// problems.
RunResult run_experiment(const ExperimentConfig& cfg, const ChatClient* client = nullptr,
                         const RunLog* log = nullptr);

/// One JSON object per line: exam_id, technique, status, attempts, grades, final,
/// failure_reason, raw.
std::string prediction_line(const GradeOutcome& o, const std::string& technique);
void write_predictions(const std::filesystem::path& file, const std::vector<GradeOutcome>& outcomes,
                       const std::string& technique);

struct StoredPredictions {
    std::string technique;
    std::vector<GradeOutcome> outcomes;
};

/// Reads prediction files, grouping by technique in first-seen order. Valid rows get
/// their outcome recomputed with `rounding`. Throws Error naming file and line.
std::vector<StoredPredictions> read_predictions(const std::vector<std::filesystem::path>& files,
                                                Rounding rounding = Rounding::HalfToBetter);

} // namespace aes
