#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aes/corpus.hpp"
#include "aes/session.hpp"

namespace aes {

/// Paired predicted and human grades, each in [1, 5].
struct GradeSeries {
    std::vector<int> predicted;
    std::vector<int> gold;

    std::size_t size() const { return gold.size(); }
    /// Throws Error on unequal lengths, an empty series or out-of-range values.
    void validate() const;
};

/// Quadratic weighted kappa over the fixed categories 1..5. When the expected
/// disagreement is zero, returns 1.0 for identical series and 0.0 otherwise.
/// Throws Error for fewer than two pairs.
double qwk(const GradeSeries& s);
bool qwk_degenerate(const GradeSeries& s);

double mae(const GradeSeries& s);

/// Pearson correlation; empty when either series has zero variance.
std::optional<double> pcc(const GradeSeries& s);

/// confusion[h - 1][m - 1] counts pairs with human grade h and model grade m.
using ConfusionMatrix = std::array<std::array<int, kGradeCount>, kGradeCount>;

struct AccuracyConfusion {
    double accuracy = 0.0;
    ConfusionMatrix confusion{};
};

AccuracyConfusion accuracy_and_confusion(const GradeSeries& s);

/// Report dimensions in table order: "final", then task1.* and task2.* in the order
/// content, structure, language_norms, style_expression.
const std::vector<std::string>& report_dimensions();

struct DimensionReport {
    std::string dimension;
    std::optional<double> qwk; ///< undefined below two pairs
    std::optional<double> mae;
    std::optional<double> pcc;
    std::optional<double> accuracy;
    ConfusionMatrix confusion{};
    int n = 0;
    int invalid_count = 0;
    bool qwk_degenerate = false; ///< value came from the constant-series convention
};

struct TechniqueReport {
    std::string technique;
    std::vector<DimensionReport> dimensions; ///< in report_dimensions() order
    int valid = 0;
    int invalid = 0; ///< includes errored candidates
    int errored = 0;

    const DimensionReport& at(std::string_view dimension) const;
};

struct RunMetadata {
    std::string started_at;
    std::string finished_at;
    std::string config_hash;
    std::string client_identity;
    std::string transcripts_dir;
};

struct EvaluationReport {
    std::vector<TechniqueReport> techniques;
    RunMetadata metadata;
};

/// Scores outcomes against the corpus gold. Invalid and errored outcomes are left out
/// of the metric pairs and counted in invalid_count. Throws Error for an empty list or
/// an exam id missing from the corpus.
TechniqueReport build_report(std::string technique, const std::vector<GradeOutcome>& outcomes,
                             const Corpus& corpus);

} // namespace aes
