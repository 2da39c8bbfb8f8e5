#pragma once

// Austrian A-level grading arithmetic: sub-dimensions -> sections -> final grade.
//
//   K1   = mean(task1.content, task1.structure)
//   K2   = mean(task2.content, task2.structure)
//   K3/1 = mean(task1.style_expression, task1.language_norms)
//   K3/2 = mean(task2.style_expression, task2.language_norms)
//   K3   = mean(K3/1, K3/2)
//   final = Fail if any of K1, K2, K3 is 5, else mean(K1, K2, K3)
//
// Every mean is rounded back onto the integer scale. Rounding is exact: means are
// carried as (sum, count) pairs so that halves are detected without floating error.

#include <optional>
#include <string>
#include <string_view>

#include "aes/types.hpp"

namespace aes {

enum class Rounding {
    HalfToBetter, ///< 2.5 -> 2 (default)
    HalfToWorse,  ///< 2.5 -> 3
};

std::string_view rounding_key(Rounding r);
std::optional<Rounding> parse_rounding(std::string_view s);

/// Rounds a rational average in [1, 5] to the nearest grade. Throws Error when x is
/// outside [1, 5] or not finite.
Grade round_grade(double x, Rounding mode = Rounding::HalfToBetter);

/// Exact variant: rounds sum / count.
Grade round_mean(int sum, int count, Rounding mode = Rounding::HalfToBetter);

Grade section_grade(Grade a, Grade b, Rounding mode = Rounding::HalfToBetter);

/// A failing half is tolerated when the combined grade still rounds to 4 or better.
Grade combine_k3(Grade k3_1, Grade k3_2, Rounding mode = Rounding::HalfToBetter);

/// Final exam grade, or Fail with the names of the failing sections.
struct FinalResult {
    std::optional<Grade> grade; ///< empty means Fail
    std::string fail_reason;    ///< e.g. "k3" or "k1,k3"; empty unless failed

    bool failed() const { return !grade.has_value(); }
    /// Metric value: Fail counts as 5.
    int as_int() const { return grade ? grade->value() : kMaxGrade; }
    bool operator==(const FinalResult&) const = default;
};

FinalResult final_grade(Grade k1, Grade k2, Grade k3, Rounding mode = Rounding::HalfToBetter);

struct SectionScores {
    Grade k1{kMinGrade};
    Grade k2{kMinGrade};
    Grade k3_1{kMinGrade};
    Grade k3_2{kMinGrade};
    Grade k3{kMinGrade};
    bool operator==(const SectionScores&) const = default;
};

struct ExamOutcome {
    SectionScores sections;
    FinalResult final;
    bool operator==(const ExamOutcome&) const = default;
};

/// Full aggregation of eight sub-dimension grades. Throws Error if any grade is out
/// of range.
ExamOutcome aggregate(const SubGrades& sub, Rounding mode = Rounding::HalfToBetter);

} // namespace aes
