#include "aes/grading.hpp"

#include <cmath>

namespace aes {

std::string_view rounding_key(Rounding r) {
    return r == Rounding::HalfToBetter ? "half_to_better" : "half_to_worse";
}

std::optional<Rounding> parse_rounding(std::string_view s) {
    if (s == "half_to_better") {
        return Rounding::HalfToBetter;
    }
    if (s == "half_to_worse") {
        return Rounding::HalfToWorse;
    }
    return std::nullopt;
}

Grade round_grade(double x, Rounding mode) {
    if (!std::isfinite(x) || x < kMinGrade || x > kMaxGrade) {
        throw Error("cannot round grade average outside [1,5]: " + std::to_string(x));
    }
    const double lower = std::floor(x);
    const double frac = x - lower;
    if (frac == 0.5) {
        return Grade(static_cast<int>(mode == Rounding::HalfToBetter ? lower : lower + 1));
    }
    return Grade(static_cast<int>(frac < 0.5 ? lower : lower + 1));
}

Grade round_mean(int sum, int count, Rounding mode) {
    if (count <= 0 || sum < kMinGrade * count || sum > kMaxGrade * count) {
        throw Error("cannot round grade mean " + std::to_string(sum) + "/" +
                    std::to_string(count));
    }
    const int quotient = sum / count;
    const int twice_rem = 2 * (sum % count);
    if (twice_rem < count) {
        return Grade(quotient);
    }
    if (twice_rem > count) {
        return Grade(quotient + 1);
    }
    return Grade(mode == Rounding::HalfToBetter ? quotient : quotient + 1);
}

Grade section_grade(Grade a, Grade b, Rounding mode) {
    return round_mean(a.value() + b.value(), 2, mode);
}

Grade combine_k3(Grade k3_1, Grade k3_2, Rounding mode) {
    return round_mean(k3_1.value() + k3_2.value(), 2, mode);
}

FinalResult final_grade(Grade k1, Grade k2, Grade k3, Rounding mode) {
    FinalResult result;
    const std::pair<std::string_view, Grade> sections[] = {{"k1", k1}, {"k2", k2}, {"k3", k3}};
    for (const auto& [name, g] : sections) {
        if (g.value() == kMaxGrade) {
            if (!result.fail_reason.empty()) {
                result.fail_reason += ",";
            }
            result.fail_reason += name;
        }
    }
    if (result.fail_reason.empty()) {
        result.grade = round_mean(k1.value() + k2.value() + k3.value(), 3, mode);
    }
    return result;
}

ExamOutcome aggregate(const SubGrades& sub, Rounding mode) {
    const auto g = [&](int task, Dimension d) { return Grade(sub.task(task)[d]); };

    ExamOutcome out;
    auto& s = out.sections;
    s.k1 = section_grade(g(1, Dimension::Content), g(1, Dimension::Structure), mode);
    s.k2 = section_grade(g(2, Dimension::Content), g(2, Dimension::Structure), mode);
    s.k3_1 =
        section_grade(g(1, Dimension::StyleExpression), g(1, Dimension::LanguageNorms), mode);
    s.k3_2 =
        section_grade(g(2, Dimension::StyleExpression), g(2, Dimension::LanguageNorms), mode);
    s.k3 = combine_k3(s.k3_1, s.k3_2, mode);
    out.final = final_grade(s.k1, s.k2, s.k3, mode);
    return out;
}

} // namespace aes
