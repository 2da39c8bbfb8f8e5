#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "aes/types.hpp"

namespace aes {

/// A model's grade sheet. `valid` holds iff all eight grades were present and in
/// [1, 5]; otherwise `failure_reason` says why.
struct ModelAssessment {
    SubGrades grades{};
    std::array<std::string, 2> feedback;
    std::string raw;
    bool valid = false;
    std::string failure_reason;

    bool operator==(const ModelAssessment&) const = default;
};

/// Locates the first complete JSON object in free text (surrounding prose and code
/// fences are skipped) and returns it parsed, if any.
std::optional<nlohmann::json> extract_json_object(std::string_view raw);

/// Never throws; problems are reported through `valid` / `failure_reason`.
ModelAssessment parse_assessment(std::string_view raw);

/// Schema instance {"task1": {...}, "task2": {...}} for a grade sheet.
nlohmann::json assessment_to_json(const SubGrades& grades,
                                  const std::array<std::string, 2>& feedback);
std::string serialize_assessment(const ModelAssessment& a);

} // namespace aes
