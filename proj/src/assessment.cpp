#include "aes/assessment.hpp"

#include <cmath>

namespace aes {

using nlohmann::json;

std::optional<json> extract_json_object(std::string_view raw) {
    for (std::size_t start = raw.find('{'); start != std::string_view::npos;
         start = raw.find('{', start + 1)) {
        // Brace matching that respects string literals and escapes.
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::size_t end = std::string_view::npos;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                end = i;
                break;
            }
        }
        if (end == std::string_view::npos) {
            continue;
        }
        auto parsed = json::parse(raw.substr(start, end - start + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            return parsed;
        }
    }
    return std::nullopt;
}

ModelAssessment parse_assessment(std::string_view raw) {
    ModelAssessment a;
    a.raw = std::string(raw);
    const auto fail = [&](std::string reason) {
        a.valid = false;
        a.failure_reason = std::move(reason);
        return a;
    };

    const auto doc = extract_json_object(raw);
    if (!doc) {
        return fail("no JSON object found");
    }
    for (int pos = 1; pos <= 2; ++pos) {
        const std::string task_key = "task" + std::to_string(pos);
        if (!doc->contains(task_key) || !doc->at(task_key).is_object()) {
            return fail("missing task: " + task_key);
        }
        const auto& task = doc->at(task_key);
        for (Dimension d : kAllDimensions) {
            const std::string key(dimension_key(d));
            const std::string where = task_key + "." + key;
            if (!task.contains(key)) {
                return fail("missing grade: " + where);
            }
            const auto& v = task.at(key);
            int grade = 0;
            if (v.is_number_integer()) {
                grade = v.get<int>();
            } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() &&
                       std::abs(v.get<double>()) < 1e6) {
                grade = static_cast<int>(v.get<double>());
            } else {
                return fail("non-integer grade: " + where);
            }
            if (!grade_in_range(grade)) {
                return fail("grade out of range: " + where);
            }
            a.grades.task(pos)[d] = grade;
        }
        if (task.contains("feedback")) {
            const auto& f = task.at("feedback");
            a.feedback[static_cast<std::size_t>(pos - 1)] = f.is_string() ? f.get<std::string>() : f.dump();
        }
    }
    a.valid = true;
    return a;
}

json assessment_to_json(const SubGrades& grades, const std::array<std::string, 2>& feedback) {
    json out = json::object();
    for (int pos = 1; pos <= 2; ++pos) {
        json task = json::object();
        for (Dimension d : kAllDimensions) {
            task[std::string(dimension_key(d))] = grades.task(pos)[d];
        }
        task["feedback"] = feedback[static_cast<std::size_t>(pos - 1)];
        out["task" + std::to_string(pos)] = task;
    }
    return out;
}

std::string serialize_assessment(const ModelAssessment& a) {
    return assessment_to_json(a.grades, a.feedback).dump();
}

} // namespace aes
