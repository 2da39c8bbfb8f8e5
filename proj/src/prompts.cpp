#include "aes/prompts.hpp"

#include <fstream>
#include <sstream>

#include "aes/default_templates.hpp"

namespace aes {
namespace {

std::string strip_final_newline(std::string text) {
    if (!text.empty() && text.back() == '\n') {
        text.pop_back();
    }
    return text;
}

std::string grade_line(int position, const TaskGrades& g) {
    std::string line = "Aufgabe " + std::to_string(position) + ": ";
    for (Dimension d : kAllDimensions) {
        if (d != Dimension::Content) {
            line += ", ";
        }
        line += std::string(dimension_german(d)) + " " + std::to_string(g[d]);
    }
    return line;
}

} // namespace

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    for (const auto& [name, text] : detail::kDefaultTemplates) {
        t.set(std::string(name), strip_final_newline(std::string(text)));
    }
    return t;
}

PromptTemplates PromptTemplates::with_overrides(const std::filesystem::path& dir) {
    PromptTemplates t = defaults();
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw Error("prompt template directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") {
            continue;
        }
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        t.set(entry.path().stem().string(), strip_final_newline(buf.str()));
    }
    return t;
}

void PromptTemplates::set(std::string name, std::string text) {
    templates_[std::move(name)] = std::move(text);
}

const std::string& PromptTemplates::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw Error("unknown prompt template: " + std::string(name));
    }
    return it->second;
}

std::string PromptTemplates::render(std::string_view name,
                                    const std::map<std::string, std::string>& vars) const {
    const std::string& text = get(name);
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find("{{", pos);
        if (open == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        const std::size_t close = text.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, open - pos);
        const std::string key = text.substr(open + 2, close - open - 2);
        auto it = vars.find(key);
        if (it == vars.end()) {
            throw Error("template " + std::string(name) + " has no value for {{" + key + "}}");
        }
        out += it->second;
        pos = close + 2;
    }
    return out;
}

std::string render_gold_block(const PromptTemplates& tpl, std::string_view exam_id, int scope,
                              const SubGrades& gold) {
    std::string grades;
    for (int pos = 1; pos <= 2; ++pos) {
        if (scope != 0 && scope != pos) {
            continue;
        }
        if (!grades.empty()) {
            grades += "\n";
        }
        grades += grade_line(pos, gold.task(pos));
    }
    return tpl.render("gold_block", {{"exam_id", std::string(exam_id)}, {"grades", grades}});
}

std::string build_system_prompt(const PromptTemplates& tpl, const RubricSet& rubric,
                                TextType task1, TextType task2, bool cot) {
    std::string summaries;
    std::string rubric_text;
    const TextType types[] = {task1, task2};
    for (int pos = 1; pos <= 2; ++pos) {
        const TextType type = types[pos - 1];
        if (!rubric.contains(type)) {
            throw Error("rubric missing entry for (" + std::string(text_type_key(type)) + ", " +
                        std::string(dimension_key(Dimension::Content)) + ")");
        }
        const RubricEntry& entry = rubric.at(type);
        if (pos > 1) {
            summaries += "\n";
            rubric_text += "\n";
        }
        summaries += tpl.render("task_summary", {{"position", std::to_string(pos)},
                                                 {"text_type", std::string(text_type_german(type))},
                                                 {"text_type_en", std::string(text_type_name(type))},
                                                 {"summary", entry.summary}});
        rubric_text += "Aufgabe " + std::to_string(pos) + " – " +
                       std::string(text_type_german(type)) + "\n";
        for (Dimension d : kAllDimensions) {
            auto dim = entry.descriptors.find(d);
            if (dim == entry.descriptors.end()) {
                throw Error("rubric missing entry for (" + std::string(text_type_key(type)) +
                            ", " + std::string(dimension_key(d)) + ")");
            }
            rubric_text += "  " + std::string(dimension_german(d)) + ":\n";
            for (int g = 1; g <= 4; ++g) {
                auto it = dim->second.find(g);
                if (it == dim->second.end()) {
                    throw Error("rubric missing entry for (" + std::string(text_type_key(type)) +
                                ", " + std::string(dimension_key(d)) + ", grade " +
                                std::to_string(g) + ")");
                }
                rubric_text += "    Note " + std::to_string(g) + ": " + it->second + "\n";
            }
        }
    }
    return tpl.render("system", {{"task_summaries", summaries},
                                 {"rubric", rubric_text},
                                 {"cot_instruction", cot ? tpl.get("cot") : std::string()},
                                 {"output_schema", tpl.get("output_schema")}});
}

} // namespace aes
