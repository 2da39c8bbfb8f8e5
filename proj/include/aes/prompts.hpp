#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "aes/corpus.hpp"

namespace aes {

/// Named German prompt templates with `{{placeholder}}` substitution. The defaults
/// are the files under templates/ compiled into the library; a directory of *.txt
/// files can replace any subset of them at run time.
class PromptTemplates {
public:
    /// The compiled-in defaults.
    static PromptTemplates defaults();

    /// Defaults overlaid with every *.txt file found in `dir`.
    static PromptTemplates with_overrides(const std::filesystem::path& dir);

    void set(std::string name, std::string text);
    const std::string& get(std::string_view name) const;

    /// Substitutes every `{{key}}`. Throws Error for a placeholder without a value or
    /// an unknown template name.
    std::string render(std::string_view name, const std::map<std::string, std::string>& vars) const;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

/// Teacher-side grades for one calibration or reference exam. `scope` is 0 for both
/// tasks, otherwise the single task position shown.
std::string render_gold_block(const PromptTemplates& tpl, std::string_view exam_id, int scope,
                              const SubGrades& gold);

/// System prompt: grader role, task summaries, all rubric descriptors for both text
/// types, failure semantics and the literal output schema. With `cot`, also asks for
/// criterion-by-criterion reasoning before the JSON. Throws Error if the rubric lacks
/// an entry, naming (type, dimension).
std::string build_system_prompt(const PromptTemplates& tpl, const RubricSet& rubric,
                                TextType task1, TextType task2, bool cot = false);

} // namespace aes
