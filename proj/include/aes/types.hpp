#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aes {

/// Fatal error raised for unrecoverable conditions (bad input files, unreachable
/// endpoints, precondition violations). Data-level problems are reported as values.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The seven exam text types.
enum class TextType : std::uint8_t {
    DiscussionEssay,
    Commentary,
    LetterToEditor,
    OpinionSpeech,
    TextAnalysis,
    LiteraryInterpretation,
    Summary,
};

inline constexpr std::array<TextType, 7> kAllTextTypes{
    TextType::DiscussionEssay, TextType::Commentary,   TextType::LetterToEditor,
    TextType::OpinionSpeech,   TextType::TextAnalysis, TextType::LiteraryInterpretation,
    TextType::Summary,
};

/// Canonical snake_case key, e.g. "letter_to_editor".
std::string_view text_type_key(TextType t);
/// English display name, e.g. "Letter to the Editor".
std::string_view text_type_name(TextType t);
/// German name as used on the exam sheets, e.g. "Leserbrief".
std::string_view text_type_german(TextType t);
/// Accepts the canonical key, the English name or the German name (case-insensitive).
std::optional<TextType> parse_text_type(std::string_view s);

/// The four rubric dimensions graded per task.
enum class Dimension : std::uint8_t { Content, Structure, LanguageNorms, StyleExpression };

inline constexpr std::array<Dimension, 4> kAllDimensions{
    Dimension::Content, Dimension::Structure, Dimension::LanguageNorms,
    Dimension::StyleExpression};

std::string_view dimension_key(Dimension d);    // "content", "language_norms", ...
std::string_view dimension_german(Dimension d); // "Inhalt", ...
std::optional<Dimension> parse_dimension(std::string_view s);

inline constexpr int kMinGrade = 1;
inline constexpr int kMaxGrade = 5;
inline constexpr int kGradeCount = 5;

constexpr bool grade_in_range(int g) { return g >= kMinGrade && g <= kMaxGrade; }

/// A grade on the Austrian five-point scale, 1 best and 5 worst.
class Grade {
public:
    explicit Grade(int value) : value_(value) {
        if (!grade_in_range(value)) {
            throw Error("grade out of range: " + std::to_string(value));
        }
    }
    constexpr int value() const { return value_; }
    constexpr auto operator<=>(const Grade&) const = default;

private:
    int value_;
};

/// Raw per-task grades as stored in files or returned by a model. Values are plain
/// integers so that out-of-range data can be represented and reported.
struct TaskGrades {
    std::array<int, 4> values{};

    int& operator[](Dimension d) { return values[static_cast<std::size_t>(d)]; }
    int operator[](Dimension d) const { return values[static_cast<std::size_t>(d)]; }
    bool operator==(const TaskGrades&) const = default;

    static constexpr TaskGrades uniform(int g) { return TaskGrades{{g, g, g, g}}; }
};

/// Eight sub-dimension grades: two tasks times four dimensions.
struct SubGrades {
    std::array<TaskGrades, 2> tasks{};

    TaskGrades& task(int position) { return tasks.at(static_cast<std::size_t>(position - 1)); }
    const TaskGrades& task(int position) const {
        return tasks.at(static_cast<std::size_t>(position - 1));
    }
    int sum() const;
    bool all_in_range() const;
    bool operator==(const SubGrades&) const = default;

    static constexpr SubGrades uniform(int g) {
        return SubGrades{{TaskGrades::uniform(g), TaskGrades::uniform(g)}};
    }
};

/// "task1.content" style key for one of the eight sub-dimensions.
std::string sub_dimension_key(int task_position, Dimension d);

} // namespace aes
