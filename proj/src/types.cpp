#include "aes/types.hpp"

#include <algorithm>
#include <cctype>

namespace aes {
namespace {

struct TextTypeNames {
    TextType type;
    std::string_view key;
    std::string_view english;
    std::string_view german;
};

constexpr std::array<TextTypeNames, 7> kTextTypeNames{{
    {TextType::DiscussionEssay, "discussion_essay", "Discussion Essay", "Erörterung"},
    {TextType::Commentary, "commentary", "Commentary", "Kommentar"},
    {TextType::LetterToEditor, "letter_to_editor", "Letter to the Editor", "Leserbrief"},
    {TextType::OpinionSpeech, "opinion_speech", "Opinion Speech", "Meinungsrede"},
    {TextType::TextAnalysis, "text_analysis", "Text Analysis", "Textanalyse"},
    {TextType::LiteraryInterpretation, "literary_interpretation", "Literary Interpretation",
     "Textinterpretation"},
    {TextType::Summary, "summary", "Summary", "Zusammenfassung"},
}};

struct DimensionNames {
    Dimension dim;
    std::string_view key;
    std::string_view german;
};

constexpr std::array<DimensionNames, 4> kDimensionNames{{
    {Dimension::Content, "content", "Inhalt"},
    {Dimension::Structure, "structure", "Textstruktur"},
    {Dimension::LanguageNorms, "language_norms", "Normative Sprachrichtigkeit"},
    {Dimension::StyleExpression, "style_expression", "Stil und Ausdruck"},
}};

// ASCII-only case folding; the German names are matched byte-exact apart from that.
bool iequals(std::string_view a, std::string_view b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
        return std::tolower(static_cast<unsigned char>(x)) ==
               std::tolower(static_cast<unsigned char>(y));
    });
}

} // namespace

std::string_view text_type_key(TextType t) {
    return kTextTypeNames[static_cast<std::size_t>(t)].key;
}

std::string_view text_type_name(TextType t) {
    return kTextTypeNames[static_cast<std::size_t>(t)].english;
}

std::string_view text_type_german(TextType t) {
    return kTextTypeNames[static_cast<std::size_t>(t)].german;
}

std::optional<TextType> parse_text_type(std::string_view s) {
    for (const auto& n : kTextTypeNames) {
        if (iequals(s, n.key) || iequals(s, n.english) || iequals(s, n.german)) {
            return n.type;
        }
    }
    return std::nullopt;
}

std::string_view dimension_key(Dimension d) {
    return kDimensionNames[static_cast<std::size_t>(d)].key;
}

std::string_view dimension_german(Dimension d) {
    return kDimensionNames[static_cast<std::size_t>(d)].german;
}

std::optional<Dimension> parse_dimension(std::string_view s) {
    for (const auto& n : kDimensionNames) {
        if (iequals(s, n.key)) {
            return n.dim;
        }
    }
    return std::nullopt;
}

int SubGrades::sum() const {
    int total = 0;
    for (const auto& t : tasks) {
        for (int v : t.values) {
            total += v;
        }
    }
    return total;
}

bool SubGrades::all_in_range() const {
    return std::all_of(tasks.begin(), tasks.end(), [](const TaskGrades& t) {
        return std::all_of(t.values.begin(), t.values.end(), grade_in_range);
    });
}

std::string sub_dimension_key(int task_position, Dimension d) {
    return "task" + std::to_string(task_position) + "." + std::string(dimension_key(d));
}

} // namespace aes
