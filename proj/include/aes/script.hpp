#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aes/chat_client.hpp"
#include "aes/corpus.hpp"
#include "aes/prompts.hpp"
#include "aes/retrieval.hpp"

namespace aes {

// Conversation turns. Content is rendered when the script is built; the session only
// decides when to call the model.
struct StaticUser {
    std::string content;
};
struct CalibrationUser {
    std::string exam_id;
    int scope = 0; ///< 0 = both tasks, else the task position shown
    int level = 0;
    std::string content;
};
struct AwaitModelGuess {};
struct RevealGold {
    std::string exam_id;
    int scope = 0;
    SubGrades gold{};
    std::string content;
};
struct CandidateUser {
    std::string content;
};

using Turn = std::variant<StaticUser, CalibrationUser, AwaitModelGuess, RevealGold, CandidateUser>;

enum class ScriptMode { ZeroShot, FewShot, FewShotCot };

struct ConversationScript {
    std::string system;
    std::vector<Turn> turns;
    ScriptMode mode = ScriptMode::ZeroShot;

    /// Everything sent to the model regardless of its replies: the system prompt and
    /// every user turn, in order.
    std::vector<ChatMessage> outbound_messages() const;
    std::size_t count_reveals() const;
    std::size_t count_calibrations() const;
};

/// Checks the structural rules: zero-shot has no guess/reveal turns; few-shot repeats
/// CalibrationUser, AwaitModelGuess, RevealGold and ends with exactly one
/// CandidateUser. Returns the violations found.
std::vector<std::string> validate_script(const ConversationScript& script);

/// Rough size of the conversation at four characters per token.
std::size_t estimate_tokens(const ConversationScript& script);

enum class OrderingScheme {
    Base,       ///< best to worst (1 -> 5)
    Inverted,   ///< worst to best (5 -> 1)
    Mixed15243, ///< alternating extremes: 1, 5, 2, 4, 3
    Mixed153,   ///< best, worst, middle: 1, 5, 3
};

std::string_view ordering_key(OrderingScheme s);
std::optional<OrderingScheme> parse_ordering(std::string_view s);

/// One calibration exam with the task scope it is shown for.
struct CalibrationItem {
    const ExamRecord* exam = nullptr;
    int scope = 0;
    int level = 0;
};

/// Groups consecutive entries of one exam into calibration items; noise is ignored.
std::vector<CalibrationItem> calibration_items(const ContextSelection& selection,
                                               const Corpus& corpus);

/// Orders items by level for the scheme. Base is a stable sort by level, Inverted its
/// exact reverse; the mixed schemes pick from both ends of the Base order. Mixed153
/// keeps at most three items. Runs of different scope are ordered independently.
std::vector<CalibrationItem> order_calibration(const std::vector<CalibrationItem>& items,
                                               OrderingScheme scheme);

struct ScriptInputs {
    const PromptTemplates* templates = nullptr;
    const RubricSet* rubric = nullptr;
};

/// System message plus one user message: references with their gold grades, noise
/// documents, then the candidate's two texts and the grading instruction.
ConversationScript build_zero_shot(const ExamRecord& candidate, const ContextSelection& ctx,
                                   const ScriptInputs& in);

/// System message, then per calibration item (in scheme order) CalibrationUser,
/// AwaitModelGuess, RevealGold, then the candidate. Noise documents from `noise` are
/// placed in the candidate message. Throws Error for an empty calibration list.
ConversationScript build_few_shot_script(const std::vector<CalibrationItem>& calibration,
                                         OrderingScheme scheme, const ExamRecord& candidate,
                                         bool cot, const ScriptInputs& in,
                                         const ContextSelection* noise = nullptr);

} // namespace aes
