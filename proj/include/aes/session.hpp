#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aes/assessment.hpp"
#include "aes/chat_client.hpp"
#include "aes/grading.hpp"
#include "aes/prompts.hpp"
#include "aes/script.hpp"

namespace aes {

/// The model's guess for one calibration exam, before the gold was revealed.
struct CalibrationGuess {
    std::string exam_id;
    int scope = 0;
    ModelAssessment guess;
};

enum class OutcomeStatus { Valid, Invalid, Errored };

std::string_view outcome_status_key(OutcomeStatus s);

struct GradeOutcome {
    std::string exam_id;
    ModelAssessment assessment;
    std::optional<ExamOutcome> outcome; ///< set when the assessment is valid
    std::vector<ChatMessage> transcript;
    int attempts = 0;
    std::vector<CalibrationGuess> guesses;
    OutcomeStatus status = OutcomeStatus::Invalid;
    std::string error;

    bool valid() const { return status == OutcomeStatus::Valid; }
};

/// Drives one conversation. Calibration guesses are requested at every
/// AwaitModelGuess; an invalid final reply is retried up to `retries` times with the
/// reformat template. Throws TransportError carrying the transcript so far. The
/// returned outcome has no exam id; the caller knows which candidate it graded.
GradeOutcome grade_candidate(const ChatClient& client, const ConversationScript& script,
                             const PromptTemplates& templates, int retries = 0,
                             Rounding rounding = Rounding::HalfToBetter);

} // namespace aes
