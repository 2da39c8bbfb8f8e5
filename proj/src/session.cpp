#include "aes/session.hpp"

namespace aes {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

} // namespace

std::string_view outcome_status_key(OutcomeStatus s) {
    switch (s) {
    case OutcomeStatus::Valid:
        return "valid";
    case OutcomeStatus::Invalid:
        return "invalid";
    case OutcomeStatus::Errored:
        return "errored";
    }
    return "invalid";
}

GradeOutcome grade_candidate(const ChatClient& client, const ConversationScript& script,
                             const PromptTemplates& templates, int retries, Rounding rounding) {
    if (auto problems = validate_script(script); !problems.empty()) {
        throw Error("invalid script: " + problems.front());
    }

    GradeOutcome out;
    auto& messages = out.transcript;
    messages.push_back({"system", script.system});

    const auto ask = [&]() {
        std::string reply;
        try {
            reply = client.complete(messages);
        } catch (const TransportError& e) {
            throw TransportError(e.what(), messages);
        }
        messages.push_back({"assistant", reply});
        return reply;
    };

    std::string pending_exam;
    int pending_scope = 0;
    for (const auto& turn : script.turns) {
        std::visit(overloaded{
                       [&](const AwaitModelGuess&) {
                           out.guesses.push_back({pending_exam, pending_scope, parse_assessment(ask())});
                       },
                       [&](const CalibrationUser& t) {
                           pending_exam = t.exam_id;
                           pending_scope = t.scope;
                           messages.push_back({"user", t.content});
                       },
                       [&](const auto& t) { messages.push_back({"user", t.content}); },
                   },
                   turn);
    }

    out.assessment = parse_assessment(ask());
    out.attempts = 1;
    while (!out.assessment.valid && out.attempts <= retries) {
        messages.push_back(
            {"user", templates.render("reformat", {{"reason", out.assessment.failure_reason}})});
        out.assessment = parse_assessment(ask());
        ++out.attempts;
    }

    if (out.assessment.valid) {
        out.status = OutcomeStatus::Valid;
        out.outcome = aggregate(out.assessment.grades, rounding);
    } else {
        out.status = OutcomeStatus::Invalid;
        out.error = out.assessment.failure_reason;
    }
    return out;
}

} // namespace aes
