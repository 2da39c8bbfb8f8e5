#include "aes/script.hpp"

#include <algorithm>

namespace aes {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string render_task_text(const PromptTemplates& tpl, int position, TextType type,
                             const std::string& body) {
    return tpl.render("task_text", {{"position", std::to_string(position)},
                                    {"text_type", std::string(text_type_german(type))},
                                    {"body", body}});
}

std::string render_candidate(const PromptTemplates& tpl, const ExamRecord& candidate) {
    std::string texts;
    for (int pos = 1; pos <= 2; ++pos) {
        texts += render_task_text(tpl, pos, candidate.task(pos).text_type, candidate.task(pos).body);
        texts += "\n";
    }
    return tpl.render("candidate", {{"texts", texts}, {"instruction", tpl.get("instruction")}});
}

std::string render_noise(const PromptTemplates& tpl, const ContextSelection& ctx) {
    std::string out;
    int index = 0;
    for (const auto& e : ctx.entries) {
        if (!e.is_noise) {
            continue;
        }
        out += tpl.render("noise", {{"index", std::to_string(++index)}, {"body", e.body}});
        out += "\n\n";
    }
    return out;
}

const char* scope_label(int scope) {
    switch (scope) {
    case 1:
        return "Aufgabe 1";
    case 2:
        return "Aufgabe 2";
    default:
        return "beide Aufgaben";
    }
}

void require_inputs(const ScriptInputs& in) {
    if (!in.templates || !in.rubric) {
        throw Error("script inputs need templates and a rubric");
    }
}

} // namespace

std::vector<ChatMessage> ConversationScript::outbound_messages() const {
    std::vector<ChatMessage> out{{"system", system}};
    for (const auto& turn : turns) {
        std::visit(overloaded{
                       [&](const AwaitModelGuess&) {},
                       [&](const auto& t) { out.push_back({"user", t.content}); },
                   },
                   turn);
    }
    return out;
}

std::size_t ConversationScript::count_reveals() const {
    return static_cast<std::size_t>(std::count_if(turns.begin(), turns.end(), [](const Turn& t) {
        return std::holds_alternative<RevealGold>(t);
    }));
}

std::size_t ConversationScript::count_calibrations() const {
    return static_cast<std::size_t>(std::count_if(turns.begin(), turns.end(), [](const Turn& t) {
        return std::holds_alternative<CalibrationUser>(t);
    }));
}

std::vector<std::string> validate_script(const ConversationScript& script) {
    std::vector<std::string> problems;
    const std::size_t n = script.turns.size();
    const std::size_t candidates = static_cast<std::size_t>(
        std::count_if(script.turns.begin(), script.turns.end(),
                      [](const Turn& t) { return std::holds_alternative<CandidateUser>(t); }));
    if (candidates != 1 || n == 0 || !std::holds_alternative<CandidateUser>(script.turns.back())) {
        problems.emplace_back("script must end with exactly one candidate turn");
    }

    if (script.mode == ScriptMode::ZeroShot) {
        for (const auto& t : script.turns) {
            if (std::holds_alternative<AwaitModelGuess>(t) || std::holds_alternative<RevealGold>(t) ||
                std::holds_alternative<CalibrationUser>(t)) {
                problems.emplace_back("zero-shot script contains calibration turns");
                break;
            }
        }
        return problems;
    }

    if (n < 4 || (n - 1) % 3 != 0) {
        problems.emplace_back("few-shot script must be calibration triples plus the candidate");
        return problems;
    }
    for (std::size_t i = 0; i + 1 < n; i += 3) {
        const auto* cal = std::get_if<CalibrationUser>(&script.turns[i]);
        const auto* reveal = std::get_if<RevealGold>(&script.turns[i + 2]);
        if (!cal || !std::holds_alternative<AwaitModelGuess>(script.turns[i + 1]) || !reveal) {
            problems.push_back("calibration triple " + std::to_string(i / 3 + 1) +
                               " is not calibration, guess, reveal");
        } else if (cal->exam_id != reveal->exam_id || cal->scope != reveal->scope) {
            problems.push_back("reveal " + std::to_string(i / 3 + 1) +
                               " does not match its calibration exam");
        }
    }
    return problems;
}

std::size_t estimate_tokens(const ConversationScript& script) {
    std::size_t chars = 0;
    for (const auto& m : script.outbound_messages()) {
        chars += m.content.size();
    }
    return (chars + 3) / 4;
}

std::string_view ordering_key(OrderingScheme s) {
    switch (s) {
    case OrderingScheme::Base:
        return "base";
    case OrderingScheme::Inverted:
        return "inverted";
    case OrderingScheme::Mixed15243:
        return "mixed_15243";
    case OrderingScheme::Mixed153:
        return "mixed_153";
    }
    return "base";
}

std::optional<OrderingScheme> parse_ordering(std::string_view s) {
    for (auto scheme : {OrderingScheme::Base, OrderingScheme::Inverted, OrderingScheme::Mixed15243,
                        OrderingScheme::Mixed153}) {
        if (s == ordering_key(scheme)) {
            return scheme;
        }
    }
    return std::nullopt;
}

std::vector<CalibrationItem> calibration_items(const ContextSelection& selection,
                                               const Corpus& corpus) {
    std::vector<CalibrationItem> items;
    std::string current;
    for (const auto& e : selection.entries) {
        if (e.is_noise) {
            continue;
        }
        if (!items.empty() && e.exam_id == current) {
            items.back().scope = 0;
            continue;
        }
        current = e.exam_id;
        items.push_back({&corpus.at(e.exam_id), e.task_position, e.level});
    }
    return items;
}

namespace {

std::vector<CalibrationItem> order_run(std::vector<CalibrationItem> run, OrderingScheme scheme) {
    std::stable_sort(run.begin(), run.end(),
                     [](const CalibrationItem& a, const CalibrationItem& b) { return a.level < b.level; });
    const std::size_t n = run.size();
    switch (scheme) {
    case OrderingScheme::Base:
        return run;
    case OrderingScheme::Inverted:
        std::reverse(run.begin(), run.end());
        return run;
    case OrderingScheme::Mixed15243: {
        std::vector<CalibrationItem> out;
        std::size_t lo = 0;
        std::size_t hi = n;
        while (lo < hi) {
            out.push_back(run[lo++]);
            if (lo < hi) {
                out.push_back(run[--hi]);
            }
        }
        return out;
    }
    case OrderingScheme::Mixed153: {
        if (n <= 2) {
            return run;
        }
        return {run[0], run[n - 1], run[(n - 1) / 2]};
    }
    }
    return run;
}

} // namespace

std::vector<CalibrationItem> order_calibration(const std::vector<CalibrationItem>& items,
                                               OrderingScheme scheme) {
    std::vector<CalibrationItem> out;
    std::size_t start = 0;
    while (start < items.size()) {
        std::size_t end = start + 1;
        while (end < items.size() && items[end].scope == items[start].scope) {
            ++end;
        }
        auto ordered = order_run({items.begin() + static_cast<std::ptrdiff_t>(start),
                                  items.begin() + static_cast<std::ptrdiff_t>(end)},
                                 scheme);
        out.insert(out.end(), ordered.begin(), ordered.end());
        start = end;
    }
    return out;
}

ConversationScript build_zero_shot(const ExamRecord& candidate, const ContextSelection& ctx,
                                   const ScriptInputs& in) {
    require_inputs(in);
    const PromptTemplates& tpl = *in.templates;

    ConversationScript script;
    script.mode = ScriptMode::ZeroShot;
    script.system = build_system_prompt(tpl, *in.rubric, candidate.task(1).text_type,
                                        candidate.task(2).text_type, false);

    // One reference block per run of entries from the same exam.
    std::string references;
    const auto& entries = ctx.entries;
    for (std::size_t i = 0; i < entries.size();) {
        if (entries[i].is_noise) {
            ++i;
            continue;
        }
        std::size_t j = i;
        std::string texts;
        SubGrades gold{};
        int scope = entries[i].task_position;
        while (j < entries.size() && !entries[j].is_noise && entries[j].exam_id == entries[i].exam_id) {
            const auto& e = entries[j];
            texts += render_task_text(tpl, e.task_position, e.text_type, e.body) + "\n";
            gold.task(e.task_position) = e.gold;
            if (e.task_position != scope) {
                scope = 0;
            }
            ++j;
        }
        references += tpl.render("reference",
                                 {{"exam_id", entries[i].exam_id},
                                  {"texts", texts},
                                  {"gold", render_gold_block(tpl, entries[i].exam_id, scope, gold)}});
        references += "\n\n";
        i = j;
    }
    if (!references.empty()) {
        references = tpl.get("references_intro") + "\n" + references;
    }

    script.turns.push_back(CandidateUser{
        tpl.render("zero_shot_user", {{"references", references},
                                      {"noise", render_noise(tpl, ctx)},
                                      {"candidate", render_candidate(tpl, candidate)}})});
    return script;
}

ConversationScript build_few_shot_script(const std::vector<CalibrationItem>& calibration,
                                         OrderingScheme scheme, const ExamRecord& candidate,
                                         bool cot, const ScriptInputs& in,
                                         const ContextSelection* noise) {
    require_inputs(in);
    if (calibration.empty()) {
        throw Error("few-shot script needs at least one calibration exam");
    }
    const PromptTemplates& tpl = *in.templates;

    ConversationScript script;
    script.mode = cot ? ScriptMode::FewShotCot : ScriptMode::FewShot;
    script.system = build_system_prompt(tpl, *in.rubric, candidate.task(1).text_type,
                                        candidate.task(2).text_type, cot);

    const auto ordered = order_calibration(calibration, scheme);
    int index = 0;
    for (const auto& item : ordered) {
        const ExamRecord& exam = *item.exam;
        std::string texts;
        for (int pos = 1; pos <= 2; ++pos) {
            if (item.scope == 0 || item.scope == pos) {
                texts += render_task_text(tpl, pos, exam.task(pos).text_type, exam.task(pos).body) +
                         "\n";
            }
        }
        ++index;
        script.turns.push_back(CalibrationUser{
            exam.id, item.scope, item.level,
            tpl.render("calibration_user", {{"index", std::to_string(index)},
                                            {"count", std::to_string(ordered.size())},
                                            {"exam_id", exam.id},
                                            {"scope", scope_label(item.scope)},
                                            {"texts", texts}})});
        script.turns.push_back(AwaitModelGuess{});
        script.turns.push_back(RevealGold{
            exam.id, item.scope, exam.gold.sub,
            tpl.render("reveal_gold",
                       {{"gold", render_gold_block(tpl, exam.id, item.scope, exam.gold.sub)}})});
    }

    std::string content;
    if (noise) {
        content += render_noise(tpl, *noise);
    }
    content += render_candidate(tpl, candidate);
    script.turns.push_back(CandidateUser{std::move(content)});
    return script;
}

} // namespace aes
