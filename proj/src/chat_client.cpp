#include "aes/chat_client.hpp"

#include <algorithm>
#include <array>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "aes/assessment.hpp"

namespace aes {
namespace {

using nlohmann::json;

const ChatMessage* last_user_message(const std::vector<ChatMessage>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") {
            return &*it;
        }
    }
    return nullptr;
}

std::string reply(const SubGrades& grades, const std::string& feedback) {
    return assessment_to_json(grades, {feedback, feedback}).dump();
}

constexpr std::string_view kConnectives[] = {
    "jedoch",       "folglich",   "einerseits", "andererseits", "zusammenfassend",
    "darüber",      "außerdem",   "deshalb",    "somit",        "allerdings",
    "beispielsweise", "schließlich", "dennoch",  "zudem",        "insbesondere",
};

int clamp_grade(int g) { return std::clamp(g, kMinGrade, kMaxGrade); }

TaskGrades heuristic_grades(std::string_view text) {
    int words = 0;
    int connectives = 0;
    int letters = 0;
    int paragraphs = 1;
    std::string word;
    const auto flush = [&] {
        if (word.empty()) {
            return;
        }
        ++words;
        letters += static_cast<int>(word.size());
        std::string lower;
        for (char c : word) {
            if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?') {
                continue;
            }
            lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        for (auto k : kConnectives) {
            if (lower == k) {
                ++connectives;
            }
        }
        word.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == ' ' || c == '\n') {
            flush();
            if (c == '\n' && i + 1 < text.size() && text[i + 1] == '\n') {
                ++paragraphs;
            }
        } else {
            word.push_back(c);
        }
    }
    flush();
    if (words == 0) {
        return TaskGrades::uniform(kMaxGrade);
    }

    const int per_mille = connectives * 1000 / words;
    const int content = per_mille >= 40 ? 1 : per_mille >= 30 ? 2 : per_mille >= 20 ? 3 : per_mille >= 10 ? 4 : 5;
    const int structure = clamp_grade(content + (paragraphs >= 4 ? -1 : paragraphs <= 1 ? 1 : 0));
    const int avg_len10 = letters * 10 / words;
    const int language = clamp_grade(content + (avg_len10 >= 70 ? -1 : avg_len10 < 50 ? 1 : 0));
    TaskGrades g;
    g[Dimension::Content] = content;
    g[Dimension::Structure] = structure;
    g[Dimension::LanguageNorms] = language;
    g[Dimension::StyleExpression] = content;
    return g;
}

} // namespace

HttpChatClient::HttpChatClient(HttpChatSettings settings) : settings_(std::move(settings)) {}

std::string HttpChatClient::identity() const {
    return "http:" + settings_.base_url + "#" + settings_.model;
}

std::string HttpChatClient::request_body(const std::vector<ChatMessage>& messages) const {
    json msgs = json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    json options = {{"temperature", settings_.temperature}};
    if (settings_.seed) {
        options["seed"] = *settings_.seed;
    }
    return json{{"model", settings_.model}, {"messages", msgs}, {"stream", false}, {"options", options}}
        .dump();
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) const {
    httplib::Client cli(settings_.base_url);
    cli.set_connection_timeout(settings_.timeout);
    cli.set_read_timeout(settings_.timeout);
    cli.set_write_timeout(settings_.timeout);
    auto res = cli.Post("/api/chat", request_body(messages), "application/json");
    if (!res) {
        throw TransportError("chat endpoint " + settings_.base_url +
                             " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw TransportError("chat endpoint " + settings_.base_url + " returned status " +
                             std::to_string(res->status));
    }
    try {
        return json::parse(res->body).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError("chat endpoint " + settings_.base_url +
                             " returned malformed body: " + e.what());
    }
}

void HttpChatClient::probe() const {
    httplib::Client cli(settings_.base_url);
    cli.set_connection_timeout(std::chrono::seconds(10));
    auto res = cli.Get("/");
    if (!res) {
        throw TransportError("chat endpoint " + settings_.base_url +
                             " unreachable: " + httplib::to_string(res.error()));
    }
}

std::optional<MockPolicy> MockPolicy::parse(std::string_view s) {
    if (s == "echo_gold") {
        return MockPolicy{MockPolicyKind::EchoGold, 0};
    }
    if (s == "keyword_heuristic") {
        return MockPolicy{MockPolicyKind::KeywordHeuristic, 0};
    }
    constexpr std::string_view prefix = "always_grade(";
    if (s.starts_with(prefix) && s.ends_with(")") && s.size() == prefix.size() + 2) {
        const int g = s[prefix.size()] - '0';
        if (grade_in_range(g)) {
            return MockPolicy{MockPolicyKind::AlwaysGrade, g};
        }
    }
    return std::nullopt;
}

std::string MockPolicy::name() const {
    switch (kind) {
    case MockPolicyKind::AlwaysGrade:
        return "always_grade(" + std::to_string(grade) + ")";
    case MockPolicyKind::EchoGold:
        return "echo_gold";
    case MockPolicyKind::KeywordHeuristic:
        return "keyword_heuristic";
    }
    return "unknown";
}

MockChatClient::MockChatClient(MockPolicy policy, const Corpus* corpus)
    : policy_(policy), corpus_(corpus) {
    if (policy_.kind == MockPolicyKind::EchoGold && corpus_ == nullptr) {
        throw Error("echo_gold mock needs the corpus");
    }
}

std::string MockChatClient::identity() const { return "mock:" + policy_.name(); }

std::string MockChatClient::complete(const std::vector<ChatMessage>& messages) const {
    const ChatMessage* last = last_user_message(messages);
    const std::string_view text = last ? std::string_view(last->content) : std::string_view();

    switch (policy_.kind) {
    case MockPolicyKind::AlwaysGrade:
        return reply(SubGrades::uniform(policy_.grade), "Durchschnittliche Leistung.");

    case MockPolicyKind::EchoGold: {
        const ExamRecord* match = nullptr;
        std::size_t match_pos = 0;
        for (const auto& r : corpus_->records()) {
            for (const auto& t : r.tasks) {
                const std::size_t p = text.rfind(t.body);
                if (p != std::string_view::npos && (!match || p > match_pos)) {
                    match = &r;
                    match_pos = p;
                }
            }
        }
        if (!match) {
            return reply(SubGrades::uniform(3), "Text nicht erkannt.");
        }
        return reply(match->gold.sub, "Bewertung übernommen.");
    }

    case MockPolicyKind::KeywordHeuristic: {
        // Split the candidate block at the task headers rendered by the task_text template.
        SubGrades g;
        const std::size_t h2 = text.rfind("--- Aufgabe 2");
        const std::size_t h1 = h2 == std::string_view::npos ? std::string_view::npos
                                                            : text.rfind("--- Aufgabe 1", h2);
        if (h1 != std::string_view::npos) {
            g.task(1) = heuristic_grades(text.substr(h1, h2 - h1));
            g.task(2) = heuristic_grades(text.substr(h2));
        } else {
            g.task(1) = g.task(2) = heuristic_grades(text);
        }
        return reply(g, "Heuristische Einschätzung.");
    }
    }
    return reply(SubGrades::uniform(3), "");
}

} // namespace aes
