#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aes/corpus.hpp"

namespace aes {

struct ChatMessage {
    std::string role; ///< "system", "user" or "assistant"
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

/// The model could not be reached or answered with a non-success status.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what, std::vector<ChatMessage> partial = {})
        : Error(what), partial_transcript(std::move(partial)) {}
    std::vector<ChatMessage> partial_transcript;
};

/// Chat-completion backend. One instance is shared by concurrent conversations, so
/// complete() must not keep per-conversation state.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Returns the assistant reply to the conversation so far. Throws TransportError.
    virtual std::string complete(const std::vector<ChatMessage>& messages) const = 0;
    /// Throws TransportError when the backend is unreachable.
    virtual void probe() const {}
    virtual std::string identity() const = 0;
};

struct HttpChatSettings {
    std::string base_url = "http://localhost:11434";
    std::string model = "llama3.3:70b";
    double temperature = 0.0;
    std::optional<std::int64_t> seed = 42;
    std::chrono::seconds timeout{900};
};

/// POST {base_url}/api/chat, non-streaming, as served by common local inference
/// servers.
class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(HttpChatSettings settings);
    std::string complete(const std::vector<ChatMessage>& messages) const override;
    void probe() const override;
    std::string identity() const override;

    /// Request body for a conversation; exposed for tests of the wire format.
    std::string request_body(const std::vector<ChatMessage>& messages) const;

private:
    HttpChatSettings settings_;
};

enum class MockPolicyKind { AlwaysGrade, EchoGold, KeywordHeuristic };

struct MockPolicy {
    MockPolicyKind kind = MockPolicyKind::AlwaysGrade;
    int grade = 3; ///< AlwaysGrade only

    /// "always_grade(3)", "echo_gold" or "keyword_heuristic".
    static std::optional<MockPolicy> parse(std::string_view s);
    std::string name() const;
};

/// Deterministic offline stand-in for a model.
///  - always_grade(g): every dimension g.
///  - echo_gold: finds the exam whose text appears last in the final user message and
///    returns its gold grades; needs the corpus.
///  - keyword_heuristic: grades from connective density, paragraphing and word length.
class MockChatClient final : public ChatClient {
public:
    explicit MockChatClient(MockPolicy policy, const Corpus* corpus = nullptr);
    std::string complete(const std::vector<ChatMessage>& messages) const override;
    std::string identity() const override;

private:
    MockPolicy policy_;
    const Corpus* corpus_;
};

} // namespace aes
