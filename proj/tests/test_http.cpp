#include <catch_amalgamated.hpp>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "aes/chat_client.hpp"
#include "aes/corpus.hpp"
#include "aes/embedding.hpp"

using namespace aes;
using nlohmann::json;

namespace {

// Local server on an ephemeral port, stopped on scope exit.
class LocalServer {
public:
    LocalServer() = default;
    void start() {
        port_ = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        if (thread_.joinable()) {
            thread_.join();
        }
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    httplib::Server server;

private:
    int port_ = 0;
    std::thread thread_;
};

HttpChatSettings settings_for(const std::string& url) {
    HttpChatSettings s;
    s.base_url = url;
    s.model = "test-model";
    s.timeout = std::chrono::seconds(5);
    return s;
}

} // namespace

TEST_CASE("request body shape") {
    auto s = settings_for("http://x");
    HttpChatClient client(s);
    const auto body = json::parse(client.request_body({{"system", "S"}, {"user", "U"}}));
    CHECK(body["model"] == "test-model");
    CHECK(body["stream"] == false);
    CHECK(body["options"]["temperature"] == 0.0);
    CHECK(body["options"]["seed"] == 42);
    CHECK(body["messages"].size() == 2);
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "U");

    s.seed.reset();
    CHECK_FALSE(json::parse(HttpChatClient(s).request_body({})).at("options").contains("seed"));
    CHECK(HttpChatClient(s).identity() == "http:http://x#test-model");
}

TEST_CASE("chat client against a local server") {
    LocalServer srv;
    std::string seen;
    srv.server.Post("/api/chat", [&](const httplib::Request& req, httplib::Response& res) {
        seen = req.body;
        const auto body = json::parse(req.body);
        const std::string last = body["messages"].back()["content"];
        if (last == "fail") {
            res.status = 500;
            return;
        }
        if (last == "garbage") {
            res.set_content("not json", "text/plain");
            return;
        }
        res.set_content(json{{"message", {{"role", "assistant"}, {"content", "echo:" + last}}}}.dump(),
                        "application/json");
    });
    srv.server.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    srv.start();

    HttpChatClient client(settings_for(srv.url()));
    CHECK_NOTHROW(client.probe());
    CHECK(client.complete({{"system", "S"}, {"user", "hallo"}}) == "echo:hallo");
    CHECK(json::parse(seen)["messages"][0]["content"] == "S");
    CHECK_THROWS_WITH(client.complete({{"user", "fail"}}), Catch::Matchers::ContainsSubstring("status 500"));
    CHECK_THROWS_AS(client.complete({{"user", "fail"}}), TransportError);
    CHECK_THROWS_AS(client.complete({{"user", "garbage"}}), TransportError);
}

TEST_CASE("unreachable chat endpoint") {
    std::string url;
    {
        LocalServer srv;
        srv.start();
        url = srv.url();
    }
    auto s = settings_for(url);
    s.timeout = std::chrono::seconds(1);
    HttpChatClient client(s);
    CHECK_THROWS_AS(client.probe(), TransportError);
    CHECK_THROWS_WITH(client.complete({{"user", "x"}}), Catch::Matchers::ContainsSubstring("unreachable"));
}

TEST_CASE("http embedder") {
    LocalServer srv;
    std::string seen;
    srv.server.Post("/api/embed", [&](const httplib::Request& req, httplib::Response& res) {
        seen = req.body;
        res.set_content(R"({"embeddings": [[0.5, 0.25, -1.0]]})", "application/json");
    });
    srv.start();

    HttpEmbedder embedder(srv.url(), "emb-model", std::chrono::seconds(5));
    const auto v = embedder.embed("Ein  Text\r\nmit Umbruch");
    CHECK(v.source == EmbeddingSource::RemoteModel);
    CHECK(v.values == std::vector<double>{0.5, 0.25, -1.0});
    const auto body = json::parse(seen);
    CHECK(body["model"] == "emb-model");
    CHECK(body["input"] == normalize_text("Ein  Text\r\nmit Umbruch"));
    CHECK(body["input"].get<std::string>().find("  ") == std::string::npos);
}
