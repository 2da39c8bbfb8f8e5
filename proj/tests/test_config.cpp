#include <catch_amalgamated.hpp>

#include "aes/config.hpp"
#include "support.hpp"

using namespace aes;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("every key parses") {
    const auto cfg = parse_config(R"(
corpus.path = data/exams
rubric.path = /abs/rubrics     # comment
corpus.trust_stored_grades = true
grading.rounding = half_to_worse
technique = rag_most_similar(4)
ordering = mixed_153
calibration.manifest = manifest.json
client.kind = mock
client.policy = always_grade(2)
client.base_url = http://example:1
client.model = m
client.temperature = 0.5
client.seed = none
client.retries = 2
client.timeout = 30
noise.count = 3
noise.seed = 99
embedding.fallback = false
embedding.base_url = http://emb:2
embedding.model = e
embedding.dim = 64
runner.parallelism = 4
runner.token_budget = 0
output.dir = results
prompts.dir = prompts
)",
                                  "/base");
    CHECK(cfg.corpus_path == "/base/data/exams");
    CHECK(cfg.rubric_path == "/abs/rubrics");
    CHECK(cfg.trust_stored_grades);
    CHECK(cfg.rounding == Rounding::HalfToWorse);
    CHECK(cfg.technique == Technique{TechniqueKind::RagMostSimilar, 4, 1});
    CHECK(cfg.ordering == OrderingScheme::Mixed153);
    CHECK(*cfg.calibration_manifest == "/base/manifest.json");
    CHECK(cfg.client_kind == "mock");
    CHECK(cfg.client_policy == "always_grade(2)");
    CHECK(cfg.http.base_url == "http://example:1");
    CHECK(cfg.http.model == "m");
    CHECK(cfg.http.temperature == 0.5);
    CHECK_FALSE(cfg.http.seed.has_value());
    CHECK(cfg.retries == 2);
    CHECK(cfg.http.timeout == std::chrono::seconds(30));
    CHECK(cfg.noise_count == 3);
    CHECK(cfg.noise_seed == 99);
    CHECK_FALSE(cfg.embedding_fallback);
    CHECK(cfg.embedding_base_url == "http://emb:2");
    CHECK(cfg.embedding_model == "e");
    CHECK(cfg.embedding_dim == 64);
    CHECK(cfg.parallelism == 4);
    CHECK(cfg.token_budget == 0);
    CHECK(cfg.output_dir == "/base/results");
    CHECK(*cfg.prompts_dir == "/base/prompts");
}

TEST_CASE("config errors name the line") {
    CHECK_THROWS_WITH(parse_config("technique = baseline\nmodel = x\n"),
                      ContainsSubstring("line 2") && ContainsSubstring("unknown key 'model'"));
    CHECK_THROWS_WITH(parse_config("noise.count = many"), ContainsSubstring("line 1"));
    CHECK_THROWS_WITH(parse_config("just text"), ContainsSubstring("expected key = value"));
    CHECK_THROWS_WITH(parse_config("technique = zero_shot"), ContainsSubstring("unknown technique"));
    CHECK_THROWS_WITH(parse_config("ordering = random"), ContainsSubstring("unknown ordering"));
    CHECK_THROWS_WITH(parse_config("client.kind = openai"), ContainsSubstring("client.kind"));
    CHECK_THROWS_WITH(parse_config("client.kind = mock\nclient.policy = lucky"),
                      ContainsSubstring("mock policy"));
    CHECK_THROWS(parse_config("runner.parallelism = 0"));
    CHECK_THROWS(parse_config("technique = rag_most_similar(0)"));
    CHECK_THROWS(parse_config("embedding.fallback = maybe"));
    CHECK_THROWS_WITH(load_config("/nonexistent/x.cfg"), ContainsSubstring("cannot read config"));
}

TEST_CASE("technique parameters") {
    CHECK(parse_technique("rag_range(2)")->n == 2);
    CHECK(parse_technique("rag_most_similar")->k == 1);
    CHECK_FALSE(parse_technique("baseline(2)").has_value());
    CHECK_FALSE(parse_technique("rag_range(x)").has_value());
    CHECK_FALSE(parse_technique("rag_range(2").has_value());

    const auto split = parse_config("technique = rag_most_similar\ntechnique.k = 7\n");
    CHECK(split.technique.k == 7);
    CHECK(parse_config("technique.n = 2\ntechnique = rag_range\n").technique.n == 2);
}

TEST_CASE("technique labels") {
    const std::pair<const char*, const char*> expected[] = {
        {"baseline", "baseline"},
        {"rag_most_similar(1)", "RAG-1-best"},
        {"rag_range(2)", "RAG-10-grade"},
        {"rag_most_similar(4)", "RAG-4-best"},
        {"rag_range(1)", "RAG-5-grade"},
        {"rag_most_similar(7)", "RAG-7-best"},
        {"rag_best_avg_worst", "RAG-best-worst"},
        {"few_all_grades", "Few-all-grades"},
        {"few_best_worst", "Few-best-worst"},
        {"few_mixed", "Few-mixed"},
        {"cot_best_worst", "CoT-best-worst"},
    };
    for (const auto& [key, label] : expected) {
        CAPTURE(key);
        CHECK(technique_label(*parse_technique(key)) == label);
    }
}

TEST_CASE("technique strategies") {
    const auto strat = [](const char* key) { return strategy_for(*parse_technique(key), 2, 5); };
    CHECK(strat("baseline").task1 == TaskStrategy{Baseline{}});
    CHECK(strat("rag_best_avg_worst").task2 == TaskStrategy{BestAverageWorst{}});
    CHECK(strat("rag_most_similar(4)").task1 == TaskStrategy{MostSimilar{4}});
    CHECK(strat("rag_range(2)").task2 == TaskStrategy{RangeOfExamples{2}});
    CHECK(strat("few_all_grades").task1 == TaskStrategy{AllGrades{{1, 2, 3, 4, 5}}});
    CHECK(strat("few_best_worst").task1 == TaskStrategy{AllGrades{{1, 3, 5}}});
    CHECK(strat("cot_best_worst").task2 == TaskStrategy{AllGrades{{1, 3, 5}}});
    const auto mixed = strat("few_mixed");
    CHECK(mixed.task1 == TaskStrategy{AllGrades{{1, 3, 5}}});
    CHECK(mixed.task2 == TaskStrategy{AllGrades{{1, 2, 3, 4, 5}}});
    CHECK(mixed.noise_count == 2);
    CHECK(mixed.noise_seed == 5);
    CHECK(parse_technique("cot_best_worst")->cot());
    CHECK(parse_technique("few_mixed")->few_shot());
    CHECK_FALSE(parse_technique("rag_range")->few_shot());
}

TEST_CASE("defaults text parses to the default config") {
    const ExperimentConfig defaults;
    const auto parsed = parse_config(default_config_text());
    CHECK(config_to_text(parsed) == config_to_text(defaults));
    CHECK(config_hash(parsed) == config_hash(defaults));
    CHECK(parsed.client_kind == "http");
    CHECK(parsed.token_budget == 128000);
}

TEST_CASE("config_to_text round-trips") {
    auto cfg = parse_config("technique = rag_range(2)\nclient.seed = none\nnoise.count = 1\n"
                            "calibration.manifest = /m.json\nclient.kind = mock\n");
    const auto again = parse_config(config_to_text(cfg));
    CHECK(config_to_text(again) == config_to_text(cfg));
    CHECK(config_hash(again) == config_hash(cfg));
}

TEST_CASE("config_hash") {
    const ExperimentConfig base;
    const auto h = config_hash(base);
    CHECK(h.size() == 16);
    CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(config_hash(base) == h);

    auto moved = base;
    moved.output_dir = "elsewhere";
    moved.parallelism = 8;
    CHECK(config_hash(moved) == h);

    auto changed = base;
    changed.technique = *parse_technique("rag_most_similar(4)");
    CHECK(config_hash(changed) != h);
    changed = base;
    changed.noise_seed = 2;
    CHECK(config_hash(changed) != h);
    changed = base;
    changed.http.model = "other";
    CHECK(config_hash(changed) != h);
}
