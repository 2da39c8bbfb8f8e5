#include <catch_amalgamated.hpp>

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "aes/experiment.hpp"
#include "aes/report.hpp"
#include "support.hpp"

using namespace aes;
namespace fs = std::filesystem;

namespace {

// Writes a synthetic corpus and returns a mock config pointing at it.
ExperimentConfig prepared(const test::TempDir& tmp, int n, const std::string& technique,
                          const std::string& policy) {
    SyntheticOptions opts;
    opts.count = n;
    write_synthetic(tmp.path(), opts);
    auto cfg = parse_config("technique = " + technique + "\nclient.kind = mock\nclient.policy = " + policy +
                                "\ncorpus.path = exams\nrubric.path = rubrics\noutput.dir = out\n",
                            tmp.path());
    return cfg;
}

// Fails the conversation for one exam id and answers "3" otherwise.
class FlakyClient : public ChatClient {
public:
    explicit FlakyClient(std::string body) : body_(std::move(body)) {}
    std::string complete(const std::vector<ChatMessage>& m) const override {
        if (m.back().content.find(body_) != std::string::npos) {
            throw TransportError("connection reset");
        }
        return assessment_to_json(SubGrades::uniform(3), {"", ""}).dump();
    }
    std::string identity() const override { return "flaky"; }

private:
    std::string body_;
};

struct Shell {
    int code;
    std::string out;
};

Shell shell(const test::TempDir& tmp, const std::string& args) {
    const auto capture = tmp / "stdout.txt";
    const std::string cmd = std::string(AESGRADE_BIN) + " " + args + " > " + capture.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), test::read_file(capture)};
}

} // namespace

TEST_CASE("echo_gold run writes every artifact") {
    test::TempDir tmp;
    const auto cfg = prepared(tmp, 20, "baseline", "echo_gold");
    const auto result = run_experiment(cfg);
    const auto& t = result.report.techniques.at(0);
    CHECK(t.technique == "baseline");
    CHECK(t.valid == 20);
    for (const auto& d : t.dimensions) {
        CHECK(*d.accuracy == 1.0);
        CHECK(*d.qwk == 1.0);
    }

    const auto out = tmp / "out";
    for (const char* f : {"predictions.jsonl", "metrics.csv", "report.md", "run.json",
                          "confusion_final.csv", "confusion_task2_style_expression.svg"}) {
        CAPTURE(f);
        CHECK(fs::exists(out / f));
    }
    for (const auto& r : result.outcomes) {
        const auto doc = nlohmann::json::parse(test::read_file(out / "transcripts" / (r.exam_id + ".json")));
        CHECK(doc["exam_id"] == r.exam_id);
        CHECK(doc["status"] == "valid");
        CHECK(doc["messages"].size() == 3);
    }
    CHECK(test::read_file(out / "metrics.csv").find("T") == std::string::npos); // no timestamps
    CHECK(nlohmann::json::parse(test::read_file(out / "run.json")).contains("started_at"));

    const auto stored = read_predictions({out / "predictions.jsonl"});
    REQUIRE(stored.size() == 1);
    CHECK(stored[0].technique == "baseline");
    REQUIRE(stored[0].outcomes.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(stored[0].outcomes[i].exam_id == result.outcomes[i].exam_id);
        CHECK(stored[0].outcomes[i].assessment.grades == result.outcomes[i].assessment.grades);
        CHECK(stored[0].outcomes[i].outcome == result.outcomes[i].outcome);
    }
    const Experiment exp(cfg);
    const auto again = build_report("baseline", stored[0].outcomes, exp.corpus());
    CHECK(kappa_row(again) == kappa_row(t));
}

TEST_CASE("always_grade(3) with rag_range") {
    test::TempDir tmp;
    const auto cfg = prepared(tmp, 25, "rag_range(1)", "always_grade(3)");
    const auto result = run_experiment(cfg);
    const Experiment exp(cfg);
    int threes = 0;
    for (const auto& r : exp.corpus().records()) {
        threes += gold_final(r) == 3 ? 1 : 0;
    }
    const auto& fin = result.report.techniques[0].at("final");
    CHECK(*fin.accuracy == Catch::Approx(threes / 25.0).margin(1e-12));
    for (const auto& row : fin.confusion) {
        CHECK(row[0] + row[1] + row[3] + row[4] == 0);
    }
}

TEST_CASE("runs are deterministic and independent of parallelism") {
    test::TempDir tmp;
    auto cfg = prepared(tmp, 25, "rag_most_similar(4)", "keyword_heuristic");
    cfg.noise_count = 2;
    cfg.output_dir = tmp / "a";
    run_experiment(cfg);
    cfg.output_dir = tmp / "b";
    cfg.parallelism = 4;
    run_experiment(cfg);
    for (const char* f : {"metrics.csv", "predictions.jsonl", "report.md", "confusion_final.csv"}) {
        CAPTURE(f);
        CHECK(test::read_file(tmp / "a" / f) == test::read_file(tmp / "b" / f));
    }
}

TEST_CASE("one failing conversation does not stop the run") {
    test::TempDir tmp;
    auto cfg = prepared(tmp, 12, "few_best_worst", "always_grade(3)");
    cfg.parallelism = 3;
    const Experiment exp(cfg);
    const auto& victim = exp.corpus().records()[5];
    const FlakyClient client(victim.task(1).body);
    const auto outcomes = exp.grade_all(client);
    REQUIRE(outcomes.size() == 12);
    int errored = 0;
    for (const auto& o : outcomes) {
        errored += o.status == OutcomeStatus::Errored ? 1 : 0;
    }
    // The victim fails as a candidate and again wherever it is a calibration exemplar.
    CHECK(outcomes[5].status == OutcomeStatus::Errored);
    CHECK(outcomes[5].exam_id == victim.id);
    CHECK(outcomes[5].error.find("connection reset") != std::string::npos);
    CHECK(errored < 12);
    const auto rep = build_report("x", outcomes, exp.corpus());
    CHECK(rep.errored == errored);
    CHECK(rep.valid == 12 - errored);
}

TEST_CASE("token budget trims context") {
    const Corpus corpus = test::synthetic(30);
    const RubricSet rubric = make_synthetic_rubrics();
    const auto& cand = corpus.records().front();

    auto cfg = parse_config("technique = rag_most_similar(4)\nclient.kind = mock\n");
    const auto full = Experiment(cfg, corpus, rubric).script_for(cand);
    CHECK(full.dropped.empty());
    const auto full_tokens = estimate_tokens(full.script);

    cfg.token_budget = full_tokens - 10;
    const auto trimmed = Experiment(cfg, corpus, rubric).script_for(cand);
    REQUIRE_FALSE(trimmed.dropped.empty());
    CHECK(estimate_tokens(trimmed.script) <= cfg.token_budget);
    CHECK(trimmed.context.entries.size() < full.context.entries.size());
    // The least similar reference goes first.
    double lowest = 2.0;
    std::string lowest_id;
    for (const auto& e : full.context.entries) {
        if (*e.similarity <= lowest) {
            lowest = *e.similarity;
            lowest_id = e.exam_id + " task " + std::to_string(e.task_position);
        }
    }
    CHECK(trimmed.dropped.front() == "dropped reference " + lowest_id + " to fit the token budget");

    auto few = parse_config("technique = few_all_grades\nclient.kind = mock\n");
    few.token_budget = 10;
    const auto tiny = Experiment(few, corpus, rubric).script_for(cand);
    CHECK(tiny.script.count_calibrations() == 1);
    CHECK(tiny.dropped.back().find("still exceeds") != std::string::npos);
}

TEST_CASE("aesgrade command line") {
    test::TempDir tmp;
    const auto a = tmp / "a";
    const auto b = tmp / "b";
    CHECK(shell(tmp, "make-synthetic --out " + a.string()).code == 0);
    CHECK(shell(tmp, "make-synthetic --out " + b.string()).code == 0);
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (entry.is_regular_file()) {
            const auto rel = fs::relative(entry.path(), a);
            CAPTURE(rel.string());
            CHECK(test::read_file(entry.path()) == test::read_file(b / rel));
        }
    }

    const auto ok = shell(tmp, "validate-corpus " + (a / "exams").string());
    CHECK(ok.code == 0);
    CHECK(ok.out.find("25 records ok, 0 rejected") != std::string::npos);

    test::write_file(a / "exams" / "broken.json", "{ not json");
    const auto bad = shell(tmp, "validate-corpus " + (a / "exams").string());
    CHECK(bad.code == 1);
    CHECK(bad.out.find("broken.json") != std::string::npos);
    fs::remove(a / "exams" / "broken.json");

    CHECK(shell(tmp, "run --no-such-flag").code == 2);
    CHECK(shell(tmp, "run --config " + (tmp / "missing.cfg").string()).code == 2);

    const auto defaults = shell(tmp, "run --print-defaults");
    CHECK(defaults.code == 0);
    CHECK(defaults.out.find("runner.token_budget = 128000") != std::string::npos);

    const auto ctx = shell(tmp, "context --config " + (a / "experiment.cfg").string() + " --candidate syn-2023-001");
    CHECK(ctx.code == 0);
    CHECK(ctx.out.find("technique: RAG-best-worst") != std::string::npos);
    CHECK(ctx.out.find("references: 6, noise: 0") != std::string::npos);

    const auto run = shell(tmp, "run --config " + (a / "experiment.cfg").string());
    CHECK(run.code == 0);
    CHECK(run.out.find("RAG-best-worst & ") != std::string::npos);

    const auto metrics = shell(tmp, "metrics --pred " + (a / "out" / "predictions.jsonl").string() + " --gold " +
                                        (a / "exams").string());
    CHECK(metrics.code == 0);
    CHECK(metrics.out.find("RAG-best-worst,final,") != std::string::npos);
}
