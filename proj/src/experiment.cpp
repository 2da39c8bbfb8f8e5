#include "aes/experiment.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "aes/report.hpp"

namespace aes {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) {
        throw Error("cannot write " + path.string());
    }
}

json transcript_json(const std::vector<ChatMessage>& messages) {
    json arr = json::array();
    for (const auto& m : messages) {
        arr.push_back({{"role", m.role}, {"content", m.content}});
    }
    return arr;
}

/// Index of the reference to drop next, or npos when none is left.
std::size_t next_reference_drop(const ContextSelection& sel) {
    std::size_t pick = std::string::npos;
    for (std::size_t i = 0; i < sel.entries.size(); ++i) {
        const auto& e = sel.entries[i];
        if (e.is_noise) {
            continue;
        }
        if (pick == std::string::npos) {
            pick = i;
            continue;
        }
        const auto& p = sel.entries[pick];
        if (e.similarity && p.similarity) {
            if (*e.similarity <= *p.similarity) {
                pick = i;
            }
        } else {
            pick = i;
        }
    }
    return pick;
}

} // namespace

void RunLog::line(const std::string& msg) const {
    if (!out_) {
        return;
    }
    std::lock_guard lock(mu_);
    *out_ << "[aesgrade] " << msg << '\n';
    out_->flush();
}

Experiment::Experiment(ExperimentConfig cfg, const RunLog* log) : cfg_(std::move(cfg)), log_(log) {
    cfg_.validate();
    auto loaded = load_corpus(cfg_.corpus_path, {cfg_.trust_stored_grades, cfg_.rounding});
    load_errors_ = std::move(loaded.errors);
    for (const auto& e : load_errors_) {
        if (log_) {
            log_->line("skipping " + e.file + ": " + e.message);
        }
    }
    corpus_ = std::move(loaded.corpus);
    rubric_ = load_rubrics(cfg_.rubric_path);
    templates_ = cfg_.prompts_dir ? PromptTemplates::with_overrides(*cfg_.prompts_dir)
                                  : PromptTemplates::defaults();
    init();
}

Experiment::Experiment(ExperimentConfig cfg, Corpus corpus, RubricSet rubric, PromptTemplates templates,
                       const RunLog* log)
    : cfg_(std::move(cfg)), log_(log), corpus_(std::move(corpus)), rubric_(std::move(rubric)),
      templates_(std::move(templates)) {
    cfg_.validate();
    init();
}

void Experiment::init() {
    corpus_.set_rounding(cfg_.rounding);
    if (corpus_.empty()) {
        throw Error("corpus " + cfg_.corpus_path.string() + " has no usable records");
    }
    if (auto problems = check_rubric_coverage(rubric_, corpus_); !problems.empty()) {
        throw Error("rubric incomplete: " + problems.front());
    }
    if (cfg_.calibration_manifest) {
        manifest_ = ExemplarManifest::load(*cfg_.calibration_manifest);
    }
    const auto strategy = strategy_for(cfg_.technique, cfg_.noise_count, cfg_.noise_seed);
    if (strategy.needs_similarity()) {
        if (cfg_.embedding_fallback) {
            embedder_ = std::make_unique<FallbackEmbedder>(cfg_.embedding_dim);
        } else {
            embedder_ = std::make_unique<HttpEmbedder>(cfg_.embedding_base_url, cfg_.embedding_model);
        }
        index_ = std::make_unique<SimilarityIndex>(corpus_, *embedder_, cfg_.parallelism);
    }
}

ContextStrategy Experiment::strategy_for_candidate(const ExamRecord& candidate) const {
    // Noise differs per candidate but stays reproducible.
    return strategy_for(cfg_.technique, cfg_.noise_count, cfg_.noise_seed ^ fnv1a64(candidate.id));
}

ContextSelection Experiment::context_for(const ExamRecord& candidate) const {
    return select_context(strategy_for_candidate(candidate), {&corpus_, index_.get(), &manifest_},
                          candidate);
}

PreparedScript Experiment::script_for(const ExamRecord& candidate) const {
    PreparedScript out;
    out.context = context_for(candidate);
    const ScriptInputs in{&templates_, &rubric_};
    const auto over_budget = [&] {
        return cfg_.token_budget != 0 && estimate_tokens(out.script) > cfg_.token_budget;
    };

    if (!cfg_.technique.few_shot()) {
        out.script = build_zero_shot(candidate, out.context, in);
        while (over_budget()) {
            const auto drop = next_reference_drop(out.context);
            if (drop == std::string::npos) {
                break;
            }
            const auto& e = out.context.entries[drop];
            out.dropped.push_back("dropped reference " + e.exam_id + " task " +
                                  std::to_string(e.task_position) + " to fit the token budget");
            out.context.entries.erase(out.context.entries.begin() + static_cast<std::ptrdiff_t>(drop));
            out.script = build_zero_shot(candidate, out.context, in);
        }
    } else {
        auto items = calibration_items(out.context, corpus_);
        if (items.empty()) {
            throw Error("no calibration exemplars available for " + candidate.id);
        }
        out.script = build_few_shot_script(items, cfg_.ordering, candidate, cfg_.technique.cot(), in,
                                           &out.context);
        while (over_budget() && items.size() > 1) {
            out.dropped.push_back("dropped calibration exam " + items.back().exam->id +
                                  " to fit the token budget");
            items.pop_back();
            out.script = build_few_shot_script(items, cfg_.ordering, candidate, cfg_.technique.cot(), in,
                                               &out.context);
        }
    }
    if (over_budget()) {
        out.dropped.push_back("script still exceeds the token budget (" +
                              std::to_string(estimate_tokens(out.script)) + " tokens)");
    }
    return out;
}

std::vector<GradeOutcome> Experiment::grade_all(const ChatClient& client) const {
    const auto& records = corpus_.records();
    std::vector<GradeOutcome> outcomes(records.size());
    std::atomic<std::size_t> next{0};

    const auto work = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            const ExamRecord& candidate = records[i];
            GradeOutcome& out = outcomes[i];
            try {
                auto prepared = script_for(candidate);
                for (const auto& msg : prepared.dropped) {
                    if (log_) {
                        log_->line(candidate.id + ": " + msg);
                    }
                }
                out = grade_candidate(client, prepared.script, templates_, cfg_.retries, cfg_.rounding);
                if (!out.valid() && log_) {
                    log_->line(candidate.id + ": invalid response: " + out.error);
                }
            } catch (const TransportError& e) {
                out = GradeOutcome{};
                out.transcript = e.partial_transcript;
                out.status = OutcomeStatus::Errored;
                out.error = e.what();
                if (log_) {
                    log_->line(candidate.id + ": errored: " + out.error);
                }
            } catch (const std::exception& e) {
                out = GradeOutcome{};
                out.status = OutcomeStatus::Errored;
                out.error = e.what();
                if (log_) {
                    log_->line(candidate.id + ": errored: " + out.error);
                }
            }
            out.exam_id = candidate.id;
        }
    };

    const int workers = std::max(1, std::min<int>(cfg_.parallelism, static_cast<int>(records.size())));
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < workers; ++w) {
            pool.emplace_back(work);
        }
        work();
    }
    return outcomes;
}

std::unique_ptr<ChatClient> make_client(const ExperimentConfig& cfg, const Corpus* corpus) {
    if (cfg.client_kind == "mock") {
        const auto policy = MockPolicy::parse(cfg.client_policy);
        if (!policy) {
            throw Error("unknown mock policy '" + cfg.client_policy + "'");
        }
        return std::make_unique<MockChatClient>(*policy, corpus);
    }
    return std::make_unique<HttpChatClient>(cfg.http);
}

RunResult run_experiment(const ExperimentConfig& cfg, const ChatClient* client, const RunLog* log) {
    const std::string started = utc_now();
    Experiment exp(cfg, log);

    std::unique_ptr<ChatClient> owned;
    if (!client) {
        owned = make_client(cfg, &exp.corpus());
        client = owned.get();
    }
    client->probe();

    const std::string label = technique_label(cfg.technique);
    if (log) {
        log->line("grading " + std::to_string(exp.corpus().size()) + " exams with " + label + " via " +
                  client->identity());
    }

    RunResult result;
    result.outcomes = exp.grade_all(*client);

    // Everything below runs after all workers have joined.
    const fs::path dir = cfg.output_dir;
    std::error_code ec;
    fs::create_directories(dir / "transcripts", ec);
    if (ec) {
        throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    }

    result.report.techniques.push_back(build_report(label, result.outcomes, exp.corpus()));
    auto& meta = result.report.metadata;
    meta.config_hash = config_hash(cfg);
    meta.client_identity = client->identity();
    meta.transcripts_dir = "transcripts";
    meta.started_at = started;

    write_predictions(dir / "predictions.jsonl", result.outcomes, label);
    for (const auto& o : result.outcomes) {
        json doc = {{"exam_id", o.exam_id},
                    {"status", std::string(outcome_status_key(o.status))},
                    {"attempts", o.attempts},
                    {"messages", transcript_json(o.transcript)}};
        if (!o.error.empty()) {
            doc["error"] = o.error;
        }
        write_text(dir / "transcripts" / (o.exam_id + ".json"), doc.dump(2) + "\n");
    }
    emit_report(result.report, dir);

    meta.finished_at = utc_now();
    json run = {{"started_at", meta.started_at},
                {"finished_at", meta.finished_at},
                {"config_hash", meta.config_hash},
                {"client", meta.client_identity},
                {"technique", label},
                {"exams", exp.corpus().size()},
                {"skipped_records", exp.load_errors().size()},
                {"config", config_to_text(cfg)}};
    write_text(dir / "run.json", run.dump(2) + "\n");
    if (log) {
        log->line("wrote report to " + dir.string());
    }
    return result;
}

std::string prediction_line(const GradeOutcome& o, const std::string& technique) {
    json line = {{"exam_id", o.exam_id},
                 {"technique", technique},
                 {"status", std::string(outcome_status_key(o.status))},
                 {"attempts", o.attempts}};
    if (o.valid()) {
        line["grades"] = assessment_to_json(o.assessment.grades, o.assessment.feedback);
        if (o.outcome) {
            line["final"] = o.outcome->final.failed() ? json("fail") : json(o.outcome->final.as_int());
        }
    } else {
        line["failure_reason"] = o.error;
    }
    line["raw"] = o.assessment.raw;
    return line.dump();
}

void write_predictions(const fs::path& file, const std::vector<GradeOutcome>& outcomes,
                       const std::string& technique) {
    std::string text;
    for (const auto& o : outcomes) {
        text += prediction_line(o, technique) + "\n";
    }
    write_text(file, text);
}

std::vector<StoredPredictions> read_predictions(const std::vector<fs::path>& files, Rounding rounding) {
    std::vector<StoredPredictions> groups;
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            throw Error("cannot read predictions " + file.string());
        }
        std::string raw;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            if (raw.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            const std::string where = file.string() + ":" + std::to_string(line_no);
            GradeOutcome o;
            std::string technique;
            try {
                const json doc = json::parse(raw);
                o.exam_id = doc.at("exam_id").get<std::string>();
                technique = doc.value("technique", std::string("unnamed"));
                o.attempts = doc.value("attempts", 1);
                const std::string status = doc.at("status").get<std::string>();
                o.assessment.raw = doc.value("raw", std::string());
                if (status == "valid") {
                    o.assessment = parse_assessment(doc.at("grades").dump());
                    o.assessment.raw = doc.value("raw", std::string());
                    if (!o.assessment.valid) {
                        throw Error("stored grades invalid: " + o.assessment.failure_reason);
                    }
                    o.status = OutcomeStatus::Valid;
                    o.outcome = aggregate(o.assessment.grades, rounding);
                } else if (status == "invalid" || status == "errored") {
                    o.status = status == "invalid" ? OutcomeStatus::Invalid : OutcomeStatus::Errored;
                    o.error = doc.value("failure_reason", std::string());
                } else {
                    throw Error("unknown status '" + status + "'");
                }
            } catch (const json::exception& e) {
                throw Error(where + ": " + e.what());
            } catch (const Error& e) {
                throw Error(where + ": " + e.what());
            }
            auto it = std::find_if(groups.begin(), groups.end(),
                                   [&](const StoredPredictions& g) { return g.technique == technique; });
            if (it == groups.end()) {
                groups.push_back({technique, {}});
                it = std::prev(groups.end());
            }
            it->outcomes.push_back(std::move(o));
        }
    }
    return groups;
}

} // namespace aes
