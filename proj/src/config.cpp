#include "aes/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "aes/embedding.hpp"

namespace aes {
namespace {

namespace fs = std::filesystem;

constexpr TechniqueKind kAllTechniques[] = {
    TechniqueKind::Baseline,     TechniqueKind::RagBestAvgWorst, TechniqueKind::RagMostSimilar,
    TechniqueKind::RagRange,     TechniqueKind::FewAllGrades,    TechniqueKind::FewBestWorst,
    TechniqueKind::FewMixed,     TechniqueKind::CotBestWorst,
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view v, const std::string& key) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw Error("invalid value for " + key + ": '" + std::string(v) + "'");
    }
    return out;
}

bool parse_bool(std::string_view v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw Error("invalid value for " + key + ": '" + std::string(v) + "' (expected true/false)");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

fs::path resolve(const fs::path& base, std::string_view v) {
    fs::path p{std::string(v)};
    return p.is_absolute() || base.empty() ? p : base / p;
}

} // namespace

bool Technique::few_shot() const {
    switch (kind) {
    case TechniqueKind::FewAllGrades:
    case TechniqueKind::FewBestWorst:
    case TechniqueKind::FewMixed:
    case TechniqueKind::CotBestWorst:
        return true;
    default:
        return false;
    }
}

std::string_view technique_key(TechniqueKind kind) {
    switch (kind) {
    case TechniqueKind::Baseline:
        return "baseline";
    case TechniqueKind::RagBestAvgWorst:
        return "rag_best_avg_worst";
    case TechniqueKind::RagMostSimilar:
        return "rag_most_similar";
    case TechniqueKind::RagRange:
        return "rag_range";
    case TechniqueKind::FewAllGrades:
        return "few_all_grades";
    case TechniqueKind::FewBestWorst:
        return "few_best_worst";
    case TechniqueKind::FewMixed:
        return "few_mixed";
    case TechniqueKind::CotBestWorst:
        return "cot_best_worst";
    }
    return "baseline";
}

std::optional<Technique> parse_technique(std::string_view s) {
    std::string_view name = s;
    std::optional<int> arg;
    if (const auto open = s.find('('); open != std::string_view::npos) {
        if (!s.ends_with(")")) {
            return std::nullopt;
        }
        name = s.substr(0, open);
        const auto inner = s.substr(open + 1, s.size() - open - 2);
        int v = 0;
        const auto [ptr, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), v);
        if (ec != std::errc() || ptr != inner.data() + inner.size()) {
            return std::nullopt;
        }
        arg = v;
    }
    for (auto kind : kAllTechniques) {
        if (name != technique_key(kind)) {
            continue;
        }
        Technique t{kind};
        if (arg) {
            if (kind == TechniqueKind::RagMostSimilar) {
                t.k = *arg;
            } else if (kind == TechniqueKind::RagRange) {
                t.n = *arg;
            } else {
                return std::nullopt;
            }
        }
        return t;
    }
    return std::nullopt;
}

std::string technique_label(const Technique& t) {
    switch (t.kind) {
    case TechniqueKind::Baseline:
        return "baseline";
    case TechniqueKind::RagBestAvgWorst:
        return "RAG-best-worst";
    case TechniqueKind::RagMostSimilar:
        return "RAG-" + std::to_string(t.k) + "-best";
    case TechniqueKind::RagRange:
        return "RAG-" + std::to_string(5 * t.n) + "-grade";
    case TechniqueKind::FewAllGrades:
        return "Few-all-grades";
    case TechniqueKind::FewBestWorst:
        return "Few-best-worst";
    case TechniqueKind::FewMixed:
        return "Few-mixed";
    case TechniqueKind::CotBestWorst:
        return "CoT-best-worst";
    }
    return "baseline";
}

ContextStrategy strategy_for(const Technique& t, int noise_count, std::uint64_t noise_seed) {
    const AllGrades best_worst{{1, 3, 5}};
    const AllGrades all{{1, 2, 3, 4, 5}};
    ContextStrategy s;
    switch (t.kind) {
    case TechniqueKind::Baseline:
        s = ContextStrategy::uniform(Baseline{});
        break;
    case TechniqueKind::RagBestAvgWorst:
        s = ContextStrategy::uniform(BestAverageWorst{});
        break;
    case TechniqueKind::RagMostSimilar:
        s = ContextStrategy::uniform(MostSimilar{t.k});
        break;
    case TechniqueKind::RagRange:
        s = ContextStrategy::uniform(RangeOfExamples{t.n});
        break;
    case TechniqueKind::FewAllGrades:
        s = ContextStrategy::uniform(all);
        break;
    case TechniqueKind::FewBestWorst:
    case TechniqueKind::CotBestWorst:
        s = ContextStrategy::uniform(best_worst);
        break;
    case TechniqueKind::FewMixed:
        s = ContextStrategy::mixed(best_worst, all);
        break;
    }
    s.noise_count = noise_count;
    s.noise_seed = noise_seed;
    return s;
}

void ExperimentConfig::validate() const {
    if (client_kind != "http" && client_kind != "mock") {
        throw Error("client.kind must be http or mock, got '" + client_kind + "'");
    }
    if (client_kind == "mock" && !MockPolicy::parse(client_policy)) {
        throw Error("unknown mock policy '" + client_policy + "'");
    }
    if (retries < 0) {
        throw Error("client.retries must be >= 0");
    }
    if (parallelism < 1) {
        throw Error("runner.parallelism must be >= 1");
    }
    if (embedding_dim < 1) {
        throw Error("embedding.dim must be >= 1");
    }
    if (http.timeout.count() < 1) {
        throw Error("client.timeout must be >= 1 second");
    }
    strategy_for(technique, noise_count, noise_seed).validate();
}

ExperimentConfig parse_config(std::string_view text, const fs::path& base_dir) {
    ExperimentConfig cfg;
    std::optional<int> k;
    std::optional<int> n;

    using Setter = std::function<void(std::string_view, const std::string&)>;
    const std::map<std::string, Setter, std::less<>> setters = {
        {"corpus.path", [&](auto v, auto&) { cfg.corpus_path = resolve(base_dir, v); }},
        {"rubric.path", [&](auto v, auto&) { cfg.rubric_path = resolve(base_dir, v); }},
        {"technique",
         [&](auto v, auto& key) {
             auto t = parse_technique(v);
             if (!t) {
                 throw Error("unknown " + key + " '" + std::string(v) + "'");
             }
             cfg.technique = *t;
         }},
        {"technique.k", [&](auto v, auto& key) { k = parse_number<int>(v, key); }},
        {"technique.n", [&](auto v, auto& key) { n = parse_number<int>(v, key); }},
        {"ordering",
         [&](auto v, auto& key) {
             auto o = parse_ordering(v);
             if (!o) {
                 throw Error("unknown " + key + " '" + std::string(v) + "'");
             }
             cfg.ordering = *o;
         }},
        {"client.kind", [&](auto v, auto&) { cfg.client_kind = std::string(v); }},
        {"client.policy", [&](auto v, auto&) { cfg.client_policy = std::string(v); }},
        {"client.base_url", [&](auto v, auto&) { cfg.http.base_url = std::string(v); }},
        {"client.model", [&](auto v, auto&) { cfg.http.model = std::string(v); }},
        {"client.temperature",
         [&](auto v, auto& key) { cfg.http.temperature = parse_number<double>(v, key); }},
        {"client.seed",
         [&](auto v, auto& key) {
             if (v == "none") {
                 cfg.http.seed.reset();
             } else {
                 cfg.http.seed = parse_number<std::int64_t>(v, key);
             }
         }},
        {"client.retries", [&](auto v, auto& key) { cfg.retries = parse_number<int>(v, key); }},
        {"client.timeout",
         [&](auto v, auto& key) { cfg.http.timeout = std::chrono::seconds(parse_number<int>(v, key)); }},
        {"noise.count", [&](auto v, auto& key) { cfg.noise_count = parse_number<int>(v, key); }},
        {"noise.seed",
         [&](auto v, auto& key) { cfg.noise_seed = parse_number<std::uint64_t>(v, key); }},
        {"runner.parallelism",
         [&](auto v, auto& key) { cfg.parallelism = parse_number<int>(v, key); }},
        {"runner.token_budget",
         [&](auto v, auto& key) { cfg.token_budget = parse_number<std::size_t>(v, key); }},
        {"output.dir", [&](auto v, auto&) { cfg.output_dir = resolve(base_dir, v); }},
        {"prompts.dir",
         [&](auto v, auto&) {
             if (v.empty()) {
                 cfg.prompts_dir.reset();
             } else {
                 cfg.prompts_dir = resolve(base_dir, v);
             }
         }},
        {"embedding.base_url", [&](auto v, auto&) { cfg.embedding_base_url = std::string(v); }},
        {"embedding.model", [&](auto v, auto&) { cfg.embedding_model = std::string(v); }},
        {"embedding.fallback",
         [&](auto v, auto& key) { cfg.embedding_fallback = parse_bool(v, key); }},
        {"embedding.dim",
         [&](auto v, auto& key) { cfg.embedding_dim = parse_number<std::size_t>(v, key); }},
        {"grading.rounding",
         [&](auto v, auto& key) {
             auto r = parse_rounding(v);
             if (!r) {
                 throw Error("unknown " + key + " '" + std::string(v) + "'");
             }
             cfg.rounding = *r;
         }},
        {"corpus.trust_stored_grades",
         [&](auto v, auto& key) { cfg.trust_stored_grades = parse_bool(v, key); }},
        {"calibration.manifest",
         [&](auto v, auto&) {
             if (v.empty()) {
                 cfg.calibration_manifest.reset();
             } else {
                 cfg.calibration_manifest = resolve(base_dir, v);
             }
         }},
    };

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw Error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        try {
            it->second(value, key);
        } catch (const Error& e) {
            throw Error("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    if (k) {
        cfg.technique.k = *k;
    }
    if (n) {
        cfg.technique.n = *n;
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw Error("cannot read config " + file.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), file.parent_path());
}

namespace {

std::map<std::string, std::string> config_entries(const ExperimentConfig& cfg) {
    return {
        {"corpus.path", cfg.corpus_path.generic_string()},
        {"rubric.path", cfg.rubric_path.generic_string()},
        {"technique", std::string(technique_key(cfg.technique.kind))},
        {"technique.k", std::to_string(cfg.technique.k)},
        {"technique.n", std::to_string(cfg.technique.n)},
        {"ordering", std::string(ordering_key(cfg.ordering))},
        {"client.kind", cfg.client_kind},
        {"client.policy", cfg.client_policy},
        {"client.base_url", cfg.http.base_url},
        {"client.model", cfg.http.model},
        {"client.temperature", format_double(cfg.http.temperature)},
        {"client.seed", cfg.http.seed ? std::to_string(*cfg.http.seed) : "none"},
        {"client.retries", std::to_string(cfg.retries)},
        {"client.timeout", std::to_string(cfg.http.timeout.count())},
        {"noise.count", std::to_string(cfg.noise_count)},
        {"noise.seed", std::to_string(cfg.noise_seed)},
        {"runner.parallelism", std::to_string(cfg.parallelism)},
        {"runner.token_budget", std::to_string(cfg.token_budget)},
        {"output.dir", cfg.output_dir.generic_string()},
        {"prompts.dir", cfg.prompts_dir ? cfg.prompts_dir->generic_string() : ""},
        {"embedding.base_url", cfg.embedding_base_url},
        {"embedding.model", cfg.embedding_model},
        {"embedding.fallback", cfg.embedding_fallback ? "true" : "false"},
        {"embedding.dim", std::to_string(cfg.embedding_dim)},
        {"grading.rounding", std::string(rounding_key(cfg.rounding))},
        {"corpus.trust_stored_grades", cfg.trust_stored_grades ? "true" : "false"},
        {"calibration.manifest",
         cfg.calibration_manifest ? cfg.calibration_manifest->generic_string() : ""},
    };
}

} // namespace

std::string config_to_text(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [key, value] : config_entries(cfg)) {
        out += key + " = " + value + "\n";
    }
    return out;
}

std::string default_config_text() {
    return R"(# aesgrade experiment configuration. Relative paths are resolved against the
# directory of this file.

corpus.path = corpus            # directory of exam *.json records
rubric.path = rubrics           # directory of rubric *.json entries
corpus.trust_stored_grades = false
grading.rounding = half_to_better   # or half_to_worse

# baseline | rag_best_avg_worst | rag_most_similar | rag_range |
# few_all_grades | few_best_worst | few_mixed | cot_best_worst
technique = baseline
technique.k = 1                 # rag_most_similar: references per task
technique.n = 1                 # rag_range: texts per final grade
ordering = base                 # base | inverted | mixed_15243 | mixed_153
calibration.manifest =          # optional exemplar ids per pack and level

client.kind = http              # http | mock
client.policy = echo_gold       # mock only: echo_gold | always_grade(g) | keyword_heuristic
client.base_url = http://localhost:11434
client.model = llama3.3:70b
client.temperature = 0
client.seed = 42                # or none
client.retries = 0
client.timeout = 900            # seconds per request

noise.count = 0
noise.seed = 1

embedding.fallback = true       # deterministic hashed embeddings, no server needed
embedding.base_url = http://localhost:11434
embedding.model = nomic-embed-text
embedding.dim = 128

runner.parallelism = 1
runner.token_budget = 128000    # 0 disables context trimming
output.dir = out
prompts.dir =                   # optional directory of template overrides
)";
}

std::string config_hash(const ExperimentConfig& cfg) {
    auto entries = config_entries(cfg);
    entries.erase("output.dir");
    entries.erase("runner.parallelism");
    std::string canonical;
    for (const auto& [key, value] : entries) {
        canonical += key + "=" + value + "\n";
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

} // namespace aes
