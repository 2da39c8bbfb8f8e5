#include "aes/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

namespace aes {
namespace {

// Word pool for noise documents. Common German words, no punctuation.
constexpr std::string_view kNoiseWords[] = {
    "Haus",      "Baum",       "laufen",    "Fenster",   "grün",       "Sonne",     "Wasser",
    "schnell",   "Tisch",      "Zeitung",   "Stadt",     "vielleicht", "Himmel",    "Brot",
    "arbeiten",  "Zug",        "Lampe",     "morgen",    "Katze",      "Straße",    "leise",
    "Buch",      "Garten",     "rot",       "Freund",    "Schule",     "Berg",      "fahren",
    "Küche",     "Uhr",        "Wolke",     "immer",     "Musik",      "Stuhl",     "klein",
    "Meer",      "Apfel",      "denken",    "Brücke",    "Winter",     "hell",      "Vogel",
    "Papier",    "Tür",        "gestern",   "Kaffee",    "spielen",    "Wald",      "Bahnhof",
    "blau",      "Reise",      "Hund",      "warm",      "Fluss",      "Telefon",   "lesen",
    "Fahrrad",   "Markt",      "dunkel",    "Kirche",    "Sommer",     "Blume",     "singen",
    "Schiff",    "Geld",       "ruhig",     "Dorf",      "Nacht",      "Feld",      "schreiben",
    "Insel",     "Löffel",     "bald",      "Wiese",     "Regen",      "Bild",      "tragen",
    "Flasche",   "hoch",       "Turm",      "Abend",     "Stein",      "kaufen",    "Karte",
    "weit",      "Gras",       "Fisch",     "oben",      "Spiegel",    "Kerze",     "gehen",
    "Mantel",    "Schnee",     "neu",       "Hafen",     "Kiste",      "Sand",      "öffnen",
    "Glas",      "Bank",       "alt",       "Wand",      "Zimmer",     "rufen",     "Pferd",
    "Nebel",     "still",      "Platz",     "Koffer",    "Ecke",       "springen",  "Boden",
    "Licht",     "kalt",       "Schrank",   "Ziel",      "Ufer",       "trinken",   "Stern",
};

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

ContextEntry make_entry(const ExamRecord& exam, int position, Rounding rounding) {
    ContextEntry e;
    e.exam_id = exam.id;
    e.task_position = position;
    e.text_type = exam.task(position).text_type;
    e.body = exam.task(position).body;
    e.gold = exam.gold.sub.task(position);
    e.final_grade = gold_final(exam, rounding);
    e.level = e.final_grade;
    return e;
}

void append_both_tasks(ContextSelection& sel, const ExamRecord& exam, Rounding rounding,
                       int level) {
    for (int pos = 1; pos <= 2; ++pos) {
        auto e = make_entry(exam, pos, rounding);
        e.level = level;
        sel.entries.push_back(std::move(e));
    }
}

bool is_exam_level(const TaskStrategy& s) {
    return std::holds_alternative<BestAverageWorst>(s) || std::holds_alternative<AllGrades>(s);
}

} // namespace

std::size_t ContextSelection::reference_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.is_noise; }));
}

std::size_t ContextSelection::noise_count() const {
    return entries.size() - reference_count();
}

bool ContextStrategy::needs_similarity() const {
    const auto similar = [](const TaskStrategy& s) {
        return std::holds_alternative<MostSimilar>(s) || std::holds_alternative<RangeOfExamples>(s);
    };
    return similar(task1) || similar(task2);
}

void ContextStrategy::validate() const {
    for (const TaskStrategy* s : {&task1, &task2}) {
        if (const auto* m = std::get_if<MostSimilar>(s); m && m->k < 1) {
            throw Error("most-similar k must be >= 1");
        }
        if (const auto* r = std::get_if<RangeOfExamples>(s); r && r->n < 1) {
            throw Error("range-of-examples n must be >= 1");
        }
        if (const auto* a = std::get_if<AllGrades>(s)) {
            if (a->levels.empty()) {
                throw Error("exemplar levels must not be empty");
            }
            for (int g : a->levels) {
                if (!grade_in_range(g)) {
                    throw Error("exemplar level out of range: " + std::to_string(g));
                }
            }
        }
    }
    if (noise_count < 0) {
        throw Error("noise count must be >= 0");
    }
}

std::string describe(const TaskStrategy& s) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Baseline>) {
                return "baseline";
            } else if constexpr (std::is_same_v<T, BestAverageWorst>) {
                return "best-average-worst";
            } else if constexpr (std::is_same_v<T, MostSimilar>) {
                return "most-similar(k=" + std::to_string(v.k) + ")";
            } else if constexpr (std::is_same_v<T, RangeOfExamples>) {
                return "range-of-examples(n=" + std::to_string(v.n) + ")";
            } else {
                std::string levels;
                for (int g : v.levels) {
                    levels += (levels.empty() ? "" : ",") + std::to_string(g);
                }
                return "exemplars(" + levels + ")";
            }
        },
        s);
}

ExemplarManifest ExemplarManifest::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw Error("cannot open exemplar manifest " + file.string());
    }
    ExemplarManifest m;
    try {
        const auto doc = nlohmann::json::parse(in);
        for (const auto& [key, levels] : doc.items()) {
            for (const auto& [level, id] : levels.items()) {
                m.by_pack_[key][std::stoi(level)] = id.get<std::string>();
            }
        }
    } catch (const std::exception& e) {
        throw Error("malformed exemplar manifest " + file.string() + ": " + e.what());
    }
    return m;
}

void ExemplarManifest::set(int year, const std::string& pack, int level, std::string id) {
    by_pack_[std::to_string(year) + "/" + pack][level] = std::move(id);
}

std::optional<std::string> ExemplarManifest::lookup(int year, const std::string& pack,
                                                    int level) const {
    auto it = by_pack_.find(std::to_string(year) + "/" + pack);
    if (it == by_pack_.end()) {
        return std::nullopt;
    }
    auto jt = it->second.find(level);
    if (jt == it->second.end()) {
        return std::nullopt;
    }
    return jt->second;
}

SimilarityIndex::SimilarityIndex(const Corpus& corpus, const Embedder& embedder, int parallelism)
    : corpus_(&corpus), embedder_(&embedder) {
    struct Job {
        const ExamRecord* exam;
        int position;
        EmbeddingVector result;
    };
    std::vector<Job> jobs;
    for (const auto& r : corpus.records()) {
        jobs.push_back({&r, 1, {}});
        jobs.push_back({&r, 2, {}});
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::string first_error;
    const auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                jobs[i].result = embedder.embed(jobs[i].exam->task(jobs[i].position).body);
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                if (first_error.empty()) {
                    first_error = e.what();
                }
            }
        }
    };
    const int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(jobs.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (!first_error.empty()) {
        throw Error("building similarity index failed: " + first_error);
    }

    std::size_t dim = 0;
    for (auto& job : jobs) {
        if (dim == 0) {
            dim = job.result.values.size();
        } else if (job.result.values.size() != dim) {
            throw Error("embedder returned vectors of differing length");
        }
        vectors_.emplace(std::make_pair(job.exam->id, job.position), std::move(job.result));
    }
}

const EmbeddingVector& SimilarityIndex::vector_of(std::string_view exam_id, int position) const {
    auto it = vectors_.find(std::make_pair(std::string(exam_id), position));
    if (it == vectors_.end()) {
        throw Error("exam not indexed: " + std::string(exam_id));
    }
    return it->second;
}

std::vector<SimilarityIndex::Scored> SimilarityIndex::rank(const ExamRecord& candidate,
                                                           int position) const {
    EmbeddingVector external;
    const EmbeddingVector* query = nullptr;
    if (auto it = vectors_.find(std::make_pair(candidate.id, position)); it != vectors_.end()) {
        query = &it->second;
    } else {
        external = embedder_->embed(candidate.task(position).body);
        query = &external;
    }

    std::vector<Scored> out;
    for (const ExamRecord* r : corpus_->pack(candidate.year, candidate.pack)) {
        if (r->id == candidate.id) {
            continue;
        }
        out.push_back({r, cosine_similarity(*query, vector_of(r->id, position))});
    }
    std::sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) {
        if (a.similarity != b.similarity) {
            return a.similarity > b.similarity;
        }
        return a.exam->id < b.exam->id;
    });
    return out;
}

ContextSelection select_best_average_worst(const Corpus& corpus, int year, const std::string& pack,
                                           const std::string& exclude_id) {
    std::vector<const ExamRecord*> pool;
    for (const ExamRecord* r : corpus.pack(year, pack)) {
        if (r->id != exclude_id) {
            pool.push_back(r);
        }
    }
    if (pool.size() < 3) {
        throw Error("best-average-worst needs at least 3 exams in " + std::to_string(year) + "/" +
                    pack + ", found " + std::to_string(pool.size()));
    }
    const Rounding rounding = corpus.rounding();

    // pool is id-sorted, so strict comparisons keep the smallest id on ties.
    const ExamRecord* best = nullptr;
    for (const ExamRecord* r : pool) {
        if (!best) {
            best = r;
            continue;
        }
        const auto key_r = std::make_pair(gold_final(*r, rounding), r->gold.sub.sum());
        const auto key_b = std::make_pair(gold_final(*best, rounding), best->gold.sub.sum());
        if (key_r < key_b) {
            best = r;
        }
    }
    const ExamRecord* worst = nullptr;
    for (const ExamRecord* r : pool) {
        if (r == best) {
            continue;
        }
        if (!worst) {
            worst = r;
            continue;
        }
        const auto key_r = std::make_pair(gold_final(*r, rounding), r->gold.sub.sum());
        const auto key_w = std::make_pair(gold_final(*worst, rounding), worst->gold.sub.sum());
        if (key_r > key_w) {
            worst = r;
        }
    }

    // L1 distance to per-dimension means, scaled by pool size to stay in integers.
    const long n = static_cast<long>(pool.size());
    std::array<std::array<long, 4>, 2> sums{};
    for (const ExamRecord* r : pool) {
        for (int pos = 1; pos <= 2; ++pos) {
            for (Dimension d : kAllDimensions) {
                sums[pos - 1][static_cast<std::size_t>(d)] += r->gold.sub.task(pos)[d];
            }
        }
    }
    const ExamRecord* average = nullptr;
    long best_distance = 0;
    for (const ExamRecord* r : pool) {
        if (r == best || r == worst) {
            continue;
        }
        long distance = 0;
        for (int pos = 1; pos <= 2; ++pos) {
            for (Dimension d : kAllDimensions) {
                distance +=
                    std::labs(n * r->gold.sub.task(pos)[d] - sums[pos - 1][static_cast<std::size_t>(d)]);
            }
        }
        if (!average || distance < best_distance) {
            average = r;
            best_distance = distance;
        }
    }

    ContextSelection sel;
    for (const ExamRecord* r : {best, average, worst}) {
        append_both_tasks(sel, *r, rounding, gold_final(*r, rounding));
    }
    return sel;
}

ContextSelection select_most_similar(const SimilarityIndex& index, const ExamRecord& candidate,
                                     int k, int position) {
    if (k < 1) {
        throw Error("most-similar k must be >= 1");
    }
    const auto ranked = index.rank(candidate, position);
    ContextSelection sel;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
    for (std::size_t i = 0; i < take; ++i) {
        auto e = make_entry(*ranked[i].exam, position, index.corpus().rounding());
        e.similarity = ranked[i].similarity;
        sel.entries.push_back(std::move(e));
    }
    if (ranked.size() < static_cast<std::size_t>(k)) {
        sel.underfilled = true;
        sel.notes.push_back("pool holds only " + std::to_string(ranked.size()) +
                            " texts, fewer than k=" + std::to_string(k));
    }
    return sel;
}

ContextSelection select_range_of_examples(const SimilarityIndex& index,
                                          const ExamRecord& candidate, int n, int position) {
    if (n < 1) {
        throw Error("range-of-examples n must be >= 1");
    }
    ContextSelection sel;
    for (const auto& scored : index.rank(candidate, position)) {
        const int final = gold_final(*scored.exam, index.corpus().rounding());
        int& kept = sel.coverage[static_cast<std::size_t>(final - 1)];
        if (kept >= n) {
            continue;
        }
        ++kept;
        auto e = make_entry(*scored.exam, position, index.corpus().rounding());
        e.similarity = scored.similarity;
        sel.entries.push_back(std::move(e));
        if (std::all_of(sel.coverage.begin(), sel.coverage.end(), [n](int c) { return c >= n; })) {
            break;
        }
    }
    for (int g = 1; g <= kGradeCount; ++g) {
        if (sel.coverage[static_cast<std::size_t>(g - 1)] < n) {
            sel.underfilled = true;
            sel.notes.push_back("grade " + std::to_string(g) + ": " +
                                std::to_string(sel.coverage[static_cast<std::size_t>(g - 1)]) +
                                " of " + std::to_string(n));
        }
    }
    return sel;
}

ContextSelection select_exemplars(const Corpus& corpus, int year, const std::string& pack,
                                  const std::vector<int>& levels, const std::string& exclude_id,
                                  const ExemplarManifest* manifest) {
    std::vector<const ExamRecord*> pool;
    for (const ExamRecord* r : corpus.pack(year, pack)) {
        if (r->id != exclude_id) {
            pool.push_back(r);
        }
    }
    ContextSelection sel;
    std::vector<const ExamRecord*> used;
    const auto is_used = [&](const ExamRecord* r) {
        return std::find(used.begin(), used.end(), r) != used.end();
    };

    for (int level : levels) {
        const ExamRecord* pick = nullptr;
        if (manifest) {
            if (auto id = manifest->lookup(year, pack, level); id && *id != exclude_id) {
                const ExamRecord* r = corpus.find(*id);
                if (r && r->year == year && r->pack == pack && !is_used(r)) {
                    pick = r;
                } else if (!r) {
                    sel.notes.push_back("manifest id " + *id + " not in corpus");
                }
            }
        }
        if (!pick) {
            int best_distance = 0;
            for (const ExamRecord* r : pool) {
                if (is_used(r)) {
                    continue;
                }
                int distance = 0;
                for (const auto& t : r->gold.sub.tasks) {
                    for (int v : t.values) {
                        distance += std::abs(v - level);
                    }
                }
                if (!pick || distance < best_distance) {
                    pick = r;
                    best_distance = distance;
                }
            }
        }
        if (!pick) {
            sel.underfilled = true;
            sel.notes.push_back("no exemplar left for level " + std::to_string(level));
            continue;
        }
        used.push_back(pick);
        append_both_tasks(sel, *pick, corpus.rounding(), level);
    }
    return sel;
}

ContextSelection inject_noise(ContextSelection selection, int count, std::uint64_t seed) {
    if (count < 0) {
        throw Error("noise count must be >= 0");
    }
    std::mt19937_64 rng(seed);
    constexpr std::size_t kWords = std::size(kNoiseWords);
    for (int i = 0; i < count; ++i) {
        const std::size_t length = 60 + uniform_index(rng, 61);
        std::string body;
        for (std::size_t w = 0; w < length; ++w) {
            if (w > 0) {
                body += ' ';
            }
            body += kNoiseWords[uniform_index(rng, kWords)];
        }
        ContextEntry e;
        e.exam_id = "noise-" + std::to_string(i + 1);
        e.body = std::move(body);
        e.is_noise = true;
        selection.entries.push_back(std::move(e));
    }
    return selection;
}

ContextSelection restrict_to_task(const ContextSelection& selection, int position) {
    ContextSelection out = selection;
    std::erase_if(out.entries, [position](const ContextEntry& e) {
        return !e.is_noise && e.task_position != position;
    });
    return out;
}

namespace {

ContextSelection select_task(const TaskStrategy& strategy, const RetrievalContext& ctx,
                             const ExamRecord& candidate, std::optional<int> position) {
    const Corpus& corpus = *ctx.corpus;
    const auto need_index = [&]() -> const SimilarityIndex& {
        if (!ctx.index) {
            throw Error("similarity strategy requires an index");
        }
        return *ctx.index;
    };

    ContextSelection sel = std::visit(
        [&](const auto& s) -> ContextSelection {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Baseline>) {
                return {};
            } else if constexpr (std::is_same_v<T, BestAverageWorst>) {
                // Constant per pack; recomputed without the candidate only when the
                // candidate is itself one of the three.
                auto fixed = select_best_average_worst(corpus, candidate.year, candidate.pack);
                const bool contains = std::any_of(
                    fixed.entries.begin(), fixed.entries.end(),
                    [&](const ContextEntry& e) { return e.exam_id == candidate.id; });
                if (contains) {
                    fixed = select_best_average_worst(corpus, candidate.year, candidate.pack,
                                                      candidate.id);
                    fixed.notes.push_back("candidate is a pack reference; substituted");
                }
                return fixed;
            } else if constexpr (std::is_same_v<T, AllGrades>) {
                return select_exemplars(corpus, candidate.year, candidate.pack, s.levels,
                                        candidate.id, ctx.manifest);
            } else if constexpr (std::is_same_v<T, MostSimilar>) {
                return select_most_similar(need_index(), candidate, s.k, position.value_or(1));
            } else {
                return select_range_of_examples(need_index(), candidate, s.n,
                                                position.value_or(1));
            }
        },
        strategy);
    if (position && is_exam_level(strategy)) {
        sel = restrict_to_task(sel, *position);
    }
    return sel;
}

void append_selection(ContextSelection& into, ContextSelection from) {
    for (auto& e : from.entries) {
        into.entries.push_back(std::move(e));
    }
    into.underfilled = into.underfilled || from.underfilled;
    for (std::size_t g = 0; g < into.coverage.size(); ++g) {
        into.coverage[g] += from.coverage[g];
    }
    for (auto& n : from.notes) {
        into.notes.push_back(std::move(n));
    }
}

} // namespace

ContextSelection select_context(const ContextStrategy& strategy, const RetrievalContext& ctx,
                                const ExamRecord& candidate) {
    if (!ctx.corpus) {
        throw Error("retrieval context has no corpus");
    }
    strategy.validate();

    ContextSelection sel;
    if (!strategy.is_mixed() && is_exam_level(strategy.task1)) {
        sel = select_task(strategy.task1, ctx, candidate, std::nullopt);
    } else {
        append_selection(sel, select_task(strategy.task1, ctx, candidate, 1));
        append_selection(sel, select_task(strategy.task2, ctx, candidate, 2));
    }
    if (strategy.noise_count > 0) {
        sel = inject_noise(std::move(sel), strategy.noise_count, strategy.noise_seed);
    }
    return sel;
}

} // namespace aes
