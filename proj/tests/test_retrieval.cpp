#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "aes/retrieval.hpp"
#include "support.hpp"

using namespace aes;

namespace {

// Independent cosine: explicit loops, no shared helper.
double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct BawOracle {
    std::string best, average, worst;
};

// Brute force by full sorting; the most-average distance is computed in floating
// point and snapped back to the integer grid of n * distance.
BawOracle oracle_baw(const Corpus& c, const std::vector<const ExamRecord*>& pool) {
    auto key = [&](const ExamRecord* r) { return std::tuple(gold_final(*r), r->gold.sub.sum()); };
    auto sorted = pool;
    std::sort(sorted.begin(), sorted.end(), [&](auto* a, auto* b) {
        return std::tuple(key(a), a->id) < std::tuple(key(b), b->id);
    });
    BawOracle o;
    o.best = sorted.front()->id;
    std::vector<const ExamRecord*> rest;
    for (auto* r : pool) {
        if (r->id != o.best) {
            rest.push_back(r);
        }
    }
    std::sort(rest.begin(), rest.end(), [&](auto* a, auto* b) {
        const auto ka = key(a);
        const auto kb = key(b);
        if (ka != kb) {
            return ka > kb;
        }
        return a->id < b->id;
    });
    o.worst = rest.front()->id;

    std::array<double, 8> mean{};
    for (auto* r : pool) {
        for (int i = 0; i < 8; ++i) {
            mean[static_cast<std::size_t>(i)] += r->gold.sub.tasks[static_cast<std::size_t>(i / 4)].values[static_cast<std::size_t>(i % 4)];
        }
    }
    for (auto& m : mean) {
        m /= static_cast<double>(pool.size());
    }
    long best_d = -1;
    for (auto* r : pool) {
        if (r->id == o.best || r->id == o.worst) {
            continue;
        }
        double d = 0;
        for (int i = 0; i < 8; ++i) {
            d += std::abs(r->gold.sub.tasks[static_cast<std::size_t>(i / 4)].values[static_cast<std::size_t>(i % 4)] - mean[static_cast<std::size_t>(i)]);
        }
        const long scaled = std::lround(d * static_cast<double>(pool.size()));
        if (best_d < 0 || scaled < best_d || (scaled == best_d && r->id < o.average)) {
            best_d = scaled;
            o.average = r->id;
        }
    }
    (void)c;
    return o;
}

std::vector<std::string> exam_ids(const ContextSelection& s) {
    std::vector<std::string> ids;
    for (const auto& e : s.entries) {
        if (!e.is_noise && (ids.empty() || ids.back() != e.exam_id)) {
            ids.push_back(e.exam_id);
        }
    }
    return ids;
}

} // namespace

TEST_CASE("cosine similarity") {
    const EmbeddingVector a{{1, 2, 3}};
    const EmbeddingVector b{{4, 5, 6}};
    const double expected = 32.0 / std::sqrt(14.0 * 77.0);
    CHECK(cosine_similarity(a, b) == Catch::Approx(expected).epsilon(1e-12));
    CHECK(cosine_similarity(a, b) == Catch::Approx(0.9746318461970762).epsilon(1e-12));
    CHECK(cosine_similarity(a, a) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(a, EmbeddingVector{{-1, -2, -3}}) == Catch::Approx(-1.0));
    CHECK_THROWS_AS(cosine_similarity(a, EmbeddingVector{{1, 2}}), Error);
    CHECK_THROWS_AS(cosine_similarity(a, EmbeddingVector{{0, 0, 0}}), Error);
}

TEST_CASE("fallback embedder") {
    const FallbackEmbedder emb(64);
    const auto x = emb.embed("Die Figur zeigt Verantwortung.");
    CHECK(x.values.size() == 64);
    CHECK(x.source == EmbeddingSource::DeterministicFallback);
    CHECK(emb.embed("Die Figur zeigt Verantwortung.").values == x.values);
    CHECK(emb.embed("aaa").values == emb.embed("aaa ").values);
    CHECK(emb.embed("aaa").values == emb.embed("  aaa\n").values);
    CHECK(std::abs(cosine_similarity(x, x) - 1.0) < 1e-9);
    CHECK(emb.embed("Wetter und Sonne").values != x.values);
    CHECK_THROWS_AS(emb.embed("   \n "), Error);
    // Single punctuation still yields a usable vector.
    CHECK_NOTHROW(cosine_similarity(emb.embed("."), emb.embed(".")));
}

TEST_CASE("best-average-worst matches a brute-force oracle") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u}) {
        std::mt19937_64 rng(seed);
        std::vector<ExamRecord> records;
        for (int i = 0; i < 10; ++i) {
            records.push_back(test::make_exam("e" + std::to_string(i), test::random_grades(rng)));
        }
        const Corpus c(std::move(records));
        const auto pool = c.pack(2023, "haupttermin");
        const auto sel = select_best_average_worst(c, 2023, "haupttermin");
        const auto o = oracle_baw(c, pool);
        INFO("seed " << seed);
        CHECK(exam_ids(sel) == std::vector<std::string>{o.best, o.average, o.worst});
        REQUIRE(sel.entries.size() == 6);
        CHECK(sel.entries[0].task_position == 1);
        CHECK(sel.entries[1].task_position == 2);
    }
}

TEST_CASE("best-average-worst tie breaks and small pools") {
    std::vector<ExamRecord> records;
    for (int i = 0; i < 4; ++i) {
        records.push_back(test::make_exam("t" + std::to_string(i), SubGrades::uniform(3)));
    }
    const Corpus c(std::move(records));
    const auto sel = select_best_average_worst(c, 2023, "haupttermin");
    CHECK(exam_ids(sel) == std::vector<std::string>{"t0", "t2", "t1"});

    const Corpus tiny({test::make_exam("a", SubGrades::uniform(1)), test::make_exam("b", SubGrades::uniform(2))});
    CHECK_THROWS_AS(select_best_average_worst(tiny, 2023, "haupttermin"), Error);
}

TEST_CASE("best-average-worst context is constant for non-member candidates") {
    const Corpus c = test::synthetic(30);
    const RetrievalContext ctx{&c, nullptr, nullptr};
    const auto strategy = ContextStrategy::uniform(BestAverageWorst{});
    std::map<std::string, std::vector<std::string>> by_pack;
    for (const auto& cand : c.records()) {
        const auto fixed = exam_ids(select_best_average_worst(c, cand.year, cand.pack));
        const auto ids = exam_ids(select_context(strategy, ctx, cand));
        CHECK(std::find(ids.begin(), ids.end(), cand.id) == ids.end());
        if (std::find(fixed.begin(), fixed.end(), cand.id) == fixed.end()) {
            CHECK(ids == fixed);
        } else {
            CHECK(ids == exam_ids(select_best_average_worst(c, cand.year, cand.pack, cand.id)));
        }
    }
}

TEST_CASE("most-similar equals a full-scan oracle") {
    const Corpus c = test::synthetic(30);
    const FallbackEmbedder emb;
    const SimilarityIndex index(c, emb, 3);
    for (int k : {1, 4, 7}) {
        for (const auto& cand : c.records()) {
            for (int pos = 1; pos <= 2; ++pos) {
                std::vector<std::pair<double, std::string>> scan;
                const auto q = emb.embed(cand.task(pos).body).values;
                for (const auto& r : c.records()) {
                    if (r.id == cand.id || r.year != cand.year || r.pack != cand.pack) {
                        continue;
                    }
                    scan.emplace_back(-oracle_cosine(q, emb.embed(r.task(pos).body).values), r.id);
                }
                std::sort(scan.begin(), scan.end());
                const auto sel = select_most_similar(index, cand, k, pos);
                REQUIRE(sel.entries.size() == static_cast<std::size_t>(k));
                for (int i = 0; i < k; ++i) {
                    CHECK(sel.entries[static_cast<std::size_t>(i)].exam_id == scan[static_cast<std::size_t>(i)].second);
                    CHECK(*sel.entries[static_cast<std::size_t>(i)].similarity ==
                          Catch::Approx(-scan[static_cast<std::size_t>(i)].first).epsilon(1e-12));
                    CHECK(sel.entries[static_cast<std::size_t>(i)].task_position == pos);
                }
            }
        }
    }
    const auto& cand = c.records().front();
    const auto big = select_most_similar(index, cand, 40, 1);
    CHECK(big.underfilled);
    CHECK(big.entries.size() == 14);
    CHECK_THROWS_AS(select_most_similar(index, cand, 0, 1), Error);
}

TEST_CASE("range of examples covers each final grade n times when available") {
    const Corpus c = test::synthetic(30);
    const FallbackEmbedder emb;
    const SimilarityIndex index(c, emb);
    for (int n : {1, 2}) {
        for (const auto& cand : c.records()) {
            const auto sel = select_range_of_examples(index, cand, n, 1);
            std::array<int, 5> available{};
            for (const auto* r : c.pack(cand.year, cand.pack)) {
                if (r->id != cand.id) {
                    ++available[static_cast<std::size_t>(gold_final(*r) - 1)];
                }
            }
            std::array<int, 5> seen{};
            for (const auto& e : sel.entries) {
                CHECK(e.exam_id != cand.id);
                ++seen[static_cast<std::size_t>(e.final_grade - 1)];
            }
            for (std::size_t g = 0; g < 5; ++g) {
                CHECK(seen[g] == std::min(n, available[g]));
                CHECK(sel.coverage[g] == seen[g]);
            }
            const bool complete = std::all_of(available.begin(), available.end(), [n](int a) { return a >= n; });
            CHECK(sel.underfilled == !complete);
            if (n == 1 && complete) {
                CHECK(sel.entries.size() == 5);
            }
            // Kept texts come in descending similarity.
            for (std::size_t i = 1; i < sel.entries.size(); ++i) {
                CHECK(*sel.entries[i - 1].similarity >= *sel.entries[i].similarity);
            }
        }
    }
}

TEST_CASE("range of examples on a pack with every grade") {
    std::vector<ExamRecord> records;
    for (int i = 0; i < 12; ++i) {
        records.push_back(test::make_exam("r" + std::to_string(10 + i), SubGrades::uniform(1 + i % 5)));
    }
    const Corpus c(std::move(records));
    const FallbackEmbedder emb;
    const SimilarityIndex index(c, emb);
    const auto sel = select_range_of_examples(index, c.at("r10"), 1, 2);
    CHECK(sel.entries.size() == 5);
    CHECK_FALSE(sel.underfilled);
    std::set<int> grades;
    for (const auto& e : sel.entries) {
        grades.insert(e.final_grade);
    }
    CHECK(grades == std::set<int>{1, 2, 3, 4, 5});
}

TEST_CASE("exemplars: manifest first, then closest uniform vector") {
    std::vector<ExamRecord> records;
    records.push_back(test::make_exam("u1", SubGrades::uniform(1)));
    records.push_back(test::make_exam("u3", SubGrades::uniform(3)));
    records.push_back(test::make_exam("u3b", SubGrades::uniform(3)));
    auto near5 = SubGrades::uniform(5);
    near5.task(1)[Dimension::Content] = 4;
    records.push_back(test::make_exam("n5", near5));
    records.push_back(test::make_exam("u4", SubGrades::uniform(4)));
    const Corpus c(std::move(records));

    auto sel = select_exemplars(c, 2023, "haupttermin", {1, 3, 5}, "");
    CHECK(exam_ids(sel) == std::vector<std::string>{"u1", "u3", "n5"});
    CHECK(sel.entries[4].level == 5);

    sel = select_exemplars(c, 2023, "haupttermin", {1, 3, 5}, "u3");
    CHECK(exam_ids(sel) == std::vector<std::string>{"u1", "u3b", "n5"});

    ExemplarManifest m;
    m.set(2023, "haupttermin", 5, "u4");
    sel = select_exemplars(c, 2023, "haupttermin", {1, 3, 5}, "", &m);
    CHECK(exam_ids(sel) == std::vector<std::string>{"u1", "u3", "u4"});

    // Picks stay distinct even when one exam is closest for several levels.
    sel = select_exemplars(c, 2023, "haupttermin", {3, 3, 3, 3, 3, 3}, "");
    const auto ids = exam_ids(sel);
    CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == ids.size());
    CHECK(ids.size() == 5);
    CHECK(sel.underfilled);

    test::TempDir dir;
    test::write_file(dir / "m.json", R"({"2023/haupttermin": {"1": "u3b"}})");
    const auto loaded = ExemplarManifest::load(dir / "m.json");
    CHECK(loaded.lookup(2023, "haupttermin", 1) == "u3b");
    CHECK_FALSE(loaded.lookup(2024, "haupttermin", 1).has_value());
}

TEST_CASE("noise injection") {
    const auto a = inject_noise({}, 3, 42);
    const auto b = inject_noise({}, 3, 42);
    const auto other = inject_noise({}, 3, 43);
    REQUIRE(a.entries.size() == 3);
    CHECK(a.noise_count() == 3);
    CHECK(a.reference_count() == 0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.entries[i].is_noise);
        CHECK(a.entries[i].exam_id == "noise-" + std::to_string(i + 1));
        CHECK(a.entries[i].body == b.entries[i].body);
        const int words = count_words(a.entries[i].body);
        CHECK(words >= 60);
        CHECK(words <= 120);
    }
    CHECK(a.entries[0].body != other.entries[0].body);
    CHECK_THROWS_AS(inject_noise({}, -1, 1), Error);
}

TEST_CASE("leave-one-out holds for every strategy and candidate") {
    const Corpus c = test::synthetic(30);
    const FallbackEmbedder emb;
    const SimilarityIndex index(c, emb);
    const RetrievalContext ctx{&c, &index, nullptr};
    const std::vector<ContextStrategy> strategies = {
        ContextStrategy::uniform(Baseline{}),
        ContextStrategy::uniform(BestAverageWorst{}),
        ContextStrategy::uniform(MostSimilar{4}),
        ContextStrategy::uniform(RangeOfExamples{2}),
        ContextStrategy::uniform(AllGrades{}),
        ContextStrategy::mixed(AllGrades{{1, 3, 5}}, AllGrades{}),
        ContextStrategy::mixed(BestAverageWorst{}, MostSimilar{2}),
    };
    for (const auto& s : strategies) {
        for (const auto& cand : c.records()) {
            for (const auto& e : select_context(s, ctx, cand).entries) {
                CHECK(e.exam_id != cand.id);
                const auto& ref = c.at(e.exam_id);
                CHECK(ref.year == cand.year);
                CHECK(ref.pack == cand.pack);
            }
        }
    }
}

TEST_CASE("select_context layout") {
    const Corpus c = test::synthetic(20);
    const FallbackEmbedder emb;
    const SimilarityIndex index(c, emb);
    const RetrievalContext ctx{&c, &index, nullptr};
    const auto& cand = c.records().front();

    auto sel = select_context(ContextStrategy::uniform(AllGrades{{1, 3, 5}}), ctx, cand);
    REQUIRE(sel.entries.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(sel.entries[i].task_position == static_cast<int>(i % 2) + 1);
    }

    sel = select_context(ContextStrategy::mixed(AllGrades{{1, 3, 5}}, AllGrades{}), ctx, cand);
    REQUIRE(sel.entries.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(sel.entries[i].task_position == (i < 3 ? 1 : 2));
    }

    auto noisy = ContextStrategy::uniform(MostSimilar{2});
    noisy.noise_count = 2;
    noisy.noise_seed = 9;
    sel = select_context(noisy, ctx, cand);
    REQUIRE(sel.entries.size() == 6);
    CHECK(sel.entries[0].task_position == 1);
    CHECK(sel.entries[2].task_position == 2);
    CHECK(sel.entries[4].is_noise);
    CHECK(sel.entries[5].is_noise);

    CHECK(select_context(ContextStrategy::uniform(Baseline{}), ctx, cand).entries.empty());
    const RetrievalContext no_index{&c, nullptr, nullptr};
    CHECK_THROWS_AS(select_context(ContextStrategy::uniform(MostSimilar{1}), no_index, cand), Error);
}

TEST_CASE("strategy validation") {
    CHECK_THROWS_AS(ContextStrategy::uniform(MostSimilar{0}).validate(), Error);
    CHECK_THROWS_AS(ContextStrategy::uniform(RangeOfExamples{0}).validate(), Error);
    CHECK_THROWS_AS(ContextStrategy::uniform(AllGrades{{}}).validate(), Error);
    CHECK_THROWS_AS(ContextStrategy::uniform(AllGrades{{0, 6}}).validate(), Error);
    auto s = ContextStrategy::uniform(Baseline{});
    s.noise_count = -1;
    CHECK_THROWS_AS(s.validate(), Error);
    CHECK(ContextStrategy::mixed(AllGrades{{1, 3, 5}}, AllGrades{}).is_mixed());
    CHECK_FALSE(ContextStrategy::uniform(AllGrades{}).is_mixed());
    CHECK(ContextStrategy::mixed(Baseline{}, MostSimilar{1}).needs_similarity());
    CHECK(describe(MostSimilar{4}) == "most-similar(k=4)");
}
