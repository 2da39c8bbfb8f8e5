#include "aes/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

namespace aes {
namespace {

namespace fs = std::filesystem;

constexpr const char* kFiller[] = {
    "der",      "die",       "das",      "und",        "ist",       "nicht",     "ein",
    "eine",     "mit",       "auf",      "für",        "Text",      "Autor",     "Figur",
    "zeigt",    "wird",      "Gesellschaft", "Leser",  "Sprache",   "Handlung",  "Szene",
    "Meinung",  "Problem",   "Frage",    "Beispiel",   "Zeit",      "Welt",      "Menschen",
    "beschreibt", "erzählt", "wirkt",    "bleibt",     "stellt",    "dar",       "sehr",
    "auch",     "noch",      "immer",    "hier",       "dabei",     "schon",     "oft",
    "Schule",   "Familie",   "Zukunft",  "Verantwortung", "Entscheidung", "Gefühl", "Konflikt",
};

constexpr const char* kLong[] = {
    "Auseinandersetzung", "Verhaltensweisen", "Wahrnehmung",    "Gesellschaftskritik",
    "Interpretation",     "Charakterisierung", "Überzeugungskraft", "Lebensumstände",
    "Argumentation",      "Rahmenbedingungen", "Zusammenhang",   "Perspektivenwechsel",
};

constexpr const char* kConnectives[] = {
    "jedoch", "folglich", "einerseits", "andererseits", "zusammenfassend", "außerdem",
    "deshalb", "somit",   "allerdings", "beispielsweise", "schließlich",   "dennoch",
    "zudem",  "insbesondere",
};

struct PackSpec {
    int year;
    const char* pack;
    TextType task1;
    TextType task2;
};

constexpr PackSpec kPacks[] = {
    {2023, "haupttermin", TextType::LiteraryInterpretation, TextType::LetterToEditor},
    {2024, "haupttermin", TextType::LiteraryInterpretation, TextType::Commentary},
};

template <std::size_t N>
const char* pick(std::mt19937_64& rng, const char* const (&words)[N]) {
    return words[rng() % N];
}

std::string make_body(std::mt19937_64& rng, const TaskGrades& g) {
    const int connective_per_mille = (5 - g[Dimension::Content]) * 10 + 5;
    const int long_per_mille = (5 - g[Dimension::LanguageNorms]) * 60 + 20;
    const int paragraphs = std::max(1, 6 - g[Dimension::Structure]);
    const int words = 140 + static_cast<int>(rng() % 80);

    std::string body;
    bool sentence_start = true;
    for (int i = 0; i < words; ++i) {
        if (i > 0) {
            const bool paragraph_break = i % (words / paragraphs + 1) == 0;
            if (paragraph_break && body.back() != '.') {
                body += '.';
            }
            body += paragraph_break ? "\n\n" : " ";
            if (paragraph_break) {
                sentence_start = true;
            }
        }
        std::string word;
        if (static_cast<int>(rng() % 1000) < connective_per_mille) {
            word = pick(rng, kConnectives);
        } else if (static_cast<int>(rng() % 1000) < long_per_mille) {
            word = pick(rng, kLong);
        } else {
            word = pick(rng, kFiller);
        }
        if (sentence_start && !word.empty() && word[0] >= 'a' && word[0] <= 'z') {
            word[0] = static_cast<char>(word[0] - 'a' + 'A');
        }
        sentence_start = rng() % 9 == 0;
        body += word;
        if (sentence_start || i + 1 == words) {
            body += ".";
            sentence_start = true;
        }
    }
    return body;
}

int draw_base(std::mt19937_64& rng, const std::array<int, kGradeCount>& weights) {
    int total = 0;
    for (int w : weights) {
        total += w;
    }
    if (total <= 0) {
        throw Error("synthetic grade weights must have a positive sum");
    }
    int r = static_cast<int>(rng() % static_cast<std::uint64_t>(total));
    for (int g = 0; g < kGradeCount; ++g) {
        r -= weights[static_cast<std::size_t>(g)];
        if (r < 0) {
            return g + 1;
        }
    }
    return kMaxGrade;
}

std::string descriptor(TextType t, Dimension d, int grade) {
    static constexpr const char* kLevel[] = {"", "weit über das Wesentliche hinaus",
                                             "über das Wesentliche hinaus",
                                             "im Wesentlichen", "überwiegend"};
    return std::string(dimension_german(d)) + " (" + std::string(text_type_german(t)) +
           "): Die Anforderungen werden " + kLevel[grade] + " erfüllt.";
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content)) {
        throw Error("cannot write " + path.string());
    }
}

} // namespace

Corpus make_synthetic_corpus(const SyntheticOptions& opts) {
    if (opts.count < 1) {
        throw Error("synthetic corpus needs at least one exam");
    }
    std::mt19937_64 rng(opts.seed);
    std::vector<ExamRecord> records;
    for (int i = 0; i < opts.count; ++i) {
        const PackSpec& spec = kPacks[i % 2];
        ExamRecord r;
        char id[32];
        std::snprintf(id, sizeof id, "syn-%d-%03d", spec.year, i + 1);
        r.id = id;
        r.year = spec.year;
        r.pack = spec.pack;

        const int base = draw_base(rng, opts.weights);
        for (int pos = 1; pos <= 2; ++pos) {
            for (Dimension d : kAllDimensions) {
                const int delta = static_cast<int>(rng() % 5) - 2; // -2..2, mostly near base
                const int shift = delta == -2 || delta == 2 ? 0 : delta;
                r.gold.sub.task(pos)[d] = std::clamp(base + shift, kMinGrade, kMaxGrade);
            }
        }
        for (int pos = 1; pos <= 2; ++pos) {
            auto& t = r.tasks[static_cast<std::size_t>(pos - 1)];
            t.text_type = pos == 1 ? spec.task1 : spec.task2;
            t.body = normalize_text(make_body(rng, r.gold.sub.task(pos)));
            t.word_count = count_words(t.body);
        }

        const ExamOutcome o = aggregate(r.gold.sub);
        r.gold.k1 = o.sections.k1.value();
        r.gold.k2 = o.sections.k2.value();
        r.gold.k3_1 = o.sections.k3_1.value();
        r.gold.k3_2 = o.sections.k3_2.value();
        r.gold.k3 = o.sections.k3.value();
        r.gold.final = o.final.as_int();
        records.push_back(std::move(r));
    }
    return Corpus(std::move(records));
}

RubricSet make_synthetic_rubrics() {
    static const std::pair<TextType, const char*> kTypes[] = {
        {TextType::LiteraryInterpretation,
         "Deutung eines literarischen Textes unter Einbezug von Inhalt, Form und Wirkung."},
        {TextType::LetterToEditor,
         "Meinungsbetonter Brief an eine Redaktion mit Bezug auf einen Zeitungsartikel."},
        {TextType::Commentary,
         "Meinungsbetonter Text, der ein aktuelles Thema bewertet und eine klare Position vertritt."},
    };
    RubricSet set;
    for (const auto& [type, summary] : kTypes) {
        RubricEntry e;
        e.text_type = type;
        e.summary = summary;
        for (Dimension d : kAllDimensions) {
            for (int g = 1; g <= 4; ++g) {
                e.descriptors[d][g] = descriptor(type, d, g);
            }
        }
        set.add(std::move(e));
    }
    return set;
}

void write_synthetic(const fs::path& dir, const SyntheticOptions& opts) {
    const Corpus corpus = make_synthetic_corpus(opts);
    std::error_code ec;
    fs::create_directories(dir / "exams", ec);
    fs::create_directories(dir / "rubrics", ec);
    if (ec) {
        throw Error("cannot create " + dir.string() + ": " + ec.message());
    }
    for (const auto& r : corpus.records()) {
        write_file(dir / "exams" / (r.id + ".json"), exam_to_json(r).dump(2) + "\n");
    }
    const RubricSet rubrics = make_synthetic_rubrics();
    for (const auto& [type, entry] : rubrics.entries()) {
        write_file(dir / "rubrics" / (std::string(text_type_key(type)) + ".json"),
                   rubric_to_json(entry).dump(2) + "\n");
    }
    write_file(dir / "experiment.cfg",
               "# Offline experiment over the synthetic corpus.\n"
               "corpus.path = exams\n"
               "rubric.path = rubrics\n"
               "technique = rag_best_avg_worst\n"
               "ordering = base\n"
               "client.kind = mock\n"
               "client.policy = keyword_heuristic\n"
               "embedding.fallback = true\n"
               "runner.parallelism = 4\n"
               "output.dir = out\n");
}

} // namespace aes
