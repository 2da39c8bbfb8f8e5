#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "aes/corpus.hpp"
#include "aes/synthetic.hpp"

namespace aes::test {

class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() /
                ("aes_test_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline ExamRecord make_exam(std::string id, const SubGrades& grades, int year = 2023,
                            std::string pack = "haupttermin") {
    ExamRecord r;
    r.id = std::move(id);
    r.year = year;
    r.pack = std::move(pack);
    r.tasks[0] = {TextType::LiteraryInterpretation, "Erster Text von " + r.id + " mit Inhalt.", 0};
    r.tasks[1] = {TextType::LetterToEditor, "Zweiter Text von " + r.id + " mit Meinung.", 0};
    for (auto& t : r.tasks) {
        t.word_count = count_words(t.body);
    }
    r.gold.sub = grades;
    return r;
}

inline SubGrades random_grades(std::mt19937_64& rng) {
    SubGrades g;
    for (auto& t : g.tasks) {
        for (auto& v : t.values) {
            v = 1 + static_cast<int>(rng() % 5);
        }
    }
    return g;
}

inline Corpus synthetic(int n, std::uint64_t seed = 7) {
    SyntheticOptions opts;
    opts.count = n;
    opts.seed = seed;
    return make_synthetic_corpus(opts);
}

} // namespace aes::test
