#include "aes/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace aes {
namespace {

using nlohmann::json;

bool is_ascii_lower(unsigned char c) { return c >= 'a' && c <= 'z'; }
bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

// Latin-1 supplement letters encoded as C3 xx; 0x9F (sharp s) and A0..BF are lowercase.
bool starts_lowercase(std::string_view s, std::size_t i) {
    if (i >= s.size()) {
        return false;
    }
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_ascii_lower(c)) {
        return true;
    }
    if (c == 0xC3 && i + 1 < s.size()) {
        const auto d = static_cast<unsigned char>(s[i + 1]);
        return d >= 0x9F && d <= 0xBF && d != 0xB7;
    }
    return false;
}

bool starts_letter(std::string_view s, std::size_t i) {
    if (i >= s.size()) {
        return false;
    }
    const auto c = static_cast<unsigned char>(s[i]);
    return is_ascii_alpha(c) || c >= 0x80;
}

bool ends_with_letter(const std::string& s) {
    if (s.empty()) {
        return false;
    }
    const auto c = static_cast<unsigned char>(s.back());
    return is_ascii_alpha(c) || c >= 0x80;
}

// Line endings to \n, tabs to spaces, control characters (C0, DEL, C1) removed.
std::string strip_controls(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto c = static_cast<unsigned char>(raw[i]);
        if (c == '\r') {
            out.push_back('\n');
            if (i + 1 < raw.size() && raw[i + 1] == '\n') {
                ++i;
            }
        } else if (c == '\n') {
            out.push_back('\n');
        } else if (c == '\t' || c == '\v' || c == '\f') {
            out.push_back(' ');
        } else if (c < 0x20 || c == 0x7F) {
            continue;
        } else if (c == 0xC2 && i + 1 < raw.size() &&
                   static_cast<unsigned char>(raw[i + 1]) >= 0x80 &&
                   static_cast<unsigned char>(raw[i + 1]) <= 0x9F) {
            ++i;
        } else {
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

bool is_space(char c) { return c == ' ' || c == '\n'; }

int required_int(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw Error("missing field: " + path + key);
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
        throw Error("field is not an integer: " + path + key);
    }
    return v.get<int>();
}

std::optional<int> optional_grade(const json& obj, const std::string& key, bool allow_fail) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (v.is_number_integer()) {
        return v.get<int>();
    }
    if (allow_fail && v.is_string() && v.get<std::string>() == "fail") {
        return kMaxGrade;
    }
    throw Error("field is not a grade: gold." + key);
}

const std::string& required_string(const json& obj, const std::string& key,
                                   const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw Error("missing field: " + path + key);
    }
    const auto& v = obj.at(key);
    if (!v.is_string()) {
        throw Error("field is not a string: " + path + key);
    }
    return v.get_ref<const std::string&>();
}

TaskGrades parse_task_grades(const json& gold, const std::string& key) {
    if (!gold.contains(key) || !gold.at(key).is_object()) {
        throw Error("missing field: gold." + key);
    }
    const auto& t = gold.at(key);
    TaskGrades g;
    for (Dimension d : kAllDimensions) {
        g[d] = required_int(t, std::string(dimension_key(d)), "gold." + key + ".");
    }
    return g;
}

json task_grades_json(const TaskGrades& g) {
    json j = json::object();
    for (Dimension d : kAllDimensions) {
        j[std::string(dimension_key(d))] = g[d];
    }
    return j;
}

json read_json_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + file.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return json::parse(buf.str());
}

std::vector<std::filesystem::path> json_files(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw Error("not a readable directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    std::filesystem::directory_iterator it(dir, ec);
    if (ec) {
        throw Error("cannot read directory " + dir.string() + ": " + ec.message());
    }
    for (const auto& entry : it) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace

std::string normalize_text(std::string_view raw) {
    const std::string s = strip_controls(raw);
    std::string out;
    out.reserve(s.size());

    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (c == '-' && ends_with_letter(out)) {
            // Soft hyphenation: letter '-' [spaces] '\n' [spaces] letter, single break only.
            std::size_t j = i + 1;
            while (j < s.size() && s[j] == ' ') {
                ++j;
            }
            if (j < s.size() && s[j] == '\n') {
                std::size_t k = j + 1;
                while (k < s.size() && s[k] == ' ') {
                    ++k;
                }
                if (starts_lowercase(s, k)) {
                    i = k;
                    continue;
                }
                if (starts_letter(s, k)) {
                    out.push_back('-');
                    i = k;
                    continue;
                }
            }
            out.push_back(c);
            ++i;
            continue;
        }
        if (is_space(c)) {
            int newlines = 0;
            while (i < s.size() && is_space(s[i])) {
                newlines += s[i] == '\n' ? 1 : 0;
                ++i;
            }
            if (out.empty() || i == s.size()) {
                continue;
            }
            out += newlines >= 2 ? "\n\n" : " ";
            continue;
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

int count_words(std::string_view normalized) {
    int count = 0;
    bool in_word = false;
    for (char c : normalized) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

ValidationResult validate_record(const ExamRecord& record, const CorpusOptions& opts) {
    ValidationResult result;
    auto& v = result.violations;

    for (int pos = 1; pos <= 2; ++pos) {
        if (record.task(pos).body.empty()) {
            v.push_back("task" + std::to_string(pos) + " body is empty");
        }
        for (Dimension d : kAllDimensions) {
            const int g = record.gold.sub.task(pos)[d];
            if (!grade_in_range(g)) {
                v.push_back("grade out of range: " + sub_dimension_key(pos, d) + " = " +
                            std::to_string(g));
            }
        }
    }

    const std::pair<const char*, const std::optional<int>*> stored[] = {
        {"k1", &record.gold.k1},     {"k2", &record.gold.k2}, {"k3_1", &record.gold.k3_1},
        {"k3_2", &record.gold.k3_2}, {"k3", &record.gold.k3}, {"final", &record.gold.final},
    };
    for (const auto& [name, value] : stored) {
        if (*value && !grade_in_range(**value)) {
            v.push_back(std::string("grade out of range: ") + name + " = " +
                        std::to_string(**value));
        }
    }
    if (!result.ok() || opts.trust_stored_grades) {
        return result;
    }

    const ExamOutcome expected = aggregate(record.gold.sub, opts.rounding);
    const auto check = [&](const char* name, const std::optional<int>& value, Grade want) {
        if (value && *value != want.value()) {
            v.push_back(std::string("stored ") + name +
                        " inconsistent with recomputation (expected " +
                        std::to_string(want.value()) + ")");
        }
    };
    check("k1", record.gold.k1, expected.sections.k1);
    check("k2", record.gold.k2, expected.sections.k2);
    check("k3_1", record.gold.k3_1, expected.sections.k3_1);
    check("k3_2", record.gold.k3_2, expected.sections.k3_2);
    check("k3", record.gold.k3, expected.sections.k3);
    if (record.gold.final && *record.gold.final != expected.final.as_int()) {
        v.push_back("stored final inconsistent with recomputation (expected " +
                    (expected.final.failed() ? std::string("fail")
                                             : std::to_string(expected.final.as_int())) +
                    ")");
    }
    return result;
}

int gold_final(const ExamRecord& record, Rounding mode) {
    if (record.gold.final) {
        return *record.gold.final;
    }
    return aggregate(record.gold.sub, mode).final.as_int();
}

Corpus::Corpus(std::vector<ExamRecord> records) : records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(),
              [](const ExamRecord& a, const ExamRecord& b) { return a.id < b.id; });
}

const ExamRecord* Corpus::find(std::string_view id) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), id,
                               [](const ExamRecord& r, std::string_view key) { return r.id < key; });
    return it != records_.end() && it->id == id ? &*it : nullptr;
}

const ExamRecord& Corpus::at(std::string_view id) const {
    if (const auto* r = find(id)) {
        return *r;
    }
    throw Error("unknown exam id: " + std::string(id));
}

std::vector<const ExamRecord*> Corpus::pack(int year, std::string_view pack) const {
    std::vector<const ExamRecord*> out;
    for (const auto& r : records_) {
        if (r.year == year && r.pack == pack) {
            out.push_back(&r);
        }
    }
    return out;
}

ExamRecord parse_exam(const json& doc) {
    if (!doc.is_object()) {
        throw Error("exam document is not a JSON object");
    }
    ExamRecord r;
    r.id = required_string(doc, "id", "");
    if (r.id.empty()) {
        throw Error("field is empty: id");
    }
    r.year = required_int(doc, "year", "");
    r.pack = required_string(doc, "pack", "");

    if (!doc.contains("tasks") || !doc.at("tasks").is_array()) {
        throw Error("missing field: tasks");
    }
    const auto& tasks = doc.at("tasks");
    if (tasks.size() != 2) {
        throw Error("tasks must contain exactly 2 entries, found " + std::to_string(tasks.size()));
    }
    for (std::size_t i = 0; i < 2; ++i) {
        const std::string path = "tasks[" + std::to_string(i) + "].";
        const auto& type_name = required_string(tasks[i], "text_type", path);
        const auto type = parse_text_type(type_name);
        if (!type) {
            throw Error("unknown text type at " + path + "text_type: " + type_name);
        }
        auto& t = r.tasks[i];
        t.text_type = *type;
        t.body = normalize_text(required_string(tasks[i], "body", path));
        if (t.body.empty()) {
            throw Error("field is empty after normalization: " + path + "body");
        }
        t.word_count = count_words(t.body);
    }

    if (!doc.contains("gold") || !doc.at("gold").is_object()) {
        throw Error("missing field: gold");
    }
    const auto& gold = doc.at("gold");
    r.gold.sub.task(1) = parse_task_grades(gold, "task1");
    r.gold.sub.task(2) = parse_task_grades(gold, "task2");
    r.gold.k1 = optional_grade(gold, "k1", false);
    r.gold.k2 = optional_grade(gold, "k2", false);
    r.gold.k3_1 = optional_grade(gold, "k3_1", false);
    r.gold.k3_2 = optional_grade(gold, "k3_2", false);
    r.gold.k3 = optional_grade(gold, "k3", false);
    r.gold.final = optional_grade(gold, "final", true);
    return r;
}

json exam_to_json(const ExamRecord& r) {
    json tasks = json::array();
    for (const auto& t : r.tasks) {
        tasks.push_back({{"text_type", std::string(text_type_key(t.text_type))}, {"body", t.body}});
    }
    json gold = {{"task1", task_grades_json(r.gold.sub.task(1))},
                 {"task2", task_grades_json(r.gold.sub.task(2))}};
    const std::pair<const char*, const std::optional<int>*> sections[] = {
        {"k1", &r.gold.k1}, {"k2", &r.gold.k2}, {"k3_1", &r.gold.k3_1},
        {"k3_2", &r.gold.k3_2}, {"k3", &r.gold.k3},
    };
    for (const auto& [name, value] : sections) {
        if (*value) {
            gold[name] = **value;
        }
    }
    if (r.gold.final) {
        if (*r.gold.final == kMaxGrade) {
            gold["final"] = "fail";
        } else {
            gold["final"] = *r.gold.final;
        }
    }
    return {{"id", r.id}, {"year", r.year}, {"pack", r.pack}, {"tasks", tasks}, {"gold", gold}};
}

std::string serialize_corpus(const Corpus& corpus) {
    json arr = json::array();
    for (const auto& r : corpus.records()) {
        arr.push_back(exam_to_json(r));
    }
    return arr.dump(2);
}

CorpusLoad load_corpus(const std::filesystem::path& dir, const CorpusOptions& opts) {
    CorpusLoad load;
    std::vector<ExamRecord> records;
    std::map<std::string, std::string> seen; // id -> file

    for (const auto& file : json_files(dir)) {
        const std::string name = file.filename().string();
        json doc;
        try {
            doc = read_json_file(file);
        } catch (const json::exception& e) {
            load.errors.push_back({name, std::string("malformed JSON: ") + e.what()});
            continue;
        } catch (const Error& e) {
            load.errors.push_back({name, e.what()});
            continue;
        }

        ExamRecord record;
        try {
            record = parse_exam(doc);
        } catch (const Error& e) {
            load.errors.push_back({name, e.what()});
            continue;
        }

        const auto validation = validate_record(record, opts);
        if (!validation.ok()) {
            std::string msg;
            for (const auto& v : validation.violations) {
                msg += msg.empty() ? v : "; " + v;
            }
            load.errors.push_back({name, msg});
            continue;
        }
        if (auto [it, inserted] = seen.emplace(record.id, name); !inserted) {
            load.errors.push_back({name, "duplicate id " + record.id + " (first seen in " +
                                             it->second + ")"});
            continue;
        }
        records.push_back(std::move(record));
    }
    load.corpus = Corpus(std::move(records));
    load.corpus.set_rounding(opts.rounding);
    return load;
}

void RubricSet::add(RubricEntry entry) {
    const TextType t = entry.text_type;
    entries_[t] = std::move(entry);
}

const RubricEntry& RubricSet::at(TextType t) const {
    auto it = entries_.find(t);
    if (it == entries_.end()) {
        throw Error("no rubric for text type " + std::string(text_type_key(t)));
    }
    return it->second;
}

const std::string& RubricSet::descriptor(TextType t, Dimension d, int grade) const {
    const auto& entry = at(t);
    auto dim = entry.descriptors.find(d);
    if (dim != entry.descriptors.end()) {
        auto it = dim->second.find(grade);
        if (it != dim->second.end()) {
            return it->second;
        }
    }
    throw Error("rubric missing descriptor for (" + std::string(text_type_key(t)) + ", " +
                std::string(dimension_key(d)) + ", grade " + std::to_string(grade) + ")");
}

RubricEntry parse_rubric(const json& doc) {
    RubricEntry entry;
    const auto& type_name = required_string(doc, "text_type", "");
    const auto type = parse_text_type(type_name);
    if (!type) {
        throw Error("unknown text type: " + type_name);
    }
    entry.text_type = *type;
    entry.summary = required_string(doc, "summary", "");
    if (!doc.contains("dimensions") || !doc.at("dimensions").is_object()) {
        throw Error("missing field: dimensions");
    }
    for (const auto& [dim_name, grades] : doc.at("dimensions").items()) {
        const auto dim = parse_dimension(dim_name);
        if (!dim) {
            throw Error("unknown dimension: " + dim_name);
        }
        if (!grades.is_object()) {
            throw Error("dimensions." + dim_name + " is not an object");
        }
        for (const auto& [grade_key, text] : grades.items()) {
            int grade = 0;
            try {
                grade = std::stoi(grade_key);
            } catch (const std::exception&) {
                throw Error("invalid grade key dimensions." + dim_name + "." + grade_key);
            }
            if (grade < 1 || grade > 4) {
                throw Error("descriptors exist only for grades 1-4: dimensions." + dim_name +
                            "." + grade_key);
            }
            if (!text.is_string()) {
                throw Error("descriptor is not a string: dimensions." + dim_name + "." +
                            grade_key);
            }
            entry.descriptors[*dim][grade] = text.get<std::string>();
        }
    }
    return entry;
}

json rubric_to_json(const RubricEntry& entry) {
    json dims = json::object();
    for (const auto& [dim, grades] : entry.descriptors) {
        json g = json::object();
        for (const auto& [grade, text] : grades) {
            g[std::to_string(grade)] = text;
        }
        dims[std::string(dimension_key(dim))] = g;
    }
    return {{"text_type", std::string(text_type_key(entry.text_type))},
            {"summary", entry.summary},
            {"dimensions", dims}};
}

RubricSet load_rubrics(const std::filesystem::path& dir) {
    RubricSet set;
    for (const auto& file : json_files(dir)) {
        try {
            set.add(parse_rubric(read_json_file(file)));
        } catch (const json::exception& e) {
            throw Error("malformed rubric " + file.filename().string() + ": " + e.what());
        } catch (const Error& e) {
            throw Error("invalid rubric " + file.filename().string() + ": " + e.what());
        }
    }
    return set;
}

std::vector<std::string> check_rubric_coverage(const RubricSet& rubrics, const Corpus& corpus) {
    std::set<TextType> used;
    for (const auto& r : corpus.records()) {
        for (const auto& t : r.tasks) {
            used.insert(t.text_type);
        }
    }
    std::vector<std::string> problems;
    for (TextType t : used) {
        if (!rubrics.contains(t)) {
            problems.push_back("no rubric for text type " + std::string(text_type_key(t)));
            continue;
        }
        for (Dimension d : kAllDimensions) {
            for (int g = 1; g <= 4; ++g) {
                try {
                    rubrics.descriptor(t, d, g);
                } catch (const Error& e) {
                    problems.emplace_back(e.what());
                }
            }
        }
    }
    return problems;
}

} // namespace aes
