// aesgrade: command-line front end for the grading pipeline.
//
// Exit codes: 0 success, 1 validation errors, 2 fatal errors or usage problems.

#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aes/config.hpp"
#include "aes/experiment.hpp"
#include "aes/metrics.hpp"
#include "aes/report.hpp"
#include "aes/synthetic.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kFatal = 2;

int cmd_run(const std::string& config_file, bool print_defaults) {
    if (print_defaults) {
        std::cout << aes::default_config_text();
        return kOk;
    }
    if (config_file.empty()) {
        std::cerr << "run: --config is required\n";
        return kFatal;
    }
    const aes::RunLog log(&std::cerr);
    const auto cfg = aes::load_config(config_file);
    const auto result = aes::run_experiment(cfg, nullptr, &log);
    std::cout << aes::kappa_row(result.report.techniques.front()) << "\n"
              << aes::accuracy_row(result.report.techniques.front()) << "\n";
    return kOk;
}

int cmd_metrics(const std::vector<std::string>& pred_files, const std::string& gold_dir,
                const std::string& out_dir, const std::string& rounding_name) {
    const auto rounding = aes::parse_rounding(rounding_name);
    if (!rounding) {
        std::cerr << "metrics: unknown rounding '" << rounding_name << "'\n";
        return kFatal;
    }
    auto loaded = aes::load_corpus(gold_dir, {false, *rounding});
    loaded.corpus.set_rounding(*rounding);
    std::vector<std::filesystem::path> files(pred_files.begin(), pred_files.end());
    const auto groups = aes::read_predictions(files, *rounding);
    if (groups.empty()) {
        std::cerr << "metrics: no predictions found\n";
        return kValidation;
    }
    aes::EvaluationReport report;
    std::string hashed;
    for (const auto& g : groups) {
        report.techniques.push_back(aes::build_report(g.technique, g.outcomes, loaded.corpus));
        hashed += g.technique + "\n";
    }
    for (const auto& f : pred_files) {
        hashed += f + "\n";
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(aes::fnv1a64(hashed)));
    report.metadata.config_hash = buf;
    report.metadata.client_identity = "stored predictions";

    if (!out_dir.empty()) {
        aes::emit_report(report, out_dir);
    } else {
        std::cout << aes::metrics_csv(report);
    }
    return kOk;
}

int cmd_context(const std::string& config_file, const std::string& candidate_id) {
    auto cfg = aes::load_config(config_file);
    const aes::Experiment exp(cfg);
    const aes::ExamRecord* candidate = exp.corpus().find(candidate_id);
    if (!candidate) {
        std::cerr << "context: no exam with id '" << candidate_id << "'\n";
        return kValidation;
    }
    const auto prepared = exp.script_for(*candidate);
    const auto& sel = prepared.context;
    std::cout << "technique: " << aes::technique_label(cfg.technique) << "\n"
              << "candidate: " << candidate->id << " (" << candidate->year << "/" << candidate->pack
              << ")\n"
              << "references: " << sel.reference_count() << ", noise: " << sel.noise_count()
              << (sel.underfilled ? " (underfilled)" : "") << "\n";
    for (const auto& e : sel.entries) {
        if (e.is_noise) {
            std::cout << "  noise " << e.exam_id << "\n";
            continue;
        }
        std::cout << "  " << e.exam_id << " task" << e.task_position << " final=" << e.final_grade;
        std::cout << " grades=";
        for (std::size_t i = 0; i < aes::kAllDimensions.size(); ++i) {
            std::cout << (i ? "/" : "") << e.gold[aes::kAllDimensions[i]];
        }
        if (e.similarity) {
            std::cout << " similarity=" << *e.similarity;
        }
        if (cfg.technique.few_shot()) {
            std::cout << " level=" << e.level;
        }
        std::cout << "\n";
    }
    for (const auto& note : sel.notes) {
        std::cout << "note: " << note << "\n";
    }
    for (const auto& d : prepared.dropped) {
        std::cout << "budget: " << d << "\n";
    }
    std::cout << "estimated tokens: " << aes::estimate_tokens(prepared.script) << "\n";
    return kOk;
}

int cmd_validate(const std::string& dir, bool trust) {
    const auto loaded = aes::load_corpus(dir, {trust, aes::Rounding::HalfToBetter});
    for (const auto& e : loaded.errors) {
        std::cout << e.file << ": " << e.message << "\n";
    }
    std::cout << loaded.corpus.size() << " records ok, " << loaded.errors.size() << " rejected\n";
    return loaded.errors.empty() ? kOk : kValidation;
}

int cmd_synthetic(const std::string& out, int n, std::uint64_t seed, const std::string& weights) {
    aes::SyntheticOptions opts;
    opts.count = n;
    opts.seed = seed;
    if (!weights.empty()) {
        std::stringstream ss(weights);
        std::string item;
        std::size_t i = 0;
        while (std::getline(ss, item, ',')) {
            if (i >= opts.weights.size()) {
                std::cerr << "make-synthetic: --weights takes five values\n";
                return kFatal;
            }
            opts.weights[i++] = std::stoi(item);
        }
        if (i != opts.weights.size()) {
            std::cerr << "make-synthetic: --weights takes five values\n";
            return kFatal;
        }
    }
    aes::write_synthetic(out, opts);
    std::cout << "wrote " << n << " exams to " << out << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rubric-based essay grading with LLMs"};
    app.require_subcommand(1);

    std::string config_file;
    bool print_defaults = false;
    auto* run = app.add_subcommand("run", "Grade the corpus and write a report");
    run->add_option("--config", config_file, "Experiment config file");
    run->add_flag("--print-defaults", print_defaults, "Print the default config and exit");

    std::vector<std::string> pred_files;
    std::string gold_dir;
    std::string metrics_out;
    std::string rounding = "half_to_better";
    auto* metrics = app.add_subcommand("metrics", "Re-score stored predictions");
    metrics->add_option("--pred", pred_files, "predictions.jsonl file(s)")->required();
    metrics->add_option("--gold", gold_dir, "Corpus directory with gold grades")->required();
    metrics->add_option("--out", metrics_out, "Write a full report here instead of CSV to stdout");
    metrics->add_option("--rounding", rounding, "half_to_better or half_to_worse");

    std::string context_config;
    std::string candidate;
    auto* context = app.add_subcommand("context", "Show the context selected for one exam");
    context->add_option("--config", context_config, "Experiment config file")->required();
    context->add_option("--candidate", candidate, "Exam id")->required();

    std::string validate_dir;
    bool trust = false;
    auto* validate = app.add_subcommand("validate-corpus", "Check a corpus directory");
    validate->add_option("dir", validate_dir, "Corpus directory")->required();
    validate->add_flag("--trust-stored-grades", trust, "Accept stored aggregates as they are");

    std::string synth_out;
    int synth_n = 25;
    std::uint64_t synth_seed = 7;
    std::string synth_weights;
    auto* synth = app.add_subcommand("make-synthetic", "Generate a synthetic corpus");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--n", synth_n, "Number of exams")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "Random seed");
    synth->add_option("--weights", synth_weights, "Base grade weights for 1..5, e.g. 2,3,4,3,1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kFatal;
    }

    try {
        if (*run) {
            return cmd_run(config_file, print_defaults);
        }
        if (*metrics) {
            return cmd_metrics(pred_files, gold_dir, metrics_out, rounding);
        }
        if (*context) {
            return cmd_context(context_config, candidate);
        }
        if (*validate) {
            return cmd_validate(validate_dir, trust);
        }
        if (*synth) {
            return cmd_synthetic(synth_out, synth_n, synth_seed, synth_weights);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFatal;
    }
    return kFatal;
}
