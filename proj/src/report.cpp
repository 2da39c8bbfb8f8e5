#include "aes/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace aes {
namespace {

namespace fs = std::filesystem;

constexpr const char* kUndefined = "—";

std::string printf_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

template <class F>
std::array<std::string, 9> cells(const TechniqueReport& t, F&& pick) {
    std::array<std::string, 9> out;
    const auto& dims = report_dimensions();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = pick(t.at(dims[i]));
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string csv_number(std::optional<double> v) { return v ? printf_double("%.6f", *v) : ""; }

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::string file_safe(std::string s) {
    for (char& c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_';
        if (!ok) {
            c = '_';
        }
    }
    return s;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

const char* kDimensionNote = "Dimensions: Content, Structure, Language Norms, Style/Expression";

std::string fenced_table(const EvaluationReport& report, const std::string& header,
                         std::string (*row)(const TechniqueReport&)) {
    std::string out = "```\n" + header + "\n";
    for (const auto& t : report.techniques) {
        out += row(t) + "\n";
    }
    return out + "```\n\n" + kDimensionNote + "\n\n";
}

std::string mae_row(const TechniqueReport& t) {
    return table_row(t.technique, cells(t, [](const DimensionReport& d) { return format_fixed2(d.mae); }));
}

std::string pcc_row(const TechniqueReport& t) {
    return table_row(t.technique, cells(t, [](const DimensionReport& d) { return format_kappa(d.pcc); }));
}

} // namespace

std::string format_kappa(std::optional<double> v) {
    if (!v) {
        return kUndefined;
    }
    std::string s = printf_double("%.2f", *v);
    if (s == "-0.00") {
        s = "0.00";
    }
    if (s.starts_with("0.")) {
        s.erase(0, 1);
    } else if (s.starts_with("-0.")) {
        s.erase(1, 1);
    }
    return s;
}

std::string format_percent(std::optional<double> v) {
    return v ? printf_double("%.1f", 100.0 * *v) : kUndefined;
}

std::string format_fixed2(std::optional<double> v) {
    return v ? printf_double("%.2f", *v) : kUndefined;
}

std::string table_row(const std::string& label, const std::array<std::string, 9>& c) {
    return label + " & " + c[0] + " & " + c[1] + "/" + c[2] + "/" + c[3] + "/" + c[4] + " & " + c[5] +
           "/" + c[6] + "/" + c[7] + "/" + c[8];
}

std::string kappa_row(const TechniqueReport& t) {
    return table_row(t.technique, cells(t, [](const DimensionReport& d) { return format_kappa(d.qwk); }));
}

std::string accuracy_row(const TechniqueReport& t) {
    return table_row(t.technique,
                     cells(t, [](const DimensionReport& d) { return format_percent(d.accuracy); }));
}

std::string metrics_csv(const EvaluationReport& report) {
    std::string out = "technique,dimension,qwk,mae,pcc,accuracy,n,invalid,config_hash\r\n";
    for (const auto& t : report.techniques) {
        for (const auto& d : t.dimensions) {
            out += csv_field(t.technique) + "," + csv_field(d.dimension) + "," + csv_number(d.qwk) + "," +
                   csv_number(d.mae) + "," + csv_number(d.pcc) + "," + csv_number(d.accuracy) + "," +
                   std::to_string(d.n) + "," + std::to_string(d.invalid_count) + "," +
                   csv_field(report.metadata.config_hash) + "\r\n";
        }
    }
    return out;
}

std::string report_markdown(const EvaluationReport& report) {
    std::string out = "# Evaluation report\n\n";
    out += "- Config hash: `" + report.metadata.config_hash + "`\n";
    if (!report.metadata.client_identity.empty()) {
        out += "- Client: `" + report.metadata.client_identity + "`\n";
    }
    if (!report.metadata.transcripts_dir.empty()) {
        out += "- Transcripts: `" + report.metadata.transcripts_dir + "`\n";
    }
    out += "\n## QWK\n\n";
    out += fenced_table(report, "Technique & Grade & Task 1 dimensions & Task 2 dimensions", kappa_row);
    out += "## Percentage accuracy\n\n";
    out += fenced_table(report, "Technique & Grade & Task 1 & Task 2", accuracy_row);
    out += "## MAE\n\n";
    out += fenced_table(report, "Technique & Grade & Task 1 & Task 2", mae_row);
    out += "## PCC\n\n";
    out += fenced_table(report, "Technique & Grade & Task 1 & Task 2", pcc_row);

    out += "## Output validity\n\n| Technique | Valid | Invalid | Errored |\n|---|---|---|---|\n";
    for (const auto& t : report.techniques) {
        out += "| " + t.technique + " | " + std::to_string(t.valid) + " | " + std::to_string(t.invalid) +
               " | " + std::to_string(t.errored) + " |\n";
    }

    std::string flagged;
    for (const auto& t : report.techniques) {
        for (const auto& d : t.dimensions) {
            if (d.qwk_degenerate) {
                flagged += "- " + t.technique + " / " + d.dimension + "\n";
            }
        }
    }
    if (!flagged.empty()) {
        out += "\n## Constant-series QWK\n\nBoth series have no expected disagreement; QWK is 1 "
               "for identical series and 0 otherwise.\n\n" +
               flagged;
    }
    out += "\n" "— marks an undefined value. Errored candidates count as invalid.\n";
    return out;
}

std::string confusion_csv(const DimensionReport& d) {
    std::string out = "human\\model,1,2,3,4,5\r\n";
    for (int h = 0; h < kGradeCount; ++h) {
        out += std::to_string(h + 1);
        for (int m = 0; m < kGradeCount; ++m) {
            out += "," + std::to_string(d.confusion[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)]);
        }
        out += "\r\n";
    }
    return out;
}

std::string confusion_svg(const DimensionReport& d, const std::string& title) {
    constexpr int cell = 60;
    constexpr int left = 70;
    constexpr int top = 70;
    constexpr int size = left + cell * kGradeCount + 20;
    int peak = 0;
    for (const auto& row : d.confusion) {
        peak = std::max(peak, *std::max_element(row.begin(), row.end()));
    }

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(size) +
                      "\" height=\"" + std::to_string(size) + "\" font-family=\"sans-serif\" font-size=\"14\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + std::to_string(size / 2) + "\" y=\"24\" text-anchor=\"middle\">" +
           xml_escape(title) + "</text>\n";
    out += "<text x=\"" + std::to_string(left + cell * kGradeCount / 2) +
           "\" y=\"50\" text-anchor=\"middle\">model</text>\n";
    out += "<text x=\"20\" y=\"" + std::to_string(top + cell * kGradeCount / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
           std::to_string(top + cell * kGradeCount / 2) + ")\">human</text>\n";
    for (int i = 0; i < kGradeCount; ++i) {
        out += "<text x=\"" + std::to_string(left + cell * i + cell / 2) + "\" y=\"" +
               std::to_string(top - 6) + "\" text-anchor=\"middle\">" + std::to_string(i + 1) + "</text>\n";
        out += "<text x=\"" + std::to_string(left - 10) + "\" y=\"" +
               std::to_string(top + cell * i + cell / 2 + 5) + "\" text-anchor=\"end\">" +
               std::to_string(i + 1) + "</text>\n";
    }
    for (int h = 0; h < kGradeCount; ++h) {
        for (int m = 0; m < kGradeCount; ++m) {
            const int count = d.confusion[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)];
            const int shade = peak == 0 ? 255 : 255 - (200 * count) / peak;
            const std::string fill = "rgb(" + std::to_string(shade) + "," + std::to_string(shade) + ",255)";
            const int x = left + cell * m;
            const int y = top + cell * h;
            out += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
                   std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" + fill +
                   "\" stroke=\"#888\"/>\n";
            out += "<text x=\"" + std::to_string(x + cell / 2) + "\" y=\"" + std::to_string(y + cell / 2 + 5) +
                   "\" text-anchor=\"middle\">" + std::to_string(count) + "</text>\n";
        }
    }
    return out + "</svg>\n";
}

std::string confusion_stem(const EvaluationReport& report, const TechniqueReport& t,
                           const DimensionReport& d) {
    std::string dim = d.dimension;
    std::replace(dim.begin(), dim.end(), '.', '_');
    if (report.techniques.size() > 1) {
        return "confusion_" + file_safe(t.technique) + "_" + dim;
    }
    return "confusion_" + dim;
}

void emit_report(const EvaluationReport& report, const fs::path& dir) {
    if (report.techniques.empty()) {
        throw Error("report has no techniques; nothing written");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error("cannot create output directory " + dir.string());
    }
    write_file(dir / "metrics.csv", metrics_csv(report));
    write_file(dir / "report.md", report_markdown(report));
    for (const auto& t : report.techniques) {
        for (const auto& d : t.dimensions) {
            const auto stem = confusion_stem(report, t, d);
            write_file(dir / (stem + ".csv"), confusion_csv(d));
            write_file(dir / (stem + ".svg"), confusion_svg(d, t.technique + ": " + d.dimension));
        }
    }
}

} // namespace aes
