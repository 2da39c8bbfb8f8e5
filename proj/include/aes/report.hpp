#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "aes/metrics.hpp"

namespace aes {

/// Two decimals without the leading zero: 0.29 -> ".29", -0.05 -> "-.05",
/// 1 -> "1.00". Undefined values render as "—".
std::string format_kappa(std::optional<double> v);
/// Percent with one decimal: 0.208 -> "20.8".
std::string format_percent(std::optional<double> v);
/// Two decimals: 0.5 -> "0.50".
std::string format_fixed2(std::optional<double> v);

/// "label & final & t1/t1/t1/t1 & t2/t2/t2/t2" from nine cells in report order.
std::string table_row(const std::string& label, const std::array<std::string, 9>& cells);

std::string kappa_row(const TechniqueReport& t);
std::string accuracy_row(const TechniqueReport& t);

/// One row per technique and dimension. Contains no timestamps, so identical runs
/// give identical bytes.
std::string metrics_csv(const EvaluationReport& report);
std::string report_markdown(const EvaluationReport& report);
std::string confusion_csv(const DimensionReport& d);
std::string confusion_svg(const DimensionReport& d, const std::string& title);

/// File stem for a dimension's confusion matrix: "confusion_task1_content", with the
/// technique label prefixed when the report holds several techniques.
std::string confusion_stem(const EvaluationReport& report, const TechniqueReport& t,
                           const DimensionReport& d);

/// Writes metrics.csv, report.md and confusion_<dim>.{csv,svg}. Throws Error for a
/// report without techniques (nothing is written) or an unwritable directory.
void emit_report(const EvaluationReport& report, const std::filesystem::path& dir);

} // namespace aes
