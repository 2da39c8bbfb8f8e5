#include "aes/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>

namespace aes {
namespace {

struct QwkTerms {
    std::int64_t observed = 0; ///< n * sum (i-j)^2 O_ij
    std::int64_t expected = 0; ///< sum (i-j)^2 r_i s_j
};

QwkTerms qwk_terms(const GradeSeries& s) {
    std::array<std::int64_t, kGradeCount> rows{};
    std::array<std::int64_t, kGradeCount> cols{};
    std::int64_t disagreement = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const int d = s.predicted[k] - s.gold[k];
        disagreement += d * d;
        ++rows[static_cast<std::size_t>(s.gold[k] - 1)];
        ++cols[static_cast<std::size_t>(s.predicted[k] - 1)];
    }
    QwkTerms t;
    t.observed = static_cast<std::int64_t>(s.size()) * disagreement;
    for (int i = 0; i < kGradeCount; ++i) {
        for (int j = 0; j < kGradeCount; ++j) {
            const std::int64_t w = (i - j) * (i - j);
            t.expected += w * rows[static_cast<std::size_t>(i)] * cols[static_cast<std::size_t>(j)];
        }
    }
    return t;
}

} // namespace

void GradeSeries::validate() const {
    if (predicted.size() != gold.size()) {
        throw Error("grade series lengths differ: " + std::to_string(predicted.size()) + " vs " +
                    std::to_string(gold.size()));
    }
    if (gold.empty()) {
        throw Error("grade series is empty");
    }
    for (std::size_t k = 0; k < gold.size(); ++k) {
        if (!grade_in_range(predicted[k]) || !grade_in_range(gold[k])) {
            throw Error("grade series value out of range at index " + std::to_string(k));
        }
    }
}

double qwk(const GradeSeries& s) {
    s.validate();
    if (s.size() < 2) {
        throw Error("qwk needs at least two pairs");
    }
    const QwkTerms t = qwk_terms(s);
    if (t.expected == 0) {
        return s.predicted == s.gold ? 1.0 : 0.0;
    }
    return 1.0 - static_cast<double>(t.observed) / static_cast<double>(t.expected);
}

bool qwk_degenerate(const GradeSeries& s) {
    s.validate();
    return qwk_terms(s).expected == 0;
}

double mae(const GradeSeries& s) {
    s.validate();
    std::int64_t total = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        total += std::abs(s.predicted[k] - s.gold[k]);
    }
    return static_cast<double>(total) / static_cast<double>(s.size());
}

std::optional<double> pcc(const GradeSeries& s) {
    s.validate();
    const auto n = static_cast<std::int64_t>(s.size());
    std::int64_t sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const std::int64_t x = s.predicted[k];
        const std::int64_t y = s.gold[k];
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    const std::int64_t vx = n * sxx - sx * sx;
    const std::int64_t vy = n * syy - sy * sy;
    if (vx == 0 || vy == 0) {
        return std::nullopt;
    }
    const double r = static_cast<double>(n * sxy - sx * sy) /
                     std::sqrt(static_cast<double>(vx) * static_cast<double>(vy));
    return std::clamp(r, -1.0, 1.0);
}

AccuracyConfusion accuracy_and_confusion(const GradeSeries& s) {
    s.validate();
    AccuracyConfusion out;
    int hits = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        ++out.confusion[static_cast<std::size_t>(s.gold[k] - 1)][static_cast<std::size_t>(s.predicted[k] - 1)];
        hits += s.predicted[k] == s.gold[k] ? 1 : 0;
    }
    out.accuracy = static_cast<double>(hits) / static_cast<double>(s.size());
    return out;
}

const std::vector<std::string>& report_dimensions() {
    static const std::vector<std::string> dims = [] {
        std::vector<std::string> d{"final"};
        for (int pos = 1; pos <= 2; ++pos) {
            for (Dimension dim : kAllDimensions) {
                d.push_back(sub_dimension_key(pos, dim));
            }
        }
        return d;
    }();
    return dims;
}

const DimensionReport& TechniqueReport::at(std::string_view dimension) const {
    for (const auto& d : dimensions) {
        if (d.dimension == dimension) {
            return d;
        }
    }
    throw Error("no report for dimension " + std::string(dimension));
}

TechniqueReport build_report(std::string technique, const std::vector<GradeOutcome>& outcomes,
                             const Corpus& corpus) {
    if (outcomes.empty()) {
        throw Error("cannot build a report from zero outcomes");
    }
    const auto& dims = report_dimensions();
    std::vector<GradeSeries> series(dims.size());

    TechniqueReport report;
    report.technique = std::move(technique);
    for (const auto& o : outcomes) {
        const ExamRecord& gold = corpus.at(o.exam_id);
        if (o.status == OutcomeStatus::Errored) {
            ++report.errored;
        }
        if (!o.valid() || !o.outcome) {
            ++report.invalid;
            continue;
        }
        ++report.valid;
        series[0].predicted.push_back(o.outcome->final.as_int());
        series[0].gold.push_back(gold_final(gold, corpus.rounding()));
        std::size_t idx = 1;
        for (int pos = 1; pos <= 2; ++pos) {
            for (Dimension d : kAllDimensions) {
                series[idx].predicted.push_back(o.assessment.grades.task(pos)[d]);
                series[idx].gold.push_back(gold.gold.sub.task(pos)[d]);
                ++idx;
            }
        }
    }

    for (std::size_t i = 0; i < dims.size(); ++i) {
        DimensionReport r;
        r.dimension = dims[i];
        r.n = static_cast<int>(series[i].size());
        r.invalid_count = report.invalid;
        if (r.n >= 1) {
            const auto ac = accuracy_and_confusion(series[i]);
            r.accuracy = ac.accuracy;
            r.confusion = ac.confusion;
            r.mae = mae(series[i]);
        }
        if (r.n >= 2) {
            r.qwk = qwk(series[i]);
            r.qwk_degenerate = qwk_degenerate(series[i]);
            r.pcc = pcc(series[i]);
        }
        report.dimensions.push_back(std::move(r));
    }
    return report;
}

} // namespace aes
