#include "cbd/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "cbd/error.hpp"

namespace cbd {

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw DataError("confusion: " + std::to_string(y_true.size()) + " labels but " +
                        std::to_string(y_pred.size()) + " predictions");
    }
    if (y_true.empty()) throw DataError("confusion: no samples");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const bool t = y_true[i] == 1;
        const bool p = y_pred[i] == 1;
        if (t && p) ++cm.tp;
        else if (!t && p) ++cm.fp;
        else if (t && !p) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, const char* name, std::vector<std::string>& warn) {
    if (den == 0) {
        warn.emplace_back(name);
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, const std::string& cls,
                           std::vector<std::string>& warn) {
    ClassMetrics m;
    m.precision = ratio(tp, tp + fp, (cls + ".precision").c_str(), warn);
    m.recall = ratio(tp, tp + fn, (cls + ".recall").c_str(), warn);
    const double s = m.precision + m.recall;
    if (s > 0) {
        m.f_score = 2.0 * m.precision * m.recall / s;
    } else {
        warn.push_back(cls + ".f_score");
    }
    m.support = tp + fn;
    return m;
}

}  // namespace

EvalReport report(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("report: empty confusion matrix");
    EvalReport r;
    r.total = cm.total();
    r.clickbait = class_metrics(cm.tp, cm.fp, cm.fn, "clickbait", r.warnings);
    r.non_clickbait = class_metrics(cm.tn, cm.fn, cm.fp, "non_clickbait", r.warnings);
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(r.total);

    const double w0 = static_cast<double>(r.non_clickbait.support);
    const double w1 = static_cast<double>(r.clickbait.support);
    const double wt = static_cast<double>(r.total);
    auto avg = [&](auto field) {
        ClassMetrics macro, weighted;
        macro.*field = (r.non_clickbait.*field + r.clickbait.*field) / 2.0;
        weighted.*field = (w0 * r.non_clickbait.*field + w1 * r.clickbait.*field) / wt;
        r.macro_avg.*field = macro.*field;
        r.weighted_avg.*field = weighted.*field;
    };
    avg(&ClassMetrics::precision);
    avg(&ClassMetrics::recall);
    avg(&ClassMetrics::f_score);
    r.macro_avg.support = r.total;
    r.weighted_avg.support = r.total;
    return r;
}

std::string format_2dp(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    char buf[400];
    auto res = std::to_chars(buf, buf + sizeof buf, std::fabs(x), std::chars_format::fixed);
    std::string s(buf, res.ptr);
    auto dot = s.find('.');
    std::string whole = s.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
    frac.resize(std::max<std::size_t>(frac.size(), 3), '0');
    const bool up = frac[2] >= '5';
    std::string digits = whole + frac.substr(0, 2);
    if (up) {
        int i = static_cast<int>(digits.size()) - 1;
        while (i >= 0 && digits[static_cast<std::size_t>(i)] == '9') {
            digits[static_cast<std::size_t>(i)] = '0';
            --i;
        }
        if (i < 0) {
            digits.insert(digits.begin(), '1');
        } else {
            ++digits[static_cast<std::size_t>(i)];
        }
    }
    std::string out = digits.substr(0, digits.size() - 2) + "." + digits.substr(digits.size() - 2);
    const bool zero = std::all_of(digits.begin(), digits.end(), [](char c) { return c == '0'; });
    if (x < 0 && !zero) out.insert(out.begin(), '-');
    return out;
}

std::string render_report(const EvalReport& r) {
    std::ostringstream os;
    char line[128];
    std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9s\n", "Class", "Precision", "Recall",
                  "F-score", "Support");
    os << line;
    auto row = [&](const char* name, const ClassMetrics& m) {
        std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9llu\n", name, format_2dp(m.precision).c_str(),
                      format_2dp(m.recall).c_str(), format_2dp(m.f_score).c_str(),
                      static_cast<unsigned long long>(m.support));
        os << line;
    };
    row("non-clickbait", r.non_clickbait);
    row("clickbait", r.clickbait);
    std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9llu\n", "accuracy", "---", "---",
                  format_2dp(r.accuracy).c_str(), static_cast<unsigned long long>(r.total));
    os << line;
    row("macro avg", r.macro_avg);
    row("weighted avg", r.weighted_avg);
    return os.str();
}

std::string report_json(const EvalReport& r) {
    using nlohmann::json;
    auto cls = [](const ClassMetrics& m) {
        return json{{"precision", m.precision}, {"recall", m.recall}, {"f_score", m.f_score},
                    {"support", m.support}};
    };
    json j = {{"non_clickbait", cls(r.non_clickbait)},
              {"clickbait", cls(r.clickbait)},
              {"accuracy", r.accuracy},
              {"macro_avg", cls(r.macro_avg)},
              {"weighted_avg", cls(r.weighted_avg)},
              {"total", r.total},
              {"warnings", r.warnings}};
    return j.dump(2);
}

RocCurve roc(std::span<const int> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) throw DataError("roc: label and score counts differ");
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    for (int y : y_true) (y == 1 ? pos : neg) += 1;
    if (pos == 0 || neg == 0) throw DataError("roc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve c;
    c.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    // Trapezoid area accumulated in integer units of 1/(2·P·N).
    unsigned __int128 twice_area = 0;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        const std::uint64_t tp0 = tp;
        const std::uint64_t fp0 = fp;
        while (i < order.size() && scores[order[i]] == s) {
            (y_true[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        twice_area += static_cast<unsigned __int128>(fp - fp0) * (tp0 + tp);
        c.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), s});
    }
    c.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return c;
}

void write_roc_csv(const RocCurve& c, std::ostream& os) {
    os << "fpr,tpr\n";
    char buf[64];
    for (const auto& p : c.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.fpr, p.tpr);
        os << buf;
    }
}

bool average_row_consistent(double published_non_clickbait, double published_clickbait,
                            std::uint64_t weight_non_clickbait, std::uint64_t weight_clickbait,
                            double published_avg) {
    // Work in hundredths. A true value t renders as v iff t ∈ [v − ½, v + ½),
    // so the attainable averages form [a − ½, a + ½) around the average a of
    // the published values, and the row is consistent iff |a − p| < 1.
    const auto v0 = static_cast<std::int64_t>(std::llround(published_non_clickbait * 100));
    const auto v1 = static_cast<std::int64_t>(std::llround(published_clickbait * 100));
    const auto p = static_cast<std::int64_t>(std::llround(published_avg * 100));
    const auto w0 = static_cast<std::int64_t>(weight_non_clickbait);
    const auto w1 = static_cast<std::int64_t>(weight_clickbait);
    const std::int64_t w = w0 + w1;
    if (w <= 0) throw DataError("average_row_consistent: zero total weight");
    const std::int64_t diff = w0 * v0 + w1 * v1 - p * w;
    return (diff < 0 ? -diff : diff) < w;
}

}  // namespace cbd
