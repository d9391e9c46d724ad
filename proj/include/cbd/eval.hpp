#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cbd {

/// Positive class = clickbait (label 1).
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    [[nodiscard]] std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f_score = 0;
    std::uint64_t support = 0;
};

struct EvalReport {
    ClassMetrics non_clickbait;
    ClassMetrics clickbait;
    double accuracy = 0;
    ClassMetrics macro_avg;
    ClassMetrics weighted_avg;
    std::uint64_t total = 0;
    /// Names of metrics whose denominator was zero (reported as 0).
    std::vector<std::string> warnings;
};

/// Per-class metrics, each class taken as positive in turn, plus accuracy
/// and macro / support-weighted averages. Full precision; rounding happens
/// only when rendering.
EvalReport report(const ConfusionMatrix& cm);

/// Round half up to two decimals, decided on the shortest decimal
/// representation of x (so 0.925 renders "0.93", 0.805 renders "0.81").
std::string format_2dp(double x);

/// Aligned text table: Class, Precision, Recall, F-score, Support.
std::string render_report(const EvalReport& r);
/// Full-precision key/value document (JSON).
std::string report_json(const EvalReport& r);

struct RocPoint {
    double fpr = 0;
    double tpr = 0;
    double threshold = 0;
};

/// Threshold sweep from +∞ down through every distinct score; starts at
/// (0,0) and ends at (1,1).
struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0;
};

RocCurve roc(std::span<const int> y_true, std::span<const double> scores);
void write_roc_csv(const RocCurve& c, std::ostream& os);

/// Published per-class rows are themselves rounded, so each true value lies
/// in [v − 0.005, v + 0.005). Returns whether some choice of true values
/// consistent with both class rows rounds (half up) to `published_avg` when
/// averaged with the given weights (equal weights = macro average).
/// Values are two-decimal figures; weights are supports (1, 1 for macro).
bool average_row_consistent(double published_non_clickbait, double published_clickbait,
                            std::uint64_t weight_non_clickbait, std::uint64_t weight_clickbait,
                            double published_avg);

}  // namespace cbd
