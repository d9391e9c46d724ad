#include <gtest/gtest.h>

#include "json.hpp"
#include <sstream>

#include "cbd/error.hpp"
#include "cbd/eval.hpp"
#include "cbd/random.hpp"

using namespace cbd;

namespace {

// Mann–Whitney by brute force over every positive/negative pair.
double pairwise_auc(const std::vector<int>& y, const std::vector<double>& s) {
    double wins = 0;
    double pairs = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            pairs += 1;
            wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return wins / pairs;
}

struct PublishedRow {
    double non_clickbait, clickbait, avg;
};

// Each published table: per-class rows then macro and weighted rows, for
// precision, recall, F-score.
struct PublishedTable {
    const char* name;
    std::uint64_t support_non_clickbait, support_clickbait;
    PublishedRow macro[3];
    PublishedRow weighted[3];
};

}  // namespace

TEST(Confusion, CountsAndErrors) {
    EXPECT_EQ(confusion(std::vector{1, 0}, std::vector{1, 0}), (ConfusionMatrix{1, 0, 0, 1}));
    EXPECT_EQ(confusion(std::vector{1}, std::vector{0}), (ConfusionMatrix{0, 0, 1, 0}));
    EXPECT_THROW(confusion(std::vector{1, 0}, std::vector{1}), DataError);
    EXPECT_THROW(confusion(std::vector<int>{}, std::vector<int>{}), DataError);

    Rng rng(20);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> t(20), p(20);
        for (int i = 0; i < 20; ++i) {
            t[i] = static_cast<int>(rng.below(2));
            p[i] = static_cast<int>(rng.below(2));
        }
        ConfusionMatrix cm;
        for (int i = 0; i < 20; ++i) {
            if (t[i] && p[i]) ++cm.tp;
            if (!t[i] && p[i]) ++cm.fp;
            if (t[i] && !p[i]) ++cm.fn;
            if (!t[i] && !p[i]) ++cm.tn;
        }
        EXPECT_EQ(confusion(t, p), cm);
        EXPECT_EQ(confusion(t, p).total(), 20u);
    }
}

TEST(Report, HandArithmetic) {
    const auto r = report({8, 2, 1, 9});
    EXPECT_DOUBLE_EQ(r.clickbait.precision, 0.8);
    EXPECT_DOUBLE_EQ(r.clickbait.recall, 8.0 / 9.0);
    EXPECT_NEAR(r.clickbait.f_score, 2 * 0.8 * (8.0 / 9) / (0.8 + 8.0 / 9), 1e-15);
    EXPECT_NEAR(r.clickbait.f_score, 0.8421052631578947, 1e-15);
    EXPECT_DOUBLE_EQ(r.non_clickbait.precision, 0.9);
    EXPECT_DOUBLE_EQ(r.non_clickbait.recall, 9.0 / 11.0);
    EXPECT_EQ(r.clickbait.support, 9u);
    EXPECT_EQ(r.non_clickbait.support, 11u);
    EXPECT_DOUBLE_EQ(r.accuracy, 17.0 / 20.0);
    EXPECT_DOUBLE_EQ(r.macro_avg.precision, 0.85);
    EXPECT_EQ(r.total, 20u);
    EXPECT_TRUE(r.warnings.empty());
    EXPECT_THROW(report({}), DataError);
}

TEST(Report, WeightedAverageRecomputes) {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionMatrix cm{rng.below(500), rng.below(500), rng.below(500), rng.below(500) + 1};
        const auto r = report(cm);
        const double w0 = static_cast<double>(r.non_clickbait.support);
        const double w1 = static_cast<double>(r.clickbait.support);
        auto wavg = [&](double a, double b) { return (w0 * a + w1 * b) / (w0 + w1); };
        EXPECT_NEAR(r.weighted_avg.precision, wavg(r.non_clickbait.precision, r.clickbait.precision), 1e-12);
        EXPECT_NEAR(r.weighted_avg.recall, wavg(r.non_clickbait.recall, r.clickbait.recall), 1e-12);
        EXPECT_NEAR(r.weighted_avg.f_score, wavg(r.non_clickbait.f_score, r.clickbait.f_score), 1e-12);
        EXPECT_NEAR(r.macro_avg.recall, (r.non_clickbait.recall + r.clickbait.recall) / 2, 1e-12);
        EXPECT_EQ(r.non_clickbait.support + r.clickbait.support, r.total);
    }
}

TEST(Report, ZeroDenominatorsWarn) {
    const auto r = report({0, 0, 3, 5});  // never predicts clickbait
    EXPECT_EQ(r.clickbait.precision, 0.0);
    EXPECT_EQ(r.clickbait.f_score, 0.0);
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_NE(std::find(r.warnings.begin(), r.warnings.end(), "clickbait.precision"), r.warnings.end());
}

TEST(Report, RenderingAndJson) {
    const auto perfect = render_report(report({5, 0, 0, 7}));
    std::istringstream lines(perfect);
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line.substr(0, 5), "Class");
    std::vector<std::string> names;
    while (std::getline(lines, line)) {
        names.push_back(line.substr(0, 14));
        if (line.rfind("accuracy", 0) == 0) {
            EXPECT_NE(line.find("---"), std::string::npos);
            continue;
        }
        std::istringstream cells(line.substr(14));
        std::string p, rc, f, s;
        cells >> p >> rc >> f >> s;
        EXPECT_EQ(p, "1.00");
        EXPECT_EQ(rc, "1.00");
        EXPECT_EQ(f, "1.00");
    }
    ASSERT_EQ(names.size(), 5u);
    EXPECT_EQ(names[0].substr(0, 13), "non-clickbait");
    EXPECT_EQ(names[4].substr(0, 12), "weighted avg");

    const auto j = nlohmann::json::parse(report_json(report({8, 2, 1, 9})));
    EXPECT_DOUBLE_EQ(j["clickbait"]["recall"].get<double>(), 8.0 / 9.0);
    EXPECT_EQ(j["total"].get<int>(), 20);
}

TEST(Rounding, HalfUpOnShortestDecimal) {
    EXPECT_EQ(format_2dp(0.925), "0.93");
    EXPECT_EQ(format_2dp(0.805), "0.81");
    EXPECT_EQ(format_2dp(0.924999), "0.92");
    EXPECT_EQ(format_2dp(1.0), "1.00");
    EXPECT_EQ(format_2dp(0.0), "0.00");
    EXPECT_EQ(format_2dp(0.995), "1.00");
    EXPECT_EQ(format_2dp(0.8421052631578947), "0.84");
    EXPECT_EQ(format_2dp((0.92 + 0.93) / 2), "0.93");
}

TEST(Rounding, PublishedAverageRowsAreConsistent) {
    const PublishedTable tables[] = {
        {"title+likes+dislikes forest", 1275, 1182,
         {{0.81, 0.80, 0.80}, {0.80, 0.81, 0.80}, {0.81, 0.80, 0.80}},
         {{0.81, 0.80, 0.80}, {0.80, 0.81, 0.80}, {0.81, 0.80, 0.80}}},
        {"title+metadata forest", 1275, 1182,
         {{0.93, 0.92, 0.93}, {0.93, 0.92, 0.93}, {0.93, 0.92, 0.93}},
         {{0.93, 0.92, 0.93}, {0.93, 0.92, 0.93}, {0.93, 0.92, 0.93}}},
        {"contextual mlp", 884, 754,
         {{0.92, 0.93, 0.92}, {0.95, 0.89, 0.92}, {0.93, 0.91, 0.92}},
         {{0.92, 0.93, 0.92}, {0.95, 0.89, 0.92}, {0.93, 0.91, 0.92}}},
    };
    for (const auto& t : tables) {
        for (int k = 0; k < 3; ++k) {
            const auto& m = t.macro[k];
            EXPECT_TRUE(average_row_consistent(m.non_clickbait, m.clickbait, 1, 1, m.avg)) << t.name << " macro " << k;
            const auto& w = t.weighted[k];
            EXPECT_TRUE(average_row_consistent(w.non_clickbait, w.clickbait, t.support_non_clickbait,
                                               t.support_clickbait, w.avg))
                << t.name << " weighted " << k;
        }
    }
    // 0.92 / 0.93 can average to either neighbour, never further away
    EXPECT_TRUE(average_row_consistent(0.92, 0.93, 1, 1, 0.93));
    EXPECT_FALSE(average_row_consistent(0.92, 0.93, 1, 1, 0.91));
    EXPECT_FALSE(average_row_consistent(0.92, 0.93, 1, 1, 0.94));
    EXPECT_FALSE(average_row_consistent(0.95, 0.89, 884, 754, 0.90));
    EXPECT_THROW(average_row_consistent(0.9, 0.9, 0, 0, 0.9), DataError);
}

TEST(Roc, Examples) {
    const std::vector<int> y = {0, 0, 1, 1};
    const auto c = roc(y, std::vector{0.1, 0.4, 0.35, 0.8});
    EXPECT_EQ(c.auc, 0.75);
    EXPECT_EQ(c.points.front().fpr, 0.0);
    EXPECT_EQ(c.points.front().tpr, 0.0);
    EXPECT_EQ(c.points.back().fpr, 1.0);
    EXPECT_EQ(c.points.back().tpr, 1.0);
    EXPECT_EQ(c.points.size(), 5u);
    EXPECT_EQ(roc(y, std::vector{0.5, 0.5, 0.5, 0.5}).auc, 0.5);
    EXPECT_EQ(roc(y, std::vector{0.1, 0.2, 0.3, 0.4}).auc, 1.0);
    EXPECT_THROW(roc(std::vector{1, 1}, std::vector{0.1, 0.2}), DataError);
    EXPECT_THROW(roc(y, std::vector{0.1}), DataError);

    std::ostringstream os;
    write_roc_csv(c, os);
    EXPECT_EQ(os.str().substr(0, 8), "fpr,tpr\n");
}

TEST(Roc, TrapezoidEqualsPairwiseExhaustively) {
    const double grid[] = {0.0, 0.25, 0.5, 0.75};
    std::size_t checked = 0;
    for (std::size_t n = 2; n <= 12; ++n) {
        // labels: every mask for small n, sampled masks beyond
        const std::size_t label_masks = std::size_t{1} << n;
        Rng rng(n);
        for (std::size_t lm = 0; lm < label_masks; lm += (n <= 8 ? 1 : 1 + rng.below(40))) {
            std::vector<int> y(n);
            for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>((lm >> i) & 1);
            const auto pos = std::count(y.begin(), y.end(), 1);
            if (pos == 0 || pos == static_cast<long>(n)) continue;
            const std::size_t score_draws = n <= 5 ? static_cast<std::size_t>(std::pow(4, n)) : 20;
            for (std::size_t sd = 0; sd < score_draws; ++sd) {
                std::vector<double> s(n);
                std::size_t code = sd;
                for (std::size_t i = 0; i < n; ++i) {
                    if (n <= 5) {
                        s[i] = grid[code % 4];
                        code /= 4;
                    } else {
                        s[i] = grid[rng.below(4)];
                    }
                }
                const auto c = roc(y, s);
                ASSERT_EQ(c.auc, pairwise_auc(y, s));
                for (std::size_t k = 1; k < c.points.size(); ++k) {
                    ASSERT_GE(c.points[k].fpr, c.points[k - 1].fpr);
                    ASSERT_GE(c.points[k].tpr, c.points[k - 1].tpr);
                }
                // flipped labels and negated scores give the complement
                std::vector<int> fy(n);
                std::vector<double> fs(n);
                for (std::size_t i = 0; i < n; ++i) {
                    fy[i] = 1 - y[i];
                    fs[i] = -s[i];
                }
                ASSERT_EQ(roc(fy, fs).auc, c.auc);  // both flips together are the identity
                fs = s;
                ASSERT_NEAR(roc(fy, fs).auc, 1.0 - c.auc, 1e-15);
                ++checked;
            }
        }
    }
    EXPECT_GT(checked, 10000u);
}
