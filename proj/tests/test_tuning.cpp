#include <gtest/gtest.h>

#include <mutex>
#include <set>
#include <sstream>

#include "cbd/error.hpp"
#include "cbd/pipeline.hpp"
#include "cbd/random.hpp"
#include "cbd/tuning.hpp"
#include "support/synthetic.hpp"

using namespace cbd;

namespace {

// Accuracy depends on the point, the seed and the data sizes only.
double fake_trial(const GridPoint& p, const Dataset& train, const Dataset& val, std::uint64_t seed) {
    double v = 0;
    for (const auto& [k, x] : p) v += std::stod(x);
    return std::fmod(v * 0.013 + static_cast<double>(seed % 97) * 1e-4 + train.size() * 1e-6 + val.size() * 1e-7, 1.0);
}

}  // namespace

TEST(Grid, CardinalityOrderAndPoints) {
    const Grid g({{"b", {"1", "2", "3"}}, {"a", {"10", "20"}}});
    EXPECT_EQ(g.size(), 6u);
    EXPECT_EQ(g.axes()[0].name, "a");
    EXPECT_EQ(g.point(0), (GridPoint{{"a", "10"}, {"b", "1"}}));
    EXPECT_EQ(g.point(1), (GridPoint{{"a", "10"}, {"b", "2"}}));
    EXPECT_EQ(g.point(5), (GridPoint{{"a", "20"}, {"b", "3"}}));
    std::set<GridPoint> all;
    for (std::size_t i = 0; i < g.size(); ++i) all.insert(g.point(i));
    EXPECT_EQ(all.size(), 6u);

    Rng rng(1);
    for (int t = 0; t < 30; ++t) {
        std::vector<GridAxis> axes;
        std::size_t expect = 1;
        const std::size_t n = 1 + rng.below(4);
        for (std::size_t a = 0; a < n; ++a) {
            const std::size_t len = 1 + rng.below(4);
            GridAxis ax{"ax" + std::to_string(a), {}};
            for (std::size_t k = 0; k < len; ++k) ax.values.push_back(std::to_string(k));
            expect *= len;
            axes.push_back(ax);
        }
        EXPECT_EQ(Grid(axes).size(), expect);
    }
}

TEST(Grid, Errors) {
    EXPECT_THROW(Grid(std::vector<GridAxis>{{"a", {}}}), UsageError);
    EXPECT_THROW(Grid(std::vector<GridAxis>{{"a", {"1"}}, {"a", {"2"}}}), UsageError);
    EXPECT_THROW(Grid(std::vector<GridAxis>{{"", {"1"}}}), UsageError);
    EXPECT_THROW(Grid::parse("# nothing\n"), UsageError);
    EXPECT_THROW(Grid::parse("a = []\n"), UsageError);
    EXPECT_THROW(Grid::parse("a = 1, 2\n"), UsageError);
}

TEST(Grid, Parse) {
    const auto g = Grid::parse("# sweep\nrf.n_estimators = [10, 20, 30, 50, 100]\n\nmlp.activation = [\"relu\", prelu]\n");
    ASSERT_EQ(g.axes().size(), 2u);
    EXPECT_EQ(g.axes()[0].name, "mlp.activation");
    EXPECT_EQ(g.axes()[0].values, (std::vector<std::string>{"relu", "prelu"}));
    EXPECT_EQ(g.axes()[1].values, (std::vector<std::string>{"10", "20", "30", "50", "100"}));
    EXPECT_EQ(g.size(), 10u);
}

TEST(Search, SinglePointAndSeeds) {
    const auto d = cbd::testing::make_clickbait_dataset(1, {.n = 50});
    const Grid g(std::vector<GridAxis>{{"x", {"1"}}});
    std::vector<std::uint64_t> seeds;
    const auto r = grid_search(
        g,
        [&](const GridPoint&, const Dataset& tr, const Dataset& va, std::uint64_t s) {
            seeds.push_back(s);
            EXPECT_EQ(tr.size() + va.size(), 50u);
            EXPECT_EQ(va.size(), 10u);
            return 0.5;
        },
        d, {}, 42);
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_EQ(r.best.index, 0u);
    EXPECT_EQ(seeds, std::vector<std::uint64_t>{mix_seed(42, 0)});
}

TEST(Search, ForestGridRunsEveryTrialAndPicksMax) {
    const auto d = cbd::testing::make_clickbait_dataset(2, {.n = 120});
    const auto g = Grid::parse("rf.n_estimators = [10, 20, 30, 50, 100]\n");
    PipelineConfig base;
    base.model = ModelKind::Forest;
    base.word2vec.dim = 8;
    base.word2vec.epochs = 1;
    auto train_fn = [&](const GridPoint& p, const Dataset& tr, std::uint64_t s) {
        PipelineConfig c = base;
        for (const auto& [k, v] : p) apply_option(c, k, v);
        c.seed = s;
        return train_pipeline(tr, c);
    };
    auto eval_fn = [](const ModelBundle& m, const Dataset& va) { return accuracy(m, va); };
    const auto r = grid_search(g, train_fn, eval_fn, d, {}, 7);
    ASSERT_EQ(r.trials.size(), 5u);
    double best = -1;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(r.trials[i].index, i);
        EXPECT_EQ(r.trials[i].point[0].second, g.axes()[0].values[i]);
        EXPECT_GE(r.trials[i].accuracy, 0.0);
        EXPECT_LE(r.trials[i].accuracy, 1.0);
        if (r.trials[i].accuracy > best) {
            best = r.trials[i].accuracy;
            best_i = i;
        }
    }
    EXPECT_EQ(r.best.index, best_i);
    const auto again = grid_search(g, train_fn, eval_fn, d, {}, 7);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(again.trials[i].accuracy, r.trials[i].accuracy);
}

TEST(Search, ParallelEqualsSerialAndTiesGoEarly) {
    const auto d = cbd::testing::make_clickbait_dataset(3, {.n = 40});
    const Grid g({{"p", {"1", "2", "3", "4"}}, {"q", {"0", "5", "7"}}});
    const auto serial = grid_search(g, fake_trial, d, {}, 9, 1);
    const auto parallel = grid_search(g, fake_trial, d, {}, 9, 4);
    std::ostringstream a, b;
    write_trials_csv(serial, a, false);
    write_trials_csv(parallel, b, false);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(serial.best.index, parallel.best.index);
    EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "index,p,q,accuracy,seed");

    const auto ties = grid_search(g, [](auto&&...) { return 0.25; }, d, {}, 1, 3);
    EXPECT_EQ(ties.best.index, 0u);
}

TEST(Search, KFoldCoversEveryRecordOnce) {
    const auto d = cbd::testing::make_clickbait_dataset(4, {.n = 53});
    std::mutex mu;
    std::multiset<std::string> seen;
    ValidationScheme scheme;
    scheme.kind = ValidationScheme::Kind::KFold;
    scheme.folds = 5;
    const auto r = grid_search(
        Grid(std::vector<GridAxis>{{"x", {"1"}}}),
        [&](const GridPoint&, const Dataset& tr, const Dataset& va, std::uint64_t) {
            std::lock_guard lock(mu);
            EXPECT_EQ(tr.size() + va.size(), 53u);
            for (const auto& rec : va.records) seen.insert(rec.video_id);
            return static_cast<double>(va.size());
        },
        d, scheme, 3);
    EXPECT_EQ(seen.size(), 53u);
    EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()).size(), 53u);
    EXPECT_NEAR(r.best.accuracy, 53.0 / 5, 1e-12);
    scheme.folds = 1;
    EXPECT_THROW(grid_search(Grid(std::vector<GridAxis>{{"x", {"1"}}}), fake_trial, d, scheme, 3), UsageError);
}
