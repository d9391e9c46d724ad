#include "cbd/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "cbd/error.hpp"
#include "cbd/random.hpp"

namespace cbd {

MaxFeatures MaxFeatures::parse(const std::string& s) {
    if (s == "sqrt") return {Kind::Sqrt, 0};
    if (s == "all") return {Kind::All, 0};
    std::size_t pos = 0;
    unsigned long k = 0;
    try {
        k = std::stoul(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || k == 0) throw UsageError("max_features must be sqrt, all or a positive count");
    return {Kind::Count, k};
}

std::size_t MaxFeatures::resolve(std::size_t n_features) const {
    switch (kind) {
        case Kind::Sqrt:
            return std::max<std::size_t>(
                1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features))));
        case Kind::All:
            return n_features;
        case Kind::Count:
            return std::min(count, n_features);
    }
    return n_features;
}

std::string MaxFeatures::to_string() const {
    switch (kind) {
        case Kind::Sqrt: return "sqrt";
        case Kind::All: return "all";
        case Kind::Count: return std::to_string(count);
    }
    return "sqrt";
}

const TreeNode& DecisionTree::leaf_for(const Vector& x) const {
    const TreeNode* n = &nodes.front();
    while (!n->is_leaf()) {
        n = &nodes[static_cast<std::size_t>(x[n->feature] <= n->threshold ? n->left : n->right)];
    }
    return *n;
}

int DecisionTree::vote(const Vector& x) const {
    const auto& leaf = leaf_for(x);
    return leaf.counts[1] > leaf.counts[0] ? 1 : 0;
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

namespace {

using u128 = unsigned __int128;

// Split quality Σ_children Σ_c n_c² / n_child kept as an exact fraction
// num / den, so equal-quality candidates compare equal.
struct Split {
    bool found = false;
    Eigen::Index feature = -1;
    double threshold = 0.0;
    u128 num = 0;
    u128 den = 1;

    [[nodiscard]] bool worse_than(u128 n, u128 d) const { return !found || num * d < n * den; }
};

// Midpoint between consecutive distinct values; nudged so that `lo` goes left
// and `hi` goes right even when they are adjacent doubles.
double split_point(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid < hi ? mid : lo;
}

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const int> y, const RFConfig& cfg, Rng& rng)
        : X_(X), y_(y), cfg_(cfg), rng_(rng), mtry_(cfg.max_features.resolve(static_cast<std::size_t>(X.cols()))) {
        features_.resize(static_cast<std::size_t>(X.cols()));
        std::iota(features_.begin(), features_.end(), Eigen::Index{0});
    }

    DecisionTree build(std::vector<std::size_t> samples) {
        DecisionTree tree;
        struct Work {
            std::size_t node;
            std::vector<std::size_t> samples;
            std::size_t depth;
        };
        std::vector<Work> stack;
        tree.nodes.emplace_back();
        stack.push_back({0, std::move(samples), 0});
        while (!stack.empty()) {
            Work w = std::move(stack.back());
            stack.pop_back();
            std::array<std::uint32_t, 2> counts{};
            for (auto s : w.samples) ++counts[static_cast<std::size_t>(y_[s])];
            tree.nodes[w.node].counts = counts;

            const bool pure = counts[0] == 0 || counts[1] == 0;
            const bool too_small = w.samples.size() < 2 * cfg_.min_samples_leaf;
            const bool too_deep = cfg_.max_depth && w.depth >= *cfg_.max_depth;
            if (pure || too_small || too_deep) continue;

            const Split best = find_split(w.samples);
            if (!best.found) continue;

            std::vector<std::size_t> left, right;
            for (auto s : w.samples) {
                (X_(static_cast<Eigen::Index>(s), best.feature) <= best.threshold ? left : right).push_back(s);
            }
            const auto li = static_cast<std::int32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& node = tree.nodes[w.node];
            node.feature = static_cast<std::int32_t>(best.feature);
            node.threshold = best.threshold;
            node.left = li;
            node.right = li + 1;
            // Right child first on the stack so the left subtree is expanded first.
            stack.push_back({static_cast<std::size_t>(li + 1), std::move(right), w.depth + 1});
            stack.push_back({static_cast<std::size_t>(li), std::move(left), w.depth + 1});
        }
        return tree;
    }

private:
    Split find_split(const std::vector<std::size_t>& samples) {
        // Partial Fisher-Yates draws mtry distinct candidates.
        for (std::size_t i = 0; i < mtry_; ++i) {
            const auto j = i + static_cast<std::size_t>(rng_.below(features_.size() - i));
            std::swap(features_[i], features_[j]);
        }
        std::vector<Eigen::Index> candidates(features_.begin(),
                                             features_.begin() + static_cast<std::ptrdiff_t>(mtry_));
        std::sort(candidates.begin(), candidates.end());

        const std::size_t n = samples.size();
        const std::size_t leaf = cfg_.min_samples_leaf;
        std::array<std::uint64_t, 2> total{};
        for (auto s : samples) total[static_cast<std::size_t>(y_[s])] += 1;

        Split best;
        std::vector<std::pair<double, int>> column(n);
        for (Eigen::Index f : candidates) {
            for (std::size_t i = 0; i < n; ++i) {
                column[i] = {X_(static_cast<Eigen::Index>(samples[i]), f), y_[samples[i]]};
            }
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::array<std::uint64_t, 2> left{};
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left[static_cast<std::size_t>(column[i].second)] += 1;
                if (!(column[i].first < column[i + 1].first)) continue;
                const std::uint64_t nl = i + 1;
                const std::uint64_t nr = n - nl;
                if (nl < leaf || nr < leaf) continue;
                const std::uint64_t r0 = total[0] - left[0];
                const std::uint64_t r1 = total[1] - left[1];
                const u128 sl = u128{left[0]} * left[0] + u128{left[1]} * left[1];
                const u128 sr = u128{r0} * r0 + u128{r1} * r1;
                const u128 num = sl * nr + sr * nl;
                const u128 den = u128{nl} * nr;
                if (best.worse_than(num, den)) {
                    best = {true, f, split_point(column[i].first, column[i + 1].first), num, den};
                }
            }
        }
        return best;
    }

    const Matrix& X_;
    std::span<const int> y_;
    const RFConfig& cfg_;
    Rng& rng_;
    std::size_t mtry_;
    std::vector<Eigen::Index> features_;
};

}  // namespace

Forest train_random_forest(const Matrix& X, std::span<const int> y, const RFConfig& cfg) {
    if (cfg.n_estimators == 0) throw UsageError("random forest: n_estimators must be >= 1");
    if (cfg.min_samples_leaf == 0) throw UsageError("random forest: min_samples_leaf must be >= 1");
    if (cfg.max_depth && *cfg.max_depth == 0) throw UsageError("random forest: max_depth must be >= 1");
    if (static_cast<std::size_t>(X.rows()) != y.size() || y.empty()) {
        throw DataError("random forest: " + std::to_string(X.rows()) + " samples but " +
                        std::to_string(y.size()) + " labels");
    }
    for (int label : y) {
        if (label != 0 && label != 1) throw DataError("random forest: labels must be 0 or 1");
    }

    const std::size_t n = y.size();
    Forest forest;
    forest.n_features = static_cast<std::size_t>(X.cols());
    forest.trees.resize(cfg.n_estimators);

    auto grow = [&](std::size_t t) {
        Rng rng(mix_seed(cfg.seed, t));
        std::vector<std::size_t> sample(n);
        if (cfg.bootstrap) {
            for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
        } else {
            std::iota(sample.begin(), sample.end(), std::size_t{0});
        }
        forest.trees[t] = TreeBuilder(X, y, cfg, rng).build(std::move(sample));
    };

    const std::size_t workers = std::clamp<std::size_t>(cfg.n_jobs, 1, cfg.n_estimators);
    if (workers == 1) {
        for (std::size_t t = 0; t < cfg.n_estimators; ++t) grow(t);
        return forest;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t t = next++; t < cfg.n_estimators; t = next++) grow(t);
        });
    }
    pool.clear();
    return forest;
}

Prediction predict_forest(const Forest& f, const Vector& x) {
    if (static_cast<std::size_t>(x.size()) != f.n_features) {
        throw DataError("forest expects " + std::to_string(f.n_features) + " features, got " +
                        std::to_string(x.size()));
    }
    std::size_t votes = 0;
    for (const auto& t : f.trees) votes += static_cast<std::size_t>(t.vote(x));
    const double prob = static_cast<double>(votes) / static_cast<double>(f.trees.size());
    return {prob, 2 * votes > f.trees.size() ? 1 : 0};
}

}  // namespace cbd
