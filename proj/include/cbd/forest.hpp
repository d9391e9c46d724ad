#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbd/classifier.hpp"
#include "cbd/linalg.hpp"

namespace cbd {

struct MaxFeatures {
    enum class Kind : std::uint8_t { Sqrt, All, Count };
    Kind kind = Kind::Sqrt;
    std::size_t count = 0;

    /// "sqrt", "all", or a positive integer.
    static MaxFeatures parse(const std::string& s);
    [[nodiscard]] std::size_t resolve(std::size_t n_features) const;
    [[nodiscard]] std::string to_string() const;
};

struct RFConfig {
    std::size_t n_estimators = 100;
    MaxFeatures max_features;
    std::size_t min_samples_leaf = 1;
    std::size_t n_jobs = 1;
    std::uint64_t seed = 0;
    std::optional<std::size_t> max_depth;
    /// Off only in tests: every tree then sees the full training set.
    bool bootstrap = true;
};

/// Axis-aligned binary tree. A node with feature < 0 is a leaf; samples with
/// x[feature] <= threshold go left.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::array<std::uint32_t, 2> counts{};

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    [[nodiscard]] const TreeNode& leaf_for(const Vector& x) const;
    /// Majority class of the reached leaf; tie goes to class 0.
    [[nodiscard]] int vote(const Vector& x) const;
    [[nodiscard]] std::size_t depth() const;
};

struct Forest {
    std::vector<DecisionTree> trees;
    std::size_t n_features = 0;
};

Forest train_random_forest(const Matrix& X, std::span<const int> y, const RFConfig& cfg);

/// prob = fraction of trees voting clickbait; label = 1 only for a strict
/// majority (a tied vote gives 0).
Prediction predict_forest(const Forest& f, const Vector& x);

}  // namespace cbd
