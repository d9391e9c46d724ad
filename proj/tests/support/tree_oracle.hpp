#pragma once

#include <memory>
#include <vector>

#include "cbd/linalg.hpp"

namespace cbd::testing {

/// Straightforward recursive CART reference: at every node it tries every
/// feature and every midpoint between distinct neighbouring values, scoring
/// by weighted gini impurity in exact rational arithmetic. Lowest impurity
/// wins; ties go to the lower feature, then the lower threshold.
class OracleTree {
public:
    OracleTree(const Matrix& X, const std::vector<int>& y, std::size_t min_samples_leaf);
    [[nodiscard]] int predict(const Vector& x) const;

private:
    struct Node {
        int feature = -1;
        double threshold = 0;
        int n0 = 0;
        int n1 = 0;
        std::unique_ptr<Node> left, right;
    };
    std::unique_ptr<Node> grow(const std::vector<std::size_t>& rows);

    const Matrix& X_;
    const std::vector<int>& y_;
    std::size_t min_leaf_;
    std::unique_ptr<Node> root_;
};

}  // namespace cbd::testing
