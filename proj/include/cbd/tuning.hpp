#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbd/corpus.hpp"

namespace cbd {

struct GridAxis {
    std::string name;
    std::vector<std::string> values;
};

/// One value per axis, in axis order.
using GridPoint = std::vector<std::pair<std::string, std::string>>;

/// Axes are kept sorted by name. Points enumerate the cartesian product
/// lexicographically: the first axis varies slowest.
class Grid {
public:
    Grid() = default;
    explicit Grid(std::vector<GridAxis> axes);

    /// One `axis = [v1, v2, ...]` line per axis; blank lines and `#`
    /// comments ignored. Values may be bare or double-quoted.
    static Grid parse(std::string_view text);

    [[nodiscard]] const std::vector<GridAxis>& axes() const noexcept { return axes_; }
    [[nodiscard]] std::size_t size() const noexcept;
    [[nodiscard]] GridPoint point(std::size_t index) const;

private:
    std::vector<GridAxis> axes_;
};

struct TrialResult {
    std::size_t index = 0;
    GridPoint point;
    double accuracy = 0;
    double wall_time = 0;  // seconds
    std::uint64_t seed = 0;
};

struct ValidationScheme {
    enum class Kind { Holdout, KFold };
    Kind kind = Kind::Holdout;
    double holdout_fraction = 0.2;
    std::size_t folds = 5;
};

struct SearchResult {
    TrialResult best;
    std::vector<TrialResult> trials;  // in grid order
};

/// Trains on `train` with the given point and seed, returns accuracy on `validation`.
using TrialFn = std::function<double(const GridPoint& point, const Dataset& train,
                                     const Dataset& validation, std::uint64_t seed)>;

/// Every grid point is evaluated once. Validation splits come from `seed`
/// and are shared by all trials; trial i trains with mix_seed(seed, i).
/// K-fold accuracy is the mean over folds. Best = highest accuracy, ties to
/// the earliest trial.
SearchResult grid_search(const Grid& grid, const TrialFn& trial, const Dataset& data,
                         const ValidationScheme& scheme, std::uint64_t seed, std::size_t workers = 1);

/// Separate train and evaluation callables.
template <typename TrainFn, typename EvalFn>
SearchResult grid_search(const Grid& grid, TrainFn train_fn, EvalFn eval_fn, const Dataset& data,
                         const ValidationScheme& scheme, std::uint64_t seed, std::size_t workers = 1) {
    return grid_search(
        grid,
        [&](const GridPoint& p, const Dataset& tr, const Dataset& va, std::uint64_t s) {
            return static_cast<double>(eval_fn(train_fn(p, tr, s), va));
        },
        data, scheme, seed, workers);
}

/// index, one column per axis, accuracy, seed[, wall_time].
void write_trials_csv(const SearchResult& r, std::ostream& os, bool include_wall_time = true);

}  // namespace cbd
