#include "cbd/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "cbd/error.hpp"
#include "cbd/random.hpp"

namespace cbd {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

}  // namespace

Grid::Grid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
    std::sort(axes_.begin(), axes_.end(),
              [](const GridAxis& a, const GridAxis& b) { return a.name < b.name; });
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        if (axes_[i].name.empty()) throw UsageError("grid: axis with empty name");
        if (axes_[i].values.empty()) throw UsageError("grid: axis '" + axes_[i].name + "' is empty");
        if (i > 0 && axes_[i].name == axes_[i - 1].name) {
            throw UsageError("grid: axis '" + axes_[i].name + "' given twice");
        }
    }
}

Grid Grid::parse(std::string_view text) {
    std::vector<GridAxis> axes;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto where = "grid line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(where + "expected 'axis = [values]'");
        GridAxis axis;
        axis.name = trim(std::string_view(line).substr(0, eq));
        std::string rhs = trim(std::string_view(line).substr(eq + 1));
        if (rhs.size() < 2 || rhs.front() != '[' || rhs.back() != ']') {
            throw UsageError(where + "values must be a bracketed list");
        }
        rhs = rhs.substr(1, rhs.size() - 2);
        if (!trim(rhs).empty()) {
            std::size_t start = 0;
            while (true) {
                auto comma = rhs.find(',', start);
                std::string v = unquote(trim(std::string_view(rhs).substr(
                    start, comma == std::string::npos ? std::string::npos : comma - start)));
                if (v.empty()) throw UsageError(where + "empty value in list");
                axis.values.push_back(std::move(v));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        }
        if (axis.values.empty()) throw UsageError(where + "axis '" + axis.name + "' is empty");
        axes.push_back(std::move(axis));
    }
    if (axes.empty()) throw UsageError("grid: no axes");
    return Grid(std::move(axes));
}

std::size_t Grid::size() const noexcept {
    if (axes_.empty()) return 0;
    std::size_t n = 1;
    for (const auto& a : axes_) n *= a.values.size();
    return n;
}

GridPoint Grid::point(std::size_t index) const {
    if (index >= size()) throw UsageError("grid: point index out of range");
    GridPoint p(axes_.size());
    for (std::size_t k = axes_.size(); k-- > 0;) {
        const auto& a = axes_[k];
        p[k] = {a.name, a.values[index % a.values.size()]};
        index /= a.values.size();
    }
    return p;
}

namespace {

struct Fold {
    Dataset train;
    Dataset validation;
};

std::vector<Fold> make_folds(const Dataset& data, const ValidationScheme& scheme, std::uint64_t seed) {
    std::vector<Fold> folds;
    if (scheme.kind == ValidationScheme::Kind::Holdout) {
        if (!(scheme.holdout_fraction > 0 && scheme.holdout_fraction < 1)) {
            throw UsageError("grid search: holdout fraction must be in (0, 1)");
        }
        auto s = split_dataset(data, {scheme.holdout_fraction, seed, true});
        if (s.train.empty() || s.test.empty()) {
            throw DataError("grid search: dataset too small for a holdout split");
        }
        folds.push_back({std::move(s.train), std::move(s.test)});
        return folds;
    }
    const std::size_t k = scheme.folds;
    if (k < 2) throw UsageError("grid search: k-fold needs at least 2 folds");
    if (data.size() < k) throw DataError("grid search: fewer records than folds");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::size_t> fold_of(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = i % k;
    for (std::size_t f = 0; f < k; ++f) {
        Fold fold;
        fold.train.source_path = data.source_path;
        fold.validation.source_path = data.source_path;
        for (std::size_t i = 0; i < data.size(); ++i) {
            (fold_of[i] == f ? fold.validation : fold.train).records.push_back(data.records[i]);
        }
        folds.push_back(std::move(fold));
    }
    return folds;
}

}  // namespace

SearchResult grid_search(const Grid& grid, const TrialFn& trial, const Dataset& data,
                         const ValidationScheme& scheme, std::uint64_t seed, std::size_t workers) {
    const std::size_t n = grid.size();
    if (n == 0) throw UsageError("grid search: empty grid");
    const auto folds = make_folds(data, scheme, seed);

    SearchResult r;
    r.trials.resize(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            TrialResult t;
            t.index = i;
            t.point = grid.point(i);
            t.seed = mix_seed(seed, i);
            const auto start = std::chrono::steady_clock::now();
            try {
                double sum = 0;
                for (const auto& f : folds) sum += trial(t.point, f.train, f.validation, t.seed);
                t.accuracy = sum / static_cast<double>(folds.size());
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
                return;
            }
            t.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            r.trials[i] = std::move(t);
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(workers, 1, n);
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (r.trials[i].accuracy > r.trials[best].accuracy) best = i;
    }
    r.best = r.trials[best];
    return r;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

void write_trials_csv(const SearchResult& r, std::ostream& os, bool include_wall_time) {
    os << "index";
    if (!r.trials.empty()) {
        for (const auto& [name, value] : r.trials.front().point) os << ',' << csv_field(name);
    }
    os << ",accuracy,seed";
    if (include_wall_time) os << ",wall_time";
    os << '\n';
    char buf[64];
    for (const auto& t : r.trials) {
        os << t.index;
        for (const auto& [name, value] : t.point) os << ',' << csv_field(value);
        std::snprintf(buf, sizeof buf, ",%.17g,%llu", t.accuracy, static_cast<unsigned long long>(t.seed));
        os << buf;
        if (include_wall_time) {
            std::snprintf(buf, sizeof buf, ",%.6f", t.wall_time);
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace cbd
