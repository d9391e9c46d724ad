#pragma once

#include <cstdint>
#include <span>

#include "cbd/classifier.hpp"
#include "cbd/linalg.hpp"

namespace cbd {

/// p(clickbait | x) = σ(wᵀx + b).
struct LogisticModel {
    Vector w;
    double b = 0.0;

    [[nodiscard]] double logit(const Vector& x) const;
    friend bool operator==(const LogisticModel& a, const LogisticModel& c) {
        return a.w == c.w && a.b == c.b;
    }
};

struct LogRegConfig {
    double learning_rate = 0.5;
    std::size_t epochs = 500;
    double l2 = 0.0;
    /// Unused (zero initialisation); kept so every trainer takes a seed.
    std::uint64_t seed = 0;
};

struct LogisticGradient {
    Vector w;
    double b = 0.0;
};

/// Mean binary cross-entropy over rows of X plus l2·‖w‖²/2.
double logreg_objective(const LogisticModel& m, const Matrix& X, std::span<const int> y, double l2);
LogisticGradient logreg_gradient(const LogisticModel& m, const Matrix& X, std::span<const int> y,
                                 double l2);

/// Full-batch gradient descent from w = 0, b = 0.
LogisticModel train_logreg(const Matrix& X, std::span<const int> y, const LogRegConfig& cfg,
                           TrainingHistory* history = nullptr);

/// label = 1 iff prob >= 0.5.
Prediction predict_logreg(const LogisticModel& m, const Vector& x);

}  // namespace cbd
