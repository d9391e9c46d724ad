#include "cbd/logistic.hpp"

#include "cbd/error.hpp"

namespace cbd {

namespace {

void check_shapes(const Matrix& X, std::span<const int> y) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) {
        throw DataError("logistic regression: " + std::to_string(X.rows()) + " samples but " +
                        std::to_string(y.size()) + " labels");
    }
    if (y.empty()) throw DataError("logistic regression: no samples");
}

Vector labels_vector(std::span<const int> y) {
    Vector v(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) v[static_cast<Eigen::Index>(i)] = y[i];
    return v;
}

double mean_bce(const Vector& logits, const Vector& y) {
    double s = 0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) s += bce_with_logit(logits[i], y[i]);
    return s / static_cast<double>(logits.size());
}

}  // namespace

double LogisticModel::logit(const Vector& x) const {
    if (x.size() != w.size()) {
        throw DataError("logistic model expects " + std::to_string(w.size()) + " features, got " +
                        std::to_string(x.size()));
    }
    return w.dot(x) + b;
}

double logreg_objective(const LogisticModel& m, const Matrix& X, std::span<const int> y, double l2) {
    check_shapes(X, y);
    const Vector z = (X * m.w).array() + m.b;
    return mean_bce(z, labels_vector(y)) + 0.5 * l2 * m.w.squaredNorm();
}

LogisticGradient logreg_gradient(const LogisticModel& m, const Matrix& X, std::span<const int> y,
                                 double l2) {
    check_shapes(X, y);
    const Vector z = (X * m.w).array() + m.b;
    const Vector r = z.unaryExpr([](double v) { return sigmoid(v); }) - labels_vector(y);
    const double n = static_cast<double>(y.size());
    LogisticGradient g;
    g.w = X.transpose() * r / n + l2 * m.w;
    g.b = r.sum() / n;
    return g;
}

LogisticModel train_logreg(const Matrix& X, std::span<const int> y, const LogRegConfig& cfg,
                           TrainingHistory* history) {
    check_shapes(X, y);
    if (cfg.l2 < 0) throw UsageError("logistic regression: l2 must be non-negative");
    LogisticModel m;
    m.w = Vector::Zero(X.cols());
    const Vector labels = labels_vector(y);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const LogisticGradient g = logreg_gradient(m, X, y, cfg.l2);
        m.w -= cfg.learning_rate * g.w;
        m.b -= cfg.learning_rate * g.b;
        if (!m.w.allFinite() || !std::isfinite(m.b)) {
            throw NumericError("logistic regression diverged at epoch " + std::to_string(epoch + 1));
        }
        if (history) {
            const Vector z = (X * m.w).array() + m.b;
            history->train_loss.push_back(mean_bce(z, labels));
            double hits = 0;
            for (Eigen::Index i = 0; i < z.size(); ++i) hits += (z[i] >= 0.0) == (labels[i] == 1.0);
            history->train_accuracy.push_back(hits / static_cast<double>(z.size()));
        }
    }
    return m;
}

Prediction predict_logreg(const LogisticModel& m, const Vector& x) {
    const double p = sigmoid(m.logit(x));
    return {p, p >= 0.5 ? 1 : 0};
}

}  // namespace cbd
