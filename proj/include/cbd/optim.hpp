#pragma once

#include <string>
#include <vector>

#include "cbd/linalg.hpp"

namespace cbd {

/// A trainable tensor paired with its gradient buffer.
struct ParamRef {
    std::string name;
    Matrix* value;
    Matrix* grad;
};

enum class OptimizerKind { Sgd, Adam };

struct AdamHparams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Plain SGD or Adam with bias correction. Moment buffers are allocated on
/// the first step and keyed by position in the parameter list, so the list
/// must keep its order between steps.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, AdamHparams adam = {})
        : kind_(kind), lr_(learning_rate), adam_(adam) {}

    void step(const std::vector<ParamRef>& params) {
        if (kind_ == OptimizerKind::Sgd) {
            for (const auto& p : params) *p.value -= lr_ * *p.grad;
            return;
        }
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
                v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Matrix& g = *params[i].grad;
            m_[i] = adam_.beta1 * m_[i] + (1.0 - adam_.beta1) * g;
            v_[i] = adam_.beta2 * v_[i] + (1.0 - adam_.beta2) * g.cwiseProduct(g);
            *params[i].value -=
                (lr_ * (m_[i] / c1).array() / ((v_[i] / c2).array().sqrt() + adam_.eps)).matrix();
        }
    }

    [[nodiscard]] OptimizerKind kind() const noexcept { return kind_; }
    [[nodiscard]] long steps() const noexcept { return t_; }

private:
    OptimizerKind kind_;
    double lr_;
    AdamHparams adam_;
    long t_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

}  // namespace cbd
