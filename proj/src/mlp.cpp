#include "cbd/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbd/error.hpp"

namespace cbd {

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    if (name == "prelu") return Activation::Prelu;
    throw UsageError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::Prelu: return "prelu";
    }
    return "relu";
}

Matrix batch_norm_forward(const Matrix& batch, const RowVector& gamma, const RowVector& beta,
                          Mode mode, double momentum, RowVector& running_mean,
                          RowVector& running_var, BatchNormCache* cache) {
    RowVector mean, var;
    if (mode == Mode::Train) {
        if (batch.rows() < 2) throw DataError("batch norm: train mode needs a batch of at least 2");
        const auto n = static_cast<double>(batch.rows());
        mean = batch.colwise().sum() / n;
        var = (batch.rowwise() - mean).array().square().colwise().sum() / n;
        running_mean = momentum * running_mean + (1.0 - momentum) * mean;
        running_var = momentum * running_var + (1.0 - momentum) * var;
    } else {
        mean = running_mean;
        var = running_var;
    }
    const RowVector inv = (var.array() + kBatchNormEps).rsqrt();
    Matrix xhat = (batch.rowwise() - mean).array().rowwise() * inv.array();
    Matrix out = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->inv_std = inv;
    }
    return out;
}

Vector dropout_forward(const Vector& v, double rate, Mode mode, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw UsageError("dropout rate must lie in [0, 1)");
    if (mode == Mode::Infer || rate == 0.0) return v;
    const double keep_scale = 1.0 / (1.0 - rate);
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = rng.bernoulli(rate) ? 0.0 : v[i] * keep_scale;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Matrix xavier(Eigen::Index in, Eigen::Index out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix m(in, out);
    for (Eigen::Index c = 0; c < out; ++c) {
        for (Eigen::Index r = 0; r < in; ++r) m(r, c) = rng.uniform(-bound, bound);
    }
    return m;
}

Matrix activate(const Matrix& x, const ActivationLayer& a) {
    switch (a.kind) {
        case Activation::Relu:
            return x.cwiseMax(0.0);
        case Activation::Sigmoid:
            return x.unaryExpr([](double v) { return sigmoid(v); });
        case Activation::Tanh:
            return x.array().tanh().matrix();
        case Activation::Prelu: {
            Matrix out(x.rows(), x.cols());
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                for (Eigen::Index r = 0; r < x.rows(); ++r) out(r, c) = prelu(x(r, c), a.slope(0, c));
            }
            return out;
        }
    }
    return x;
}

struct ForwardCache {
    std::vector<Matrix> inputs;
    std::vector<BatchNormCache> batch_norm;
    std::vector<Matrix> dropout_masks;
};

// Running batch-norm statistics are written to `stats_sink` (train mode only).
Matrix forward(const MLPModel& m, const Matrix& X, Mode mode, Rng* rng, ForwardCache* cache,
               MLPModel* stats_sink) {
    Matrix h = X;
    if (cache) {
        cache->inputs.assign(m.layers.size(), Matrix());
        cache->batch_norm.assign(m.layers.size(), BatchNormCache());
        cache->dropout_masks.assign(m.layers.size(), Matrix());
    }
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        if (cache) cache->inputs[l] = h;
        h = std::visit(
            Overloaded{
                [&](const DenseLayer& d) -> Matrix { return (h * d.weight).rowwise() + d.bias.row(0); },
                [&](const BatchNormLayer& bn) -> Matrix {
                    RowVector mean = bn.running_mean;
                    RowVector var = bn.running_var;
                    Matrix out = batch_norm_forward(h, bn.gamma.row(0), bn.beta.row(0), mode,
                                                    bn.momentum, mean, var,
                                                    cache ? &cache->batch_norm[l] : nullptr);
                    if (mode == Mode::Train && stats_sink) {
                        auto& sink = std::get<BatchNormLayer>(stats_sink->layers[l]);
                        sink.running_mean = std::move(mean);
                        sink.running_var = std::move(var);
                    }
                    return out;
                },
                [&](const DropoutLayer& d) -> Matrix {
                    if (mode == Mode::Infer || d.rate == 0.0) return h;
                    const double scale = 1.0 / (1.0 - d.rate);
                    Matrix mask(h.rows(), h.cols());
                    for (Eigen::Index c = 0; c < h.cols(); ++c) {
                        for (Eigen::Index r = 0; r < h.rows(); ++r) {
                            mask(r, c) = rng->bernoulli(d.rate) ? 0.0 : scale;
                        }
                    }
                    Matrix out = h.cwiseProduct(mask);
                    if (cache) cache->dropout_masks[l] = std::move(mask);
                    return out;
                },
                [&](const ActivationLayer& a) -> Matrix { return activate(h, a); },
            },
            m.layers[l]);
    }
    return h;
}

// Walks the stack backwards; `grads` follows MLPModel::parameters() order.
void backward(const MLPModel& m, const ForwardCache& cache, Matrix dy, std::vector<Matrix>& grads) {
    std::size_t gi = grads.size();
    for (std::size_t l = m.layers.size(); l-- > 0;) {
        const Matrix& x = cache.inputs[l];
        dy = std::visit(
            Overloaded{
                [&](const DenseLayer& d) -> Matrix {
                    gi -= 2;
                    grads[gi] = x.transpose() * dy;
                    grads[gi + 1] = dy.colwise().sum();
                    return dy * d.weight.transpose();
                },
                [&](const BatchNormLayer& bn) -> Matrix {
                    gi -= 2;
                    const auto& c = cache.batch_norm[l];
                    grads[gi] = (dy.array() * c.xhat.array()).colwise().sum().matrix();
                    grads[gi + 1] = dy.colwise().sum();
                    const Matrix dxhat = dy.array().rowwise() * bn.gamma.row(0).array();
                    const auto n = static_cast<double>(dy.rows());
                    const RowVector mean_d = dxhat.colwise().sum() / n;
                    const RowVector mean_dx = (dxhat.array() * c.xhat.array()).colwise().sum() / n;
                    Matrix dx = dxhat.rowwise() - mean_d;
                    dx -= (c.xhat.array().rowwise() * mean_dx.array()).matrix();
                    return dx.array().rowwise() * c.inv_std.array();
                },
                [&](const DropoutLayer& d) -> Matrix {
                    const Matrix& mask = cache.dropout_masks[l];
                    if (mask.size() == 0 || d.rate == 0.0) return dy;
                    return dy.cwiseProduct(mask);
                },
                [&](const ActivationLayer& a) -> Matrix {
                    switch (a.kind) {
                        case Activation::Relu:
                            return dy.cwiseProduct((x.array() > 0.0).cast<double>().matrix());
                        case Activation::Sigmoid: {
                            const Matrix s = x.unaryExpr([](double v) { return sigmoid(v); });
                            return dy.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
                        }
                        case Activation::Tanh: {
                            const Matrix t = x.array().tanh().matrix();
                            return dy.cwiseProduct((1.0 - t.array().square()).matrix());
                        }
                        case Activation::Prelu: {
                            gi -= 1;
                            Matrix dslope = Matrix::Zero(1, x.cols());
                            Matrix dx(x.rows(), x.cols());
                            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                                for (Eigen::Index r = 0; r < x.rows(); ++r) {
                                    if (x(r, c) >= 0.0) {
                                        dx(r, c) = dy(r, c);
                                    } else {
                                        dx(r, c) = a.slope(0, c) * dy(r, c);
                                        dslope(0, c) += x(r, c) * dy(r, c);
                                    }
                                }
                            }
                            grads[gi] = std::move(dslope);
                            return dx;
                        }
                    }
                    return dy;
                },
            },
            m.layers[l]);
    }
}

void check_rows(const Matrix& X, std::span<const int> y, const char* who) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) {
        throw DataError(std::string(who) + ": " + std::to_string(X.rows()) + " samples but " +
                        std::to_string(y.size()) + " labels");
    }
}

double mean_bce(const Vector& logits, std::span<const int> y) {
    double s = 0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        s += bce_with_logit(logits[i], static_cast<double>(y[static_cast<std::size_t>(i)]));
    }
    return s / static_cast<double>(logits.size());
}

double accuracy_of(const Vector& logits, std::span<const int> y) {
    double hits = 0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        hits += (logits[i] >= 0.0 ? 1 : 0) == y[static_cast<std::size_t>(i)];
    }
    return hits / static_cast<double>(logits.size());
}

}  // namespace

std::vector<Matrix*> MLPModel::parameters() {
    std::vector<Matrix*> out;
    for (auto& layer : layers) {
        std::visit(Overloaded{
                       [&](DenseLayer& d) {
                           out.push_back(&d.weight);
                           out.push_back(&d.bias);
                       },
                       [&](BatchNormLayer& bn) {
                           out.push_back(&bn.gamma);
                           out.push_back(&bn.beta);
                       },
                       [&](DropoutLayer&) {},
                       [&](ActivationLayer& a) {
                           if (a.kind == Activation::Prelu) out.push_back(&a.slope);
                       },
                   },
                   layer);
    }
    return out;
}

std::vector<const Matrix*> MLPModel::parameters() const {
    auto mut = const_cast<MLPModel&>(*this).parameters();
    return {mut.begin(), mut.end()};
}

void MLPConfig::validate() const {
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw UsageError("mlp: dropout rate must lie in [0, 1)");
    if (batch_size == 0) throw UsageError("mlp: batch size must be >= 1");
    if (batch_norm && batch_size < 2) throw UsageError("mlp: batch norm needs batch size >= 2");
    if (!(learning_rate > 0.0)) throw UsageError("mlp: learning rate must be positive");
    for (auto h : hidden) {
        if (h == 0) throw UsageError("mlp: hidden layer sizes must be positive");
    }
}

MLPModel build_mlp(std::size_t input_dim, const MLPConfig& cfg) {
    cfg.validate();
    if (input_dim == 0) throw DataError("mlp: input dimension is zero");
    Rng rng(cfg.seed);
    MLPModel m;
    m.input_dim = input_dim;
    auto in = static_cast<Eigen::Index>(input_dim);
    for (auto width : cfg.hidden) {
        const auto out = static_cast<Eigen::Index>(width);
        m.layers.emplace_back(DenseLayer{xavier(in, out, rng), Matrix::Zero(1, out)});
        if (cfg.batch_norm) {
            m.layers.emplace_back(BatchNormLayer{Matrix::Ones(1, out), Matrix::Zero(1, out),
                                                 RowVector::Zero(out), RowVector::Ones(out), 0.9});
        }
        ActivationLayer act{cfg.activation, Matrix()};
        if (cfg.activation == Activation::Prelu) act.slope = Matrix::Constant(1, out, cfg.prelu_init);
        m.layers.emplace_back(std::move(act));
        if (cfg.dropout_rate > 0.0) m.layers.emplace_back(DropoutLayer{cfg.dropout_rate});
        in = out;
    }
    m.layers.emplace_back(DenseLayer{Matrix::Zero(in, 1), Matrix::Zero(1, 1)});
    return m;
}

Vector mlp_logits(const MLPModel& m, const Matrix& X) {
    if (static_cast<std::size_t>(X.cols()) != m.input_dim) {
        throw DataError("mlp expects " + std::to_string(m.input_dim) + " features, got " +
                        std::to_string(X.cols()));
    }
    return forward(m, X, Mode::Infer, nullptr, nullptr, nullptr).col(0);
}

double mlp_batch_gradient(MLPModel& m, const Matrix& X, std::span<const int> y, Rng& rng,
                          std::vector<Matrix>& grads) {
    check_rows(X, y, "mlp");
    if (static_cast<std::size_t>(X.cols()) != m.input_dim) {
        throw DataError("mlp expects " + std::to_string(m.input_dim) + " features, got " +
                        std::to_string(X.cols()));
    }
    grads.resize(m.parameters().size());
    ForwardCache cache;
    const Vector logits = forward(m, X, Mode::Train, &rng, &cache, &m).col(0);
    const auto b = static_cast<double>(X.rows());
    Matrix dlogits(X.rows(), 1);
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        dlogits(i, 0) = (sigmoid(logits[i]) - y[static_cast<std::size_t>(i)]) / b;
    }
    backward(m, cache, std::move(dlogits), grads);
    return mean_bce(logits, y);
}

MLPModel train_mlp(const Matrix& X, std::span<const int> y, const MLPConfig& cfg,
                   const ValidationSet* validation, TrainingHistory* history) {
    check_rows(X, y, "train_mlp");
    if (y.empty()) throw DataError("train_mlp: no samples");
    if (cfg.batch_norm && y.size() < 2) throw DataError("train_mlp: batch norm needs at least 2 samples");
    MLPModel m = build_mlp(static_cast<std::size_t>(X.cols()), cfg);

    std::vector<Matrix> grads(m.parameters().size());
    std::vector<ParamRef> refs;
    {
        auto params = m.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            grads[i] = Matrix::Zero(params[i]->rows(), params[i]->cols());
            refs.push_back({"p" + std::to_string(i), params[i], &grads[i]});
        }
    }
    Optimizer opt(cfg.optimizer, cfg.learning_rate);
    Rng rng(mix_seed(cfg.seed, 1));

    const std::size_t n = y.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Batch boundaries; a trailing singleton is folded into the previous
    // batch when batch norm needs at least two rows.
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s < n; s += cfg.batch_size) starts.push_back(s);
    if (cfg.batch_norm && starts.size() > 1 && n - starts.back() == 1) starts.pop_back();
    starts.push_back(n);

    Matrix xb;
    std::vector<int> yb;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        for (std::size_t k = 0; k + 1 < starts.size(); ++k) {
            const std::size_t lo = starts[k];
            const std::size_t hi = starts[k + 1];
            xb.resize(static_cast<Eigen::Index>(hi - lo), X.cols());
            yb.resize(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                xb.row(static_cast<Eigen::Index>(i - lo)) = X.row(static_cast<Eigen::Index>(order[i]));
                yb[i - lo] = y[order[i]];
            }
            const double loss = mlp_batch_gradient(m, xb, yb, rng, grads);
            if (!std::isfinite(loss)) {
                throw NumericError("train_mlp: non-finite loss at epoch " + std::to_string(epoch + 1));
            }
            opt.step(refs);
        }
        if (history) {
            const Vector logits = mlp_logits(m, X);
            history->train_loss.push_back(mean_bce(logits, y));
            history->train_accuracy.push_back(accuracy_of(logits, y));
            if (validation && !validation->y.empty()) {
                history->validation_accuracy.push_back(
                    accuracy_of(mlp_logits(m, validation->X), validation->y));
            }
        }
    }
    return m;
}

MLPModel train_mlp(std::span<const Vector> title_vecs, std::span<const Vector> desc_vecs,
                   std::span<const MetaVector> meta_vecs, std::span<const int> y,
                   const MLPConfig& cfg, const ValidationSet* validation, TrainingHistory* history) {
    const std::size_t n = y.size();
    if (title_vecs.size() != n || desc_vecs.size() != n || meta_vecs.size() != n) {
        throw DataError("train_mlp: title/description/metadata/label counts differ");
    }
    if (n == 0) throw DataError("train_mlp: no samples");
    Matrix X(static_cast<Eigen::Index>(n), title_vecs[0].size() * 2 + kMetaDim);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector row = fuse(title_vecs[i], desc_vecs[i], meta_vecs[i]);
        if (row.size() != X.cols()) throw DataError("train_mlp: inconsistent embedding widths");
        X.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return train_mlp(X, y, cfg, validation, history);
}

Prediction predict_mlp(const MLPModel& m, const Vector& fused) {
    Matrix one = fused.transpose();
    const double z = mlp_logits(m, one)[0];
    return {sigmoid(z), z >= 0.0 ? 1 : 0};
}

Prediction predict_mlp(const MLPModel& m, const Vector& title_vec, const Vector& desc_vec,
                       const MetaVector& meta) {
    return predict_mlp(m, fuse(title_vec, desc_vec, meta));
}

}  // namespace cbd
