#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cbd/classifier.hpp"
#include "cbd/features.hpp"
#include "cbd/linalg.hpp"
#include "cbd/optim.hpp"
#include "cbd/random.hpp"

namespace cbd {

enum class Mode { Train, Infer };

enum class Activation : std::uint8_t { Relu, Sigmoid, Tanh, Prelu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

// ---------------------------------------------------------------------------
// Layer kernels. Batches are samples × features (one sample per row).

struct BatchNormCache {
    Matrix xhat;
    RowVector inv_std;
};

/// Train mode normalises by the batch mean and (population) variance and
/// folds them into the running statistics: running = momentum·running +
/// (1 − momentum)·batch. Infer mode uses the running statistics only.
Matrix batch_norm_forward(const Matrix& batch, const RowVector& gamma, const RowVector& beta,
                          Mode mode, double momentum, RowVector& running_mean,
                          RowVector& running_var, BatchNormCache* cache = nullptr);

inline constexpr double kBatchNormEps = 1e-5;

/// Inverted dropout: in train mode each unit is zeroed with probability
/// `rate` and survivors are scaled by 1/(1 − rate). Identity at inference.
Vector dropout_forward(const Vector& v, double rate, Mode mode, Rng& rng);

// ---------------------------------------------------------------------------
// Layer stack

struct DenseLayer {
    Matrix weight;  // in × out
    Matrix bias;    // 1 × out
};

struct BatchNormLayer {
    Matrix gamma;  // 1 × n
    Matrix beta;   // 1 × n
    RowVector running_mean;
    RowVector running_var;
    double momentum = 0.9;
};

struct DropoutLayer {
    double rate = 0.5;
};

struct ActivationLayer {
    Activation kind = Activation::Relu;
    Matrix slope;  // 1 × n, PReLU only
};

using Layer = std::variant<DenseLayer, BatchNormLayer, DropoutLayer, ActivationLayer>;

/// Hidden stack followed by a single-unit dense output; prob = σ(output).
struct MLPModel {
    std::size_t input_dim = 0;
    std::vector<Layer> layers;

    /// Trainable tensors in stack order.
    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
};

struct MLPConfig {
    std::vector<std::size_t> hidden;
    Activation activation = Activation::Relu;
    double dropout_rate = 0.0;
    bool batch_norm = false;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::size_t batch_size = 10;
    std::size_t epochs = 40;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    double prelu_init = 0.25;

    void validate() const;
};

/// Dense → [batch-norm] → activation → [dropout] per hidden size, then the
/// output unit. Hidden weights are Xavier-uniform; the output layer starts
/// at zero.
MLPModel build_mlp(std::size_t input_dim, const MLPConfig& cfg);

/// Output logits (one per row) in inference mode.
Vector mlp_logits(const MLPModel& m, const Matrix& X);

/// Mean binary cross-entropy of one batch in train mode (updating batch-norm
/// running statistics and drawing dropout masks from `rng`), with gradients
/// written to `grads` (one per parameter, same order).
double mlp_batch_gradient(MLPModel& m, const Matrix& X, std::span<const int> y, Rng& rng,
                          std::vector<Matrix>& grads);

struct ValidationSet {
    Matrix X;
    std::vector<int> y;
};

/// Minibatch training on fused rows (samples × features).
MLPModel train_mlp(const Matrix& X, std::span<const int> y, const MLPConfig& cfg,
                   const ValidationSet* validation = nullptr, TrainingHistory* history = nullptr);

/// Fuses title ‖ description ‖ meta per sample, then trains.
MLPModel train_mlp(std::span<const Vector> title_vecs, std::span<const Vector> desc_vecs,
                   std::span<const MetaVector> meta_vecs, std::span<const int> y,
                   const MLPConfig& cfg, const ValidationSet* validation = nullptr,
                   TrainingHistory* history = nullptr);

Prediction predict_mlp(const MLPModel& m, const Vector& fused);
Prediction predict_mlp(const MLPModel& m, const Vector& title_vec, const Vector& desc_vec,
                       const MetaVector& meta);

}  // namespace cbd
