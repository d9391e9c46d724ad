#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cbd/linalg.hpp"
#include "cbd/random.hpp"
#include "cbd/text.hpp"

namespace cbd {

struct EncoderConfig {
    std::size_t dim = 64;
    std::size_t heads = 4;
    std::size_t layers = 2;
    std::size_t ffn_dim = 256;
    std::size_t max_len = 180;
    double mask_prob = 0.15;
    std::uint64_t seed = 1;
    double learning_rate = 1e-3;
    std::size_t epochs = 5;

    void validate() const;
};

/// One post-norm transformer block. Projections act on row vectors
/// (H · W), so every weight is input_dim × output_dim.
struct EncoderLayer {
    Matrix wq, wk, wv, wo;
    Matrix ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Matrix ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
};

struct EncoderParams {
    std::size_t heads = 1;
    Matrix token_embedding;     // |V| × dim
    Matrix position_embedding;  // max_len × dim
    std::vector<EncoderLayer> layers;
    Matrix mlm_weight;  // dim × |V|
    Matrix mlm_bias;    // 1 × |V|

    [[nodiscard]] std::size_t dim() const noexcept {
        return static_cast<std::size_t>(token_embedding.cols());
    }
    [[nodiscard]] std::size_t max_len() const noexcept {
        return static_cast<std::size_t>(position_embedding.rows());
    }
    [[nodiscard]] std::size_t vocab_size() const noexcept {
        return static_cast<std::size_t>(token_embedding.rows());
    }

    /// Every parameter tensor with a stable name, in a fixed order.
    std::vector<std::pair<std::string, Matrix*>> groups();
    std::vector<std::pair<std::string, const Matrix*>> groups() const;

    /// Same shapes, all zeros.
    [[nodiscard]] EncoderParams zeros_like() const;
};

EncoderParams init_encoder(std::size_t vocab_size, const EncoderConfig& cfg);

/// Final-layer hidden states, one row per input position (length × dim).
Matrix encoder_forward(const EncodedText& x, const EncoderParams& p);

/// Forward pass that also returns every head's attention matrix,
/// indexed [layer][head], each length × length.
struct EncoderTrace {
    Matrix output;
    std::vector<std::vector<Matrix>> attention;
};
EncoderTrace encoder_forward_traced(const EncodedText& x, const EncoderParams& p);

/// Mean of the final hidden states over positions with mask 1.
Vector embed_text_contextual(const EncodedText& x, const EncoderParams& p);

/// A masked position and the id originally there.
struct MlmTarget {
    std::size_t position;
    TokenId token;
};

/// Mean cross-entropy of the MLM head over `targets`; zero when empty.
double mlm_loss(const EncoderParams& p, const EncodedText& x, const std::vector<MlmTarget>& targets);

/// As mlm_loss, also accumulating ∂loss/∂θ into `grad` (shaped like p, zeroed
/// by the caller).
double mlm_loss_and_gradient(const EncoderParams& p, const EncodedText& x,
                             const std::vector<MlmTarget>& targets, EncoderParams& grad);

/// Independently replaces each real token by MASK with probability
/// `mask_prob`; returns the replaced positions with their original ids.
std::vector<MlmTarget> apply_random_mask(EncodedText& x, double mask_prob, Rng& rng);

struct PretrainTrace {
    std::vector<double> epoch_loss;
    std::size_t skipped_sequences = 0;
};

/// Masked-token pretraining with Adam, one update per sequence that has at
/// least one masked position.
EncoderParams pretrain_masked(const std::vector<TokenList>& corpus, const Vocab& v,
                              const EncoderConfig& cfg, PretrainTrace* trace = nullptr);

/// Fraction of masked positions whose argmax prediction equals the original.
double masked_token_accuracy(const std::vector<TokenList>& corpus, const Vocab& v,
                             const EncoderParams& p, double mask_prob, std::uint64_t seed);

}  // namespace cbd
