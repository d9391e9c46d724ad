#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "cbd/linalg.hpp"
#include "cbd/random.hpp"
#include "cbd/text.hpp"

namespace cbd {

template <typename Scalar>
using RowMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix = RowMatrixX<double>;

struct W2VConfig {
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double learning_rate = 0.025;
    /// Learning rate decays linearly to this value over all training pairs.
    double min_learning_rate = 1e-4;
    std::uint64_t seed = 1;
    double unigram_power = 0.75;

    void validate() const;
};

/// Word-vector table; row i belongs to vocabulary id i.
struct EmbeddingMatrix {
    RowMatrix input;
    RowMatrix output;
    std::shared_ptr<const Vocab> vocab;

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(input.cols()); }
};

/// Draws token ids with probability proportional to count^power.
class UnigramSampler {
public:
    UnigramSampler(std::span<const std::uint64_t> counts, double power);

    TokenId sample(Rng& rng) const;
    [[nodiscard]] double probability(TokenId id) const;
    [[nodiscard]] std::size_t size() const noexcept { return cumulative_.size(); }

private:
    std::vector<double> cumulative_;
};

// Negative-sampling loss for one (center, context) pair:
//   L = -log σ(u_ctx·v) - Σ_k log σ(-u_k·v)
// where v is the center's input vector and u are output vectors. Negatives
// are the rows of `negatives`.
template <typename Scalar>
Scalar skipgram_pair_loss(const VectorX<Scalar>& center, const VectorX<Scalar>& context,
                          const MatrixX<Scalar>& negatives) {
    Scalar loss = softplus<Scalar>(-context.dot(center));
    for (Eigen::Index k = 0; k < negatives.rows(); ++k) {
        loss += softplus<Scalar>(negatives.row(k).dot(center));
    }
    return loss;
}

template <typename Scalar>
struct SkipGramPairGradient {
    VectorX<Scalar> center;
    VectorX<Scalar> context;
    MatrixX<Scalar> negatives;
};

template <typename Scalar>
SkipGramPairGradient<Scalar> skipgram_pair_gradient(const VectorX<Scalar>& center,
                                                    const VectorX<Scalar>& context,
                                                    const MatrixX<Scalar>& negatives) {
    SkipGramPairGradient<Scalar> g;
    const Scalar pos = sigmoid<Scalar>(context.dot(center)) - Scalar(1);
    g.center = pos * context;
    g.context = pos * center;
    g.negatives.resize(negatives.rows(), negatives.cols());
    for (Eigen::Index k = 0; k < negatives.rows(); ++k) {
        const Scalar s = sigmoid<Scalar>(negatives.row(k).dot(center));
        g.center += s * negatives.row(k).transpose();
        g.negatives.row(k) = s * center.transpose();
    }
    return g;
}

/// Called after each epoch with the mean pair loss observed during it.
struct SkipGramTrace {
    std::vector<double> epoch_loss;
};

/// Skip-gram with negative sampling, sequential SGD over every center/context
/// pair inside the window. Out-of-vocabulary tokens train the UNK row.
EmbeddingMatrix train_skipgram(const std::vector<TokenList>& corpus,
                               std::shared_ptr<const Vocab> vocab, const W2VConfig& cfg,
                               SkipGramTrace* trace = nullptr);

/// Mean pair loss over the corpus with negatives drawn from a fixed seed;
/// comparable across checkpoints of the same model.
double skipgram_corpus_loss(const EmbeddingMatrix& m, const std::vector<TokenList>& corpus,
                            const W2VConfig& cfg, std::uint64_t eval_seed);

Vector embed_word(const EmbeddingMatrix& m, std::string_view token);
/// Mean of token vectors, PAD excluded; zero vector for empty input.
Vector embed_text(const EmbeddingMatrix& m, const TokenList& tokens);

double cosine_similarity(const Vector& a, const Vector& b);

/// Text export: header `dim |V|`, then `token v1 ... v_dim` per row. Only the
/// input vectors are written.
void write_embedding_text(const EmbeddingMatrix& m, std::ostream& os);
EmbeddingMatrix read_embedding_text(std::istream& is);

}  // namespace cbd
