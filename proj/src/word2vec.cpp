#include "cbd/word2vec.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cbd/error.hpp"

namespace cbd {

void W2VConfig::validate() const {
    if (dim < 1) throw UsageError("word2vec: dim must be >= 1");
    if (window < 1) throw UsageError("word2vec: window must be >= 1");
    if (negatives < 1) throw UsageError("word2vec: negatives must be >= 1");
    if (epochs < 1) throw UsageError("word2vec: epochs must be >= 1");
    if (!(learning_rate > 0)) throw UsageError("word2vec: learning rate must be positive");
}

UnigramSampler::UnigramSampler(std::span<const std::uint64_t> counts, double power) {
    cumulative_.reserve(counts.size());
    double total = 0;
    for (auto c : counts) {
        total += c > 0 ? std::pow(static_cast<double>(c), power) : 0.0;
        cumulative_.push_back(total);
    }
    if (!(total > 0)) throw DataError("unigram sampler: all counts are zero");
    for (auto& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;
}

TokenId UnigramSampler::sample(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<TokenId>(it - cumulative_.begin());
}

double UnigramSampler::probability(TokenId id) const {
    const auto i = static_cast<std::size_t>(id);
    return cumulative_[i] - (i == 0 ? 0.0 : cumulative_[i - 1]);
}

namespace {

std::vector<std::vector<TokenId>> map_corpus(const std::vector<TokenList>& corpus, const Vocab& v) {
    std::vector<std::vector<TokenId>> out;
    out.reserve(corpus.size());
    for (const auto& sentence : corpus) {
        std::vector<TokenId> ids;
        ids.reserve(sentence.size());
        for (const auto& t : sentence) ids.push_back(v.id(t));
        out.push_back(std::move(ids));
    }
    return out;
}

std::size_t count_pairs(const std::vector<std::vector<TokenId>>& ids, std::size_t window) {
    std::size_t pairs = 0;
    for (const auto& s : ids) {
        const std::size_t n = s.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i >= window ? i - window : 0;
            const std::size_t hi = std::min(n - 1, i + window);
            pairs += hi - lo;
        }
    }
    return pairs;
}

// One SGD step on the pair loss; returns the loss before the update.
// The gradient for the center vector uses the pre-update output vectors.
double sgd_pair_step(RowMatrix& in, RowMatrix& out, TokenId center, TokenId context,
                     std::span<const TokenId> negatives, double lr, Vector& center_grad) {
    auto v = in.row(center);
    center_grad.setZero();
    double loss = 0;

    const double score = out.row(context).dot(v);
    loss += softplus(-score);
    const double gpos = sigmoid(score) - 1.0;
    center_grad += gpos * out.row(context).transpose();
    out.row(context) -= lr * gpos * v;

    for (TokenId neg : negatives) {
        const double s = out.row(neg).dot(v);
        loss += softplus(s);
        const double g = sigmoid(s);
        center_grad += g * out.row(neg).transpose();
        out.row(neg) -= lr * g * v;
    }
    in.row(center) -= lr * center_grad.transpose();
    return loss;
}

}  // namespace

EmbeddingMatrix train_skipgram(const std::vector<TokenList>& corpus,
                               std::shared_ptr<const Vocab> vocab, const W2VConfig& cfg,
                               SkipGramTrace* trace) {
    cfg.validate();
    if (!vocab) throw UsageError("train_skipgram: no vocabulary");
    const auto ids = map_corpus(corpus, *vocab);
    const std::size_t total_pairs = count_pairs(ids, cfg.window) * cfg.epochs;
    if (total_pairs == 0) throw DataError("train_skipgram: corpus has no trainable pair");

    const UnigramSampler sampler(vocab->counts(), cfg.unigram_power);
    const auto V = static_cast<Eigen::Index>(vocab->size());
    const auto D = static_cast<Eigen::Index>(cfg.dim);

    EmbeddingMatrix m;
    m.vocab = vocab;
    m.input.resize(V, D);
    m.output = RowMatrix::Zero(V, D);
    Rng rng(cfg.seed);
    const double half = 0.5 / static_cast<double>(cfg.dim);
    for (Eigen::Index r = 0; r < V; ++r) {
        for (Eigen::Index c = 0; c < D; ++c) m.input(r, c) = rng.uniform(-half, half);
    }

    std::vector<TokenId> negatives(cfg.negatives);
    Vector center_grad(D);
    std::size_t processed = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0;
        std::size_t epoch_pairs = 0;
        for (const auto& s : ids) {
            const std::size_t n = s.size();
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
                const std::size_t hi = std::min(n - 1, i + cfg.window);
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    const double progress =
                        static_cast<double>(processed) / static_cast<double>(total_pairs);
                    const double lr = std::max(
                        cfg.min_learning_rate,
                        cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) * progress);
                    for (auto& neg : negatives) neg = sampler.sample(rng);
                    epoch_loss += sgd_pair_step(m.input, m.output, s[i], s[j], negatives, lr,
                                                center_grad);
                    ++epoch_pairs;
                    ++processed;
                }
            }
        }
        if (trace) trace->epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_pairs));
    }
    return m;
}

double skipgram_corpus_loss(const EmbeddingMatrix& m, const std::vector<TokenList>& corpus,
                            const W2VConfig& cfg, std::uint64_t eval_seed) {
    const auto ids = map_corpus(corpus, *m.vocab);
    const UnigramSampler sampler(m.vocab->counts(), cfg.unigram_power);
    Rng rng(eval_seed);
    double total = 0;
    std::size_t pairs = 0;
    for (const auto& s : ids) {
        const std::size_t n = s.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
            const std::size_t hi = std::min(n - 1, i + cfg.window);
            const auto v = m.input.row(s[i]);
            for (std::size_t j = lo; j <= hi; ++j) {
                if (j == i) continue;
                total += softplus(-m.output.row(s[j]).dot(v));
                for (std::size_t k = 0; k < cfg.negatives; ++k) {
                    total += softplus(m.output.row(sampler.sample(rng)).dot(v));
                }
                ++pairs;
            }
        }
    }
    if (pairs == 0) throw DataError("skipgram_corpus_loss: corpus has no pair");
    return total / static_cast<double>(pairs);
}

Vector embed_word(const EmbeddingMatrix& m, std::string_view token) {
    return m.input.row(m.vocab->id(token)).transpose();
}

Vector embed_text(const EmbeddingMatrix& m, const TokenList& tokens) {
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(m.dim()));
    std::size_t n = 0;
    for (const auto& t : tokens) {
        const TokenId id = m.vocab->id(t);
        if (id == Vocab::kPad) continue;
        sum += m.input.row(id).transpose();
        ++n;
    }
    if (n > 0) sum /= static_cast<double>(n);
    return sum;
}

double cosine_similarity(const Vector& a, const Vector& b) {
    const double den = a.norm() * b.norm();
    return den > 0 ? a.dot(b) / den : 0.0;
}

void write_embedding_text(const EmbeddingMatrix& m, std::ostream& os) {
    os << m.dim() << ' ' << m.vocab->size() << '\n';
    char buf[32];
    for (Eigen::Index r = 0; r < m.input.rows(); ++r) {
        os << m.vocab->token(static_cast<TokenId>(r));
        for (Eigen::Index c = 0; c < m.input.cols(); ++c) {
            auto res = std::to_chars(buf, buf + sizeof buf, m.input(r, c));
            os << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        os << '\n';
    }
}

EmbeddingMatrix read_embedding_text(std::istream& is) {
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::string line;
    if (!std::getline(is, line)) throw FormatError("embedding text: missing header");
    {
        std::istringstream hs(line);
        if (!(hs >> dim >> rows) || dim == 0 || rows < Vocab::kFirstToken) {
            throw FormatError("embedding text: bad header '" + line + "'");
        }
    }
    std::ostringstream vocab_text;
    RowMatrix input(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!std::getline(is, line)) throw FormatError("embedding text: truncated at row " + std::to_string(r));
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        vocab_text << token << '\n';
        for (std::size_t c = 0; c < dim; ++c) {
            std::string num;
            double v = 0;
            if (!(ls >> num) ||
                std::from_chars(num.data(), num.data() + num.size(), v).ec != std::errc{}) {
                throw FormatError("embedding text: bad value in row " + std::to_string(r));
            }
            input(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    std::istringstream vs(vocab_text.str());
    EmbeddingMatrix m;
    m.vocab = std::make_shared<const Vocab>(Vocab::read(vs));
    m.input = std::move(input);
    m.output = RowMatrix::Zero(m.input.rows(), m.input.cols());
    return m;
}

}  // namespace cbd
