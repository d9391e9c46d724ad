#include "cbd/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbd/error.hpp"
#include "cbd/optim.hpp"

namespace cbd {

namespace {

constexpr double kLayerNormEps = 1e-5;

template <typename Params, typename Out>
void collect_groups(Params& p, Out& out) {
    out.emplace_back("token_embedding", &p.token_embedding);
    out.emplace_back("position_embedding", &p.position_embedding);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& L = p.layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        out.emplace_back(pre + "wq", &L.wq);
        out.emplace_back(pre + "wk", &L.wk);
        out.emplace_back(pre + "wv", &L.wv);
        out.emplace_back(pre + "wo", &L.wo);
        out.emplace_back(pre + "ffn_w1", &L.ffn_w1);
        out.emplace_back(pre + "ffn_b1", &L.ffn_b1);
        out.emplace_back(pre + "ffn_w2", &L.ffn_w2);
        out.emplace_back(pre + "ffn_b2", &L.ffn_b2);
        out.emplace_back(pre + "ln1_gamma", &L.ln1_gamma);
        out.emplace_back(pre + "ln1_beta", &L.ln1_beta);
        out.emplace_back(pre + "ln2_gamma", &L.ln2_gamma);
        out.emplace_back(pre + "ln2_beta", &L.ln2_beta);
    }
    out.emplace_back("mlm_weight", &p.mlm_weight);
    out.emplace_back("mlm_bias", &p.mlm_bias);
}

void fill_uniform(Matrix& m, Rng& rng, double bound) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-bound, bound);
    }
}

Matrix xavier(Eigen::Index in, Eigen::Index out, Rng& rng) {
    Matrix m(in, out);
    fill_uniform(m, rng, std::sqrt(6.0 / static_cast<double>(in + out)));
    return m;
}

struct LayerNormCache {
    Matrix xhat;
    Vector inv_std;
};

Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, LayerNormCache* cache) {
    const auto d = static_cast<double>(x.cols());
    const Vector mean = x.rowwise().sum() / d;
    Matrix centered = x.colwise() - mean;
    const Vector var = centered.array().square().rowwise().sum() / d;
    const Vector inv = (var.array() + kLayerNormEps).rsqrt();
    Matrix xhat = centered.array().colwise() * inv.array();
    Matrix y = (xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->inv_std = inv;
    }
    return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& gamma, const LayerNormCache& c,
                           Matrix& dgamma, Matrix& dbeta) {
    dgamma += (dy.array() * c.xhat.array()).colwise().sum().matrix();
    dbeta += dy.colwise().sum();
    const Matrix dxhat = dy.array().rowwise() * gamma.row(0).array();
    const auto d = static_cast<double>(dy.cols());
    const Vector mean_dxhat = dxhat.rowwise().sum() / d;
    const Vector mean_dxhat_xhat = (dxhat.array() * c.xhat.array()).rowwise().sum() / d;
    Matrix dx = dxhat.colwise() - mean_dxhat;
    dx -= (c.xhat.array().colwise() * mean_dxhat_xhat.array()).matrix();
    return dx.array().colwise() * c.inv_std.array();
}

struct LayerCache {
    Matrix input, q, k, v, concat, h1, pre_act, act;
    std::vector<Matrix> attention;
    LayerNormCache ln1, ln2;
};

Matrix layer_forward(const Matrix& h, const std::vector<std::uint8_t>& mask, const EncoderLayer& L,
                     std::size_t heads, LayerCache& cache) {
    const auto len = h.rows();
    const auto dim = h.cols();
    const auto dk = dim / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    cache.input = h;
    cache.q = h * L.wq;
    cache.k = h * L.wk;
    cache.v = h * L.wv;
    cache.concat.resize(len, dim);
    cache.attention.clear();
    for (std::size_t hd = 0; hd < heads; ++hd) {
        const auto off = static_cast<Eigen::Index>(hd) * dk;
        const Matrix scores = cache.q.middleCols(off, dk) * cache.k.middleCols(off, dk).transpose() * scale;
        Matrix a = masked_softmax_rows(scores, mask);
        cache.concat.middleCols(off, dk) = a * cache.v.middleCols(off, dk);
        cache.attention.push_back(std::move(a));
    }
    const Matrix x1 = h + cache.concat * L.wo;
    cache.h1 = layer_norm(x1, L.ln1_gamma, L.ln1_beta, &cache.ln1);
    cache.pre_act = (cache.h1 * L.ffn_w1).rowwise() + L.ffn_b1.row(0);
    cache.act = cache.pre_act.cwiseMax(0.0);
    const Matrix x2 = cache.h1 + ((cache.act * L.ffn_w2).rowwise() + L.ffn_b2.row(0));
    return layer_norm(x2, L.ln2_gamma, L.ln2_beta, &cache.ln2);
}

Matrix layer_backward(const Matrix& dout, const EncoderLayer& L, std::size_t heads,
                      const LayerCache& c, EncoderLayer& g) {
    const auto dim = dout.cols();
    const auto dk = dim / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    const Matrix dx2 = layer_norm_backward(dout, L.ln2_gamma, c.ln2, g.ln2_gamma, g.ln2_beta);
    Matrix dh1 = dx2;
    g.ffn_w2 += c.act.transpose() * dx2;
    g.ffn_b2 += dx2.colwise().sum();
    const Matrix dact = dx2 * L.ffn_w2.transpose();
    const Matrix dpre = dact.cwiseProduct((c.pre_act.array() > 0.0).cast<double>().matrix());
    g.ffn_w1 += c.h1.transpose() * dpre;
    g.ffn_b1 += dpre.colwise().sum();
    dh1 += dpre * L.ffn_w1.transpose();

    const Matrix dx1 = layer_norm_backward(dh1, L.ln1_gamma, c.ln1, g.ln1_gamma, g.ln1_beta);
    Matrix dh = dx1;
    g.wo += c.concat.transpose() * dx1;
    const Matrix dconcat = dx1 * L.wo.transpose();

    Matrix dq(dout.rows(), dim), dk_all(dout.rows(), dim), dv(dout.rows(), dim);
    for (std::size_t hd = 0; hd < heads; ++hd) {
        const auto off = static_cast<Eigen::Index>(hd) * dk;
        const Matrix& a = c.attention[hd];
        const auto dch = dconcat.middleCols(off, dk);
        const Matrix da = dch * c.v.middleCols(off, dk).transpose();
        dv.middleCols(off, dk) = a.transpose() * dch;
        const Vector row_dot = (da.array() * a.array()).rowwise().sum();
        const Matrix ds = (a.array() * (da.colwise() - row_dot).array()).matrix() * scale;
        dq.middleCols(off, dk) = ds * c.k.middleCols(off, dk);
        dk_all.middleCols(off, dk) = ds.transpose() * c.q.middleCols(off, dk);
    }
    g.wq += c.input.transpose() * dq;
    g.wk += c.input.transpose() * dk_all;
    g.wv += c.input.transpose() * dv;
    dh += dq * L.wq.transpose() + dk_all * L.wk.transpose() + dv * L.wv.transpose();
    return dh;
}

void check_input(const EncodedText& x, const EncoderParams& p) {
    if (x.ids.size() != x.attention_mask.size()) {
        throw DataError("encoder: ids and attention mask lengths differ");
    }
    if (x.ids.empty() || x.ids.size() > p.max_len()) {
        throw DataError("encoder: sequence length " + std::to_string(x.ids.size()) +
                        " outside [1, " + std::to_string(p.max_len()) + "]");
    }
    if (std::none_of(x.attention_mask.begin(), x.attention_mask.end(), [](auto m) { return m != 0; })) {
        throw DataError("encoder: attention mask is all zero; no position to attend to");
    }
    for (auto id : x.ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= p.vocab_size()) {
            throw DataError("encoder: token id out of range: " + std::to_string(id));
        }
    }
}

Matrix embed_input(const EncodedText& x, const EncoderParams& p) {
    const auto len = static_cast<Eigen::Index>(x.ids.size());
    Matrix h(len, static_cast<Eigen::Index>(p.dim()));
    for (Eigen::Index i = 0; i < len; ++i) {
        h.row(i) = p.token_embedding.row(x.ids[static_cast<std::size_t>(i)]) + p.position_embedding.row(i);
    }
    return h;
}

Matrix forward_all(const EncodedText& x, const EncoderParams& p, std::vector<LayerCache>& caches) {
    check_input(x, p);
    Matrix h = embed_input(x, p);
    caches.resize(p.layers.size());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        h = layer_forward(h, x.attention_mask, p.layers[l], p.heads, caches[l]);
    }
    return h;
}

// The real prefix of a sequence. Outputs at real positions do not depend on
// padded ones, so training and pooling run on the prefix only.
EncodedText real_prefix(const EncodedText& x) {
    std::size_t n = 0;
    while (n < x.attention_mask.size() && x.attention_mask[n]) ++n;
    if (n == 0) return x;
    if (n == x.attention_mask.size() ||
        std::none_of(x.attention_mask.begin() + static_cast<std::ptrdiff_t>(n), x.attention_mask.end(),
                     [](auto m) { return m != 0; })) {
        EncodedText out;
        out.ids.assign(x.ids.begin(), x.ids.begin() + static_cast<std::ptrdiff_t>(n));
        out.attention_mask.assign(n, 1);
        return out;
    }
    return x;
}

double mlm_head(const Matrix& hidden, const EncoderParams& p, const std::vector<MlmTarget>& targets,
                Matrix* dhidden, EncoderParams* grad) {
    if (targets.empty()) return 0.0;
    const double inv_t = 1.0 / static_cast<double>(targets.size());
    double loss = 0.0;
    for (const auto& t : targets) {
        const auto pos = static_cast<Eigen::Index>(t.position);
        const RowVector logits = hidden.row(pos) * p.mlm_weight + p.mlm_bias.row(0);
        const double hi = logits.maxCoeff();
        const RowVector e = (logits.array() - hi).exp();
        const double z = e.sum();
        loss += (std::log(z) + hi - logits(t.token)) * inv_t;
        if (grad) {
            RowVector dlogits = e / z;
            dlogits(t.token) -= 1.0;
            dlogits *= inv_t;
            grad->mlm_weight += hidden.row(pos).transpose() * dlogits;
            grad->mlm_bias += dlogits;
            dhidden->row(pos) += dlogits * p.mlm_weight.transpose();
        }
    }
    return loss;
}

}  // namespace

void EncoderConfig::validate() const {
    if (dim == 0 || heads == 0 || dim % heads != 0) {
        throw UsageError("encoder: dim must be a positive multiple of heads");
    }
    if (layers == 0 || ffn_dim == 0) throw UsageError("encoder: layers and ffn_dim must be positive");
    if (max_len == 0) throw UsageError("encoder: max_len must be >= 1");
    if (!(mask_prob > 0.0 && mask_prob < 1.0)) throw UsageError("encoder: mask_prob must lie in (0, 1)");
    if (!(learning_rate > 0.0)) throw UsageError("encoder: learning rate must be positive");
}

std::vector<std::pair<std::string, Matrix*>> EncoderParams::groups() {
    std::vector<std::pair<std::string, Matrix*>> out;
    collect_groups(*this, out);
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> EncoderParams::groups() const {
    std::vector<std::pair<std::string, const Matrix*>> out;
    collect_groups(*this, out);
    return out;
}

EncoderParams EncoderParams::zeros_like() const {
    EncoderParams z = *this;
    for (auto& [name, m] : z.groups()) m->setZero();
    return z;
}

EncoderParams init_encoder(std::size_t vocab_size, const EncoderConfig& cfg) {
    cfg.validate();
    const auto V = static_cast<Eigen::Index>(vocab_size);
    const auto d = static_cast<Eigen::Index>(cfg.dim);
    const auto f = static_cast<Eigen::Index>(cfg.ffn_dim);
    Rng rng(cfg.seed);
    EncoderParams p;
    p.heads = cfg.heads;
    p.token_embedding.resize(V, d);
    fill_uniform(p.token_embedding, rng, 0.1);
    p.position_embedding.resize(static_cast<Eigen::Index>(cfg.max_len), d);
    fill_uniform(p.position_embedding, rng, 0.02);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        EncoderLayer L;
        L.wq = xavier(d, d, rng);
        L.wk = xavier(d, d, rng);
        L.wv = xavier(d, d, rng);
        L.wo = xavier(d, d, rng);
        L.ffn_w1 = xavier(d, f, rng);
        L.ffn_b1 = Matrix::Zero(1, f);
        L.ffn_w2 = xavier(f, d, rng);
        L.ffn_b2 = Matrix::Zero(1, d);
        L.ln1_gamma = Matrix::Ones(1, d);
        L.ln1_beta = Matrix::Zero(1, d);
        L.ln2_gamma = Matrix::Ones(1, d);
        L.ln2_beta = Matrix::Zero(1, d);
        p.layers.push_back(std::move(L));
    }
    p.mlm_weight = xavier(d, V, rng);
    p.mlm_bias = Matrix::Zero(1, V);
    return p;
}

Matrix encoder_forward(const EncodedText& x, const EncoderParams& p) {
    std::vector<LayerCache> caches;
    return forward_all(x, p, caches);
}

EncoderTrace encoder_forward_traced(const EncodedText& x, const EncoderParams& p) {
    std::vector<LayerCache> caches;
    EncoderTrace t;
    t.output = forward_all(x, p, caches);
    for (auto& c : caches) t.attention.push_back(std::move(c.attention));
    return t;
}

Vector embed_text_contextual(const EncodedText& x, const EncoderParams& p) {
    const EncodedText prefix = real_prefix(x);
    const Matrix h = encoder_forward(prefix, p);
    Vector sum = Vector::Zero(h.cols());
    double n = 0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        if (prefix.attention_mask[static_cast<std::size_t>(i)]) {
            sum += h.row(i).transpose();
            n += 1;
        }
    }
    return sum / n;
}

double mlm_loss(const EncoderParams& p, const EncodedText& x, const std::vector<MlmTarget>& targets) {
    if (targets.empty()) return 0.0;
    const Matrix h = encoder_forward(x, p);
    return mlm_head(h, p, targets, nullptr, nullptr);
}

double mlm_loss_and_gradient(const EncoderParams& p, const EncodedText& x,
                             const std::vector<MlmTarget>& targets, EncoderParams& grad) {
    if (targets.empty()) return 0.0;
    std::vector<LayerCache> caches;
    const Matrix h = forward_all(x, p, caches);
    Matrix dh = Matrix::Zero(h.rows(), h.cols());
    const double loss = mlm_head(h, p, targets, &dh, &grad);
    for (std::size_t l = p.layers.size(); l-- > 0;) {
        dh = layer_backward(dh, p.layers[l], p.heads, caches[l], grad.layers[l]);
    }
    for (Eigen::Index i = 0; i < dh.rows(); ++i) {
        grad.token_embedding.row(x.ids[static_cast<std::size_t>(i)]) += dh.row(i);
        grad.position_embedding.row(i) += dh.row(i);
    }
    return loss;
}

std::vector<MlmTarget> apply_random_mask(EncodedText& x, double mask_prob, Rng& rng) {
    std::vector<MlmTarget> targets;
    for (std::size_t i = 0; i < x.ids.size(); ++i) {
        if (!x.attention_mask[i]) continue;
        if (rng.bernoulli(mask_prob)) {
            targets.push_back({i, x.ids[i]});
            x.ids[i] = Vocab::kMask;
        }
    }
    return targets;
}

EncoderParams pretrain_masked(const std::vector<TokenList>& corpus, const Vocab& v,
                              const EncoderConfig& cfg, PretrainTrace* trace) {
    cfg.validate();
    if (corpus.empty()) throw DataError("pretrain_masked: empty corpus");
    if (v.size() < 4) throw DataError("pretrain_masked: vocabulary needs at least one real token");

    EncoderParams p = init_encoder(v.size(), cfg);
    EncoderParams grad = p.zeros_like();
    std::vector<ParamRef> refs;
    {
        auto pg = p.groups();
        auto gg = grad.groups();
        for (std::size_t i = 0; i < pg.size(); ++i) refs.push_back({pg[i].first, pg[i].second, gg[i].second});
    }
    Optimizer opt(OptimizerKind::Adam, cfg.learning_rate);
    Rng rng(mix_seed(cfg.seed, 0x4d4c4d));

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        double total = 0;
        std::size_t steps = 0;
        for (std::size_t idx : order) {
            EncodedText x = real_prefix(encode(corpus[idx], v, cfg.max_len));
            if (x.ids.empty()) continue;
            const auto targets = apply_random_mask(x, cfg.mask_prob, rng);
            if (targets.empty()) {
                if (trace) ++trace->skipped_sequences;
                continue;
            }
            for (auto& r : refs) r.grad->setZero();
            total += mlm_loss_and_gradient(p, x, targets, grad);
            opt.step(refs);
            ++steps;
        }
        if (trace) trace->epoch_loss.push_back(steps ? total / static_cast<double>(steps) : 0.0);
    }
    return p;
}

double masked_token_accuracy(const std::vector<TokenList>& corpus, const Vocab& v,
                             const EncoderParams& p, double mask_prob, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t hits = 0;
    std::size_t total = 0;
    for (const auto& sentence : corpus) {
        EncodedText x = real_prefix(encode(sentence, v, p.max_len()));
        if (x.ids.empty()) continue;
        const auto targets = apply_random_mask(x, mask_prob, rng);
        if (targets.empty()) continue;
        const Matrix h = encoder_forward(x, p);
        for (const auto& t : targets) {
            const RowVector logits = h.row(static_cast<Eigen::Index>(t.position)) * p.mlm_weight +
                                     p.mlm_bias.row(0);
            Eigen::Index best = 0;
            logits.maxCoeff(&best);
            hits += best == t.token;
            ++total;
        }
    }
    return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

}  // namespace cbd
