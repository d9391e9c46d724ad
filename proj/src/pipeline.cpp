#include "cbd/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cbd/error.hpp"
#include "cbd/random.hpp"

namespace cbd {

ModelKind parse_model_kind(std::string_view s) {
    if (s == "logreg") return ModelKind::LogReg;
    if (s == "rf") return ModelKind::Forest;
    if (s == "mlp") return ModelKind::Mlp;
    throw UsageError("unknown model '" + std::string(s) + "' (expected logreg, rf or mlp)");
}

EmbedKind parse_embed_kind(std::string_view s) {
    if (s == "word2vec") return EmbedKind::Word2Vec;
    if (s == "attention") return EmbedKind::Attention;
    throw UsageError("unknown embedding '" + std::string(s) + "' (expected word2vec or attention)");
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::LogReg: return "logreg";
        case ModelKind::Forest: return "rf";
        case ModelKind::Mlp: return "mlp";
    }
    return "?";
}

std::string to_string(EmbedKind k) {
    return k == EmbedKind::Word2Vec ? "word2vec" : "attention";
}

// ---------------------------------------------------------------------------
// presets

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"exp1", "exp2", "exp3", "exp4", "exp5", "exp6"};
    return names;
}

PipelineConfig preset(std::string_view name) {
    PipelineConfig c;
    c.mlp.batch_size = 10;
    c.mlp.optimizer = OptimizerKind::Adam;
    if (name == "exp1") {
        c.model = ModelKind::LogReg;
        c.features = FeatureSet::parse("title,description,comments,likes,dislikes,subscribers");
    } else if (name == "exp2") {
        c.model = ModelKind::Forest;
        c.forest.n_estimators = 100;
        c.features = FeatureSet::all();
    } else if (name == "exp3") {
        c.model = ModelKind::Mlp;
        c.mlp.hidden = {64};
        c.mlp.activation = Activation::Relu;
        c.mlp.epochs = 40;
    } else if (name == "exp4") {
        c.model = ModelKind::Mlp;
        c.mlp.hidden = {128, 64};
        c.mlp.activation = Activation::Prelu;
        c.mlp.batch_norm = true;
        c.mlp.dropout_rate = 0.5;
        c.mlp.epochs = 40;
    } else if (name == "exp5" || name == "exp6") {
        c.model = ModelKind::Mlp;
        c.embed = EmbedKind::Attention;
        c.encoder.max_len = 180;
        c.encoder.epochs = 5;
        c.encoder.layers = name == "exp5" ? 2 : 1;
        c.mlp.hidden = {64};
        c.mlp.activation = Activation::Relu;
        c.mlp.dropout_rate = name == "exp5" ? 0.5 : 0.0;
        c.mlp.epochs = 5;
    } else {
        throw UsageError("unknown preset '" + std::string(name) + "' (expected exp1..exp6)");
    }
    return c;
}

// ---------------------------------------------------------------------------
// config options

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
    throw UsageError("option '" + std::string(key) + "': bad value '" + std::string(value) +
                     "' (expected " + expected + ")");
}

std::size_t to_size(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

double to_real(std::string_view key, std::string_view v) {
    double out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
        bad_value(key, v, "a real number");
    }
    return out;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v, "true or false");
}

std::vector<std::size_t> to_sizes(std::string_view key, std::string_view v) {
    std::vector<std::size_t> out;
    std::string s = trim(v);
    if (s.empty() || s == "none") return out;
    std::size_t start = 0;
    while (true) {
        auto comma = s.find(',', start);
        auto part = trim(std::string_view(s).substr(start, comma == std::string::npos ? std::string::npos
                                                                                      : comma - start));
        const auto n = to_size(key, part);
        if (n == 0) bad_value(key, v, "positive layer sizes");
        out.push_back(n);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

using Setter = std::function<void(PipelineConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"model", [](auto& c, auto, auto v) { c.model = parse_model_kind(v); }},
        {"embed", [](auto& c, auto, auto v) { c.embed = parse_embed_kind(v); }},
        {"features", [](auto& c, auto, auto v) { c.features = FeatureSet::parse(v); }},
        {"seed", [](auto& c, auto k, auto v) { c.seed = to_u64(k, v); }},
        {"jobs", [](auto& c, auto k, auto v) { c.jobs = std::max<std::size_t>(1, to_size(k, v)); }},
        {"vocab.min_count", [](auto& c, auto k, auto v) { c.vocab_min_count = to_size(k, v); }},
        {"vocab.max_size", [](auto& c, auto k, auto v) { c.vocab_max_size = to_size(k, v); }},

        {"w2v.dim", [](auto& c, auto k, auto v) { c.word2vec.dim = to_size(k, v); }},
        {"w2v.window", [](auto& c, auto k, auto v) { c.word2vec.window = to_size(k, v); }},
        {"w2v.negatives", [](auto& c, auto k, auto v) { c.word2vec.negatives = to_size(k, v); }},
        {"w2v.epochs", [](auto& c, auto k, auto v) { c.word2vec.epochs = to_size(k, v); }},
        {"w2v.lr", [](auto& c, auto k, auto v) { c.word2vec.learning_rate = to_real(k, v); }},
        {"w2v.min_lr", [](auto& c, auto k, auto v) { c.word2vec.min_learning_rate = to_real(k, v); }},

        {"encoder.dim", [](auto& c, auto k, auto v) { c.encoder.dim = to_size(k, v); }},
        {"encoder.heads", [](auto& c, auto k, auto v) { c.encoder.heads = to_size(k, v); }},
        {"encoder.layers", [](auto& c, auto k, auto v) { c.encoder.layers = to_size(k, v); }},
        {"encoder.ffn_dim", [](auto& c, auto k, auto v) { c.encoder.ffn_dim = to_size(k, v); }},
        {"encoder.max_len", [](auto& c, auto k, auto v) { c.encoder.max_len = to_size(k, v); }},
        {"encoder.mask_prob", [](auto& c, auto k, auto v) { c.encoder.mask_prob = to_real(k, v); }},
        {"encoder.epochs", [](auto& c, auto k, auto v) { c.encoder.epochs = to_size(k, v); }},
        {"encoder.lr", [](auto& c, auto k, auto v) { c.encoder.learning_rate = to_real(k, v); }},

        {"logreg.lr", [](auto& c, auto k, auto v) { c.logreg.learning_rate = to_real(k, v); }},
        {"logreg.epochs", [](auto& c, auto k, auto v) { c.logreg.epochs = to_size(k, v); }},
        {"logreg.l2", [](auto& c, auto k, auto v) { c.logreg.l2 = to_real(k, v); }},

        {"rf.n_estimators", [](auto& c, auto k, auto v) { c.forest.n_estimators = to_size(k, v); }},
        {"rf.max_features",
         [](auto& c, auto, auto v) { c.forest.max_features = MaxFeatures::parse(std::string(v)); }},
        {"rf.min_samples_leaf", [](auto& c, auto k, auto v) { c.forest.min_samples_leaf = to_size(k, v); }},
        {"rf.max_depth",
         [](auto& c, auto k, auto v) {
             if (v == "none") {
                 c.forest.max_depth.reset();
             } else {
                 c.forest.max_depth = to_size(k, v);
             }
         }},

        {"mlp.hidden", [](auto& c, auto k, auto v) { c.mlp.hidden = to_sizes(k, v); }},
        {"mlp.activation",
         [](auto& c, auto, auto v) { c.mlp.activation = parse_activation(std::string(v)); }},
        {"mlp.dropout", [](auto& c, auto k, auto v) { c.mlp.dropout_rate = to_real(k, v); }},
        {"mlp.batch_norm", [](auto& c, auto k, auto v) { c.mlp.batch_norm = to_bool(k, v); }},
        {"mlp.optimizer",
         [](auto& c, auto k, auto v) {
             if (v == "adam") {
                 c.mlp.optimizer = OptimizerKind::Adam;
             } else if (v == "sgd") {
                 c.mlp.optimizer = OptimizerKind::Sgd;
             } else {
                 bad_value(k, v, "adam or sgd");
             }
         }},
        {"mlp.batch_size", [](auto& c, auto k, auto v) { c.mlp.batch_size = to_size(k, v); }},
        {"mlp.epochs", [](auto& c, auto k, auto v) { c.mlp.epochs = to_size(k, v); }},
        {"mlp.lr", [](auto& c, auto k, auto v) { c.mlp.learning_rate = to_real(k, v); }},
        {"mlp.prelu_init", [](auto& c, auto k, auto v) { c.mlp.prelu_init = to_real(k, v); }},
    };
    return table;
}

}  // namespace

void apply_option(PipelineConfig& cfg, std::string_view key, std::string_view value) {
    const auto& t = setters();
    auto it = t.find(key);
    if (it == t.end()) throw UsageError("unknown option '" + std::string(key) + "'");
    it->second(cfg, key, trim(value));
}

void apply_config_text(PipelineConfig& cfg, std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string l = trim(line);
        if (l.empty()) continue;
        const auto eq = l.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(n) + ": expected 'key = value'");
        }
        apply_option(cfg, trim(std::string_view(l).substr(0, eq)), std::string_view(l).substr(eq + 1));
    }
}

void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str());
}

std::vector<std::string> option_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : setters()) keys.push_back(k);
    return keys;
}

// ---------------------------------------------------------------------------
// training and inference

std::size_t ModelBundle::text_dim() const {
    return embed == EmbedKind::Word2Vec ? word2vec.dim() : encoder.dim();
}

std::vector<TokenList> text_corpus(const Dataset& d) {
    std::vector<TokenList> out;
    out.reserve(2 * d.size());
    for (const auto& r : d.records) {
        out.push_back(tokenize(r.title));
        out.push_back(tokenize(r.description));
    }
    return out;
}

std::vector<int> labels(const Dataset& d) {
    std::vector<int> y;
    y.reserve(d.size());
    for (const auto& r : d.records) y.push_back(to_int(r.label));
    return y;
}

namespace {

Vector embed(const ModelBundle& m, const std::string& text) {
    const auto tokens = tokenize(text);
    if (m.embed == EmbedKind::Word2Vec) return embed_text(m.word2vec, tokens);
    const auto x = encode(tokens, *m.vocab, m.encoder.max_len());
    if (x.real_tokens() == 0) return Vector::Zero(static_cast<Eigen::Index>(m.encoder.dim()));
    return embed_text_contextual(x, m.encoder);
}

}  // namespace

Matrix featurize(const ModelBundle& m, const Dataset& d) {
    const auto dim = static_cast<Eigen::Index>(m.text_dim());
    Matrix X(static_cast<Eigen::Index>(d.size()), 2 * dim + kMetaDim);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& r = d.records[i];
        const Vector title = m.features.title ? embed(m, r.title) : Vector::Zero(dim);
        const Vector desc = m.features.description ? embed(m, r.description) : Vector::Zero(dim);
        Vector fused = fuse(title, desc, m.scaler.transform(metadata_vector(r)));
        m.features.apply(fused, dim);
        X.row(static_cast<Eigen::Index>(i)) = fused.transpose();
    }
    return X;
}

ModelBundle train_pipeline(const Dataset& train, const PipelineConfig& cfg, const Dataset* validation,
                           TrainingHistory* history) {
    if (train.empty()) throw DataError("train: empty training set");
    ModelBundle m;
    m.kind = cfg.model;
    m.embed = cfg.embed;
    m.features = cfg.features;

    const auto corpus = text_corpus(train);
    m.vocab = std::make_shared<const Vocab>(build_vocab(corpus, cfg.vocab_min_count, cfg.vocab_max_size));
    if (cfg.embed == EmbedKind::Word2Vec) {
        W2VConfig w = cfg.word2vec;
        w.seed = mix_seed(cfg.seed, 100);
        m.word2vec = train_skipgram(corpus, m.vocab, w);
    } else {
        EncoderConfig e = cfg.encoder;
        e.seed = mix_seed(cfg.seed, 101);
        m.encoder = pretrain_masked(corpus, *m.vocab, e);
    }

    std::vector<MetaVector> meta;
    meta.reserve(train.size());
    for (const auto& r : train.records) meta.push_back(metadata_vector(r));
    m.scaler = fit_scaler(meta);

    const Matrix X = featurize(m, train);
    const auto y = labels(train);
    switch (cfg.model) {
        case ModelKind::LogReg: {
            LogRegConfig c = cfg.logreg;
            c.seed = mix_seed(cfg.seed, 102);
            m.classifier = train_logreg(X, y, c, history);
            break;
        }
        case ModelKind::Forest: {
            RFConfig c = cfg.forest;
            c.seed = mix_seed(cfg.seed, 103);
            c.n_jobs = cfg.jobs;
            m.classifier = train_random_forest(X, y, c);
            break;
        }
        case ModelKind::Mlp: {
            MLPConfig c = cfg.mlp;
            c.seed = mix_seed(cfg.seed, 104);
            std::optional<ValidationSet> vs;
            if (validation && !validation->empty()) vs = ValidationSet{featurize(m, *validation), labels(*validation)};
            m.classifier = train_mlp(X, y, c, vs ? &*vs : nullptr, history);
            break;
        }
    }
    return m;
}

Prediction predict_row(const ModelBundle& m, const Vector& fused) {
    return std::visit(
        [&](const auto& c) -> Prediction {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, LogisticModel>) {
                return predict_logreg(c, fused);
            } else if constexpr (std::is_same_v<T, Forest>) {
                return predict_forest(c, fused);
            } else {
                return predict_mlp(c, fused);
            }
        },
        m.classifier);
}

std::vector<Prediction> predict(const ModelBundle& m, const Dataset& d) {
    const Matrix X = featurize(m, d);
    std::vector<Prediction> out;
    out.reserve(d.size());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out.push_back(predict_row(m, X.row(i).transpose()));
    return out;
}

double accuracy(const ModelBundle& m, const Dataset& d) {
    if (d.empty()) throw DataError("accuracy: empty dataset");
    const auto p = predict(m, d);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < d.size(); ++i) hit += p[i].label == to_int(d.records[i].label);
    return static_cast<double>(hit) / static_cast<double>(d.size());
}

}  // namespace cbd
