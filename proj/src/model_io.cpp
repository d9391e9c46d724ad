#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cbd/error.hpp"
#include "cbd/pipeline.hpp"

namespace cbd {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

enum SectionId : std::uint32_t {
    kSectionMeta = 1,
    kSectionVocab = 2,
    kSectionWord2Vec = 3,
    kSectionEncoder = 4,
    kSectionScaler = 5,
    kSectionClassifier = 6,
};

constexpr char kMagic[4] = {'C', 'B', 'D', '1'};

class Writer {
public:
    template <typename T>
    void uint(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<char>(static_cast<std::uint64_t>(v) >> (8 * i) & 0xff));
        }
    }
    void u8(std::uint8_t v) { uint(v); }
    void u16(std::uint16_t v) { uint(v); }
    void u32(std::uint32_t v) { uint(v); }
    void u64(std::uint64_t v) { uint(v); }
    void i32(std::int32_t v) { uint(static_cast<std::uint32_t>(v)); }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        buf_ += s;
    }
    template <typename M>
    void matrix(const M& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
        }
    }
    void raw(std::string_view s) { buf_ += s; }
    [[nodiscard]] const std::string& bytes() const noexcept { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

    template <typename T>
    T uint() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    std::uint8_t u8() { return uint<std::uint8_t>(); }
    std::uint16_t u16() { return uint<std::uint16_t>(); }
    std::uint32_t u32() { return uint<std::uint32_t>(); }
    std::uint64_t u64() { return uint<std::uint64_t>(); }
    std::int32_t i32() { return static_cast<std::int32_t>(uint<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
    std::string str() {
        const auto n = u64();
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::string_view take(std::uint64_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t count(std::size_t element_bytes) {
        const auto n = u64();
        if (element_bytes > 0 && n > remaining() / element_bytes) truncated();
        return n;
    }
    Matrix matrix() {
        const auto rows = u64();
        const auto cols = u64();
        if (cols != 0 && rows > remaining() / 8 / cols) truncated();
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
        }
        return m;
    }
    RowVector row_vector() {
        Matrix m = matrix();
        if (m.rows() != 1) throw FormatError(what_ + ": expected a row vector");
        return m.row(0);
    }
    [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }
    void expect_end() const {
        if (remaining() != 0) throw FormatError(what_ + ": " + std::to_string(remaining()) + " trailing bytes");
    }
    [[noreturn]] void truncated() const { throw FormatError(what_ + ": truncated"); }

private:
    void need(std::uint64_t n) const {
        if (n > remaining()) truncated();
    }

    std::string_view data_;
    std::size_t pos_ = 0;
    std::string what_;
};

// --- sections

void write_features(Writer& w, const FeatureSet& f) {
    for (bool b : {f.title, f.description, f.likes, f.dislikes, f.views, f.comments, f.subscribers, f.ratio}) {
        w.u8(b ? 1 : 0);
    }
}

FeatureSet read_features(Reader& r) {
    FeatureSet f;
    for (bool* b : {&f.title, &f.description, &f.likes, &f.dislikes, &f.views, &f.comments, &f.subscribers,
                    &f.ratio}) {
        const auto v = r.u8();
        if (v > 1) throw FormatError("model file: bad feature flag");
        *b = v == 1;
    }
    return f;
}

std::string vocab_section(const Vocab& v) {
    Writer w;
    w.u64(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        w.str(v.token(static_cast<TokenId>(i)));
        w.u64(v.count(static_cast<TokenId>(i)));
    }
    return w.bytes();
}

Vocab read_vocab(Reader& r) {
    const auto n = r.count(16);
    std::ostringstream text;
    for (std::size_t i = 0; i < n; ++i) {
        const auto tok = r.str();
        const auto count = r.u64();
        if (tok.find_first_of("\t\n") != std::string::npos) throw FormatError("model file: bad vocabulary token");
        text << tok;
        if (i >= static_cast<std::size_t>(Vocab::kFirstToken)) text << '\t' << count;
        text << '\n';
    }
    std::istringstream is(text.str());
    return Vocab::read(is);
}

std::string encoder_section(const EncoderParams& p) {
    Writer w;
    w.u64(p.heads);
    w.u64(p.layers.size());
    const auto groups = p.groups();
    w.u64(groups.size());
    for (const auto& [name, m] : groups) {
        w.str(name);
        w.matrix(*m);
    }
    return w.bytes();
}

EncoderParams read_encoder(Reader& r) {
    EncoderParams p;
    p.heads = r.u64();
    const auto layers = r.count(1);
    p.layers.resize(layers);
    const auto n = r.u64();
    auto groups = p.groups();
    if (n != groups.size()) throw FormatError("model file: encoder tensor count mismatch");
    for (auto& [name, m] : groups) {
        if (r.str() != name) throw FormatError("model file: encoder tensor '" + name + "' out of order");
        *m = r.matrix();
    }
    if (p.heads == 0 || p.dim() % p.heads != 0) throw FormatError("model file: bad encoder head count");
    return p;
}

enum LayerTag : std::uint8_t { kDense = 1, kBatchNorm = 2, kDropout = 3, kActivation = 4 };

void write_classifier(Writer& w, const Classifier& c) {
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticModel>) {
                w.matrix(m.w);
                w.f64(m.b);
            } else if constexpr (std::is_same_v<T, Forest>) {
                w.u64(m.n_features);
                w.u64(m.trees.size());
                for (const auto& t : m.trees) {
                    w.u64(t.nodes.size());
                    for (const auto& n : t.nodes) {
                        w.i32(n.feature);
                        w.f64(n.threshold);
                        w.i32(n.left);
                        w.i32(n.right);
                        w.u32(n.counts[0]);
                        w.u32(n.counts[1]);
                    }
                }
            } else {
                w.u64(m.input_dim);
                w.u64(m.layers.size());
                for (const auto& layer : m.layers) {
                    std::visit(
                        [&](const auto& l) {
                            using L = std::decay_t<decltype(l)>;
                            if constexpr (std::is_same_v<L, DenseLayer>) {
                                w.u8(kDense);
                                w.matrix(l.weight);
                                w.matrix(l.bias);
                            } else if constexpr (std::is_same_v<L, BatchNormLayer>) {
                                w.u8(kBatchNorm);
                                w.matrix(l.gamma);
                                w.matrix(l.beta);
                                w.matrix(l.running_mean);
                                w.matrix(l.running_var);
                                w.f64(l.momentum);
                            } else if constexpr (std::is_same_v<L, DropoutLayer>) {
                                w.u8(kDropout);
                                w.f64(l.rate);
                            } else {
                                w.u8(kActivation);
                                w.u8(static_cast<std::uint8_t>(l.kind));
                                w.matrix(l.slope);
                            }
                        },
                        layer);
                }
            }
        },
        c);
}

Classifier read_classifier(Reader& r, ModelKind kind) {
    switch (kind) {
        case ModelKind::LogReg: {
            LogisticModel m;
            Matrix w = r.matrix();
            if (w.cols() != 1) throw FormatError("model file: logistic weights must be a column");
            m.w = w.col(0);
            m.b = r.f64();
            return m;
        }
        case ModelKind::Forest: {
            Forest f;
            f.n_features = r.u64();
            f.trees.resize(r.count(8));
            for (auto& t : f.trees) {
                t.nodes.resize(r.count(28));
                for (auto& n : t.nodes) {
                    n.feature = r.i32();
                    n.threshold = r.f64();
                    n.left = r.i32();
                    n.right = r.i32();
                    n.counts[0] = r.u32();
                    n.counts[1] = r.u32();
                }
                const auto size = static_cast<std::int32_t>(t.nodes.size());
                for (const auto& n : t.nodes) {
                    if (!n.is_leaf() && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size ||
                                         static_cast<std::size_t>(n.feature) >= f.n_features)) {
                        throw FormatError("model file: corrupt tree node");
                    }
                }
                if (t.nodes.empty()) throw FormatError("model file: empty tree");
            }
            return f;
        }
        case ModelKind::Mlp: {
            MLPModel m;
            m.input_dim = r.u64();
            m.layers.resize(r.count(1));
            for (auto& layer : m.layers) {
                switch (r.u8()) {
                    case kDense: {
                        DenseLayer l;
                        l.weight = r.matrix();
                        l.bias = r.matrix();
                        layer = std::move(l);
                        break;
                    }
                    case kBatchNorm: {
                        BatchNormLayer l;
                        l.gamma = r.matrix();
                        l.beta = r.matrix();
                        l.running_mean = r.row_vector();
                        l.running_var = r.row_vector();
                        l.momentum = r.f64();
                        layer = std::move(l);
                        break;
                    }
                    case kDropout: layer = DropoutLayer{r.f64()}; break;
                    case kActivation: {
                        ActivationLayer l;
                        const auto k = r.u8();
                        if (k > static_cast<std::uint8_t>(Activation::Prelu)) {
                            throw FormatError("model file: unknown activation");
                        }
                        l.kind = static_cast<Activation>(k);
                        l.slope = r.matrix();
                        layer = std::move(l);
                        break;
                    }
                    default: throw FormatError("model file: unknown layer type");
                }
            }
            return m;
        }
    }
    throw FormatError("model file: unknown model kind");
}

}  // namespace

std::string serialize_model(const ModelBundle& m) {
    if (!m.vocab) throw UsageError("save_model: model has no vocabulary");
    std::vector<std::pair<std::uint32_t, std::string>> sections;
    {
        Writer w;
        w.u16(static_cast<std::uint16_t>(m.embed));
        write_features(w, m.features);
        sections.emplace_back(kSectionMeta, w.bytes());
    }
    sections.emplace_back(kSectionVocab, vocab_section(*m.vocab));
    if (m.embed == EmbedKind::Word2Vec) {
        Writer w;
        w.matrix(m.word2vec.input);
        w.matrix(m.word2vec.output);
        sections.emplace_back(kSectionWord2Vec, w.bytes());
    } else {
        sections.emplace_back(kSectionEncoder, encoder_section(m.encoder));
    }
    {
        Writer w;
        w.matrix(m.scaler.mean);
        w.matrix(m.scaler.stddev);
        sections.emplace_back(kSectionScaler, w.bytes());
    }
    {
        Writer w;
        write_classifier(w, m.classifier);
        sections.emplace_back(kSectionClassifier, w.bytes());
    }

    Writer out;
    out.raw(std::string_view(kMagic, 4));
    out.u16(kModelFormatVersion);
    out.u16(static_cast<std::uint16_t>(m.kind));
    out.u32(static_cast<std::uint32_t>(sections.size()));
    for (const auto& [id, payload] : sections) {
        out.u32(id);
        out.u64(payload.size());
        out.raw(payload);
    }
    return out.bytes();
}

ModelBundle deserialize_model(std::string_view bytes) {
    Reader r(bytes, "model file");
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        std::string got;
        for (char c : bytes.substr(0, 4)) got += (c >= 0x20 && c < 0x7f) ? c : '?';
        throw FormatError("model file: bad magic '" + got + "' (expected 'CBD1')");
    }
    r.take(4);
    const auto version = r.u16();
    if (version != kModelFormatVersion) {
        throw FormatError("model file: unsupported format version " + std::to_string(version) +
                          " (reader supports " + std::to_string(kModelFormatVersion) + ")");
    }
    ModelBundle m;
    const auto kind = r.u16();
    if (kind < 1 || kind > 3) throw FormatError("model file: unknown model kind " + std::to_string(kind));
    m.kind = static_cast<ModelKind>(kind);
    const auto n_sections = r.u32();

    bool seen[7] = {};
    for (std::uint32_t s = 0; s < n_sections; ++s) {
        const auto id = r.u32();
        const auto len = r.u64();
        Reader sec(r.take(len), "model file section " + std::to_string(id));
        if (id >= 1 && id <= 6) {
            if (seen[id]) throw FormatError("model file: duplicate section " + std::to_string(id));
            seen[id] = true;
        }
        switch (id) {
            case kSectionMeta: {
                const auto e = sec.u16();
                if (e < 1 || e > 2) throw FormatError("model file: unknown embedding kind");
                m.embed = static_cast<EmbedKind>(e);
                m.features = read_features(sec);
                break;
            }
            case kSectionVocab: m.vocab = std::make_shared<const Vocab>(read_vocab(sec)); break;
            case kSectionWord2Vec:
                m.word2vec.input = sec.matrix();
                m.word2vec.output = sec.matrix();
                break;
            case kSectionEncoder: m.encoder = read_encoder(sec); break;
            case kSectionScaler: {
                const Matrix mean = sec.matrix();
                const Matrix sd = sec.matrix();
                if (mean.rows() != kMetaDim || mean.cols() != 1 || sd.rows() != kMetaDim || sd.cols() != 1) {
                    throw FormatError("model file: bad scaler shape");
                }
                m.scaler.mean = mean;
                m.scaler.stddev = sd;
                break;
            }
            case kSectionClassifier: m.classifier = read_classifier(sec, m.kind); break;
            default: continue;  // unknown sections are skipped
        }
        sec.expect_end();
    }
    r.expect_end();
    for (int id : {1, 2, 5, 6}) {
        if (!seen[id]) throw FormatError("model file: missing section " + std::to_string(id));
    }
    if (m.embed == EmbedKind::Word2Vec) {
        if (!seen[kSectionWord2Vec]) throw FormatError("model file: missing word2vec section");
        if (static_cast<std::size_t>(m.word2vec.input.rows()) != m.vocab->size()) {
            throw FormatError("model file: embedding rows do not match vocabulary");
        }
        m.word2vec.vocab = m.vocab;
    } else {
        if (!seen[kSectionEncoder]) throw FormatError("model file: missing encoder section");
        if (m.encoder.vocab_size() != m.vocab->size()) {
            throw FormatError("model file: encoder vocabulary size mismatch");
        }
    }
    return m;
}

void save_model(const ModelBundle& m, const std::filesystem::path& path) {
    const auto bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model file '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("error writing model file '" + path.string() + "'");
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_model(ss.str());
}

}  // namespace cbd
