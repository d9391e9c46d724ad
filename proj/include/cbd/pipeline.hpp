#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cbd/attention.hpp"
#include "cbd/classifier.hpp"
#include "cbd/corpus.hpp"
#include "cbd/features.hpp"
#include "cbd/forest.hpp"
#include "cbd/logistic.hpp"
#include "cbd/mlp.hpp"
#include "cbd/text.hpp"
#include "cbd/word2vec.hpp"

namespace cbd {

enum class ModelKind : std::uint16_t { LogReg = 1, Forest = 2, Mlp = 3 };
enum class EmbedKind : std::uint16_t { Word2Vec = 1, Attention = 2 };

ModelKind parse_model_kind(std::string_view s);
EmbedKind parse_embed_kind(std::string_view s);
std::string to_string(ModelKind k);
std::string to_string(EmbedKind k);

/// Everything `train` needs. Component seeds are derived from `seed` at
/// training time, so changing `seed` alone reseeds the whole pipeline.
struct PipelineConfig {
    ModelKind model = ModelKind::LogReg;
    EmbedKind embed = EmbedKind::Word2Vec;
    FeatureSet features;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;

    std::size_t vocab_min_count = 1;
    std::size_t vocab_max_size = 20000;

    W2VConfig word2vec;
    EncoderConfig encoder;
    LogRegConfig logreg;
    RFConfig forest;
    MLPConfig mlp;
};

/// exp1 … exp6.
PipelineConfig preset(std::string_view name);
const std::vector<std::string>& preset_names();

/// Sets one `key = value` option, e.g. `mlp.epochs = 40`, `rf.n_estimators = 50`,
/// `features = title,likes`. Unknown keys or bad values raise UsageError.
void apply_option(PipelineConfig& cfg, std::string_view key, std::string_view value);
/// Flat `key = value` lines; `#` starts a comment.
void apply_config_text(PipelineConfig& cfg, std::string_view text);
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);
/// Known option keys, sorted.
std::vector<std::string> option_keys();

using Classifier = std::variant<LogisticModel, Forest, MLPModel>;

/// A trained, self-contained model: text embedding, metadata scaler and
/// classifier. Immutable after training; safe to share between threads.
struct ModelBundle {
    ModelKind kind = ModelKind::LogReg;
    EmbedKind embed = EmbedKind::Word2Vec;
    FeatureSet features;
    std::shared_ptr<const Vocab> vocab;
    EmbeddingMatrix word2vec;  // Word2Vec only
    EncoderParams encoder;     // Attention only
    Scaler scaler;
    Classifier classifier;

    [[nodiscard]] std::size_t text_dim() const;
    [[nodiscard]] std::size_t fused_dim() const { return 2 * text_dim() + kMetaDim; }
};

/// All text of a dataset, tokenized: each title and each description.
std::vector<TokenList> text_corpus(const Dataset& d);

ModelBundle train_pipeline(const Dataset& train, const PipelineConfig& cfg,
                           const Dataset* validation = nullptr, TrainingHistory* history = nullptr);

/// Fused, selection-masked feature rows (samples × fused_dim).
Matrix featurize(const ModelBundle& m, const Dataset& d);
std::vector<int> labels(const Dataset& d);

std::vector<Prediction> predict(const ModelBundle& m, const Dataset& d);
Prediction predict_row(const ModelBundle& m, const Vector& fused);

/// Fraction of records whose predicted label matches.
double accuracy(const ModelBundle& m, const Dataset& d);

// ---------------------------------------------------------------------------
// Container format: "CBD1", u16 version, u16 model kind, u32 section count,
// then sections of (u32 id, u64 length, payload). Little-endian throughout,
// reals as IEEE-754 binary64.

inline constexpr std::uint16_t kModelFormatVersion = 1;

std::string serialize_model(const ModelBundle& m);
ModelBundle deserialize_model(std::string_view bytes);
void save_model(const ModelBundle& m, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace cbd
