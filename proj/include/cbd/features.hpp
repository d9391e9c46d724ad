#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbd/corpus.hpp"
#include "cbd/linalg.hpp"

namespace cbd {

inline constexpr Eigen::Index kMetaDim = 7;

/// Metadata features in fixed order. Counts are log(1 + count).
enum MetaIndex : Eigen::Index {
    kLogLikes = 0,
    kLogDislikes = 1,
    kLogViews = 2,
    kLogComments = 3,
    kLogSubscribers = 4,
    kLikeRatio = 5,
    kCommentsDisabled = 6,
};

using MetaVector = Eigen::Matrix<double, kMetaDim, 1>;

/// Raw (unscaled) metadata features. Ratio is like/(like+dislike), 0.5 when
/// both are zero; a missing comment count sets the disabled flag and counts 0.
MetaVector metadata_vector(const VideoRecord& r);
MetaVector metadata_vector(const VideoMetadata& r);

/// Per-feature z-scoring learned on training data. The ratio and flag
/// features pass through unchanged (mean 0, std 1).
struct Scaler {
    MetaVector mean = MetaVector::Zero();
    MetaVector stddev = MetaVector::Ones();

    [[nodiscard]] MetaVector transform(const MetaVector& raw) const;

    friend bool operator==(const Scaler& a, const Scaler& b) {
        return a.mean == b.mean && a.stddev == b.stddev;
    }
};

Scaler fit_scaler(std::span<const MetaVector> train);

/// title ‖ description ‖ meta. The two text vectors must have equal length.
Vector fuse(const Vector& title_vec, const Vector& desc_vec, const MetaVector& meta);

/// Which inputs a model sees. Deselected inputs are zeroed in the fused
/// vector, so every model keeps the 2·dim + 7 layout.
struct FeatureSet {
    bool title = true;
    bool description = true;
    bool likes = true;
    bool dislikes = true;
    bool views = true;
    bool comments = true;
    bool subscribers = true;
    bool ratio = true;

    /// Comma list over {title, description, likes, dislikes, views, comments,
    /// subscribers, ratio}; "all" and "metadata" expand to groups.
    static FeatureSet parse(std::string_view spec);
    static FeatureSet all() { return {}; }
    static FeatureSet title_only();

    [[nodiscard]] std::string to_string() const;

    /// Zeroes the deselected slots of a fused vector of text dimension `dim`.
    void apply(Vector& fused, Eigen::Index text_dim) const;
    /// Zeroes deselected metadata entries.
    void apply_meta(MetaVector& meta) const;

    friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

}  // namespace cbd
