#include "cbd/features.hpp"

#include <cmath>

#include "cbd/error.hpp"

namespace cbd {

namespace {

double log_count(std::uint64_t c) { return std::log1p(static_cast<double>(c)); }

bool is_scaled(Eigen::Index i) { return i != kLikeRatio && i != kCommentsDisabled; }

}  // namespace

MetaVector metadata_vector(const VideoMetadata& r) {
    MetaVector m;
    m[kLogLikes] = log_count(r.like_count);
    m[kLogDislikes] = log_count(r.dislike_count);
    m[kLogViews] = log_count(r.view_count);
    m[kLogComments] = log_count(r.comment_count.value_or(0));
    m[kLogSubscribers] = log_count(r.subscriber_count);
    const double votes = static_cast<double>(r.like_count) + static_cast<double>(r.dislike_count);
    m[kLikeRatio] = votes > 0 ? static_cast<double>(r.like_count) / votes : 0.5;
    m[kCommentsDisabled] = r.comment_count ? 0.0 : 1.0;
    return m;
}

MetaVector metadata_vector(const VideoRecord& r) {
    return metadata_vector(static_cast<const VideoMetadata&>(r));
}

MetaVector Scaler::transform(const MetaVector& raw) const {
    return (raw - mean).cwiseQuotient(stddev);
}

Scaler fit_scaler(std::span<const MetaVector> train) {
    if (train.empty()) throw DataError("fit_scaler: no training vectors");
    const auto n = static_cast<double>(train.size());
    Scaler s;
    for (Eigen::Index i = 0; i < kMetaDim; ++i) {
        if (!is_scaled(i)) continue;
        double sum = 0;
        for (const auto& v : train) sum += v[i];
        const double mean = sum / n;
        double ss = 0;
        for (const auto& v : train) ss += (v[i] - mean) * (v[i] - mean);
        const double sd = std::sqrt(ss / n);
        s.mean[i] = mean;
        s.stddev[i] = sd > 0 ? sd : 1.0;
    }
    return s;
}

Vector fuse(const Vector& title_vec, const Vector& desc_vec, const MetaVector& meta) {
    if (title_vec.size() != desc_vec.size()) {
        throw DataError("fuse: title vector has length " + std::to_string(title_vec.size()) +
                        ", description vector " + std::to_string(desc_vec.size()));
    }
    Vector out(title_vec.size() + desc_vec.size() + kMetaDim);
    out << title_vec, desc_vec, meta;
    return out;
}

FeatureSet FeatureSet::title_only() {
    FeatureSet f;
    f.description = f.likes = f.dislikes = f.views = f.comments = f.subscribers = f.ratio = false;
    return f;
}

FeatureSet FeatureSet::parse(std::string_view spec) {
    FeatureSet f = title_only();
    f.title = false;
    std::size_t pos = 0;
    bool any = false;
    while (pos <= spec.size()) {
        auto comma = spec.find(',', pos);
        if (comma == std::string_view::npos) comma = spec.size();
        std::string_view item = spec.substr(pos, comma - pos);
        pos = comma + 1;
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (item.empty()) continue;
        any = true;
        if (item == "all") {
            f = all();
        } else if (item == "metadata") {
            f.likes = f.dislikes = f.views = f.comments = f.subscribers = f.ratio = true;
        } else if (item == "title") {
            f.title = true;
        } else if (item == "description") {
            f.description = true;
        } else if (item == "likes") {
            f.likes = true;
        } else if (item == "dislikes") {
            f.dislikes = true;
        } else if (item == "views") {
            f.views = true;
        } else if (item == "comments") {
            f.comments = true;
        } else if (item == "subscribers") {
            f.subscribers = true;
        } else if (item == "ratio") {
            f.ratio = true;
        } else {
            throw UsageError("unknown feature '" + std::string(item) + "'");
        }
    }
    if (!any) throw UsageError("empty feature selection");
    return f;
}

std::string FeatureSet::to_string() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += ',';
        out += name;
    };
    add(title, "title");
    add(description, "description");
    add(likes, "likes");
    add(dislikes, "dislikes");
    add(views, "views");
    add(comments, "comments");
    add(subscribers, "subscribers");
    add(ratio, "ratio");
    return out;
}

void FeatureSet::apply_meta(MetaVector& meta) const {
    if (!likes) meta[kLogLikes] = 0;
    if (!dislikes) meta[kLogDislikes] = 0;
    if (!views) meta[kLogViews] = 0;
    if (!comments) {
        meta[kLogComments] = 0;
        meta[kCommentsDisabled] = 0;
    }
    if (!subscribers) meta[kLogSubscribers] = 0;
    if (!ratio) meta[kLikeRatio] = 0;
}

void FeatureSet::apply(Vector& fused, Eigen::Index text_dim) const {
    if (fused.size() != 2 * text_dim + kMetaDim) throw DataError("FeatureSet::apply: bad fused length");
    if (!title) fused.head(text_dim).setZero();
    if (!description) fused.segment(text_dim, text_dim).setZero();
    MetaVector meta = fused.tail<kMetaDim>();
    apply_meta(meta);
    fused.tail<kMetaDim>() = meta;
}

}  // namespace cbd
