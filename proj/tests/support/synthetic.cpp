#include "synthetic.hpp"

#include <cmath>
#include <string>

#include "cbd/random.hpp"

namespace cbd::testing {

namespace {

double normal(Rng& rng) {
    // Box-Muller on our own uniform source keeps the draws portable.
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t positive_count(double log_value) {
    return static_cast<std::uint64_t>(std::max(0.0, std::exp(log_value)));
}

const char* const kNeutral[] = {"video", "new", "today", "my", "the", "with", "and", "best", "first",
                                "day", "home", "world", "time", "life", "music", "live", "full", "part"};
const char* const kBaitWords[] = {"shocking", "unbelievable", "insane", "secret", "exposed", "gone", "wrong"};
const char* const kPlainWords[] = {"tutorial", "review", "lecture", "guide", "explained", "recipe", "howto"};

template <std::size_t N>
const char* pick(const char* const (&words)[N], Rng& rng) {
    return words[rng.below(N)];
}

}  // namespace

Dataset make_clickbait_dataset(std::uint64_t seed, const ClickbaitGenOptions& opt) {
    Rng rng(seed);
    Dataset d;
    d.source_path = "synthetic";
    for (std::size_t i = 0; i < opt.n; ++i) {
        const bool bait = rng.bernoulli(0.5);
        VideoRecord r;
        r.video_id = "s" + std::to_string(i);
        r.label = bait ? Label::Clickbait : Label::NonClickbait;

        const std::size_t len = 4 + rng.below(5);
        std::string title;
        for (std::size_t k = 0; k < len; ++k) {
            if (!title.empty()) title += ' ';
            title += pick(kNeutral, rng);
        }
        // class words come in groups so they share contexts with each other
        if (rng.bernoulli(opt.title_signal)) {
            const std::size_t k = 2 + rng.below(2);
            for (std::size_t j = 0; j < k; ++j) title += std::string(" ") + (bait ? pick(kBaitWords, rng) : pick(kPlainWords, rng));
        }
        r.title = title;
        std::string desc;
        for (std::size_t k = 0; k < 8; ++k) desc += std::string(k ? " " : "") + pick(kNeutral, rng);
        r.description = desc;

        const double s = opt.meta_signal * (bait ? 1.0 : -1.0);
        const double log_subs = 9.0 + 1.5 * normal(rng);
        const double log_views = log_subs + 1.0 + 0.8 * s + 0.8 * normal(rng);
        const double like_rate = -3.8 - 0.5 * s + 0.4 * normal(rng);
        const double dislike_share = -2.5 + 1.0 * s + 0.6 * normal(rng);
        const double log_likes = log_views + like_rate;
        r.subscriber_count = positive_count(log_subs);
        r.view_count = positive_count(log_views);
        r.like_count = positive_count(log_likes);
        r.dislike_count = positive_count(log_likes + dislike_share);
        if (rng.bernoulli(0.8 - 0.1 * s)) {  // bait disables comments more often
            r.comment_count = positive_count(log_views - 5.0 + 0.5 * normal(rng));
        }
        d.records.push_back(std::move(r));
    }
    return d;
}

MatrixData make_linear_separable(std::size_t n, std::size_t dim, double margin, std::uint64_t seed) {
    Rng rng(seed);
    Vector w(static_cast<Eigen::Index>(dim));
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = rng.uniform(-1, 1);
    w.normalize();
    MatrixData out;
    out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    std::size_t i = 0;
    while (i < n) {
        Vector x(static_cast<Eigen::Index>(dim));
        for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = rng.uniform(-1, 1);
        const double s = w.dot(x);
        if (std::abs(s) < margin) continue;
        out.X.row(static_cast<Eigen::Index>(i)) = x.transpose();
        out.y.push_back(s > 0 ? 1 : 0);
        ++i;
    }
    return out;
}

MatrixData make_xor_separable(std::size_t n, std::size_t dim, double gap, std::uint64_t seed) {
    Rng rng(seed);
    MatrixData out;
    out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    std::size_t i = 0;
    while (i < n) {
        Vector x(static_cast<Eigen::Index>(dim));
        for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = rng.uniform(-1, 1);
        if (std::abs(x[0]) < gap || std::abs(x[1]) < gap) continue;
        out.X.row(static_cast<Eigen::Index>(i)) = x.transpose();
        out.y.push_back((x[0] > 0) != (x[1] > 0) ? 1 : 0);
        ++i;
    }
    return out;
}

std::vector<TokenList> make_topic_corpus(std::size_t groups, std::size_t words_per_group,
                                         std::size_t sentences, std::size_t length, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TokenList> corpus;
    for (std::size_t s = 0; s < sentences; ++s) {
        const std::size_t g = s % groups;
        TokenList sent;
        for (std::size_t k = 0; k < length; ++k) {
            sent.push_back("g" + std::to_string(g) + "w" + std::to_string(rng.below(words_per_group)));
        }
        corpus.push_back(std::move(sent));
    }
    return corpus;
}

std::vector<TokenList> make_template_corpus(std::size_t sentences, std::uint64_t seed) {
    static const std::vector<std::vector<std::string>> nouns = {
        {"cat", "dog", "horse", "cow"}, {"fish", "grass", "hay", "meat"}};
    Rng rng(seed);
    std::vector<TokenList> corpus;
    for (std::size_t s = 0; s < sentences; ++s) {
        const auto a = rng.below(4);
        // Food follows from the animal, so a masked food or animal is predictable.
        const auto& animal = nouns[0][a];
        const auto& food = nouns[1][a];
        if (rng.bernoulli(0.5)) {
            corpus.push_back({"the", animal, "eats", food, "every", "morning"});
        } else {
            corpus.push_back({"every", "evening", "a", animal, "wants", food});
        }
    }
    return corpus;
}

}  // namespace cbd::testing
