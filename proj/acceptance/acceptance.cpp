// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cbd/attention.hpp"
#include "cbd/cli.hpp"
#include "cbd/corpus.hpp"
#include "cbd/eval.hpp"
#include "cbd/forest.hpp"
#include "cbd/logistic.hpp"
#include "cbd/mlp.hpp"
#include "cbd/pipeline.hpp"
#include "cbd/word2vec.hpp"
#include "support/synthetic.hpp"
#include "support/tree_oracle.hpp"

namespace fs = std::filesystem;
using namespace cbd;
using Clock = std::chrono::steady_clock;

namespace {

// ---- tolerances and thresholds
constexpr double kGradTol = 1e-4;
constexpr double kLogRegGradTol = 1e-6;
constexpr double kGradSuiteSeconds = 60;
constexpr double kReportTol = 1e-12;
constexpr double kReductionTol = 1e-9;
constexpr std::size_t kReductionPoints = 500;
constexpr double kAblationGap = 0.10;
constexpr int kAblationSeeds = 5;
constexpr double kAblationSeconds = 300;
constexpr double kSeparableAcc = 0.95;
constexpr std::size_t kSeparableSamples = 2000;
constexpr double kTripleFraction = 0.95;
constexpr double kMlmChanceFactor = 5.0;
constexpr double kMomentTol = 1e-9;
constexpr double kDropoutTol = 0.02;
constexpr std::size_t kDropoutSamples = 100000;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, const char* f = "%.3g") {
    char b[64];
    std::snprintf(b, sizeof b, f, x);
    return b;
}

// ---------------------------------------------------------------- 1. gradients

double mlp_grad_error(const MLPConfig& cfg, std::uint64_t seed) {
    auto m = build_mlp(6, cfg);
    Rng init(seed);
    for (Matrix* p : m.parameters()) {
        for (Eigen::Index i = 0; i < p->size(); ++i) p->data()[i] += init.uniform(-0.5, 0.5);
    }
    Matrix X(10, 6);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = init.uniform(-2, 2);
    std::vector<int> y(10);
    for (auto& v : y) v = static_cast<int>(init.below(2));
    std::vector<Matrix> grads, scratch;
    Rng rng(seed + 1);
    mlp_batch_gradient(m, X, y, rng, grads);
    double worst = 0;
    auto params = m.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Matrix num = numeric_gradient(*params[i], [&] {
            Rng same(seed + 1);
            return mlp_batch_gradient(m, X, y, same, scratch);
        });
        // biases ahead of batch norm have zero gradient
        if (num.norm() < 1e-8 && grads[i].norm() < 1e-8) continue;
        worst = std::max(worst, relative_error(grads[i], num));
    }
    return worst;
}

void gradients(Outcome& o) {
    const auto t0 = Clock::now();

    // logistic loss
    const auto d = testing::make_linear_separable(50, 6, 0.0, 1);
    LogisticModel lm{Vector(6), -0.2};
    Rng rng(2);
    for (int i = 0; i < 6; ++i) lm.w[i] = rng.uniform(-1.5, 1.5);
    double logreg_err = 0;
    for (double l2 : {0.0, 0.05}) {
        const auto g = logreg_gradient(lm, d.X, d.y, l2);
        logreg_err = std::max(logreg_err, relative_error(g.w, numeric_gradient(lm.w, [&] {
                                                             return logreg_objective(lm, d.X, d.y, l2);
                                                         })));
        Eigen::Matrix<double, 1, 1> b;
        b(0) = lm.b;
        const auto nb = numeric_gradient(b, [&] {
            LogisticModel c = lm;
            c.b = b(0);
            return logreg_objective(c, d.X, d.y, l2);
        });
        logreg_err = std::max(logreg_err, relative_error(Vector::Constant(1, g.b), nb));
    }
    o.check(logreg_err <= kLogRegGradTol, "logreg");

    // MLP layer types
    double mlp_err = 0;
    const std::vector<std::pair<const char*, MLPConfig>> mlps = [] {
        std::vector<std::pair<const char*, MLPConfig>> v;
        MLPConfig dense;
        dense.hidden = {5};
        dense.activation = Activation::Tanh;
        v.emplace_back("dense+tanh", dense);
        MLPConfig sig = dense;
        sig.activation = Activation::Sigmoid;
        v.emplace_back("dense+sigmoid", sig);
        MLPConfig relu = dense;
        relu.activation = Activation::Relu;
        relu.hidden = {7, 4};
        v.emplace_back("dense+relu", relu);
        MLPConfig bn = dense;
        bn.batch_norm = true;
        bn.activation = Activation::Prelu;
        v.emplace_back("batchnorm+prelu", bn);
        MLPConfig drop = bn;
        drop.dropout_rate = 0.4;
        drop.hidden = {6, 3};
        v.emplace_back("batchnorm+prelu+dropout", drop);
        return v;
    }();
    std::uint64_t s = 10;
    for (const auto& [name, cfg] : mlps) {
        const double e = mlp_grad_error(cfg, s++);
        o.check(e <= kGradTol, name);
        mlp_err = std::max(mlp_err, e);
    }

    // skip-gram pair loss
    double sg_err = 0;
    for (int t = 0; t < 10; ++t) {
        Vector v(8), u(8);
        Matrix neg(5, 8);
        for (int i = 0; i < 8; ++i) {
            v[i] = rng.uniform(-1, 1);
            u[i] = rng.uniform(-1, 1);
            for (int k = 0; k < 5; ++k) neg(k, i) = rng.uniform(-1, 1);
        }
        const auto g = skipgram_pair_gradient(v, u, neg);
        auto f = [&] { return skipgram_pair_loss(v, u, neg); };
        sg_err = std::max({sg_err, relative_error(g.center, numeric_gradient(v, f)),
                           relative_error(g.context, numeric_gradient(u, f)),
                           relative_error(g.negatives, numeric_gradient(neg, f))});
    }
    o.check(sg_err <= kGradTol, "skip-gram");

    // dim-8 attention encoder, every tensor group
    const auto vocab = build_vocab({{"a", "b", "c", "d", "e", "f"}}, 1, 100);
    EncoderConfig ec;
    ec.dim = 8;
    ec.heads = 2;
    ec.layers = 1;
    ec.ffn_dim = 16;
    ec.max_len = 8;
    ec.seed = 3;
    auto p = init_encoder(vocab.size(), ec);
    for (auto& [name, m] : p.groups()) {
        for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] += rng.uniform(-0.2, 0.2);
    }
    auto x = encode({"a", "b", "c", "d", "e"}, vocab, 8);
    const std::vector<MlmTarget> targets = {{0, x.ids[0]}, {2, x.ids[2]}, {3, x.ids[3]}};
    for (const auto& t : targets) x.ids[t.position] = Vocab::kMask;
    auto grad = p.zeros_like();
    mlm_loss_and_gradient(p, x, targets, grad);
    double att_err = 0;
    auto pg = p.groups();
    const auto gg = grad.groups();
    for (std::size_t i = 0; i < pg.size(); ++i) {
        const Matrix num = numeric_gradient(*pg[i].second, [&] { return mlm_loss(p, x, targets); });
        const double e = relative_error(*gg[i].second, num);
        if (e > kGradTol) o.check(false, "encoder " + pg[i].first);
        att_err = std::max(att_err, e);
    }

    const double secs = seconds_since(t0);
    o.check(secs < kGradSuiteSeconds, "runtime");
    o.detail << "max relative error: logreg " << fmt(logreg_err) << ", mlp " << fmt(mlp_err) << ", skip-gram " << fmt(sg_err)
             << ", encoder(" << pg.size() << " groups) " << fmt(att_err) << "; " << fmt(secs, "%.2f") << "s";
}

// ---------------------------------------------------------------- 2. metric oracles

double brute_auc(const std::vector<int>& y, const std::vector<double>& s) {
    long twice = 0, pairs = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[i] == 1 && y[j] == 0) {
                ++pairs;
                twice += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
            }
        }
    }
    return static_cast<double>(twice) / static_cast<double>(2 * pairs);
}

void metric_oracles(Outcome& o) {
    // every labelling and every score assignment over 3 levels, n <= 7;
    // random assignments over 5 levels for 8..12
    std::size_t instances = 0, mismatches = 0;
    const double levels[] = {0.1, 0.5, 0.9, 0.3, 0.7};
    for (std::size_t n = 2; n <= 7; ++n) {
        std::size_t score_codes = 1;
        for (std::size_t i = 0; i < n; ++i) score_codes *= 3;
        for (std::size_t lm = 1; lm + 1 < (std::size_t{1} << n); ++lm) {
            std::vector<int> y(n);
            for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>((lm >> i) & 1);
            for (std::size_t sc = 0; sc < score_codes; ++sc) {
                std::vector<double> s(n);
                std::size_t c = sc;
                for (std::size_t i = 0; i < n; ++i, c /= 3) s[i] = levels[c % 3];
                ++instances;
                mismatches += roc(y, s).auc != brute_auc(y, s);
            }
        }
    }
    Rng rng(5);
    for (std::size_t n = 8; n <= 12; ++n) {
        for (int t = 0; t < 20000; ++t) {
            std::vector<int> y(n);
            std::vector<double> s(n);
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = static_cast<int>(rng.below(2));
                s[i] = levels[rng.below(5)];
            }
            y[0] = 0;
            y[1] = 1;
            ++instances;
            mismatches += roc(y, s).auc != brute_auc(y, s);
        }
    }
    o.check(mismatches == 0, "auc");

    // report values against an independent recount
    double worst = 0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 1 + rng.below(300);
        std::vector<int> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(rng.below(2));
            p[i] = rng.bernoulli(0.8) ? y[i] : 1 - y[i];
        }
        const auto r = report(confusion(y, p));
        double c[2][2] = {{0, 0}, {0, 0}};  // [true][pred]
        for (std::size_t i = 0; i < n; ++i) c[y[i]][p[i]] += 1;
        auto metric = [&](int k, double& prec, double& rec, double& f) {
            const double tp = c[k][k], fp = c[1 - k][k], fn = c[k][1 - k];
            prec = tp + fp > 0 ? tp / (tp + fp) : 0;
            rec = tp + fn > 0 ? tp / (tp + fn) : 0;
            f = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
        };
        double p0, r0, f0, p1, r1, f1;
        metric(0, p0, r0, f0);
        metric(1, p1, r1, f1);
        const double s0 = c[0][0] + c[0][1], s1 = c[1][0] + c[1][1];
        const double acc = (c[0][0] + c[1][1]) / static_cast<double>(n);
        const double w[] = {
            r.non_clickbait.precision - p0, r.non_clickbait.recall - r0, r.non_clickbait.f_score - f0,
            r.clickbait.precision - p1,     r.clickbait.recall - r1,     r.clickbait.f_score - f1,
            r.accuracy - acc,
            r.macro_avg.precision - (p0 + p1) / 2, r.macro_avg.recall - (r0 + r1) / 2,
            r.macro_avg.f_score - (f0 + f1) / 2,
            r.weighted_avg.precision - (s0 * p0 + s1 * p1) / n, r.weighted_avg.recall - (s0 * r0 + s1 * r1) / n,
            r.weighted_avg.f_score - (s0 * f0 + s1 * f1) / n,
            static_cast<double>(r.non_clickbait.support) - s0, static_cast<double>(r.clickbait.support) - s1};
        for (double e : w) worst = std::max(worst, std::abs(e));
    }
    o.check(worst <= kReportTol, "report recount");

    // published per-class rows, supports 884 / 754
    struct Row { const char* name; double nc, cb, avg; };
    const Row rows[] = {{"precision", 0.92, 0.93, 0.92}, {"recall", 0.95, 0.89, 0.92}, {"f-score", 0.93, 0.91, 0.92}};
    int consistent = 0;
    for (const auto& r : rows) {
        const bool macro = average_row_consistent(r.nc, r.cb, 1, 1, r.avg);
        const bool weighted = average_row_consistent(r.nc, r.cb, 884, 754, r.avg);
        o.check(macro, std::string("macro ") + r.name);
        o.check(weighted, std::string("weighted ") + r.name);
        consistent += macro + weighted;
    }
    o.detail << instances << " AUC instances, " << mismatches << " mismatches; report max err " << fmt(worst)
             << "; published avg rows consistent " << consistent << "/6";
}

// ---------------------------------------------------------------- 3. reductions

void reductions(Outcome& o) {
    const auto d = testing::make_linear_separable(80, 5, 0.0, 4);
    LogRegConfig lc;
    lc.learning_rate = 0.4;
    lc.epochs = 60;
    TrainingHistory lh, mh;
    const auto lr = train_logreg(d.X, d.y, lc, &lh);
    MLPConfig mc;
    mc.hidden = {};
    mc.optimizer = OptimizerKind::Sgd;
    mc.learning_rate = lc.learning_rate;
    mc.batch_size = 80;
    mc.epochs = lc.epochs;
    const auto mlp = train_mlp(d.X, d.y, mc, nullptr, &mh);
    double traj = 0;
    o.check(lh.train_loss.size() == mh.train_loss.size() && !lh.train_loss.empty(), "trajectory length");
    for (std::size_t i = 0; i < std::min(lh.train_loss.size(), mh.train_loss.size()); ++i) {
        traj = std::max(traj, std::abs(lh.train_loss[i] - mh.train_loss[i]));
    }
    const auto& out = std::get<DenseLayer>(mlp.layers.back());
    const double wdiff = std::max((out.weight.col(0) - lr.w).cwiseAbs().maxCoeff(), std::abs(out.bias(0, 0) - lr.b));
    o.check(traj <= kReductionTol, "mlp/logreg loss trajectory");
    o.check(wdiff <= kReductionTol, "mlp/logreg weights");

    auto xd = testing::make_xor_separable(300, 4, 0.0, 8);
    Rng noise(8);
    for (auto& v : xd.y) {
        if (noise.bernoulli(0.08)) v = 1 - v;
    }
    RFConfig rc;
    rc.n_estimators = 1;
    rc.bootstrap = false;
    rc.max_features = MaxFeatures::parse("all");
    rc.min_samples_leaf = 2;
    const auto forest = train_random_forest(xd.X, xd.y, rc);
    const testing::OracleTree tree(xd.X, xd.y, rc.min_samples_leaf);
    std::size_t disagree = 0;
    Rng rng(9);
    for (std::size_t i = 0; i < kReductionPoints; ++i) {
        Vector x(4);
        for (int k = 0; k < 4; ++k) x[k] = rng.uniform(-1.2, 1.2);
        disagree += predict_forest(forest, x).label != tree.predict(x);
    }
    o.check(disagree == 0, "forest/tree");
    o.detail << "loss trajectory max diff " << fmt(traj) << ", weight diff " << fmt(wdiff) << "; forest vs tree "
             << disagree << "/" << kReductionPoints << " disagreements";
}

// ---------------------------------------------------------------- 4. ablation

void ablation(Outcome& o) {
    const auto t0 = Clock::now();
    double gap_sum[2] = {0, 0};
    double acc_sum[2][2] = {{0, 0}, {0, 0}};
    const ModelKind kinds[2] = {ModelKind::LogReg, ModelKind::Forest};
    for (int s = 0; s < kAblationSeeds; ++s) {
        const auto data = testing::make_clickbait_dataset(1000 + static_cast<std::uint64_t>(s), {.n = 1000});
        const auto split = split_dataset(data, {0.2, static_cast<std::uint64_t>(s), true});
        for (int k = 0; k < 2; ++k) {
            double acc[2];
            for (int f = 0; f < 2; ++f) {
                PipelineConfig cfg;
                cfg.model = kinds[k];
                cfg.features = FeatureSet::parse(f == 0 ? "title" : "title,metadata");
                cfg.seed = static_cast<std::uint64_t>(s) + 1;
                cfg.word2vec.dim = 16;
                cfg.word2vec.epochs = 3;
                const auto m = train_pipeline(split.train, cfg);
                acc[f] = accuracy(m, split.test);
                acc_sum[k][f] += acc[f];
            }
            gap_sum[k] += acc[1] - acc[0];
        }
    }
    const double secs = seconds_since(t0);
    for (int k = 0; k < 2; ++k) {
        const double gap = gap_sum[k] / kAblationSeeds;
        o.check(gap >= kAblationGap, k == 0 ? "logreg gap" : "rf gap");
        o.detail << (k == 0 ? "logreg" : "; rf") << " title " << fmt(100 * acc_sum[k][0] / kAblationSeeds, "%.1f")
                 << "% -> title+metadata " << fmt(100 * acc_sum[k][1] / kAblationSeeds, "%.1f") << "% (gap "
                 << fmt(100 * gap, "%.1f") << " pts)";
    }
    o.check(secs < kAblationSeconds, "runtime");
    o.detail << "; " << fmt(secs, "%.1f") << "s over " << kAblationSeeds << " seeds";
}

// ---------------------------------------------------------------- 5. separability

double holdout_accuracy(const testing::MatrixData& d, const std::function<int(const Vector&)>& predict,
                        Eigen::Index from) {
    std::size_t right = 0;
    for (Eigen::Index i = from; i < d.X.rows(); ++i) {
        right += predict(d.X.row(i).transpose()) == d.y[static_cast<std::size_t>(i)];
    }
    return static_cast<double>(right) / static_cast<double>(d.X.rows() - from);
}

void separability(Outcome& o) {
    const auto d = testing::make_xor_separable(kSeparableSamples, 4, 0.05, 21);
    const Eigen::Index n_train = static_cast<Eigen::Index>(kSeparableSamples * 4 / 5);
    const Matrix Xtr = d.X.topRows(n_train);
    const std::vector<int> ytr(d.y.begin(), d.y.begin() + n_train);

    RFConfig rc;
    rc.n_estimators = 100;
    rc.seed = 3;
    const auto forest = train_random_forest(Xtr, ytr, rc);
    const double rf_acc = holdout_accuracy(d, [&](const Vector& x) { return predict_forest(forest, x).label; }, n_train);

    MLPConfig mc;
    mc.hidden = {32};
    mc.learning_rate = 0.01;
    mc.epochs = 40;
    mc.seed = 4;
    const auto mlp = train_mlp(Xtr, ytr, mc);
    const double mlp_acc = holdout_accuracy(d, [&](const Vector& x) { return predict_mlp(mlp, x).label; }, n_train);

    const auto lin = testing::make_linear_separable(kSeparableSamples, 5, 0.05, 22);
    LogRegConfig lc;
    lc.learning_rate = 2.0;
    lc.epochs = 3000;
    const Matrix Ltr = lin.X.topRows(n_train);
    const std::vector<int> ltr(lin.y.begin(), lin.y.begin() + n_train);
    const auto lr = train_logreg(Ltr, ltr, lc);
    auto lr_pred = [&](const Vector& x) { return predict_logreg(lr, x).label; };
    const double lr_train = holdout_accuracy({Ltr, ltr}, lr_pred, 0);
    const double lr_test = holdout_accuracy(lin, lr_pred, n_train);

    o.check(rf_acc >= kSeparableAcc, "rf");
    o.check(mlp_acc >= kSeparableAcc, "mlp");
    o.check(lr_train == 1.0 && lr_test == 1.0, "logreg");
    o.detail << "rf(100 trees) " << fmt(100 * rf_acc, "%.2f") << "%, mlp " << fmt(100 * mlp_acc, "%.2f")
             << "% on held-out xor; logreg train " << fmt(100 * lr_train, "%.2f") << "% / test "
             << fmt(100 * lr_test, "%.2f") << "% on linear";
}

// ---------------------------------------------------------------- 6. embeddings

void embeddings(Outcome& o) {
    const std::size_t groups = 4, words = 8;
    const auto corpus = testing::make_topic_corpus(groups, words, 600, 8, 31);
    auto vocab = std::make_shared<const Vocab>(build_vocab(corpus, 1, 1000));
    W2VConfig wc;
    wc.dim = 24;
    wc.epochs = 5;
    wc.window = 4;
    wc.seed = 5;
    const auto w2v = train_skipgram(corpus, vocab, wc);
    auto word = [](std::size_t g, std::size_t k) { return "g" + std::to_string(g) + "w" + std::to_string(k); };
    Rng rng(6);
    const int triples = 2000;
    int good = 0;
    for (int t = 0; t < triples; ++t) {
        const std::size_t g = rng.below(groups);
        const std::size_t a = rng.below(words);
        std::size_t b = rng.below(words - 1);
        if (b >= a) ++b;
        std::size_t h = rng.below(groups - 1);
        if (h >= g) ++h;
        const std::size_t c = rng.below(words);
        const Vector va = embed_word(w2v, word(g, a));
        good += cosine_similarity(va, embed_word(w2v, word(g, b))) > cosine_similarity(va, embed_word(w2v, word(h, c)));
    }
    const double frac = static_cast<double>(good) / triples;
    o.check(frac >= kTripleFraction, "word2vec triples");

    const auto templ = testing::make_template_corpus(600, 7);
    const auto tv = build_vocab(templ, 1, 1000);
    EncoderConfig ec;
    ec.dim = 32;
    ec.heads = 4;
    ec.layers = 1;
    ec.ffn_dim = 64;
    ec.max_len = 16;
    ec.epochs = 6;
    ec.learning_rate = 3e-3;
    ec.mask_prob = 0.15;
    ec.seed = 8;
    const auto enc = pretrain_masked(templ, tv, ec);
    const auto heldout = testing::make_template_corpus(300, 70);
    const double mlm = masked_token_accuracy(heldout, tv, enc, ec.mask_prob, 9);
    const double chance = 1.0 / static_cast<double>(tv.size() - Vocab::kFirstToken);
    o.check(mlm > kMlmChanceFactor * chance, "masked-token accuracy");
    o.detail << "co-occurring closer in " << fmt(100 * frac, "%.1f") << "% of " << triples
             << " triples; masked-token accuracy " << fmt(100 * mlm, "%.1f") << "% vs chance "
             << fmt(100 * chance, "%.2f") << "% (" << fmt(mlm / chance, "%.1f") << "x)";
}

// ---------------------------------------------------------------- 7. determinism

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism(Outcome& o, const fs::path& fixture) {
    const fs::path dir = fs::temp_directory_path() / "cbd_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::size_t identical = 0;
    const auto names = preset_names();
    for (const auto& preset : names) {
        std::string model[2], report[2], train_out[2], roc_csv[2];
        bool ok = true;
        for (int run = 0; run < 2; ++run) {
            // same paths both runs: the train output names the model file
            const fs::path m = dir / (preset + ".bin");
            const fs::path r = dir / (preset + ".roc.csv");
            fs::remove(m);
            fs::remove(r);
            std::ostringstream out, err, eout, eerr;
            ok &= cli::run({"train", "--preset", preset, "--seed", "7", "--data", fixture.string(), "--out",
                            m.string(), "--quiet"},
                           out, err) == 0;
            ok &= cli::run({"eval", "--model", m.string(), "--data", fixture.string(), "--roc", r.string()}, eout,
                           eerr) == 0;
            model[run] = slurp(m);
            train_out[run] = out.str();
            report[run] = eout.str();
            roc_csv[run] = slurp(r);
        }
        const bool same = ok && !model[0].empty() && model[0] == model[1] && report[0] == report[1] &&
                          train_out[0] == train_out[1] && roc_csv[0] == roc_csv[1];
        o.check(same, preset);
        identical += same;
    }
    fs::remove_all(dir);
    o.detail << identical << "/" << names.size() << " presets byte-identical (model file, train output, report, ROC csv)";
}

// ---------------------------------------------------------------- 8. invariants

void invariants(Outcome& o) {
    Rng rng(40);
    // softmax rows
    double softmax_err = 0;
    bool masked_zero = true;
    for (int t = 0; t < 300; ++t) {
        const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng.below(8));
        const Eigen::Index c = 1 + static_cast<Eigen::Index>(rng.below(12));
        Matrix s(r, c);
        for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform(-50, 50);
        std::vector<int> mask(static_cast<std::size_t>(c));
        for (auto& m : mask) m = rng.bernoulli(0.7);
        mask[rng.below(static_cast<std::uint64_t>(c))] = 1;
        const Matrix w = masked_softmax_rows(s, mask);
        for (Eigen::Index i = 0; i < r; ++i) {
            softmax_err = std::max(softmax_err, std::abs(w.row(i).sum() - 1.0));
            for (Eigen::Index k = 0; k < c; ++k) masked_zero &= mask[static_cast<std::size_t>(k)] || w(i, k) == 0.0;
        }
    }
    o.check(softmax_err <= kMomentTol && masked_zero, "softmax rows");

    // batch-norm output moments: mean beta, variance gamma^2 * var / (var + eps)
    double bn_err = 0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(60));
        const Eigen::Index f = 1 + static_cast<Eigen::Index>(rng.below(6));
        Matrix x(n, f);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-5, 5) * (1 + static_cast<double>(i % 3));
        RowVector gamma(f), beta(f), rm = RowVector::Zero(f), rv = RowVector::Ones(f);
        for (Eigen::Index k = 0; k < f; ++k) {
            gamma[k] = rng.uniform(0.5, 2);
            beta[k] = rng.uniform(-1, 1);
        }
        const Matrix y = batch_norm_forward(x, gamma, beta, Mode::Train, 0.9, rm, rv);
        for (Eigen::Index k = 0; k < f; ++k) {
            const double mx = x.col(k).mean();
            const double vx = (x.col(k).array() - mx).square().mean();
            const double my = y.col(k).mean();
            const double vy = (y.col(k).array() - my).square().mean();
            bn_err = std::max({bn_err, std::abs(my - beta[k]),
                               std::abs(vy - gamma[k] * gamma[k] * vx / (vx + kBatchNormEps))});
        }
    }
    o.check(bn_err <= kMomentTol, "batch-norm moments");

    // dropout expectation
    double drop_err = 0;
    for (double rate : {0.1, 0.3, 0.5, 0.8}) {
        const Vector out = dropout_forward(Vector::Ones(kDropoutSamples), rate, Mode::Train, rng);
        drop_err = std::max(drop_err, std::abs(out.mean() - 1.0));
    }
    o.check(drop_err <= kDropoutTol, "dropout expectation");

    // split partition and stratification
    std::size_t split_cases = 0, split_bad = 0;
    for (std::size_t n = 2; n <= 120; n += 3) {
        Dataset d;
        for (std::size_t i = 0; i < n; ++i) {
            VideoRecord r;
            r.video_id = "v" + std::to_string(i);
            r.title = "t";
            r.label = (i == 0 || (i != 1 && rng.bernoulli(0.4))) ? Label::Clickbait : Label::NonClickbait;
            d.records.push_back(r);
        }
        const std::size_t pos = static_cast<std::size_t>(
            std::count_if(d.records.begin(), d.records.end(), [](const auto& r) { return r.label == Label::Clickbait; }));
        for (double frac : {0.1, 0.25, 0.5, 0.8}) {
            for (bool strat : {false, true}) {
                const auto s = split_dataset(d, {frac, n, strat});
                ++split_cases;
                std::multiset<std::string> ids;
                for (const auto& r : s.train.records) ids.insert(r.video_id);
                for (const auto& r : s.test.records) ids.insert(r.video_id);
                bool ok = ids.size() == n && std::set<std::string>(ids.begin(), ids.end()).size() == n &&
                          s.test.size() == round_half_up(frac * static_cast<double>(n));
                if (strat) {
                    const double tpos = static_cast<double>(std::count_if(
                        s.test.records.begin(), s.test.records.end(),
                        [](const auto& r) { return r.label == Label::Clickbait; }));
                    ok &= std::abs(tpos - frac * static_cast<double>(pos)) < 1.0 + 1e-9;
                }
                split_bad += !ok;
            }
        }
    }
    o.check(split_bad == 0, "split partition/stratification");
    o.detail << "softmax row err " << fmt(softmax_err) << "; batch-norm moment err " << fmt(bn_err)
             << "; dropout mean err " << fmt(drop_err) << " at n=" << kDropoutSamples << "; split " << split_cases - split_bad
             << "/" << split_cases << " cases";
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path fixture = argc > 1 ? fs::path(argv[1]) : fs::path(CBD_FIXTURE_DIR) / "tiny.jsonl";
    struct Criterion {
        const char* name;
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"gradient suite", gradients},
        {"metric oracles", metric_oracles},
        {"reduction identities", reductions},
        {"feature-ablation trend", ablation},
        {"separability", separability},
        {"embedding semantics", embeddings},
        {"determinism", [&](Outcome& o) { determinism(o, fixture); }},
        {"invariant suites", invariants},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            criteria[i].run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.str().c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
