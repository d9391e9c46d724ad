#include "cbd/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cbd/corpus.hpp"
#include "cbd/error.hpp"
#include "cbd/eval.hpp"
#include "cbd/pipeline.hpp"
#include "cbd/tuning.hpp"

namespace cbd::cli {

namespace {

namespace fs = std::filesystem;

Dataset load(const std::string& path, const std::string& format) {
    return load_dataset(path, format.empty() ? format_from_path(path) : parse_format(format));
}

std::string prob_text(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", p);
    return buf;
}

// Options shared by train and gridsearch.
struct ModelFlags {
    std::string preset;
    std::string config;
    std::string model;
    std::string embed;
    std::string features;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    std::vector<std::string> sets;

    void add(CLI::App& app) {
        app.add_option("--preset", preset, "experiment preset exp1..exp6");
        app.add_option("--config", config, "flat key = value config file");
        app.add_option("--model", model, "logreg, rf or mlp");
        app.add_option("--embed", embed, "word2vec or attention");
        app.add_option("--features", features, "comma list, e.g. title,likes,dislikes");
        app.add_option("--seed", seed, "random seed")->capture_default_str();
        app.add_option("--jobs", jobs, "worker threads")->capture_default_str();
        app.add_option("--set", sets, "extra key=value option (repeatable)");
    }

    // preset, then config file, then explicit flags.
    [[nodiscard]] PipelineConfig build() const {
        PipelineConfig c = preset.empty() ? PipelineConfig{} : cbd::preset(preset);
        if (!config.empty()) apply_config_file(c, config);
        if (!model.empty()) c.model = parse_model_kind(model);
        if (!embed.empty()) c.embed = parse_embed_kind(embed);
        if (!features.empty()) c.features = FeatureSet::parse(features);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
            apply_option(c, s.substr(0, eq), s.substr(eq + 1));
        }
        c.seed = seed;
        c.jobs = std::max<std::size_t>(1, jobs);
        return c;
    }
};

void print_history(const TrainingHistory& h, std::ostream& err) {
    char buf[160];
    for (std::size_t e = 0; e < h.train_loss.size(); ++e) {
        int n = std::snprintf(buf, sizeof buf, "epoch %zu: loss %.6f train_acc %.4f", e + 1, h.train_loss[e],
                              e < h.train_accuracy.size() ? h.train_accuracy[e] : 0.0);
        if (e < h.validation_accuracy.size()) {
            std::snprintf(buf + n, sizeof buf - static_cast<std::size_t>(n), " val_acc %.4f",
                          h.validation_accuracy[e]);
        }
        err << buf << '\n';
    }
}

int cmd_ingest(const std::string& path, const std::string& format, std::ostream& out) {
    const auto d = load(path, format);
    std::size_t clickbait = 0;
    std::size_t disabled = 0;
    for (const auto& r : d.records) {
        clickbait += r.label == Label::Clickbait;
        disabled += !r.comment_count.has_value();
    }
    out << "records " << d.size() << '\n'
        << "clickbait " << clickbait << '\n'
        << "non-clickbait " << d.size() - clickbait << '\n'
        << "comments_disabled " << disabled << '\n';
    return kOk;
}

struct SplitFlags {
    std::string path;
    std::string format;
    double test_fraction = 0.2;
    std::uint64_t seed = 1;
    bool stratified = false;
    std::string train_out;
    std::string test_out;
};

int cmd_split(const SplitFlags& f, std::ostream& out) {
    const auto d = load(f.path, f.format);
    const auto fmt = f.format.empty() ? format_from_path(f.path) : parse_format(f.format);
    const auto s = split_dataset(d, {f.test_fraction, f.seed, f.stratified});
    const fs::path p(f.path);
    const auto ext = p.extension().string();
    const fs::path stem = p.parent_path() / p.stem();
    const fs::path train_path = f.train_out.empty() ? fs::path(stem.string() + ".train" + ext) : fs::path(f.train_out);
    const fs::path test_path = f.test_out.empty() ? fs::path(stem.string() + ".test" + ext) : fs::path(f.test_out);
    if (fs::exists(p) && (fs::equivalent(p, train_path) || fs::equivalent(p, test_path))) {
        throw UsageError("split: output would overwrite the input dataset");
    }
    save_dataset(s.train, train_path, fmt);
    save_dataset(s.test, test_path, fmt);
    out << "train " << s.train.size() << ' ' << train_path.string() << '\n'
        << "test " << s.test.size() << ' ' << test_path.string() << '\n';
    return kOk;
}

struct TrainFlags {
    ModelFlags model;
    std::string data;
    std::string validation;
    std::string format;
    std::string out;
    bool quiet = false;
};

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
    const auto cfg = f.model.build();
    const auto train = load(f.data, f.format);
    std::optional<Dataset> val;
    if (!f.validation.empty()) val = load(f.validation, f.format);
    TrainingHistory h;
    const auto m = train_pipeline(train, cfg, val ? &*val : nullptr, &h);
    if (!f.quiet) print_history(h, err);
    save_model(m, f.out);
    out << "model " << to_string(m.kind) << '\n'
        << "embed " << to_string(m.embed) << '\n'
        << "features " << m.features.to_string() << '\n'
        << "train_accuracy " << format_2dp(accuracy(m, train)) << '\n';
    if (val) out << "validation_accuracy " << format_2dp(accuracy(m, *val)) << '\n';
    out << "saved " << f.out << '\n';
    return kOk;
}

struct EvalFlags {
    std::string model;
    std::string data;
    std::string format;
    std::string roc;
    bool json = false;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
    const auto m = load_model(f.model);
    const auto d = load(f.data, f.format);
    const auto preds = predict(m, d);
    const auto y = labels(d);
    std::vector<int> yhat;
    std::vector<double> scores;
    for (const auto& p : preds) {
        yhat.push_back(p.label);
        scores.push_back(p.prob);
    }
    const auto rep = report(confusion(y, yhat));
    out << (f.json ? report_json(rep) + "\n" : render_report(rep));

    const bool both = std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
    const std::string roc_path = f.roc.empty() ? f.model + ".roc.csv" : f.roc;
    if (both) {
        const auto c = roc(y, scores);
        std::ofstream os(roc_path, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot write ROC file '" + roc_path + "'");
        write_roc_csv(c, os);
        if (!f.json) out << "auc " << format_2dp(c.auc) << '\n';
    }
    return kOk;
}

int cmd_predict(const std::string& model, const std::string& data, const std::string& format, std::ostream& out) {
    const auto m = load_model(model);
    const auto d = load(data, format);
    const auto preds = predict(m, d);
    out << "video_id,prob,label\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        out << d.records[i].video_id << ',' << prob_text(preds[i].prob) << ',' << preds[i].label << '\n';
    }
    return kOk;
}

struct GridFlags {
    ModelFlags model;
    std::string grid;
    std::string data;
    std::string format;
    double holdout = 0.2;
    std::size_t folds = 0;
    std::string trials;
};

int cmd_gridsearch(const GridFlags& f, std::ostream& out) {
    std::ifstream in(f.grid, std::ios::binary);
    if (!in) throw UsageError("cannot open grid file '" + f.grid + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto grid = Grid::parse(ss.str());
    const auto base = f.model.build();
    for (const auto& a : grid.axes()) {
        PipelineConfig probe = base;
        for (const auto& v : a.values) apply_option(probe, a.name, v);  // fail fast on bad axes
    }
    const auto data = load(f.data, f.format);
    ValidationScheme scheme;
    if (f.folds > 0) {
        scheme.kind = ValidationScheme::Kind::KFold;
        scheme.folds = f.folds;
    } else {
        scheme.holdout_fraction = f.holdout;
    }
    auto trial = [&](const GridPoint& p, const Dataset& tr, const Dataset& va, std::uint64_t seed) {
        PipelineConfig c = base;
        for (const auto& [k, v] : p) apply_option(c, k, v);
        c.seed = seed;
        c.jobs = 1;
        return accuracy(train_pipeline(tr, c), va);
    };
    const auto r = grid_search(grid, trial, data, scheme, base.seed, base.jobs);
    write_trials_csv(r, out, false);
    out << "best " << r.best.index;
    for (const auto& [k, v] : r.best.point) out << ' ' << k << '=' << v;
    out << " accuracy " << prob_text(r.best.accuracy) << '\n';
    if (!f.trials.empty()) {
        std::ofstream os(f.trials, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot write trials file '" + f.trials + "'");
        write_trials_csv(r, os, true);
    }
    return kOk;
}

int cmd_fetch(const std::string& ids_path, const std::string& fixtures, std::ostream& out, std::ostream& err) {
    std::ifstream in(ids_path);
    if (!in) throw UsageError("cannot open id list '" + ids_path + "'");
    std::vector<std::string> ids;
    for (std::string line; std::getline(in, line);) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    FixtureTransport transport(fixtures);
    const auto res = fetch_metadata(ids, transport);
    for (const auto& r : res.records) {
        nlohmann::ordered_json j;
        j["video_id"] = r.video_id;
        j["title"] = r.title;
        j["description"] = r.description;
        j["view_count"] = r.view_count;
        j["like_count"] = r.like_count;
        j["dislike_count"] = r.dislike_count;
        j["comment_count"] = r.comment_count ? nlohmann::ordered_json(*r.comment_count) : nlohmann::ordered_json();
        j["subscriber_count"] = r.subscriber_count;
        out << j.dump() << '\n';
    }
    for (const auto& id : res.unresolved) err << "unresolved " << id << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Clickbait detection toolkit", "cbd"};
    app.require_subcommand(1);

    std::string path;
    std::string format;

    auto* ingest = app.add_subcommand("ingest", "validate and summarize a dataset");
    ingest->add_option("path", path, "dataset file")->required();
    ingest->add_option("--format", format, "csv or jsonl (default: from extension)");

    auto* stats = app.add_subcommand("stats", "print dataset statistics");
    stats->add_option("path", path, "dataset file")->required();
    stats->add_option("--format", format, "csv or jsonl");

    SplitFlags sf;
    auto* split = app.add_subcommand("split", "write train/test files");
    split->add_option("path", sf.path, "dataset file")->required();
    split->add_option("--format", sf.format, "csv or jsonl");
    split->add_option("--test-fraction", sf.test_fraction, "test share")->capture_default_str();
    split->add_option("--seed", sf.seed, "random seed")->capture_default_str();
    split->add_flag("--stratified", sf.stratified, "preserve class proportions");
    split->add_option("--train-out", sf.train_out, "train output path");
    split->add_option("--test-out", sf.test_out, "test output path");

    TrainFlags tf;
    auto* train = app.add_subcommand("train", "train a model");
    tf.model.add(*train);
    train->add_option("--data", tf.data, "training dataset")->required();
    train->add_option("--validation", tf.validation, "validation dataset (per-epoch accuracy)");
    train->add_option("--format", tf.format, "csv or jsonl");
    train->add_option("--out", tf.out, "model file to write")->required();
    train->add_flag("--quiet", tf.quiet, "no epoch lines");

    EvalFlags ef;
    auto* eval = app.add_subcommand("eval", "evaluate a model");
    eval->add_option("--model", ef.model, "model file")->required();
    eval->add_option("--data", ef.data, "labelled dataset")->required();
    eval->add_option("--format", ef.format, "csv or jsonl");
    eval->add_option("--roc", ef.roc, "ROC csv path (default: <model>.roc.csv)");
    eval->add_flag("--json", ef.json, "machine-readable report");

    std::string model_path;
    std::string data_path;
    auto* pred = app.add_subcommand("predict", "per-video probability and label");
    pred->add_option("--model", model_path, "model file")->required();
    pred->add_option("--data", data_path, "dataset")->required();
    pred->add_option("--format", format, "csv or jsonl");

    GridFlags gf;
    auto* gs = app.add_subcommand("gridsearch", "hyperparameter grid search");
    gf.model.add(*gs);
    gs->add_option("--grid", gf.grid, "grid file, one 'axis = [v1, v2]' per line")->required();
    gs->add_option("--data", gf.data, "training dataset")->required();
    gs->add_option("--format", gf.format, "csv or jsonl");
    gs->add_option("--holdout", gf.holdout, "validation share of the data")->capture_default_str();
    gs->add_option("--kfold", gf.folds, "k-fold validation instead of holdout");
    gs->add_option("--trials", gf.trials, "write the trial table (with wall time) here");

    std::string ids_path;
    std::string fixtures;
    auto* fetch = app.add_subcommand("fetch", "look up video metadata (offline fixture transport)");
    fetch->add_option("--ids", ids_path, "file with one video id per line")->required();
    fetch->add_option("--fixtures", fixtures, "directory of <video_id>.json files")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        const auto& subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kUsage;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(path, format, out);
        if (stats->parsed()) {
            out << render_stats(dataset_stats(load(path, format)));
            return kOk;
        }
        if (split->parsed()) return cmd_split(sf, out);
        if (train->parsed()) return cmd_train(tf, out, err);
        if (eval->parsed()) return cmd_eval(ef, out);
        if (pred->parsed()) return cmd_predict(model_path, data_path, format, out);
        if (gs->parsed()) return cmd_gridsearch(gf, out);
        if (fetch->parsed()) return cmd_fetch(ids_path, fixtures, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}

}  // namespace cbd::cli
