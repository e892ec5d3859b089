#include "memefuse/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "memefuse/error.hpp"
#include "memefuse/gradcheck.hpp"
#include "memefuse/pipeline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace memefuse {

namespace {

struct CommonOpts {
    DataPaths paths;
    std::string config_path;
    std::string model_path;
    std::string out_path;
    std::string history_path;
    std::string grid_path;
    bool quiet = false;
    bool seed_given = false;
    std::uint64_t seed = 0;
    std::size_t gradcheck_seeds = 10;
};

ProgressFn make_progress(bool quiet) {
    if (quiet) return {};
    return [](const std::string& line) { std::cerr << line << "\n"; };
}

void add_data_options(CLI::App* cmd, CommonOpts& opts, bool model_input) {
    cmd->add_option("--data", opts.paths.dataset, "dataset JSON Lines file")->required();
    cmd->add_option("--embeddings", opts.paths.embeddings, "word vector text file");
    cmd->add_option("--sentence-vectors", opts.paths.sentence_vectors,
                    "sentence vector JSON Lines file");
    cmd->add_option("--image-features", opts.paths.image_features,
                    "precomputed image feature JSON Lines file");
    cmd->add_option("--lexicon", opts.paths.lexicon, "replacement lexicon file");
    cmd->add_flag("--quiet", opts.quiet, "suppress progress lines");
    if (model_input) {
        cmd->add_option("--model", opts.model_path, "model bundle")->required();
    }
}

std::uint64_t env_seed_override(std::uint64_t fallback) {
    const char* env = std::getenv("MEMEFUSE_SEED");
    if (!env || !*env) return fallback;
    try {
        std::size_t used = 0;
        std::string s(env);
        unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("MEMEFUSE_SEED: expected an unsigned integer, got '" +
                          std::string(env) + "'");
    }
}

PipelineConfig load_config(const CommonOpts& opts) {
    PipelineConfig cfg =
        opts.config_path.empty() ? PipelineConfig() : PipelineConfig::load(opts.config_path);
    cfg.train.seed = env_seed_override(cfg.train.seed);
    if (opts.seed_given) cfg.train.seed = opts.seed;
    cfg.validate();
    return cfg;
}

void write_history_csv(const std::string& path, const PipelineConfig& cfg,
                       const EnsembleTrainResult& result) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("history: cannot write " + path);
    out << "member,epoch,mean_loss,train_macro_f1,dev_macro_f1\n";
    char buf[160];
    for (std::size_t mi = 0; mi < result.member_history.size(); ++mi) {
        std::string name = "m" + std::to_string(cfg.members[mi].first) + "_" +
                           std::to_string(cfg.members[mi].second);
        for (const EpochStats& e : result.member_history[mi].epochs) {
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g\n", name.c_str(), e.epoch,
                          e.mean_loss, e.train_macro_f1, e.dev_macro_f1);
            out << buf;
        }
    }
    for (std::size_t e = 0; e < result.ensemble_dev_f1.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "ensemble,%zu,,,%.17g\n", e + 1,
                      result.ensemble_dev_f1[e]);
        out << buf;
    }
}

int cmd_train(const CommonOpts& opts) {
    ProgressFn progress = make_progress(opts.quiet);
    PipelineConfig cfg = load_config(opts);
    Pipeline pipe = Pipeline::for_training(cfg, opts.paths, progress);
    EnsembleTrainResult result = pipe.train(progress);
    pipe.to_bundle().save(opts.out_path);
    std::string history =
        opts.history_path.empty() ? opts.out_path + ".history.csv" : opts.history_path;
    write_history_csv(history, pipe.config(), result);

    nlohmann::json summary;
    summary["model"] = opts.out_path;
    summary["history"] = history;
    summary["dev_macro_f1"] = result.final_dev_f1;
    summary["best_epoch"] = result.best_epoch;
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_predict(const CommonOpts& opts) {
    ProgressFn progress = make_progress(opts.quiet);
    ModelBundle bundle = ModelBundle::load(opts.model_path);
    Pipeline pipe = Pipeline::from_bundle(bundle, opts.paths, /*require_labels=*/false, progress);
    std::ofstream out(opts.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("predict: cannot write " + opts.out_path);
    for (std::size_t i = 0; i < pipe.records().size(); ++i) {
        Prediction pred = pipe.predict_record(i);
        nlohmann::json line;
        line["id"] = pipe.records()[i].id;
        std::vector<double> probs(pred.probs.raw().begin(), pred.probs.raw().end());
        line["probs"] = probs;
        line["label"] = predict_label(pred);
        out << line.dump() << "\n";
    }
    if (progress) {
        progress("wrote " + std::to_string(pipe.records().size()) + " predictions to " +
                 opts.out_path);
    }
    return 0;
}

int cmd_eval(const CommonOpts& opts) {
    ProgressFn progress = make_progress(opts.quiet);
    ModelBundle bundle = ModelBundle::load(opts.model_path);
    Pipeline pipe = Pipeline::from_bundle(bundle, opts.paths, /*require_labels=*/true, progress);
    MetricsReport report = pipe.evaluate();
    if (!opts.quiet) std::cerr << report.to_table();
    std::cout << report.to_json() << "\n";
    return 0;
}

int cmd_gridsearch(const CommonOpts& opts) {
    ProgressFn progress = make_progress(opts.quiet);
    PipelineConfig base = load_config(opts);
    GridSpec grid = GridSpec::load(opts.grid_path);
    Pipeline pipe = Pipeline::for_training(base, opts.paths, progress);

    std::size_t cell = 0;
    std::size_t total = grid.combinations();
    GridOutcome outcome = grid_search(grid, [&](const std::map<std::string, double>& combo) {
        PipelineConfig cfg = pipe.config();
        for (const auto& [name, value] : combo) cfg.apply_grid_value(name, value);
        cfg.validate();
        pipe.set_config(cfg);
        if (progress) {
            std::ostringstream os;
            os << "grid cell " << ++cell << "/" << total << ":";
            for (const auto& [name, value] : combo) os << " " << name << "=" << value;
            progress(os.str());
        }
        EnsembleTrainResult result = pipe.train({});
        return std::make_pair(result.final_dev_f1, result.best_epoch);
    });

    std::ofstream out(opts.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("grid: cannot write " + opts.out_path);
    out << outcome.to_csv();

    nlohmann::json summary;
    summary["combinations"] = outcome.rows.size();
    summary["results"] = opts.out_path;
    nlohmann::json best;
    for (std::size_t k = 0; k < outcome.names.size(); ++k) {
        best[outcome.names[k]] = outcome.rows[outcome.best_row].values[k];
    }
    summary["best"] = best;
    summary["best_dev_macro_f1"] = outcome.rows[outcome.best_row].dev_macro_f1;
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_gradcheck(const CommonOpts& opts) {
    std::vector<LayerCheckResult> results = gradient_check_all(opts.gradcheck_seeds);
    bool ok = true;
    std::printf("%-12s  %-12s  %s\n", "layer", "max_rel_err", "status");
    for (const LayerCheckResult& r : results) {
        bool pass = r.max_rel_err <= kGradCheckTolerance;
        ok = ok && pass;
        std::printf("%-12s  %-12.3e  %s\n", r.layer.c_str(), r.max_rel_err,
                    pass ? "ok" : "FAIL");
    }
    return ok ? 0 : 1;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"parallel-channel meme sentiment classifier"};
    app.require_subcommand(1);
    CommonOpts opts;

    CLI::App* train = app.add_subcommand("train", "train the ensemble and save a model bundle");
    add_data_options(train, opts, false);
    train->add_option("--config", opts.config_path, "key=value configuration file");
    train->add_option("--out", opts.out_path, "output model bundle")->default_val("model.bundle");
    train->add_option("--history", opts.history_path, "training history CSV path");
    train->add_option("--seed", opts.seed)
        ->description("override train.seed")
        ->each([&opts](const std::string&) { opts.seed_given = true; });

    CLI::App* predict = app.add_subcommand("predict", "write per-record class probabilities");
    add_data_options(predict, opts, true);
    predict->add_option("--out", opts.out_path, "output JSON Lines file")->required();

    CLI::App* eval = app.add_subcommand("eval", "evaluate a model bundle on labeled data");
    add_data_options(eval, opts, true);

    CLI::App* gridsearch = app.add_subcommand("gridsearch", "exhaustive hyperparameter search");
    add_data_options(gridsearch, opts, false);
    gridsearch->add_option("--grid", opts.grid_path, "grid file: name=v1,v2 lines")->required();
    gridsearch->add_option("--config", opts.config_path, "base configuration file");
    gridsearch->add_option("--out", opts.out_path, "results CSV path")
        ->default_val("grid_results.csv");
    gridsearch->add_option("--seed", opts.seed)
        ->description("override train.seed")
        ->each([&opts](const std::string&) { opts.seed_given = true; });

    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "finite-difference check of every layer's gradients");
    gradcheck->add_option("--seeds", opts.gradcheck_seeds, "random instances per layer")
        ->default_val(10);
    gradcheck->add_flag("--quiet", opts.quiet, "suppress progress lines");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (train->parsed()) return cmd_train(opts);
        if (predict->parsed()) return cmd_predict(opts);
        if (eval->parsed()) return cmd_eval(opts);
        if (gridsearch->parsed()) return cmd_gridsearch(opts);
        if (gradcheck->parsed()) return cmd_gradcheck(opts);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace memefuse
