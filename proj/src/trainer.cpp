#include "memefuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "memefuse/error.hpp"

namespace memefuse {

OptimizerKind optimizer_from_name(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string optimizer_name(OptimizerKind kind) {
    return kind == OptimizerKind::Sgd ? "sgd" : "adam";
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("train: dropout must be in [0, 1)");
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
        throw ConfigError("train: dev fraction must be in (0, 1)");
    }
    if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
        throw ConfigError("train: learning rate must be finite and nonnegative");
    }
    for (double w : class_weights) {
        if (!(w >= 0.0)) throw ConfigError("train: class weights must be nonnegative");
    }
}

std::unique_ptr<Optimizer> Optimizer::make(OptimizerKind kind, const ParamRegistry& params) {
    if (kind == OptimizerKind::Sgd) return std::make_unique<Sgd>();
    return std::make_unique<Adam>(params);
}

namespace {

void check_finite_grad(const ParamRef& p) {
    if (!p.grad->all_finite()) {
        throw DivergenceError("non-finite gradient in " + p.name);
    }
}

}  // namespace

void Sgd::step(ParamRegistry& params, double lr) {
    for (ParamRef& p : params) {
        check_finite_grad(p);
        add_scaled(*p.value, *p.grad, -lr);
    }
}

Adam::Adam(const ParamRegistry& params) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const ParamRef& p : params) {
        m_.emplace_back(p.value->shape());
        v_.emplace_back(p.value->shape());
    }
}

void Adam::step(ParamRegistry& params, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (params.size() != m_.size()) {
        throw UsageError("Adam: registry size changed since construction");
    }
    ++t_;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        check_finite_grad(params[i]);
        Tensor& value = *params[i].value;
        const Tensor& grad = *params[i].grad;
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t k = 0; k < value.size(); ++k) {
            double g = grad[k];
            m[k] = beta1 * m[k] + (1.0 - beta1) * g;
            v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
            double mhat = m[k] / c1;
            double vhat = v[k] / c2;
            value[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

std::size_t predict_one(EnsembleMember& member, const SampleFeatures& sample) {
    return predict_label(member.forward(sample, false));
}

namespace {

double macro_f1_of_predictions(const std::vector<std::size_t>& y_true,
                               const std::vector<std::size_t>& y_pred, std::size_t classes) {
    return macro_f1(confusion(y_true, y_pred, classes)).macro_f1;
}

}  // namespace

double member_macro_f1(EnsembleMember& member, const std::vector<SampleFeatures>& samples) {
    std::vector<std::size_t> y_true, y_pred;
    y_true.reserve(samples.size());
    y_pred.reserve(samples.size());
    for (const SampleFeatures& s : samples) {
        y_true.push_back(static_cast<std::size_t>(s.label));
        y_pred.push_back(predict_one(member, s));
    }
    return macro_f1_of_predictions(y_true, y_pred, member.spec().class_count);
}

double ensemble_macro_f1(std::vector<std::unique_ptr<EnsembleMember>>& members,
                         const std::vector<SampleFeatures>& samples) {
    if (members.empty()) throw UsageError("ensemble_macro_f1: no members");
    std::size_t classes = members.front()->spec().class_count;
    std::vector<std::size_t> y_true, y_pred;
    for (const SampleFeatures& s : samples) {
        std::vector<Prediction> preds;
        preds.reserve(members.size());
        for (auto& m : members) preds.push_back(m->forward(s, false));
        y_true.push_back(static_cast<std::size_t>(s.label));
        y_pred.push_back(predict_label(soft_vote(preds)));
    }
    return macro_f1_of_predictions(y_true, y_pred, classes);
}

namespace {

constexpr std::uint64_t kShuffleStream = 2;

// One epoch of seeded mini-batch updates; returns the mean training loss.
double run_epoch(EnsembleMember& member, const std::vector<SampleFeatures>& train,
                 const TrainConfig& cfg, Rng& shuffle_rng, Optimizer& opt, ParamRegistry& reg,
                 std::size_t epoch) {
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = shuffle_rng.below(i);
        std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
        std::size_t end = std::min(order.size(), start + cfg.batch_size);
        double batch = static_cast<double>(end - start);
        zero_grads(reg);
        double batch_loss = 0.0;
        for (std::size_t k = start; k < end; ++k) {
            const SampleFeatures& s = train[order[k]];
            int label = s.label;
            double w = 1.0;
            if (!cfg.class_weights.empty()) {
                w = cfg.class_weights[static_cast<std::size_t>(label)];
            }
            member.forward(s, true);
            double sample_loss = w * member.loss(label);
            batch_loss += sample_loss;
            loss_sum += sample_loss;
            weight_sum += 1.0;
            member.backward(label, w / batch);
        }
        if (!std::isfinite(batch_loss)) {
            throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                                  ", batch " + std::to_string(batch_index));
        }
        opt.step(reg, cfg.learning_rate);
    }
    return weight_sum > 0.0 ? loss_sum / weight_sum : 0.0;
}

}  // namespace

TrainHistory train_member(EnsembleMember& member, const std::vector<SampleFeatures>& train,
                          const std::vector<SampleFeatures>& dev, const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw UsageError("train_member: empty training set");
    if (!cfg.class_weights.empty() &&
        cfg.class_weights.size() != member.spec().class_count) {
        throw ConfigError("train: class weight count != class count");
    }
    ParamRegistry reg = member.params();
    auto opt = Optimizer::make(cfg.optimizer, reg);
    Rng shuffle_rng(derive_seed(member.seed(), kShuffleStream));
    TrainHistory history;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = run_epoch(member, train, cfg, shuffle_rng, *opt, reg, epoch);
        stats.train_macro_f1 = member_macro_f1(member, train);
        stats.dev_macro_f1 = dev.empty() ? stats.train_macro_f1 : member_macro_f1(member, dev);
        history.epochs.push_back(stats);
        if (cfg.stop_train_f1 > 0.0 && stats.train_macro_f1 >= cfg.stop_train_f1) break;
    }
    return history;
}

EnsembleTrainResult train_ensemble(std::vector<std::unique_ptr<EnsembleMember>>& members,
                                   const std::vector<SampleFeatures>& train,
                                   const std::vector<SampleFeatures>& dev, const TrainConfig& cfg,
                                   const std::function<void(const std::string&)>& progress) {
    cfg.validate();
    if (members.empty()) throw UsageError("train_ensemble: no members");
    if (train.empty()) throw UsageError("train_ensemble: empty training set");
    for (auto& m : members) {
        if (!cfg.class_weights.empty() &&
            cfg.class_weights.size() != m->spec().class_count) {
            throw ConfigError("train: class weight count != class count");
        }
    }

    EnsembleTrainResult result;
    result.member_history.resize(members.size());

    std::vector<ParamRegistry> regs;
    std::vector<std::unique_ptr<Optimizer>> opts;
    std::vector<Rng> shuffles;
    for (auto& m : members) {
        regs.push_back(m->params());
        opts.push_back(Optimizer::make(cfg.optimizer, regs.back()));
        shuffles.emplace_back(derive_seed(m->seed(), kShuffleStream));
    }

    const std::vector<SampleFeatures>& dev_eval = dev.empty() ? train : dev;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t mi = 0; mi < members.size(); ++mi) {
            EpochStats stats;
            stats.epoch = epoch;
            stats.mean_loss =
                run_epoch(*members[mi], train, cfg, shuffles[mi], *opts[mi], regs[mi], epoch);
            stats.train_macro_f1 = member_macro_f1(*members[mi], train);
            stats.dev_macro_f1 = member_macro_f1(*members[mi], dev_eval);
            result.member_history[mi].epochs.push_back(stats);
        }
        double ens_dev = ensemble_macro_f1(members, dev_eval);
        result.ensemble_dev_f1.push_back(ens_dev);
        if (progress) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "epoch %zu/%zu: ensemble dev macro-F1 %.4f", epoch,
                          cfg.epochs, ens_dev);
            progress(buf);
        }
        if (cfg.stop_train_f1 > 0.0 &&
            ensemble_macro_f1(members, train) >= cfg.stop_train_f1) {
            break;
        }
    }
    if (!result.ensemble_dev_f1.empty()) {
        std::size_t best = 0;
        for (std::size_t e = 1; e < result.ensemble_dev_f1.size(); ++e) {
            if (result.ensemble_dev_f1[e] > result.ensemble_dev_f1[best]) best = e;
        }
        result.best_epoch = best + 1;
        result.final_dev_f1 = result.ensemble_dev_f1.back();
    }
    return result;
}

// ---- grid search ----

const std::vector<std::string> kGridParameterNames = {"h12", "h3", "r", "d", "c", "m", "l", "p"};

GridSpec GridSpec::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("grid: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

GridSpec GridSpec::parse(const std::string& content, const std::string& origin) {
    GridSpec grid;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::string where = origin + ":" + std::to_string(lineno);
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("grid: " + where + ": expected name=v1,v2");
        std::string name = line.substr(0, eq);
        name.erase(0, name.find_first_not_of(" \t"));
        name.erase(name.find_last_not_of(" \t") + 1);
        if (std::find(kGridParameterNames.begin(), kGridParameterNames.end(), name) ==
            kGridParameterNames.end()) {
            throw ConfigError("grid: " + where + ": unknown parameter '" + name + "'");
        }
        if (grid.values.count(name)) {
            throw ConfigError("grid: " + where + ": duplicate parameter '" + name + "'");
        }
        std::vector<double> vals;
        std::stringstream vs(line.substr(eq + 1));
        std::string item;
        while (std::getline(vs, item, ',')) {
            item.erase(0, item.find_first_not_of(" \t"));
            item.erase(item.find_last_not_of(" \t") + 1);
            if (item.empty()) continue;
            try {
                std::size_t used = 0;
                double v = std::stod(item, &used);
                if (used != item.size()) throw std::invalid_argument(item);
                vals.push_back(v);
            } catch (const std::exception&) {
                throw ConfigError("grid: " + where + ": bad value '" + item + "'");
            }
        }
        if (vals.empty()) throw ConfigError("grid: " + where + ": empty value list");
        grid.values[name] = std::move(vals);
    }
    if (grid.values.empty()) throw ConfigError("grid: " + origin + ": no parameters");
    return grid;
}

std::size_t GridSpec::combinations() const {
    std::size_t n = 1;
    for (const auto& [name, vals] : values) n *= vals.size();
    return n;
}

GridOutcome grid_search(const GridSpec& grid, const GridEvalFn& evaluate) {
    if (grid.values.empty()) throw ConfigError("grid search: empty grid");
    GridOutcome outcome;
    for (const auto& [name, vals] : grid.values) {
        if (vals.empty()) throw ConfigError("grid search: empty value list for " + name);
        outcome.names.push_back(name);  // std::map iterates sorted
    }
    std::vector<std::size_t> index(outcome.names.size(), 0);
    bool done = false;
    while (!done) {
        std::map<std::string, double> combo;
        GridRow row;
        for (std::size_t k = 0; k < outcome.names.size(); ++k) {
            double v = grid.values.at(outcome.names[k])[index[k]];
            combo[outcome.names[k]] = v;
            row.values.push_back(v);
        }
        auto [f1, best_epoch] = evaluate(combo);
        row.dev_macro_f1 = f1;
        row.epoch_of_best = best_epoch;
        outcome.rows.push_back(std::move(row));

        // odometer, last name fastest
        std::size_t k = index.size();
        while (k-- > 0) {
            if (++index[k] < grid.values.at(outcome.names[k]).size()) break;
            index[k] = 0;
            if (k == 0) done = true;
        }
    }

    outcome.best_row = 0;
    for (std::size_t r = 1; r < outcome.rows.size(); ++r) {
        const GridRow& cand = outcome.rows[r];
        const GridRow& best = outcome.rows[outcome.best_row];
        if (cand.dev_macro_f1 > best.dev_macro_f1 ||
            (cand.dev_macro_f1 == best.dev_macro_f1 && cand.values < best.values)) {
            outcome.best_row = r;
        }
    }
    return outcome;
}

std::string GridOutcome::to_csv() const {
    std::ostringstream os;
    for (const std::string& n : names) os << n << ',';
    os << "dev_macro_f1,epoch_of_best\n";
    char buf[64];
    for (const GridRow& row : rows) {
        for (double v : row.values) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            os << buf << ',';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", row.dev_macro_f1);
        os << buf << ',' << row.epoch_of_best << '\n';
    }
    return os.str();
}

}  // namespace memefuse
