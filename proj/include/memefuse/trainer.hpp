#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "memefuse/metrics.hpp"
#include "memefuse/model.hpp"

namespace memefuse {

enum class OptimizerKind { Sgd, Adam };

OptimizerKind optimizer_from_name(const std::string& name);  // "sgd" | "adam"
std::string optimizer_name(OptimizerKind kind);

struct TrainConfig {
    std::size_t batch_size = 60;
    std::size_t epochs = 14;
    double learning_rate = 1e-5;
    std::uint64_t seed = 1;
    double dropout = 0.4;  // text-channel rate r (lives in the model; kept for the record)
    OptimizerKind optimizer = OptimizerKind::Adam;
    double dev_fraction = 0.2;
    std::vector<double> class_weights;  // empty = unweighted loss
    double stop_train_f1 = 0.0;         // stop once train macro-F1 reaches this; 0 disables

    void validate() const;
};

class Optimizer {
public:
    virtual ~Optimizer() = default;
    // Applies the accumulated gradients; throws DivergenceError on
    // non-finite gradients.
    virtual void step(ParamRegistry& params, double lr) = 0;

    static std::unique_ptr<Optimizer> make(OptimizerKind kind, const ParamRegistry& params);
};

class Sgd : public Optimizer {
public:
    void step(ParamRegistry& params, double lr) override;
};

// Bias-corrected Adam, beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
class Adam : public Optimizer {
public:
    explicit Adam(const ParamRegistry& params);
    void step(ParamRegistry& params, double lr) override;

private:
    std::vector<Tensor> m_, v_;
    std::size_t t_ = 0;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double mean_loss = 0.0;
    double train_macro_f1 = 0.0;
    double dev_macro_f1 = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

std::size_t predict_one(EnsembleMember& member, const SampleFeatures& sample);
double member_macro_f1(EnsembleMember& member, const std::vector<SampleFeatures>& samples);
// Soft vote across members, then macro-F1.
double ensemble_macro_f1(std::vector<std::unique_ptr<EnsembleMember>>& members,
                         const std::vector<SampleFeatures>& samples);

// Seeded mini-batch cross-entropy training of one member. The dev metric is
// computed on `dev` after each epoch (on `train` when dev is empty).
TrainHistory train_member(EnsembleMember& member, const std::vector<SampleFeatures>& train,
                          const std::vector<SampleFeatures>& dev, const TrainConfig& cfg);

struct EnsembleTrainResult {
    std::vector<TrainHistory> member_history;  // aligned with members
    std::vector<double> ensemble_dev_f1;       // per epoch
    std::size_t best_epoch = 0;                // 1-based; 0 when no epochs ran
    double final_dev_f1 = 0.0;
};

// Epoch-interleaved training of all members (each with its own derived
// shuffle stream), recording the ensemble dev macro-F1 after every epoch.
EnsembleTrainResult train_ensemble(std::vector<std::unique_ptr<EnsembleMember>>& members,
                                   const std::vector<SampleFeatures>& train,
                                   const std::vector<SampleFeatures>& dev,
                                   const TrainConfig& cfg,
                                   const std::function<void(const std::string&)>& progress = {});

// Seeded shuffle, then split; both halves nonempty.
template <class T>
std::pair<std::vector<T>, std::vector<T>> split_train_dev(const std::vector<T>& records,
                                                          double fraction, std::uint64_t seed) {
    if (records.size() < 2) throw UsageError("split: need at least 2 records");
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw UsageError("split: fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(order[i - 1], order[j]);
    }
    std::size_t dev_count = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(records.size())));
    if (dev_count == 0) dev_count = 1;
    if (dev_count >= records.size()) dev_count = records.size() - 1;
    std::pair<std::vector<T>, std::vector<T>> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < records.size() - dev_count) {
            out.first.push_back(records[order[i]]);
        } else {
            out.second.push_back(records[order[i]]);
        }
    }
    return out;
}

// ---- grid search ----

// Candidate values per tunable name; names come from the fixed set
// {h12, h3, r, d, c, m, l, p}.
struct GridSpec {
    std::map<std::string, std::vector<double>> values;

    static GridSpec load(const std::string& path);
    static GridSpec parse(const std::string& content, const std::string& origin);
    std::size_t combinations() const;
};

struct GridRow {
    std::vector<double> values;  // aligned with GridOutcome::names
    double dev_macro_f1 = 0.0;
    std::size_t epoch_of_best = 0;
};

struct GridOutcome {
    std::vector<std::string> names;  // sorted
    std::vector<GridRow> rows;       // enumeration order
    std::size_t best_row = 0;

    std::string to_csv() const;
};

using GridEvalFn =
    std::function<std::pair<double, std::size_t>(const std::map<std::string, double>&)>;

// Exhaustive Cartesian product in sorted-name order (last name fastest).
// Best row maximizes dev macro-F1; ties go to the numerically smallest
// parameter tuple.
GridOutcome grid_search(const GridSpec& grid, const GridEvalFn& evaluate);

extern const std::vector<std::string> kGridParameterNames;

}  // namespace memefuse
