#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace memefuse {

// K x K counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t classes);

    std::size_t classes() const { return classes_; }
    std::size_t at(std::size_t truth, std::size_t pred) const;
    std::size_t& at(std::size_t truth, std::size_t pred);
    std::size_t total() const;
    std::size_t support(std::size_t truth) const;  // row sum

private:
    std::size_t classes_ = 0;
    std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(const std::vector<std::size_t>& y_true,
                          const std::vector<std::size_t>& y_pred, std::size_t classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    double macro_f1 = 0.0;
    // extra fields, not the official metric
    double micro_f1 = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;

    std::string to_json() const;
    std::string to_table() const;  // aligned plain text
};

// Per class: P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); every 0/0 is 0.
// macro_f1 averages all K classes; pass include_zero_support = false to
// average only classes that appear in y_true.
MetricsReport macro_f1(const ConfusionMatrix& cm, bool include_zero_support = true);

}  // namespace memefuse
