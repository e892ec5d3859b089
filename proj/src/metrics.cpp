#include "memefuse/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "memefuse/error.hpp"

#include "json.hpp"

namespace memefuse {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {}

std::size_t ConfusionMatrix::at(std::size_t truth, std::size_t pred) const {
    if (truth >= classes_ || pred >= classes_) throw UsageError("confusion: index out of range");
    return counts_[truth * classes_ + pred];
}

std::size_t& ConfusionMatrix::at(std::size_t truth, std::size_t pred) {
    if (truth >= classes_ || pred >= classes_) throw UsageError("confusion: index out of range");
    return counts_[truth * classes_ + pred];
}

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (std::size_t c : counts_) n += c;
    return n;
}

std::size_t ConfusionMatrix::support(std::size_t truth) const {
    std::size_t n = 0;
    for (std::size_t p = 0; p < classes_; ++p) n += at(truth, p);
    return n;
}

ConfusionMatrix confusion(const std::vector<std::size_t>& y_true,
                          const std::vector<std::size_t>& y_pred, std::size_t classes) {
    if (y_true.size() != y_pred.size()) {
        throw UsageError("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                         std::to_string(y_pred.size()) + " predictions");
    }
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] >= classes || y_pred[i] >= classes) {
            throw UsageError("confusion: label out of range at record " + std::to_string(i) +
                             " (K=" + std::to_string(classes) + ")");
        }
        ++cm.at(y_true[i], y_pred[i]);
    }
    return cm;
}

MetricsReport macro_f1(const ConfusionMatrix& cm, bool include_zero_support) {
    std::size_t k = cm.classes();
    if (k == 0) throw UsageError("macro_f1: empty confusion matrix");
    MetricsReport report;
    report.per_class.resize(k);
    double f1_sum = 0.0;
    std::size_t f1_count = 0;
    std::size_t tp_total = 0;
    double weighted = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = cm.at(c, c);
        std::size_t fp = 0, fn = 0;
        for (std::size_t o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        ClassMetrics& m = report.per_class[c];
        m.support = tp + fn;
        m.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
        m.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
        m.f1 = (m.precision + m.recall) == 0.0
                   ? 0.0
                   : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        if (include_zero_support || m.support > 0) {
            f1_sum += m.f1;
            ++f1_count;
        }
        tp_total += tp;
        weighted += m.f1 * static_cast<double>(m.support);
    }
    std::size_t n = cm.total();
    report.macro_f1 = f1_count == 0 ? 0.0 : f1_sum / static_cast<double>(f1_count);
    report.accuracy = n == 0 ? 0.0 : static_cast<double>(tp_total) / static_cast<double>(n);
    // single-label multiclass: micro P = micro R = accuracy
    report.micro_f1 = report.accuracy;
    report.weighted_f1 = n == 0 ? 0.0 : weighted / static_cast<double>(n);
    return report;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["macro_f1"] = macro_f1;
    j["micro_f1"] = micro_f1;
    j["weighted_f1"] = weighted_f1;
    j["accuracy"] = accuracy;
    j["classes"] = nlohmann::json::array();
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        const ClassMetrics& m = per_class[c];
        j["classes"].push_back({{"class", c},
                                {"precision", m.precision},
                                {"recall", m.recall},
                                {"f1", m.f1},
                                {"support", m.support}});
    }
    return j.dump();
}

std::string MetricsReport::to_table() const {
    std::ostringstream os;
    char buf[128];
    os << "class  precision  recall     f1         support\n";
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        const ClassMetrics& m = per_class[c];
        std::snprintf(buf, sizeof(buf), "%-5zu  %-9.4f  %-9.4f  %-9.4f  %zu\n", c, m.precision,
                      m.recall, m.f1, m.support);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "macro_f1 %.6f  micro_f1 %.6f  weighted_f1 %.6f\n", macro_f1,
                  micro_f1, weighted_f1);
    os << buf;
    return os.str();
}

}  // namespace memefuse
