#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "memefuse/tensor.hpp"

namespace memefuse {

struct GradCheckSlot {
    std::string name;
    Tensor* value;
    Tensor* grad;  // where the analytic gradient lands after backprop()
};

// Central finite differences over every component of every slot.
// `loss` recomputes the full forward pass; `backprop` zeroes the gradient
// slots, runs forward and fills them analytically. Relative error is
// |a - n| / max(|a| + |n|, 1e-8).
double max_relative_error(const std::vector<GradCheckSlot>& slots,
                          const std::function<double()>& loss,
                          const std::function<void()>& backprop, double step = 1e-5);

// One small seeded instance of the named layer; returns the worst relative
// error across parameters and inputs. Layers: dense, lstm, gru, attention,
// conv2d, maxpool2, fusion_head.
double gradient_check_layer(const std::string& layer, std::uint64_t seed);

struct LayerCheckResult {
    std::string layer;
    double max_rel_err = 0.0;
};

// Every layer over seeds 1..seeds; per layer, the max across seeds.
std::vector<LayerCheckResult> gradient_check_all(std::size_t seeds);

extern const std::vector<std::string> kGradCheckLayers;
inline constexpr double kGradCheckTolerance = 1e-4;

}  // namespace memefuse
