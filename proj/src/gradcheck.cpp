#include "memefuse/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "memefuse/error.hpp"
#include "memefuse/fusion.hpp"
#include "memefuse/image_channel.hpp"
#include "memefuse/layers.hpp"
#include "memefuse/text_channel.hpp"

namespace memefuse {

double max_relative_error(const std::vector<GradCheckSlot>& slots,
                          const std::function<double()>& loss,
                          const std::function<void()>& backprop, double step) {
    backprop();
    std::vector<Tensor> analytic;
    analytic.reserve(slots.size());
    for (const GradCheckSlot& s : slots) analytic.push_back(*s.grad);

    double worst = 0.0;
    for (std::size_t si = 0; si < slots.size(); ++si) {
        Tensor& value = *slots[si].value;
        for (std::size_t k = 0; k < value.size(); ++k) {
            double saved = value[k];
            value[k] = saved + step;
            double up = loss();
            value[k] = saved - step;
            double down = loss();
            value[k] = saved;
            double numeric = (up - down) / (2.0 * step);
            double a = analytic[si][k];
            double rel = std::fabs(a - numeric) / std::max(std::fabs(a) + std::fabs(numeric), 1e-8);
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

namespace {

// Probe loss: dot(fixed random weights, flattened output). Keeps every
// output coordinate in play while staying linear above the layer.

double check_dense(std::uint64_t seed) {
    Rng rng(seed);
    Dense layer(5, 4, Activation::Relu, rng);
    Tensor probe = init_uniform(rng, {4}, 1.0);
    Tensor x({5});
    // keep every ReLU pre-activation away from the kink
    for (;;) {
        x = init_uniform(rng, {5}, 1.0);
        Tensor pre = add(matvec(layer.w, x), layer.b);
        bool ok = true;
        for (std::size_t i = 0; i < pre.size(); ++i) {
            if (std::fabs(pre[i]) < 1e-3) ok = false;
        }
        if (ok) break;
    }
    Tensor dx({5});
    auto loss = [&]() { return dot(probe, layer.forward(x)); };
    auto backprop = [&]() {
        layer.dw.fill(0.0);
        layer.db.fill(0.0);
        layer.forward(x);
        dx = layer.backward(probe);
    };
    return max_relative_error({{"W", &layer.w, &layer.dw},
                               {"b", &layer.b, &layer.db},
                               {"x", &x, &dx}},
                              loss, backprop);
}

double check_lstm(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t h = 4, d = 3, t_len = 3;
    LstmLayer layer(h, d, rng);
    Tensor xs = init_uniform(rng, {t_len, d}, 1.0);
    Tensor probe = init_uniform(rng, {t_len, h}, 1.0);
    Tensor dxs({t_len, d});
    auto loss = [&]() { return dot(probe, layer.forward(xs, t_len)); };
    auto backprop = [&]() {
        ParamRegistry reg;
        layer.register_params(reg, "lstm");
        zero_grads(reg);
        layer.forward(xs, t_len);
        dxs = layer.backward(probe);
    };
    std::vector<GradCheckSlot> slots = {
        {"W_f", &layer.params.w_forget, &layer.grads.w_forget},
        {"W_i", &layer.params.w_input, &layer.grads.w_input},
        {"W_o", &layer.params.w_output, &layer.grads.w_output},
        {"W_c", &layer.params.w_cand, &layer.grads.w_cand},
        {"b_f", &layer.params.b_forget, &layer.grads.b_forget},
        {"b_i", &layer.params.b_input, &layer.grads.b_input},
        {"b_o", &layer.params.b_output, &layer.grads.b_output},
        {"b_c", &layer.params.b_cand, &layer.grads.b_cand},
        {"x", &xs, &dxs},
    };
    return max_relative_error(slots, loss, backprop);
}

double check_gru(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t h = 4, d = 3, t_len = 3;
    GruLayer layer(h, d, rng);
    Tensor xs = init_uniform(rng, {t_len, d}, 1.0);
    Tensor probe = init_uniform(rng, {t_len, h}, 1.0);
    Tensor dxs({t_len, d});
    auto loss = [&]() { return dot(probe, layer.forward(xs, t_len)); };
    auto backprop = [&]() {
        ParamRegistry reg;
        layer.register_params(reg, "gru");
        zero_grads(reg);
        layer.forward(xs, t_len);
        dxs = layer.backward(probe);
    };
    std::vector<GradCheckSlot> slots = {
        {"W_z", &layer.params.w_update, &layer.grads.w_update},
        {"W_r", &layer.params.w_reset, &layer.grads.w_reset},
        {"W_h", &layer.params.w_cand, &layer.grads.w_cand},
        {"b_z", &layer.params.b_update, &layer.grads.b_update},
        {"b_r", &layer.params.b_reset, &layer.grads.b_reset},
        {"b_h", &layer.params.b_cand, &layer.grads.b_cand},
        {"x", &xs, &dxs},
    };
    return max_relative_error(slots, loss, backprop);
}

double check_attention(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t a = 3, s = 4, t_len = 5;
    Attention layer(a, s, rng);
    Tensor states = init_uniform(rng, {t_len, s}, 1.0);
    Tensor probe = init_uniform(rng, {s}, 1.0);
    Tensor dstates({t_len, s});
    auto loss = [&]() { return dot(probe, layer.forward(states, t_len)); };
    auto backprop = [&]() {
        layer.grads.w_score.fill(0.0);
        layer.grads.v_query.fill(0.0);
        layer.forward(states, t_len);
        dstates = layer.backward(probe);
    };
    std::vector<GradCheckSlot> slots = {
        {"W_a", &layer.params.w_score, &layer.grads.w_score},
        {"v_a", &layer.params.v_query, &layer.grads.v_query},
        {"states", &states, &dstates},
    };
    return max_relative_error(slots, loss, backprop);
}

double check_conv2d(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t m = 2, l = 3, c_in = 2, side = 5;
    ConvLayerParams params = ConvLayerParams::init(m, l, c_in, rng);
    ConvLayerParams grads = ConvLayerParams::zeros(m, l, c_in);
    Tensor input({side, side, c_in});
    Conv2dCache cache;
    // keep ReLU pre-activations away from the kink
    for (;;) {
        input = init_uniform(rng, {side, side, c_in}, 1.0);
        conv2d(params, input, &cache);
        bool ok = true;
        for (std::size_t i = 0; i < cache.pre.size(); ++i) {
            if (std::fabs(cache.pre[i]) < 1e-3) ok = false;
        }
        if (ok) break;
    }
    Tensor probe = init_uniform(rng, {side, side, m}, 1.0);
    Tensor dinput(input.shape());
    auto loss = [&]() {
        Conv2dCache c;
        return dot(probe, conv2d(params, input, &c));
    };
    auto backprop = [&]() {
        grads.kernels.fill(0.0);
        grads.bias.fill(0.0);
        conv2d(params, input, &cache);
        dinput = conv2d_backward(params, cache, probe, grads);
    };
    std::vector<GradCheckSlot> slots = {
        {"K", &params.kernels, &grads.kernels},
        {"b", &params.bias, &grads.bias},
        {"input", &input, &dinput},
    };
    return max_relative_error(slots, loss, backprop);
}

double check_maxpool2(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t side = 5, channels = 2;  // ragged edge included
    Tensor input({side, side, channels});
    // separate window entries so the step never flips an argmax
    for (;;) {
        input = init_uniform(rng, {side, side, channels}, 1.0);
        MaxPool2Cache probe_cache;
        Tensor out = maxpool2(input, &probe_cache);
        bool ok = true;
        for (std::size_t y = 0; y < side && ok; y += 2) {
            for (std::size_t x = 0; x < side && ok; x += 2) {
                for (std::size_t c = 0; c < channels && ok; ++c) {
                    double best = out.at(y / 2, x / 2, c);
                    for (std::size_t dy = 0; dy < 2 && ok; ++dy) {
                        for (std::size_t dx = 0; dx < 2 && ok; ++dx) {
                            if (y + dy >= side || x + dx >= side) continue;
                            double v = input.at(y + dy, x + dx, c);
                            if (v != best && std::fabs(v - best) < 1e-3) ok = false;
                        }
                    }
                }
            }
        }
        if (ok) break;
    }
    MaxPool2Cache cache;
    Tensor first = maxpool2(input, &cache);
    Tensor probe = init_uniform(rng, first.shape(), 1.0);
    Tensor dinput(input.shape());
    auto loss = [&]() { return dot(probe, maxpool2(input)); };
    auto backprop = [&]() {
        maxpool2(input, &cache);
        dinput = maxpool2_backward(cache, probe);
    };
    return max_relative_error({{"input", &input, &dinput}}, loss, backprop);
}

double check_fusion_head(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t text_dim = 5, image_dim = 4, d = 4, k = 3;
    FusionHead head(text_dim, image_dim, d, k, rng);
    Tensor text_feat = init_uniform(rng, {text_dim}, 1.0);
    Tensor image_feat = init_uniform(rng, {image_dim}, 1.0);
    int label = static_cast<int>(seed % k);
    ParamRegistry reg;
    head.register_params(reg, "head");
    Tensor dtext({text_dim}), dimage({image_dim});
    auto loss = [&]() {
        head.forward(text_feat, image_feat);
        return head.loss(label);
    };
    auto backprop = [&]() {
        zero_grads(reg);
        head.forward(text_feat, image_feat);
        auto [dt, di] = head.backward(head.loss_grad(label, 1.0));
        dtext = dt;
        dimage = di;
    };
    std::vector<GradCheckSlot> slots;
    for (ParamRef& p : reg) slots.push_back({p.name, p.value, p.grad});
    slots.push_back({"text", &text_feat, &dtext});
    slots.push_back({"image", &image_feat, &dimage});
    return max_relative_error(slots, loss, backprop);
}

}  // namespace

const std::vector<std::string> kGradCheckLayers = {
    "dense", "lstm", "gru", "attention", "conv2d", "maxpool2", "fusion_head"};

double gradient_check_layer(const std::string& layer, std::uint64_t seed) {
    if (layer == "dense") return check_dense(seed);
    if (layer == "lstm") return check_lstm(seed);
    if (layer == "gru") return check_gru(seed);
    if (layer == "attention") return check_attention(seed);
    if (layer == "conv2d") return check_conv2d(seed);
    if (layer == "maxpool2") return check_maxpool2(seed);
    if (layer == "fusion_head") return check_fusion_head(seed);
    throw ConfigError("gradient check: unknown layer '" + layer + "'");
}

std::vector<LayerCheckResult> gradient_check_all(std::size_t seeds) {
    std::vector<LayerCheckResult> results;
    for (const std::string& layer : kGradCheckLayers) {
        LayerCheckResult r{layer, 0.0};
        for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
            r.max_rel_err = std::max(r.max_rel_err, gradient_check_layer(layer, seed));
        }
        results.push_back(r);
    }
    return results;
}

}  // namespace memefuse
