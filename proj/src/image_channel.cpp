#include "memefuse/image_channel.hpp"

#include <cmath>

#include "memefuse/error.hpp"

namespace memefuse {

ConvLayerParams ConvLayerParams::init(std::size_t filters, std::size_t kernel, std::size_t c_in,
                                      Rng& rng) {
    if (kernel % 2 == 0) throw ConfigError("conv kernel length must be odd");
    ConvLayerParams p;
    double s = 1.0 / std::sqrt(static_cast<double>(kernel * kernel * c_in));
    p.kernels = init_uniform(rng, {filters, kernel, kernel, c_in}, s);
    p.bias = Tensor({filters});
    return p;
}

ConvLayerParams ConvLayerParams::zeros(std::size_t filters, std::size_t kernel,
                                       std::size_t c_in) {
    ConvLayerParams p;
    p.kernels = Tensor({filters, kernel, kernel, c_in});
    p.bias = Tensor({filters});
    return p;
}

void ConvLayerParams::check_consistent() const {
    if (kernels.rank() != 4 || bias.rank() != 1 || bias.size() != kernels.dim(0) ||
        kernels.dim(1) != kernels.dim(2) || kernels.dim(1) % 2 == 0) {
        throw ShapeError("conv layer: kernels " + shape_str(kernels) + ", bias " +
                         shape_str(bias));
    }
}

Tensor conv2d(const ConvLayerParams& p, const Tensor& input, Conv2dCache* cache) {
    p.check_consistent();
    if (input.rank() != 3 || input.dim(2) != p.in_channels()) {
        throw ShapeError("conv2d: input " + shape_str(input) + " vs kernels " +
                         shape_str(p.kernels));
    }
    std::size_t height = input.dim(0), width = input.dim(1), c_in = input.dim(2);
    std::size_t l = p.kernel(), m = p.filters();
    if (height < l || width < l) {
        throw ShapeError("conv2d: kernel " + std::to_string(l) + " larger than input " +
                         shape_str(input));
    }
    long pad = static_cast<long>(l / 2);
    Tensor pre({height, width, m});
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t f = 0; f < m; ++f) {
                double acc = p.bias[f];
                for (std::size_t ky = 0; ky < l; ++ky) {
                    long iy = static_cast<long>(y) + static_cast<long>(ky) - pad;
                    if (iy < 0 || iy >= static_cast<long>(height)) continue;
                    for (std::size_t kx = 0; kx < l; ++kx) {
                        long ix = static_cast<long>(x) + static_cast<long>(kx) - pad;
                        if (ix < 0 || ix >= static_cast<long>(width)) continue;
                        for (std::size_t c = 0; c < c_in; ++c) {
                            acc += p.kernels.at(f, ky, kx, c) *
                                   input.at(static_cast<std::size_t>(iy),
                                            static_cast<std::size_t>(ix), c);
                        }
                    }
                }
                pre.at(y, x, f) = acc;
            }
        }
    }
    Tensor out = relu(pre);
    if (cache) {
        cache->input = input;
        cache->pre = std::move(pre);
    }
    return out;
}

Tensor conv2d_backward(const ConvLayerParams& p, const Conv2dCache& cache, const Tensor& dout,
                       ConvLayerParams& pg) {
    const Tensor& input = cache.input;
    std::size_t height = input.dim(0), width = input.dim(1), c_in = input.dim(2);
    std::size_t l = p.kernel(), m = p.filters();
    if (!dout.same_shape(cache.pre)) {
        throw ShapeError("conv2d_backward: upstream " + shape_str(dout) + " vs " +
                         shape_str(cache.pre));
    }
    long pad = static_cast<long>(l / 2);
    Tensor dinput(input.shape());
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t f = 0; f < m; ++f) {
                if (cache.pre.at(y, x, f) <= 0.0) continue;  // ReLU gate
                double d = dout.at(y, x, f);
                if (d == 0.0) continue;
                pg.bias[f] += d;
                for (std::size_t ky = 0; ky < l; ++ky) {
                    long iy = static_cast<long>(y) + static_cast<long>(ky) - pad;
                    if (iy < 0 || iy >= static_cast<long>(height)) continue;
                    for (std::size_t kx = 0; kx < l; ++kx) {
                        long ix = static_cast<long>(x) + static_cast<long>(kx) - pad;
                        if (ix < 0 || ix >= static_cast<long>(width)) continue;
                        for (std::size_t c = 0; c < c_in; ++c) {
                            std::size_t uy = static_cast<std::size_t>(iy);
                            std::size_t ux = static_cast<std::size_t>(ix);
                            pg.kernels.at(f, ky, kx, c) += d * input.at(uy, ux, c);
                            dinput.at(uy, ux, c) += d * p.kernels.at(f, ky, kx, c);
                        }
                    }
                }
            }
        }
    }
    return dinput;
}

Tensor maxpool2(const Tensor& input, MaxPool2Cache* cache) {
    if (input.rank() != 3 || input.dim(0) == 0 || input.dim(1) == 0) {
        throw ShapeError("maxpool2: input " + shape_str(input));
    }
    std::size_t height = input.dim(0), width = input.dim(1), channels = input.dim(2);
    std::size_t oh = (height + 1) / 2, ow = (width + 1) / 2;
    Tensor out({oh, ow, channels});
    if (cache) {
        cache->argmax.assign(oh * ow * channels, 0);
        cache->in_shape = input.shape();
    }
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            for (std::size_t c = 0; c < channels; ++c) {
                double best = -HUGE_VAL;
                std::size_t best_idx = 0;
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    std::size_t iy = 2 * y + dy;
                    if (iy >= height) break;
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        std::size_t ix = 2 * x + dx;
                        if (ix >= width) break;
                        double v = input.at(iy, ix, c);
                        if (v > best) {  // strict: first max wins ties
                            best = v;
                            best_idx = (iy * width + ix) * channels + c;
                        }
                    }
                }
                out.at(y, x, c) = best;
                if (cache) cache->argmax[(y * ow + x) * channels + c] = best_idx;
            }
        }
    }
    return out;
}

Tensor maxpool2_backward(const MaxPool2Cache& cache, const Tensor& dout) {
    if (cache.in_shape.empty()) throw UsageError("maxpool2_backward: no cached forward pass");
    Tensor dinput(cache.in_shape);
    if (dout.size() != cache.argmax.size()) {
        throw ShapeError("maxpool2_backward: upstream " + shape_str(dout));
    }
    for (std::size_t i = 0; i < cache.argmax.size(); ++i) {
        dinput[cache.argmax[i]] += dout[i];
    }
    return dinput;
}

CnnExtractor::CnnExtractor(const ImageChannelConfig& cfg, Rng& rng) : cfg_(cfg) {
    if (cfg.conv_layers == 0) throw ConfigError("image channel: conv layer count must be >= 1");
    if (cfg.kernel % 2 == 0) throw ConfigError("image channel: kernel length must be odd");
    if (cfg.filters == 0) throw ConfigError("image channel: filter count must be >= 1");
    if (cfg.input_size < cfg.kernel) {
        throw ConfigError("image channel: input size smaller than kernel");
    }
    drop_ = Dropout(cfg.dropout);
    std::size_t c_in = cfg.channels;
    for (std::size_t k = 0; k < cfg.conv_layers; ++k) {
        layers_.push_back(ConvLayerParams::init(cfg.filters, cfg.kernel, c_in, rng));
        layer_grads_.push_back(ConvLayerParams::zeros(cfg.filters, cfg.kernel, c_in));
        pooled_after_.push_back((k + 1) % 2 == 0);  // pool after every second conv
        c_in = cfg.filters;
    }
}

std::size_t CnnExtractor::feature_dim_for(const ImageChannelConfig& cfg) {
    std::size_t side = cfg.input_size;
    for (std::size_t k = 0; k < cfg.conv_layers; ++k) {
        if ((k + 1) % 2 == 0) side = (side + 1) / 2;
    }
    return side * side * cfg.filters;
}

std::size_t CnnExtractor::feature_dim() const { return feature_dim_for(cfg_); }

ImageFeature CnnExtractor::extract(const Tensor& image, bool training, Rng& drop_rng) {
    if (image.rank() != 3 || image.dim(0) != cfg_.input_size || image.dim(1) != cfg_.input_size ||
        image.dim(2) != cfg_.channels) {
        throw ShapeError("image channel: image " + shape_str(image) + " vs configured " +
                         std::to_string(cfg_.input_size) + "x" + std::to_string(cfg_.input_size) +
                         "x" + std::to_string(cfg_.channels));
    }
    conv_caches_.assign(layers_.size(), Conv2dCache{});
    pool_caches_.assign(layers_.size(), MaxPool2Cache{});
    Tensor h = image;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        h = conv2d(layers_[k], h, &conv_caches_[k]);
        if (pooled_after_[k]) h = maxpool2(h, &pool_caches_[k]);
    }
    flat_shape_ = h.shape();
    Tensor flat = h.reshaped({h.size()});
    return {drop_.forward(flat, training, drop_rng), 1};
}

Tensor CnnExtractor::backward(const Tensor& dfeature) {
    if (conv_caches_.empty()) throw UsageError("CnnExtractor::backward: no cached forward pass");
    Tensor dh = drop_.backward(dfeature).reshaped(flat_shape_);
    for (std::size_t k = layers_.size(); k-- > 0;) {
        if (pooled_after_[k]) dh = maxpool2_backward(pool_caches_[k], dh);
        dh = conv2d_backward(layers_[k], conv_caches_[k], dh, layer_grads_[k]);
    }
    return dh;
}

void CnnExtractor::register_params(ParamRegistry& reg, const std::string& prefix) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        std::string base = prefix + ".conv" + std::to_string(k + 1);
        reg.push_back({base + ".K", &layers_[k].kernels, &layer_grads_[k].kernels});
        reg.push_back({base + ".b", &layers_[k].bias, &layer_grads_[k].bias});
    }
}

ProjectionExtractor::ProjectionExtractor(std::size_t in_dim, std::size_t out_dim, Rng& rng)
    : dense_(in_dim, out_dim, Activation::Relu, rng) {}

ImageFeature ProjectionExtractor::extract(const Tensor& vec) {
    if (vec.rank() != 1 || vec.size() != dense_.in_dim()) {
        throw DataError("image projection: vector " + shape_str(vec) + " vs expected dim " +
                        std::to_string(dense_.in_dim()));
    }
    return {dense_.forward(vec), 2};
}

Tensor ProjectionExtractor::backward(const Tensor& dfeature) { return dense_.backward(dfeature); }

void ProjectionExtractor::register_params(ParamRegistry& reg, const std::string& prefix) {
    dense_.register_params(reg, prefix + ".proj");
}

}  // namespace memefuse
