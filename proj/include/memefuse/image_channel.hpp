#pragma once

#include <string>
#include <vector>

#include "memefuse/layers.hpp"
#include "memefuse/tensor.hpp"

namespace memefuse {

// One bank of same-padding convolution kernels. Kernel length must be odd.
struct ConvLayerParams {
    Tensor kernels;  // m x l x l x c_in
    Tensor bias;     // m

    static ConvLayerParams init(std::size_t filters, std::size_t kernel, std::size_t c_in,
                                Rng& rng);
    static ConvLayerParams zeros(std::size_t filters, std::size_t kernel, std::size_t c_in);

    std::size_t filters() const { return kernels.dim(0); }
    std::size_t kernel() const { return kernels.dim(1); }
    std::size_t in_channels() const { return kernels.dim(3); }
    void check_consistent() const;
};

struct Conv2dCache {
    Tensor input;  // H x W x c_in
    Tensor pre;    // H x W x m, before ReLU
};

// Same-padded cross-correlation plus bias, then ReLU: H x W x c_in -> H x W x m.
Tensor conv2d(const ConvLayerParams& p, const Tensor& input, Conv2dCache* cache = nullptr);

// Accumulates kernel/bias gradients into `pg`; returns dL/dinput.
Tensor conv2d_backward(const ConvLayerParams& p, const Conv2dCache& cache, const Tensor& dout,
                       ConvLayerParams& pg);

struct MaxPool2Cache {
    std::vector<std::size_t> argmax;  // flat input index per output cell
    std::vector<std::size_t> in_shape;
};

// 2x2 windows, stride 2, per-channel max; ragged edge windows allowed:
// H x W x C -> ceil(H/2) x ceil(W/2) x C. Ties go to the first element in
// row-major order, which also receives the full gradient.
Tensor maxpool2(const Tensor& input, MaxPool2Cache* cache = nullptr);

Tensor maxpool2_backward(const MaxPool2Cache& cache, const Tensor& dout);

struct ImageFeature {
    Tensor vector;
    int extractor_id;
};

struct ImageChannelConfig {
    std::size_t conv_layers = 6;  // c
    std::size_t filters = 64;     // m
    std::size_t kernel = 3;       // l
    double dropout = 0.2;         // p, applied to the flattened feature
    std::size_t input_size = 64;  // images are resized to input_size x input_size
    std::size_t channels = 3;
    std::size_t proj_dim = 256;   // output width of the j=2 projection
};

// j=1: c same-padding conv layers with a 2x2 max pool after every second
// layer, flattened, with dropout on the feature during training.
class CnnExtractor {
public:
    CnnExtractor() = default;
    CnnExtractor(const ImageChannelConfig& cfg, Rng& rng);

    ImageFeature extract(const Tensor& image, bool training, Rng& drop_rng);
    Tensor backward(const Tensor& dfeature);  // -> dL/dimage

    void register_params(ParamRegistry& reg, const std::string& prefix);
    std::size_t feature_dim() const;
    static std::size_t feature_dim_for(const ImageChannelConfig& cfg);

private:
    ImageChannelConfig cfg_;
    std::vector<ConvLayerParams> layers_, layer_grads_;
    std::vector<Conv2dCache> conv_caches_;
    std::vector<MaxPool2Cache> pool_caches_;
    std::vector<bool> pooled_after_;  // per conv layer
    Dropout drop_;
    std::vector<std::size_t> flat_shape_;
};

// j=2: trainable ReLU projection over a precomputed feature vector (the
// stand-in for a frozen pretrained backbone).
class ProjectionExtractor {
public:
    ProjectionExtractor() = default;
    ProjectionExtractor(std::size_t in_dim, std::size_t out_dim, Rng& rng);

    ImageFeature extract(const Tensor& vec);
    Tensor backward(const Tensor& dfeature);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    std::size_t feature_dim() const { return dense_.out_dim(); }
    std::size_t in_dim() const { return dense_.in_dim(); }

private:
    Dense dense_;
};

}  // namespace memefuse
