#pragma once

#include <string>
#include <vector>

#include "memefuse/tensor.hpp"

namespace memefuse {

// Named view of one trainable tensor and its gradient accumulator.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

using ParamRegistry = std::vector<ParamRef>;

void zero_grads(ParamRegistry& params);

enum class Activation { None, Relu };

// Fully connected layer y = act(W x + b), W out-by-in.
class Dense {
public:
    Dense() = default;
    // W ~ U(+-1/sqrt(in)), b = 0.
    Dense(std::size_t in, std::size_t out, Activation act, Rng& rng);

    Tensor forward(const Tensor& x);
    // Accumulates parameter gradients, returns dL/dx.
    Tensor backward(const Tensor& dy);

    void register_params(ParamRegistry& reg, const std::string& prefix);

    std::size_t in_dim() const { return w.dim(1); }
    std::size_t out_dim() const { return w.dim(0); }

    Tensor w, b;
    Tensor dw, db;

private:
    Activation act_ = Activation::None;
    Tensor x_, pre_;
    bool has_cache_ = false;
};

// Inverted dropout: scales kept activations by 1/(1-rate) during training
// so inference is a no-op.
class Dropout {
public:
    Dropout() = default;
    explicit Dropout(double rate);

    Tensor forward(const Tensor& x, bool training, Rng& rng);
    Tensor backward(const Tensor& dy) const;

    double rate() const { return rate_; }

private:
    double rate_ = 0.0;
    Tensor mask_;  // already scaled
    bool active_ = false;
};

}  // namespace memefuse
