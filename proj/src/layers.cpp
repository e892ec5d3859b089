#include "memefuse/layers.hpp"

#include <cmath>

namespace memefuse {

void zero_grads(ParamRegistry& params) {
    for (auto& p : params) p.grad->fill(0.0);
}

Dense::Dense(std::size_t in, std::size_t out, Activation act, Rng& rng) : act_(act) {
    w = init_uniform(rng, {out, in}, 1.0 / std::sqrt(static_cast<double>(in)));
    b = Tensor({out});
    dw = Tensor({out, in});
    db = Tensor({out});
}

Tensor Dense::forward(const Tensor& x) {
    x_ = x;
    pre_ = matvec(w, x);
    add_in_place(pre_, b);
    has_cache_ = true;
    return act_ == Activation::Relu ? relu(pre_) : pre_;
}

Tensor Dense::backward(const Tensor& dy) {
    if (!has_cache_) throw UsageError("Dense::backward: no cached forward pass");
    Tensor dz = dy;
    if (act_ == Activation::Relu) {
        for (std::size_t i = 0; i < dz.size(); ++i) {
            if (pre_[i] <= 0.0) dz[i] = 0.0;
        }
    }
    add_outer(dw, dz, x_);
    add_in_place(db, dz);
    return matvec_transposed(w, dz);
}

void Dense::register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.push_back({prefix + ".W", &w, &dw});
    reg.push_back({prefix + ".b", &b, &db});
}

Dropout::Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, bool training, Rng& rng) {
    if (!training || rate_ == 0.0) {
        active_ = false;
        return x;
    }
    double keep = 1.0 - rate_;
    mask_ = Tensor(x.shape());
    for (std::size_t i = 0; i < mask_.size(); ++i) {
        mask_[i] = rng.next_unit() < rate_ ? 0.0 : 1.0 / keep;
    }
    active_ = true;
    return hadamard(x, mask_);
}

Tensor Dropout::backward(const Tensor& dy) const {
    if (!active_) return dy;
    return hadamard(dy, mask_);
}

}  // namespace memefuse
