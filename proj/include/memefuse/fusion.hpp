#pragma once

#include <string>
#include <vector>

#include "memefuse/layers.hpp"
#include "memefuse/tensor.hpp"

namespace memefuse {

// One ensemble member: which text extractor, which image extractor, and the
// head that classifies their concatenated features.
struct MemberSpec {
    int text_extractor = 1;   // i in {1..4}
    int image_extractor = 1;  // j in {1,2}
    std::size_t dense_size = 128;  // d; 0 selects the single-layer head
    std::size_t class_count = 3;   // K

    void validate() const;
    std::string name() const;  // "m<i>_<j>"
};

struct Prediction {
    Tensor probs;  // K, nonnegative, sums to 1
};

// concat -> dense(d, ReLU) -> dense(K) -> softmax. With d = 0 the hidden
// layer is skipped.
class FusionHead {
public:
    FusionHead() = default;
    FusionHead(std::size_t text_dim, std::size_t image_dim, std::size_t dense_size,
               std::size_t class_count, Rng& rng);

    Prediction forward(const Tensor& text_feat, const Tensor& image_feat);
    // Upstream gradient w.r.t. the logits; returns (dtext, dimage).
    std::pair<Tensor, Tensor> backward(const Tensor& dlogits);

    // dL/dlogits of the cross-entropy -log p[label], scaled by `grad_scale`
    // (the 1/batch factor times any class weight).
    Tensor loss_grad(int label, double grad_scale) const;
    double loss(int label) const;  // -log p[label]

    void register_params(ParamRegistry& reg, const std::string& prefix);
    std::size_t class_count() const { return out_.out_dim(); }
    std::size_t text_dim() const { return text_dim_; }
    std::size_t image_dim() const { return image_dim_; }

private:
    std::size_t text_dim_ = 0, image_dim_ = 0;
    bool has_hidden_ = false;
    Dense hidden_, out_;
    Tensor probs_;
    bool has_cache_ = false;
};

// Weighted arithmetic mean of member probability vectors. Weights default
// to uniform; they must be nonnegative and not all zero.
Prediction soft_vote(const std::vector<Prediction>& members,
                     const std::vector<double>* weights = nullptr);

// Argmax with ties broken toward the lowest class index.
std::size_t predict_label(const Prediction& p);

}  // namespace memefuse
