#include "memefuse/fusion.hpp"

#include <cmath>

#include "memefuse/error.hpp"

namespace memefuse {

void MemberSpec::validate() const {
    if (text_extractor < 1 || text_extractor > 4) {
        throw ConfigError("member: text extractor must be in {1..4}, got " +
                          std::to_string(text_extractor));
    }
    if (image_extractor < 1 || image_extractor > 2) {
        throw ConfigError("member: image extractor must be in {1,2}, got " +
                          std::to_string(image_extractor));
    }
    if (class_count < 2) throw ConfigError("member: class count must be >= 2");
}

std::string MemberSpec::name() const {
    return "m" + std::to_string(text_extractor) + "_" + std::to_string(image_extractor);
}

FusionHead::FusionHead(std::size_t text_dim, std::size_t image_dim, std::size_t dense_size,
                       std::size_t class_count, Rng& rng)
    : text_dim_(text_dim), image_dim_(image_dim), has_hidden_(dense_size > 0) {
    std::size_t in = text_dim + image_dim;
    if (has_hidden_) {
        hidden_ = Dense(in, dense_size, Activation::Relu, rng);
        out_ = Dense(dense_size, class_count, Activation::None, rng);
    } else {
        out_ = Dense(in, class_count, Activation::None, rng);
    }
}

Prediction FusionHead::forward(const Tensor& text_feat, const Tensor& image_feat) {
    if (text_feat.size() != text_dim_ || image_feat.size() != image_dim_) {
        throw ShapeError("fusion head: features " + shape_str(text_feat) + " and " +
                         shape_str(image_feat) + " vs expected " + std::to_string(text_dim_) +
                         " and " + std::to_string(image_dim_));
    }
    Tensor x = concat(text_feat, image_feat, 0);
    Tensor logits = has_hidden_ ? out_.forward(hidden_.forward(x)) : out_.forward(x);
    probs_ = softmax(logits, 0);
    has_cache_ = true;
    return {probs_};
}

std::pair<Tensor, Tensor> FusionHead::backward(const Tensor& dlogits) {
    if (!has_cache_) throw UsageError("FusionHead::backward: no cached forward pass");
    Tensor dx = out_.backward(dlogits);
    if (has_hidden_) dx = hidden_.backward(dx);
    return {slice1d(dx, 0, text_dim_), slice1d(dx, text_dim_, dx.size())};
}

Tensor FusionHead::loss_grad(int label, double grad_scale) const {
    if (!has_cache_) throw UsageError("FusionHead::loss_grad: no cached forward pass");
    Tensor d(probs_.shape());
    for (std::size_t k = 0; k < probs_.size(); ++k) d[k] = grad_scale * probs_[k];
    d[static_cast<std::size_t>(label)] -= grad_scale;
    return d;
}

double FusionHead::loss(int label) const {
    if (!has_cache_) throw UsageError("FusionHead::loss: no cached forward pass");
    return -std::log(probs_[static_cast<std::size_t>(label)]);
}

void FusionHead::register_params(ParamRegistry& reg, const std::string& prefix) {
    if (has_hidden_) hidden_.register_params(reg, prefix + ".fc1");
    out_.register_params(reg, prefix + ".fc2");
}

Prediction soft_vote(const std::vector<Prediction>& members, const std::vector<double>* weights) {
    if (members.empty()) throw UsageError("soft_vote: no member predictions");
    std::size_t k = members.front().probs.size();
    for (const Prediction& p : members) {
        if (p.probs.size() != k) {
            throw ShapeError("soft_vote: prediction size mismatch: " + shape_str(p.probs) +
                             " vs [" + std::to_string(k) + "]");
        }
    }
    std::vector<double> w(members.size(), 1.0);
    if (weights) {
        if (weights->size() != members.size()) {
            throw UsageError("soft_vote: " + std::to_string(weights->size()) + " weights for " +
                             std::to_string(members.size()) + " members");
        }
        w = *weights;
        for (double v : w) {
            if (v < 0.0) throw UsageError("soft_vote: weights must be nonnegative");
        }
    }
    double wsum = 0.0;
    for (double v : w) wsum += v;
    if (wsum == 0.0) throw UsageError("soft_vote: weights must not all be zero");

    Tensor out({k});
    for (std::size_t m = 0; m < members.size(); ++m) {
        add_scaled(out, members[m].probs, w[m]);
    }
    if (wsum != 1.0) {
        for (std::size_t i = 0; i < k; ++i) out[i] /= wsum;
    }
    return {std::move(out)};
}

std::size_t predict_label(const Prediction& p) {
    if (p.probs.size() == 0) throw UsageError("predict_label: empty prediction");
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.probs.size(); ++i) {
        if (p.probs[i] > p.probs[best]) best = i;
    }
    return best;
}

}  // namespace memefuse
