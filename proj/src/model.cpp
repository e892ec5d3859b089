#include "memefuse/model.hpp"

#include "memefuse/error.hpp"

namespace memefuse {

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kDropoutStream = 1;

TextChannelConfig adjusted_text_cfg(const MemberSpec& spec, TextChannelConfig cfg) {
    // The sentence path's dense output mirrors the fusion dense size; with a
    // single-layer head (d = 0) it keeps the configured default.
    if (spec.dense_size > 0) cfg.dense_out = spec.dense_size;
    return cfg;
}

}  // namespace

EnsembleMember::EnsembleMember(const MemberSpec& spec, const TextChannelConfig& text_cfg,
                               const ImageChannelConfig& image_cfg, std::size_t image_vec_dim,
                               std::uint64_t seed)
    : spec_(spec),
      seed_(seed),
      init_rng_(derive_seed(seed, kInitStream)),
      text_(text_model_from_id(spec.text_extractor), adjusted_text_cfg(spec, text_cfg),
            init_rng_),
      dropout_rng_(derive_seed(seed, kDropoutStream)) {
    spec_.validate();
    if (spec_.image_extractor == 1) {
        cnn_ = CnnExtractor(image_cfg, init_rng_);
    } else {
        if (image_vec_dim == 0) {
            throw ConfigError("member " + spec_.name() +
                              ": image extractor 2 needs precomputed image features");
        }
        proj_ = ProjectionExtractor(image_vec_dim, image_cfg.proj_dim, init_rng_);
    }
    head_ = FusionHead(text_.feature_dim(), image_feature_dim(), spec_.dense_size,
                       spec_.class_count, init_rng_);
}

ParamRegistry EnsembleMember::params() {
    ParamRegistry reg;
    std::string base = spec_.name();
    text_.register_params(reg, base + ".text");
    if (spec_.image_extractor == 1) {
        cnn_.register_params(reg, base + ".image");
    } else {
        proj_.register_params(reg, base + ".image");
    }
    head_.register_params(reg, base + ".head");
    return reg;
}

std::size_t EnsembleMember::image_feature_dim() const {
    return spec_.image_extractor == 1 ? cnn_.feature_dim() : proj_.feature_dim();
}

Prediction EnsembleMember::forward(const SampleFeatures& sample, bool training) {
    Tensor text_feat;
    if (spec_.text_extractor == 4) {
        if (sample.sentence.empty()) {
            throw UsageError("member " + spec_.name() + ": sample has no sentence vector");
        }
        text_feat = text_.extract(sample.sentence, 0, training, dropout_rng_).vector;
    } else {
        if (sample.tokens.empty() || sample.valid_len == 0) {
            throw UsageError("member " + spec_.name() + ": sample has no token tensor");
        }
        text_feat = text_.extract(sample.tokens, sample.valid_len, training, dropout_rng_).vector;
    }
    Tensor image_feat;
    if (spec_.image_extractor == 1) {
        if (sample.image.empty()) {
            throw UsageError("member " + spec_.name() + ": sample has no image");
        }
        image_feat = cnn_.extract(sample.image, training, dropout_rng_).vector;
    } else {
        if (sample.image_vec.empty()) {
            throw UsageError("member " + spec_.name() + ": sample has no image feature vector");
        }
        image_feat = proj_.extract(sample.image_vec).vector;
    }
    return head_.forward(text_feat, image_feat);
}

void EnsembleMember::backward(int label, double grad_scale) {
    auto [dtext, dimage] = head_.backward(head_.loss_grad(label, grad_scale));
    text_.backward(dtext);
    if (spec_.image_extractor == 1) {
        cnn_.backward(dimage);
    } else {
        proj_.backward(dimage);
    }
}

std::vector<std::unique_ptr<EnsembleMember>> build_members(const std::vector<MemberSpec>& specs,
                                                           const TextChannelConfig& text_cfg,
                                                           const ImageChannelConfig& image_cfg,
                                                           std::size_t image_vec_dim,
                                                           std::uint64_t seed) {
    std::vector<std::unique_ptr<EnsembleMember>> members;
    members.reserve(specs.size());
    for (const MemberSpec& spec : specs) {
        std::uint64_t tag = static_cast<std::uint64_t>(spec.text_extractor) * 8 +
                            static_cast<std::uint64_t>(spec.image_extractor);
        members.push_back(std::make_unique<EnsembleMember>(spec, text_cfg, image_cfg,
                                                           image_vec_dim,
                                                           derive_seed(seed, tag)));
    }
    return members;
}

}  // namespace memefuse
