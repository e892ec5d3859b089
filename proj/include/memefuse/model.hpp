#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "memefuse/fusion.hpp"
#include "memefuse/image_channel.hpp"
#include "memefuse/text_channel.hpp"

namespace memefuse {

// Model-ready inputs for one record. Only the pieces a member consumes need
// to be populated: token embeddings for text extractors 1-3, the sentence
// vector for extractor 4, raw pixels for image extractor 1, the precomputed
// vector for image extractor 2.
struct SampleFeatures {
    Tensor tokens;  // T x emb_dim, right-padded with zero rows
    std::size_t valid_len = 0;
    Tensor sentence;
    Tensor image;      // H x W x 3, values in [0,1]
    Tensor image_vec;  // d_pre
    int label = -1;
};

// One (text extractor i, image extractor j) pair plus its fusion head.
// Training mutates internal caches, so a member is single-owner. The
// instance is pinned in memory (no copies or moves): parameter registries
// hand out raw pointers into it.
class EnsembleMember {
public:
    EnsembleMember(const MemberSpec& spec, const TextChannelConfig& text_cfg,
                   const ImageChannelConfig& image_cfg, std::size_t image_vec_dim,
                   std::uint64_t seed);
    EnsembleMember(const EnsembleMember&) = delete;
    EnsembleMember& operator=(const EnsembleMember&) = delete;

    Prediction forward(const SampleFeatures& sample, bool training);
    // Cross-entropy backward for the cached forward pass; `grad_scale`
    // carries the 1/batch factor and any class weight.
    void backward(int label, double grad_scale);
    double loss(int label) const { return head_.loss(label); }

    // Rebuilt per call; entries stay valid for this instance's lifetime.
    ParamRegistry params();
    const MemberSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t text_feature_dim() const { return text_.feature_dim(); }
    std::size_t image_feature_dim() const;

private:
    MemberSpec spec_;
    std::uint64_t seed_;
    Rng init_rng_;  // drained during construction, in a fixed order
    TextExtractor text_;
    CnnExtractor cnn_;
    ProjectionExtractor proj_;
    FusionHead head_;
    Rng dropout_rng_;
};

// Builds one member per (i, j) pair with per-member derived seeds that
// depend only on the pair, not on its position in the list.
std::vector<std::unique_ptr<EnsembleMember>> build_members(const std::vector<MemberSpec>& specs,
                                                           const TextChannelConfig& text_cfg,
                                                           const ImageChannelConfig& image_cfg,
                                                           std::size_t image_vec_dim,
                                                           std::uint64_t seed);

}  // namespace memefuse
