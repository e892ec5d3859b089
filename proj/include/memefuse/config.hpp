#pragma once

#include <map>
#include <string>
#include <vector>

#include "memefuse/fusion.hpp"
#include "memefuse/image_channel.hpp"
#include "memefuse/text_channel.hpp"
#include "memefuse/trainer.hpp"

namespace memefuse {

// Flat key=value configuration for the whole pipeline. Defaults follow the
// best-tuned values reported for the sentiment task.
struct PipelineConfig {
    std::size_t text_h12 = 300;
    std::size_t text_h3 = 160;
    double text_dropout = 0.4;
    std::size_t fusion_d = 128;
    std::size_t image_c = 6;
    std::size_t image_m = 64;
    std::size_t image_l = 3;
    double image_p = 0.2;
    std::size_t image_size = 64;
    std::size_t image_proj = 256;
    std::size_t classes = 3;
    std::vector<std::pair<int, int>> members;  // (i, j); defaults to all 8
    TrainConfig train;

    // dims observed at training time, recorded for bundle validation
    std::size_t emb_dim = 0;
    std::size_t sent_dim = 0;
    std::size_t image_vec_dim = 0;

    PipelineConfig();

    static PipelineConfig load(const std::string& path);
    static PipelineConfig parse(const std::string& content, const std::string& origin);

    // One key=value entry per setting, canonical order and formatting;
    // round-trips through from_snapshot.
    std::map<std::string, std::string> snapshot() const;
    static PipelineConfig from_snapshot(const std::map<std::string, std::string>& snap);

    void set(const std::string& key, const std::string& value);  // unknown key -> ConfigError
    // Grid-search override: name from {h12, h3, r, d, c, m, l, p}.
    void apply_grid_value(const std::string& name, double value);

    void validate() const;

    TextChannelConfig text_channel_config() const;
    ImageChannelConfig image_channel_config() const;
    std::vector<MemberSpec> member_specs() const;

    bool needs_tokens() const;
    bool needs_sentences() const;
    bool needs_images() const;
    bool needs_image_vectors() const;
};

}  // namespace memefuse
