#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memefuse/tensor.hpp"

namespace memefuse {

// One dataset row. `image_ref` is a path to a PPM file (CNN extractor) and
// doubles as the id into the precomputed image-feature store (projection
// extractor).
struct DatasetRecord {
    std::string id;
    std::string text;
    std::string image_ref;
    std::optional<int> label;
};

// JSON Lines, one {"id","text","image","label"} object per line; "label"
// may be omitted for prediction inputs. Duplicate ids and labels outside
// [0, classes) are rejected with their line number.
std::vector<DatasetRecord> load_dataset(const std::string& path, std::size_t classes,
                                        bool require_labels);
std::vector<DatasetRecord> parse_dataset(const std::string& content, const std::string& origin,
                                         std::size_t classes, bool require_labels);

// Binary 8-bit PPM (P6). Values are scaled by maxval and clamped to [0,1];
// result is H x W x 3.
Tensor load_ppm(const std::string& path);
void save_ppm(const std::string& path, const Tensor& image);  // values in [0,1]

// Nearest-neighbor resample to size x size (channels preserved).
Tensor resize_nearest(const Tensor& image, std::size_t size);

}  // namespace memefuse
