#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "memefuse/tensor.hpp"

namespace memefuse {

// Tensor binary record: magic "MFT1", u32 rank, u32 dims..., then the
// little-endian f64 payload.
void write_tensor_mft1(std::ostream& out, const Tensor& t);
Tensor read_tensor_mft1(std::istream& in, const std::string& origin);

// Trained-model container: magic "MEMEFUSE1", format version, config
// snapshot, lexicon hash, embedding dim, then a (name, shape, offset) table
// followed by the concatenated MFT1 payloads. Byte-identical across
// serialize -> deserialize -> serialize.
struct ModelBundle {
    std::uint32_t version = 1;
    std::map<std::string, std::string> config;
    std::uint64_t lexicon_hash = 0;
    std::uint32_t embedding_dim = 0;
    std::vector<std::pair<std::string, Tensor>> tensors;  // registry order

    // Writes to a temp file then renames, so readers never see a torn file.
    void save(const std::string& path) const;
    static ModelBundle load(const std::string& path);

    const Tensor* find(const std::string& name) const;
};

}  // namespace memefuse
