#pragma once

#include <map>
#include <string>
#include <vector>

#include "memefuse/tensor.hpp"

namespace memefuse {

// Frozen word-vector table loaded from a GloVe-style text file:
// one "token f1 f2 ... fdim" per line, single spaces. A "<unk>" row is
// appended (zero vector) when the file does not provide one.
class EmbeddingTable {
public:
    static EmbeddingTable load(const std::string& path);
    static EmbeddingTable parse(const std::string& content, const std::string& origin);

    // Writes the table back in the same text format with round-trippable
    // float precision.
    void save(const std::string& path) const;

    std::size_t dim() const { return dim_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    std::size_t unk_index() const { return unk_index_; }
    std::size_t row_index(const std::string& token) const;  // unk_index for OOV
    bool contains(const std::string& token) const { return vocab_.count(token) != 0; }

    // One row per token; OOV tokens use the "<unk>" row. The sequence must
    // be non-empty.
    Tensor lookup(const std::vector<std::string>& tokens) const;
    Tensor row(std::size_t index) const;

private:
    std::size_t dim_ = 0;
    std::size_t unk_index_ = 0;
    std::map<std::string, std::size_t> vocab_;
    Tensor matrix_;  // V x dim
};

// Record-id keyed vectors: the sentence-level text features and the
// precomputed image features share this JSON Lines format:
//   {"id": "r1", "vec": [0.1, 0.2, ...]}
class VectorStore {
public:
    static VectorStore load(const std::string& path);
    static VectorStore parse(const std::string& content, const std::string& origin);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    bool contains(const std::string& id) const { return vectors_.count(id) != 0; }
    const Tensor& get(const std::string& id) const;  // missing id -> DataError

    void insert(const std::string& id, Tensor vec);

private:
    std::size_t dim_ = 0;
    std::map<std::string, Tensor> vectors_;
};

using SentenceVectorStore = VectorStore;

}  // namespace memefuse
