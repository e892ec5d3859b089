#pragma once

#include <stdexcept>
#include <string>

namespace memefuse {

// Tensor dimension mismatch; the message names the offending shapes.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unknown keys, invalid values, or an inconsistent model setup.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable or malformed input data: datasets, embeddings, images, bundles.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss or gradients during training.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse: empty inputs, missing caches, calls out of order.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace memefuse
