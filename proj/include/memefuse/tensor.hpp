#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <vector>

#include "memefuse/error.hpp"

namespace memefuse {

// Dense tensor of 64-bit floats in row-major order.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor vector(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const {
        assert(axis < shape_.size());
        return shape_[axis];
    }
    bool empty() const { return data_.empty(); }

    double& operator[](std::size_t i) {
        assert(i < data_.size());
        return data_[i];
    }
    double operator[](std::size_t i) const {
        assert(i < data_.size());
        return data_[i];
    }
    double& at(std::size_t i, std::size_t j) {
        assert(rank() == 2 && i < shape_[0] && j < shape_[1]);
        return data_[i * shape_[1] + j];
    }
    double at(std::size_t i, std::size_t j) const {
        assert(rank() == 2 && i < shape_[0] && j < shape_[1]);
        return data_[i * shape_[1] + j];
    }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        assert(rank() == 3);
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        assert(rank() == 3);
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        assert(rank() == 4);
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        assert(rank() == 4);
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    // Same data, new shape; element counts must agree.
    Tensor reshaped(std::vector<std::size_t> shape) const;

    void fill(double v);
    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_str(const std::vector<std::size_t>& shape);
inline std::string shape_str(const Tensor& t) { return shape_str(t.shape()); }

// ---- arithmetic ----

Tensor matmul(const Tensor& a, const Tensor& b);
// y = W x for W m-by-n, x length n.
Tensor matvec(const Tensor& w, const Tensor& x);
// y = W^T x for W m-by-n, x length m.
Tensor matvec_transposed(const Tensor& w, const Tensor& x);
// W += u v^T (outer-product accumulate).
void add_outer(Tensor& w, const Tensor& u, const Tensor& v);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
void add_in_place(Tensor& a, const Tensor& b);
// a += s * b
void add_scaled(Tensor& a, const Tensor& b, double s);
double dot(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);

// ---- nonlinearities ----

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
// Max-subtracted softmax along one axis; every slice sums to 1.
Tensor softmax(const Tensor& x, std::size_t axis);

// ---- structure ----

// Joins a and b along `axis`; all other dimensions must agree. a's data
// precedes b's.
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);

Tensor slice1d(const Tensor& v, std::size_t lo, std::size_t hi);
Tensor matrix_row(const Tensor& m, std::size_t r);
void set_matrix_row(Tensor& m, std::size_t r, const Tensor& v);
void add_to_matrix_row(Tensor& m, std::size_t r, const Tensor& v);

// ---- random ----

// splitmix64: a counter-based generator with published reference outputs,
// so the same seed yields the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random bits.
    double next_unit();
    double uniform(double lo, double hi);
    // Uniform integer in [0, n); n must be positive.
    std::size_t below(std::size_t n);
    // Independent substream seeded from this stream.
    Rng fork() { return Rng(next_u64()); }

private:
    std::uint64_t state_;
};

// Stable per-component seed derivation (member index, shuffle stream, ...).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Entries i.i.d. uniform in [-scale, +scale].
Tensor init_uniform(Rng& rng, const std::vector<std::size_t>& shape, double scale);

}  // namespace memefuse
