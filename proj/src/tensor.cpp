#include "memefuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace memefuse {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw ShapeError("tensor: shape " + shape_str(shape_) + " does not hold " +
                         std::to_string(data_.size()) + " elements");
    }
}

Tensor Tensor::vector(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (shape_product(shape) != data_.size()) {
        throw ShapeError("reshape: " + shape_str(shape_) + " to " + shape_str(shape) +
                         " changes element count");
    }
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << " x ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul: expects matrices, got " + shape_str(a) + " and " + shape_str(b));
    }
    std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul: inner dimensions mismatch: " + shape_str(a) + " vs " +
                         shape_str(b));
    }
    Tensor out({m, n});
    const double* pa = a.raw().data();
    const double* pb = b.raw().data();
    double* po = out.raw().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            double aik = pa[i * k + kk];
            const double* brow = pb + kk * n;
            double* orow = po + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
    if (w.rank() != 2 || x.rank() != 1 || w.dim(1) != x.dim(0)) {
        throw ShapeError("matvec: " + shape_str(w) + " vs " + shape_str(x));
    }
    std::size_t m = w.dim(0), n = w.dim(1);
    Tensor out({m});
    const double* pw = w.raw().data();
    const double* px = x.raw().data();
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        const double* row = pw + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * px[j];
        out[i] = acc;
    }
    return out;
}

Tensor matvec_transposed(const Tensor& w, const Tensor& x) {
    if (w.rank() != 2 || x.rank() != 1 || w.dim(0) != x.dim(0)) {
        throw ShapeError("matvec_transposed: " + shape_str(w) + " vs " + shape_str(x));
    }
    std::size_t m = w.dim(0), n = w.dim(1);
    Tensor out({n});
    const double* pw = w.raw().data();
    const double* px = x.raw().data();
    double* po = out.raw().data();
    for (std::size_t i = 0; i < m; ++i) {
        double xi = px[i];
        const double* row = pw + i * n;
        for (std::size_t j = 0; j < n; ++j) po[j] += row[j] * xi;
    }
    return out;
}

void add_outer(Tensor& w, const Tensor& u, const Tensor& v) {
    if (w.rank() != 2 || u.rank() != 1 || v.rank() != 1 || w.dim(0) != u.dim(0) ||
        w.dim(1) != v.dim(0)) {
        throw ShapeError("add_outer: " + shape_str(w) + " vs " + shape_str(u) + " and " +
                         shape_str(v));
    }
    std::size_t m = w.dim(0), n = w.dim(1);
    double* pw = w.raw().data();
    for (std::size_t i = 0; i < m; ++i) {
        double ui = u[i];
        double* row = pw + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += ui * v[j];
    }
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch: " + shape_str(a) + " vs " +
                         shape_str(b));
    }
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
    require_same_shape(a, b, op);
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

template <class F>
Tensor map(const Tensor& a, F f) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
    return map(a, [s](double x) { return x * s; });
}

void add_in_place(Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add_in_place");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void add_scaled(Tensor& a, const Tensor& b, double s) {
    require_same_shape(a, b, "add_scaled");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const Tensor& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
    return acc;
}

Tensor sigmoid(const Tensor& x) {
    return map(x, [](double v) {
        if (v >= 0.0) {
            return 1.0 / (1.0 + std::exp(-v));
        }
        double e = std::exp(v);
        return e / (1.0 + e);
    });
}

Tensor tanh(const Tensor& x) {
    return map(x, [](double v) { return std::tanh(v); });
}

Tensor relu(const Tensor& x) {
    return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw ShapeError("softmax: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(x));
    }
    std::size_t outer = 1, inner = 1, d = x.dim(axis);
    for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
    for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
    Tensor out(x.shape());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            double mx = -HUGE_VAL;
            for (std::size_t k = 0; k < d; ++k) mx = std::max(mx, x[(o * d + k) * inner + in]);
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                double e = std::exp(x[(o * d + k) * inner + in] - mx);
                out[(o * d + k) * inner + in] = e;
                s += e;
            }
            for (std::size_t k = 0; k < d; ++k) out[(o * d + k) * inner + in] /= s;
        }
    }
    return out;
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
    if (a.rank() != b.rank()) {
        throw ShapeError("concat: rank mismatch: " + shape_str(a) + " vs " + shape_str(b));
    }
    if (axis >= a.rank()) {
        throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(a));
    }
    for (std::size_t i = 0; i < a.rank(); ++i) {
        if (i != axis && a.dim(i) != b.dim(i)) {
            throw ShapeError("concat: off-axis dimension mismatch: " + shape_str(a) + " vs " +
                             shape_str(b));
        }
    }
    std::vector<std::size_t> shape = a.shape();
    shape[axis] = a.dim(axis) + b.dim(axis);
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    std::size_t block_a = a.dim(axis) * inner;
    std::size_t block_b = b.dim(axis) * inner;
    Tensor out(shape);
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(a.raw().data() + o * block_a, block_a,
                    out.raw().data() + o * (block_a + block_b));
        std::copy_n(b.raw().data() + o * block_b, block_b,
                    out.raw().data() + o * (block_a + block_b) + block_a);
    }
    return out;
}

Tensor slice1d(const Tensor& v, std::size_t lo, std::size_t hi) {
    if (v.rank() != 1 || lo > hi || hi > v.size()) {
        throw ShapeError("slice1d: [" + std::to_string(lo) + ", " + std::to_string(hi) +
                         ") of " + shape_str(v));
    }
    return Tensor({hi - lo}, std::vector<double>(v.raw().begin() + static_cast<long>(lo),
                                                 v.raw().begin() + static_cast<long>(hi)));
}

Tensor matrix_row(const Tensor& m, std::size_t r) {
    if (m.rank() != 2 || r >= m.dim(0)) {
        throw ShapeError("matrix_row: row " + std::to_string(r) + " of " + shape_str(m));
    }
    std::size_t n = m.dim(1);
    return Tensor({n}, std::vector<double>(m.raw().begin() + static_cast<long>(r * n),
                                           m.raw().begin() + static_cast<long>((r + 1) * n)));
}

void set_matrix_row(Tensor& m, std::size_t r, const Tensor& v) {
    if (m.rank() != 2 || r >= m.dim(0) || v.size() != m.dim(1)) {
        throw ShapeError("set_matrix_row: row " + std::to_string(r) + " of " + shape_str(m) +
                         " from " + shape_str(v));
    }
    std::copy(v.raw().begin(), v.raw().end(), m.raw().begin() + static_cast<long>(r * m.dim(1)));
}

void add_to_matrix_row(Tensor& m, std::size_t r, const Tensor& v) {
    if (m.rank() != 2 || r >= m.dim(0) || v.size() != m.dim(1)) {
        throw ShapeError("add_to_matrix_row: row " + std::to_string(r) + " of " + shape_str(m) +
                         " from " + shape_str(v));
    }
    std::size_t n = m.dim(1);
    for (std::size_t j = 0; j < n; ++j) m[r * n + j] += v[j];
}

std::uint64_t Rng::next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw UsageError("Rng::below: n must be positive");
    return static_cast<std::size_t>(next_u64() % n);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    Rng r(base ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
    return r.next_u64();
}

Tensor init_uniform(Rng& rng, const std::vector<std::size_t>& shape, double scale) {
    if (!(scale > 0.0)) throw UsageError("init_uniform: scale must be positive");
    Tensor out(shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.uniform(-scale, scale);
    return out;
}

}  // namespace memefuse
