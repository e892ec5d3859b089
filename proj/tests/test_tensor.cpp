#include <cmath>

#include "doctest.h"
#include "memefuse/tensor.hpp"

using namespace memefuse;

namespace {

// Independent oracle: naive i-j-k triple loop, accumulation order different
// from the implementation.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += a.at(i, kk) * b.at(kk, j);
            out.at(i, j) = acc;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("matmul identity and zero") {
    Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
    Tensor v = Tensor::matrix(2, 1, {3, 4});
    Tensor out = matmul(eye, v);
    CHECK(out.at(0, 0) == 3.0);
    CHECK(out.at(1, 0) == 4.0);

    Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
    Tensor zero = Tensor::matrix(2, 1, {0, 0});
    Tensor out2 = matmul(a, zero);
    CHECK(out2.at(0, 0) == 0.0);
    CHECK(out2.at(1, 0) == 0.0);
}

TEST_CASE("matmul matches triple-loop oracle") {
    Rng rng(7);
    Tensor a = init_uniform(rng, {5, 7}, 1.0);
    Tensor b = init_uniform(rng, {7, 3}, 1.0);
    Tensor got = matmul(a, b);
    Tensor want = matmul_oracle(a, b);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("matmul dimension mismatch names both shapes") {
    Tensor a({5, 7});
    Tensor b({3, 2});
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[5 x 7]") != std::string::npos);
        CHECK(msg.find("[3 x 2]") != std::string::npos);
    }
}

TEST_CASE("matmul associativity within 1e-9 relative") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor a = init_uniform(rng, {4, 5}, 1.0);
        Tensor b = init_uniform(rng, {5, 6}, 1.0);
        Tensor c = init_uniform(rng, {6, 3}, 1.0);
        Tensor left = matmul(matmul(a, b), c);
        Tensor right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.size(); ++i) {
            double denom = std::max(1.0, std::fabs(left[i]));
            CHECK(std::fabs(left[i] - right[i]) / denom <= 1e-9);
        }
    }
}

TEST_CASE("nonlinearity fixed points") {
    Tensor z = Tensor::vector({0.0});
    CHECK(sigmoid(z)[0] == 0.5);
    CHECK(memefuse::tanh(z)[0] == 0.0);
    Tensor s = softmax(Tensor::vector({0.0, 0.0, 0.0}), 0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("sigmoid complement identity") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        double x = rng.uniform(-30.0, 30.0);
        double s = sigmoid(Tensor::vector({x}))[0];
        double c = sigmoid(Tensor::vector({-x}))[0];
        CHECK(std::fabs(s + c - 1.0) <= 1e-12);
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
}

TEST_CASE("softmax normalization and shift invariance") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = init_uniform(rng, {6}, 50.0);
        Tensor p = softmax(x, 0);
        double total = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(p[i] >= 0.0);
            total += p[i];
        }
        CHECK(std::fabs(total - 1.0) <= 1e-12);

        double shift = rng.uniform(-100.0, 100.0);
        Tensor shifted = x;
        for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += shift;
        Tensor q = softmax(shifted, 0);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::fabs(p[i] - q[i]) <= 1e-12);
    }
}

TEST_CASE("softmax along a matrix axis") {
    Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 10, 10, 10});
    Tensor p = softmax(x, 1);
    CHECK(std::fabs(p.at(0, 0) + p.at(0, 1) + p.at(0, 2) - 1.0) <= 1e-12);
    CHECK(p.at(1, 0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("concat basics") {
    Tensor a = Tensor::vector({1, 2});
    Tensor b = Tensor::vector({3});
    Tensor ab = concat(a, b, 0);
    REQUIRE(ab.size() == 3);
    CHECK(ab[0] == 1.0);
    CHECK(ab[2] == 3.0);

    Tensor empty({0});
    Tensor same = concat(a, empty, 0);
    CHECK(same == a);

    // feature-dimension arithmetic for the default model configuration
    Tensor text({320});
    Tensor image({4096});
    CHECK(concat(text, image, 0).size() == 4416);
}

TEST_CASE("concat rejects mismatched off-axis dims") {
    Tensor a({2, 3});
    Tensor b({2, 4});
    CHECK_THROWS_AS(concat(a, b, 0), ShapeError);
    CHECK_NOTHROW(concat(a, b, 1));
}

TEST_CASE("concat along axis 1 interleaves rows") {
    Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
    Tensor b = Tensor::matrix(2, 1, {9, 8});
    Tensor c = concat(a, b, 1);
    REQUIRE(c.shape() == std::vector<std::size_t>{2, 3});
    CHECK(c.at(0, 2) == 9.0);
    CHECK(c.at(1, 2) == 8.0);
    CHECK(c.at(1, 0) == 3.0);
}

TEST_CASE("ops leave inputs unmodified") {
    Rng rng(13);
    Tensor a = init_uniform(rng, {3, 4}, 1.0);
    Tensor b = init_uniform(rng, {4, 2}, 1.0);
    Tensor a_copy = a, b_copy = b;
    matmul(a, b);
    sigmoid(a);
    memefuse::tanh(a);
    softmax(a, 1);
    concat(a, a, 0);
    CHECK(a == a_copy);
    CHECK(b == b_copy);
}

TEST_CASE("splitmix64 reference outputs") {
    // reference stream published with the splitmix64 algorithm
    Rng rng(1234567);
    CHECK(rng.next_u64() == 6457827717110365317ULL);
    CHECK(rng.next_u64() == 3203168211198807973ULL);
    CHECK(rng.next_u64() == 9817491932198370423ULL);
    CHECK(rng.next_u64() == 4593380528125082431ULL);
    CHECK(rng.next_u64() == 16408922859458223821ULL);

    Rng zero(0);
    CHECK(zero.next_u64() == 16294208416658607535ULL);
}

TEST_CASE("init_uniform range, determinism and mean") {
    Rng rng(42);
    Tensor t = init_uniform(rng, {100}, 0.25);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t[i] >= -0.25);
        CHECK(t[i] <= 0.25);
    }

    Rng r1(99), r2(99);
    Tensor a = init_uniform(r1, {32, 8}, 1.0);
    Tensor b = init_uniform(r2, {32, 8}, 1.0);
    CHECK(a == b);

    // mean of n uniform draws in [-s, s] is within 3*s/sqrt(3n) of 0
    const std::size_t n = 1000000;
    const double s = 0.5;
    Rng r3(7);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += r3.uniform(-s, s);
    double bound = 3.0 * s / std::sqrt(3.0 * static_cast<double>(n));
    CHECK(std::fabs(total / static_cast<double>(n)) <= bound);
}

TEST_CASE("init_uniform rejects nonpositive scale") {
    Rng rng(1);
    CHECK_THROWS_AS(init_uniform(rng, {2}, 0.0), UsageError);
}

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0}), ShapeError);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.all_finite());
    t[0] = std::nan("");
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("slice and row helpers") {
    Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor r = matrix_row(m, 1);
    CHECK(r == Tensor::vector({4, 5, 6}));
    Tensor v = slice1d(r, 1, 3);
    CHECK(v == Tensor::vector({5, 6}));
    set_matrix_row(m, 0, Tensor::vector({7, 8, 9}));
    CHECK(m.at(0, 2) == 9.0);
}
