#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "memefuse/dataset.hpp"
#include "memefuse/error.hpp"
#include "memefuse/gradcheck.hpp"
#include "memefuse/image_channel.hpp"

using namespace memefuse;

namespace {

// Independent sliding-window oracle (zero padding, cross-correlation, bias,
// ReLU), written against the definition rather than the implementation.
Tensor conv2d_oracle(const ConvLayerParams& p, const Tensor& in) {
    std::size_t height = in.dim(0), width = in.dim(1), c_in = in.dim(2);
    std::size_t l = p.kernel(), m = p.filters();
    long pad = static_cast<long>(l / 2);
    Tensor out({height, width, m});
    for (std::size_t f = 0; f < m; ++f) {
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                double acc = p.bias[f];
                for (std::size_t ky = 0; ky < l; ++ky) {
                    for (std::size_t kx = 0; kx < l; ++kx) {
                        long iy = static_cast<long>(y + ky) - pad;
                        long ix = static_cast<long>(x + kx) - pad;
                        if (iy < 0 || ix < 0 || iy >= static_cast<long>(height) ||
                            ix >= static_cast<long>(width)) {
                            continue;
                        }
                        for (std::size_t c = 0; c < c_in; ++c) {
                            acc += p.kernels.at(f, ky, kx, c) *
                                   in.at(static_cast<std::size_t>(iy),
                                         static_cast<std::size_t>(ix), c);
                        }
                    }
                }
                out.at(y, x, f) = acc > 0.0 ? acc : 0.0;
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("conv2d identity kernel reproduces nonnegative input") {
    ConvLayerParams p = ConvLayerParams::zeros(1, 3, 1);
    p.kernels.at(0, 1, 1, 0) = 1.0;  // center tap
    Rng rng(3);
    Tensor in({4, 4, 1});
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = rng.next_unit();
    Tensor out = conv2d(p, in);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i] == in[i]);
}

TEST_CASE("conv2d all-zero kernels give all-zero output") {
    ConvLayerParams p = ConvLayerParams::zeros(2, 3, 3);
    Rng rng(5);
    Tensor in = init_uniform(rng, {5, 5, 3}, 1.0);
    Tensor out = conv2d(p, in);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("conv2d 4x4 averaging kernel matches the hand oracle") {
    ConvLayerParams p = ConvLayerParams::zeros(1, 3, 1);
    for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) p.kernels.at(0, ky, kx, 0) = 1.0 / 9.0;
    }
    Tensor in({4, 4, 1}, {1, 2,  3,  4,  5,  6,  7,  8,
                          9, 10, 11, 12, 13, 14, 15, 16});
    Tensor got = conv2d(p, in);
    Tensor want = conv2d_oracle(p, in);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
    }
    // spot check one interior window by hand: mean of the 3x3 around (1,1)
    double center = (1 + 2 + 3 + 5 + 6 + 7 + 9 + 10 + 11) / 9.0;
    CHECK(got.at(1, 1, 0) == doctest::Approx(center).epsilon(1e-14));
}

TEST_CASE("conv2d random case matches the hand oracle") {
    Rng rng(7);
    ConvLayerParams p = ConvLayerParams::init(3, 3, 2, rng);
    Tensor in = init_uniform(rng, {6, 5, 2}, 1.0);
    Tensor got = conv2d(p, in);
    Tensor want = conv2d_oracle(p, in);
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv2d positive homogeneity under nonnegative scaling") {
    Rng rng(9);
    ConvLayerParams p = ConvLayerParams::init(2, 3, 1, rng);
    p.bias.fill(0.0);  // bias breaks homogeneity, zero it
    Tensor in = init_uniform(rng, {5, 5, 1}, 1.0);
    for (double a : {0.0, 0.5, 2.0, 7.25}) {
        Tensor scaled = scale(in, a);
        Tensor lhs = conv2d(p, scaled);
        Tensor rhs = scale(conv2d(p, in), a);
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            CHECK(std::fabs(lhs[i] - rhs[i]) <= 1e-10);
        }
    }
}

TEST_CASE("conv2d shape errors") {
    ConvLayerParams p = ConvLayerParams::zeros(1, 3, 2);
    CHECK_THROWS_AS(conv2d(p, Tensor({4, 4, 1})), ShapeError);  // channel mismatch
    CHECK_THROWS_AS(conv2d(p, Tensor({2, 2, 2})), ShapeError);  // kernel larger than input
    Rng rng(1);
    CHECK_THROWS_AS(ConvLayerParams::init(1, 4, 1, rng), ConfigError);
}

TEST_CASE("maxpool2 basics") {
    Tensor in({2, 2, 1}, {1, 2, 3, 4});
    Tensor out = maxpool2(in);
    REQUIRE(out.shape() == std::vector<std::size_t>{1, 1, 1});
    CHECK(out[0] == 4.0);

    Tensor flat({4, 6, 2});
    flat.fill(3.25);
    Tensor half = maxpool2(flat);
    REQUIRE(half.shape() == std::vector<std::size_t>{2, 3, 2});
    for (std::size_t i = 0; i < half.size(); ++i) CHECK(half[i] == 3.25);
}

TEST_CASE("maxpool2 5x5 ragged case matches hand computation") {
    Tensor in({5, 5, 1});
    for (std::size_t y = 0; y < 5; ++y) {
        for (std::size_t x = 0; x < 5; ++x) in.at(y, x, 0) = double(y * 5 + x);
    }
    Tensor out = maxpool2(in);
    REQUIRE(out.shape() == std::vector<std::size_t>{3, 3, 1});
    // hand-computed 2x2/stride-2 maxima with ragged right/bottom edges
    double want[3][3] = {{6, 8, 9}, {16, 18, 19}, {21, 23, 24}};
    for (std::size_t y = 0; y < 3; ++y) {
        for (std::size_t x = 0; x < 3; ++x) CHECK(out.at(y, x, 0) == want[y][x]);
    }
}

TEST_CASE("maxpool2 output bounded by window contents") {
    Rng rng(11);
    Tensor in = init_uniform(rng, {7, 6, 3}, 2.0);
    Tensor out = maxpool2(in);
    for (std::size_t y = 0; y < out.dim(0); ++y) {
        for (std::size_t x = 0; x < out.dim(1); ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                double best = -1e18;
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        if (2 * y + dy >= in.dim(0) || 2 * x + dx >= in.dim(1)) continue;
                        best = std::max(best, in.at(2 * y + dy, 2 * x + dx, c));
                    }
                }
                CHECK(out.at(y, x, c) == best);
            }
        }
    }
}

TEST_CASE("maxpool2 ties route the gradient to the first element") {
    Tensor in({2, 2, 1}, {5.0, 5.0, 5.0, 5.0});
    MaxPool2Cache cache;
    maxpool2(in, &cache);
    Tensor dout({1, 1, 1}, {1.0});
    Tensor din = maxpool2_backward(cache, dout);
    CHECK(din[0] == 1.0);
    CHECK(din[1] == 0.0);
    CHECK(din[2] == 0.0);
    CHECK(din[3] == 0.0);
}

TEST_CASE("shape law: k pools give ceil(H/2^k)") {
    for (std::size_t size : {64u, 33u, 17u, 5u}) {
        for (std::size_t pools = 1; pools <= 3; ++pools) {
            Tensor t({size, size, 1});
            std::size_t want = size;
            for (std::size_t k = 0; k < pools; ++k) {
                t = maxpool2(t);
                want = (want + 1) / 2;
            }
            CHECK(t.dim(0) == want);
            CHECK(t.dim(1) == want);
        }
    }
}

TEST_CASE("cnn extractor feature dimension and degenerate configs") {
    ImageChannelConfig cfg;  // c=6, m=64, l=3, 64x64 input
    CHECK(CnnExtractor::feature_dim_for(cfg) == 4096);  // 8x8x64

    Rng rng(13);
    ImageChannelConfig small;
    small.conv_layers = 2;
    small.filters = 4;
    small.kernel = 3;
    small.dropout = 0.0;
    small.input_size = 16;
    CnnExtractor ex(small, rng);
    CHECK(ex.feature_dim() == 8 * 8 * 4);
    Rng drop(1);
    Tensor image = init_uniform(rng, {16, 16, 3}, 0.5);
    for (std::size_t i = 0; i < image.size(); ++i) image[i] = std::fabs(image[i]);
    ImageFeature feat = ex.extract(image, false, drop);
    CHECK(feat.vector.size() == ex.feature_dim());
    CHECK(feat.extractor_id == 1);

    ImageChannelConfig bad = small;
    bad.conv_layers = 0;
    CHECK_THROWS_AS(CnnExtractor(bad, rng), ConfigError);
    ImageChannelConfig bad2 = small;
    bad2.kernel = 4;
    CHECK_THROWS_AS(CnnExtractor(bad2, rng), ConfigError);
}

TEST_CASE("cnn extractor with zero weights emits a zero feature") {
    Rng rng(17);
    ImageChannelConfig cfg;
    cfg.conv_layers = 3;
    cfg.filters = 2;
    cfg.kernel = 3;
    cfg.dropout = 0.0;
    cfg.input_size = 8;
    CnnExtractor ex(cfg, rng);
    ParamRegistry reg;
    ex.register_params(reg, "img");
    for (ParamRef& p : reg) p.value->fill(0.0);
    Rng drop(1);
    Tensor image = init_uniform(rng, {8, 8, 3}, 1.0);
    ImageFeature feat = ex.extract(image, false, drop);
    for (std::size_t i = 0; i < feat.vector.size(); ++i) CHECK(feat.vector[i] == 0.0);
}

TEST_CASE("cnn extractor gradients match finite differences") {
    Rng rng(19);
    ImageChannelConfig cfg;
    cfg.conv_layers = 2;
    cfg.filters = 2;
    cfg.kernel = 3;
    cfg.dropout = 0.0;
    cfg.input_size = 6;
    CnnExtractor ex(cfg, rng);
    Rng drop(1);
    Tensor image = init_uniform(rng, {6, 6, 3}, 1.0);
    Tensor probe = init_uniform(rng, {ex.feature_dim()}, 1.0);
    ParamRegistry reg;
    ex.register_params(reg, "img");
    Tensor dimage(image.shape());
    auto loss = [&]() { return dot(probe, ex.extract(image, false, drop).vector); };
    auto backprop = [&]() {
        zero_grads(reg);
        ex.extract(image, false, drop);
        dimage = ex.backward(probe);
    };
    std::vector<GradCheckSlot> slots;
    for (ParamRef& p : reg) slots.push_back({p.name, p.value, p.grad});
    slots.push_back({"image", &image, &dimage});
    CHECK(max_relative_error(slots, loss, backprop) <= 1e-4);
}

TEST_CASE("projection extractor") {
    Rng rng(23);
    ProjectionExtractor ex(3, 3, rng);
    ParamRegistry reg;
    ex.register_params(reg, "img");
    for (ParamRef& p : reg) {
        p.value->fill(0.0);
        if (p.name.find(".W") != std::string::npos) {
            for (std::size_t k = 0; k < 3; ++k) p.value->at(k, k) = 1.0;
        }
    }
    Tensor v = Tensor::vector({0.4, -1.0, 2.0});
    ImageFeature feat = ex.extract(v);
    CHECK(feat.vector == Tensor::vector({0.4, 0.0, 2.0}));
    CHECK(feat.extractor_id == 2);

    for (ParamRef& p : reg) p.value->fill(0.0);
    ImageFeature zero = ex.extract(v);
    for (std::size_t i = 0; i < 3; ++i) CHECK(zero.vector[i] == 0.0);

    // random case against the matmul oracle
    ProjectionExtractor rex(4, 5, rng);
    Tensor u = init_uniform(rng, {4}, 1.0);
    ParamRegistry rreg;
    rex.register_params(rreg, "img");
    Tensor w = *rreg[0].value;
    Tensor b = *rreg[1].value;
    Tensor want = relu(add(matmul(w, u.reshaped({4, 1})).reshaped({5}), b));
    CHECK(rex.extract(u).vector == want);

    CHECK_THROWS_AS(rex.extract(Tensor({7})), DataError);
}

TEST_CASE("ppm round trip, scaling and clamping") {
    namespace fs = std::filesystem;
    std::string path = (fs::temp_directory_path() / "memefuse_test.ppm").string();
    Tensor img({3, 2, 3});
    Rng rng(29);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.next_unit();
    save_ppm(path, img);
    Tensor back = load_ppm(path);
    REQUIRE(back.shape() == img.shape());
    for (std::size_t i = 0; i < img.size(); ++i) {
        CHECK(std::fabs(back[i] - img[i]) <= 0.5 / 255.0 + 1e-12);
        CHECK(back[i] >= 0.0);
        CHECK(back[i] <= 1.0);
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_ppm(path), DataError);
}

TEST_CASE("ppm header parsing with comments") {
    namespace fs = std::filesystem;
    std::string path = (fs::temp_directory_path() / "memefuse_hdr.ppm").string();
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        const char header[] = "P6\n# a comment\n2 1\n# another\n255\n";
        std::fwrite(header, 1, sizeof(header) - 1, f);
        unsigned char pixels[6] = {255, 0, 0, 0, 128, 0};
        std::fwrite(pixels, 1, 6, f);
        std::fclose(f);
    }
    Tensor img = load_ppm(path);
    REQUIRE(img.shape() == std::vector<std::size_t>{1, 2, 3});
    CHECK(img.at(0, 0, 0) == 1.0);
    CHECK(img.at(0, 1, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("nearest-neighbor resize") {
    Tensor img({2, 2, 1}, {1, 2, 3, 4});
    Tensor up = resize_nearest(img, 4);
    REQUIRE(up.shape() == std::vector<std::size_t>{4, 4, 1});
    CHECK(up.at(0, 0, 0) == 1.0);
    CHECK(up.at(0, 3, 0) == 2.0);
    CHECK(up.at(3, 0, 0) == 3.0);
    CHECK(up.at(3, 3, 0) == 4.0);
    CHECK(resize_nearest(img, 2) == img);

    Tensor down = resize_nearest(up, 2);
    CHECK(down == img);
}
