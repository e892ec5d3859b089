#include <cmath>

#include "doctest.h"
#include "memefuse/error.hpp"
#include "memefuse/fusion.hpp"

using namespace memefuse;

TEST_CASE("member_forward with zero weights is uniform") {
    Rng rng(3);
    FusionHead head(4, 3, 5, 3, rng);
    ParamRegistry reg;
    head.register_params(reg, "h");
    for (ParamRef& p : reg) p.value->fill(0.0);
    Prediction pred = head.forward(Tensor({4}), Tensor({3}));
    REQUIRE(pred.probs.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(pred.probs[k] == doctest::Approx(1.0 / 3).epsilon(1e-15));
    }
}

TEST_CASE("member_forward output length follows the class count") {
    Rng rng(5);
    FusionHead head(320, 4096, 128, 3, rng);  // Table-1 sizing
    Rng vr(1);
    Tensor text = init_uniform(vr, {320}, 0.1);
    Tensor image = init_uniform(vr, {4096}, 0.1);
    Prediction pred = head.forward(text, image);
    CHECK(pred.probs.size() == 3);
    double total = 0.0;
    for (std::size_t k = 0; k < 3; ++k) total += pred.probs[k];
    CHECK(std::fabs(total - 1.0) <= 1e-12);
}

TEST_CASE("member_forward matches a hand-composed oracle") {
    Rng rng(7);
    FusionHead head(2, 1, 2, 2, rng);
    ParamRegistry reg;
    head.register_params(reg, "h");
    // h.fc1.W (2x3), h.fc1.b (2), h.fc2.W (2x2), h.fc2.b (2)
    *reg[0].value = Tensor::matrix(2, 3, {0.5, -1.0, 0.25, 1.5, 0.0, -0.5});
    *reg[1].value = Tensor::vector({0.1, -0.2});
    *reg[2].value = Tensor::matrix(2, 2, {1.0, -1.0, 0.5, 2.0});
    *reg[3].value = Tensor::vector({0.0, 0.3});

    Tensor text = Tensor::vector({0.8, -0.4});
    Tensor image = Tensor::vector({1.2});
    Prediction pred = head.forward(text, image);

    double x[3] = {0.8, -0.4, 1.2};
    double u0 = std::max(0.0, 0.5 * x[0] - 1.0 * x[1] + 0.25 * x[2] + 0.1);
    double u1 = std::max(0.0, 1.5 * x[0] + 0.0 * x[1] - 0.5 * x[2] - 0.2);
    double z0 = 1.0 * u0 - 1.0 * u1 + 0.0;
    double z1 = 0.5 * u0 + 2.0 * u1 + 0.3;
    double m = std::max(z0, z1);
    double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    CHECK(std::fabs(pred.probs[0] - e0 / (e0 + e1)) <= 1e-14);
    CHECK(std::fabs(pred.probs[1] - e1 / (e0 + e1)) <= 1e-14);
}

TEST_CASE("member_forward normalizes arbitrary finite features") {
    Rng rng(11);
    FusionHead head(6, 4, 0, 4, rng);  // single-layer head via d = 0
    for (int trial = 0; trial < 20; ++trial) {
        Tensor text = init_uniform(rng, {6}, 100.0);
        Tensor image = init_uniform(rng, {4}, 100.0);
        Prediction pred = head.forward(text, image);
        double total = 0.0;
        for (std::size_t k = 0; k < pred.probs.size(); ++k) {
            CHECK(pred.probs[k] >= 0.0);
            total += pred.probs[k];
        }
        CHECK(std::fabs(total - 1.0) <= 1e-9);
    }
}

TEST_CASE("member_forward rejects mismatched features") {
    Rng rng(13);
    FusionHead head(4, 3, 2, 2, rng);
    CHECK_THROWS_AS(head.forward(Tensor({5}), Tensor({3})), ShapeError);
    CHECK_THROWS_AS(head.forward(Tensor({4}), Tensor({2})), ShapeError);
}

TEST_CASE("soft_vote single member is the identity") {
    Prediction p{Tensor::vector({0.3, 0.7})};
    Prediction out = soft_vote({p});
    CHECK(out.probs == p.probs);
}

TEST_CASE("soft_vote averages probabilities") {
    Prediction a{Tensor::vector({0.6, 0.4})};
    Prediction b{Tensor::vector({0.2, 0.8})};
    Prediction out = soft_vote({a, b});
    CHECK(out.probs[0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(out.probs[1] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(predict_label(out) == 1);
}

TEST_CASE("soft_vote is invariant under member permutation") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Prediction> members;
        for (int m = 0; m < 6; ++m) {
            Tensor logits = init_uniform(rng, {4}, 2.0);
            members.push_back({softmax(logits, 0)});
        }
        Prediction base = soft_vote(members);
        std::vector<Prediction> shuffled = members;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
        }
        Prediction perm = soft_vote(shuffled);
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(std::fabs(base.probs[k] - perm.probs[k]) <= 1e-12);
        }
    }
}

TEST_CASE("soft_vote weight handling") {
    Prediction a{Tensor::vector({1.0, 0.0})};
    Prediction b{Tensor::vector({0.0, 1.0})};

    std::vector<double> w{3.0, 1.0};  // sums to 4 -> renormalized
    Prediction out = soft_vote({a, b}, &w);
    CHECK(out.probs[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(out.probs[1] == doctest::Approx(0.25).epsilon(1e-15));

    std::vector<double> exact{0.25, 0.75};  // already sums to 1
    Prediction out2 = soft_vote({a, b}, &exact);
    CHECK(out2.probs[0] == 0.25);
    CHECK(out2.probs[1] == 0.75);

    std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(soft_vote({a, b}, &zero), UsageError);
    std::vector<double> negative{1.0, -0.5};
    CHECK_THROWS_AS(soft_vote({a, b}, &negative), UsageError);
    std::vector<double> short_list{1.0};
    CHECK_THROWS_AS(soft_vote({a, b}, &short_list), UsageError);
    CHECK_THROWS_AS(soft_vote({}), UsageError);
    Prediction c{Tensor::vector({0.5, 0.25, 0.25})};
    CHECK_THROWS_AS(soft_vote({a, c}), ShapeError);
}

TEST_CASE("argmax of the vote is invariant under weight rescaling") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Prediction> members;
        for (int m = 0; m < 5; ++m) {
            members.push_back({softmax(init_uniform(rng, {3}, 3.0), 0)});
        }
        std::vector<double> w;
        for (int m = 0; m < 5; ++m) w.push_back(rng.next_unit() + 0.01);
        std::size_t base = predict_label(soft_vote(members, &w));
        for (double s : {0.001, 7.0, 4096.0}) {
            std::vector<double> scaled = w;
            for (double& v : scaled) v *= s;
            CHECK(predict_label(soft_vote(members, &scaled)) == base);
        }
    }
}

TEST_CASE("soft_vote of identical members equals the member") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        Prediction p{softmax(init_uniform(rng, {3}, 2.0), 0)};
        std::vector<Prediction> same(7, p);
        Prediction out = soft_vote(same);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(std::fabs(out.probs[k] - p.probs[k]) <= 1e-12);
        }
    }
}

TEST_CASE("soft_vote output is a valid prediction for random member suites") {
    Rng rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t k = 2 + rng.below(4);
        std::size_t n = 1 + rng.below(8);
        std::vector<Prediction> members;
        for (std::size_t m = 0; m < n; ++m) {
            members.push_back({softmax(init_uniform(rng, {k}, 5.0), 0)});
        }
        std::vector<double> w;
        for (std::size_t m = 0; m < n; ++m) w.push_back(rng.next_unit() * 3.0);
        w[rng.below(n)] += 0.5;  // keep the sum clear of zero
        Prediction out = soft_vote(members, &w);
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            CHECK(out.probs[i] >= 0.0);
            total += out.probs[i];
        }
        CHECK(std::fabs(total - 1.0) <= 1e-9);
    }
}

TEST_CASE("predict_label tie-breaking") {
    CHECK(predict_label({Tensor::vector({0.1, 0.7, 0.2})}) == 1);
    CHECK(predict_label({Tensor::vector({0.5, 0.5})}) == 0);
    CHECK(predict_label({Tensor::vector({0.25, 0.25, 0.25, 0.25})}) == 0);
}

TEST_CASE("member spec validation") {
    MemberSpec spec;
    spec.text_extractor = 5;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.text_extractor = 2;
    spec.image_extractor = 3;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.image_extractor = 2;
    spec.class_count = 1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.class_count = 3;
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.name() == "m2_2");
}
