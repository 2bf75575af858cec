#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "fgs/transfer.hpp"

using namespace fgs;

namespace {

Payload random_attention(int gh, int gw, std::uint64_t seed) {
    SeededRng rng(seed);
    const int n = gh * gw;
    Vec d(static_cast<std::size_t>(n) * n);
    for (double& v : d) v = std::exp(2.0 * rng.normal());
    Payload p = Payload::attention(n, gh, gw, d);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += p.row(i)[j];
        for (int j = 0; j < n; ++j) p.row(i)[j] /= s;
    }
    return p;
}

Payload random_vector(int n, std::uint64_t seed) {
    SeededRng rng(seed);
    Vec v(n);
    double s = 0.0;
    for (double& x : v) s += (x = rng.uniform());
    for (double& x : v) x /= s;
    return Payload::vector(v);
}

} // namespace

TEST_CASE("injection window") {
    CHECK(should_inject(700, 1000, {0.5}));
    CHECK(should_inject(501, 1000, {0.5}));
    CHECK_FALSE(should_inject(500, 1000, {0.5}));
    CHECK_FALSE(should_inject(300, 1000, {0.5}));
    for (int t = 0; t <= 1000; t += 50) CHECK_FALSE(should_inject(t, 1000, {0.0}));
    for (int t = 1; t <= 1000; t += 37) CHECK(should_inject(t, 1000, {1.0}));
    CHECK(should_inject(1000, 1000, {1.0}));
}

TEST_CASE("larger tau injects on a superset of steps") {
    for (double lo : {0.0, 0.3, 0.4, 0.5})
        for (double hi : {0.5, 0.6, 1.0}) {
            if (hi < lo) continue;
            for (int t = 0; t <= 50; ++t)
                if (should_inject(t, 50, {lo})) CHECK(should_inject(t, 50, {hi}));
        }
}

TEST_CASE("delta blur leaves payload bit-exact") {
    SeededRng rng(1);
    const auto a = random_attention(4, 4, 2);
    CHECK(perturb(a, PerturbKind::blur(1e-6), rng).data == a.data);
    const auto v = random_vector(9, 3);
    CHECK(perturb(v, PerturbKind::blur(1e-6), rng).data == v.data);
}

TEST_CASE("identity perturbation") {
    SeededRng rng(1);
    const auto a = perturb(random_attention(4, 4, 5), PerturbKind::identity(), rng);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) CHECK(a.row(i)[j] == (i == j ? 1.0 : 0.0));
    const auto v = perturb(random_vector(6, 5), PerturbKind::identity(), rng);
    for (double x : v.data) CHECK(x == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("blurred one-hot row spreads mass") {
    SeededRng rng(1);
    Vec d(256 * 256, 0.0);
    for (int i = 0; i < 256; ++i) d[static_cast<std::size_t>(i) * 256 + i] = 1.0;
    const auto b = perturb(Payload::attention(256, 16, 16, d), PerturbKind::blur(5.0), rng);
    for (int i = 0; i < b.rows; ++i) {
        const double mx = *std::max_element(b.row(i), b.row(i) + b.cols);
        double s = 0.0;
        for (int j = 0; j < b.cols; ++j) s += b.row(i)[j];
        CHECK(mx < 1.0);
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
    const auto k = gaussian_kernel(5.0, 15);
    Grid one(16, 16, 0.0);
    one.at(8, 8) = 1.0;
    const auto expect = convolve_separable(one, k);
    double s = 0.0;
    for (double x : expect.data) s += x;
    CHECK(b.row(8 * 16 + 8)[8 * 16 + 8] == doctest::Approx(expect.at(8, 8) / s).epsilon(1e-12));
}

TEST_CASE("perturbations keep rows stochastic") {
    SeededRng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = random_attention(4, 6, 100 + trial);
        const auto v = random_vector(12, 200 + trial);
        for (const auto& kind : {PerturbKind::blur(0.7), PerturbKind::blur(5.0), PerturbKind::blur(100.0),
                                 PerturbKind::noise(0.1), PerturbKind::noise(10.0), PerturbKind::identity()}) {
            CHECK_NOTHROW(perturb(a, kind, rng).validate());
            CHECK_NOTHROW(perturb(v, kind, rng).validate());
        }
    }
}

TEST_CASE("noise that clips every entry falls back to uniform") {
    SeededRng rng(4);
    Payload p = Payload::vector({1.0, 0.0});
    int uniform = 0;
    for (int i = 0; i < 200; ++i) {
        const auto q = perturb(p, PerturbKind::noise(1e3), rng);
        q.validate();
        if (q.data[0] == 0.5) ++uniform;
    }
    CHECK(uniform > 0);
}

TEST_CASE("parallel and serial perturb agree") {
    const auto a = random_attention(16, 16, 77);
    for (const auto& kind : {PerturbKind::blur(5.0), PerturbKind::noise(0.1), PerturbKind::identity()}) {
        SeededRng r1(5), r2(5);
        CHECK(perturb(a, kind, r1).data == perturb_reference(a, kind, r2).data);
    }
}

TEST_CASE("perturb argument errors") {
    SeededRng rng(1);
    const auto v = random_vector(4, 1);
    CHECK_THROWS_AS(perturb(v, PerturbKind::blur(0.0), rng), std::invalid_argument);
    CHECK_THROWS_AS(perturb(v, PerturbKind::noise(-1.0), rng), std::invalid_argument);
    CHECK_THROWS(parse_perturb("swirl"));
    CHECK(parse_perturb("identity") == PerturbType::Identity);
    CHECK_THROWS(Payload::attention(4, 3, 3, Vec(16, 0.25)));
}

TEST_CASE("packet capture") {
    TransferPacket pk;
    pk.capture(3, random_vector(3, 1));
    CHECK(pk.size() == 1);
    CHECK_THROWS_AS(pk.capture(3, random_vector(3, 2)), std::logic_error);
    CHECK_THROWS_AS(pk.at(4), std::out_of_range);
    CHECK(parse_tag("detail") == TransferTag::Detail);
    CHECK(to_string(TransferTag::Layout) == "layout");
}
