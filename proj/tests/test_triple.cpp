#include <doctest.h>

#include "ldpspde/errors.hpp"
#include "ldpspde/rng.hpp"
#include "ldpspde/triple.hpp"

#include <cmath>

using namespace ldp;

TEST_CASE("norm_h") {
    const TripleSpec s2({1.0, 1.0}), s3({1.0, 1.0, 1.0});
    CHECK(s2.norm_h(HVector{0.0, 0.0}) == 0.0);
    CHECK(s2.norm_h(HVector{3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(s3.norm_h(HVector{1.0, 1.0, 1.0}) == doctest::Approx(1.7320508075688772).epsilon(1e-15));
}

TEST_CASE("weighted norms") {
    const TripleSpec unit({1.0, 1.0});
    const HVector e1{1.0, 0.0};
    CHECK(unit.norm_v(e1) == 1.0);
    CHECK(unit.norm_vstar(e1) == 1.0);
    CHECK(unit.norm_h(e1) == 1.0);

    const TripleSpec w({4.0, 1.0});
    CHECK(w.norm_v(e1) == doctest::Approx(2.0));
    CHECK(w.norm_vstar(e1) == doctest::Approx(0.5));

    const HVector zero{0.0, 0.0};
    CHECK(w.norm_v(zero) == 0.0);
    CHECK(w.norm_vstar(zero) == 0.0);
    CHECK(w.norm_h(zero) == 0.0);
}

TEST_CASE("pairing") {
    const TripleSpec s({1.0, 1.0});
    CHECK(s.pairing(HVector{0.0, 0.0}, HVector{0.0, 0.0}) == 0.0);
    CHECK(s.pairing(HVector{1.0, 0.0}, HVector{0.0, 1.0}) == 0.0);
    CHECK(s.pairing(HVector{1.0, 2.0}, HVector{3.0, -1.0}) == doctest::Approx(1.0));
}

TEST_CASE("compatibility, Hoelder and ordering on random vectors") {
    const std::size_t d = 16;
    const TripleSpec s = TripleSpec::dirichlet_laplacian(d);
    PhiloxRng rng(11, 0);
    for (int n = 0; n < 1000; ++n) {
        HVector u(d), v(d);
        for (std::size_t k = 0; k < d; ++k) {
            u[k] = rng.uniform() * 2.0 - 1.0;
            v[k] = rng.uniform() * 2.0 - 1.0;
        }
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += u[k] * v[k];
        CHECK(s.pairing(u, v) == doctest::Approx(dot).epsilon(1e-14));
        CHECK(std::fabs(s.pairing(u, v)) <= s.norm_vstar(u) * s.norm_v(v) * (1.0 + 1e-14));
        CHECK(s.norm_vstar(v) <= s.norm_h(v) * (1.0 + 1e-15));
        CHECK(s.norm_h(v) <= s.norm_v(v) * (1.0 + 1e-15));
        const double h = s.norm_h(v);
        CHECK(h * h <= s.norm_v(v) * s.norm_vstar(v) * (1.0 + 1e-14));
    }
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(TripleSpec({}), ValidationError);
    CHECK_THROWS_AS(TripleSpec({1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(TripleSpec({1.0}, 1.0), ValidationError);
    CHECK_THROWS_AS(TripleSpec({1.0}, 2.0, -1.0), ValidationError);
    CHECK_THROWS_AS(TripleSpec({1.0}, 2.0, 0.0, 0.0), ValidationError);
    const TripleSpec s({1.0, 1.0});
    CHECK_THROWS_AS(s.norm_h(HVector{1.0}), ValidationError);
    CHECK_THROWS_AS(s.pairing(HVector{1.0, 0.0}, HVector{1.0}), ValidationError);
    CHECK_THROWS_AS(s.norm_v(HVector{NAN, 0.0}), ValidationError);
}

TEST_CASE("dirichlet weights") {
    const TripleSpec s = TripleSpec::dirichlet_laplacian(4);
    REQUIRE(s.dim() == 4);
    CHECK(s.weights()[3] == 16.0);
}

TEST_CASE("philox streams") {
    PhiloxRng a(5, 0), b(5, 0), c(5, 1);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a(), y = b(), z = c();
        CHECK(x == y);
        differs |= x != z;
    }
    CHECK(differs);
    PhiloxRng u(3, 9);
    double mean = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double x = u.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        mean += x;
    }
    CHECK(mean / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("philox known answer") {
    // Random123 reference vector for philox4x32-10, counter 0 and key 0.
    PhiloxRng r(0, 0);
    CHECK(r() == 0x6627e8d5u);
    CHECK(r() == 0xe169c58du);
    CHECK(r() == 0xbc57ac4cu);
    CHECK(r() == 0x9b00dbd8u);
}
