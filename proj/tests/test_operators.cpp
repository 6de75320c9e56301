#include <doctest.h>

#include "ldpspde/errors.hpp"
#include "ldpspde/noise.hpp"
#include "ldpspde/operators.hpp"
#include "ldpspde/rng.hpp"

#include <cmath>
#include <numbers>

using namespace ldp;

namespace {

double e(std::size_t k, double x) { return std::sqrt(2.0 / std::numbers::pi) * std::sin(k * x); }
double de(std::size_t k, double x) { return std::sqrt(2.0 / std::numbers::pi) * k * std::cos(k * x); }

// ∫₀^π e_i e_j' e_k dx by fine Simpson quadrature.
double tensor_quadrature(std::size_t k, std::size_t i, std::size_t j) {
    return simpson([&](double x) { return e(i, x) * de(j, x) * e(k, x); }, 0.0, std::numbers::pi, 4096);
}

}  // namespace

TEST_CASE("linear operator") {
    const TripleSpec s = TripleSpec::dirichlet_laplacian(3);
    const DriftOperator op = builtin_linear(s, 0.5);
    const HVector out = op.apply(0.0, HVector{1.0, 1.0, 1.0});
    CHECK(out[0] == doctest::Approx(-0.5));
    CHECK(out[1] == doctest::Approx(-2.0));
    CHECK(out[2] == doctest::Approx(-4.5));
    CHECK(op.constants().theta == 1.0);
    CHECK(op.constants().C == 0.25);
    CHECK(op.rho(HVector{1.0, 2.0, 3.0}) == 0.0);
    CHECK_THROWS_AS(builtin_linear(s, 0.0), ValidationError);
}

TEST_CASE("reaction-diffusion") {
    const TripleSpec s = TripleSpec::dirichlet_laplacian(2);
    CHECK_THROWS_AS(builtin_reaction_diffusion(s, 1.0, 1.0, 4), ValidationError);
    CHECK_THROWS_AS(builtin_reaction_diffusion(s, 1.0, -1.0, 3), ValidationError);
    const DriftOperator op = builtin_reaction_diffusion(s, 1.0, 2.0, 3);
    const HVector out = op.apply(0.0, HVector{1.0, -2.0});
    CHECK(out[0] == doctest::Approx(-1.0 - 2.0));
    CHECK(out[1] == doctest::Approx(8.0 + 16.0));
    CHECK(op.constants().beta == 4.0);
    ConditionCheckOptions o;
    o.seed = 3;
    o.radius_max = 10.0;
    const auto rep = check_conditions(op, s, o);
    CHECK(rep.all_pass());
}

TEST_CASE("convection tensor matches quadrature") {
    const std::size_t d = 6;
    const auto t = ConvectionTensor::dirichlet_sine(d);
    std::vector<double> dense(d * d * d, 0.0);
    for (const auto& en : t.entries()) dense[(en.k * d + en.i) * d + en.j] += en.value;
    for (std::size_t k = 1; k <= d; ++k) {
        for (std::size_t i = 1; i <= d; ++i) {
            for (std::size_t j = 1; j <= d; ++j) {
                CHECK(dense[((k - 1) * d + (i - 1)) * d + (j - 1)] ==
                      doctest::Approx(tensor_quadrature(k, i, j)).epsilon(1e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("convection at d = 2 by hand") {
    const auto t = ConvectionTensor::dirichlet_sine(2);
    const HVector v{0.7, -1.3};
    HVector out(2);
    t.apply(v, out);
    const double c = 0.5 * std::sqrt(2.0 / std::numbers::pi);
    CHECK(out[0] == doctest::Approx(-c * v[0] * v[1]).epsilon(1e-13));
    CHECK(out[1] == doctest::Approx(c * v[0] * v[0]).epsilon(1e-13));
}

TEST_CASE("convection vjp against finite differences") {
    const std::size_t d = 8;
    const auto t = ConvectionTensor::dirichlet_sine(d);
    PhiloxRng rng(4, 0);
    HVector v(d), w(d), g(d), p(d), m(d), bp(d), bm(d);
    for (std::size_t k = 0; k < d; ++k) {
        v[k] = rng.uniform() - 0.5;
        w[k] = rng.uniform() - 0.5;
    }
    t.vjp(v, w, g);
    for (std::size_t l = 0; l < d; ++l) {
        p = v;
        m = v;
        p[l] += 1e-6;
        m[l] -= 1e-6;
        t.apply(p, bp);
        t.apply(m, bm);
        double fd = 0.0;
        for (std::size_t k = 0; k < d; ++k) fd += w[k] * (bp[k] - bm[k]) / 2e-6;
        CHECK(g[l] == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("convection is skew: <B(v), v> = 0") {
    const std::size_t d = 12;
    const auto t = ConvectionTensor::dirichlet_sine(d);
    PhiloxRng rng(9, 0);
    HVector v(d), b(d);
    for (auto& x : v) x = rng.uniform() - 0.5;
    t.apply(v, b);
    double dot = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        dot += b[k] * v[k];
        nb += b[k] * b[k];
    }
    CHECK(std::fabs(dot) <= 1e-12 * (1.0 + std::sqrt(nb)));
}

TEST_CASE("builtin_linear satisfies H1-H4 at five seeds") {
    const TripleSpec s = TripleSpec::dirichlet_laplacian(8);
    const DriftOperator op = builtin_linear(s, 1.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ConditionCheckOptions o;
        o.seed = seed;
        const auto rep = check_conditions(op, s, o);
        for (const char* name : {"H1", "H2", "H3", "H4"}) {
            CHECK(rep.at(name).pass);
            CHECK(rep.at(name).margin > 0.0);
            CHECK(rep.at(name).samples == 1000);
        }
    }
}

TEST_CASE("inflated coercivity constant fails H3 with a witness") {
    const TripleSpec s = TripleSpec::dirichlet_laplacian(4);
    const DriftOperator op = builtin_linear(s, 1.0);
    auto c = op.constants();
    c.theta = 10.0;
    const auto bad = op.with_constants(c);
    const auto rep = check_conditions(bad, s, {});
    const auto& h3 = rep.at("H3");
    CHECK_FALSE(h3.pass);
    CHECK(h3.margin < 0.0);
    REQUIRE(h3.witness.size() == 4);
    CHECK(h3.witness_norm > 0.0);
    // the witness really violates 2<A v, v> + θ‖v‖_V² ≤ F(1 + ‖v‖²)
    const HVector a = bad.apply(0.0, h3.witness);
    double lhs = 10.0 * std::pow(s.norm_v(h3.witness), 2.0);
    for (std::size_t k = 0; k < 4; ++k) lhs += 2.0 * a[k] * h3.witness[k];
    CHECK(lhs > 1.0 + std::pow(s.norm_h(h3.witness), 2.0));
}

TEST_CASE("discontinuous drift fails H1") {
    const TripleSpec s({1.0});
    DriftOperator::Parts p;
    p.name = "step";
    p.stiff = {1.0};
    p.remainder = [](double, std::span<const double> v, std::span<double> out) { out[0] = v[0] > 0.0 ? -1.0 : 1.0; };
    p.constants = {1.0, 2.0, 0.0, 10.0};
    const DriftOperator op(p);
    ConditionCheckOptions o;
    o.samples = 2000;
    const auto rep = check_conditions(op, s, o);
    CHECK_FALSE(rep.at("H1").pass);
}

TEST_CASE("burgers passes H2 and the rho bound") {
    const std::size_t d = 16;
    const TripleSpec s = TripleSpec::dirichlet_laplacian(d);
    const DriftOperator op = builtin_burgers(s, 1.0, ConvectionTensor::dirichlet_sine(d));
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        ConditionCheckOptions o;
        o.seed = seed;
        const auto rep = check_conditions(op, s, o);
        CHECK(rep.at("H2").pass);
        CHECK(rep.at("H3").pass);
        CHECK(rep.at("H4").pass);
        CHECK(rep.at("rho-growth").pass);
    }
    CHECK_THROWS_AS(builtin_burgers(TripleSpec({1.0, 2.0}), 1.0, ConvectionTensor::dirichlet_sine(2)),
                    ValidationError);
    CHECK_THROWS_AS(builtin_burgers(s, 1.0, ConvectionTensor::dirichlet_sine(4)), ValidationError);
}

TEST_CASE("remainder vjp falls back to central differences") {
    const TripleSpec s({1.0, 1.0});
    DriftOperator::Parts p;
    p.name = "cubic";
    p.stiff = {1.0, 1.0};
    p.remainder = [](double, std::span<const double> v, std::span<double> out) {
        out[0] = -v[0] * v[0] * v[0] + v[1];
        out[1] = -v[1] * v[1] * v[1];
    };
    p.constants = {1.0, 2.0, 4.0, 10.0};
    const DriftOperator op(p);
    const HVector v{0.5, -1.0}, w{1.0, 2.0};
    HVector g(2);
    op.remainder_vjp(0.0, v, w, g);
    CHECK(g[0] == doctest::Approx(-3.0 * 0.25 * 1.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(1.0 - 3.0 * 1.0 * 2.0).epsilon(1e-8));
}

TEST_CASE("integrate_rate") {
    CHECK(integrate_rate([](double t) { return t; }, 0.0, 2.0) == doctest::Approx(2.0));
    CHECK(integrate_rate([](double) { return 3.0; }, 1.0, 1.0) == 0.0);
}
