#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ctlab/density.hpp"
#include "ctlab/rng.hpp"

using namespace ctlab;

TEST_CASE("norm_cdf_inv inverts norm_cdf to double precision") {
    for (double p : {1e-12, 1e-6, 0.02425, 0.3, 0.5, 0.7, 0.97, 1.0 - 1e-9}) {
        double x = norm_cdf_inv(p);
        REQUIRE(norm_cdf(x) == Catch::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("uniform_box discretizes to unit mass and exact values") {
    GridSpec g(1, 64);
    Density f = uniform_box({0.25}, {0.75});
    ScalarField field = f.discretize(g);
    REQUIRE(integrate(field) == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(field[0] == 0.0);
    REQUIRE(field[32] == Catch::Approx(2.0).epsilon(1e-12));
    for (double v : field.v) REQUIRE(v >= 0.0);
}

TEST_CASE("truncated gaussian: normalization, cdf monotone, sup") {
    Density f = truncated_gaussian({0.3, 0.7}, 0.2);
    GridSpec g(2, 32);
    ScalarField field = f.discretize(g);
    REQUIRE(integrate(field) == Catch::Approx(1.0).epsilon(1e-12));
    const AxisDensity& ax = f.axis[0];
    REQUIRE(ax.cdf(0.0) == 0.0);
    REQUIRE(ax.cdf(1.0) == 1.0);
    double prev = -1.0;
    for (int i = 0; i <= 20; ++i) {
        double c = ax.cdf(i / 20.0);
        REQUIRE(c >= prev);
        prev = c;
    }
    REQUIRE(f.sup() == Catch::Approx(ax.sup() * f.axis[1].sup()));
    REQUIRE(ax.sup() == Catch::Approx(ax.pdf(0.3)));
}

TEST_CASE("inverse CDF round trip for every family") {
    std::vector<AxisDensity> densities;
    densities.push_back(AxisDensity::piecewise({0.0, 1.0}, {1.0}));
    densities.push_back(AxisDensity::piecewise({0.1, 0.3, 0.5, 0.9}, {2.0, 0.0, 1.0}));
    densities.push_back(AxisDensity::trunc_normal(0.4, 0.15, 0.0, 1.0));
    densities.push_back(AxisDensity::trunc_normal(-0.2, 0.5, 0.0, 1.0));
    CounterRng rng(99);
    for (const auto& d : densities) {
        for (int k = 0; k < 200; ++k) {
            double p = rng.uniform_open(k);
            double x = d.inv_cdf(p);
            REQUIRE(d.cdf(x) == Catch::Approx(p).margin(1e-11));
            REQUIRE(x >= d.support_lo());
            REQUIRE(x <= d.support_hi());
        }
    }
}

TEST_CASE("scaled axis density is the law of s*X") {
    AxisDensity d = AxisDensity::trunc_normal(0.4, 0.15, 0.0, 1.0);
    AxisDensity ds = d.scaled(0.35);
    for (double x : {0.05, 0.1, 0.2, 0.34}) {
        REQUIRE(ds.cdf(x) == Catch::Approx(d.cdf(x / 0.35)).margin(1e-13));
        REQUIRE(ds.pdf(x) == Catch::Approx(d.pdf(x / 0.35) / 0.35).margin(1e-10));
    }
    AxisDensity p = AxisDensity::piecewise({0.25, 0.75}, {1.0});
    AxisDensity ps = p.scaled(0.5);
    REQUIRE(ps.support_lo() == Catch::Approx(0.125));
    REQUIRE(ps.support_hi() == Catch::Approx(0.375));
    REQUIRE(ps.pdf(0.2) == Catch::Approx(4.0));
}

TEST_CASE("sampling is deterministic and lands in support") {
    Density f = truncated_gaussian({0.5}, 0.25);
    CounterRng rng(1234);
    for (int k = 0; k < 100; ++k) {
        auto a = f.sample(rng, k, 0);
        auto b = f.sample(rng, k, 0);
        REQUIRE(a[0] == b[0]);
        REQUIRE(a[0] >= 0.0);
        REQUIRE(a[0] <= 1.0);
    }
}

TEST_CASE("descriptor parsing errors") {
    REQUIRE_THROWS_AS(density_from_json({{"family", "uniform_box"}, {"lo", {0.5}}, {"hi", {0.4}}}, 1),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(density_from_json({{"family", "nope"}}, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(
        density_from_json({{"family", "piecewise_constant"}, {"breaks", {0.0, 1.0}}, {"values", {1.0}}}, 2),
        std::invalid_argument);
}

TEST_CASE("density pair keeps both masses balanced") {
    GridSpec g(1, 128);
    DensityPair pair(uniform_box({0.0}, {1.0}), uniform_box({0.25}, {0.75}), g);
    REQUIRE(std::abs(integrate(pair.f) - 1.0) <= 1e-9);
    REQUIRE(std::abs(integrate(pair.g) - 1.0) <= 1e-9);
    REQUIRE(std::abs(integrate(pair.f) - integrate(pair.g)) <= 1e-12);
}
