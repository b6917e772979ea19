#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>

#include "ctlab/beckmann.hpp"
#include "ctlab/w1.hpp"
#include "oracles.hpp"

using namespace ctlab;

namespace {
GPProblem oracle_problem(int n, double lambda, int t_nodes = 64) {
    DensityPair pair = oracle::oracle_pair_1d(n);
    SigmaField sigma = sigma_quadrature(pair, t_nodes);
    return GPProblem(pair, sigma, lambda);
}

// the unique discrete feasible flow in 1-D: running sums of (f-g) h
VectorField discrete_cdf_flow(const DensityPair& pair) {
    VectorField w(pair.grid);
    double acc = 0.0;
    const double h = pair.grid.spacing();
    for (int i = 0; i + 1 < pair.grid.n; ++i) {
        acc += (pair.f[i] - pair.g[i]) * h;
        w.comp[0][i] = acc;
    }
    return w;
}
}  // namespace

TEST_CASE("congestion cost: zero flow and single-cell arithmetic") {
    GPProblem prob = oracle_problem(64, 1.0);
    VectorField zero(prob.grid());
    REQUIRE(congestion_cost(zero, prob.sigma, 1.0) == 0.0);

    SigmaField sig = prob.sigma;
    double smax = sig.max_density();
    int cell = 0;
    for (int i = 0; i < prob.grid().n; ++i)
        if (sig.density[i] == smax) cell = i;
    VectorField w(prob.grid());
    w.comp[0][cell] = 1.0;
    double expect = prob.grid().cell_volume() * (1.0 / (2.0 * 1.0 * smax) + 1.0);
    REQUIRE(congestion_cost(w, sig, 1.0) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("congestion cost: flow across vanishing sigma is flagged infinite") {
    GPProblem prob = oracle_problem(32, 1.0);
    SigmaField sig = prob.sigma;
    sig.density[10] = 0.0;
    VectorField w(prob.grid());
    w.comp[0][10] = 0.5;
    REQUIRE(std::isinf(congestion_cost(w, sig, 1.0)));
    VectorField w2(prob.grid());
    w2.comp[0][11] = 0.5;
    REQUIRE(std::isfinite(congestion_cost(w2, sig, 1.0)));
}

TEST_CASE("1-D cdf flow evaluates to the oracle optimum") {
    const int n = 512;
    DensityPair pair = oracle::oracle_pair_1d(n);
    SigmaField sig = sigma_quadrature(pair, 128);
    VectorField w = discrete_cdf_flow(pair);
    double cost = congestion_cost(w, sig, 1.0);
    double vstar = oracle::v_star_1d(pair, 1.0, 2048, 1000);
    REQUIRE(std::abs(cost - vstar) / vstar <= 0.005);
}

TEST_CASE("project_divergence: feasible input is unchanged") {
    const int n = 128;
    DensityPair pair = oracle::oracle_pair_1d(n);
    SigmaField sig = sigma_quadrature(pair, 48);
    VectorField w = discrete_cdf_flow(pair);
    BeckmannCandidate cand = project_divergence(w, pair, sig, 1.0);
    REQUIRE(cand.feasibility_residual <= 1e-10);
    for (int i = 0; i < n; ++i) REQUIRE(std::abs(cand.w.comp[0][i] - w.comp[0][i]) <= 1e-10);
}

TEST_CASE("project_divergence: zero flow is repaired to exact feasibility") {
    for (int dim : {1, 2}) {
        GridSpec g(dim, dim == 1 ? 128 : 24);
        DensityPair pair =
            dim == 1 ? oracle::oracle_pair_1d(g.n)
                     : DensityPair(truncated_gaussian({0.3, 0.4}, 0.25),
                                   truncated_gaussian({0.7, 0.6}, 0.25), g);
        SigmaField sig = sigma_quadrature(pair, 32);
        VectorField zero(g);
        BeckmannCandidate cand = project_divergence(zero, pair, sig, 1.0);
        REQUIRE(cand.feasibility_residual <= 1e-10);
        ScalarField div = divergence(cand.w);
        for (std::size_t k = 0; k < div.size(); ++k)
            REQUIRE(div[k] == Catch::Approx(pair.f[k] - pair.g[k]).margin(1e-9));
    }
}

TEST_CASE("project_divergence repairs the solved extremality flow cheaply") {
    const int n = 256;
    GPProblem prob = oracle_problem(n, 1.0);
    GPSolution sol = solve_gp(prob, {.max_iterations = 50000, .tolerance = 1e-6});
    VectorField w = extremality_map(prob, sol.u);
    double cost_before = congestion_cost(w, prob.sigma, prob.lambda);
    BeckmannCandidate cand = project_divergence(w, prob.pair, prob.sigma, prob.lambda);
    REQUIRE(cand.feasibility_residual <= 1e-10);
    REQUIRE(std::abs(cand.cost - cost_before) / cost_before <= 0.005);
}

TEST_CASE("weak duality is discrete-exact") {
    const int n = 64;
    DensityPair pair = oracle::oracle_pair_1d(n);
    SigmaField sig = sigma_quadrature(pair, 32);
    VectorField feasible = discrete_cdf_flow(pair);
    CounterRng rng(21);
    for (double lambda : {0.5, 1.0, 3.0}) {
        GPProblem prob(pair, sig, lambda);
        double cost = congestion_cost(feasible, sig, lambda);
        for (int rep = 0; rep < 25; ++rep) {
            ScalarField u(prob.grid());
            for (std::size_t k = 0; k < u.size(); ++k)
                u[k] = 3.0 * (2.0 * rng.uniform(rep * 100 + k) - 1.0);
            REQUIRE(gp_objective(prob, u) <= cost + 1e-10);
        }
    }
}

TEST_CASE("duality certificate: identical densities") {
    GridSpec g(1, 64);
    DensityPair same(uniform_box({0.0}, {1.0}), uniform_box({0.0}, {1.0}), g);
    GPProblem prob(same, sigma_quadrature(same, 32), 1.0);
    GPSolution sol = solve_gp(prob, {.max_iterations = 50, .tolerance = 1e-8});
    DualityCertificate cert = duality_certificate(prob, sol);
    REQUIRE(std::abs(cert.gp_value) <= 1e-10);
    REQUIRE(std::abs(cert.bp_value) <= 1e-10);
    REQUIRE(cert.gap >= -1e-10);
    REQUIRE(cert.gap <= 1e-8);
}

TEST_CASE("duality certificate: 1-D oracle gap within one percent") {
    const int n = 512;
    GPProblem prob = oracle_problem(n, 1.0, 128);
    GPSolution sol = solve_gp(prob, {.max_iterations = 100000, .tolerance = 1e-6});
    DualityCertificate cert = duality_certificate(prob, sol);
    REQUIRE(cert.gap >= -1e-10);
    REQUIRE(cert.relative_gap <= 1e-2);
}

TEST_CASE("phi pointwise lower bound: special cases and sweep") {
    REQUIRE(phi_lower_bound_check(100000, 42) == 0);

    auto t0 = std::chrono::steady_clock::now();
    REQUIRE(phi_lower_bound_check(100000, 7) == 0);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(secs <= 5.0);
}

TEST_CASE("extremality residual bound holds and tracks the gap") {
    const int n = 256;
    GPProblem prob = oracle_problem(n, 1.0);
    double prev_residual = HUGE_VAL;
    for (double tol : {1e-2, 1e-4, 1e-6}) {
        GPSolution sol = solve_gp(prob, {.max_iterations = 100000, .tolerance = tol});
        DualityCertificate cert = duality_certificate(prob, sol);
        VectorField w = extremality_map(prob, sol.u);
        BeckmannCandidate cand = project_divergence(w, prob.pair, prob.sigma, prob.lambda);
        ExtremalityBound eb = extremality_residual_bound(prob, sol.u, cand.w, cert.gap);
        CAPTURE(tol, eb.residual, eb.bound, cert.gap);
        REQUIRE(eb.holds);
        REQUIRE(eb.residual <= prev_residual * (1.0 + 1e-9));
        prev_residual = eb.residual;
    }
}

TEST_CASE("w1 lower bound check with the explicit constant") {
    REQUIRE(w1_lower_bound_check(0.0, 0.0, 1.0, 1.0));

    const int n = 256;
    DensityPair pair = oracle::oracle_pair_1d(n);
    SigmaField sig = sigma_quadrature(pair, 64);
    double w1 = w1_cdf_1d(pair);
    REQUIRE(w1 == Catch::Approx(0.125).margin(1e-12));
    double prev_excess = HUGE_VAL;
    for (double lambda : {0.5, 1.0, 2.0, 5.0, 10.0}) {
        GPProblem prob(pair, sig, lambda);
        GPSolution sol = solve_gp(prob, {.max_iterations = 100000, .tolerance = 1e-6});
        REQUIRE(w1_lower_bound_check(sol.value, w1, lambda, sig.max_density()));
        double excess = sol.value - w1;
        REQUIRE(excess < prev_excess);
        prev_excess = excess;
    }
}
