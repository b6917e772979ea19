#pragma once

// Flow side of the duality: the congestion cost
//   H(x, z) = z^2 / (2 lambda sigma(x)) + |z|   (sigma > 0)
//           = 0 or +inf                         (sigma = 0, z = 0 or not),
// repair of approximate flows into exactly divergence-feasible candidates,
// and the optimality certificate gap = cost(w) - objective(u), which is
// nonnegative for every potential and every feasible flow because the grid
// operators are exact adjoints.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "ctlab/gp.hpp"
#include "ctlab/grid.hpp"
#include "ctlab/rng.hpp"
#include "ctlab/sigma.hpp"

namespace ctlab {

struct BeckmannCandidate {
    VectorField w;
    double feasibility_residual = 0.0;  // L2 norm of div(w) - (f-g)
    double cost = 0.0;                  // may be +inf when a sigma-floor cell carries flow
};

struct DualityCertificate {
    double gp_value = 0.0;   // lower bound on the shared optimum
    double bp_value = 0.0;   // upper bound (feasible flow cost)
    double gap = 0.0;
    double relative_gap = 0.0;
};

// \int H(x, |w|) dx with floor thresholds deciding the sigma = 0 cases;
// +inf is returned, never clamped, when flow crosses a vanishing-sigma cell
inline double congestion_cost(const VectorField& w, const SigmaField& sigma, double lambda) {
    require_same_grid(w.grid, sigma.density.grid, "congestion_cost");
    if (!(lambda > 0.0)) throw std::invalid_argument("congestion_cost: lambda must be positive");
    const double sigma_floor = 1e-12 * sigma.max_density();
    const double w_floor = 1e-12 * max_abs(w);
    const ScalarField& sig = sigma.density;
    double acc = 0.0;
    for (std::size_t k = 0; k < sig.size(); ++k) {
        double r2 = 0.0;
        for (int a = 0; a < w.grid.dim; ++a) r2 += w.comp[a][k] * w.comp[a][k];
        double r = std::sqrt(r2);
        if (sig[k] > sigma_floor) {
            acc += r2 / (2.0 * lambda * sig[k]) + r;
        } else if (r > w_floor) {
            return HUGE_VAL;
        }
    }
    return acc * w.grid.cell_volume();
}

namespace detail {
// CG for div(grad(phi)) = rhs on the mean-zero subspace (the operator is
// symmetric negative semidefinite with constants as kernel)
inline ScalarField solve_poisson(const GridSpec& grid, ScalarField rhs, double rel_tol = 1e-12,
                                 int max_iter = 0) {
    if (max_iter <= 0) max_iter = 40 * grid.n * grid.dim + 200;
    auto remove_mean = [](ScalarField& x) {
        double m = 0.0;
        for (double v : x.v) m += v;
        m /= double(x.size());
        for (double& v : x.v) v -= m;
    };
    remove_mean(rhs);

    // solve (-div grad) phi = -rhs by CG
    ScalarField phi(grid);
    ScalarField r = rhs;
    for (double& v : r.v) v = -v;
    ScalarField p = r;
    double rr = inner(r, r);
    const double stop2 = rel_tol * rel_tol * rr;
    if (rr == 0.0) return phi;
    for (int it = 0; it < max_iter; ++it) {
        ScalarField ap = divergence(gradient(p));
        for (double& v : ap.v) v = -v;
        double pap = inner(p, ap);
        if (pap <= 0.0) break;
        double alpha = rr / pap;
        for (std::size_t k = 0; k < phi.size(); ++k) {
            phi[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        remove_mean(r);
        double rr_new = inner(r, r);
        if (rr_new <= stop2) return phi;
        double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = r[k] + beta * p[k];
    }
    if (inner(r, r) > stop2)
        throw std::runtime_error("solve_poisson: CG stalled, residual " + std::to_string(std::sqrt(inner(r, r))));
    return phi;
}
}  // namespace detail

// Repairs w into an exactly feasible Beckmann candidate by subtracting the
// gradient of the Poisson solve of the divergence defect.
inline BeckmannCandidate project_divergence(const VectorField& w, const DensityPair& pair,
                                            const SigmaField& sigma, double lambda) {
    require_same_grid(w.grid, pair.grid, "project_divergence");
    if (std::abs(integrate(pair.f) - integrate(pair.g)) > 1e-9)
        throw std::invalid_argument("project_divergence: f-g carries net mass");

    ScalarField defect = divergence(w);
    for (std::size_t k = 0; k < defect.size(); ++k) defect[k] -= pair.f[k] - pair.g[k];
    ScalarField phi = detail::solve_poisson(w.grid, defect);
    VectorField corr = gradient(phi);

    BeckmannCandidate cand;
    cand.w = w;
    for (int a = 0; a < w.grid.dim; ++a)
        for (std::size_t k = 0; k < cand.w.comp[a].size(); ++k) cand.w.comp[a][k] -= corr.comp[a][k];

    ScalarField res = divergence(cand.w);
    for (std::size_t k = 0; k < res.size(); ++k) res[k] -= pair.f[k] - pair.g[k];
    cand.feasibility_residual = l2_norm(res);
    cand.cost = congestion_cost(cand.w, sigma, lambda);
    return cand;
}

// gap = cost of the repaired extremality flow minus the objective at u;
// nonnegative by construction
inline DualityCertificate duality_certificate(const GPProblem& prob, const GPSolution& sol) {
    DualityCertificate cert;
    cert.gp_value = gp_objective(prob, sol.u);
    VectorField w = extremality_map(prob, sol.u);
    BeckmannCandidate cand = project_divergence(w, prob.pair, prob.sigma, prob.lambda);
    cert.bp_value = cand.cost;
    cert.gap = cert.bp_value - cert.gp_value;
    cert.relative_gap = cert.gap / std::max(std::abs(cert.gp_value), 1e-16);
    return cert;
}

// Pointwise inequality behind the certificate and the extremality bound:
//   xi*.xi + (lambda sigma / 2)(|xi|-1)_+^2 + H(x,|xi*|)
//     >= |xi* + lambda sigma (|xi|-1)_+ xi/|xi||^2 / (2 lambda sigma).
// Draws random (sigma, lambda, xi, xi*) tuples across scales and counts
// violations beyond 1e-12 * scale; the expected count is zero.
inline long long phi_lower_bound_check(long long samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("phi_lower_bound_check: samples must be >= 1");
    CounterRng rng(seed);
    long long violations = 0;
    for (long long k = 0; k < samples; ++k) {
        const int d = 1 + int(rng.bits(k, 0) & 1ULL);
        const double sigma = std::exp(-6.0 + 8.0 * rng.uniform_open(k, 1));
        const double lambda = std::exp(-3.0 + 6.0 * rng.uniform_open(k, 2));
        const double xi_scale = std::exp(-2.0 + 4.0 * rng.uniform_open(k, 3));
        const double xs_scale = std::exp(-2.0 + 4.0 * rng.uniform_open(k, 4));
        double xi[2] = {0.0, 0.0}, xs[2] = {0.0, 0.0};
        for (int a = 0; a < d; ++a) {
            xi[a] = xi_scale * norm_cdf_inv(rng.uniform_open(k, 5 + a));
            xs[a] = xs_scale * norm_cdf_inv(rng.uniform_open(k, 7 + a));
        }
        double xi_norm = std::hypot(xi[0], xi[1]);
        double xs_norm = std::hypot(xs[0], xs[1]);
        double dot = xi[0] * xs[0] + xi[1] * xs[1];
        double excess = std::max(xi_norm - 1.0, 0.0);
        double lhs = dot + 0.5 * lambda * sigma * excess * excess +
                     xs_norm * xs_norm / (2.0 * lambda * sigma) + xs_norm;
        double rhs = 0.0;
        for (int a = 0; a < d; ++a) {
            double dir = (xi_norm > 0.0) ? xi[a] / xi_norm : 0.0;
            double c = xs[a] + lambda * sigma * excess * dir;
            rhs += c * c;
        }
        rhs /= 2.0 * lambda * sigma;
        double scale = std::max({std::abs(lhs), rhs, 1.0});
        if (lhs < rhs - 1e-12 * scale) ++violations;
    }
    return violations;
}

struct ExtremalityBound {
    double residual = 0.0;  // squared L2 distance between w0 and the mapped potential flow
    double bound = 0.0;     // 2 lambda ||sigma||_inf epsilon
    bool holds = false;
};

// Quantitative extremality: a flow within epsilon of optimal cost and an
// epsilon-approximate potential satisfy
//   ||w0 + lambda sigma (|grad u|-1)_+ grad u/|grad u|||_{L2}^2
//      <= 2 lambda ||sigma||_inf epsilon.
inline ExtremalityBound extremality_residual_bound(const GPProblem& prob, const ScalarField& u,
                                                   const VectorField& w0, double epsilon) {
    require_same_grid(prob.grid(), u.grid, "extremality_residual_bound");
    require_same_grid(prob.grid(), w0.grid, "extremality_residual_bound");
    VectorField mapped = extremality_map(prob, u);
    double acc = 0.0;
    for (int a = 0; a < u.grid.dim; ++a)
        for (std::size_t k = 0; k < mapped.comp[a].size(); ++k) {
            double dlt = w0.comp[a][k] - mapped.comp[a][k];
            acc += dlt * dlt;
        }
    ExtremalityBound out;
    out.residual = acc * u.grid.cell_volume();
    out.bound = 2.0 * prob.lambda * prob.sigma.max_density() * epsilon;
    out.holds = out.residual <= out.bound * (1.0 + 1e-9) + 1e-15;
    return out;
}

// gp_value >= w1 + w1^2 / (2 lambda ||sigma||_inf Vol) - slack, with the
// constant read off the Cauchy-Schwarz step of the strict lower bound
// against W1 (Vol = 1 on the unit box, slack = 1% of w1 for discretization)
inline bool w1_lower_bound_check(double gp_value, double w1, double lambda, double sigma_max) {
    double rhs = w1 + w1 * w1 / (2.0 * lambda * sigma_max) - 0.01 * w1;
    return gp_value >= rhs;
}

}  // namespace ctlab
