#pragma once

// The one-sided gradient-penalty problem on a grid: maximize
//   <u, f-g>  -  (lambda/2) \int (|grad u| - 1)_+^2 sigma dx
// over potentials u fixed to the sigma-weighted mean-zero gauge. The
// maximizer's gradient encodes the optimal flow through the extremality map
//   w_u = -lambda sigma (|grad u| - 1)_+ grad u / |grad u|,
// which is also how the solver's first-order residual is assembled:
// grad objective = (f - g) - div w_u.

#include <cmath>
#include <stdexcept>
#include <string>

#include "ctlab/density.hpp"
#include "ctlab/grid.hpp"
#include "ctlab/sigma.hpp"

namespace ctlab {

struct GPProblem {
    DensityPair pair;
    SigmaField sigma;
    double lambda = 1.0;

    GPProblem(DensityPair p, SigmaField s, double lam)
        : pair(std::move(p)), sigma(std::move(s)), lambda(lam) {
        if (!(lambda > 0.0)) throw std::invalid_argument("GPProblem: lambda must be positive");
        require_same_grid(pair.grid, sigma.density.grid, "GPProblem");
        double imbalance = integrate(pair.f) - integrate(pair.g);
        if (std::abs(imbalance) > 1e-9) throw std::invalid_argument("GPProblem: f and g masses differ");
    }

    const GridSpec& grid() const { return pair.grid; }
    double diameter() const { return std::sqrt(double(pair.grid.dim)); }
};

struct SolverConfig {
    int max_iterations = 20000;
    double tolerance = 1e-6;  // on the projected-gradient L2 norm
    double initial_step = 1.0;
    double armijo = 0.25;
    double step_grow = 1.3;
    int max_backtracks = 60;
};

struct GPSolution {
    ScalarField u;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {
inline double sigma_mean(const ScalarField& x, const ScalarField& sigma) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        num += x[k] * sigma[k];
        den += sigma[k];
    }
    return num / den;
}

inline void project_sigma_mean_zero(ScalarField& x, const ScalarField& sigma) {
    double m = sigma_mean(x, sigma);
    for (double& v : x.v) v -= m;
}
}  // namespace detail

inline double gp_objective(const GPProblem& prob, const ScalarField& u) {
    require_same_grid(prob.grid(), u.grid, "gp_objective");
    const ScalarField& sig = prob.sigma.density;
    VectorField gu = gradient(u);
    double linear = 0.0, penalty = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        linear += u[k] * (prob.pair.f[k] - prob.pair.g[k]);
        double r2 = 0.0;
        for (int a = 0; a < u.grid.dim; ++a) r2 += gu.comp[a][k] * gu.comp[a][k];
        double excess = std::sqrt(r2) - 1.0;
        if (excess > 0.0) penalty += excess * excess * sig[k];
    }
    const double vol = u.grid.cell_volume();
    return linear * vol - 0.5 * prob.lambda * penalty * vol;
}

// w_u = -lambda sigma (|grad u| - 1)_+ grad u / |grad u|, extended by zero
// where |grad u| <= 1 or sigma = 0
inline VectorField extremality_map(const GPProblem& prob, const ScalarField& u) {
    require_same_grid(prob.grid(), u.grid, "extremality_map");
    const ScalarField& sig = prob.sigma.density;
    VectorField gu = gradient(u);
    VectorField w(u.grid);
    for (std::size_t k = 0; k < u.size(); ++k) {
        double r2 = 0.0;
        for (int a = 0; a < u.grid.dim; ++a) r2 += gu.comp[a][k] * gu.comp[a][k];
        double r = std::sqrt(r2);
        if (r <= 1.0 || sig[k] == 0.0) continue;
        double scale = -prob.lambda * sig[k] * (r - 1.0) / r;
        for (int a = 0; a < u.grid.dim; ++a) w.comp[a][k] = scale * gu.comp[a][k];
    }
    return w;
}

// ascent direction (f-g) - div w_u, projected to the sigma-mean-zero gauge
inline ScalarField gp_gradient(const GPProblem& prob, const ScalarField& u) {
    ScalarField grad = divergence(extremality_map(prob, u));
    for (std::size_t k = 0; k < grad.size(); ++k)
        grad[k] = (prob.pair.f[k] - prob.pair.g[k]) - grad[k];
    detail::project_sigma_mean_zero(grad, prob.sigma.density);
    return grad;
}

// Monotone accelerated ascent: extrapolated gradient steps with Armijo
// backtracking, with the momentum sequence restarted whenever the
// extrapolated step fails to improve on the incumbent. Accepted objective
// values are nondecreasing, and the convergence test is the projected
// gradient norm at the incumbent.
inline GPSolution solve_gp(const GPProblem& prob, const SolverConfig& cfg = {}) {
    if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("solve_gp: tolerance must be positive");
    const GridSpec& grid = prob.grid();
    const double diam = prob.diameter();
    const double value_bound = 0.5 * prob.lambda * (diam / prob.lambda) * (diam / prob.lambda) + diam;

    GPSolution sol;
    sol.u = ScalarField(grid);
    double f_u = gp_objective(prob, sol.u);
    ScalarField u_prev = sol.u;
    double step = cfg.initial_step;
    double t_mom = 1.0;  // Nesterov sequence; beta = (t_k - 1) / t_{k+1}

    // within-noise slack keeps the line search from stalling once per-step
    // objective gains drop below the roundoff of the quadrature sum
    auto noise = [](double f) { return 1e-14 * (1.0 + std::abs(f)); };
    auto try_step = [&](const ScalarField& base, const ScalarField& dir, double dir_norm2,
                        double f_base, ScalarField& out, double& f_out) -> bool {
        for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
            out = base;
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += step * dir[k];
            f_out = gp_objective(prob, out);
            if (f_out + noise(f_base) >= f_base + cfg.armijo * step * dir_norm2) return true;
            step *= 0.5;
        }
        return false;
    };

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        ScalarField g_u = gp_gradient(prob, sol.u);
        sol.grad_norm = l2_norm(g_u);
        sol.iterations = it;
        if (sol.grad_norm <= cfg.tolerance) {
            sol.converged = true;
            break;
        }

        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
        const double beta = (t_mom - 1.0) / t_next;

        ScalarField u_next;
        double f_next = -HUGE_VAL;
        bool accepted;
        if (beta > 0.0) {
            ScalarField y = sol.u;
            for (std::size_t k = 0; k < y.size(); ++k) y[k] += beta * (y[k] - u_prev[k]);
            ScalarField g_y = gp_gradient(prob, y);
            double f_y = gp_objective(prob, y);
            accepted = try_step(y, g_y, inner(g_y, g_y), f_y, u_next, f_next) &&
                       f_next >= f_u - noise(f_u);
            if (!accepted) t_next = 1.0;  // extrapolation failed: restart momentum
        } else {
            accepted = try_step(sol.u, g_u, inner(g_u, g_u), f_u, u_next, f_next);
            if (!accepted) break;  // step underflow, no ascent at floating-point resolution
        }
        if (!accepted && !try_step(sol.u, g_u, inner(g_u, g_u), f_u, u_next, f_next))
            break;

        t_mom = t_next;
        u_prev = sol.u;
        sol.u = std::move(u_next);
        detail::project_sigma_mean_zero(sol.u, prob.sigma.density);
        f_u = gp_objective(prob, sol.u);
        if (!std::isfinite(f_u)) throw std::runtime_error("solve_gp: non-finite objective");
        if (f_u > value_bound + 1e-9)
            throw std::runtime_error("solve_gp: objective exceeded its a-priori bound " +
                                     std::to_string(value_bound));
        step *= cfg.step_grow;
    }
    sol.value = f_u;
    return sol;
}

}  // namespace ctlab
