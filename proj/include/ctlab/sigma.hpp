#pragma once

// The interpolation measure sigma: the law of z = (1-t)x + ty with x ~ mu,
// y ~ nu, t ~ U[0,1]. Deterministic construction integrates the density of
// (1-t)X + tY over t, written as two integrals over t in (0,1/2) with the
// roles of the densities exchanged so every scale factor stays below 2^d.
// For a fixed t that density factorizes per axis into a 1-D convolution of
// scaled axis densities, which has a closed form for every supported family
// pair; only the t integral is quadrature (midpoint nodes per half).

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ctlab/density.hpp"
#include "ctlab/grid.hpp"
#include "ctlab/rng.hpp"

namespace ctlab {

// closed-form value of (p * q)(z) = \int p(z-u) q(u) du
inline double conv_point(const AxisDensity& p, const AxisDensity& q, double z) {
    using K = AxisDensity::Kind;
    if (p.kind == K::PiecewiseConst && q.kind == K::PiecewiseConst) {
        double acc = 0.0;
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            if (p.values[i] == 0.0) continue;
            for (std::size_t j = 0; j < q.values.size(); ++j) {
                double lo = std::max(q.breaks[j], z - p.breaks[i + 1]);
                double hi = std::min(q.breaks[j + 1], z - p.breaks[i]);
                if (hi > lo) acc += p.values[i] * q.values[j] * (hi - lo);
            }
        }
        return acc;
    }
    if (p.kind == K::TruncNormal && q.kind == K::PiecewiseConst) {
        double acc = 0.0;
        for (std::size_t j = 0; j < q.values.size(); ++j)
            if (q.values[j] != 0.0)
                acc += q.values[j] * (p.cdf(z - q.breaks[j]) - p.cdf(z - q.breaks[j + 1]));
        return acc;
    }
    if (p.kind == K::PiecewiseConst && q.kind == K::TruncNormal) return conv_point(q, p, z);
    // truncated normal pair: gaussian product identity restricted to the overlap
    double A = std::max(q.lo, z - p.hi), B = std::min(q.hi, z - p.lo);
    if (!(B > A)) return 0.0;
    double s2 = p.stddev * p.stddev + q.stddev * q.stddev;
    double s = std::sqrt(s2);
    double sc = p.stddev * q.stddev / s;
    double mc = q.mean + (q.stddev * q.stddev / s2) * (z - p.mean - q.mean);
    double val = norm_pdf((z - p.mean - q.mean) / s) / s * (norm_cdf((B - mc) / sc) - norm_cdf((A - mc) / sc));
    return val / (p.z_norm * q.z_norm);
}

// z values where (p * q) can lose smoothness: pairwise sums of support
// breakpoints
inline std::vector<double> conv_kinks(const AxisDensity& p, const AxisDensity& q) {
    auto pts = [](const AxisDensity& d) -> std::vector<double> {
        if (d.kind == AxisDensity::Kind::PiecewiseConst) return d.breaks;
        return {d.lo, d.hi};
    };
    std::vector<double> out;
    for (double a : pts(p))
        for (double b : pts(q)) out.push_back(a + b);
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {
// 8-point Gauss-Legendre on [a,b]
template <class F>
double gauss8(F&& f, double a, double b) {
    static const double xs[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                 0.9602898564975363};
    static const double ws[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                 0.1012285362903763};
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += ws[k] * (f(c - r * xs[k]) + f(c + r * xs[k]));
    return acc * r;
}
}  // namespace detail

// mean of (p * q) over [a,b], splitting at interior kinks so each panel is
// smooth and the quadrature is exact to roundoff
inline double conv_cell_average(const AxisDensity& p, const AxisDensity& q, double a, double b,
                                const std::vector<double>& kinks_sorted) {
    auto f = [&](double z) { return conv_point(p, q, z); };
    double total = 0.0, x0 = a;
    for (double k : kinks_sorted) {
        if (k <= a) continue;
        if (k >= b) break;
        if (k > x0) {
            total += detail::gauss8(f, x0, k);
            x0 = k;
        }
    }
    total += detail::gauss8(f, x0, b);
    return total / (b - a);
}

struct SigmaField {
    enum class Method { Quadrature, MonteCarlo };

    ScalarField density;
    Method method = Method::Quadrature;
    int t_nodes = 0;
    long long sample_count = 0;
    std::uint64_t seed = 0;
    double raw_mass = 0.0;  // discrete mass before renormalization

    double max_density() const {
        double m = 0.0;
        for (double v : density.v) m = std::max(m, v);
        return m;
    }
};

inline SigmaField sigma_quadrature(const DensityPair& pair, int t_nodes) {
    if (t_nodes < 8) throw std::invalid_argument("sigma_quadrature: t_nodes must be >= 8");
    const GridSpec& g = pair.grid;
    const double h = g.spacing();
    const double dt = 0.5 / t_nodes;

    ScalarField acc(g);
    const Density* first[2] = {&pair.f_desc, &pair.g_desc};
    const Density* second[2] = {&pair.g_desc, &pair.f_desc};
    std::array<std::vector<double>, 2> axis_avg;
    for (int a = 0; a < g.dim; ++a) axis_avg[a].resize(g.n);

    for (int half = 0; half < 2; ++half) {
        for (int k = 0; k < t_nodes; ++k) {
            const double t = (k + 0.5) * dt;
            for (int a = 0; a < g.dim; ++a) {
                AxisDensity pd = first[half]->axis[a].scaled(1.0 - t);
                AxisDensity qd = second[half]->axis[a].scaled(t);
                auto kinks = conv_kinks(pd, qd);
                for (int i = 0; i < g.n; ++i)
                    axis_avg[a][i] = conv_cell_average(pd, qd, i * h, (i + 1) * h, kinks);
            }
            if (g.dim == 1) {
                for (int i = 0; i < g.n; ++i) acc[i] += axis_avg[0][i];
            } else {
                for (int i = 0; i < g.n; ++i)
                    for (int j = 0; j < g.n; ++j) acc[g.index(i, j)] += axis_avg[0][i] * axis_avg[1][j];
            }
        }
    }
    for (double& v : acc.v) v = std::max(v * dt, 0.0);

    SigmaField s;
    s.method = SigmaField::Method::Quadrature;
    s.t_nodes = t_nodes;
    s.raw_mass = integrate(acc);
    if (!(s.raw_mass > 0.0)) throw std::runtime_error("sigma_quadrature: vanishing mass");
    for (double& v : acc.v) v /= s.raw_mass;
    s.density = std::move(acc);
    return s;
}

inline SigmaField sigma_montecarlo(const DensityPair& pair, long long sample_count, std::uint64_t seed) {
    if (sample_count < 10000) throw std::invalid_argument("sigma_montecarlo: need at least 1e4 samples");
    if (!pair.f_desc.has_exact_sampler() || !pair.g_desc.has_exact_sampler())
        throw std::invalid_argument("sigma_montecarlo: descriptors lack an exact sampler");
    const GridSpec& g = pair.grid;
    CounterRng rng(seed);
    std::vector<double> counts(g.cell_count(), 0.0);
    for (long long k = 0; k < sample_count; ++k) {
        auto x = pair.f_desc.sample(rng, std::uint64_t(k), 0);
        auto y = pair.g_desc.sample(rng, std::uint64_t(k), 2);
        const double t = rng.uniform(std::uint64_t(k), 4);
        int idx[2] = {0, 0};
        for (int a = 0; a < g.dim; ++a) {
            double z = (1.0 - t) * x[a] + t * y[a];
            idx[a] = std::min(g.n - 1, std::max(0, int(z * g.n)));
        }
        counts[g.index(idx[0], idx[1])] += 1.0;
    }
    SigmaField s;
    s.method = SigmaField::Method::MonteCarlo;
    s.sample_count = sample_count;
    s.seed = seed;
    s.raw_mass = 1.0;
    s.density = ScalarField(g);
    const double scale = 1.0 / (double(sample_count) * g.cell_volume());
    for (std::size_t c = 0; c < counts.size(); ++c) s.density[c] = counts[c] * scale;
    return s;
}

// sup bound C(d) (||f||_inf + ||g||_inf) with C(d) = \int_0^{1/2} (1-t)^{-d} dt
inline double sigma_sup_bound(const DensityPair& pair) {
    const int d = pair.grid.dim;
    const double c = (d == 1) ? std::log(2.0) : (std::pow(2.0, d - 1) - 1.0) / (d - 1);
    return c * (pair.f_desc.sup() + pair.g_desc.sup());
}

// distance from each cell center to the boundary of the unit box
inline ScalarField boundary_distance(const GridSpec& g) {
    ScalarField out(g);
    if (g.dim == 1) {
        for (int i = 0; i < g.n; ++i) {
            double c = g.center(i);
            out[i] = std::min(c, 1.0 - c);
        }
    } else {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                double cx = g.center(i), cy = g.center(j);
                out[g.index(i, j)] = std::min(std::min(cx, 1.0 - cx), std::min(cy, 1.0 - cy));
            }
    }
    return out;
}

struct ComparabilityRatio {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    bool finite = false;  // both ratios positive and finite
};

// min and max over cells of sigma(x) / dist(x, boundary); when both are
// finite and positive they certify the two-sided comparability bound with
// C = max(max_ratio, 1/min_ratio)
inline ComparabilityRatio comparability_ratio(const SigmaField& sigma, const GridSpec& grid) {
    require_same_grid(sigma.density.grid, grid, "comparability_ratio");
    ScalarField dist = boundary_distance(grid);
    ComparabilityRatio r;
    r.min_ratio = HUGE_VAL;
    r.max_ratio = 0.0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
        double ratio = sigma.density[k] / dist[k];
        r.min_ratio = std::min(r.min_ratio, ratio);
        r.max_ratio = std::max(r.max_ratio, ratio);
    }
    r.finite = std::isfinite(r.min_ratio) && std::isfinite(r.max_ratio) && r.min_ratio > 0.0;
    return r;
}

}  // namespace ctlab
