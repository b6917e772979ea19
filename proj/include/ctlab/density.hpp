#pragma once

// Analytic density families on the unit box: uniform boxes, truncated
// gaussians, and 1-D piecewise-constant profiles. All families are
// per-axis products, closed under scaling x -> s*x, and support exact
// CDF / inverse-CDF evaluation, which the interpolation-measure code and
// the samplers rely on.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctlab/grid.hpp"
#include "ctlab/rng.hpp"

namespace ctlab {

struct AxisDensity {
    enum class Kind { PiecewiseConst, TruncNormal };
    Kind kind = Kind::PiecewiseConst;

    // piecewise-constant: values[j] on [breaks[j], breaks[j+1]); unit mass
    std::vector<double> breaks, values, cum;

    // truncated normal on [lo,hi]
    double mean = 0.0, stddev = 1.0, lo = 0.0, hi = 1.0;
    double cdf_lo = 0.0, z_norm = 1.0;

    static AxisDensity piecewise(std::vector<double> brk, std::vector<double> val) {
        if (brk.size() < 2 || val.size() + 1 != brk.size())
            throw std::invalid_argument("AxisDensity: need k+1 breaks for k values");
        for (std::size_t j = 0; j + 1 < brk.size(); ++j)
            if (!(brk[j] < brk[j + 1])) throw std::invalid_argument("AxisDensity: breaks must increase");
        double mass = 0.0;
        for (std::size_t j = 0; j < val.size(); ++j) {
            if (val[j] < 0.0) throw std::invalid_argument("AxisDensity: negative density value");
            mass += val[j] * (brk[j + 1] - brk[j]);
        }
        if (!(mass > 0.0)) throw std::invalid_argument("AxisDensity: zero total mass");
        AxisDensity d;
        d.kind = Kind::PiecewiseConst;
        d.breaks = std::move(brk);
        d.values = std::move(val);
        for (double& v : d.values) v /= mass;
        d.cum.assign(d.breaks.size(), 0.0);
        for (std::size_t j = 0; j < d.values.size(); ++j)
            d.cum[j + 1] = d.cum[j] + d.values[j] * (d.breaks[j + 1] - d.breaks[j]);
        d.cum.back() = 1.0;
        return d;
    }

    static AxisDensity trunc_normal(double mean, double stddev, double lo, double hi) {
        if (!(stddev > 0.0) || !(lo < hi)) throw std::invalid_argument("AxisDensity: bad truncated normal");
        AxisDensity d;
        d.kind = Kind::TruncNormal;
        d.mean = mean;
        d.stddev = stddev;
        d.lo = lo;
        d.hi = hi;
        d.cdf_lo = norm_cdf((lo - mean) / stddev);
        d.z_norm = norm_cdf((hi - mean) / stddev) - d.cdf_lo;
        if (!(d.z_norm > 0.0)) throw std::invalid_argument("AxisDensity: truncation removes all mass");
        return d;
    }

    double support_lo() const { return kind == Kind::PiecewiseConst ? breaks.front() : lo; }
    double support_hi() const { return kind == Kind::PiecewiseConst ? breaks.back() : hi; }

    double pdf(double x) const {
        if (kind == Kind::PiecewiseConst) {
            if (x < breaks.front() || x >= breaks.back()) return 0.0;
            auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
            return values[std::size_t(it - breaks.begin()) - 1];
        }
        if (x < lo || x > hi) return 0.0;
        return norm_pdf((x - mean) / stddev) / (stddev * z_norm);
    }

    double cdf(double x) const {
        if (kind == Kind::PiecewiseConst) {
            if (x <= breaks.front()) return 0.0;
            if (x >= breaks.back()) return 1.0;
            auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
            std::size_t j = std::size_t(it - breaks.begin()) - 1;
            return cum[j] + values[j] * (x - breaks[j]);
        }
        if (x <= lo) return 0.0;
        if (x >= hi) return 1.0;
        return (norm_cdf((x - mean) / stddev) - cdf_lo) / z_norm;
    }

    double inv_cdf(double p) const {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("AxisDensity: inv_cdf needs p in [0,1]");
        if (kind == Kind::PiecewiseConst) {
            auto it = std::upper_bound(cum.begin(), cum.end(), p);
            std::size_t j = std::min(std::size_t(it - cum.begin()), cum.size() - 1) - 1;
            while (j > 0 && values[j] == 0.0) --j;  // land on a mass-carrying piece
            if (values[j] == 0.0) return breaks[j];
            return std::min(breaks[j] + (p - cum[j]) / values[j], breaks[j + 1]);
        }
        return mean + stddev * norm_cdf_inv(cdf_lo + p * z_norm);
    }

    double sup() const {
        if (kind == Kind::PiecewiseConst) return *std::max_element(values.begin(), values.end());
        return pdf(std::clamp(mean, lo, hi));
    }

    // mean cell value: exact via CDF differences
    double cell_average(double a, double b) const { return (cdf(b) - cdf(a)) / (b - a); }

    // density of s*X for s > 0
    AxisDensity scaled(double s) const {
        if (!(s > 0.0)) throw std::invalid_argument("AxisDensity: scale must be positive");
        AxisDensity d = *this;
        if (kind == Kind::PiecewiseConst) {
            for (double& x : d.breaks) x *= s;
            for (double& v : d.values) v /= s;
            for (std::size_t j = 0; j < d.values.size(); ++j)
                d.cum[j + 1] = d.cum[j] + d.values[j] * (d.breaks[j + 1] - d.breaks[j]);
            d.cum.back() = 1.0;
        } else {
            d.mean *= s;
            d.stddev *= s;
            d.lo *= s;
            d.hi *= s;
        }
        return d;
    }
};

// Product density over (0,1)^d with named analytic form.
struct Density {
    int dim = 1;
    std::string family;
    std::array<AxisDensity, 2> axis;
    nlohmann::json descriptor;

    double sup() const {
        double s = axis[0].sup();
        if (dim == 2) s *= axis[1].sup();
        return s;
    }

    double pdf(double x, double y = 0.0) const {
        double p = axis[0].pdf(x);
        if (dim == 2) p *= axis[1].pdf(y);
        return p;
    }

    double cdf_1d(double x) const {
        if (dim != 1) throw std::logic_error("Density: cdf_1d requires dim 1");
        return axis[0].cdf(x);
    }

    bool has_exact_sampler() const { return true; }  // all current families invert their CDF

    std::array<double, 2> sample(const CounterRng& rng, std::uint64_t counter, std::uint64_t slot_base) const {
        std::array<double, 2> x{0.0, 0.0};
        for (int a = 0; a < dim; ++a) x[a] = axis[a].inv_cdf(rng.uniform_open(counter, slot_base + a));
        return x;
    }

    // Exact per-cell averages (per-axis CDF differences), renormalized so the
    // discrete mass is exactly one.
    ScalarField discretize(const GridSpec& g) const {
        if (dim != g.dim) throw std::invalid_argument("Density: dimension mismatch with grid");
        const double h = g.spacing();
        std::array<std::vector<double>, 2> ax;
        for (int a = 0; a < dim; ++a) {
            ax[a].resize(g.n);
            for (int i = 0; i < g.n; ++i) ax[a][i] = axis[a].cell_average(i * h, (i + 1) * h);
        }
        ScalarField out(g);
        if (dim == 1) {
            out.v = ax[0];
        } else {
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j) out[g.index(i, j)] = ax[0][i] * ax[1][j];
        }
        double mass = integrate(out);
        if (!(mass > 0.0)) throw std::runtime_error("Density: zero discrete mass on grid");
        for (double& v : out.v) v /= mass;
        return out;
    }
};

inline Density density_from_json(const nlohmann::json& j, int dim) {
    Density d;
    d.dim = dim;
    d.descriptor = j;
    d.family = j.at("family").get<std::string>();
    if (d.family == "uniform_box") {
        auto lo = j.at("lo").get<std::vector<double>>();
        auto hi = j.at("hi").get<std::vector<double>>();
        if (int(lo.size()) != dim || int(hi.size()) != dim)
            throw std::invalid_argument("uniform_box: lo/hi must have dim entries");
        for (int a = 0; a < dim; ++a) {
            if (!(0.0 <= lo[a] && lo[a] < hi[a] && hi[a] <= 1.0))
                throw std::invalid_argument("uniform_box: need 0 <= lo < hi <= 1");
            d.axis[a] = AxisDensity::piecewise({lo[a], hi[a]}, {1.0});
        }
    } else if (d.family == "truncated_gaussian") {
        auto mean = j.at("mean").get<std::vector<double>>();
        double stddev = j.at("stddev").get<double>();
        if (int(mean.size()) != dim) throw std::invalid_argument("truncated_gaussian: mean must have dim entries");
        for (int a = 0; a < dim; ++a) d.axis[a] = AxisDensity::trunc_normal(mean[a], stddev, 0.0, 1.0);
    } else if (d.family == "piecewise_constant") {
        if (dim != 1) throw std::invalid_argument("piecewise_constant: 1-D only");
        auto brk = j.at("breaks").get<std::vector<double>>();
        auto val = j.at("values").get<std::vector<double>>();
        if (!(brk.front() >= 0.0 && brk.back() <= 1.0))
            throw std::invalid_argument("piecewise_constant: support must lie in [0,1]");
        d.axis[0] = AxisDensity::piecewise(std::move(brk), std::move(val));
    } else {
        throw std::invalid_argument("unknown density family: " + d.family);
    }
    return d;
}

// convenience constructors used throughout the tests
inline Density uniform_box(std::vector<double> lo, std::vector<double> hi) {
    nlohmann::json j{{"family", "uniform_box"}, {"lo", lo}, {"hi", hi}};
    return density_from_json(j, int(lo.size()));
}

inline Density truncated_gaussian(std::vector<double> mean, double stddev) {
    nlohmann::json j{{"family", "truncated_gaussian"}, {"mean", mean}, {"stddev", stddev}};
    return density_from_json(j, int(mean.size()));
}

// Source/target densities with matching grid discretizations, both carrying
// exactly unit discrete mass.
struct DensityPair {
    GridSpec grid;
    Density f_desc, g_desc;
    ScalarField f, g;

    DensityPair() = default;
    DensityPair(Density f_in, Density g_in, const GridSpec& g_spec)
        : grid(g_spec), f_desc(std::move(f_in)), g_desc(std::move(g_in)) {
        if (f_desc.dim != grid.dim || g_desc.dim != grid.dim)
            throw std::invalid_argument("DensityPair: dimension mismatch");
        f = f_desc.discretize(grid);
        g = g_desc.discretize(grid);
    }
};

}  // namespace ctlab
