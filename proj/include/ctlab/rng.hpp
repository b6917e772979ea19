#pragma once

// Counter-based random stream: each draw is a pure hash of (seed, counter,
// slot), so results do not depend on evaluation order or thread count.

#include <cmath>
#include <cstdint>

namespace ctlab {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

struct CounterRng {
    std::uint64_t seed = 0;

    explicit CounterRng(std::uint64_t s = 0) : seed(s) {}

    std::uint64_t bits(std::uint64_t counter, std::uint64_t slot = 0) const {
        std::uint64_t z = detail::splitmix64(seed ^ 0x7c1592cb4be2f8e1ULL);
        z = detail::splitmix64(z ^ counter);
        z = detail::splitmix64(z ^ (slot * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL));
        return z;
    }

    // uniform in [0,1)
    double uniform(std::uint64_t counter, std::uint64_t slot = 0) const {
        return double(bits(counter, slot) >> 11) * 0x1.0p-53;
    }

    // uniform in (0,1), safe inside inverse CDFs
    double uniform_open(std::uint64_t counter, std::uint64_t slot = 0) const {
        return (double(bits(counter, slot) >> 11) + 0.5) * 0x1.0p-53;
    }
};

// Standard normal CDF.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

inline double norm_pdf(double x) { return 0.3989422804014326779 * std::exp(-0.5 * x * x); }

// Inverse standard normal CDF: Acklam's rational approximation refined by
// two Halley steps against erfc, accurate to full double precision on
// p in (0,1).
inline double norm_cdf_inv(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -HUGE_VAL;
        if (p == 1.0) return HUGE_VAL;
        return NAN;
    }
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int it = 0; it < 2; ++it) {
        double e = norm_cdf(x) - p;
        double u = e / norm_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

}  // namespace ctlab
