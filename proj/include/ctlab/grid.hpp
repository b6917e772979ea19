#pragma once

// Uniform cell-centered grids on the unit box (0,1)^d, d in {1,2}, with a
// forward-difference gradient and a divergence built as its exact negative
// adjoint. All integrals are midpoint quadrature: sum of cell values times
// cell volume.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctlab {

struct GridSpec {
    int dim = 1;  // 1 or 2
    int n = 2;    // cells per axis

    GridSpec() = default;
    GridSpec(int dim_, int n_) : dim(dim_), n(n_) {
        if (dim != 1 && dim != 2) throw std::invalid_argument("GridSpec: dim must be 1 or 2");
        if (n < 2) throw std::invalid_argument("GridSpec: n must be >= 2");
    }

    double spacing() const { return 1.0 / n; }
    double cell_volume() const { return dim == 1 ? spacing() : spacing() * spacing(); }
    std::size_t cell_count() const {
        return dim == 1 ? std::size_t(n) : std::size_t(n) * std::size_t(n);
    }

    // row-major: cell (i,j) -> i*n + j; in 1-D the index is i itself
    std::size_t index(int i, int j = 0) const {
        return dim == 1 ? std::size_t(i) : std::size_t(i) * n + j;
    }
    double center(int i) const { return (i + 0.5) * spacing(); }

    bool operator==(const GridSpec&) const = default;
};

struct ScalarField {
    GridSpec grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& g, double fill = 0.0) : grid(g), v(g.cell_count(), fill) {}

    double& operator[](std::size_t k) { return v[k]; }
    double operator[](std::size_t k) const { return v[k]; }
    std::size_t size() const { return v.size(); }
};

// Component a at cell c holds the flux through the face between c and its
// +a neighbour; the slab at the high boundary along each axis is a dead
// slot that gradient always writes as zero.
struct VectorField {
    GridSpec grid;
    std::array<std::vector<double>, 2> comp;

    VectorField() = default;
    explicit VectorField(const GridSpec& g) : grid(g) {
        for (int a = 0; a < g.dim; ++a) comp[a].assign(g.cell_count(), 0.0);
    }
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
    if (!(a == b)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

inline double integrate(const ScalarField& s) {
    double acc = 0.0;
    for (double x : s.v) acc += x;
    return acc * s.grid.cell_volume();
}

inline double weighted_inner(const ScalarField& u, const ScalarField& v, const ScalarField& w) {
    require_same_grid(u.grid, v.grid, "weighted_inner");
    require_same_grid(u.grid, w.grid, "weighted_inner");
    double acc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) acc += u[k] * v[k] * w[k];
    return acc * u.grid.cell_volume();
}

inline double inner(const ScalarField& u, const ScalarField& v) {
    require_same_grid(u.grid, v.grid, "inner");
    double acc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) acc += u[k] * v[k];
    return acc * u.grid.cell_volume();
}

inline double inner(const VectorField& a, const VectorField& b) {
    require_same_grid(a.grid, b.grid, "inner");
    double acc = 0.0;
    for (int c = 0; c < a.grid.dim; ++c)
        for (std::size_t k = 0; k < a.comp[c].size(); ++k) acc += a.comp[c][k] * b.comp[c][k];
    return acc * a.grid.cell_volume();
}

inline double l2_norm(const ScalarField& s) { return std::sqrt(inner(s, s)); }
inline double l2_norm(const VectorField& w) { return std::sqrt(inner(w, w)); }

inline double max_abs(const ScalarField& s) {
    double m = 0.0;
    for (double x : s.v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs(const VectorField& w) {
    double m = 0.0;
    for (int c = 0; c < w.grid.dim; ++c)
        for (double x : w.comp[c]) m = std::max(m, std::abs(x));
    return m;
}

// Euclidean magnitude of the vector field per cell.
inline ScalarField magnitude(const VectorField& w) {
    ScalarField m(w.grid);
    for (std::size_t k = 0; k < m.size(); ++k) {
        double s = 0.0;
        for (int c = 0; c < w.grid.dim; ++c) s += w.comp[c][k] * w.comp[c][k];
        m[k] = std::sqrt(s);
    }
    return m;
}

// Forward difference along each axis, zero at the last cell of the axis,
// so that gradients of constants vanish identically and the divergence
// below is the exact negative adjoint.
inline VectorField gradient(const ScalarField& u) {
    const GridSpec& g = u.grid;
    VectorField out(g);
    const double inv_h = double(g.n);
    if (g.dim == 1) {
        for (int i = 0; i + 1 < g.n; ++i) out.comp[0][i] = (u[i + 1] - u[i]) * inv_h;
    } else {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                const std::size_t k = g.index(i, j);
                if (i + 1 < g.n) out.comp[0][k] = (u[g.index(i + 1, j)] - u[k]) * inv_h;
                if (j + 1 < g.n) out.comp[1][k] = (u[g.index(i, j + 1)] - u[k]) * inv_h;
            }
    }
    return out;
}

// Defined by <gradient(u), w> = -<u, divergence(w)> for all u, w; this is
// a backward difference with no-flux closure, hence sums to zero mass.
inline ScalarField divergence(const VectorField& w) {
    const GridSpec& g = w.grid;
    ScalarField out(g);
    const double inv_h = double(g.n);
    if (g.dim == 1) {
        for (int i = 0; i < g.n; ++i) {
            double left = (i > 0) ? w.comp[0][i - 1] : 0.0;
            double right = (i + 1 < g.n) ? w.comp[0][i] : 0.0;
            out[i] = (right - left) * inv_h;
        }
    } else {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                const std::size_t k = g.index(i, j);
                double acc = 0.0;
                acc += ((i + 1 < g.n) ? w.comp[0][k] : 0.0) - ((i > 0) ? w.comp[0][g.index(i - 1, j)] : 0.0);
                acc += ((j + 1 < g.n) ? w.comp[1][k] : 0.0) - ((j > 0) ? w.comp[1][g.index(i, j - 1)] : 0.0);
                out[k] = acc * inv_h;
            }
    }
    return out;
}

// --- CSV field dumps: header "# grid d=<d> n=<n>", rows "i[,j],value[,value_y]" ---

inline void write_csv(std::ostream& os, const ScalarField& s) {
    os << "# grid d=" << s.grid.dim << " n=" << s.grid.n << "\n";
    os.precision(17);
    if (s.grid.dim == 1) {
        for (int i = 0; i < s.grid.n; ++i) os << i << "," << s[i] << "\n";
    } else {
        for (int i = 0; i < s.grid.n; ++i)
            for (int j = 0; j < s.grid.n; ++j) os << i << "," << j << "," << s[s.grid.index(i, j)] << "\n";
    }
}

inline void write_csv(std::ostream& os, const VectorField& w) {
    os << "# grid d=" << w.grid.dim << " n=" << w.grid.n << "\n";
    os.precision(17);
    if (w.grid.dim == 1) {
        for (int i = 0; i < w.grid.n; ++i) os << i << "," << w.comp[0][i] << "\n";
    } else {
        for (int i = 0; i < w.grid.n; ++i)
            for (int j = 0; j < w.grid.n; ++j) {
                const std::size_t k = w.grid.index(i, j);
                os << i << "," << j << "," << w.comp[0][k] << "," << w.comp[1][k] << "\n";
            }
    }
}

template <class Field>
void write_csv_file(const std::string& path, const Field& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv_file: cannot open " + path);
    write_csv(os, f);
}

inline ScalarField read_scalar_csv(std::istream& is) {
    std::string header;
    std::getline(is, header);
    int d = 0, n = 0;
    if (std::sscanf(header.c_str(), "# grid d=%d n=%d", &d, &n) != 2)
        throw std::runtime_error("read_scalar_csv: bad header: " + header);
    GridSpec g(d, n);
    ScalarField s(g);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        int i = 0, j = 0;
        char comma;
        ls >> i >> comma;
        if (d == 2) ls >> j >> comma;
        double val;
        ls >> val;
        s[g.index(i, j)] = val;
    }
    return s;
}

}  // namespace ctlab
