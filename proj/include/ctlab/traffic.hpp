#pragma once

// Discrete traffic plans: a feasible cell flow becomes signed flows on
// lattice faces, directed cycles are cancelled, and the rest decomposes
// into weighted source-to-sink paths. Intensity i_Q and flow w_Q are
// rasterized from the paths with each traversed face contributing length h,
// split half to each endpoint cell; after cycle cancellation every face is
// traversed in a single direction, so the rasterized intensity equals the
// rasterized total variation of the flow cellwise.

#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "ctlab/density.hpp"
#include "ctlab/grid.hpp"

namespace ctlab {

// Signed flow per lattice face (between face-adjacent cells), oriented
// along the positive axis direction; carries mass/time units consistent
// with VectorField flux times face area.
struct EdgeFlow {
    GridSpec grid;
    std::array<std::vector<double>, 2> flow;

    EdgeFlow() = default;
    explicit EdgeFlow(const GridSpec& g) : grid(g) {
        for (int a = 0; a < g.dim; ++a) flow[a].assign(face_count(g, a), 0.0);
    }

    static std::size_t face_count(const GridSpec& g, int axis) {
        if (g.dim == 1) return std::size_t(g.n - 1);
        return axis == 0 ? std::size_t(g.n - 1) * g.n : std::size_t(g.n) * (g.n - 1);
    }

    // face between cell (i,j) and its +axis neighbour
    std::size_t face(int axis, int i, int j = 0) const {
        if (grid.dim == 1) return std::size_t(i);
        return axis == 0 ? std::size_t(i) * grid.n + j : std::size_t(i) * (grid.n - 1) + j;
    }

    // the two endpoint cells of a face
    void face_cells(int axis, std::size_t fid, std::size_t& c_lo, std::size_t& c_hi) const {
        if (grid.dim == 1) {
            c_lo = fid;
            c_hi = fid + 1;
            return;
        }
        if (axis == 0) {
            int i = int(fid / grid.n), j = int(fid % grid.n);
            c_lo = grid.index(i, j);
            c_hi = grid.index(i + 1, j);
        } else {
            int i = int(fid / (grid.n - 1)), j = int(fid % (grid.n - 1));
            c_lo = grid.index(i, j);
            c_hi = grid.index(i, j + 1);
        }
    }

    double total_abs() const {
        double acc = 0.0;
        for (int a = 0; a < grid.dim; ++a)
            for (double f : flow[a]) acc += std::abs(f);
        return acc;
    }
};

// net outflow per cell; equals (f-g) * cell_volume for feasible flows
inline std::vector<double> node_imbalance(const EdgeFlow& e) {
    const GridSpec& g = e.grid;
    std::vector<double> imb(g.cell_count(), 0.0);
    for (int a = 0; a < g.dim; ++a)
        for (std::size_t fid = 0; fid < e.flow[a].size(); ++fid) {
            std::size_t lo, hi;
            e.face_cells(a, fid, lo, hi);
            imb[lo] += e.flow[a][fid];
            imb[hi] -= e.flow[a][fid];
        }
    return imb;
}

struct LatticePath {
    double mass = 0.0;
    std::vector<std::size_t> cells;  // face-adjacent, source first
};

struct TrafficPlanDiscrete {
    GridSpec grid;
    std::vector<LatticePath> paths;
    double unrouted_residual = 0.0;
};

// each gradient-stencil face carries its component flux times face area
inline EdgeFlow field_to_edgeflow(const VectorField& w, const DensityPair& pair) {
    require_same_grid(w.grid, pair.grid, "field_to_edgeflow");
    const GridSpec& g = w.grid;
    ScalarField resid = divergence(w);
    for (std::size_t k = 0; k < resid.size(); ++k) resid[k] -= pair.f[k] - pair.g[k];
    if (l2_norm(resid) > 1e-8)
        throw std::invalid_argument("field_to_edgeflow: flow is not divergence-feasible");

    const double face_area = (g.dim == 1) ? 1.0 : g.spacing();
    EdgeFlow e(g);
    if (g.dim == 1) {
        for (int i = 0; i + 1 < g.n; ++i) e.flow[0][e.face(0, i)] = w.comp[0][i] * face_area;
    } else {
        for (int i = 0; i + 1 < g.n; ++i)
            for (int j = 0; j < g.n; ++j) e.flow[0][e.face(0, i, j)] = w.comp[0][g.index(i, j)] * face_area;
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j + 1 < g.n; ++j) e.flow[1][e.face(1, i, j)] = w.comp[1][g.index(i, j)] * face_area;
    }
    return e;
}

// inverse of field_to_edgeflow: face flows back to cell-centered fluxes
inline VectorField edgeflow_to_field(const EdgeFlow& e) {
    const GridSpec& g = e.grid;
    const double face_area = (g.dim == 1) ? 1.0 : g.spacing();
    VectorField w(g);
    if (g.dim == 1) {
        for (int i = 0; i + 1 < g.n; ++i) w.comp[0][i] = e.flow[0][e.face(0, i)] / face_area;
    } else {
        for (int i = 0; i + 1 < g.n; ++i)
            for (int j = 0; j < g.n; ++j) w.comp[0][g.index(i, j)] = e.flow[0][e.face(0, i, j)] / face_area;
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j + 1 < g.n; ++j) w.comp[1][g.index(i, j)] = e.flow[1][e.face(1, i, j)] / face_area;
    }
    return w;
}

namespace detail {
struct FaceRef {
    int axis;
    std::size_t fid;
    int dir;  // +1 when traversed along the positive axis direction
};

// outgoing positively-flowing faces of a cell, in canonical axis order
template <class Visit>
void for_outgoing(const EdgeFlow& e, std::size_t cell, Visit&& visit) {
    const GridSpec& g = e.grid;
    int ci = (g.dim == 1) ? int(cell) : int(cell / g.n);
    int cj = (g.dim == 1) ? 0 : int(cell % g.n);
    for (int a = 0; a < g.dim; ++a) {
        int coord = (a == 0) ? ci : cj;
        if (coord + 1 < g.n) {  // face toward +a
            std::size_t fid = (a == 0) ? e.face(0, ci, cj) : e.face(1, ci, cj);
            double f = e.flow[a][fid];
            std::size_t lo, hi;
            e.face_cells(a, fid, lo, hi);
            if (f > 0.0) visit(FaceRef{a, fid, +1}, hi, f);
        }
        if (coord > 0) {  // face toward -a
            std::size_t fid = (a == 0) ? e.face(0, ci - 1, cj) : e.face(1, ci, cj - 1);
            double f = e.flow[a][fid];
            std::size_t lo, hi;
            e.face_cells(a, fid, lo, hi);
            if (f < 0.0) visit(FaceRef{a, fid, -1}, lo, -f);
        }
    }
}
}  // namespace detail

// Removes directed cycles from the positive-flow orientation by repeated
// DFS and saturation; node imbalances are untouched and the total absolute
// flow never increases.
inline EdgeFlow cancel_cycles(EdgeFlow e) {
    const GridSpec& g = e.grid;
    const std::size_t n_cells = g.cell_count();
    std::vector<std::uint8_t> color(n_cells);
    std::vector<std::size_t> path_nodes;
    std::vector<detail::FaceRef> path_faces;

    bool found = true;
    while (found) {
        found = false;
        std::fill(color.begin(), color.end(), 0);
        for (std::size_t start = 0; start < n_cells && !found; ++start) {
            if (color[start] != 0) continue;
            path_nodes.assign(1, start);
            path_faces.clear();
            color[start] = 1;
            while (!path_nodes.empty() && !found) {
                std::size_t u = path_nodes.back();
                detail::FaceRef next{};
                std::size_t next_node = 0;
                bool advanced = false, closed = false;
                std::size_t cycle_entry = 0;
                detail::for_outgoing(e, u, [&](detail::FaceRef fr, std::size_t v, double) {
                    if (advanced || closed) return;
                    if (color[v] == 1) {
                        closed = true;
                        next = fr;
                        cycle_entry = v;
                    } else if (color[v] == 0) {
                        advanced = true;
                        next = fr;
                        next_node = v;
                    }
                });
                if (closed) {
                    // cycle = path segment from cycle_entry onward plus the closing face;
                    // face k links path_nodes[k] to path_nodes[k+1]
                    std::size_t pos = path_nodes.size();
                    while (pos > 0 && path_nodes[pos - 1] != cycle_entry) --pos;
                    std::vector<detail::FaceRef> cyc(path_faces.begin() + (pos - 1), path_faces.end());
                    cyc.push_back(next);
                    double delta = HUGE_VAL;
                    for (const auto& fr : cyc) delta = std::min(delta, std::abs(e.flow[fr.axis][fr.fid]));
                    for (const auto& fr : cyc) {
                        double mag = std::abs(e.flow[fr.axis][fr.fid]) - delta;
                        e.flow[fr.axis][fr.fid] = (mag <= 0.0) ? 0.0 : double(fr.dir) * mag;
                    }
                    found = true;
                } else if (advanced) {
                    color[next_node] = 1;
                    path_nodes.push_back(next_node);
                    path_faces.push_back(next);
                } else {
                    color[u] = 2;
                    path_nodes.pop_back();
                    if (!path_faces.empty()) path_faces.pop_back();
                }
            }
        }
    }
    return e;
}

// Greedy max-bottleneck stripping of an acyclic edge flow into weighted
// source-to-sink lattice paths; ties break to the lowest row-major index.
inline TrafficPlanDiscrete decompose_paths(const EdgeFlow& input, const DensityPair& pair,
                                           double residual_tol = 1e-8) {
    const GridSpec& g = input.grid;
    require_same_grid(g, pair.grid, "decompose_paths");
    EdgeFlow e = input;
    const std::size_t n_cells = g.cell_count();

    std::vector<double> resid = node_imbalance(e);
    {  // consistency with the density data
        const double vol = g.cell_volume();
        double err2 = 0.0;
        for (std::size_t c = 0; c < n_cells; ++c) {
            double want = (pair.f[c] - pair.g[c]) * vol;
            err2 += (resid[c] - want) * (resid[c] - want);
        }
        if (std::sqrt(err2) > 1e-8)
            throw std::invalid_argument("decompose_paths: edge flow inconsistent with f-g");
    }

    // one topological order serves all strips: flows only ever decrease
    std::vector<std::size_t> topo;
    {
        std::vector<int> indeg(n_cells, 0);
        for (std::size_t c = 0; c < n_cells; ++c)
            detail::for_outgoing(e, c, [&](detail::FaceRef, std::size_t v, double) { ++indeg[v]; });
        std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
        for (std::size_t c = 0; c < n_cells; ++c)
            if (indeg[c] == 0) ready.push(c);
        while (!ready.empty()) {
            std::size_t u = ready.top();
            ready.pop();
            topo.push_back(u);
            detail::for_outgoing(e, u, [&](detail::FaceRef, std::size_t v, double) {
                if (--indeg[v] == 0) ready.push(v);
            });
        }
        if (topo.size() != n_cells)
            throw std::invalid_argument("decompose_paths: flow has directed cycles, cancel first");
    }

    TrafficPlanDiscrete plan;
    plan.grid = g;
    const std::size_t max_paths = e.flow[0].size() + (g.dim == 2 ? e.flow[1].size() : 0) + n_cells + 8;

    std::vector<double> best(n_cells);
    std::vector<detail::FaceRef> via(n_cells);
    std::vector<std::size_t> pred(n_cells);

    auto positive_residual = [&] {
        double s = 0.0;
        for (double r : resid) s += std::max(r, 0.0);
        return s;
    };

    while (positive_residual() > residual_tol) {
        if (plan.paths.size() > max_paths)
            throw std::runtime_error("decompose_paths: residual not reducible");
        std::fill(best.begin(), best.end(), 0.0);
        for (std::size_t c = 0; c < n_cells; ++c) {
            if (resid[c] > 0.0) {
                best[c] = resid[c];
                pred[c] = c;
            }
        }
        for (std::size_t u : topo) {
            if (best[u] <= 0.0) continue;
            detail::for_outgoing(e, u, [&](detail::FaceRef fr, std::size_t v, double cap) {
                double cand = std::min(best[u], cap);
                if (cand > best[v]) {
                    best[v] = cand;
                    via[v] = fr;
                    pred[v] = u;
                }
            });
        }
        std::size_t sink = n_cells;
        double bottleneck = 0.0;
        for (std::size_t c = 0; c < n_cells; ++c) {
            if (resid[c] >= 0.0) continue;
            double cand = std::min(best[c], -resid[c]);
            if (cand > bottleneck) {
                bottleneck = cand;
                sink = c;
            }
        }
        if (sink == n_cells || bottleneck <= 0.0)
            throw std::runtime_error("decompose_paths: residual not reducible");

        LatticePath path;
        path.mass = bottleneck;
        std::size_t c = sink;
        path.cells.push_back(c);
        while (pred[c] != c) {
            const detail::FaceRef fr = via[c];
            double mag = std::abs(e.flow[fr.axis][fr.fid]) - bottleneck;
            e.flow[fr.axis][fr.fid] = (mag <= 0.0) ? 0.0 : double(fr.dir) * mag;
            c = pred[c];
            path.cells.push_back(c);
        }
        std::reverse(path.cells.begin(), path.cells.end());
        resid[path.cells.front()] -= bottleneck;
        resid[path.cells.back()] += bottleneck;
        plan.paths.push_back(std::move(path));
    }
    plan.unrouted_residual = positive_residual();
    return plan;
}

// reconstruct the face flows carried by a plan
inline EdgeFlow plan_to_edgeflow(const TrafficPlanDiscrete& plan) {
    const GridSpec& g = plan.grid;
    EdgeFlow e(g);
    auto cell_coords = [&](std::size_t c, int& i, int& j) {
        if (g.dim == 1) {
            i = int(c);
            j = 0;
        } else {
            i = int(c / g.n);
            j = int(c % g.n);
        }
    };
    for (const auto& p : plan.paths) {
        for (std::size_t k = 0; k + 1 < p.cells.size(); ++k) {
            int i0, j0, i1, j1;
            cell_coords(p.cells[k], i0, j0);
            cell_coords(p.cells[k + 1], i1, j1);
            if (std::abs(i1 - i0) + std::abs(j1 - j0) != 1)
                throw std::invalid_argument("plan_to_edgeflow: cells not face-adjacent");
            if (j1 == j0) {
                e.flow[0][e.face(0, std::min(i0, i1), j0)] += (i1 > i0 ? p.mass : -p.mass);
            } else {
                e.flow[1][e.face(1, i0, std::min(j0, j1))] += (j1 > j0 ? p.mass : -p.mass);
            }
        }
    }
    return e;
}

struct TrafficFields {
    ScalarField intensity;  // i_Q: length-weighted mass throughput density
    VectorField flow;       // w_Q: its direction-signed counterpart
    ScalarField flow_tv;    // rasterized total variation |w_Q|; equals intensity for one-directional plans
};

// Rasterizes i_Q and w_Q: every traversed face contributes length h times
// the path mass, split half-and-half between the endpoint cells.
inline TrafficFields intensity_and_flow(const TrafficPlanDiscrete& plan) {
    const GridSpec& g = plan.grid;
    EdgeFlow signed_flow(g), gross(g);
    auto cell_coords = [&](std::size_t c, int& i, int& j) {
        if (g.dim == 1) {
            i = int(c);
            j = 0;
        } else {
            i = int(c / g.n);
            j = int(c % g.n);
        }
    };
    for (const auto& p : plan.paths) {
        for (std::size_t k = 0; k + 1 < p.cells.size(); ++k) {
            int i0, j0, i1, j1;
            cell_coords(p.cells[k], i0, j0);
            cell_coords(p.cells[k + 1], i1, j1);
            int axis = (j1 == j0) ? 0 : 1;
            std::size_t fid = (axis == 0) ? signed_flow.face(0, std::min(i0, i1), j0)
                                          : signed_flow.face(1, i0, std::min(j0, j1));
            int dir = (axis == 0) ? (i1 > i0 ? 1 : -1) : (j1 > j0 ? 1 : -1);
            signed_flow.flow[axis][fid] += dir * p.mass;
            gross.flow[axis][fid] += p.mass;
        }
    }

    TrafficFields out;
    out.intensity = ScalarField(g);
    out.flow = VectorField(g);
    out.flow_tv = ScalarField(g);
    const double h = g.spacing();
    const double half_over_vol = 0.5 * h / g.cell_volume();
    for (int a = 0; a < g.dim; ++a)
        for (std::size_t fid = 0; fid < signed_flow.flow[a].size(); ++fid) {
            std::size_t lo, hi;
            signed_flow.face_cells(a, fid, lo, hi);
            const double s = signed_flow.flow[a][fid];
            const double u = gross.flow[a][fid];
            for (std::size_t c : {lo, hi}) {
                out.intensity[c] += half_over_vol * u;
                out.flow.comp[a][c] += half_over_vol * s;
                out.flow_tv[c] += half_over_vol * std::abs(s);
            }
        }
    return out;
}

}  // namespace ctlab
