#pragma once

// Independent Wasserstein-1 oracles: the exact 1-D CDF formula and, for
// point-mass instances, the primal Kantorovich LP min sum |x_i - y_j| g_ij
// solved exactly by a network simplex on the bipartite transportation
// graph. Costs are rounded to integers at 1e-12 resolution so pricing and
// optimality tests are exact integer arithmetic; only flows are real.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctlab/density.hpp"
#include "ctlab/grid.hpp"

namespace ctlab {

struct DiscreteMeasurePair {
    std::vector<std::array<double, 2>> mu_points, nu_points;
    std::vector<double> mu_weights, nu_weights;

    void validate() const {
        if (mu_points.size() != mu_weights.size() || nu_points.size() != nu_weights.size())
            throw std::invalid_argument("DiscreteMeasurePair: points/weights size mismatch");
        if (mu_points.empty() || nu_points.empty())
            throw std::invalid_argument("DiscreteMeasurePair: empty support");
        double sa = 0.0, sb = 0.0;
        for (double w : mu_weights) {
            if (w < 0.0) throw std::invalid_argument("DiscreteMeasurePair: negative weight");
            sa += w;
        }
        for (double w : nu_weights) {
            if (w < 0.0) throw std::invalid_argument("DiscreteMeasurePair: negative weight");
            sb += w;
        }
        if (std::abs(sa - sb) > 1e-12)
            throw std::invalid_argument("DiscreteMeasurePair: total masses differ");
    }
};

namespace detail {

// Network simplex for the uncapacitated bipartite transportation problem,
// maintaining a strongly feasible spanning tree (every zero-flow basic arc
// points toward the root) so degenerate instances cannot cycle.
class TransportSimplex {
  public:
    TransportSimplex(const std::vector<std::array<double, 2>>& xs, const std::vector<double>& a,
                     const std::vector<std::array<double, 2>>& ys, const std::vector<double>& b)
        : xs_(xs), ys_(ys), S_(int(xs.size())), T_(int(ys.size())), V_(S_ + T_ + 1) {
        if (a.size() != xs.size() || b.size() != ys.size())
            throw std::invalid_argument("TransportSimplex: weight/point size mismatch");
        supply_ = a;
        demand_ = b;
        for (const auto& p : xs_) max_cost_ = std::max(max_cost_, std::abs(p[0]) + std::abs(p[1]));
        for (const auto& p : ys_) max_cost_ = std::max(max_cost_, std::abs(p[0]) + std::abs(p[1]));
        art_cost_ = (std::int64_t(2.0 * max_cost_ * kCostScale) + 1) * std::int64_t(V_);
    }

    double solve() {
        build_initial_tree();
        const long long pivot_cap = 200LL * V_ + 2000000LL;
        const long long n_arcs = (long long)S_ * T_;
        const long long block = std::max(64LL, (long long)std::lround(std::sqrt(double(n_arcs))));
        long long scan_pos = 0;
        for (long long pivots = 0;; ++pivots) {
            if (pivots > pivot_cap) throw std::runtime_error("TransportSimplex: pivot cap exceeded");
            // block pricing: most negative reduced cost in the first block
            // that contains any negative arc
            long long best_arc = -1;
            std::int64_t best_rc = 0;
            long long scanned = 0;
            while (scanned < n_arcs) {
                long long stop = std::min(scanned + block, n_arcs);
                for (; scanned < stop; ++scanned) {
                    long long k = scan_pos + scanned;
                    if (k >= n_arcs) k -= n_arcs;
                    int i = int(k / T_), j = int(k % T_);
                    std::int64_t rc = arc_cost(i, j) - pot_[i] + pot_[S_ + j];
                    if (rc < best_rc) {
                        best_rc = rc;
                        best_arc = k;
                    }
                }
                if (best_arc >= 0) break;
            }
            if (best_arc < 0) break;  // optimal
            scan_pos = (best_arc + 1) % n_arcs;
            pivot(int(best_arc / T_), int(best_arc % T_));
        }
        audit();
        double total = 0.0;
        for (int e = 0; e < V_ - 1; ++e)
            if (!edges_[e].artificial && edges_[e].flow > 0.0)
                total += edges_[e].flow * distance(edges_[e].u, edges_[e].v - S_);
        return total;
    }

  private:
    static constexpr double kCostScale = 1e12;
    struct Edge {
        int u = -1, v = -1;  // natural direction u -> v
        std::int64_t cost = 0;
        double flow = 0.0;
        bool artificial = false;
    };

    double distance(int i, int j) const {
        double dx = xs_[i][0] - ys_[j][0], dy = xs_[i][1] - ys_[j][1];
        return std::sqrt(dx * dx + dy * dy);
    }
    std::int64_t arc_cost(int i, int j) const { return std::llround(distance(i, j) * kCostScale); }

    void build_initial_tree() {
        const int root = S_ + T_;
        edges_.assign(V_ - 1, {});
        adj_.assign(V_, {});
        parent_.assign(V_, -1);
        pedge_.assign(V_, -1);
        depth_.assign(V_, 0);
        pot_.assign(V_, 0);
        for (int i = 0; i < S_; ++i) {  // source -> root, carrying the supply
            edges_[i] = {i, root, art_cost_, supply_[i], true};
            link(i, root, i);
            parent_[i] = root;
            pedge_[i] = i;
            depth_[i] = 1;
            pot_[i] = art_cost_;
        }
        for (int j = 0; j < T_; ++j) {  // root -> sink, carrying the demand
            int e = S_ + j;
            edges_[e] = {root, S_ + j, art_cost_, demand_[j], true};
            link(S_ + j, root, e);
            parent_[S_ + j] = root;
            pedge_[S_ + j] = e;
            depth_[S_ + j] = 1;
            pot_[S_ + j] = -art_cost_;
        }
    }

    void link(int a, int b, int e) {
        adj_[a].push_back(e);
        adj_[b].push_back(e);
    }
    void unlink(int a, int e) {
        auto& lst = adj_[a];
        for (std::size_t k = 0; k < lst.size(); ++k)
            if (lst[k] == e) {
                lst[k] = lst.back();
                lst.pop_back();
                return;
            }
    }

    // entering arc i -> S+j; push around the cycle apex..i, (i,j), j..apex
    void pivot(int i, int j) {
        const int s = i, t = S_ + j;
        std::vector<int> path_s, path_t;  // edge ids from s (resp. t) up to the apex
        int a = s, b = t;
        while (a != b) {
            if (depth_[a] >= depth_[b]) {
                path_s.push_back(pedge_[a]);
                a = parent_[a];
            } else {
                path_t.push_back(pedge_[b]);
                b = parent_[b];
            }
        }

        // an edge loses flow if the push direction opposes its natural one;
        // on the apex->s leg the push goes downward, on t->apex upward
        auto loses = [&](int eid, bool on_s_path, int child) {
            const Edge& e = edges_[eid];
            bool natural_up = (e.u == child);
            return on_s_path ? natural_up : !natural_up;
        };

        double delta = HUGE_VAL;
        {
            int c = s;
            for (int eid : path_s) {
                if (loses(eid, true, c)) delta = std::min(delta, edges_[eid].flow);
                c = parent_[c];
            }
            c = t;
            for (int eid : path_t) {
                if (loses(eid, false, c)) delta = std::min(delta, edges_[eid].flow);
                c = parent_[c];
            }
        }
        if (!std::isfinite(delta)) throw std::runtime_error("TransportSimplex: unbounded pivot");

        // leaving arc: last blocking arc in cycle order starting at the apex
        // (apex -> s leg first, then t -> apex leg), which preserves strong
        // feasibility under degeneracy
        int leave_edge = -1, leave_child = -1;
        {
            int c = s;  // path_s is s-first; cycle order wants apex-first, so later entries win
            for (int eid : path_s) {
                if (loses(eid, true, c) && edges_[eid].flow == delta && leave_edge == -1) {
                    leave_edge = eid;  // first in s-first order = last in apex-first order
                    leave_child = c;
                }
                c = parent_[c];
            }
            c = t;
            for (int eid : path_t) {
                if (loses(eid, false, c) && edges_[eid].flow == delta) {
                    leave_edge = eid;  // last in t-first order = last in cycle order
                    leave_child = c;
                }
                c = parent_[c];
            }
        }
        if (leave_edge < 0) throw std::runtime_error("TransportSimplex: no leaving arc");

        // apply the flow change
        {
            int c = s;
            for (int eid : path_s) {
                edges_[eid].flow += loses(eid, true, c) ? -delta : delta;
                c = parent_[c];
            }
            c = t;
            for (int eid : path_t) {
                edges_[eid].flow += loses(eid, false, c) ? -delta : delta;
                c = parent_[c];
            }
        }

        const std::int64_t rc_enter = arc_cost(i, j) - pot_[s] + pot_[t];

        // splice the tree: drop the leaving edge, insert the entering edge
        const Edge old = edges_[leave_edge];
        unlink(old.u, leave_edge);
        unlink(old.v, leave_edge);
        edges_[leave_edge] = {s, t, arc_cost(i, j), delta, false};
        link(s, t, leave_edge);

        // the detached component is the old subtree of leave_child; it gets
        // re-rooted at whichever entering endpoint it contains
        bool s_detached = in_subtree(s, leave_child);
        int att_in = s_detached ? s : t;
        int att_out = s_detached ? t : s;
        std::int64_t shift = s_detached ? rc_enter : -rc_enter;
        reattach(att_in, att_out, leave_edge, shift);
    }

    bool in_subtree(int node, int head) const {
        while (depth_[node] > depth_[head]) node = parent_[node];
        return node == head;
    }

    // iterative DFS over the detached component: new parents, depths, and a
    // uniform potential shift
    void reattach(int att_in, int att_out, int eid, std::int64_t shift) {
        struct Item {
            int node, par, pe;
        };
        std::vector<Item> stack{{att_in, att_out, eid}};
        while (!stack.empty()) {
            Item it = stack.back();
            stack.pop_back();
            parent_[it.node] = it.par;
            pedge_[it.node] = it.pe;
            depth_[it.node] = depth_[it.par] + 1;
            pot_[it.node] += shift;
            for (int e : adj_[it.node]) {
                if (e == it.pe) continue;
                const Edge& ed = edges_[e];
                int other = (ed.u == it.node) ? ed.v : ed.u;
                stack.push_back({other, it.node, e});
            }
        }
    }

    void audit() const {
        std::vector<double> balance(V_, 0.0);
        for (int e = 0; e < V_ - 1; ++e) {
            const Edge& ed = edges_[e];
            if (ed.flow < -1e-12) throw std::runtime_error("TransportSimplex: negative basic flow");
            balance[ed.u] += ed.flow;
            balance[ed.v] -= ed.flow;
            std::int64_t rc = ed.cost - pot_[ed.u] + pot_[ed.v];
            if (rc != 0) throw std::runtime_error("TransportSimplex: basic arc with nonzero reduced cost");
            if (ed.artificial && ed.flow > 1e-9)
                throw std::runtime_error("TransportSimplex: artificial arc kept positive flow");
        }
        for (int i = 0; i < S_; ++i)
            if (std::abs(balance[i] - supply_[i]) > 1e-9)
                throw std::runtime_error("TransportSimplex: supply imbalance");
        for (int j = 0; j < T_; ++j)
            if (std::abs(balance[S_ + j] + demand_[j]) > 1e-9)
                throw std::runtime_error("TransportSimplex: demand imbalance");
    }

    std::vector<std::array<double, 2>> xs_, ys_;
    int S_, T_, V_;
    std::vector<double> supply_, demand_;
    double max_cost_ = 0.0;
    std::int64_t art_cost_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> parent_, pedge_, depth_;
    std::vector<std::int64_t> pot_;
};

}  // namespace detail

inline double w1_lp(const DiscreteMeasurePair& pair) {
    pair.validate();
    if (pair.mu_points.size() > 4096 || pair.nu_points.size() > 4096)
        throw std::invalid_argument("w1_lp: support sizes above the 4096 desk-scale cap");
    // drop zero-weight supports and balance the totals exactly
    std::vector<std::array<double, 2>> xs, ys;
    std::vector<double> a, b;
    for (std::size_t k = 0; k < pair.mu_weights.size(); ++k)
        if (pair.mu_weights[k] > 0.0) {
            xs.push_back(pair.mu_points[k]);
            a.push_back(pair.mu_weights[k]);
        }
    for (std::size_t k = 0; k < pair.nu_weights.size(); ++k)
        if (pair.nu_weights[k] > 0.0) {
            ys.push_back(pair.nu_points[k]);
            b.push_back(pair.nu_weights[k]);
        }
    double sa = 0.0, sb = 0.0;
    for (double w : a) sa += w;
    for (double w : b) sb += w;
    std::size_t jmax = 0;
    for (std::size_t k = 1; k < b.size(); ++k)
        if (b[k] > b[jmax]) jmax = k;
    b[jmax] += sa - sb;
    return detail::TransportSimplex(xs, a, ys, b).solve();
}

// \int_0^1 |F - G| dx by midpoint quadrature of the analytic CDFs
inline double w1_cdf_1d(const DensityPair& pair) {
    if (pair.grid.dim != 1) throw std::invalid_argument("w1_cdf_1d: requires d = 1");
    const int n = pair.grid.n;
    const double h = pair.grid.spacing();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = pair.grid.center(i);
        acc += std::abs(pair.f_desc.cdf_1d(x) - pair.g_desc.cdf_1d(x));
    }
    return acc * h;
}

struct W1Result {
    double w1 = 0.0;
    std::string method;
    std::size_t support_size = 0;
    int coarsen_factor = 1;
};

// grid measures -> point masses at (block) cell centers
inline DiscreteMeasurePair discretize_to_points(const DensityPair& pair, int coarsen) {
    const GridSpec& g = pair.grid;
    if (coarsen < 1 || g.n % coarsen != 0)
        throw std::invalid_argument("discretize_to_points: coarsen must divide n");
    const int nc = g.n / coarsen;
    const double H = 1.0 / nc;
    const double vol = g.cell_volume();
    DiscreteMeasurePair out;
    auto accumulate = [&](const ScalarField& field, std::vector<std::array<double, 2>>& pts,
                          std::vector<double>& wts) {
        if (g.dim == 1) {
            wts.assign(nc, 0.0);
            for (int i = 0; i < g.n; ++i) wts[i / coarsen] += field[i] * vol;
            for (int I = 0; I < nc; ++I) pts.push_back({(I + 0.5) * H, 0.0});
        } else {
            wts.assign(std::size_t(nc) * nc, 0.0);
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j)
                    wts[std::size_t(i / coarsen) * nc + (j / coarsen)] += field[g.index(i, j)] * vol;
            for (int I = 0; I < nc; ++I)
                for (int J = 0; J < nc; ++J) pts.push_back({(I + 0.5) * H, (J + 0.5) * H});
        }
    };
    accumulate(pair.f, out.mu_points, out.mu_weights);
    accumulate(pair.g, out.nu_points, out.nu_weights);
    return out;
}

inline W1Result w1_grid(const DensityPair& pair, int coarsen = 1) {
    W1Result res;
    if (pair.grid.dim == 1) {
        res.w1 = w1_cdf_1d(pair);
        res.method = "cdf_1d";
        res.support_size = std::size_t(pair.grid.n);
        res.coarsen_factor = 1;
        return res;
    }
    DiscreteMeasurePair pts = discretize_to_points(pair, coarsen);
    res.w1 = w1_lp(pts);
    res.method = "lp";
    res.support_size = pts.mu_points.size();
    res.coarsen_factor = coarsen;
    return res;
}

}  // namespace ctlab
