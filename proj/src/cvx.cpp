#include "cvx.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "info.hpp"

namespace pidlab {

void TransportPolytopeSet::validate() const {
    if (marg1.size() != std::size_t(n1) * ny || marg2.size() != std::size_t(n2) * ny ||
        py.size() != std::size_t(ny))
        throw std::invalid_argument("TransportPolytopeSet: bad shape");
    for (int c = 0; c < ny; ++c) {
        double s1 = 0.0, s2 = 0.0;
        for (int a = 0; a < n1; ++a) s1 += m1(a, c);
        for (int b = 0; b < n2; ++b) s2 += m2(b, c);
        if (std::fabs(s1 - py[c]) > 1e-12 || std::fabs(s2 - py[c]) > 1e-12)
            throw std::invalid_argument("TransportPolytopeSet: inconsistent label marginals");
    }
    for (double v : marg1)
        if (v < 0.0) throw std::invalid_argument("TransportPolytopeSet: negative entry");
    for (double v : marg2)
        if (v < 0.0) throw std::invalid_argument("TransportPolytopeSet: negative entry");
}

TransportPolytopeSet constraints_from(const CategoricalJoint& p) {
    p.validate();
    TransportPolytopeSet c;
    c.n1 = p.n1;
    c.n2 = p.n2;
    c.ny = p.ny;
    c.marg1 = marginal_x1y(p);
    c.marg2 = marginal_x2y(p);
    c.py = marginal_y(p);
    return c;
}

CategoricalJoint feasible_init(const TransportPolytopeSet& c) {
    CategoricalJoint q(c.n1, c.n2, c.ny);
    for (int y = 0; y < c.ny; ++y) {
        if (c.py[y] <= 0.0) continue;
        for (int a = 0; a < c.n1; ++a)
            for (int b = 0; b < c.n2; ++b) q.at(a, b, y) = c.m1(a, y) * c.m2(b, y) / c.py[y];
    }
    return q;
}

namespace {

double marginal_residual_vs(const CategoricalJoint& q, const TransportPolytopeSet& c) {
    double r = 0.0;
    for (int a = 0; a < c.n1; ++a)
        for (int y = 0; y < c.ny; ++y) {
            double s = 0.0;
            for (int b = 0; b < c.n2; ++b) s += q.at(a, b, y);
            r = std::max(r, std::fabs(s - c.m1(a, y)));
        }
    for (int b = 0; b < c.n2; ++b)
        for (int y = 0; y < c.ny; ++y) {
            double s = 0.0;
            for (int a = 0; a < c.n1; ++a) s += q.at(a, b, y);
            r = std::max(r, std::fabs(s - c.m2(b, y)));
        }
    return r;
}

}  // namespace

CategoricalJoint ipf_project(const CategoricalJoint& q, const TransportPolytopeSet& c,
                             const CvxConfig& cfg) {
    if (q.n1 != c.n1 || q.n2 != c.n2 || q.ny != c.ny)
        throw std::invalid_argument("ipf_project: shape mismatch");
    CategoricalJoint out = q;
    for (int it = 0; it < cfg.ipf_iters; ++it) {
        if (marginal_residual_vs(out, c) <= cfg.ipf_tol) break;
        for (int y = 0; y < c.ny; ++y) {
            for (int a = 0; a < c.n1; ++a) {
                double s = 0.0;
                for (int b = 0; b < c.n2; ++b) s += out.at(a, b, y);
                double t = c.m1(a, y);
                if (s > 0.0) {
                    double f = t / s;
                    for (int b = 0; b < c.n2; ++b) out.at(a, b, y) *= f;
                } else if (t > 0.0) {
                    throw numeric_error("ipf_project: empty row with positive target");
                }
            }
            for (int b = 0; b < c.n2; ++b) {
                double s = 0.0;
                for (int a = 0; a < c.n1; ++a) s += out.at(a, b, y);
                double t = c.m2(b, y);
                if (s > 0.0) {
                    double f = t / s;
                    for (int a = 0; a < c.n1; ++a) out.at(a, b, y) *= f;
                } else if (t > 0.0) {
                    throw numeric_error("ipf_project: empty column with positive target");
                }
            }
        }
    }
    double total = out.sum();
    if (total > 0.0 && std::fabs(total - 1.0) > 1e-15)
        for (double& v : out.p) v /= total;
    return out;
}

double conditional_entropy(const CategoricalJoint& q) {
    double h = 0.0;
    for (int a = 0; a < q.n1; ++a)
        for (int b = 0; b < q.n2; ++b) {
            double qab = 0.0;
            for (int y = 0; y < q.ny; ++y) qab += q.at(a, b, y);
            if (qab <= 0.0) continue;
            for (int y = 0; y < q.ny; ++y) {
                double v = q.at(a, b, y);
                if (v > 0.0) h -= v * std::log(v / qab);
            }
        }
    return h;
}

namespace {

// zero-probability labels contribute nothing and break IPF scaling: squeeze them out
std::vector<int> live_labels(const std::vector<double>& py) {
    std::vector<int> keep;
    for (int y = 0; y < int(py.size()); ++y)
        if (py[y] > 0.0) keep.push_back(y);
    return keep;
}

CategoricalJoint compress_labels(const CategoricalJoint& p, const std::vector<int>& keep) {
    CategoricalJoint out(p.n1, p.n2, int(keep.size()));
    for (int a = 0; a < p.n1; ++a)
        for (int b = 0; b < p.n2; ++b)
            for (int c = 0; c < int(keep.size()); ++c) out.at(a, b, c) = p.at(a, b, keep[c]);
    return out;
}

CategoricalJoint expand_labels(const CategoricalJoint& q, const std::vector<int>& keep, int ny) {
    CategoricalJoint out(q.n1, q.n2, ny);
    for (int a = 0; a < q.n1; ++a)
        for (int b = 0; b < q.n2; ++b)
            for (int c = 0; c < q.ny; ++c) out.at(a, b, keep[c]) = q.at(a, b, c);
    return out;
}

}  // namespace

std::pair<CategoricalJoint, CvxDiagnostics> solve_maxent(const CategoricalJoint& p,
                                                         const CvxConfig& cfg) {
    p.validate();
    auto full_cons = constraints_from(p);
    auto keep = live_labels(full_cons.py);
    bool compressed = int(keep.size()) != p.ny;
    CategoricalJoint pc = compressed ? compress_labels(p, keep) : p;
    auto cons = compressed ? constraints_from(pc) : full_cons;

    CategoricalJoint q = feasible_init(cons);
    if (cfg.support_epsilon > 0.0)
        for (double& v : q.p)
            if (v <= cfg.support_epsilon) v = 0.0;
    if (cfg.support_epsilon > 0.0) q = ipf_project(q, cons, cfg);

    CvxDiagnostics diag;
    double h = conditional_entropy(q);
    diag.objective_history.push_back(h);

    double eta = cfg.step_size;
    int streak = 0;
    bool done = false;
    long iter = 0;
    CategoricalJoint cand = q;
    for (; iter < cfg.max_outer_iters && !done; ++iter) {
        cand.p = q.p;
        for (int a = 0; a < q.n1; ++a)
            for (int b = 0; b < q.n2; ++b) {
                double qab = 0.0;
                for (int y = 0; y < q.ny; ++y) qab += q.at(a, b, y);
                if (qab <= 0.0) continue;
                for (int y = 0; y < q.ny; ++y) {
                    double v = q.at(a, b, y);
                    if (v > 0.0) cand.at(a, b, y) = v * std::pow(v / qab, -eta);
                }
            }
        cand = ipf_project(cand, cons, cfg);
        double hc = conditional_entropy(cand);
        if (hc >= h - 1e-12) {
            double rel = std::fabs(hc - h) / std::max(1.0, std::fabs(hc));
            q.p.swap(cand.p);
            bool small_step = rel < cfg.objective_tol;
            h = std::max(h, hc);
            diag.objective_history.push_back(h);
            if (++streak >= 10) {
                eta = cfg.step_size;
                streak = 0;
            }
            if (small_step) done = true;
        } else {
            eta *= 0.5;
            streak = 0;
            if (eta < 1e-8) done = true;
        }
    }
    // Endgame: an optimum on a polytope face leaves dust cells that ipf can only
    // shrink harmonically, so the iterate stalls slightly infeasible. Zero the
    // dust at increasing thresholds and re-project; keep the first feasible
    // result that preserves the objective.
    if (marginal_residual_vs(q, cons) > 10.0 * cfg.ipf_tol) {
        CvxConfig pcfg = cfg;
        pcfg.ipf_iters = std::max(cfg.ipf_iters, 20000);
        pcfg.ipf_tol = cfg.ipf_tol * 0.1;
        for (double thr = 1e-12; thr <= 1.1e-5; thr *= 100.0) {
            CategoricalJoint polished = q;
            for (double& v : polished.p)
                if (v < thr) v = 0.0;
            try {
                polished = ipf_project(polished, cons, pcfg);
            } catch (const numeric_error&) {
                continue;
            }
            if (marginal_residual_vs(polished, cons) > 10.0 * cfg.ipf_tol) continue;
            double hp = conditional_entropy(polished);
            if (hp >= h - 1e-5) {
                q.p.swap(polished.p);
                h = hp;
                break;
            }
        }
    }

    diag.outer_iterations = iter;
    diag.conditional_entropy = h;
    diag.residual = marginal_residual_vs(q, cons);
    diag.converged = done && diag.residual <= 10.0 * cfg.ipf_tol;

    CategoricalJoint out = compressed ? expand_labels(q, keep, p.ny) : q;
    return {std::move(out), std::move(diag)};
}

PidResult estimate_pid_cvx(const CategoricalJoint& p, const CvxConfig& cfg, LogBase base) {
    auto start = std::chrono::steady_clock::now();
    auto [q, cd] = solve_maxent(p, cfg);
    PidResult r = pid_from_optimum(p, q, base);
    r.diag.iterations = cd.outer_iterations;
    r.diag.objective = cd.conditional_entropy;
    r.diag.residual = std::max(r.diag.residual, cd.residual);
    r.diag.converged = cd.converged;
    r.diag.s_present = true;
    r.diag.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

namespace {

struct SliceParam {
    int y = 0;
    std::vector<int> rows, cols;  // categories with positive targets
    int free_dims() const {
        return std::max(0, int(rows.size()) - 1) * std::max(0, int(cols.size()) - 1);
    }
};

// Fill slice y of q from free-cell values t; derived cells complete the row/col
// targets. Returns false when any derived cell goes negative.
bool assemble_slice(CategoricalJoint& q, const TransportPolytopeSet& c, const SliceParam& sp,
                    const std::vector<double>& t) {
    const double tol = 1e-14;
    int r = int(sp.rows.size()), cc = int(sp.cols.size());
    int y = sp.y;
    for (int a = 0; a < q.n1; ++a)
        for (int b = 0; b < q.n2; ++b) q.at(a, b, y) = 0.0;

    for (int i = 0; i < r - 1; ++i)
        for (int j = 0; j < cc - 1; ++j) q.at(sp.rows[i], sp.cols[j], y) = t[i * (cc - 1) + j];
    for (int i = 0; i < r - 1; ++i) {
        double rest = c.m1(sp.rows[i], y);
        for (int j = 0; j < cc - 1; ++j) rest -= q.at(sp.rows[i], sp.cols[j], y);
        if (rest < -tol) return false;
        q.at(sp.rows[i], sp.cols[cc - 1], y) = std::max(0.0, rest);
    }
    for (int j = 0; j < cc - 1; ++j) {
        double rest = c.m2(sp.cols[j], y);
        for (int i = 0; i < r - 1; ++i) rest -= q.at(sp.rows[i], sp.cols[j], y);
        if (rest < -tol) return false;
        q.at(sp.rows[r - 1], sp.cols[j], y) = std::max(0.0, rest);
    }
    double corner = c.m1(sp.rows[r - 1], y);
    for (int j = 0; j < cc - 1; ++j) corner -= q.at(sp.rows[r - 1], sp.cols[j], y);
    if (corner < -tol) return false;
    q.at(sp.rows[r - 1], sp.cols[cc - 1], y) = std::max(0.0, corner);
    return true;
}

}  // namespace

PidResult brute_force_pid(const CategoricalJoint& p, double grid_resolution) {
    p.validate();
    if (!(grid_resolution > 0.0))
        throw std::invalid_argument("brute_force_pid: resolution must be positive");
    auto c = constraints_from(p);

    std::vector<SliceParam> slices;
    int total_free = 0;
    for (int y = 0; y < p.ny; ++y) {
        if (c.py[y] <= 0.0) continue;
        SliceParam sp;
        sp.y = y;
        for (int a = 0; a < p.n1; ++a)
            if (c.m1(a, y) > 0.0) sp.rows.push_back(a);
        for (int b = 0; b < p.n2; ++b)
            if (c.m2(b, y) > 0.0) sp.cols.push_back(b);
        total_free += sp.free_dims();
        slices.push_back(std::move(sp));
    }
    if (total_free > 8) throw std::invalid_argument("brute_force_pid: instance too large");

    CategoricalJoint q(p.n1, p.n2, p.ny);
    std::vector<std::vector<double>> params(slices.size());
    for (std::size_t s = 0; s < slices.size(); ++s) {
        const auto& sp = slices[s];
        int r = int(sp.rows.size()), cc = int(sp.cols.size());
        params[s].assign(sp.free_dims(), 0.0);
        for (int i = 0; i < r - 1; ++i)
            for (int j = 0; j < cc - 1; ++j)
                params[s][i * (cc - 1) + j] = p.at(sp.rows[i], sp.cols[j], sp.y);
        if (!assemble_slice(q, c, sp, params[s]))
            throw numeric_error("brute_force_pid: source joint infeasible");
    }

    const int grid_pts = 7;
    double best_h = conditional_entropy(q);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double sweep_start = best_h;
        for (std::size_t s = 0; s < slices.size(); ++s) {
            const auto& sp = slices[s];
            int f = sp.free_dims();
            if (f == 0) continue;
            int cc = int(sp.cols.size());

            std::vector<double> lo(f), hi(f), center = params[s];
            for (int i = 0; i < int(sp.rows.size()) - 1; ++i)
                for (int j = 0; j < cc - 1; ++j) {
                    int d = i * (cc - 1) + j;
                    lo[d] = 0.0;
                    hi[d] = std::min(c.m1(sp.rows[i], sp.y), c.m2(sp.cols[j], sp.y));
                }
            std::vector<double> blo = lo, bhi = hi;
            double width = 0.0;
            for (int d = 0; d < f; ++d) width = std::max(width, bhi[d] - blo[d]);

            std::vector<double> trial(f), best_t = params[s];
            std::vector<int> idx(f, 0);
            while (width > grid_resolution) {
                // exhaustive pass over the current box, endpoints included
                std::fill(idx.begin(), idx.end(), 0);
                for (;;) {
                    for (int d = 0; d < f; ++d)
                        trial[d] = blo[d] + (bhi[d] - blo[d]) * idx[d] / double(grid_pts - 1);
                    if (assemble_slice(q, c, sp, trial)) {
                        double h = conditional_entropy(q);
                        if (h > best_h) {
                            best_h = h;
                            best_t = trial;
                        }
                    }
                    int d = 0;
                    while (d < f && ++idx[d] == grid_pts) idx[d++] = 0;
                    if (d == f) break;
                }
                double half = width * 0.3;
                for (int d = 0; d < f; ++d) {
                    blo[d] = std::max(lo[d], best_t[d] - half);
                    bhi[d] = std::min(hi[d], best_t[d] + half);
                }
                width = 0.0;
                for (int d = 0; d < f; ++d) width = std::max(width, bhi[d] - blo[d]);
            }
            params[s] = best_t;
            assemble_slice(q, c, sp, params[s]);
        }
        if (best_h - sweep_start < 1e-13) break;
    }

    for (std::size_t s = 0; s < slices.size(); ++s) assemble_slice(q, c, slices[s], params[s]);
    PidResult r = pid_from_optimum(p, q, LogBase::bits);
    r.diag.objective = best_h;
    r.diag.converged = true;
    r.diag.s_present = true;
    return r;
}

}  // namespace pidlab
