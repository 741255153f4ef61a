#pragma once

#include <utility>
#include <vector>

#include "types.hpp"

namespace pidlab {

// Per-label coupling constraints: q must reproduce p(x1,y), p(x2,y) and hence p(y).
struct TransportPolytopeSet {
    int n1 = 0, n2 = 0, ny = 0;
    std::vector<double> marg1;  // n1 x ny
    std::vector<double> marg2;  // n2 x ny
    std::vector<double> py;     // ny

    double m1(int a, int c) const { return marg1[std::size_t(a) * ny + c]; }
    double m2(int b, int c) const { return marg2[std::size_t(b) * ny + c]; }
    void validate() const;
};

struct CvxConfig {
    double step_size = 0.3;
    long max_outer_iters = 5000;
    int ipf_iters = 500;
    double ipf_tol = 1e-10;
    double objective_tol = 1e-9;
    double support_epsilon = 0.0;  // cells of the init at or below this stay zero
};

struct CvxDiagnostics {
    long outer_iterations = 0;
    double conditional_entropy = 0.0;  // nats
    double residual = 0.0;
    std::vector<double> objective_history;  // accepted iterates, nats
    bool converged = true;
};

TransportPolytopeSet constraints_from(const CategoricalJoint& p);

// q0(x1,x2,y) = p(x1,y) p(x2,y) / p(y): the conditional-independence coupling
CategoricalJoint feasible_init(const TransportPolytopeSet& c);

CategoricalJoint ipf_project(const CategoricalJoint& q, const TransportPolytopeSet& c,
                             const CvxConfig& cfg);

// conditional entropy H_q(Y | X1, X2) in nats
double conditional_entropy(const CategoricalJoint& q);

std::pair<CategoricalJoint, CvxDiagnostics> solve_maxent(const CategoricalJoint& p,
                                                         const CvxConfig& cfg);

PidResult estimate_pid_cvx(const CategoricalJoint& p, const CvxConfig& cfg,
                           LogBase base = LogBase::bits);

// Exhaustive oracle for tiny instances: coordinate ascent over per-label polytopes
// with a shrinking grid; results in bits.
PidResult brute_force_pid(const CategoricalJoint& p, double grid_resolution = 1e-4);

}  // namespace pidlab
