#pragma once
// Exact information-theoretic primitives over finite-support distributions,
// PID assembly from a solved optimum, and consistency checking.
//
// All internal computation runs in natural log; results carry a base tag and
// are converted at the boundary.

#include <array>

#include "types.hpp"

namespace pidlab {

// H = -sum p log p with 0 log 0 := 0. Input must be a probability vector.
InfoValue entropy(const std::vector<double>& dist, LogBase base);

// I(A;B) of a 2-way joint given as a rows x cols row-major array.
InfoValue mutual_information(const std::vector<double>& joint, int rows, int cols, LogBase base);

enum class CondMi {
    x1y_given_x2,  // I(X1;Y|X2)
    x2y_given_x1,  // I(X2;Y|X1)
};

InfoValue conditional_mi(const CategoricalJoint& j, CondMi which, LogBase base);

// I({X1,X2};Y) treating the feature pair as one variable.
InfoValue joint_mi(const CategoricalJoint& j, LogBase base);

// I(X1;Y) + I(X2;Y) - I({X1,X2};Y); may be negative.
InfoValue co_information(const CategoricalJoint& j, LogBase base);

// marginal helpers (kept public; the solvers reuse them)
std::vector<double> marginal_x1y(const CategoricalJoint& j);  // n1 x ny row-major
std::vector<double> marginal_x2y(const CategoricalJoint& j);  // n2 x ny
std::vector<double> marginal_y(const CategoricalJoint& j);
InfoValue pairwise_mi_x1(const CategoricalJoint& j, LogBase base);  // I(X1;Y)
InfoValue pairwise_mi_x2(const CategoricalJoint& j, LogBase base);  // I(X2;Y)

// Largest absolute deviation between the pairwise (x_i, y) marginals of q and p.
double marginal_residual(const CategoricalJoint& p, const CategoricalJoint& q);

// Assemble the decomposition from a solved max-entropy optimum q*:
//   U1 = I_q*(X1;Y|X2), U2 = I_q*(X2;Y|X1),
//   R = I_p(X1;Y) - U1,  S = I_p({X1,X2};Y) - I_q*({X1,X2};Y).
// Values in [-1e-6, 0) are clamped to 0; anything more negative is kept and
// surfaced through diag.min_raw_component.
PidResult pid_from_optimum(const CategoricalJoint& p, const CategoricalJoint& q_star,
                           LogBase base);

// Residuals of the five consistency equations, in the result's units:
//   |R+U1-I(X1;Y)|, |R+U2-I(X2;Y)|, |R+U1+U2+S-I({X1,X2};Y)|,
//   |U1+S-I(X1;Y|X2)|, |U2+S-I(X2;Y|X1)|,
// all evaluated under p (they hold under p exactly at any feasible optimum).
std::array<double, 5> consistency_residuals(const CategoricalJoint& p, const PidResult& result);

}  // namespace pidlab
