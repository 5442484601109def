#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "iml/geometry.hpp"
#include "iml/grid_field.hpp"
#include "iml/heat_kernel.hpp"
#include "iml/quadrature.hpp"

namespace iml {

// Deterministic quadrature plan for the k-th moment of the intersection
// pairing <l^IS_t, f>: E[...] = integral over D^k of f(x_1)..f(x_k)
// prod_i sum_sigma H^(i)_t(x_sigma), with H the simplex time integral of the
// killed-kernel chain restricted to the support box U of f.
//
// k is capped at 2: cost is exponential in k, and k = 1, 2 pin down mean and
// variance; higher k is covered only through the abstract constants bound.
struct MomentPlan {
    int k;
    int p;
    double t;
    GridField f;
    std::vector<Vec> x0;                    // one start per process
    std::shared_ptr<const Lattice> lat;
    std::shared_ptr<const KernelEval> ke;
    Quad time_rule;                         // graded rule on (0,t), both ends
    Eigen::ArrayXd u_mask;                  // indicator of U on the nodes
    Vec u_lo, u_hi;                         // the support box itself
};

MomentPlan make_moment_plan(int k, int p, double t, const GridField& f,
                            std::vector<Vec> x0);

bool in_support_box(const MomentPlan& plan, const Vec& x);

// Pointwise simplex integral for process i at arbitrary points xs (k of
// them): the one-step kernel chain integrated over {s_1+..+s_k <= t}, with
// the support-box indicator at each argument.
double H_t_eval(const MomentPlan& plan, int i, const std::vector<Vec>& xs);

// H on the lattice: a vector for k = 1, the (unsymmetrized) matrix
// H_t(x_1, x_2) for k = 2, assembled as a time-quadrature sum of one-step
// kernel matrices (memory N^2, never a literal k-tensor).
Eigen::VectorXd assemble_H_vector(const MomentPlan& plan, int i);
Eigen::MatrixXd assemble_H_matrix(const MomentPlan& plan, int i);

// E[<l^IS_t, f>^k] by lattice quadrature of the moment formula.
double moment_exact(const MomentPlan& plan);

// Same with every H replaced by T_eps^{(x)k} H (the discrete ball average
// applied in each coordinate): the moment of the eps-approximated measure.
double moment_exact_mollified(const MomentPlan& plan, double eps);

// E[|<l^IS_{t,eps}, f> - <l^IS_t, f>|^k] in formula form: every H replaced
// by (T_eps - id)^{(x)k} H.  Requires k = 2 (even, so the absolute value is
// exact).
double moment_diff(const MomentPlan& plan, double eps);

// ||f||_inf^k (k!)^p prod_i ||(T_eps - id)^{(x)k} H^(i)||_{L^p(D^k)} with the
// same discrete operators and lattice norms as moment_diff.
double superexp3_rhs(const MomentPlan& plan, double eps);

}  // namespace iml
