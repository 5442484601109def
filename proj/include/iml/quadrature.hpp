#pragma once

#include <Eigen/Dense>

namespace iml {

// Nodes and weights of a 1-d quadrature rule on some interval.
struct Quad {
    Eigen::VectorXd x;
    Eigen::VectorXd w;
};

// n-point Gauss-Legendre rule on [-1,1] (Newton iteration on the Legendre
// recurrence; nodes accurate to ~1e-15).
Quad gauss_legendre(int n);

// Same rule mapped to [a,b].
Quad gl_on(double a, double b, int n);

// Equal-width composite Gauss-Legendre rule on [a,b].
Quad composite_gl(double a, double b, int panels, int nodes_per_panel);

// Composite rule whose panels shrink dyadically toward graded endpoints:
// with grade_lo, panel boundaries accumulate at a like a + (b-a)*2^-j.
// Handles integrable endpoint singularities (s^-1/2, log) to near machine
// accuracy with modest node counts.
Quad graded_gl(double a, double b, int levels, int nodes_per_panel, bool grade_lo, bool grade_hi);

// Integrate f over the rule.
template <typename F>
double integrate(const Quad& q, F&& f) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < q.x.size(); ++i) acc += q.w[i] * f(q.x[i]);
    return acc;
}

}  // namespace iml
