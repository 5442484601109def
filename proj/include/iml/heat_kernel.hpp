#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "iml/geometry.hpp"

namespace iml {

// Transition density of Brownian motion on R^d at time t (variance t per
// axis): (2 pi t)^{-d/2} exp(-|x-y|^2 / (2t)).
double free_kernel(int d, double t, const Vec& x, const Vec& y);

// 1-d building blocks (exposed for oracle tests).
double gauss1(double t, double u);                 // (2 pi t)^{-1/2} e^{-u^2/2t}
double gauss1_time_integral(double T, double u);   // int_0^T gauss1(s,u) ds, closed form
double resolvent_g1(double u);                     // int_0^inf e^-s gauss1(s,u) ds = e^{-sqrt2|u|}/sqrt2

// Killed interval kernel on (a,b), two independent representations.
double interval_kernel_images(double a, double b, double t, double x, double y,
                              double rel_tol = 1e-14, int max_terms = 64);
double interval_kernel_eigen(double a, double b, double t, double x, double y,
                             double cutoff = 1e-16, int max_terms = 100000);

struct KernelOptions {
    double image_rel_tol = 1e-14;  // image-series truncation (next term vs running sum)
    double eigen_cutoff = 1e-16;   // eigen-series truncation on exp(-lambda t)
    int max_terms = 200000;
    double disk_t_min = 0.01;      // Bessel table sized so t >= disk_t_min converges
    int time_quad_panels = 6;      // panels for int_0^T p_s ds when no closed form exists
    int time_quad_nodes = 16;
};

namespace detail {
struct DiskSeries;  // Dirichlet eigen-expansion data for a disk
}

// Evaluator for the killed (Dirichlet) heat kernel of D, its time integral
// K_T(x,y) = int_0^T p_s(x,y) ds, and the 1-resolvent
// r_1(x,y) = int_0^inf e^{-s} p_s(x,y) ds.  Product domains (whole space,
// half-space, box) use exact 1-d factor representations; the disk uses the
// Bessel-Dirichlet eigen-expansion with a zero table built at construction
// (read-only afterwards).
class KernelEval {
  public:
    explicit KernelEval(Domain dom, KernelOptions opt = {});
    ~KernelEval();
    KernelEval(KernelEval&&) noexcept;

    const Domain& domain() const { return dom_; }
    const KernelOptions& options() const { return opt_; }

    // Killed kernel p_t(x,y); zero if x or y lies outside D.
    double operator()(double t, const Vec& x, const Vec& y) const;

    // K_T(x,y).  Exact (closed-form images) for d=1; numerical for d >= 2.
    // For d >= 2 the value at x == y is +infinity (integrable singularity);
    // see time_integral_cell_avg for the lattice-cell rendition.
    double time_integral(double T, const Vec& x, const Vec& y) const;

    // Average of K_T(x, .) over the cell of side h centred at x — the honest
    // finite value a lattice quadrature should carry at the singular node.
    double time_integral_cell_avg(double T, const Vec& x, double h) const;

    // r_1(x,y).  Closed form for d=1 product domains and the whole space in
    // d=2,3; Gauss quadrature with singularity splitting otherwise.
    double resolvent(const Vec& x, const Vec& y) const;

    // Internal series data (disk domains only; null otherwise).
    const detail::DiskSeries* disk_series() const { return disk_.get(); }

  private:
    double killed_axis(int k, double t, double xk, double yk) const;
    double disk_kernel(double t, const Vec& x, const Vec& y) const;

    Domain dom_;
    KernelOptions opt_;
    std::unique_ptr<detail::DiskSeries> disk_;
};

// Convenience one-shot wrappers.
double killed_kernel(const Domain& dom, double t, const Vec& x, const Vec& y);
double resolvent_r1(const Domain& dom, const Vec& x, const Vec& y);

// |p_{s+t}(x,y) - int_D p_s(x,z) p_t(z,y) dz| with the integral evaluated by
// composite Gauss-Legendre (tensor rule over the domain box, truncated at
// 8 sqrt(s+t) on unbounded axes; spectral polar rule on the disk).
double ck_residual(const KernelEval& ke, double s, double t, const Vec& x, const Vec& y);

// Survival probability int_D p_t(x, y) dy by quadrature (same rules as
// ck_residual); the sub-Markov deficit 1 - survival is the kill probability.
double kernel_mass(const KernelEval& ke, double t, const Vec& x);

}  // namespace iml
