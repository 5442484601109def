#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "iml/geometry.hpp"
#include "iml/grid_field.hpp"
#include "iml/rate_solver.hpp"

namespace iml {

// Parameter triple of the symmetric alpha-stable setting: stability index
// alpha, ambient dimension d, and number of independent motions p.
struct StableParams {
    double alpha = 1.0;
    int d = 1;
    int p = 2;
};

// Admissibility of the triple for the full mutual-intersection statement:
// 0 < alpha < 2, alpha < d (the L^{2p}-embedding hypothesis), and the
// intersection condition d - p(d - alpha) > 0.
bool admissible(const StableParams& sp);

// Kanter's exact transform: with u uniform on (0,1) and w standard
// exponential, the returned S is a positive beta-stable variable with
// Laplace transform E exp(-lambda S) = exp(-lambda^beta), 0 < beta < 1.
// Exposed as a deterministic map so the law can be verified by quadrature.
double kanter_stable(double beta, double u, double w);

// Rotationally symmetric alpha-stable increment over a time step dt, with
// characteristic function E exp(i xi . X) = exp(-dt |xi|^alpha).  Sampled in
// the subordinator representation X = sqrt(2 dt^{2/alpha} S) Z with Z a
// standard Gaussian vector and S positive (alpha/2)-stable; alpha = 2
// degenerates to N(0, 2 dt Id).  The draw is a pure function of
// (seed, index) under the same counter discipline as the path ensembles.
Vec sample_stable_increment(double alpha, int d, double dt, std::uint64_t seed,
                            std::uint64_t index = 0);

// Gagliardo form of order alpha/2 for a field vanishing outside the domain
// (zero extension): the double lattice sum over node pairs x != y of
// |psi(x)-psi(y)|^2 h^{2d} / |x-y|^{d+alpha}, plus a local-regularity
// correction for the sub-spacing shell |x-y| < h, which the node pairs
// cannot see: |grad psi|^2 integrated against the shell mass
// unit_ball_volume(d) h^{2-alpha} / (2-alpha) (the direction-averaged
// moment of the kernel over the shell).  Requires 0 < alpha < 2.
double fractional_energy(const GridField& psi, double alpha);

// Variational rate with the fractional form in place of the Dirichlet form:
// sum over components of fractional_energy(sqrt(density), alpha) when the
// joint density matches the product of the components (within compat_tol,
// default 10h in L^1) and every root lies in the discrete fractional
// Sobolev class; +infinity otherwise.  Per the stated replacement rule the
// double integral carries no 1/2 prefactor, so the alpha -> 2 limit differs
// from the Brownian functional by a factor 2 (convention, kept verbatim).
// Requires 0 < alpha < 2 and d - p(d - alpha) > 0; the embedding hypothesis
// alpha < d is not needed for finiteness and is not enforced here.
double rate_I_stable(const MeasureTuple& mt, const StableParams& sp, double compat_tol = -1.0);

// Same, with a spacing-halved refinement of the tuple: a component whose
// energy still grows by more than 5% under h -> h/2 is flagged as outside
// the fractional class (divergences here are logarithmic or sub-linear in
// 1/h, so the Dirichlet-form doubling threshold would miss them).
double rate_I_stable(const MeasureTuple& mt, const MeasureTuple& refined, const StableParams& sp,
                     double compat_tol = -1.0);

// Final positions of n independent killed alpha-stable motions after time t.
// Killed samples keep the first position observed outside the domain.
struct StableEndpoints {
    Eigen::MatrixXd x;                // n x d, row s = position of sample s
    std::vector<std::uint8_t> alive;  // 1 if the sample never left the domain
    double survival = 0.0;            // fraction alive at the horizon
};

// Euler walk with stable increments and kill-on-exit checked at step
// endpoints.  Only the whole space and half-spaces are supported: stable
// bridges admit no elementary crossing formula, so there is no bridge
// correction and the survival estimate carries an O(dt) bias toward
// survival (exits inside a step go unseen).  Kept out of any exit-rate
// comparisons for that reason.
StableEndpoints simulate_stable_endpoints(const Domain& dom, double alpha, const Vec& x0,
                                          double t, double dt, std::int64_t n_samples,
                                          std::uint64_t seed, int workers = 1);

}  // namespace iml
