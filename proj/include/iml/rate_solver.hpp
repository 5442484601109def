#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "iml/geometry.hpp"
#include "iml/grid_field.hpp"

namespace iml {

// A candidate point of the variational rate function: the product measure
// density mu, the p component sub-probability densities, and the mass each
// component parks at the cemetery (the one-point compactification of D).
// Component i must satisfy cell_measure * sum(mus[i]) + mass_at_infinity[i]
// = 1 within 1e-9.
struct MeasureTuple {
    GridField mu;
    std::vector<GridField> mus;
    std::vector<double> mass_at_infinity;
};

// Validates the invariants above (throws input_error).
void validate_tuple(const MeasureTuple& mt);

// (1/2) int_D |grad psi|^2 dx by forward differences, one link per axis per
// cell, with the zero extension outside the lattice box.  psi must vanish on
// non-interior nodes (the discrete zero-boundary class); a nonzero boundary
// trace is an input error.
double dirichlet_energy(const GridField& psi);

// Donsker-Varadhan rate of a measure tuple:
//   sum_i (1/2) int |grad sqrt(dmu_i/dx)|^2
// when every component root-density lies in the discrete zero-boundary
// Sobolev class and the product compatibility || mu - prod_i mus[i] ||_L1
// holds within compat_tol (default 10h); +infinity otherwise.  Mass at the
// cemetery is allowed: the energy scores only the density part (the
// canonical extension of the rate function to sub-probability tuples).
//
// The single-argument form tests Sobolev membership as "energy finite at
// this h".  The two-argument form also demands < 2x energy growth on a
// supplied h -> h/2 refinement of the same tuple, the lattice rendition of
// the membership limit; divergent candidates (indicator roots) are flagged
// +infinity by that growth test.
double rate_I(const MeasureTuple& mt, double compat_tol = -1.0);
double rate_I(const MeasureTuple& mt, const MeasureTuple& refined,
              double compat_tol = -1.0);

// Same rate with the compatibility constraint asked of the ball-averaged
// densities: mu is compared against prod_i T_eps mus[i].
double rate_I_eps(const MeasureTuple& mt, double eps, double compat_tol = -1.0);
double rate_I_eps(const MeasureTuple& mt, const MeasureTuple& refined, double eps,
                  double compat_tol = -1.0);

// Principal Dirichlet eigenpair of -(1/2) Laplacian on a bounded domain:
// inverse power iteration on the finite-difference operator (Shortley-Weller
// boundary arms on the disk), inner solves by conjugate gradients (BiCGSTAB
// when the cut arms break symmetry), Rayleigh residual driven below 1e-10.
// psi1 is L2-normalized and positive on interior nodes.
struct EigenResult {
    double lambda1 = 0.0;
    GridField psi1;
    int iterations = 0;
    double residual = 0.0;
};

EigenResult principal_eigenpair(const Domain& dom,
                                const std::shared_ptr<const Lattice>& lat);

// Monte Carlo exit-rate table: row t carries -(1/t) log S(t)^p from the
// simulated survival curve, its delta-method standard error, and a
// reliability flag (>= 50 surviving paths).  prediction carries the LDP
// target p * lambda1 (0 for unbounded domains, where survival decays
// sub-exponentially).
struct ExitRateRow {
    double t = 0.0;
    double rate = 0.0;
    double std_error = 0.0;
    std::int64_t surviving = 0;
    bool reliable = false;
};

struct ExitRateTable {
    std::vector<ExitRateRow> rows;
    double prediction = 0.0;
};

ExitRateTable empirical_exit_rate(const Domain& dom, const Vec& x0, int p,
                                  const std::vector<double>& t_list, double dt,
                                  std::int64_t n_samples, std::uint64_t seed,
                                  int workers = 1);

}  // namespace iml
