#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "iml/geometry.hpp"
#include "iml/grid_field.hpp"
#include "iml/path_sim.hpp"

namespace iml {

// Ball average kernel: 1/|B(x,eps)| on the open ball, 0 outside.
double ball_kernel_q(int d, double eps, const Vec& x, const Vec& y);

// Discrete ball average: mean of f over the lattice nodes whose centers lie
// in the open eps-ball around each node.  The divisor is the full stencil
// size (the realized discrete ball mass), so constants are preserved exactly
// away from the lattice-box edge, T_eps is an L^r contraction, and the zero
// extension beyond the box matches the convention that fields vanish off D.
GridField apply_T_eps(const GridField& f, double eps);

// The same discrete operator as an explicit (symmetric, sub-stochastic)
// matrix acting on flat node vectors; apply_T_eps(f) == t_eps_matrix * f.v.
Eigen::SparseMatrix<double> t_eps_matrix(const Lattice& lat, double eps);

// Density of t^{-p} * (approximated mutual intersection measure): the
// pointwise product of the eps-ball-averaged normalized occupation
// densities of the p processes.
struct IntersectionField {
    GridField field;
    double epsilon;
    double t;
    int p;
};

IntersectionField intersection_field(const std::vector<OccupationField>& occs,
                                     double eps, double t);

// cell_measure * sum(field * f) — the lattice pairing with a test function.
double pair_with_test(const GridField& fld, const GridField& f);
double pair_with_test(const OccupationField& occ, const GridField& f);
double pair_with_test(const IntersectionField& fld, const GridField& f);

// Monte Carlo moments of Y = <l^IS_{t,eps}, f> (unnormalized pairing, i.e.
// t^p times the pairing of the normalized product field).  moment[k-1] is
// the sample mean of Y^k with its standard error, over n_samples joint
// draws of p paths (process i of sample s uses stream s*p+i).
struct McMomentStats {
    std::array<double, 2> moment;
    std::array<double, 2> std_error;
    std::int64_t n_samples;
};

McMomentStats mc_intersection_moments(const Domain& dom, const Vec& x0, int p,
                                      double t, double dt, double eps,
                                      std::int64_t n_samples, std::uint64_t seed,
                                      std::shared_ptr<const Lattice> lat,
                                      const GridField& f, int workers = 1);

// Serialization: CSV with node coordinates + value, and a raw row-major
// binary dump (path_base.bin) with a JSON header (path_base.json).
void write_field_csv(const std::string& path, const GridField& f);
void write_field_binary(const std::string& path_base, const GridField& f);

}  // namespace iml
