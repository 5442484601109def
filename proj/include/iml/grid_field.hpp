#pragma once

#include <Eigen/Dense>
#include <memory>

#include "iml/geometry.hpp"

namespace iml {

// A scalar field sampled on lattice nodes.  Each node owns a cell of measure
// h^d, so sums over values times cell_measure approximate integrals over the
// lattice box.  Values at non-interior nodes represent the zero extension
// outside D unless a caller deliberately stores something else.
struct GridField {
    std::shared_ptr<const Lattice> lat;
    Eigen::ArrayXd v;

    const Lattice& lattice() const { return *lat; }
};

GridField zero_field(std::shared_ptr<const Lattice> lat);

// Sample f(x) at every node; zero at non-interior nodes if mask_exterior.
template <typename F>
GridField sample_field(std::shared_ptr<const Lattice> lat, F&& f, bool mask_exterior = true) {
    GridField g;
    g.lat = std::move(lat);
    g.v.resize(g.lat->node_count);
    for (long i = 0; i < g.lat->node_count; ++i) {
        if (mask_exterior && !g.lat->interior[size_t(i)])
            g.v[i] = 0.0;
        else
            g.v[i] = f(g.lat->node(i));
    }
    return g;
}

void require_same_lattice(const GridField& a, const GridField& b, const char* where);

// integral of a*b over the lattice box (cell_measure-weighted dot product).
double pair_fields(const GridField& a, const GridField& b);

// integral of |g| / |g|^p.
double l1_norm(const GridField& g);
double lp_norm(const GridField& g, double p);
double l1_distance(const GridField& a, const GridField& b);

// integral of g (signed).
double integral(const GridField& g);

}  // namespace iml
