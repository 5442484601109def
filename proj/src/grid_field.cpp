#include "iml/grid_field.hpp"

#include <cmath>

namespace iml {

GridField zero_field(std::shared_ptr<const Lattice> lat) {
    GridField g;
    g.lat = std::move(lat);
    g.v = Eigen::ArrayXd::Zero(g.lat->node_count);
    return g;
}

void require_same_lattice(const GridField& a, const GridField& b, const char* where) {
    if (!a.lat || !b.lat || !same_lattice(*a.lat, *b.lat))
        throw input_error(std::string(where) + ": lattice mismatch");
}

double pair_fields(const GridField& a, const GridField& b) {
    require_same_lattice(a, b, "pair_fields");
    return a.lat->cell_measure * (a.v * b.v).sum();
}

double l1_norm(const GridField& g) { return g.lat->cell_measure * g.v.abs().sum(); }

double lp_norm(const GridField& g, double p) {
    if (!(p >= 1)) throw input_error("lp_norm: need p >= 1");
    return std::pow(g.lat->cell_measure * g.v.abs().pow(p).sum(), 1.0 / p);
}

double l1_distance(const GridField& a, const GridField& b) {
    require_same_lattice(a, b, "l1_distance");
    return a.lat->cell_measure * (a.v - b.v).abs().sum();
}

double integral(const GridField& g) { return g.lat->cell_measure * g.v.sum(); }

}  // namespace iml
