#include "iml/intersection.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "iml/errors.hpp"

namespace iml {

double ball_kernel_q(int d, double eps, const Vec& x, const Vec& y) {
    if (!(eps > 0.0)) throw input_error("ball_kernel_q: eps must be positive");
    if (x.size() != d || y.size() != d)
        throw input_error("ball_kernel_q: point dimension mismatch");
    if ((x - y).norm() >= eps) return 0.0;
    return 1.0 / (unit_ball_volume(d) * std::pow(eps, d));
}

namespace {

// Integer offsets whose lattice displacement lies in the open eps-ball.
std::vector<Eigen::VectorXi> ball_stencil(int d, double h, double eps) {
    const int m = int(std::ceil(eps / h));
    std::vector<Eigen::VectorXi> offsets;
    Eigen::VectorXi o = Eigen::VectorXi::Constant(d, -m);
    for (;;) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) r2 += double(o[a]) * o[a];
        if (r2 * h * h < eps * eps) offsets.push_back(o);
        int a = d - 1;
        while (a >= 0 && o[a] == m) o[a--] = -m;
        if (a < 0) break;
        ++o[a];
    }
    return offsets;
}

}  // namespace

GridField apply_T_eps(const GridField& f, double eps) {
    const Lattice& lat = *f.lat;
    if (eps < lat.h) throw resolution_error("apply_T_eps: eps below lattice spacing");
    const auto offsets = ball_stencil(lat.dom.d, lat.h, eps);
    const double inv_count = 1.0 / double(offsets.size());

    GridField out = zero_field(f.lat);
    const int d = lat.dom.d;
    Eigen::VectorXi multi = Eigen::VectorXi::Zero(d);
    for (std::ptrdiff_t i = 0; i < lat.node_count; ++i) {
        double acc = 0.0;
        for (const auto& o : offsets) {
            bool inside = true;
            std::ptrdiff_t j = 0;
            for (int a = 0; a < d && inside; ++a) {
                const int ma = multi[a] + o[a];
                if (ma < 0 || ma >= lat.nodes[a]) inside = false;
                j = j * lat.nodes[a] + ma;
            }
            if (inside) acc += f.v[j];
        }
        out.v[i] = acc * inv_count;
        int a = d - 1;
        while (a >= 0 && ++multi[a] == lat.nodes[a]) multi[a--] = 0;
    }
    return out;
}

Eigen::SparseMatrix<double> t_eps_matrix(const Lattice& lat, double eps) {
    if (eps < lat.h) throw resolution_error("t_eps_matrix: eps below lattice spacing");
    const auto offsets = ball_stencil(lat.dom.d, lat.h, eps);
    const double w = 1.0 / double(offsets.size());
    const int d = lat.dom.d;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(std::size_t(lat.node_count) * offsets.size());
    Eigen::VectorXi multi = Eigen::VectorXi::Zero(d);
    for (std::ptrdiff_t i = 0; i < lat.node_count; ++i) {
        for (const auto& o : offsets) {
            bool inside = true;
            std::ptrdiff_t j = 0;
            for (int a = 0; a < d && inside; ++a) {
                const int ma = multi[a] + o[a];
                if (ma < 0 || ma >= lat.nodes[a]) inside = false;
                j = j * lat.nodes[a] + ma;
            }
            if (inside) trips.emplace_back(int(i), int(j), w);
        }
        int a = d - 1;
        while (a >= 0 && ++multi[a] == lat.nodes[a]) multi[a--] = 0;
    }
    Eigen::SparseMatrix<double> T(int(lat.node_count), int(lat.node_count));
    T.setFromTriplets(trips.begin(), trips.end());
    return T;
}

IntersectionField intersection_field(const std::vector<OccupationField>& occs,
                                     double eps, double t) {
    if (occs.empty()) throw input_error("intersection_field: no occupation fields");
    for (std::size_t i = 1; i < occs.size(); ++i)
        if (!same_lattice(*occs[0].field.lat, *occs[i].field.lat))
            throw input_error("intersection_field: occupation fields on different lattices");

    IntersectionField out{apply_T_eps(occs[0].field, eps), eps, t, int(occs.size())};
    for (std::size_t i = 1; i < occs.size(); ++i)
        out.field.v *= apply_T_eps(occs[i].field, eps).v;
    return out;
}

double pair_with_test(const GridField& fld, const GridField& f) {
    return pair_fields(fld, f);
}
double pair_with_test(const OccupationField& occ, const GridField& f) {
    return pair_fields(occ.field, f);
}
double pair_with_test(const IntersectionField& fld, const GridField& f) {
    return pair_fields(fld.field, f);
}

McMomentStats mc_intersection_moments(const Domain& dom, const Vec& x0, int p,
                                      double t, double dt, double eps,
                                      std::int64_t n_samples, std::uint64_t seed,
                                      std::shared_ptr<const Lattice> lat,
                                      const GridField& f, int workers) {
    if (p < 1) throw input_error("mc_intersection_moments: p >= 1 required");
    if (n_samples < 1) throw input_error("mc_intersection_moments: n_samples >= 1 required");
    if (!lat || !f.lat || !same_lattice(*f.lat, *lat))
        throw input_error("mc_intersection_moments: test function on a different lattice");
    const double scale = std::pow(t, p);

    struct Partial {
        double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    };
    const auto partials = detail::parallel_blocks<Partial>(
        n_samples, workers,
        [&](std::int64_t, std::int64_t lo, std::int64_t hi, Partial& part) {
            std::vector<OccupationField> occs;
            for (std::int64_t m = lo; m < hi; ++m) {
                occs.clear();
                for (int i = 0; i < p; ++i) {
                    const KilledPath path = sample_path(
                        dom, x0, t, dt, seed,
                        std::uint64_t(m) * std::uint64_t(p) + std::uint64_t(i));
                    occs.push_back(occupation_field(path, lat, t));
                }
                const double y = scale * pair_with_test(intersection_field(occs, eps, t), f);
                part.s1 += y;
                part.s2 += y * y;
                part.s4 += y * y * y * y;
            }
        });

    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (const auto& part : partials) {
        s1 += part.s1;
        s2 += part.s2;
        s4 += part.s4;
    }
    const double n = double(n_samples);
    McMomentStats stats;
    stats.n_samples = n_samples;
    stats.moment = {s1 / n, s2 / n};
    const double var1 = std::max(0.0, (s2 - s1 * s1 / n) / std::max(1.0, n - 1));
    const double var2 = std::max(0.0, (s4 - s2 * s2 / n) / std::max(1.0, n - 1));
    stats.std_error = {std::sqrt(var1 / n), std::sqrt(var2 / n)};
    return stats;
}

void write_field_csv(const std::string& path, const GridField& f) {
    std::ofstream out(path);
    if (!out) throw input_error("write_field_csv: cannot open " + path);
    const Lattice& lat = *f.lat;
    for (int a = 0; a < lat.dom.d; ++a) out << "x" << a << ",";
    out << "value\n";
    out.precision(17);
    for (std::ptrdiff_t i = 0; i < lat.node_count; ++i) {
        const Vec x = lat.node(i);
        for (int a = 0; a < lat.dom.d; ++a) out << x[a] << ",";
        out << f.v[i] << "\n";
    }
}

void write_field_binary(const std::string& path_base, const GridField& f) {
    const Lattice& lat = *f.lat;
    {
        std::ofstream out(path_base + ".bin", std::ios::binary);
        if (!out) throw input_error("write_field_binary: cannot open " + path_base + ".bin");
        out.write(reinterpret_cast<const char*>(f.v.data()),
                  std::streamsize(sizeof(double)) * f.v.size());
    }
    nlohmann::ordered_json header;
    header["dimension"] = lat.dom.d;
    header["spacing"] = lat.h;
    header["origin"] = std::vector<double>(lat.lo.data(), lat.lo.data() + lat.lo.size());
    header["nodes"] = std::vector<int>(lat.nodes.data(), lat.nodes.data() + lat.nodes.size());
    header["count"] = lat.node_count;
    header["cell_measure"] = lat.cell_measure;
    header["layout"] = "row-major, first axis slowest";
    std::ofstream out(path_base + ".json");
    if (!out) throw input_error("write_field_binary: cannot open " + path_base + ".json");
    out << header.dump(2) << "\n";
}

}  // namespace iml
