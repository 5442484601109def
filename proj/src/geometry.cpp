#include "iml/geometry.hpp"

#include <cmath>
#include <numbers>

namespace iml {

namespace {

void check_dim(int d) {
    if (d < 1 || d > 3) throw input_error("domain dimension must be 1, 2, or 3");
}

}  // namespace

Domain make_whole_space(int d) {
    check_dim(d);
    Domain dom;
    dom.kind = DomainKind::whole_space;
    dom.d = d;
    return dom;
}

Domain make_half_space(int d, int axis, double offset) {
    check_dim(d);
    if (axis < 0 || axis >= d) throw input_error("half-space axis out of range");
    Domain dom;
    dom.kind = DomainKind::half_space;
    dom.d = d;
    dom.axis = axis;
    dom.offset = offset;
    return dom;
}

Domain make_box(const Vec& a, const Vec& b) {
    const int d = int(a.size());
    check_dim(d);
    if (b.size() != d) throw input_error("box corners must have equal dimension");
    for (int k = 0; k < d; ++k)
        if (!(a[k] < b[k])) throw input_error("box needs a[k] < b[k] on every axis");
    Domain dom;
    dom.kind = DomainKind::box;
    dom.d = d;
    dom.a = a;
    dom.b = b;
    return dom;
}

Domain make_interval(double a, double b) {
    Vec va(1), vb(1);
    va[0] = a;
    vb[0] = b;
    return make_box(va, vb);
}

Domain make_disk(const Vec& center, double radius) {
    if (center.size() != 2) throw input_error("disk is supported in d=2 only");
    if (!(radius > 0)) throw input_error("disk needs radius > 0");
    Domain dom;
    dom.kind = DomainKind::disk;
    dom.d = 2;
    dom.center = center;
    dom.radius = radius;
    return dom;
}

bool contains(const Domain& dom, const Vec& x) {
    if (x.size() != dom.d) throw input_error("point dimension does not match domain");
    switch (dom.kind) {
        case DomainKind::whole_space:
            return true;
        case DomainKind::half_space:
            return x[dom.axis] > dom.offset;
        case DomainKind::box:
            for (int k = 0; k < dom.d; ++k)
                if (!(x[k] > dom.a[k] && x[k] < dom.b[k])) return false;
            return true;
        case DomainKind::disk:
            return (x - dom.center).norm() < dom.radius;
    }
    return false;
}

double boundary_distance(const Domain& dom, const Vec& x) {
    if (x.size() != dom.d) throw input_error("point dimension does not match domain");
    switch (dom.kind) {
        case DomainKind::whole_space:
            return std::numeric_limits<double>::infinity();
        case DomainKind::half_space:
            return std::max(0.0, x[dom.axis] - dom.offset);
        case DomainKind::box: {
            double dist = std::numeric_limits<double>::infinity();
            for (int k = 0; k < dom.d; ++k) {
                dist = std::min(dist, x[k] - dom.a[k]);
                dist = std::min(dist, dom.b[k] - x[k]);
            }
            return std::max(0.0, dist);
        }
        case DomainKind::disk:
            return std::max(0.0, dom.radius - (x - dom.center).norm());
    }
    return 0.0;
}

Lattice make_lattice(const Domain& dom, double h, double margin) {
    if (!(h > 0)) throw input_error("lattice spacing must be positive");
    if (!dom.bounded() && !(margin > 0))
        throw input_error("unbounded domains need a positive lattice margin");

    Vec lo(dom.d), hi(dom.d);
    switch (dom.kind) {
        case DomainKind::whole_space:
            lo.setConstant(-margin);
            hi.setConstant(margin);
            break;
        case DomainKind::half_space:
            lo.setConstant(-margin);
            hi.setConstant(margin);
            lo[dom.axis] = dom.offset;
            hi[dom.axis] = dom.offset + 2.0 * margin;
            break;
        case DomainKind::box:
            lo = dom.a.array() - margin;
            hi = dom.b.array() + margin;
            break;
        case DomainKind::disk:
            lo = dom.center.array() - dom.radius - margin;
            hi = dom.center.array() + dom.radius + margin;
            break;
    }

    Lattice lat;
    lat.dom = dom;
    lat.d = dom.d;
    lat.h = h;
    lat.lo = lo;
    lat.nodes.resize(dom.d);
    for (int k = 0; k < dom.d; ++k) {
        const double span = hi[k] - lo[k];
        const double cells = span / h;
        const long n = std::lround(cells);
        if (n < 1 || std::abs(cells - double(n)) > 1e-9 * std::max(1.0, cells))
            throw input_error("lattice spacing does not divide the bounding box");
        lat.nodes[k] = int(n) + 1;
    }
    lat.node_count = 1;
    for (int k = 0; k < dom.d; ++k) lat.node_count *= lat.nodes[k];
    lat.cell_measure = std::pow(h, dom.d);
    lat.interior.resize(size_t(lat.node_count));
    for (long idx = 0; idx < lat.node_count; ++idx)
        lat.interior[size_t(idx)] = contains(dom, lat.node(idx)) ? 1 : 0;
    return lat;
}

std::shared_ptr<const Lattice> make_shared_lattice(const Domain& dom, double h, double margin) {
    return std::make_shared<const Lattice>(make_lattice(dom, h, margin));
}

bool same_lattice(const Lattice& a, const Lattice& b) {
    if (a.d != b.d || a.h != b.h || a.node_count != b.node_count) return false;
    if (a.nodes != b.nodes) return false;
    return (a.lo - b.lo).cwiseAbs().maxCoeff() < 1e-12;
}

double unit_ball_volume(int d) {
    switch (d) {
        case 1:
            return 2.0;
        case 2:
            return std::numbers::pi;
        case 3:
            return 4.0 * std::numbers::pi / 3.0;
    }
    throw input_error("unit_ball_volume: dimension must be 1, 2, or 3");
}

}  // namespace iml
