#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <vector>

#include "iml/errors.hpp"

namespace iml {

using Vec = Eigen::VectorXd;

enum class DomainKind { whole_space, half_space, box, disk };

// An open domain D in R^d, d in {1,2,3}.  Supported shapes: the whole space,
// an axis-aligned half-space {x[axis] > offset}, an open axis-aligned box
// (a_k, b_k) per axis (d=1 box == interval), and an open disk (d=2 only).
struct Domain {
    DomainKind kind = DomainKind::whole_space;
    int d = 1;
    Vec a, b;           // box corners
    int axis = 0;       // half-space normal axis
    double offset = 0;  // half-space boundary position
    Vec center;         // disk center
    double radius = 0;  // disk radius

    bool bounded() const { return kind == DomainKind::box || kind == DomainKind::disk; }
};

Domain make_whole_space(int d);
Domain make_half_space(int d, int axis, double offset);
Domain make_box(const Vec& a, const Vec& b);
Domain make_interval(double a, double b);  // 1-d box
Domain make_disk(const Vec& center, double radius);

// Open-set membership.
bool contains(const Domain& dom, const Vec& x);

// dist(x, complement of D); +inf for the whole space.  For x outside D this
// is 0.
double boundary_distance(const Domain& dom, const Vec& x);

// Uniform node lattice covering a bounding box of D.  Bounded domains use
// their own bounding box extended by `margin`; unbounded domains require
// margin > 0 and use [-margin, margin] on unbounded axes (half-spaces use
// [offset, offset + 2*margin] on the constrained axis).  Nodes carry an
// interior flag (node in D); each node owns a cell of measure h^d.
struct Lattice {
    Domain dom;
    int d = 1;
    double h = 0;
    Vec lo;                        // lattice corner (node 0...0 position)
    Eigen::VectorXi nodes;         // nodes per axis
    std::vector<char> interior;    // per flattened node
    long node_count = 0;
    double cell_measure = 0;       // h^d

    // Row-major flattening, axis 0 slowest.
    long index(const Eigen::VectorXi& i) const {
        long idx = 0;
        for (int k = 0; k < d; ++k) idx = idx * nodes[k] + i[k];
        return idx;
    }
    Eigen::VectorXi multi_index(long idx) const {
        Eigen::VectorXi i(d);
        for (int k = d - 1; k >= 0; --k) {
            i[k] = int(idx % nodes[k]);
            idx /= nodes[k];
        }
        return i;
    }
    Vec node(long idx) const {
        const Eigen::VectorXi i = multi_index(idx);
        Vec x(d);
        for (int k = 0; k < d; ++k) x[k] = lo[k] + h * i[k];
        return x;
    }
    // Nearest node to x, or -1 if x falls outside the lattice box.
    long nearest_node(const Vec& x) const {
        long idx = 0;
        for (int k = 0; k < d; ++k) {
            const long i = std::lround((x[k] - lo[k]) / h);
            if (i < 0 || i >= nodes[k]) return -1;
            idx = idx * nodes[k] + i;
        }
        return idx;
    }
};

Lattice make_lattice(const Domain& dom, double h, double margin = 0.0);
std::shared_ptr<const Lattice> make_shared_lattice(const Domain& dom, double h,
                                                   double margin = 0.0);

// Geometric identity of lattices (same box, spacing, and domain kind).
bool same_lattice(const Lattice& a, const Lattice& b);

// d-dimensional unit-ball volume factor: |B(0,eps)| = unit_ball_volume(d) * eps^d.
double unit_ball_volume(int d);

}  // namespace iml
