#include "iml/moment_oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCore>

#include "iml/errors.hpp"
#include "iml/intersection.hpp"

namespace iml {

namespace {

constexpr double kNodeBudget = 4.0e6;  // k=2 matrices: N^2 entries at most

// Processes sharing a start point share an H assembly.
int representative(const std::vector<Vec>& x0, int i) {
    for (int j = 0; j < i; ++j)
        if ((x0[std::size_t(j)] - x0[std::size_t(i)]).norm() == 0.0) return j;
    return i;
}

double max_abs(const Eigen::ArrayXd& v) { return v.abs().maxCoeff(); }

}  // namespace

MomentPlan make_moment_plan(int k, int p, double t, const GridField& f,
                            std::vector<Vec> x0) {
    if (k < 1 || k > 2) throw input_error("moment plan: k must be 1 or 2");
    if (p < 1) throw input_error("moment plan: p >= 1 required");
    if (!(t > 0.0)) throw input_error("moment plan: t > 0 required");
    if (!f.lat) throw input_error("moment plan: test function has no lattice");
    if (int(x0.size()) != p) throw input_error("moment plan: need one start point per process");

    MomentPlan plan;
    plan.k = k;
    plan.p = p;
    plan.t = t;
    plan.f = f;
    plan.lat = f.lat;
    const Domain& dom = plan.lat->dom;
    if (dom.d * k > 4)
        throw resource_error("moment plan: d*k > 4 is beyond desk scale");
    if (std::pow(double(plan.lat->node_count), k) > kNodeBudget)
        throw resource_error("moment plan: lattice too fine for a k-fold tensor");
    for (const Vec& x : x0)
        if (!contains(dom, x)) throw input_error("moment plan: start point outside the domain");
    plan.x0 = std::move(x0);
    plan.ke = std::make_shared<KernelEval>(dom);

    // graded toward s=0 (kernel spike) and s=t (remaining-time root)
    plan.time_rule = graded_gl(0.0, t, 16, 8, true, true);

    // support box of f, half a cell beyond the extreme nonzero nodes
    const Lattice& lat = *plan.lat;
    plan.u_lo = Vec::Constant(dom.d, std::numeric_limits<double>::infinity());
    plan.u_hi = Vec::Constant(dom.d, -std::numeric_limits<double>::infinity());
    bool any = false;
    for (std::ptrdiff_t i = 0; i < lat.node_count; ++i) {
        if (f.v[i] == 0.0) continue;
        any = true;
        const Vec x = lat.node(i);
        plan.u_lo = plan.u_lo.cwiseMin(x);
        plan.u_hi = plan.u_hi.cwiseMax(x);
    }
    if (any) {
        plan.u_lo.array() -= lat.h / 2;
        plan.u_hi.array() += lat.h / 2;
    }
    plan.u_mask = Eigen::ArrayXd::Zero(lat.node_count);
    if (any)
        for (std::ptrdiff_t i = 0; i < lat.node_count; ++i) {
            const Vec x = lat.node(i);
            bool in = true;
            for (int a = 0; a < dom.d && in; ++a)
                in = x[a] >= plan.u_lo[a] && x[a] <= plan.u_hi[a];
            plan.u_mask[i] = in ? 1.0 : 0.0;
        }
    return plan;
}

bool in_support_box(const MomentPlan& plan, const Vec& x) {
    for (int a = 0; a < plan.lat->dom.d; ++a)
        if (x[a] < plan.u_lo[a] || x[a] > plan.u_hi[a]) return false;
    return true;
}

double H_t_eval(const MomentPlan& plan, int i, const std::vector<Vec>& xs) {
    if (i < 0 || i >= plan.p) throw input_error("H_t_eval: process index out of range");
    if (int(xs.size()) != plan.k) throw input_error("H_t_eval: need k points");
    for (const Vec& x : xs)
        if (!in_support_box(plan, x)) return 0.0;
    const KernelEval& ke = *plan.ke;
    const Vec& x0 = plan.x0[std::size_t(i)];
    if (plan.k == 1) return ke.time_integral(plan.t, x0, xs[0]);
    // k = 2: int_0^t p_{s}(x0, x1) * K_{t-s}(x1, x2) ds
    double acc = 0.0;
    for (Eigen::Index q = 0; q < plan.time_rule.x.size(); ++q) {
        const double s = plan.time_rule.x[q];
        const double a = ke(s, x0, xs[0]);
        if (a == 0.0) continue;
        acc += plan.time_rule.w[q] * a * ke.time_integral(plan.t - s, xs[0], xs[1]);
    }
    return acc;
}

Eigen::VectorXd assemble_H_vector(const MomentPlan& plan, int i) {
    if (i < 0 || i >= plan.p) throw input_error("assemble_H_vector: process index out of range");
    const Lattice& lat = *plan.lat;
    const KernelEval& ke = *plan.ke;
    const Vec& x0 = plan.x0[std::size_t(i)];
    Eigen::VectorXd h(lat.node_count);
    for (std::ptrdiff_t n = 0; n < lat.node_count; ++n) {
        if (plan.u_mask[n] == 0.0) {
            h[n] = 0.0;
            continue;
        }
        const Vec x = lat.node(n);
        if (!contains(lat.dom, x)) {
            h[n] = 0.0;
        } else if (lat.dom.d >= 2 && (x - x0).norm() < lat.h) {
            // the time integral diverges on the diagonal for d >= 2; the
            // node cell containing the start gets the cell-averaged value
            h[n] = ke.time_integral_cell_avg(plan.t, x0, lat.h);
        } else {
            h[n] = ke.time_integral(plan.t, x0, x);
        }
    }
    return h;
}

Eigen::MatrixXd assemble_H_matrix(const MomentPlan& plan, int i) {
    if (plan.k != 2) throw input_error("assemble_H_matrix: k = 2 plans only");
    if (i < 0 || i >= plan.p) throw input_error("assemble_H_matrix: process index out of range");
    const Lattice& lat = *plan.lat;
    const KernelEval& ke = *plan.ke;
    const Vec& x0 = plan.x0[std::size_t(i)];
    const std::ptrdiff_t n = lat.node_count;
    const int d = lat.dom.d;

    // active nodes: in U and in D
    std::vector<std::ptrdiff_t> act;
    for (std::ptrdiff_t a = 0; a < n; ++a)
        if (plan.u_mask[a] != 0.0 && contains(lat.dom, lat.node(a))) act.push_back(a);

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    Vec xa(d), xb(d);
    for (Eigen::Index q = 0; q < plan.time_rule.x.size(); ++q) {
        const double s = plan.time_rule.x[q];
        const double w = plan.time_rule.w[q];
        const double u = plan.t - s;
        for (const std::ptrdiff_t a : act) {
            xa = lat.node(a);
            const double first = ke(s, x0, xa);
            if (first == 0.0) continue;
            const double wf = w * first;
            for (const std::ptrdiff_t b : act) {
                xb = lat.node(b);
                const double second =
                    (d >= 2 && a == b) ? ke.time_integral_cell_avg(u, xa, lat.h)
                                       : ke.time_integral(u, xa, xb);
                H(a, b) += wf * second;
            }
        }
    }
    return H;
}

namespace {

// prod over processes of the (possibly transformed) H, k = 1 flavor
double moment_k1(const MomentPlan& plan, const Eigen::SparseMatrix<double>* T) {
    const Lattice& lat = *plan.lat;
    Eigen::ArrayXd prod = Eigen::ArrayXd::Ones(lat.node_count);
    std::vector<Eigen::VectorXd> cache(std::size_t(plan.p));
    for (int i = 0; i < plan.p; ++i) {
        const int r = representative(plan.x0, i);
        if (r == i) {
            Eigen::VectorXd h = assemble_H_vector(plan, i);
            if (T) h = (*T) * h;
            cache[std::size_t(i)] = std::move(h);
        } else {
            cache[std::size_t(i)] = cache[std::size_t(r)];
        }
        prod *= cache[std::size_t(i)].array();
    }
    return (plan.f.v * prod).sum() * lat.cell_measure;
}

// k = 2 flavor; mode 0: S, mode 1: T S T, mode 2: (T-1) S (T-1)
double moment_k2(const MomentPlan& plan, int mode, double eps) {
    const Lattice& lat = *plan.lat;
    const std::ptrdiff_t n = lat.node_count;
    Eigen::SparseMatrix<double> T;
    if (mode != 0) T = t_eps_matrix(lat, eps);

    Eigen::ArrayXXd prod = Eigen::ArrayXXd::Ones(n, n);
    std::vector<Eigen::MatrixXd> cache(std::size_t(plan.p));
    for (int i = 0; i < plan.p; ++i) {
        const int r = representative(plan.x0, i);
        if (r == i) {
            Eigen::MatrixXd H = assemble_H_matrix(plan, i);
            Eigen::MatrixXd S = H + H.transpose();
            if (mode == 1) {
                S = T * S * T;
            } else if (mode == 2) {
                S = (T * S * T) - (T * S) - (S * T) + S;
            }
            cache[std::size_t(i)] = std::move(S);
        } else {
            cache[std::size_t(i)] = cache[std::size_t(r)];
        }
        prod *= cache[std::size_t(i)].array();
    }
    const Eigen::VectorXd fv = plan.f.v.matrix();
    return fv.dot(prod.matrix() * fv) * lat.cell_measure * lat.cell_measure;
}

}  // namespace

double moment_exact(const MomentPlan& plan) {
    return plan.k == 1 ? moment_k1(plan, nullptr) : moment_k2(plan, 0, 0.0);
}

double moment_exact_mollified(const MomentPlan& plan, double eps) {
    if (plan.k == 1) {
        const Eigen::SparseMatrix<double> T = t_eps_matrix(*plan.lat, eps);
        return moment_k1(plan, &T);
    }
    return moment_k2(plan, 1, eps);
}

double moment_diff(const MomentPlan& plan, double eps) {
    if (plan.k != 2)
        throw input_error("moment_diff: k = 2 only (even power makes |.| exact)");
    return moment_k2(plan, 2, eps);
}

double superexp3_rhs(const MomentPlan& plan, double eps) {
    const Lattice& lat = *plan.lat;
    const Eigen::SparseMatrix<double> T = t_eps_matrix(lat, eps);
    const double f_inf = max_abs(plan.f.v);
    double kfact = 1.0;
    for (int j = 2; j <= plan.k; ++j) kfact *= j;

    double rhs = std::pow(f_inf, plan.k) * std::pow(kfact, plan.p);
    std::vector<double> cache(std::size_t(plan.p), -1.0);
    for (int i = 0; i < plan.p; ++i) {
        const int r = representative(plan.x0, i);
        double norm;
        if (cache[std::size_t(r)] >= 0.0) {
            norm = cache[std::size_t(r)];
        } else if (plan.k == 1) {
            const Eigen::VectorXd h = assemble_H_vector(plan, i);
            const Eigen::ArrayXd dvec = (T * h - h).array();
            norm = std::pow((dvec.abs().pow(plan.p)).sum() * lat.cell_measure,
                            1.0 / plan.p);
            cache[std::size_t(r)] = norm;
        } else {
            const Eigen::MatrixXd H = assemble_H_matrix(plan, i);
            const Eigen::MatrixXd D =
                (T * H * T) - (T * H) - (H * T) + H;  // (T-1) H (T-1)
            norm = std::pow(D.array().abs().pow(plan.p).sum() * lat.cell_measure *
                                lat.cell_measure,
                            1.0 / plan.p);
            cache[std::size_t(r)] = norm;
        }
        rhs *= norm;
    }
    return rhs;
}

}  // namespace iml
