#include "iml/rate_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "iml/errors.hpp"
#include "iml/intersection.hpp"
#include "iml/path_sim.hpp"

namespace iml {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GridField sqrt_density(const GridField& rho) {
    GridField psi;
    psi.lat = rho.lat;
    psi.v = rho.v.max(0.0).sqrt();
    for (long i = 0; i < psi.lat->node_count; ++i)
        if (!psi.lat->interior[size_t(i)]) psi.v[i] = 0.0;
    return psi;
}

// membership of sqrt(rho) in the discrete zero-boundary Sobolev class:
// finite energy, and < 2x growth under the supplied h -> h/2 refinement
// (the divergence flag for indicator-type roots, whose energy doubles).
bool w12_member(double e_coarse, const GridField* refined_rho, double* e_out) {
    *e_out = e_coarse;
    if (!std::isfinite(e_coarse)) return false;
    if (refined_rho != nullptr) {
        const double e_fine = dirichlet_energy(sqrt_density(*refined_rho));
        if (!std::isfinite(e_fine) || e_fine >= 2.0 * e_coarse) return false;
    }
    return true;
}

double rate_core(const MeasureTuple& mt, const MeasureTuple* refined, double eps,
                 double compat_tol) {
    validate_tuple(mt);
    if (refined != nullptr) {
        validate_tuple(*refined);
        if (refined->mus.size() != mt.mus.size())
            throw input_error("rate: refinement pair has a different component count");
        if (std::abs(refined->mu.lat->h - 0.5 * mt.mu.lat->h) > 1e-12 * mt.mu.lat->h)
            throw input_error("rate: refinement pair must halve the spacing");
    }
    const Lattice& lat = mt.mu.lattice();
    const double tol = compat_tol > 0.0 ? compat_tol : 10.0 * lat.h;

    Eigen::ArrayXd prod = Eigen::ArrayXd::Ones(lat.node_count);
    for (const GridField& rho : mt.mus) {
        if (eps > 0.0) {
            prod *= apply_T_eps(rho, eps).v;
        } else {
            prod *= rho.v;
        }
    }
    // the product constraint is a statement about measures on D: compare on
    // interior nodes only (the ball average may spill past the boundary)
    double drift = 0.0;
    for (long i = 0; i < lat.node_count; ++i)
        if (lat.interior[size_t(i)]) drift += std::abs(mt.mu.v[i] - prod[i]);
    if (drift * lat.cell_measure > tol) return kInf;

    double total = 0.0;
    for (size_t i = 0; i < mt.mus.size(); ++i) {
        const double e = dirichlet_energy(sqrt_density(mt.mus[i]));
        double scored = 0.0;
        const GridField* fine = refined ? &refined->mus[i] : nullptr;
        if (!w12_member(e, fine, &scored)) return kInf;
        total += scored;
    }
    return total;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> dirichlet_operator(
    const Domain& dom, const Lattice& lat, const std::vector<long>& rows,
    const std::vector<long>& node_row, bool* symmetric) {
    const int d = lat.d;
    *symmetric = dom.kind != DomainKind::disk;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(rows.size() * size_t(2 * d + 1));

    std::vector<long> stride(size_t(d), 1);
    for (int k = d - 2; k >= 0; --k)
        stride[size_t(k)] = stride[size_t(k + 1)] * lat.nodes[k + 1];

    for (size_t r = 0; r < rows.size(); ++r) {
        const long idx = rows[r];
        const Eigen::VectorXi mi = lat.multi_index(idx);
        const Vec x = lat.node(idx);
        double diag = 0.0;
        for (int k = 0; k < d; ++k) {
            // arm lengths toward both neighbors; a non-interior neighbor is a
            // Dirichlet cut at the boundary crossing (Shortley-Weller on the
            // disk, exactly h on lattice-aligned boxes)
            double arm[2] = {lat.h, lat.h};
            long nb[2] = {-1, -1};
            for (int s = 0; s < 2; ++s) {
                const int dir = s == 0 ? 1 : -1;
                const bool in_box = dir > 0 ? mi[k] + 1 < lat.nodes[k] : mi[k] > 0;
                const long j = in_box ? idx + dir * stride[size_t(k)] : -1;
                if (j >= 0 && lat.interior[size_t(j)]) {
                    nb[s] = node_row[size_t(j)];
                } else if (dom.kind == DomainKind::disk) {
                    const double u = x[k] - dom.center[k];
                    const double rho2 =
                        (x - dom.center).squaredNorm() - u * u;
                    const double reach = std::sqrt(
                        std::max(dom.radius * dom.radius - rho2, 0.0));
                    const double cut = dir > 0 ? reach - u : reach + u;
                    arm[size_t(s)] = std::clamp(cut, 1e-6 * lat.h, lat.h);
                }
            }
            const double hp = arm[0], hm = arm[1];
            diag += 1.0 / (hp * hm);
            if (nb[0] >= 0)
                trip.emplace_back(int(r), int(nb[0]), -1.0 / (hp * (hp + hm)));
            if (nb[1] >= 0)
                trip.emplace_back(int(r), int(nb[1]), -1.0 / (hm * (hp + hm)));
        }
        trip.emplace_back(int(r), int(r), diag);
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> A(long(rows.size()), long(rows.size()));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

template <typename Solver>
Eigen::VectorXd inverse_power(const Eigen::SparseMatrix<double, Eigen::RowMajor>& A,
                              double* lambda, int* iters, double* resid) {
    Solver solver;
    solver.setTolerance(1e-13);
    solver.compute(A);
    if (solver.info() != Eigen::Success)
        throw solver_error("principal eigenpair: factorization setup failed");
    Eigen::VectorXd x = Eigen::VectorXd::Ones(A.rows());
    x.normalize();
    const int max_iters = 400;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd y = solver.solveWithGuess(x, x);
        if (solver.info() == Eigen::NumericalIssue)
            throw solver_error("principal eigenpair: inner solve failed");
        y.normalize();
        const Eigen::VectorXd Ay = A * y;
        const double lam = y.dot(Ay);
        const double res = (Ay - lam * y).norm();
        x = y;
        if (res <= 1e-10 * std::max(1.0, lam)) {
            *lambda = lam;
            *iters = it + 1;
            *resid = res;
            return x;
        }
    }
    throw solver_error("principal eigenpair: inverse iteration did not converge");
}

std::shared_ptr<const Lattice> prediction_lattice(const Domain& dom) {
    double extent = 0.0;
    if (dom.kind == DomainKind::box) {
        extent = (dom.b - dom.a).maxCoeff();
    } else {
        extent = 2.0 * dom.radius;
    }
    const int per_axis = dom.d == 1 ? 512 : (dom.d == 2 ? 128 : 48);
    return make_shared_lattice(dom, extent / per_axis, 0.0);
}

}  // namespace

void validate_tuple(const MeasureTuple& mt) {
    if (mt.mus.empty()) throw input_error("measure tuple: no components");
    if (mt.mass_at_infinity.size() != mt.mus.size())
        throw input_error("measure tuple: one cemetery mass per component required");
    const Lattice& lat = mt.mu.lattice();
    for (size_t i = 0; i < mt.mus.size(); ++i) {
        require_same_lattice(mt.mu, mt.mus[i], "measure tuple");
        const double c = mt.mass_at_infinity[i];
        if (!(c >= 0.0 && c <= 1.0))
            throw input_error("measure tuple: cemetery mass outside [0,1]");
        double mass = 0.0;
        for (long n = 0; n < lat.node_count; ++n) {
            const double v = mt.mus[i].v[n];
            if (v < 0.0) throw input_error("measure tuple: negative density");
            if (!lat.interior[size_t(n)] && v != 0.0)
                throw input_error("measure tuple: density mass outside the domain");
            mass += v;
        }
        mass *= lat.cell_measure;
        if (std::abs(mass + c - 1.0) > 1e-9)
            throw input_error("measure tuple: component mass + cemetery mass != 1");
    }
}

double dirichlet_energy(const GridField& psi) {
    const Lattice& lat = psi.lattice();
    for (long i = 0; i < lat.node_count; ++i)
        if (!lat.interior[size_t(i)] && psi.v[i] != 0.0)
            throw input_error("dirichlet energy: nonzero boundary trace");

    std::vector<long> stride(size_t(lat.d), 1);
    for (int k = lat.d - 2; k >= 0; --k)
        stride[size_t(k)] = stride[size_t(k + 1)] * lat.nodes[k + 1];

    double acc = 0.0;
    for (long i = 0; i < lat.node_count; ++i) {
        const Eigen::VectorXi mi = lat.multi_index(i);
        for (int k = 0; k < lat.d; ++k) {
            // one forward link per axis per cell; the zero extension supplies
            // the virtual neighbors just outside the lattice box
            const double right = (mi[k] + 1 < lat.nodes[k])
                                     ? psi.v[i + stride[size_t(k)]]
                                     : 0.0;
            const double diff = right - psi.v[i];
            acc += diff * diff;
            if (mi[k] == 0) acc += psi.v[i] * psi.v[i];
        }
    }
    return 0.5 * acc * std::pow(lat.h, lat.d - 2);
}

double rate_I(const MeasureTuple& mt, double compat_tol) {
    return rate_core(mt, nullptr, -1.0, compat_tol);
}

double rate_I(const MeasureTuple& mt, const MeasureTuple& refined, double compat_tol) {
    return rate_core(mt, &refined, -1.0, compat_tol);
}

double rate_I_eps(const MeasureTuple& mt, double eps, double compat_tol) {
    if (!(eps > 0.0)) throw input_error("rate: ball radius must be positive");
    return rate_core(mt, nullptr, eps, compat_tol);
}

double rate_I_eps(const MeasureTuple& mt, const MeasureTuple& refined, double eps,
                  double compat_tol) {
    if (!(eps > 0.0)) throw input_error("rate: ball radius must be positive");
    return rate_core(mt, &refined, eps, compat_tol);
}

EigenResult principal_eigenpair(const Domain& dom,
                                const std::shared_ptr<const Lattice>& lat) {
    if (!dom.bounded())
        throw input_error(
            "principal eigenpair: bounded domain required (truncate to a box first)");
    if (lat->dom.kind != dom.kind || lat->d != dom.d)
        throw input_error("principal eigenpair: lattice was built for a different domain");

    std::vector<long> rows;
    std::vector<long> node_row(size_t(lat->node_count), -1);
    for (long i = 0; i < lat->node_count; ++i) {
        if (lat->interior[size_t(i)]) {
            node_row[size_t(i)] = long(rows.size());
            rows.push_back(i);
        }
    }
    if (rows.empty()) throw input_error("principal eigenpair: no interior nodes");

    bool symmetric = true;
    const auto A = dirichlet_operator(dom, *lat, rows, node_row, &symmetric);

    EigenResult out;
    Eigen::VectorXd y;
    if (symmetric) {
        y = inverse_power<Eigen::ConjugateGradient<
            Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::Lower | Eigen::Upper>>(
            A, &out.lambda1, &out.iterations, &out.residual);
    } else {
        y = inverse_power<
            Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>>>(
            A, &out.lambda1, &out.iterations, &out.residual);
    }
    if (y.sum() < 0.0) y = -y;

    out.psi1.lat = lat;
    out.psi1.v = Eigen::ArrayXd::Zero(lat->node_count);
    const double scale = 1.0 / std::sqrt(lat->cell_measure);
    for (size_t r = 0; r < rows.size(); ++r) out.psi1.v[rows[r]] = y[long(r)] * scale;
    return out;
}

ExitRateTable empirical_exit_rate(const Domain& dom, const Vec& x0, int p,
                                  const std::vector<double>& t_list, double dt,
                                  std::int64_t n_samples, std::uint64_t seed,
                                  int workers) {
    if (p < 1) throw input_error("exit rate: p must be >= 1");
    if (t_list.empty()) throw input_error("exit rate: empty horizon list");
    for (size_t i = 1; i < t_list.size(); ++i)
        if (!(t_list[i] > t_list[i - 1]))
            throw input_error("exit rate: horizons must increase");

    const std::vector<SurvivalEstimate> curve =
        survival_curve(dom, x0, t_list, dt, n_samples, seed, workers);

    ExitRateTable table;
    table.rows.reserve(curve.size());
    for (size_t i = 0; i < curve.size(); ++i) {
        ExitRateRow row;
        row.t = t_list[i];
        const double s = curve[i].estimate;
        row.surviving = std::llround(s * double(n_samples));
        row.reliable = row.surviving >= 50;
        if (s > 0.0) {
            row.rate = -double(p) * std::log(s) / row.t;
            row.std_error = double(p) * curve[i].std_error / (row.t * s);
        } else {
            row.rate = kInf;
            row.std_error = kInf;
        }
        table.rows.push_back(row);
    }
    table.prediction =
        dom.bounded() ? double(p) * principal_eigenpair(dom, prediction_lattice(dom)).lambda1
                      : 0.0;
    return table;
}

}  // namespace iml
