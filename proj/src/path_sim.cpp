#include "iml/path_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "iml/errors.hpp"
#include "iml/rng.hpp"

namespace iml {

namespace {

// Draw layout per path stream: the n-th normal of the path comes from
// normal_pair(n/2, slot 0) and the bridge-kill uniform of step j from
// u01(j, slot 1), so draws never collide and are order-independent.
class PathDraws {
  public:
    PathDraws(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const auto z = rng_.normal_pair(pair_index_++, 0);
        spare_ = z[1];
        have_spare_ = true;
        return z[0];
    }

    double kill_u(std::uint64_t step) const { return rng_.u01(step, 1); }

  private:
    CounterRng rng_;
    std::uint64_t pair_index_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct StepGrid {
    std::int64_t n_steps;
    double dt_eff;
};

StepGrid make_step_grid(double t, double dt) {
    if (!(t > 0.0) || !(dt > 0.0) || dt > t)
        throw input_error("path horizon requires 0 < dt <= t");
    const auto n = std::max<std::int64_t>(1, std::llround(t / dt));
    return {n, t / double(n)};
}

// Core Euler/bridge loop.  Recorder::record(j, x) is called for every
// in-domain step position j = 1..alive_until (and nothing after the kill).
template <class Recorder>
std::int64_t simulate_steps(const Domain& dom, const Vec& x0, std::int64_t n_steps,
                            double dt, PathDraws& draws, bool& killed, Recorder&& rec) {
    const int d = dom.d;
    const bool can_exit = dom.kind != DomainKind::whole_space;
    const double sqrt_dt = std::sqrt(dt);
    Vec x = x0;
    Vec y(d);
    double dist_prev = can_exit ? boundary_distance(dom, x) : 0.0;
    killed = false;
    for (std::int64_t j = 1; j <= n_steps; ++j) {
        for (int a = 0; a < d; ++a) y[a] = x[a] + sqrt_dt * draws.normal();
        if (can_exit) {
            if (!contains(dom, y)) {
                killed = true;
                return j - 1;
            }
            const double dist_next = boundary_distance(dom, y);
            const double cross = std::exp(-2.0 * dist_prev * dist_next / dt);
            if (draws.kill_u(std::uint64_t(j)) < cross) {
                killed = true;
                return j - 1;
            }
            dist_prev = dist_next;
        }
        x.swap(y);
        rec(j, x);
    }
    return n_steps;
}

struct NullRecorder {
    void operator()(std::int64_t, const Vec&) const {}
};

}  // namespace

KilledPath sample_path(const Domain& dom, const Vec& x0, double t, double dt,
                       std::uint64_t seed, std::uint64_t stream) {
    if (x0.size() != dom.d) throw input_error("sample_path: x0 dimension mismatch");
    if (!contains(dom, x0)) throw input_error("sample_path: x0 outside the domain");
    const StepGrid grid = make_step_grid(t, dt);

    KilledPath path;
    path.t = t;
    path.dt = grid.dt_eff;
    path.positions = Eigen::MatrixXd::Zero(grid.n_steps + 1, dom.d);
    path.positions.row(0) = x0.transpose();

    PathDraws draws(seed, stream);
    bool killed = false;
    path.alive_until = simulate_steps(
        dom, x0, grid.n_steps, grid.dt_eff, draws, killed,
        [&](std::int64_t j, const Vec& x) { path.positions.row(j) = x.transpose(); });
    path.killed = killed;
    path.exit_time_estimate =
        killed ? (double(path.alive_until) + 0.5) * grid.dt_eff
               : std::numeric_limits<double>::infinity();
    return path;
}

OccupationField occupation_field(const KilledPath& path,
                                 std::shared_ptr<const Lattice> lat, double t) {
    if (!lat) throw input_error("occupation_field: null lattice");
    if (std::abs(t - path.t) > 1e-12 * std::max(1.0, t))
        throw input_error("occupation_field: horizon does not match the path");
    OccupationField occ{zero_field(lat), 0.0};
    const double w = path.dt / path.t;
    Vec x(lat->dom.d);
    for (std::ptrdiff_t j = 1; j <= path.alive_until; ++j) {
        x = path.positions.row(j).transpose();
        const std::ptrdiff_t idx = lat->nearest_node(x);
        if (idx >= 0) {
            occ.field.v[idx] += w;
            occ.total_mass += w;
        }
    }
    occ.field.v /= lat->cell_measure;
    return occ;
}

SurvivalEstimate survival_probability(const Domain& dom, const Vec& x0, double t,
                                      double dt, std::int64_t n_samples,
                                      std::uint64_t seed, int workers) {
    if (n_samples < 1) throw input_error("survival_probability: n_samples >= 1 required");
    if (!contains(dom, x0)) throw input_error("survival_probability: x0 outside the domain");
    if (dom.kind == DomainKind::whole_space) return {1.0, 0.0};
    const StepGrid grid = make_step_grid(t, dt);

    const auto partials = detail::parallel_blocks<std::int64_t>(
        n_samples, workers,
        [&](std::int64_t, std::int64_t lo, std::int64_t hi, std::int64_t& alive) {
            alive = 0;
            for (std::int64_t m = lo; m < hi; ++m) {
                PathDraws draws(seed, std::uint64_t(m));
                bool killed = false;
                simulate_steps(dom, x0, grid.n_steps, grid.dt_eff, draws, killed,
                               NullRecorder{});
                if (!killed) ++alive;
            }
        });
    std::int64_t alive = 0;
    for (const auto& part : partials) alive += part;
    const double p_hat = double(alive) / double(n_samples);
    const double se = std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / double(n_samples));
    return {p_hat, se};
}

std::vector<SurvivalEstimate> survival_curve(const Domain& dom, const Vec& x0,
                                             const std::vector<double>& t_list,
                                             double dt, std::int64_t n_samples,
                                             std::uint64_t seed, int workers) {
    if (t_list.empty()) throw input_error("survival_curve: empty horizon list");
    if (n_samples < 1) throw input_error("survival_curve: n_samples >= 1 required");
    if (!contains(dom, x0)) throw input_error("survival_curve: x0 outside the domain");
    const double t_max = *std::max_element(t_list.begin(), t_list.end());
    const StepGrid grid = make_step_grid(t_max, dt);

    // Steps-survived thresholds for each requested horizon.
    std::vector<std::int64_t> need(t_list.size());
    for (std::size_t i = 0; i < t_list.size(); ++i) {
        if (!(t_list[i] > 0.0)) throw input_error("survival_curve: horizons must be positive");
        need[i] = std::min<std::int64_t>(grid.n_steps,
                                         std::llround(t_list[i] / grid.dt_eff));
    }

    if (dom.kind == DomainKind::whole_space)
        return std::vector<SurvivalEstimate>(t_list.size(), SurvivalEstimate{1.0, 0.0});

    using Counts = std::vector<std::int64_t>;
    const auto partials = detail::parallel_blocks<Counts>(
        n_samples, workers,
        [&](std::int64_t, std::int64_t lo, std::int64_t hi, Counts& alive_at) {
            alive_at.assign(t_list.size(), 0);
            for (std::int64_t m = lo; m < hi; ++m) {
                PathDraws draws(seed, std::uint64_t(m));
                bool killed = false;
                const std::int64_t steps = simulate_steps(dom, x0, grid.n_steps,
                                                          grid.dt_eff, draws, killed,
                                                          NullRecorder{});
                for (std::size_t i = 0; i < need.size(); ++i)
                    if (steps >= need[i]) ++alive_at[i];
            }
        });

    std::vector<SurvivalEstimate> out(t_list.size());
    for (std::size_t i = 0; i < t_list.size(); ++i) {
        std::int64_t alive = 0;
        for (const auto& part : partials) alive += part[i];
        const double p_hat = double(alive) / double(n_samples);
        out[i] = {p_hat,
                  std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / double(n_samples))};
    }
    return out;
}

SurvivalEstimate joint_survival_probability(const Domain& dom, const Vec& x0, int p,
                                            double t, double dt, std::int64_t n_samples,
                                            std::uint64_t seed, int workers) {
    if (p < 1) throw input_error("joint_survival_probability: p >= 1 required");
    if (n_samples < 1) throw input_error("joint_survival_probability: n_samples >= 1 required");
    if (!contains(dom, x0)) throw input_error("joint_survival_probability: x0 outside the domain");
    if (dom.kind == DomainKind::whole_space) return {1.0, 0.0};
    const StepGrid grid = make_step_grid(t, dt);

    const auto partials = detail::parallel_blocks<std::int64_t>(
        n_samples, workers,
        [&](std::int64_t, std::int64_t lo, std::int64_t hi, std::int64_t& alive) {
            alive = 0;
            for (std::int64_t m = lo; m < hi; ++m) {
                bool all_alive = true;
                for (int i = 0; i < p && all_alive; ++i) {
                    PathDraws draws(seed, std::uint64_t(m) * std::uint64_t(p) +
                                              std::uint64_t(i));
                    bool killed = false;
                    simulate_steps(dom, x0, grid.n_steps, grid.dt_eff, draws, killed,
                                   NullRecorder{});
                    all_alive = !killed;
                }
                if (all_alive) ++alive;
            }
        });
    std::int64_t alive = 0;
    for (const auto& part : partials) alive += part;
    const double p_hat = double(alive) / double(n_samples);
    const double se = std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / double(n_samples));
    return {p_hat, se};
}

EnsembleOccupation ensemble_occupation(const Domain& dom, const Vec& x0, double t,
                                       double dt, std::int64_t n_samples,
                                       std::uint64_t seed,
                                       std::shared_ptr<const Lattice> lat,
                                       bool condition_on_survival, int workers) {
    if (!lat) throw input_error("ensemble_occupation: null lattice");
    if (n_samples < 1) throw input_error("ensemble_occupation: n_samples >= 1 required");
    if (!contains(dom, x0)) throw input_error("ensemble_occupation: x0 outside the domain");
    if (lat->dom.d != dom.d) throw input_error("ensemble_occupation: lattice dimension mismatch");
    const StepGrid grid = make_step_grid(t, dt);
    const double w = grid.dt_eff / t;

    struct Partial {
        Eigen::ArrayXd bins;
        double mass = 0.0;
        std::int64_t used = 0;
        std::int64_t surviving = 0;
    };
    const auto partials = detail::parallel_blocks<Partial>(
        n_samples, workers,
        [&](std::int64_t, std::int64_t lo, std::int64_t hi, Partial& part) {
            part.bins = Eigen::ArrayXd::Zero(lat->node_count);
            Eigen::ArrayXd scratch = Eigen::ArrayXd::Zero(lat->node_count);
            std::vector<std::ptrdiff_t> touched;
            for (std::int64_t m = lo; m < hi; ++m) {
                PathDraws draws(seed, std::uint64_t(m));
                bool killed = false;
                touched.clear();
                simulate_steps(dom, x0, grid.n_steps, grid.dt_eff, draws, killed,
                               [&scratch, &touched, &lat, w](std::int64_t, const Vec& x) {
                                   const std::ptrdiff_t idx = lat->nearest_node(x);
                                   if (idx >= 0) {
                                       if (scratch[idx] == 0.0) touched.push_back(idx);
                                       scratch[idx] += w;
                                   }
                               });
                if (!killed) ++part.surviving;
                if (!condition_on_survival || !killed) {
                    ++part.used;
                    for (const std::ptrdiff_t idx : touched) {
                        part.bins[idx] += scratch[idx];
                        part.mass += scratch[idx];
                    }
                }
                for (const std::ptrdiff_t idx : touched) scratch[idx] = 0.0;
            }
        });

    EnsembleOccupation out{zero_field(lat), 0.0, 0, 0};
    Eigen::ArrayXd bins = Eigen::ArrayXd::Zero(lat->node_count);
    double mass = 0.0;
    for (const auto& part : partials) {
        bins += part.bins;
        mass += part.mass;
        out.n_paths += part.used;
        out.n_surviving += part.surviving;
    }
    if (out.n_paths > 0) {
        out.mean_field.v = bins / (double(out.n_paths) * lat->cell_measure);
        out.mean_total_mass = mass / double(out.n_paths);
    }
    return out;
}

}  // namespace iml
