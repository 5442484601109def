#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "iml/geometry.hpp"
#include "iml/grid_field.hpp"

namespace iml {

// One killed Brownian path on the step grid j*dt, j = 0..n_steps.
// Rows of `positions` beyond alive_until+1 are zero and carry no meaning.
struct KilledPath {
    Eigen::MatrixXd positions;     // (n_steps+1) x d, row j = X_{j dt}
    std::ptrdiff_t alive_until;    // last step index with X still in D
    double exit_time_estimate;     // midpoint of the fatal step; +inf if never killed
    bool killed;
    double t;                      // horizon
    double dt;                     // effective step (horizon / n_steps)

    std::ptrdiff_t n_steps() const { return positions.rows() - 1; }
};

// Density of t^{-1} * occupation measure against Lebesgue, on a lattice.
// total_mass < 1 happens when the path is killed (deficit = mass at the
// boundary) or wanders off the lattice box (deficit = mass at infinity).
struct OccupationField {
    GridField field;
    double total_mass;
};

struct SurvivalEstimate {
    double estimate;
    double std_error;
};

// Mean of per-path normalized occupation densities over an ensemble.
struct EnsembleOccupation {
    GridField mean_field;
    double mean_total_mass;
    std::int64_t n_paths;       // paths contributing to the mean
    std::int64_t n_surviving;
};

// Euler scheme with Brownian-bridge kill correction: after each in-domain
// step the path is killed with probability exp(-2*d1*d2/dt), d1 and d2 the
// nearest-boundary distances before and after the step.  The draw sequence
// is a pure function of (seed, stream), so ensembles are
// scheduling-independent.  If dt does not divide t it is adjusted to the
// nearest divisor t/n.
KilledPath sample_path(const Domain& dom, const Vec& x0, double t, double dt,
                       std::uint64_t seed, std::uint64_t stream = 0);

// Deposits dt/t per surviving step into the nearest lattice cell (nothing
// after the kill), then divides by cell_measure to make a density.
OccupationField occupation_field(const KilledPath& path,
                                 std::shared_ptr<const Lattice> lat, double t);

// Monte Carlo frequency of {t < tau_D} with binomial standard error.
SurvivalEstimate survival_probability(const Domain& dom, const Vec& x0, double t,
                                      double dt, std::int64_t n_samples,
                                      std::uint64_t seed, int workers = 1);

// Survival at each horizon in t_list from one ensemble run to max(t_list),
// recording first exit steps (one pass, consistent estimates across t).
std::vector<SurvivalEstimate> survival_curve(const Domain& dom, const Vec& x0,
                                             const std::vector<double>& t_list,
                                             double dt, std::int64_t n_samples,
                                             std::uint64_t seed, int workers = 1);

// Joint survival of p independent processes started at x0 (process i of
// sample s uses stream s*p+i, matching the intersection-field ensembles).
SurvivalEstimate joint_survival_probability(const Domain& dom, const Vec& x0, int p,
                                            double t, double dt, std::int64_t n_samples,
                                            std::uint64_t seed, int workers = 1);

// Mean occupation density over n_samples paths; optionally only over the
// surviving ones (mean_field is zero and n_paths = 0 if none survive).
EnsembleOccupation ensemble_occupation(const Domain& dom, const Vec& x0, double t,
                                       double dt, std::int64_t n_samples,
                                       std::uint64_t seed,
                                       std::shared_ptr<const Lattice> lat,
                                       bool condition_on_survival = false,
                                       int workers = 1);

namespace detail {

// Work items are claimed in fixed-size blocks and every block's partial
// result lands in its own slot; the caller reduces slots in block order, so
// results do not depend on the number of workers.
inline constexpr std::int64_t kPathBlock = 4096;

template <class Partial, class Work>
std::vector<Partial> parallel_blocks(std::int64_t n_items, int workers, Work&& work) {
    const std::int64_t n_blocks = (n_items + kPathBlock - 1) / kPathBlock;
    std::vector<Partial> partials(std::size_t(std::max<std::int64_t>(n_blocks, 0)));
    std::atomic<std::int64_t> next{0};
    auto body = [&] {
        for (;;) {
            const std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
            if (b >= n_blocks) return;
            const std::int64_t lo = b * kPathBlock;
            const std::int64_t hi = std::min(n_items, lo + kPathBlock);
            work(b, lo, hi, partials[std::size_t(b)]);
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& th : pool) th.join();
    }
    return partials;
}

}  // namespace detail

}  // namespace iml
