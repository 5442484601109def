#include "iml/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iml/config.hpp"
#include "iml/constants.hpp"
#include "iml/errors.hpp"
#include "iml/geometry.hpp"
#include "iml/grid_field.hpp"
#include "iml/moment_oracle.hpp"
#include "iml/path_sim.hpp"
#include "iml/rate_solver.hpp"
#include "iml/stable_ext.hpp"
#include "iml/svg.hpp"

namespace iml {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV accumulator: comma-separated cells, '\n' rows, no quoting (cell
// content here is numeric or a known-safe identifier).
struct Csv {
    std::string text;
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) text += ',';
            text += cells[i];
        }
        text += '\n';
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw input_error("short write on '" + path + "'");
}

ordered_json value_to_json(const ConfigValue& v) {
    switch (v.kind) {
        case ConfigValue::Kind::string: return v.str;
        case ConfigValue::Kind::boolean: return v.flag;
        case ConfigValue::Kind::number: return v.num;
        case ConfigValue::Kind::array: return v.arr;
    }
    return nullptr;
}

// nests flat "section.key" entries into {"section": {"key": value}}
ordered_json nested_config(const ConfigDoc& doc) {
    ordered_json out = ordered_json::object();
    for (const auto& [full, v] : doc) {
        const size_t dot = full.find('.');
        if (dot == std::string::npos) {
            out[full] = value_to_json(v);
        } else {
            const std::string sec = full.substr(0, dot);
            if (!out.contains(sec)) out[sec] = ordered_json::object();
            out[sec][full.substr(dot + 1)] = value_to_json(v);
        }
    }
    return out;
}

std::string sidecar_json(const std::string& sub, const ConfigDoc& doc,
                         const std::string& hash12, const std::string& seed_source,
                         int workers, const std::vector<std::string>& outputs) {
    ordered_json j;
    j["subcommand"] = sub;
    j["config_hash"] = hash12;
    j["seed_source"] = seed_source;
    j["workers"] = workers;
    j["outputs"] = outputs;
    j["config"] = nested_config(doc);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- gates

// Brownian admissibility d - p(d-2) > 0; violation is exit status 2.
bool brownian_gate(const ExperimentConfig& cfg) {
    const int margin = cfg.domain.d - cfg.p * (cfg.domain.d - 2);
    if (margin > 0) return true;
    std::cerr << "admissibility: d - p(d-2) = " << margin
              << " <= 0 (requires d - p(d-2) > 0)\n";
    return false;
}

// Stable admissibility; names the first violated inequality.
bool stable_gate(const StableParams& sp) {
    if (!(sp.alpha > 0.0 && sp.alpha < 2.0)) {
        std::cerr << "admissibility: 0 < alpha < 2 fails (alpha = " << sp.alpha << ")\n";
        return false;
    }
    if (!(sp.alpha < double(sp.d))) {
        std::cerr << "admissibility: alpha < d fails (alpha = " << sp.alpha
                  << ", d = " << sp.d << ")\n";
        return false;
    }
    const double margin = double(sp.d) - double(sp.p) * (double(sp.d) - sp.alpha);
    if (!(margin > 0.0)) {
        std::cerr << "admissibility: d - p(d-alpha) = " << margin
                  << " <= 0 (requires d - p(d-alpha) > 0)\n";
        return false;
    }
    return true;
}

// ------------------------------------------------------------ helpers

std::shared_ptr<const Lattice> lattice_of(const ExperimentConfig& cfg) {
    return make_shared_lattice(cfg.domain, cfg.grid_h, cfg.grid_margin);
}

double bump1(double u) {
    return std::fabs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
}

// separable smooth bump prod_j bump((x_j - c_j)/w), the standard compactly
// supported C-infinity test function
GridField bump_field(const std::shared_ptr<const Lattice>& lat, const Vec& center,
                     double width) {
    if (!(width > 0.0)) throw input_error("moments.width must be positive");
    GridField f = sample_field(lat, [&](const Vec& x) {
        double v = 1.0;
        for (int j = 0; j < x.size(); ++j) v *= bump1((x[j] - center[j]) / width);
        return v;
    });
    if (f.v.maxCoeff() <= 0.0)
        throw input_error("test function vanishes on the whole lattice "
                          "(check moments.center / moments.width against the grid)");
    return f;
}

Vec vec_of(const std::vector<double>& a) {
    Vec v(long(a.size()));
    for (size_t i = 0; i < a.size(); ++i) v[long(i)] = a[i];
    return v;
}

// ------------------------------------------------------- subcommands

// survival curve S(t) for a single killed process started at x0
void run_simulate(const ExperimentConfig& cfg, int workers, Csv& csv) {
    const std::vector<SurvivalEstimate> curve = survival_curve(
        cfg.domain, cfg.x0, cfg.t_list, cfg.dt, cfg.samples, cfg.seed, workers);
    csv.row({"t", "survival", "std_error", "surviving"});
    for (size_t i = 0; i < curve.size(); ++i) {
        const auto surviving =
            std::llround(curve[i].estimate * double(cfg.samples));
        csv.row({g17(cfg.t_list[i]), g17(curve[i].estimate),
                 g17(curve[i].std_error), std::to_string(surviving)});
    }
}

// deterministic quadrature moments of the mollified intersection pairing
void run_moments(const ExperimentConfig& cfg, Csv& csv) {
    const double km = num_or(cfg.doc, "moments.k_max", 2.0);
    if (km < 1.0 || km != std::floor(km))
        throw input_error("moments.k_max must be a positive integer");
    const int k_max = int(km);

    const auto lat = lattice_of(cfg);
    std::vector<double> c_default(size_t(cfg.domain.d));
    for (int j = 0; j < cfg.domain.d; ++j) c_default[size_t(j)] = cfg.x0[j];
    const auto center = arr_or(cfg.doc, "moments.center", c_default);
    if (int(center.size()) != cfg.domain.d)
        throw input_error("moments.center must have d entries");
    const GridField f =
        bump_field(lat, vec_of(center), num_or(cfg.doc, "moments.width", 0.25));

    const std::vector<Vec> x0s(size_t(cfg.p), cfg.x0);
    csv.row({"config_hash", "k", "p", "t", "eps", "value", "error_estimate"});
    for (int k = 1; k <= k_max; ++k) {
        const MomentPlan plan = make_moment_plan(k, cfg.p, cfg.t, f, x0s);
        const double value = moment_exact_mollified(plan, cfg.eps);
        // quadrature is deterministic; no sampling error to report
        csv.row({cfg.hash12, std::to_string(k), std::to_string(cfg.p), g17(cfg.t),
                 g17(cfg.eps), g17(value), g17(0.0)});
    }
}

// C1 / C2 / C3 sweep tables
void run_constants(const ExperimentConfig& cfg, Csv& csv) {
    const auto lat = lattice_of(cfg);
    Window U;
    if (has_key(cfg.doc, "constants.u_lo") || has_key(cfg.doc, "constants.u_hi")) {
        const auto lo = require_arr(cfg.doc, "constants.u_lo");
        const auto hi = require_arr(cfg.doc, "constants.u_hi");
        if (int(lo.size()) != cfg.domain.d || int(hi.size()) != cfg.domain.d)
            throw input_error("constants.u_lo and constants.u_hi must have d entries");
        U.lo = vec_of(lo);
        U.hi = vec_of(hi);
    } else if (cfg.domain.kind == DomainKind::box) {
        U.lo = cfg.domain.a;
        U.hi = cfg.domain.b;
    } else if (cfg.domain.kind == DomainKind::disk) {
        // largest axis box inside the disk
        const double r = cfg.domain.radius / std::sqrt(2.0);
        U.lo = cfg.domain.center.array() - r;
        U.hi = cfg.domain.center.array() + r;
    } else {
        throw input_error("constants: unbounded domain requires constants.u_lo "
                          "and constants.u_hi (a compact window)");
    }

    const ConstantsReport rep = make_constants_report(
        cfg.domain, cfg.p, cfg.eps_list, cfg.delta_list, U, lat);
    csv.row({"config_hash", "quantity", "eps", "delta", "value"});
    for (size_t i = 0; i < rep.eps_list.size(); ++i)
        for (size_t j = 0; j < rep.delta_list.size(); ++j)
            csv.row({cfg.hash12, "C1", g17(rep.eps_list[i]), g17(rep.delta_list[j]),
                     g17(rep.c1(long(i), long(j)))});
    for (size_t j = 0; j < rep.delta_list.size(); ++j)
        csv.row({cfg.hash12, "C2", "", g17(rep.delta_list[j]), g17(rep.c2[long(j)])});
    csv.row({cfg.hash12, "C3", "", "", g17(rep.c3)});
}

// principal eigenvalue, the rate of its own eigentuple, and the LDP target
void run_rate(const ExperimentConfig& cfg, Csv& csv) {
    const auto lat = lattice_of(cfg);
    const EigenResult eig = principal_eigenpair(cfg.domain, lat);

    MeasureTuple mt;
    GridField rho = eig.psi1;
    rho.v = eig.psi1.v.array().square();  // L2-normalized, so rho integrates to 1
    for (int i = 0; i < cfg.p; ++i) mt.mus.push_back(rho);
    mt.mu = rho;
    for (int i = 1; i < cfg.p; ++i) mt.mu.v = mt.mu.v.array() * rho.v.array();
    mt.mass_at_infinity.assign(size_t(cfg.p), 0.0);
    const double rate = rate_I(mt);

    csv.row({"config_hash", "quantity", "value"});
    csv.row({cfg.hash12, "lambda1", g17(eig.lambda1)});
    csv.row({cfg.hash12, "rate_eigentuple", g17(rate)});
    csv.row({cfg.hash12, "p_lambda1", g17(double(cfg.p) * eig.lambda1)});
}

// Monte Carlo exit rates vs the p*lambda1 prediction
void run_ldp_check(const ExperimentConfig& cfg, int workers, Csv& csv) {
    const ExitRateTable tab = empirical_exit_rate(
        cfg.domain, cfg.x0, cfg.p, cfg.t_list, cfg.dt, cfg.samples, cfg.seed, workers);
    csv.row({"t", "rate", "std_error", "surviving", "reliable", "prediction", "gap"});
    for (const ExitRateRow& r : tab.rows)
        csv.row({g17(r.t), g17(r.rate), g17(r.std_error), std::to_string(r.surviving),
                 r.reliable ? "1" : "0", g17(tab.prediction),
                 g17(tab.prediction - r.rate)});
}

// empirical characteristic function of one stable increment vs its closed form
void run_stable(const ExperimentConfig& cfg, double alpha, int workers, Csv& csv) {
    const int d = cfg.domain.d;
    const std::vector<double> xi_list =
        arr_or(cfg.doc, "stable.xi_list", {0.5, 1.0, 2.0});
    if (xi_list.empty()) throw input_error("stable.xi_list must be nonempty");
    const size_t m = xi_list.size();
    const std::int64_t n = cfg.samples;

    struct Partial {
        std::vector<double> sum, sumsq;
    };
    const auto partials = detail::parallel_blocks<Partial>(
        n, workers, [&](std::int64_t, std::int64_t lo, std::int64_t hi, Partial& pp) {
            pp.sum.assign(m, 0.0);
            pp.sumsq.assign(m, 0.0);
            for (std::int64_t s = lo; s < hi; ++s) {
                const Vec x = sample_stable_increment(alpha, d, cfg.dt, cfg.seed,
                                                      std::uint64_t(s));
                for (size_t q = 0; q < m; ++q) {
                    const double c = std::cos(xi_list[q] * x[0]);
                    pp.sum[q] += c;
                    pp.sumsq[q] += c * c;
                }
            }
        });

    csv.row({"config_hash", "xi", "empirical", "reference", "std_error"});
    for (size_t q = 0; q < m; ++q) {
        double s = 0.0, s2 = 0.0;
        for (const Partial& pp : partials) {
            if (pp.sum.empty()) continue;  // blocks past n_items stay empty
            s += pp.sum[q];
            s2 += pp.sumsq[q];
        }
        const double mean = s / double(n);
        const double var = std::max(0.0, s2 / double(n) - mean * mean);
        const double se = std::sqrt(var / double(n));
        const double ref = std::exp(-cfg.dt * std::pow(std::fabs(xi_list[q]), alpha));
        csv.row({cfg.hash12, g17(xi_list[q]), g17(mean), g17(ref), g17(se)});
    }
}

// ---------------------------------------------------------------- plot

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("plot: cannot read '" + path + "'");
    CsvTable tab;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (tab.header.empty())
            tab.header = cells;
        else
            tab.rows.push_back(cells);
    }
    if (tab.header.empty()) throw input_error("plot: '" + path + "' is empty");
    return tab;
}

size_t column_index(const CsvTable& tab, const std::string& name) {
    for (size_t i = 0; i < tab.header.size(); ++i)
        if (tab.header[i] == name) return i;
    throw input_error("plot: no column '" + name + "' in the CSV header");
}

// renders one CSV column pair (plus optional error column) as an SVG
void run_plot(const ConfigDoc& doc, const std::string& out_dir,
              const std::string& hash12, std::vector<std::string>& outputs) {
    const std::string csv_path = require_str(doc, "plot.csv");
    const std::string xcol = require_str(doc, "plot.x");
    const std::string ycol = require_str(doc, "plot.y");
    const CsvTable tab = read_csv(csv_path);
    const size_t xi = column_index(tab, xcol);
    const size_t yi = column_index(tab, ycol);
    size_t ei = size_t(-1);
    if (has_key(doc, "plot.err")) ei = column_index(tab, require_str(doc, "plot.err"));

    PlotSeries s;
    s.label = ycol;
    for (const auto& row : tab.rows) {
        const size_t need = std::max(xi, std::max(yi, ei == size_t(-1) ? 0 : ei));
        if (row.size() <= need) continue;            // ragged row: not this series
        if (row[xi].empty() || row[yi].empty()) continue;  // blank sweep cells
        const auto num = [&](const std::string& cell) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw input_error("plot: non-numeric cell '" + cell + "'");
            return v;
        };
        s.x.push_back(num(row[xi]));
        s.y.push_back(num(row[yi]));
        if (ei != size_t(-1)) s.yerr.push_back(row[ei].empty() ? 0.0 : num(row[ei]));
    }
    if (s.x.empty()) throw input_error("plot: no plottable rows in '" + csv_path + "'");

    PlotSpec spec;
    spec.title = has_key(doc, "plot.title") ? require_str(doc, "plot.title") : "";
    spec.xlabel = has_key(doc, "plot.xlabel") ? require_str(doc, "plot.xlabel") : xcol;
    spec.ylabel = has_key(doc, "plot.ylabel") ? require_str(doc, "plot.ylabel") : ycol;
    spec.series.push_back(std::move(s));

    const std::string out = out_dir + "/plot_" + hash12 + ".svg";
    write_line_plot(out, spec);
    outputs.push_back(out);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"intersection-measure laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    int workers = 1;

    const char* names[] = {"simulate", "moments",   "constants", "rate",
                           "ldp-check", "stable",   "plot"};
    const char* briefs[] = {
        "survival curve of one killed process",
        "deterministic moments of the mollified intersection pairing",
        "C1/C2/C3 sweep tables",
        "principal eigenvalue and its eigentuple rate",
        "Monte Carlo exit rates vs the p*lambda1 prediction",
        "stable-increment characteristic function check",
        "render a produced CSV as an SVG line plot"};
    for (int i = 0; i < 7; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], briefs[i]);
        sub->add_option("--config", config_path, "TOML experiment file")->required();
        sub->add_option("--workers", workers, "worker threads (scheduling only)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    const char* env = std::getenv("IML_SEED");
    const std::string env_seed = env ? env : "";

    try {
        std::filesystem::create_directories(out_dir);

        std::vector<std::string> outputs;
        ConfigDoc doc;
        std::string hash12;
        std::string seed_source = "config";

        if (sub == "plot") {
            // pure post-processing: no domain, seed, or gate involved
            doc = parse_config_file(config_path);
            hash12 = config_hash12(doc);
            run_plot(doc, out_dir, hash12, outputs);
        } else {
            const ExperimentConfig cfg = load_experiment(config_path, env_seed);
            doc = cfg.doc;
            hash12 = cfg.hash12;
            seed_source = cfg.seed_from_env ? "environment" : "config";

            if (sub == "stable") {
                const StableParams sp{require_num(cfg.doc, "stable.alpha"),
                                      cfg.domain.d, cfg.p};
                if (!stable_gate(sp)) return 2;
                Csv csv;
                run_stable(cfg, sp.alpha, workers, csv);
                const std::string path = out_dir + "/stable_" + hash12 + ".csv";
                write_text(path, csv.text);
                outputs.push_back(path);
            } else {
                if (!brownian_gate(cfg)) return 2;
                Csv csv;
                if (sub == "simulate")
                    run_simulate(cfg, workers, csv);
                else if (sub == "moments")
                    run_moments(cfg, csv);
                else if (sub == "constants")
                    run_constants(cfg, csv);
                else if (sub == "rate")
                    run_rate(cfg, csv);
                else
                    run_ldp_check(cfg, workers, csv);
                const std::string path = out_dir + "/" + sub + "_" + hash12 + ".csv";
                write_text(path, csv.text);
                outputs.push_back(path);
            }
        }

        const std::string side = out_dir + "/" + sub + "_" + hash12 + ".json";
        write_text(side, sidecar_json(sub, doc, hash12, seed_source, workers, outputs));
        outputs.push_back(side);
        for (const std::string& p : outputs) std::cout << "wrote " << p << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace iml
