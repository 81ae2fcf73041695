#ifndef MUHS_CLI_HPP
#define MUHS_CLI_HPP

// Batch commands behind the muhs executable. Each returns the process exit code.

#include "muhs/analysis.hpp"
#include "muhs/dynamics.hpp"
#include "muhs/field_io.hpp"
#include "muhs/io.hpp"
#include "muhs/lagrange.hpp"
#include "muhs/muops.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace muhs::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
    exit_completed = 0,
    exit_input_error = 1,
    exit_breaking = 2,
    exit_resolution = 3,
    exit_oracle_mismatch = 4,
};

inline int exit_code(Outcome o) {
    switch (o) {
        case Outcome::completed: return exit_completed;
        case Outcome::breaking_detected: return exit_breaking;
        case Outcome::resolution_exhausted: return exit_resolution;
    }
    return exit_input_error;
}

inline Scenario load_scenario(const fs::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const std::exception& e) {
        throw ScenarioError("", e.what());
    }
    return parse_scenario(text);
}

struct RunSettings {
    std::size_t snapshot_stride = 0;  ///< 0 disables the characteristics check
    std::size_t particles = 64;
};

struct RunSummary {
    Outcome outcome = Outcome::completed;
    std::optional<double> t_detect;
    std::optional<double> rate_slope;
    nlohmann::json report;
};

inline nlohmann::json nullable(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

/// Integrates one scenario and writes diagnostics.csv, final_state.csv,
/// report.json (and flow.csv when snapshots are requested) into `out`.
inline RunSummary execute(const Scenario& s, const fs::path& out, const RunSettings& settings = {}) {
    fs::create_directories(out);
    const PeriodicField u0 = SimulationState::initial(s).u;
    const CertificateReport cert = certify(u0, s.lambda);
    const RunResult r = run(s, RunOptions{settings.snapshot_stride});

    RunSummary sum;
    sum.outcome = r.outcome;
    nlohmann::json rep;
    rep["scenario"] = to_json(s);
    rep["outcome"] = to_string(r.outcome);
    rep["stop_reason"] = to_string(r.reason);
    rep["t_final"] = r.state_final.t;
    rep["accepted_steps"] = r.accepted_steps;
    rep["certificates"] = to_json(cert);

    double mu_res = 0.0, h1_res = 0.0, margin = std::numeric_limits<double>::infinity(), slope = 0.0;
    for (const auto& d : r.records) {
        mu_res = std::max(mu_res, std::abs(d.mu_residual));
        if (d.tail_frac < 1e-8) h1_res = std::max(h1_res, std::abs(d.h1_residual));
        margin = std::min(margin, d.linf_bound_margin);
        slope = std::min(slope, d.min_ux);
    }
    rep["invariants"] = {{"max_abs_mu_residual", mu_res},
                         {"max_abs_h1_residual_resolved", h1_res},
                         {"min_linf_bound_margin", margin},
                         {"min_slope", slope}};

    rep["blowup"] = nullptr;
    if (r.outcome == Outcome::breaking_detected) {
        const double t_detect = r.state_final.t, m_last = r.records.back().min_ux;
        sum.t_detect = t_detect;
        const auto bound = cert.tightest_bound();
        nlohmann::json b;
        try {
            const BlowupReport br = fit_blowup_rate(r.records, t_detect, m_last, s.lambda, bound);
            b = to_json(br);
            sum.rate_slope = br.rate_fit.slope;
        } catch (const InsufficientSamples& e) {
            b = {{"t_detect", t_detect},
                 {"m_last", m_last},
                 {"t_estimate", t_detect + 2.0 / std::abs(m_last)},
                 {"rate_fit", nullptr},
                 {"rate_fit_error", e.what()},
                 {"bound_used", nullable(bound)},
                 {"respects_bound", nullptr},
                 {"rate_in_band", nullptr}};
        }
        b["t_detect_within_bound"] = bound ? nlohmann::json(t_detect <= *bound) : nlohmann::json(nullptr);
        rep["blowup"] = b;
    }

    rep["transport"] = nullptr;
    if (settings.snapshot_stride) {
        TransportOptions opt;
        opt.particles = settings.particles;
        try {
            const TransportCheck c = momentum_transport_residual(u0, r, opt);
            rep["transport"] = {{"max_residual", c.max_residual}, {"t_checked", c.t_checked}, {"particles", opt.particles}};
            io::write_atomic(out / "flow.csv", flow_csv(c.rows));
        } catch (const FlowDegenerate& e) {
            rep["transport"] = {{"error", e.what()}, {"particles", opt.particles}};
        }
    }

    io::write_atomic(out / "diagnostics.csv", diagnostics_csv(r.records));
    io::write_atomic(out / "final_state.csv", to_csv(r.state_final.u));
    io::write_atomic(out / "report.json", rep.dump(2) + "\n");
    sum.report = std::move(rep);
    return sum;
}

inline int cmd_run(const fs::path& config, const fs::path& out, const RunSettings& settings, std::ostream& os,
                   std::ostream& err) {
    Scenario s;
    try {
        s = load_scenario(config);
    } catch (const ScenarioError& e) {
        err << config.string() << ": " << e.what() << "\n";
        return exit_input_error;
    }
    const RunSummary sum = execute(s, out, settings);
    os << "outcome " << to_string(sum.outcome) << " (" << sum.report["stop_reason"].get<std::string>() << ") at t = "
       << io::format_double(sum.report["t_final"].get<double>()) << "\n";
    if (sum.t_detect) {
        const auto& b = sum.report["blowup"];
        if (!b["bound_used"].is_null())
            os << "analytic bound " << io::format_double(b["bound_used"].get<double>()) << ", detected within bound: "
               << (b["t_detect_within_bound"].get<bool>() ? "yes" : "no") << "\n";
        if (sum.rate_slope) os << "rate slope " << io::format_double(*sum.rate_slope) << "\n";
    }
    return exit_code(sum.outcome);
}

// ---------------------------------------------------------------------------

inline void print_certificates(const CertificateReport& r, std::ostream& os) {
    auto bound = [](const BlowupCriterion& c) { return c.t_bound ? io::format_double(*c.t_bound) : std::string("-"); };
    os << std::left << std::setw(22) << "criterion" << std::setw(24) << "value" << std::setw(24) << "threshold"
       << std::setw(8) << "fires"
       << "t_bound\n";
    auto row = [&](const char* name, const BlowupCriterion& c) {
        os << std::setw(22) << name << std::setw(24) << io::format_double(c.lhs) << std::setw(24)
           << io::format_double(c.threshold) << std::setw(8) << (c.fires ? "yes" : "no") << bound(c) << "\n";
    };
    row("cubic slope integral", r.cubic);
    row("slope infimum", r.min_slope);
    row(r.odd_origin.is_odd ? "slope at 0 (odd)" : "slope at 0 (not odd)", r.odd_origin);
    os << std::setw(22) << "momentum sign" << "y0 in [" << io::format_double(r.momentum_sign.y0_min) << ", "
       << io::format_double(r.momentum_sign.y0_max) << "], sign definite: " << (r.momentum_sign.sign_definite ? "yes" : "no")
       << "\n";
    os << std::setw(22) << "third derivative" << io::format_double(r.third_derivative.norm_d3)
       << " <= " << io::format_double(r.third_derivative.bound) << ": " << (r.third_derivative.certifies ? "yes" : "no")
       << "\n";
    os << "verdict: "
       << (r.predicts_breaking() ? "breaking predicted" : r.predicts_global() ? "global solution" : "undecided") << "\n";
}

inline int cmd_certify(const fs::path& config, std::ostream& os, std::ostream& err) {
    Scenario s;
    try {
        s = load_scenario(config);
    } catch (const ScenarioError& e) {
        err << config.string() << ": " << e.what() << "\n";
        return exit_input_error;
    }
    const CertificateReport r = certify(SimulationState::initial(s).u, s.lambda);
    print_certificates(r, os);
    os << to_json(r).dump(2) << "\n";
    return exit_completed;
}

// ---------------------------------------------------------------------------

struct RateSettings {
    double lambda = 0.0;
    std::optional<double> t_detect;
    std::optional<double> bound;
};

inline int cmd_rate(const fs::path& diagnostics, const RateSettings& settings, std::ostream& os, std::ostream& err) {
    if (!(settings.lambda > 0.0)) {
        err << "--lambda must be > 0\n";
        return exit_input_error;
    }
    try {
        const auto records = diagnostics_from_csv(io::read_file(diagnostics));
        if (records.empty()) throw std::invalid_argument("no records in " + diagnostics.string());
        const double t_detect = settings.t_detect.value_or(records.back().t);
        double m_last = records.back().min_ux;
        for (const auto& r : records)
            if (r.t <= t_detect) m_last = r.min_ux;
        const auto rep = fit_blowup_rate(records, t_detect, m_last, settings.lambda, settings.bound);
        os << to_json(rep).dump(2) << "\n";
        return exit_completed;
    } catch (const std::exception& e) {
        err << diagnostics.string() << ": " << e.what() << "\n";
        return exit_input_error;
    }
}

// ---------------------------------------------------------------------------
// Sweeps

struct Axis {
    std::string name;
    std::vector<double> values;
};

struct SweepConfig {
    nlohmann::json base;
    std::vector<Axis> axes;
};

inline const std::vector<std::string>& axis_names() {
    static const std::vector<std::string> names{"lambda", "amplitude", "t_end", "grid_n"};
    return names;
}

inline SweepConfig parse_sweep(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError("", std::string("JSON syntax error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("base") || !j.contains("axes"))
        throw ScenarioError("", "sweep config needs 'base' and 'axes'");
    SweepConfig c;
    c.base = j["base"];
    scenario_from_json(c.base);
    if (!j["axes"].is_array() || j["axes"].empty()) throw ScenarioError("axes", "expected a non-empty array");
    for (const auto& a : j["axes"]) {
        if (!a.is_object() || !a.contains("name") || !a["name"].is_string() || !a.contains("values") ||
            !a["values"].is_array() || a["values"].empty())
            throw ScenarioError("axes", "each axis needs a name and a non-empty values array");
        Axis ax;
        ax.name = a["name"].get<std::string>();
        if (std::find(axis_names().begin(), axis_names().end(), ax.name) == axis_names().end())
            throw ScenarioError("axes", "unknown axis '" + ax.name + "'");
        for (const auto& v : a["values"]) {
            if (!v.is_number()) throw ScenarioError("axes", "axis '" + ax.name + "' has a non-numeric value");
            ax.values.push_back(v.get<double>());
        }
        c.axes.push_back(std::move(ax));
    }
    return c;
}

/// One grid point of the Cartesian product; the first axis varies slowest.
inline std::vector<std::vector<double>> sweep_cells(const std::vector<Axis>& axes) {
    std::vector<std::vector<double>> cells{{}};
    for (const auto& ax : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& c : cells)
            for (double v : ax.values) {
                next.push_back(c);
                next.back().push_back(v);
            }
        cells = std::move(next);
    }
    return cells;
}

inline Scenario cell_scenario(const SweepConfig& c, const std::vector<double>& point) {
    nlohmann::json j = c.base;
    double amplitude = 1.0;
    for (std::size_t i = 0; i < c.axes.size(); ++i) {
        const auto& name = c.axes[i].name;
        if (name == "amplitude")
            amplitude = point[i];
        else if (name == "grid_n")
            j["grid_n"] = static_cast<long long>(std::llround(point[i]));
        else
            j[name] = point[i];
    }
    Scenario s = scenario_from_json(j);
    if (amplitude != 1.0) {
        s.initial = s.initial.scaled(amplitude);
        s.validate();
    }
    return s;
}

inline std::size_t job_limit(std::size_t requested) {
    std::size_t jobs = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MUHS_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) jobs = std::min(jobs, static_cast<std::size_t>(cap));
    }
    return std::max<std::size_t>(1, jobs);
}

inline std::string cell_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cell_%04zu", i);
    return buf;
}

struct CellResult {
    std::string outcome;
    std::optional<double> t_detect;
    std::optional<double> rate_slope;
    std::string error;
    bool reported = false;
};

inline int cmd_sweep(const fs::path& config, const fs::path& out, std::size_t jobs, std::ostream& os, std::ostream& err) {
    SweepConfig c;
    try {
        c = parse_sweep(io::read_file(config));
    } catch (const std::exception& e) {
        err << config.string() << ": " << e.what() << "\n";
        return exit_input_error;
    }
    const auto cells = sweep_cells(c.axes);
    std::vector<CellResult> results(cells.size());
    fs::create_directories(out);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            CellResult& res = results[i];
            const fs::path dir = out / cell_name(i);
            try {
                fs::create_directories(dir);
                Scenario s;
                try {
                    s = cell_scenario(c, cells[i]);
                } catch (const ScenarioError& e) {
                    res.outcome = "INVALID";
                    res.error = e.what();
                    io::write_atomic(dir / "report.json", nlohmann::json{{"outcome", "INVALID"}, {"error", e.what()}}.dump(2) + "\n");
                    res.reported = true;
                    continue;
                }
                io::write_atomic(dir / "scenario.json", to_json(s).dump(2) + "\n");
                const RunSummary sum = execute(s, dir);
                res.outcome = to_string(sum.outcome);
                res.t_detect = sum.t_detect;
                res.rate_slope = sum.rate_slope;
                res.reported = true;
            } catch (const std::exception& e) {
                res.outcome = "FAILED";
                res.error = e.what();
            }
        }
    };
    const std::size_t n_threads = std::min(job_limit(jobs), cells.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string index = "cell";
    for (const auto& ax : c.axes) index += "," + ax.name;
    index += ",outcome,t_detect,rate_slope\n";
    bool all = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& res = results[i];
        index += cell_name(i);
        for (double v : cells[i]) index += "," + io::format_double(v);
        index += "," + res.outcome + "," + (res.t_detect ? io::format_double(*res.t_detect) : "") + "," +
                 (res.rate_slope ? io::format_double(*res.rate_slope) : "") + "\n";
        if (!res.reported) {
            all = false;
            err << cell_name(i) << ": " << res.error << "\n";
        }
    }
    io::write_atomic(out / "index.csv", index);
    os << cells.size() << " cells, " << n_threads << " jobs, index at " << (out / "index.csv").string() << "\n";
    return all ? exit_completed : exit_input_error;
}

// ---------------------------------------------------------------------------

inline constexpr double oracle_tolerance = 1e-6;
inline constexpr double identity_tolerance = 1e-10;

/// Random band-limited field with coefficients uniform in [-1/k, 1/k], k <= kmax.
inline PeriodicField random_field(std::size_t n, int kmax, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ModeList m;
    m.mean = u(rng);
    for (int k = 1; k <= kmax; ++k) m.modes.push_back({k, u(rng) / k, u(rng) / k});
    return sample(m, n);
}

struct OracleSettings {
    std::optional<fs::path> field;
    std::uint64_t seed = 0;
    std::size_t n = 256;
    int kmax = 8;
};

/// Compares the spectral and quadrature inverses of the Helmholtz operator.
inline int cmd_oracle(const OracleSettings& settings, std::ostream& os, std::ostream& err) {
    PeriodicField w = PeriodicField::constant(8, 0.0);
    try {
        w = settings.field ? field_from_csv(io::read_file(*settings.field))
                           : random_field(settings.n, settings.kmax, settings.seed);
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return exit_input_error;
    }
    const double inverse = max_abs_difference(helmholtz_solve_quadrature(w), helmholtz_solve_spectral(w));
    const double dx_inverse = max_abs_difference(dx_Ainv_quadrature(w), dx_Ainv(w));
    const double identity = helmholtz_identity_residual(w);
    const bool pass = inverse <= oracle_tolerance && dx_inverse <= oracle_tolerance && identity <= identity_tolerance;
    const nlohmann::json j{{"n", w.size()},
                           {"inverse_max_diff", inverse},
                           {"dx_inverse_max_diff", dx_inverse},
                           {"identity_residual", identity},
                           {"pass", pass}};
    os << j.dump(2) << "\n";
    return pass ? exit_completed : exit_oracle_mismatch;
}

}  // namespace muhs::cli

#endif  // MUHS_CLI_HPP
