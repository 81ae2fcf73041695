#ifndef MUHS_DYNAMICS_HPP
#define MUHS_DYNAMICS_HPP

// Time evolution of the weakly dissipative muHS equation in nonlocal form
//
//   u_t + u u_x = -d/dx A^{-1}(2 mu0 e^{-lambda t} u + u_x^2 / 2) - lambda u,
//
// by Fourier collocation (2/3-rule dealiasing) and classical RK4.

#include "muhs/field.hpp"
#include "muhs/field_io.hpp"
#include "muhs/io.hpp"
#include "muhs/muops.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace muhs {

/// Scenario validation failure; `field()` names the offending key.
class ScenarioError : public std::invalid_argument {
public:
    ScenarioError(std::string field, const std::string& what)
        : std::invalid_argument(field.empty() ? what : "field '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct Scenario {
    double lambda = 0.0;
    ModeList initial;
    std::size_t grid_n = 256;
    double t_end = 0.0;
    double dt_init = 1e-3;
    double dt_min = 1e-10;
    double safety = 0.5;
    double m_stop = -1e4;     ///< breaking when min u_x falls to this slope
    double tail_stop = 1e-4;  ///< spectral tail energy fraction that ends the run
    std::size_t output_stride = 1;

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ScenarioError("lambda", "must be a finite number > 0");
        if (grid_n < 32 || !is_power_of_two(grid_n)) throw ScenarioError("grid_n", "must be a power of two >= 32");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ScenarioError("t_end", "must be a finite number >= 0");
        if (!(dt_init > 0.0)) throw ScenarioError("dt_init", "must be > 0");
        if (!(dt_min > 0.0)) throw ScenarioError("dt_min", "must be > 0");
        if (!(dt_min < dt_init)) throw ScenarioError("dt_min", "must be smaller than dt_init");
        if (!(safety > 0.0 && safety <= 1.0)) throw ScenarioError("safety", "must lie in (0, 1]");
        if (!(m_stop <= -10.0)) throw ScenarioError("m_stop", "must be <= -10");
        if (!(tail_stop > 0.0 && tail_stop < 1.0)) throw ScenarioError("tail_stop", "must lie in (0, 1)");
        if (output_stride < 1) throw ScenarioError("output_stride", "must be >= 1");
        for (const auto& m : initial.modes)
            if (static_cast<std::size_t>(m.k) > dealias_cutoff(grid_n))
                throw ScenarioError("initial", "mode k=" + std::to_string(m.k) + " exceeds the dealiased band of grid_n");
    }
};

inline nlohmann::json to_json(const Scenario& s) {
    return {{"lambda", s.lambda},   {"initial", to_json(s.initial)}, {"grid_n", s.grid_n},
            {"t_end", s.t_end},     {"dt_init", s.dt_init},          {"dt_min", s.dt_min},
            {"safety", s.safety},   {"m_stop", s.m_stop},            {"tail_stop", s.tail_stop},
            {"output_stride", s.output_stride}};
}

/// Builds and validates a scenario from JSON. Optional keys take the defaults
/// above; unknown keys are rejected.
inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ScenarioError("", "scenario must be a JSON object");
    static const char* known[] = {"lambda", "initial", "grid_n", "t_end", "dt_init", "dt_min",
                                  "safety", "m_stop", "tail_stop", "output_stride"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ScenarioError(key, "unknown field");
    }
    auto number = [&](const char* key, std::optional<double> fallback) -> double {
        if (!j.contains(key)) {
            if (!fallback) throw ScenarioError(key, "required field missing");
            return *fallback;
        }
        if (!j[key].is_number()) throw ScenarioError(key, "expected a number");
        return j[key].get<double>();
    };
    auto count = [&](const char* key, std::size_t fallback) -> std::size_t {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number_integer() || j[key].get<long long>() < 0)
            throw ScenarioError(key, "expected a non-negative integer");
        return j[key].get<std::size_t>();
    };

    Scenario d;
    Scenario s;
    s.lambda = number("lambda", std::nullopt);
    if (!j.contains("initial")) throw ScenarioError("initial", "required field missing");
    try {
        s.initial = modes_from_json(j["initial"], "initial");
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("initial", e.what());
    }
    s.grid_n = count("grid_n", d.grid_n);
    s.t_end = number("t_end", std::nullopt);
    s.dt_init = number("dt_init", d.dt_init);
    s.dt_min = number("dt_min", d.dt_min);
    s.safety = number("safety", d.safety);
    s.m_stop = number("m_stop", d.m_stop);
    s.tail_stop = number("tail_stop", d.tail_stop);
    s.output_stride = count("output_stride", d.output_stride);
    s.validate();
    return s;
}

/// Parses scenario text; syntax errors report line and column.
inline Scenario parse_scenario(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ScenarioError("", "JSON syntax error at line " + std::to_string(line) + ", column " +
                                    std::to_string(col) + ": " + e.what());
    }
    return scenario_from_json(j);
}

// ---------------------------------------------------------------------------

struct SimulationState {
    double t = 0.0;
    PeriodicField u;
    double mu0 = 0.0;  ///< mean of the initial data
    double mu1 = 0.0;  ///< (int u0_x^2)^{1/2}

    /// Initial state: the sampled modes, restricted to the dealiased band.
    static SimulationState initial(const Scenario& s) {
        PeriodicField u0 = dealias(sample(s.initial, s.grid_n));
        const double mu0 = mean(u0);
        const double mu1 = std::sqrt(h1_seminorm_sq(u0));
        return {0.0, std::move(u0), mu0, mu1};
    }
};

struct DiagnosticsRecord {
    double t = 0.0;
    double mu = 0.0;
    double mu_residual = 0.0;  ///< mu - mu0 e^{-lambda t}
    double h1_sq = 0.0;
    double h1_residual = 0.0;  ///< h1_sq - mu1^2 e^{-2 lambda t}
    double min_ux = 0.0;
    double argmin_x = 0.0;
    double max_abs_u = 0.0;
    double linf_bound_margin = 0.0;  ///< |mu0| + (sqrt 3 / 6) mu1 - max|u|
    double tail_frac = 0.0;
    double dt = 0.0;
};

inline DiagnosticsRecord diagnose(const SimulationState& s, double lambda, double dt) {
    const Spectrum uh = s.u.spectrum();
    DiagnosticsRecord r;
    r.t = s.t;
    r.mu = mean(s.u);
    r.mu_residual = r.mu - s.mu0 * std::exp(-lambda * s.t);
    r.h1_sq = h1_seminorm_sq(uh);
    r.h1_residual = r.h1_sq - s.mu1 * s.mu1 * std::exp(-2.0 * lambda * s.t);
    const Extremum m = interpolant_min(derivative(uh, 1));
    r.min_ux = m.value;
    r.argmin_x = m.x;
    r.max_abs_u = refined_max_abs(uh);
    r.linf_bound_margin = std::abs(s.mu0) + std::sqrt(3.0) / 6.0 * s.mu1 - r.max_abs_u;
    r.tail_frac = tail_fraction(uh);
    r.dt = dt;
    return r;
}

inline const std::vector<std::string>& diagnostics_header() {
    static const std::vector<std::string> h{"t",      "mu",       "mu_residual", "h1_sq",     "h1_residual",
                                            "min_ux", "argmin_x", "max_abs_u",   "tail_frac", "dt"};
    return h;
}

inline std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records) {
    std::string out;
    for (std::size_t i = 0; i < diagnostics_header().size(); ++i) {
        if (i) out += ',';
        out += diagnostics_header()[i];
    }
    out += '\n';
    for (const auto& r : records) {
        const double v[] = {r.t,      r.mu,       r.mu_residual, r.h1_sq,     r.h1_residual,
                            r.min_ux, r.argmin_x, r.max_abs_u,   r.tail_frac, r.dt};
        for (std::size_t i = 0; i < std::size(v); ++i) {
            if (i) out += ',';
            out += io::format_double(v[i]);
        }
        out += '\n';
    }
    return out;
}

/// Reads records back from diagnostics CSV. linf_bound_margin is not stored
/// in the file and is left at zero.
inline std::vector<DiagnosticsRecord> diagnostics_from_csv(std::string_view text) {
    std::vector<DiagnosticsRecord> out;
    for (const auto& row : io::read_numeric_csv(text, diagnostics_header())) {
        DiagnosticsRecord r;
        r.t = row[0];
        r.mu = row[1];
        r.mu_residual = row[2];
        r.h1_sq = row[3];
        r.h1_residual = row[4];
        r.min_ux = row[5];
        r.argmin_x = row[6];
        r.max_abs_u = row[7];
        r.tail_frac = row[8];
        r.dt = row[9];
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Right-hand side

/// Spectral right-hand side for a dealiased state.
inline Spectrum rhs(const Spectrum& uh, double t, double mu0, double lambda) {
    const std::size_t n = uh.n();
    const PeriodicField u = PeriodicField::from_spectrum(uh);
    const PeriodicField ux = PeriodicField::from_spectrum(derivative(uh, 1));
    std::vector<double> advect(n), energy(n);
    for (std::size_t j = 0; j < n; ++j) {
        advect[j] = u[j] * ux[j];
        energy[j] = 0.5 * ux[j] * ux[j];
    }
    const Spectrum ph = dealias(Spectrum(n, fft::forward(advect)));
    Spectrum fh = dealias(Spectrum(n, fft::forward(energy)));
    fh += (2.0 * mu0 * std::exp(-lambda * t)) * uh;
    Spectrum out = dx_Ainv(std::move(fh));
    out += ph;
    out *= -1.0;
    out -= lambda * uh;
    return dealias(std::move(out));
}

/// -u u_x - d/dx A^{-1}(2 mu0 e^{-lambda t} u + u_x^2/2) - lambda u, with the
/// input projected onto the dealiased band.
inline PeriodicField rhs(const PeriodicField& u, double t, double mu0, double lambda) {
    return PeriodicField::from_spectrum(rhs(dealias(u.spectrum()), t, mu0, lambda));
}

/// One classical RK4 step on the dealiased semi-discrete system.
/// Throws NonFiniteField when the update overflows.
inline SimulationState step(const SimulationState& state, double dt, const Scenario& scenario) {
    if (!(dt > 0.0)) throw std::invalid_argument("step size must be positive");
    const double lambda = scenario.lambda, mu0 = state.mu0, t = state.t;
    const Spectrum u0 = dealias(state.u.spectrum());
    const Spectrum k1 = rhs(u0, t, mu0, lambda);
    const Spectrum k2 = rhs(u0 + (0.5 * dt) * k1, t + 0.5 * dt, mu0, lambda);
    const Spectrum k3 = rhs(u0 + (0.5 * dt) * k2, t + 0.5 * dt, mu0, lambda);
    const Spectrum k4 = rhs(u0 + dt * k3, t + dt, mu0, lambda);
    Spectrum next = u0;
    next += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return {t + dt, PeriodicField::from_spectrum(dealias(std::move(next))), state.mu0, state.mu1};
}

// ---------------------------------------------------------------------------
// Driver

enum class Outcome { completed, breaking_detected, resolution_exhausted };

enum class StopReason {
    reached_t_end,
    slope_threshold,    ///< min u_x <= m_stop
    dt_collapse,        ///< step size fell below dt_min
    tail_with_collapse, ///< spectral tail exceeded tail_stop with the slope trapped
    slope_rebound,      ///< trapped slope rose again: the grid lost the singularity
    tail_only,          ///< spectral tail exceeded tail_stop without slope collapse
};

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::completed: return "COMPLETED";
        case Outcome::breaking_detected: return "BREAKING_DETECTED";
        case Outcome::resolution_exhausted: return "RESOLUTION_EXHAUSTED";
    }
    return "?";
}

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::reached_t_end: return "reached_t_end";
        case StopReason::slope_threshold: return "slope_threshold";
        case StopReason::dt_collapse: return "dt_collapse";
        case StopReason::tail_with_collapse: return "tail_with_slope_collapse";
        case StopReason::slope_rebound: return "slope_rebound";
        case StopReason::tail_only: return "tail_only";
    }
    return "?";
}

/// Stored field and its time derivative, for time-continuous resampling.
struct Snapshot {
    double t;
    Spectrum u;
    Spectrum ut;
};

struct RunOptions {
    /// Store a snapshot every this many accepted steps (0 = none).
    std::size_t snapshot_stride = 0;
};

struct RunResult {
    std::vector<DiagnosticsRecord> records;
    Outcome outcome = Outcome::completed;
    StopReason reason = StopReason::reached_t_end;
    SimulationState state_final;
    std::vector<Snapshot> snapshots;
    std::size_t accepted_steps = 0;
    double lambda = 0.0;
};

/// Slope below which m(t) = min u_x is trapped: with
///   K = 2|mu0|(|mu0| + (sqrt 3/6) mu1) + 2 mu0^2 + mu1^2 / 2
/// the slope equation gives m' <= -(m + lambda)^2 / 2 + K + lambda^2 / 2, so
/// once m + lambda < -sqrt(2K + lambda^2) the exact m decreases strictly and
/// the solution breaks.
inline double trapping_slope(double mu0, double mu1, double lambda) {
    const double a0 = std::abs(mu0);
    const double K = 2.0 * a0 * (a0 + std::sqrt(3.0) / 6.0 * mu1) + 2.0 * mu0 * mu0 + 0.5 * mu1 * mu1;
    return -lambda - std::sqrt(2.0 * K + lambda * lambda);
}

/// Relative rise of min u_x above its running minimum that counts as a rebound.
inline constexpr double rebound_tolerance = 1e-3;

/// Step size heuristic: min(dt_init, safety / (max|u| N), safety / |min u_x|).
inline double adaptive_dt(const Scenario& s, const DiagnosticsRecord& d) {
    double dt = s.dt_init;
    const double n = static_cast<double>(s.grid_n);
    if (d.max_abs_u > 0.0) dt = std::min(dt, s.safety / (d.max_abs_u * n));
    if (d.min_ux < 0.0) dt = std::min(dt, s.safety / std::abs(d.min_ux));
    return dt;
}

inline RunResult run(const Scenario& scenario, const RunOptions& options = {}) {
    scenario.validate();
    const double lambda = scenario.lambda;
    RunResult result{{}, Outcome::completed, StopReason::reached_t_end, SimulationState::initial(scenario), {}, 0, lambda};
    SimulationState& state = result.state_final;

    auto snapshot = [&] {
        const Spectrum uh = state.u.spectrum();
        result.snapshots.push_back({state.t, uh, rhs(uh, state.t, state.mu0, lambda)});
    };

    DiagnosticsRecord current = diagnose(state, lambda, 0.0);
    const double trap = trapping_slope(state.mu0, state.mu1, lambda);
    double deepest = current.min_ux;
    result.records.push_back(current);
    if (options.snapshot_stride) snapshot();
    bool recorded = true, snapped = true;

    auto stop = [&](Outcome o, StopReason r) {
        result.outcome = o;
        result.reason = r;
    };

    while (state.t < scenario.t_end) {
        double dt_step = adaptive_dt(scenario, current);
        if (dt_step < scenario.dt_min) {
            stop(Outcome::breaking_detected, StopReason::dt_collapse);
            break;
        }
        std::optional<SimulationState> next;
        double dt = dt_step;
        bool clipped = false;
        while (!next) {
            clipped = dt_step >= scenario.t_end - state.t;
            dt = clipped ? scenario.t_end - state.t : dt_step;
            try {
                next = step(state, dt, scenario);
            } catch (const NonFiniteField&) {
                dt_step *= 0.5;
                if (dt_step < scenario.dt_min) break;
            }
        }
        if (!next) {
            stop(Outcome::breaking_detected, StopReason::dt_collapse);
            break;
        }
        state = std::move(*next);
        if (clipped) state.t = scenario.t_end;
        ++result.accepted_steps;

        current = diagnose(state, lambda, dt);
        recorded = result.accepted_steps % scenario.output_stride == 0;
        if (recorded) result.records.push_back(current);
        snapped = options.snapshot_stride && result.accepted_steps % options.snapshot_stride == 0;
        if (snapped) snapshot();

        if (current.min_ux <= scenario.m_stop) {
            stop(Outcome::breaking_detected, StopReason::slope_threshold);
            break;
        }
        const bool collapsed = deepest < trap;
        if (collapsed && current.min_ux > deepest + rebound_tolerance * std::abs(deepest)) {
            stop(Outcome::breaking_detected, StopReason::slope_rebound);
            break;
        }
        deepest = std::min(deepest, current.min_ux);
        if (current.tail_frac > scenario.tail_stop) {
            if (deepest < trap)
                stop(Outcome::breaking_detected, StopReason::tail_with_collapse);
            else
                stop(Outcome::resolution_exhausted, StopReason::tail_only);
            break;
        }
    }
    if (!recorded) result.records.push_back(current);
    if (options.snapshot_stride && !snapped) snapshot();
    return result;
}

}  // namespace muhs

#endif  // MUHS_DYNAMICS_HPP
