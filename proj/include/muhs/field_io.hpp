#ifndef MUHS_FIELD_IO_HPP
#define MUHS_FIELD_IO_HPP

#include "muhs/field.hpp"
#include "muhs/io.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace muhs {

/// One real Fourier mode: cos_coef cos(2 pi k x) + sin_coef sin(2 pi k x).
struct Mode {
    int k = 1;
    double cos_coef = 0.0;
    double sin_coef = 0.0;
};

/// mean + sum of modes; the JSON form {mean, modes:[{k, cos, sin}]}.
struct ModeList {
    double mean = 0.0;
    std::vector<Mode> modes;

    double operator()(double x) const {
        double v = mean;
        for (const auto& m : modes) {
            const double a = two_pi * m.k * x;
            v += m.cos_coef * std::cos(a) + m.sin_coef * std::sin(a);
        }
        return v;
    }

    int max_wavenumber() const {
        int k = 0;
        for (const auto& m : modes) k = std::max(k, m.k);
        return k;
    }

    /// Scales every oscillatory mode, leaving the mean unchanged.
    ModeList scaled(double amplitude) const {
        ModeList out = *this;
        for (auto& m : out.modes) {
            m.cos_coef *= amplitude;
            m.sin_coef *= amplitude;
        }
        return out;
    }
};

/// Samples the mode list on an N-point grid. Modes must satisfy k < N/2.
inline PeriodicField sample(const ModeList& modes, std::size_t n) {
    require_grid_size(n);
    for (const auto& m : modes.modes)
        if (m.k < 1 || static_cast<std::size_t>(m.k) >= n / 2)
            throw std::invalid_argument("mode k=" + std::to_string(m.k) + " outside 1..N/2-1 for N=" +
                                        std::to_string(n));
    return PeriodicField::sample(n, modes);
}

/// Mode list of a field; modes with both coefficients below `drop_below` are omitted.
/// The Nyquist mode is reported as a cosine at k = N/2.
inline ModeList to_modes(const PeriodicField& f, double drop_below = 0.0) {
    const Spectrum s = f.spectrum();
    ModeList out;
    out.mean = s[0].real();
    for (std::size_t k = 1; k <= s.nyquist(); ++k) {
        Mode m{static_cast<int>(k), 2.0 * s[k].real(), -2.0 * s[k].imag()};
        if (k == s.nyquist()) m = {static_cast<int>(k), s[k].real(), 0.0};
        if (std::abs(m.cos_coef) > drop_below || std::abs(m.sin_coef) > drop_below) out.modes.push_back(m);
    }
    return out;
}

inline nlohmann::json to_json(const ModeList& m) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& mode : m.modes) modes.push_back({{"k", mode.k}, {"cos", mode.cos_coef}, {"sin", mode.sin_coef}});
    return {{"mean", m.mean}, {"modes", modes}};
}

/// Parses a mode list; error messages carry the offending JSON path.
inline ModeList modes_from_json(const nlohmann::json& j, const std::string& where = "initial") {
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object {mean, modes}");
    ModeList out;
    if (j.contains("mean")) {
        if (!j["mean"].is_number()) throw std::invalid_argument(where + ".mean: expected a number");
        out.mean = j["mean"].get<double>();
    }
    if (j.contains("modes")) {
        const auto& arr = j["modes"];
        if (!arr.is_array()) throw std::invalid_argument(where + ".modes: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& e = arr[i];
            const std::string at = where + ".modes[" + std::to_string(i) + "]";
            if (!e.is_object() || !e.contains("k") || !e["k"].is_number_integer())
                throw std::invalid_argument(at + ".k: expected an integer wavenumber");
            Mode m;
            m.k = e["k"].get<int>();
            if (m.k < 1) throw std::invalid_argument(at + ".k: wavenumber must be >= 1");
            for (const char* key : {"cos", "sin"}) {
                if (!e.contains(key)) continue;
                if (!e[key].is_number()) throw std::invalid_argument(at + "." + key + ": expected a number");
            }
            m.cos_coef = e.value("cos", 0.0);
            m.sin_coef = e.value("sin", 0.0);
            if (!std::isfinite(m.cos_coef) || !std::isfinite(m.sin_coef))
                throw std::invalid_argument(at + ": coefficients must be finite");
            out.modes.push_back(m);
        }
    }
    if (!std::isfinite(out.mean)) throw std::invalid_argument(where + ".mean: must be finite");
    return out;
}

inline std::string to_csv(const PeriodicField& f) {
    std::string out = "x,value\n";
    for (std::size_t j = 0; j < f.size(); ++j) {
        out += io::format_double(f.x(j));
        out += ',';
        out += io::format_double(f[j]);
        out += '\n';
    }
    return out;
}

inline PeriodicField field_from_csv(std::string_view text) {
    const auto rows = io::read_numeric_csv(text, {"x", "value"});
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r[1]);
    return PeriodicField(std::move(v));
}

}  // namespace muhs

#endif  // MUHS_FIELD_IO_HPP
