#ifndef MUHS_ANALYSIS_HPP
#define MUHS_ANALYSIS_HPP

// Closed-form certificates on initial data and posterior checks on runs:
// blow-up thresholds with explicit time bounds, sign-based global existence,
// the pointwise slope equation, and the blow-up rate fit.

#include "muhs/dynamics.hpp"
#include "muhs/field.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace muhs {

inline constexpr double sign_tolerance = 1e-10;
inline constexpr double oddness_tolerance = 1e-10;
inline constexpr double degenerate_mu1 = 1e-12;
/// Sample means below this fraction of max|u0| are rounding noise and read as zero.
inline constexpr double mean_roundoff = 64 * std::numeric_limits<double>::epsilon();

struct BlowupCriterion {
    double lhs = 0.0;
    double threshold = 0.0;
    bool fires = false;
    std::optional<double> t_bound;
};

struct OddCriterion : BlowupCriterion {
    bool is_odd = false;
};

struct SignCertificate {
    double y0_min = 0.0;
    double y0_max = 0.0;
    bool sign_definite = false;
};

struct ThirdDerivativeCertificate {
    double norm_d3 = 0.0;
    double bound = 0.0;
    bool certifies = false;
};

struct CertificateReport {
    double mu0 = 0.0;
    double mu1 = 0.0;
    double K_cubic = 0.0;  ///< 6|mu0| mu1^2 (|mu0| + (sqrt 3/6) mu1)
    double K_slope = 0.0;  ///< 2|mu0| (|mu0| + (sqrt 3/6) mu1)
    BlowupCriterion cubic;                        ///< int u0_x^3 below the cubic threshold
    BlowupCriterion min_slope;                    ///< inf u0' below -lambda - sqrt(lambda^2 + 2 K_slope)
    OddCriterion odd_origin;                      ///< odd data with u0'(0) < -2 lambda
    SignCertificate momentum_sign;                ///< y0 = mu0 - u0_xx keeps one sign
    ThirdDerivativeCertificate third_derivative;  ///< ||u0_xxx|| <= 2 sqrt 3 |mu0|

    bool predicts_breaking() const { return cubic.fires || min_slope.fires || odd_origin.fires; }
    bool predicts_global() const { return momentum_sign.sign_definite || third_derivative.certifies; }

    /// Smallest breaking-time bound among the criteria that fire.
    std::optional<double> tightest_bound() const {
        std::optional<double> best;
        for (const auto* c : {&cubic, &min_slope, static_cast<const BlowupCriterion*>(&odd_origin)})
            if (c->fires && c->t_bound && (!best || *c->t_bound < *best)) best = c->t_bound;
        return best;
    }
};

/// Threshold -lambda - sqrt(lambda^2 + 2K) of the slope criterion.
inline double slope_threshold(double lambda, double K) { return -lambda - std::sqrt(lambda * lambda + 2.0 * K); }

inline bool is_odd(const PeriodicField& u) {
    const std::size_t n = u.size();
    double worst = std::abs(u[0]);
    for (std::size_t j = 1; j < n; ++j) worst = std::max(worst, std::abs(u[j] + u[n - j]));
    return worst <= oddness_tolerance;
}

inline std::optional<double> finite_positive(double t) {
    if (std::isfinite(t) && t > 0.0) return t;
    return std::nullopt;
}

inline CertificateReport certify(const PeriodicField& u0, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    const Spectrum s = u0.spectrum();
    CertificateReport r;
    r.mu0 = mean(u0);
    if (std::abs(r.mu0) <= mean_roundoff * max_abs(u0)) r.mu0 = 0.0;
    r.mu1 = std::sqrt(h1_seminorm_sq(s));
    const double a0 = std::abs(r.mu0), mu1 = r.mu1;
    const double linf = a0 + std::sqrt(3.0) / 6.0 * mu1;
    r.K_cubic = 6.0 * a0 * mu1 * mu1 * linf;
    r.K_slope = 2.0 * a0 * linf;

    const Spectrum ux_h = derivative(s, 1);
    const PeriodicField ux_fine = refine(ux_h, extremum_refinement);

    // int u0_x^3 on the refined grid, exact for data inside the lower third of the band.
    {
        double cube = 0.0;
        for (double v : ux_fine.samples()) cube += v * v * v;
        cube /= static_cast<double>(ux_fine.size());
        const double root = std::sqrt(9.0 * lambda * lambda * mu1 * mu1 + 2.0 * r.K_cubic);
        const double A = 3.0 * lambda * mu1 * mu1, B = mu1 * root;
        r.cubic.lhs = cube;
        r.cubic.threshold = -A - B;
        r.cubic.fires = mu1 >= degenerate_mu1 && cube < r.cubic.threshold;
        if (r.cubic.fires) r.cubic.t_bound = finite_positive(mu1 / root * std::log((cube + A - B) / (cube + A + B)));
    }
    {
        const double m0 = min_of(ux_fine).value;
        const double root = std::sqrt(lambda * lambda + 2.0 * r.K_slope);
        r.min_slope.lhs = m0;
        r.min_slope.threshold = slope_threshold(lambda, r.K_slope);
        r.min_slope.fires = m0 < r.min_slope.threshold;
        if (r.min_slope.fires) r.min_slope.t_bound = finite_positive(std::log((m0 + lambda - root) / (m0 + lambda + root)) / root);
    }
    {
        const double h0 = PeriodicField::from_spectrum(ux_h)[0];
        r.odd_origin.is_odd = is_odd(u0);
        r.odd_origin.lhs = h0;
        r.odd_origin.threshold = -2.0 * lambda;
        r.odd_origin.fires = r.odd_origin.is_odd && h0 < -2.0 * lambda;
        if (r.odd_origin.fires) r.odd_origin.t_bound = finite_positive(std::log(h0 / (h0 + 2.0 * lambda)) / lambda);
    }
    {
        // y0 = mu0 - u0_xx
        Spectrum y = derivative(s, 2);
        y *= -1.0;
        y[0] = r.mu0;
        const PeriodicField y_fine = refine(y, extremum_refinement);
        r.momentum_sign.y0_min = min_of(y_fine).value;
        r.momentum_sign.y0_max = max_of(y_fine).value;
        r.momentum_sign.sign_definite = r.momentum_sign.y0_min >= -sign_tolerance || r.momentum_sign.y0_max <= sign_tolerance;
    }
    r.third_derivative.norm_d3 = std::sqrt(derivative_norm_sq(s, 3));
    r.third_derivative.bound = 2.0 * std::sqrt(3.0) * a0;
    r.third_derivative.certifies = r.third_derivative.norm_d3 <= r.third_derivative.bound;
    return r;
}

inline nlohmann::json to_json(const BlowupCriterion& c) {
    nlohmann::json j{{"lhs", c.lhs}, {"threshold", c.threshold}, {"fires", c.fires}};
    j["t_bound"] = c.t_bound ? nlohmann::json(*c.t_bound) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const CertificateReport& r) {
    nlohmann::json odd_origin = to_json(static_cast<const BlowupCriterion&>(r.odd_origin));
    odd_origin["is_odd"] = r.odd_origin.is_odd;
    return {{"mu0", r.mu0},
            {"mu1", r.mu1},
            {"K41", r.K_cubic},
            {"K42", r.K_slope},
            {"thm41", to_json(r.cubic)},
            {"thm42", to_json(r.min_slope)},
            {"thm43", odd_origin},
            {"thm51",
             {{"y0_min", r.momentum_sign.y0_min},
              {"y0_max", r.momentum_sign.y0_max},
              {"sign_definite", r.momentum_sign.sign_definite}}},
            {"cor51",
             {{"norm_d3", r.third_derivative.norm_d3},
              {"bound", r.third_derivative.bound},
              {"certifies", r.third_derivative.certifies}}}};
}

// ---------------------------------------------------------------------------

/// max-norm of u_tx - [-u_x^2/2 - u u_xx + 2 mu0 e^{-lt} u - l u_x
///                      - 2 mu0^2 e^{-2lt} - mu1^2 e^{-2lt} / 2],
/// with u_tx taken as the x-derivative of the evolution right-hand side.
inline double slope_equation_residual(const PeriodicField& u, double t, double mu0, double mu1, double lambda) {
    const PeriodicField utx = derivative(rhs(u, t, mu0, lambda), 1);
    const Spectrum s = u.spectrum();
    const PeriodicField ux = PeriodicField::from_spectrum(derivative(s, 1));
    const PeriodicField uxx = PeriodicField::from_spectrum(derivative(s, 2));
    const double e1 = std::exp(-lambda * t), e2 = std::exp(-2.0 * lambda * t);
    const double constant = -2.0 * mu0 * mu0 * e2 - 0.5 * mu1 * mu1 * e2;
    double r = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double closed = -0.5 * ux[j] * ux[j] - u[j] * uxx[j] + 2.0 * mu0 * e1 * u[j] - lambda * ux[j] + constant;
        r = std::max(r, std::abs(utx[j] - closed));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Blow-up rate

/// Not enough records in the asymptotic regime to fit a rate.
class InsufficientSamples : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RateFit {
    double slope = 0.0;            ///< mean of (T - t)(m + lambda) over the window
    double slope_unshifted = 0.0;  ///< mean of (T - t) m
    double t_blowup = 0.0;         ///< fitted T
    double t_a = 0.0, t_b = 0.0;
    std::size_t n_points = 0;
};

struct BlowupReport {
    double t_detect = 0.0;
    double m_last = 0.0;
    double t_estimate = 0.0;  ///< t_detect + 2 / |m_last|
    RateFit rate_fit;
    std::optional<double> bound_used;
    bool respects_bound = true;
    bool rate_in_band = false;  ///< |slope + 2| <= rate_band
};

struct RateFitOptions {
    std::size_t min_points = 10;
    std::size_t max_points = 200;
    double band = 0.2;
    /// Records whose spectral tail exceeds this are treated as under-resolved.
    double max_tail = 1e-8;
};

inline double asymptotic_slope_threshold(double lambda) { return -10.0 * (lambda + 1.0); }

/// Fits 1/(m + lambda) = -(T - t)/2 by least squares on resolved records with
/// m <= -10 (lambda + 1) before detection, then reports the mean of
/// (T - t)(m + lambda), whose limit at breaking is -2.
inline BlowupReport fit_blowup_rate(const std::vector<DiagnosticsRecord>& records, double t_detect, double m_last,
                                    double lambda, std::optional<double> bound = std::nullopt,
                                    const RateFitOptions& opt = {}) {
    // Records after the deepest slope are past the resolution limit.
    std::size_t end = 0, deepest = 0;
    while (end < records.size() && records[end].t < t_detect) ++end;
    for (std::size_t i = 0; i < end; ++i)
        if (records[i].min_ux < records[deepest].min_ux) deepest = i;
    end = std::min(end, deepest + 1);

    const double cut = asymptotic_slope_threshold(lambda);
    std::vector<const DiagnosticsRecord*> window;
    for (std::size_t i = 0; i < end; ++i)
        if (records[i].min_ux <= cut && records[i].tail_frac <= opt.max_tail) window.push_back(&records[i]);
    if (window.size() > opt.max_points) window.erase(window.begin(), window.end() - static_cast<long>(opt.max_points));
    if (window.size() < opt.min_points)
        throw InsufficientSamples("rate fit needs " + std::to_string(opt.min_points) + " resolved records with min u_x <= " +
                                  std::to_string(cut) + ", found " + std::to_string(window.size()));

    // y = alpha + beta t with y = 1/(m + lambda)
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (const auto* r : window) {
        const double y = 1.0 / (r->min_ux + lambda);
        st += r->t;
        sy += y;
        stt += r->t * r->t;
        sty += r->t * y;
    }
    const double n = static_cast<double>(window.size());
    const double tbar = st / n, ybar = sy / n;
    const double beta = (sty - n * tbar * ybar) / (stt - n * tbar * tbar);
    const double alpha = ybar - beta * tbar;

    BlowupReport rep;
    rep.t_detect = t_detect;
    rep.m_last = m_last;
    rep.t_estimate = t_detect + 2.0 / std::abs(m_last);
    RateFit& f = rep.rate_fit;
    f.t_blowup = -alpha / beta;
    f.t_a = window.front()->t;
    f.t_b = window.back()->t;
    f.n_points = window.size();
    for (const auto* r : window) {
        f.slope += (f.t_blowup - r->t) * (r->min_ux + lambda);
        f.slope_unshifted += (f.t_blowup - r->t) * r->min_ux;
    }
    f.slope /= n;
    f.slope_unshifted /= n;
    rep.bound_used = bound;
    rep.respects_bound = !bound || f.t_blowup <= *bound;
    rep.rate_in_band = std::abs(f.slope + 2.0) <= opt.band;
    return rep;
}

inline nlohmann::json to_json(const BlowupReport& b) {
    const auto& f = b.rate_fit;
    return {{"t_detect", b.t_detect},
            {"m_last", b.m_last},
            {"t_estimate", b.t_estimate},
            {"rate_fit",
             {{"slope", f.slope},
              {"slope_unshifted", f.slope_unshifted},
              {"t_blowup", f.t_blowup},
              {"window", {f.t_a, f.t_b}},
              {"n_points", f.n_points}}},
            {"bound_used", b.bound_used ? nlohmann::json(*b.bound_used) : nlohmann::json(nullptr)},
            {"respects_bound", b.respects_bound},
            {"rate_in_band", b.rate_in_band}};
}

}  // namespace muhs

#endif  // MUHS_ANALYSIS_HPP
