#ifndef MUHS_FIELD_HPP
#define MUHS_FIELD_HPP

#include "muhs/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace muhs {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Thrown when a field would contain NaN or infinite samples.
class NonFiniteField : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void require_grid_size(std::size_t n) {
    if (n < 8 || !is_power_of_two(n))
        throw std::invalid_argument("grid size must be a power of two >= 8, got " +
                                    std::to_string(n));
}

/// Fourier coefficients of a real field on the unit circle,
/// w(x) = sum_k c_k exp(2 pi i k x), k = -N/2..N/2-1.
///
/// Only k = 0..N/2 are stored; negative modes follow from Hermitian symmetry.
/// The stored entry N/2 is the (real) Nyquist coefficient c_{-N/2}.
class Spectrum {
public:
    Spectrum(std::size_t n, std::vector<cplx> half) : n_(n), half_(std::move(half)) {
        require_grid_size(n_);
        if (half_.size() != n_ / 2 + 1)
            throw std::invalid_argument("half spectrum must hold N/2+1 coefficients");
        half_.front().imag(0.0);
        half_.back().imag(0.0);
    }
    static Spectrum zero(std::size_t n) { return Spectrum(n, std::vector<cplx>(n / 2 + 1)); }

    std::size_t n() const { return n_; }
    std::size_t nyquist() const { return n_ / 2; }

    std::span<const cplx> half() const { return half_; }
    std::span<cplx> half() { return half_; }
    cplx operator[](std::size_t k) const { return half_[k]; }
    cplx& operator[](std::size_t k) { return half_[k]; }

    /// Coefficient for any k in [-N/2, N/2-1].
    cplx coefficient(long k) const {
        const long h = static_cast<long>(n_ / 2);
        if (k < -h || k >= h) throw std::out_of_range("wavenumber outside [-N/2, N/2-1]");
        if (k >= 0) return half_[static_cast<std::size_t>(k)];
        return std::conj(half_[static_cast<std::size_t>(-k)]);
    }

    Spectrum& operator+=(const Spectrum& o) {
        check_same(o);
        for (std::size_t k = 0; k < half_.size(); ++k) half_[k] += o.half_[k];
        return *this;
    }
    Spectrum& operator-=(const Spectrum& o) {
        check_same(o);
        for (std::size_t k = 0; k < half_.size(); ++k) half_[k] -= o.half_[k];
        return *this;
    }
    Spectrum& operator*=(double a) {
        for (auto& c : half_) c *= a;
        return *this;
    }
    friend Spectrum operator+(Spectrum a, const Spectrum& b) { return a += b; }
    friend Spectrum operator-(Spectrum a, const Spectrum& b) { return a -= b; }
    friend Spectrum operator*(double a, Spectrum s) { return s *= a; }

private:
    void check_same(const Spectrum& o) const {
        if (o.n_ != n_) throw std::invalid_argument("spectrum size mismatch");
    }

    std::size_t n_;
    std::vector<cplx> half_;
};

/// Real samples w(x_j) at x_j = j/N on the unit circle.
class PeriodicField {
public:
    explicit PeriodicField(std::vector<double> samples) : samples_(std::move(samples)) {
        require_grid_size(samples_.size());
        for (double v : samples_)
            if (!std::isfinite(v)) throw NonFiniteField("field contains non-finite samples");
    }

    static PeriodicField constant(std::size_t n, double c) {
        return PeriodicField(std::vector<double>(n, c));
    }

    template <class F>
    static PeriodicField sample(std::size_t n, F&& f) {
        std::vector<double> s(n);
        for (std::size_t j = 0; j < n; ++j) s[j] = f(static_cast<double>(j) / static_cast<double>(n));
        return PeriodicField(std::move(s));
    }

    static PeriodicField from_spectrum(const Spectrum& s) {
        return PeriodicField(fft::backward({s.half().begin(), s.half().end()}, s.n()));
    }

    std::size_t size() const { return samples_.size(); }
    double x(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(size()); }
    double operator[](std::size_t j) const { return samples_[j]; }
    std::span<const double> samples() const { return samples_; }

    Spectrum spectrum() const { return Spectrum(size(), fft::forward(samples_)); }

    PeriodicField& operator+=(const PeriodicField& o) {
        check_same(o);
        for (std::size_t j = 0; j < size(); ++j) samples_[j] += o.samples_[j];
        return *this;
    }
    PeriodicField& operator-=(const PeriodicField& o) {
        check_same(o);
        for (std::size_t j = 0; j < size(); ++j) samples_[j] -= o.samples_[j];
        return *this;
    }
    PeriodicField& operator*=(double a) {
        for (auto& v : samples_) v *= a;
        return *this;
    }
    friend PeriodicField operator+(PeriodicField a, const PeriodicField& b) { return a += b; }
    friend PeriodicField operator-(PeriodicField a, const PeriodicField& b) { return a -= b; }
    friend PeriodicField operator*(double a, PeriodicField f) { return f *= a; }

    /// Pointwise product on the grid (aliases unless the caller filters).
    friend PeriodicField operator*(const PeriodicField& a, const PeriodicField& b) {
        a.check_same(b);
        std::vector<double> s(a.size());
        for (std::size_t j = 0; j < s.size(); ++j) s[j] = a.samples_[j] * b.samples_[j];
        return PeriodicField(std::move(s));
    }

private:
    void check_same(const PeriodicField& o) const {
        if (o.size() != size()) throw std::invalid_argument("field size mismatch");
    }

    std::vector<double> samples_;
};

inline double max_abs_difference(const PeriodicField& a, const PeriodicField& b) {
    if (a.size() != b.size()) throw std::invalid_argument("field size mismatch");
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

inline double max_abs(const PeriodicField& f) {
    double m = 0.0;
    for (double v : f.samples()) m = std::max(m, std::abs(v));
    return m;
}

/// Average of the samples: the trapezoid rule over one period.
inline double mean(const PeriodicField& f) {
    double s = 0.0;
    for (double v : f.samples()) s += v;
    return s / static_cast<double>(f.size());
}

// ---------------------------------------------------------------------------
// Spectral calculus

/// Multiplies c_k by (2 pi i k)^order. For odd orders the Nyquist mode has no
/// real-valued derivative on the grid and is dropped.
inline Spectrum derivative(Spectrum s, int order) {
    if (order < 1 || order > 3)
        throw std::invalid_argument("derivative order must be 1, 2 or 3, got " + std::to_string(order));
    const std::size_t h = s.nyquist();
    for (std::size_t k = 0; k <= h; ++k) {
        const cplx ik(0.0, two_pi * static_cast<double>(k));
        cplx factor = ik;
        for (int p = 1; p < order; ++p) factor *= ik;
        s[k] *= factor;
    }
    if (order % 2 == 1) s[h] = 0.0;
    s[0] = 0.0;
    return s;
}

inline PeriodicField derivative(const PeriodicField& f, int order) {
    return PeriodicField::from_spectrum(derivative(f.spectrum(), order));
}

/// sum_k |c_k|^2 over k = -N/2..N/2-1.
inline double parseval_sum(const Spectrum& s) {
    const std::size_t h = s.nyquist();
    double e = std::norm(s[0]) + std::norm(s[h]);
    for (std::size_t k = 1; k < h; ++k) e += 2.0 * std::norm(s[k]);
    return e;
}

/// sum_k (2 pi k)^(2 order) |c_k|^2, the squared L2 norm of the order-th derivative.
inline double derivative_norm_sq(const Spectrum& s, int order) {
    const std::size_t h = s.nyquist();
    auto weight = [order](std::size_t k) { return std::pow(two_pi * static_cast<double>(k), 2 * order); };
    double e = weight(h) * std::norm(s[h]);
    for (std::size_t k = 1; k < h; ++k) e += 2.0 * weight(k) * std::norm(s[k]);
    return e;
}

/// Integral of f_x^2 over the circle, by Parseval.
inline double h1_seminorm_sq(const Spectrum& s) { return derivative_norm_sq(s, 1); }
inline double h1_seminorm_sq(const PeriodicField& f) { return h1_seminorm_sq(f.spectrum()); }

/// Trigonometric interpolant of `s` sampled on a grid `factor` times finer.
inline PeriodicField refine(const Spectrum& s, std::size_t factor) {
    if (factor < 1 || !is_power_of_two(factor)) throw std::invalid_argument("refinement factor must be a power of two");
    const std::size_t n = s.n(), m = n * factor, h = s.nyquist();
    if (factor == 1) return PeriodicField::from_spectrum(s);
    std::vector<cplx> fine(m / 2 + 1);
    for (std::size_t k = 0; k < h; ++k) fine[k] = s[k];
    // The Nyquist mode is shared between +N/2 and -N/2 on the finer grid.
    fine[h] = 0.5 * s[h];
    return PeriodicField(fft::backward(std::move(fine), m));
}

inline PeriodicField refine(const PeriodicField& f, std::size_t factor) { return refine(f.spectrum(), factor); }

inline constexpr std::size_t extremum_refinement = 4;

struct Extremum {
    double value;
    double x;
};

inline Extremum min_of(const PeriodicField& f) {
    const auto s = f.samples();
    const auto it = std::min_element(s.begin(), s.end());
    return {*it, f.x(static_cast<std::size_t>(it - s.begin()))};
}

inline Extremum max_of(const PeriodicField& f) {
    const auto s = f.samples();
    const auto it = std::max_element(s.begin(), s.end());
    return {*it, f.x(static_cast<std::size_t>(it - s.begin()))};
}

/// Minimum over the 4x refined interpolant grid.
inline Extremum refined_min(const Spectrum& s) { return min_of(refine(s, extremum_refinement)); }
inline Extremum refined_max(const Spectrum& s) { return max_of(refine(s, extremum_refinement)); }
inline double refined_max_abs(const Spectrum& s) { return max_abs(refine(s, extremum_refinement)); }

/// Evaluates the order-th derivative (0 = value) of the trigonometric
/// interpolant at an arbitrary point. O(N) per call.
inline double evaluate(const Spectrum& s, double x, int order = 0) {
    const std::size_t h = s.nyquist();
    const cplx step = std::polar(1.0, two_pi * x);
    cplx phase = step;
    cplx acc = 0.0;
    for (std::size_t k = 1; k < h; ++k) {
        cplx term = s[k] * phase;
        for (int p = 0; p < order; ++p) term *= cplx(0.0, two_pi * static_cast<double>(k));
        acc += term;
        phase *= step;
    }
    double v = 2.0 * acc.real();
    if (order == 0) v += s[0].real();
    // c_{N/2} cos(pi N x) is the symmetric real interpolant of the Nyquist mode.
    const double w = std::numbers::pi * static_cast<double>(s.n());
    const double a = s[h].real();
    switch (order % 4) {
        case 0: v += a * std::pow(w, order) * std::cos(w * x); break;
        case 1: v -= a * std::pow(w, order) * std::sin(w * x); break;
        case 2: v -= a * std::pow(w, order) * std::cos(w * x); break;
        default: v += a * std::pow(w, order) * std::sin(w * x); break;
    }
    return v;
}

/// Minimum of the interpolant: the refined-grid minimum polished by Newton
/// steps on the derivative, kept within one refined spacing of the grid point.
inline Extremum interpolant_min(const Spectrum& s) {
    Extremum best = refined_min(s);
    const double h = 1.0 / static_cast<double>(extremum_refinement * s.n());
    double x = best.x;
    for (int it = 0; it < 8; ++it) {
        const double d2 = evaluate(s, x, 2);
        if (!(d2 > 0.0)) break;
        const double dx = -evaluate(s, x, 1) / d2;
        if (std::abs(x + dx - best.x) > h) break;
        x += dx;
        if (std::abs(dx) < 1e-15) break;
    }
    const double v = evaluate(s, x, 0);
    if (v < best.value) best = {v, x - std::floor(x)};
    return best;
}

// ---------------------------------------------------------------------------
// Dealiasing

/// Largest retained |k| under the 2/3 rule: 3K < N keeps quadratic products alias-free.
constexpr std::size_t dealias_cutoff(std::size_t n) { return (n - 1) / 3; }

inline Spectrum dealias(Spectrum s) {
    const std::size_t kc = dealias_cutoff(s.n());
    for (std::size_t k = kc + 1; k <= s.nyquist(); ++k) s[k] = 0.0;
    return s;
}

inline PeriodicField dealias(const PeriodicField& f) { return PeriodicField::from_spectrum(dealias(f.spectrum())); }

/// Fraction of the oscillatory energy held by the top third of the retained band.
inline double tail_fraction(const Spectrum& s) {
    const std::size_t kc = dealias_cutoff(s.n());
    const std::size_t tail_start = (2 * kc) / 3 + 1;
    double total = 0.0, tail = 0.0;
    for (std::size_t k = 1; k <= kc; ++k) {
        const double e = std::norm(s[k]);
        total += e;
        if (k >= tail_start) tail += e;
    }
    return total > 0.0 ? tail / total : 0.0;
}

// ---------------------------------------------------------------------------
// Sharp inequality for mean-zero fields: max f^2 <= (1/12) int f_x^2.

struct SharpInequality {
    double lhs;
    double rhs;
    bool holds;
};

inline constexpr double sharp_inequality_mean_tol = 1e-10;

inline SharpInequality check_sharp_inequality(const PeriodicField& f) {
    const double m = mean(f);
    if (std::abs(m) > sharp_inequality_mean_tol)
        throw std::invalid_argument("sharp inequality requires a mean-zero field, mean = " + std::to_string(m));
    const Spectrum s = f.spectrum();
    const double peak = refined_max_abs(s);
    const double lhs = peak * peak;
    const double rhs = h1_seminorm_sq(s) / 12.0;
    return {lhs, rhs, lhs <= rhs + 1e-12};
}

}  // namespace muhs

#endif  // MUHS_FIELD_HPP
