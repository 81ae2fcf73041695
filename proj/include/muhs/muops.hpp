#ifndef MUHS_MUOPS_HPP
#define MUHS_MUOPS_HPP

// The mu-Helmholtz operator A = mu - d^2/dx^2 on the unit circle.
//
// Production path: A is diagonal in Fourier space with symbol 1 at k = 0 and
// 4 pi^2 k^2 elsewhere. Oracle path: the explicit real-space formula for
// A^{-1} and d/dx A^{-1}, evaluated by nested cumulative quadrature that never
// touches a Fourier transform.

#include "muhs/field.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace muhs {

inline double helmholtz_symbol(std::size_t k) {
    if (k == 0) return 1.0;
    const double w = two_pi * static_cast<double>(k);
    return w * w;
}

inline Spectrum apply_A(Spectrum s) {
    for (std::size_t k = 1; k <= s.nyquist(); ++k) s[k] *= helmholtz_symbol(k);
    return s;
}

inline PeriodicField apply_A(const PeriodicField& w) {
    return PeriodicField::from_spectrum(apply_A(w.spectrum()));
}

inline Spectrum helmholtz_solve_spectral(Spectrum s) {
    for (std::size_t k = 1; k <= s.nyquist(); ++k) s[k] /= helmholtz_symbol(k);
    return s;
}

inline PeriodicField helmholtz_solve_spectral(const PeriodicField& w) {
    return PeriodicField::from_spectrum(helmholtz_solve_spectral(w.spectrum()));
}

/// d/dx A^{-1}: symbol i / (2 pi k) for k != 0; the mean is annihilated.
inline Spectrum dx_Ainv(Spectrum s) {
    s[0] = 0.0;
    for (std::size_t k = 1; k < s.nyquist(); ++k) s[k] *= cplx(0.0, 1.0 / (two_pi * static_cast<double>(k)));
    s[s.nyquist()] = 0.0;
    return s;
}

inline PeriodicField dx_Ainv(const PeriodicField& w) { return PeriodicField::from_spectrum(dx_Ainv(w.spectrum())); }

/// max-norm of A^{-1}(w_xx) - (mu(w) - w).
inline double helmholtz_identity_residual(const PeriodicField& w) {
    const Spectrum s = w.spectrum();
    const PeriodicField lhs = PeriodicField::from_spectrum(helmholtz_solve_spectral(derivative(s, 2)));
    const double m = mean(w);
    double r = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) r = std::max(r, std::abs(lhs[j] - (m - w[j])));
    return r;
}

// ---------------------------------------------------------------------------
// Quadrature oracle

namespace quadrature {

/// Interval rule for integrating over [x_j, x_{j+1}] from samples around it.
enum class Rule {
    trapezoid,  ///< 2 points, O(h^2)
    lagrange8,  ///< 8-point interpolating stencil, O(h^8)
};

struct Stencil {
    int left;                     ///< first node is x_{j - left}
    std::vector<double> weights;  ///< weights for x_{j-left} .. x_{j-left+size-1}
};

/// Weights int_0^1 L_i(z) dz of the Lagrange basis on integer nodes.
inline std::vector<double> interval_weights(int first, int count) {
    std::vector<double> w(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        std::vector<double> poly{1.0};  // ascending coefficients
        const double zi = first + i;
        for (int m = 0; m < count; ++m) {
            if (m == i) continue;
            const double zm = first + m;
            std::vector<double> next(poly.size() + 1, 0.0);
            for (std::size_t d = 0; d < poly.size(); ++d) {
                next[d + 1] += poly[d] / (zi - zm);
                next[d] -= poly[d] * zm / (zi - zm);
            }
            poly = std::move(next);
        }
        double integral = 0.0;
        for (std::size_t d = 0; d < poly.size(); ++d) integral += poly[d] / static_cast<double>(d + 1);
        w[static_cast<std::size_t>(i)] = integral;
    }
    return w;
}

inline Stencil stencil(Rule rule) {
    if (rule == Rule::trapezoid) return {0, {0.5, 0.5}};
    return {3, interval_weights(-3, 8)};
}

/// Samples g_j for j in [lo, lo + size).
struct Extended {
    long lo = 0;
    std::vector<double> v;

    long hi() const { return lo + static_cast<long>(v.size()) - 1; }
    double at(long j) const { return v[static_cast<std::size_t>(j - lo)]; }
};

/// Periodic extension of a field with `margin` extra samples on each side.
inline Extended extend_periodic(const PeriodicField& f, long margin) {
    const long n = static_cast<long>(f.size());
    Extended e{-margin, std::vector<double>(static_cast<std::size_t>(n + 1 + 2 * margin))};
    for (long j = -margin; j <= n + margin; ++j) e.v[static_cast<std::size_t>(j + margin)] = f[static_cast<std::size_t>(((j % n) + n) % n)];
    return e;
}

/// G_j = int_0^{x_j} g, on the range the stencil can reach from `g`.
inline Extended cumulative(const Extended& g, double h, const Stencil& st) {
    const long width = static_cast<long>(st.weights.size());
    const long lo = g.lo + st.left;
    const long hi = g.hi() - (width - 1 - st.left) + 1;
    Extended out{lo, std::vector<double>(static_cast<std::size_t>(hi - lo + 1), 0.0)};
    auto interval = [&](long j) {
        double s = 0.0;
        for (long i = 0; i < width; ++i) s += st.weights[static_cast<std::size_t>(i)] * g.at(j - st.left + i);
        return h * s;
    };
    auto slot = [&](long j) -> double& { return out.v[static_cast<std::size_t>(j - lo)]; };
    slot(0) = 0.0;
    for (long j = 0; j < hi; ++j) slot(j + 1) = slot(j) + interval(j);
    for (long j = -1; j >= lo; --j) slot(j) = slot(j + 1) - interval(j);
    return out;
}

struct NestedIntegrals {
    Extended first, second, third;
};

inline NestedIntegrals nested(const PeriodicField& w, Rule rule) {
    const Stencil st = stencil(rule);
    const long margin = 3 * static_cast<long>(st.weights.size());
    const double h = 1.0 / static_cast<double>(w.size());
    NestedIntegrals r;
    r.first = cumulative(extend_periodic(w, margin), h, st);
    r.second = cumulative(r.first, h, st);
    r.third = cumulative(r.second, h, st);
    return r;
}

}  // namespace quadrature

/// A^{-1} w from the explicit formula
///   v(x) = (x^2/2 - x/2 + 13/12) mu(w) + (x - 1/2) I2(1) - I2(x) + I3(1),
/// where I1, I2, I3 are the single, double and triple integrals of w from 0.
inline PeriodicField helmholtz_solve_quadrature(const PeriodicField& w,
                                                quadrature::Rule rule = quadrature::Rule::lagrange8) {
    const auto I = quadrature::nested(w, rule);
    const long n = static_cast<long>(w.size());
    const double mu = mean(w);
    const double i2_end = I.second.at(n), i3_end = I.third.at(n);
    std::vector<double> v(w.size());
    for (long j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(n);
        v[static_cast<std::size_t>(j)] =
            (0.5 * x * x - 0.5 * x + 13.0 / 12.0) * mu + (x - 0.5) * i2_end - I.second.at(j) + i3_end;
    }
    return PeriodicField(std::move(v));
}

/// d/dx A^{-1} w = A^{-1} w_x from its explicit formula
///   (x - 1/2) mu(w) - I1(x) + int_0^1 I1.
inline PeriodicField dx_Ainv_quadrature(const PeriodicField& w,
                                        quadrature::Rule rule = quadrature::Rule::lagrange8) {
    const auto I = quadrature::nested(w, rule);
    const long n = static_cast<long>(w.size());
    const double mu = mean(w);
    const double i2_end = I.second.at(n);
    std::vector<double> v(w.size());
    for (long j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(n);
        v[static_cast<std::size_t>(j)] = (x - 0.5) * mu - I.first.at(j) + i2_end;
    }
    return PeriodicField(std::move(v));
}

}  // namespace muhs

#endif  // MUHS_MUOPS_HPP
